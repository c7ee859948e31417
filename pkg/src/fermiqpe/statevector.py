"""Dense state-vector simulation of native gate sequences.

Qubit 1 is the most significant bit of the basis index.  Amplitude arrays
have shape ``(2**n,)`` or ``(2**n, B)``; the trailing axis is a batch of
independent states that all receive the same gates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from fermiqpe.compiler import (
    CPhase,
    CRotZ,
    GateOp,
    GateSequence,
    GlobalPhase,
    H,
    Rot,
    ZZ,
)
from fermiqpe.errors import DimensionError, ResourceError

MAX_QUBITS = 30
FUSE_LIMIT = 20

_SQ2 = 1 / np.sqrt(2)


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """``exp(-i angle sigma_axis)``."""
    c, s = np.cos(angle), np.sin(angle)
    if axis == "x":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if axis == "y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "z":
        return np.array([[np.exp(-1j * angle), 0], [0, np.exp(1j * angle)]])
    raise ValueError(f"unknown axis {axis!r}")


HADAMARD = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)


@lru_cache(maxsize=64)
def _z_signs(n: int, q: int) -> np.ndarray:
    """Eigenvalue of ``Z_q`` on every basis index: +1 for bit 0, -1 for bit 1."""
    idx = np.arange(1 << n)
    return 1 - 2 * ((idx >> (n - q)) & 1)


@dataclass
class StateVector:
    """Amplitudes on ``n_qubits`` qubits, optionally batched."""

    amplitudes: np.ndarray
    n_qubits: int

    def __post_init__(self) -> None:
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape[0] != 1 << self.n_qubits or a.ndim not in (1, 2):
            raise DimensionError(f"amplitude shape {a.shape} does not fit {self.n_qubits} qubits")
        self.amplitudes = a

    @property
    def batched(self) -> bool:
        return self.amplitudes.ndim == 2

    def norm(self) -> np.ndarray | float:
        return np.linalg.norm(self.amplitudes, axis=0)

    def copy(self) -> StateVector:
        return StateVector(self.amplitudes.copy(), self.n_qubits)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _check_size(n: int, batch: int = 1) -> None:
    if n > MAX_QUBITS:
        raise ResourceError(f"{n} qubits exceeds the simulator limit of {MAX_QUBITS}")
    need = 16 * (1 << n) * batch
    if need > 8 * 2**30:
        raise ResourceError(f"state needs {need / 2**30:.1f} GiB")


def new_basis_state(n_qubits: int, bits: str | int = 0) -> StateVector:
    """Computational basis state; ``bits[0]`` is qubit 1 (``"0"`` = occupied level)."""
    _check_size(n_qubits)
    if isinstance(bits, str):
        if len(bits) != n_qubits or set(bits) - {"0", "1"}:
            raise DimensionError(f"bitstring {bits!r} does not describe {n_qubits} qubits")
        index = int(bits, 2) if bits else 0
    else:
        index = int(bits)
    if not 0 <= index < 1 << n_qubits:
        raise DimensionError(f"basis index {index} outside register")
    a = np.zeros(1 << n_qubits, dtype=complex)
    a[index] = 1
    return StateVector(a, n_qubits)


def random_amplitudes(rng: np.random.Generator, dim: int, batch: int | None = None) -> np.ndarray:
    """Gaussian real and imaginary parts, normalized per column."""
    shape = (dim,) if batch is None else (dim, batch)
    a = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return a / np.linalg.norm(a, axis=0)


def new_random_state(n_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state."""
    _check_size(n_qubits)
    return StateVector(random_amplitudes(rng, 1 << n_qubits), n_qubits)


@dataclass(frozen=True)
class RngStream:
    """Philox stream keyed by ``(seed, stream)``.

    ``stream`` is a tuple of integers appended to the seed's spawn key, so
    ``RngStream(seed, (0, k))`` is shot ``k`` and ``RngStream(seed, (1,))`` is
    the fixed input state.  Identical keys give identical draws.
    """

    seed: int
    stream: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=tuple(self.stream))
        return np.random.Generator(np.random.Philox(ss))


def shot_rng(seed: int, shot: int) -> np.random.Generator:
    """Independent stream for shot ``shot``; identical for any run length."""
    return RngStream(seed, (0, shot)).generator()


def input_rng(seed: int) -> np.random.Generator:
    """Stream for the fixed input state shared by all shots."""
    return RngStream(seed, (1,)).generator()


# --------------------------------------------------------------------------
# kernels


def _apply_1q(a: np.ndarray, n: int, q: int, m: np.ndarray) -> None:
    v = a.reshape(1 << (q - 1), 2, -1)
    v[...] = np.matmul(m, v)


def _apply_diag(a: np.ndarray, phases: np.ndarray) -> None:
    if a.ndim == 2:
        a *= phases[:, None]
    else:
        a *= phases


def gate_phases(op: GateOp, n: int) -> np.ndarray | complex:
    """Diagonal of a diagonal gate as a vector (or scalar for global phases)."""
    if isinstance(op, Rot) and op.axis == "z":
        return np.exp(-1j * op.angle * _z_signs(n, op.qubit))
    if isinstance(op, ZZ):
        return np.exp(-1j * op.angle * _z_signs(n, op.qubit_a) * _z_signs(n, op.qubit_b))
    if isinstance(op, CRotZ):
        on = (1 - _z_signs(n, op.control)) // 2
        return np.exp(-1j * op.angle * on * _z_signs(n, op.target))
    if isinstance(op, CPhase):
        on = (1 - _z_signs(n, op.control)) // 2
        return np.exp(-1j * op.angle * on)
    if isinstance(op, GlobalPhase):
        return complex(np.exp(-1j * op.angle))
    raise TypeError(f"{op} is not diagonal")


def _check_op(op: GateOp, n: int) -> None:
    for q in op.qubits:
        if not 1 <= q <= n:
            raise DimensionError(f"{op} touches qubit {q} outside 1..{n}")


def apply_gate(state: StateVector, op: GateOp) -> StateVector:
    """Apply ``op`` in place and return ``state``."""
    n, a = state.n_qubits, state.amplitudes
    _check_op(op, n)
    if isinstance(op, Rot) and op.axis != "z":
        _apply_1q(a, n, op.qubit, rotation_matrix(op.axis, op.angle))
    elif isinstance(op, H):
        _apply_1q(a, n, op.qubit, HADAMARD)
    elif isinstance(op, Rot) and op.axis == "z":
        _apply_1q(a, n, op.qubit, rotation_matrix("z", op.angle))
    elif isinstance(op, GlobalPhase):
        a *= np.exp(-1j * op.angle)
    else:
        _apply_diag(a, gate_phases(op, n))
    return state


def apply_sequence(state: StateVector, seq: GateSequence | list[GateOp]) -> StateVector:
    ops = seq.ops if isinstance(seq, GateSequence) else seq
    for op in ops:
        apply_gate(state, op)
    return state


class CompiledPlan:
    """Gate program with runs of diagonal gates fused into phase vectors.

    Fusion needs a ``2**n`` vector per run, so it is used only up to
    ``FUSE_LIMIT`` qubits; above that the plan replays gates one by one.
    """

    def __init__(self, seq: GateSequence, n_qubits: int | None = None):
        n = seq.n_qubits if n_qubits is None else n_qubits
        for op in seq.ops:
            _check_op(op, n)
        self.n_qubits = n
        self.steps: list[GateOp | np.ndarray] = []
        if n > FUSE_LIMIT:
            self.steps = list(seq.ops)
            return
        run: np.ndarray | None = None
        for op in seq.ops:
            if op.diagonal:
                ph = gate_phases(op, n)
                run = (np.ones(1 << n, dtype=complex) if run is None else run) * ph
            else:
                if run is not None:
                    self.steps.append(run)
                    run = None
                self.steps.append(op)
        if run is not None:
            self.steps.append(run)

    def apply(self, state: StateVector) -> StateVector:
        if state.n_qubits != self.n_qubits:
            raise DimensionError("plan and state registers differ")
        for step in self.steps:
            if isinstance(step, np.ndarray):
                _apply_diag(state.amplitudes, step)
            else:
                apply_gate(state, step)
        return state


# --------------------------------------------------------------------------
# inverse QFT


def iqft_gates(qubits: list[int]) -> list[GateOp]:
    """Gate network for the inverse QFT on ``qubits`` (most significant first).

    Built from Hadamards and controlled phases, without the final swaps: the
    register ``x`` bits read in order give the phase digits directly when the
    input was prepared with bit ``j`` controlling ``2**(j-1)`` applications.
    The controlled ``R_k^+`` phase ``diag(1,1,1,exp(-2 pi i / 2**k))`` is
    expressed as ``CRotZ(c, t, a/2)`` followed by ``CPhase(c, -a/2)``.
    """
    w = len(qubits)
    ops: list[GateOp] = []
    # output digit j depends on input bits 1..j, so work from the last qubit up
    for j in reversed(range(w)):
        target = qubits[j]
        ops.append(H(target))
        for m in range(j):
            control = qubits[m]
            alpha = np.pi / 2 ** (j - m)
            # phase exp(-i alpha) on |11> of (control, target)
            ops.append(CRotZ(control, target, -alpha / 2))
            ops.append(CPhase(control, alpha / 2))
    return ops


def bit_reverse_indices(w: int) -> np.ndarray:
    idx = np.arange(1 << w)
    rev = np.zeros_like(idx)
    for b in range(w):
        rev |= ((idx >> b) & 1) << (w - 1 - b)
    return rev


def inverse_qft_direct(amps: np.ndarray, w: int, axis: int = 0) -> np.ndarray:
    """Inverse-QFT network applied along ``axis`` via bit reversal and an FFT."""
    a = np.take(amps, bit_reverse_indices(w), axis=axis)
    return np.fft.fft(a, axis=axis) / np.sqrt(1 << w)


def sample_counts(probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws: outcome index for each uniform."""
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    return np.minimum(np.searchsorted(cdf, uniforms, side="right"), len(probs) - 1)


def _register_view(a: np.ndarray, n: int, work: range) -> np.ndarray:
    lo, hi = work.start, work.stop - 1
    if not (1 <= lo <= hi <= n) or work.step != 1:
        raise DimensionError(f"work register {work} is not a contiguous range in 1..{n}")
    return a.reshape(1 << (lo - 1), 1 << (hi - lo + 1), 1 << (n - hi), -1)


def inverse_qft(state: StateVector, work: range, method: str = "direct") -> StateVector:
    """Inverse QFT (swap-free network) on the contiguous qubits ``work``.

    ``method='gates'`` replays :func:`iqft_gates`; ``'direct'`` uses an FFT.
    """
    n = state.n_qubits
    view = _register_view(state.amplitudes, n, work)
    if method == "gates":
        return apply_sequence(state, iqft_gates(list(work)))
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    view[...] = inverse_qft_direct(view, len(work), axis=1)
    return state


def work_marginal(state: StateVector, work: range) -> np.ndarray:
    """Outcome probabilities of the work register, summed over other qubits."""
    view = _register_view(np.abs(state.amplitudes) ** 2, state.n_qubits, work)
    return view.sum(axis=(0, 2, 3))


def sample_work_register(
    state: StateVector, work: range, rng: np.random.Generator, shots: int
) -> np.ndarray:
    """``shots`` i.i.d. outcomes of measuring ``work``; the state is left untouched."""
    probs = work_marginal(state, work)
    return sample_counts(probs, rng.random(shots))


# --------------------------------------------------------------------------
# operator form of a gate program


def _sparse_gate(op: GateOp, n: int) -> sp.csr_matrix:
    if op.diagonal:
        ph = gate_phases(op, n)
        if np.isscalar(ph):
            ph = np.full(1 << n, ph)
        return sp.diags(ph, format="csr")
    m = HADAMARD if isinstance(op, H) else rotation_matrix(op.axis, op.angle)
    q = op.qubit
    return sp.kron(
        sp.kron(sp.identity(1 << (q - 1), format="csr"), sp.csr_matrix(m)),
        sp.identity(1 << (n - q), format="csr"),
        format="csr",
    )


def sequence_operator(seq: GateSequence, n_qubits: int | None = None, prune: float = 1e-15) -> sp.csr_matrix:
    """Sparse matrix of a gate program, accumulated gate by gate.

    Entries below ``prune`` in magnitude are dropped after each gate so that
    conjugation ladders, whose intermediate fill-in cancels, keep the
    operator as sparse as the final product.
    """
    n = seq.n_qubits if n_qubits is None else n_qubits
    _check_size(n)
    u = sp.identity(1 << n, dtype=complex, format="csr")
    for op in seq.ops:
        _check_op(op, n)
        u = _sparse_gate(op, n) @ u
        u.data[np.abs(u.data) < prune] = 0
        u.eliminate_zeros()
    return u


class BlockOperator:
    """Unitary stored as dense diagonal blocks over decoupled index sets.

    Blocks of equal size are stacked so that one batched ``matmul`` applies
    them all.
    """

    def __init__(self, u: sp.spmatrix | np.ndarray):
        u = sp.csr_matrix(u)
        self.dim = u.shape[0]
        n_comp, labels = connected_components(abs(u) + abs(u).T, directed=False)
        order = np.argsort(labels, kind="stable")
        sizes = np.bincount(labels, minlength=n_comp)
        starts = np.concatenate([[0], np.cumsum(sizes)])
        groups: dict[int, list[np.ndarray]] = {}
        for c in range(n_comp):
            groups.setdefault(int(sizes[c]), []).append(order[starts[c] : starts[c + 1]])
        self.groups: list[tuple[np.ndarray, np.ndarray]] = []
        dense = u.tocsc()
        for size, members in sorted(groups.items()):
            idx = np.stack(members)
            blocks = np.stack([dense[i][:, i].toarray() for i in idx])
            self.groups.append((idx, blocks))

    @property
    def max_block(self) -> int:
        return max(idx.shape[1] for idx, _ in self.groups)

    def power(self, k: int) -> BlockOperator:
        """``k``-fold product, by repeated multiplication."""
        out = object.__new__(BlockOperator)
        out.dim = self.dim
        out.groups = []
        for idx, blocks in self.groups:
            acc = blocks.copy()
            for _ in range(k - 1):
                acc = blocks @ acc
            out.groups.append((idx, acc))
        return out

    def apply(self, amps: np.ndarray) -> np.ndarray:
        """``U @ amps`` for amplitudes of shape ``(dim,)`` or ``(dim, B)``."""
        out = np.empty_like(amps)
        for idx, blocks in self.groups:
            out[idx] = blocks @ amps[idx]
        return out
