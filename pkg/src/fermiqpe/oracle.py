"""Ground-truth matrices and spectra.

Everything here works on dense matrices in the same basis as the simulator:
basis index ``sum_q b_q 2**(n-q)`` with bit ``b_q = 0`` meaning level ``q`` is
occupied.  None of it reuses the simulator kernels, so agreement between the
two is a genuine cross-check.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
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
    compile_trotter_step,
)
from fermiqpe.errors import ConsistencyError, DimensionError, ResourceError
from fermiqpe.fermion_models import CREATE, FermionHamiltonian, LadderTerm
from fermiqpe.pauli import PauliHamiltonian, jw_hamiltonian

FOCK_MAX_LEVELS = 14
PAULI_MAX_QUBITS = 12
GATE_MAX_QUBITS = 8
EIGEN_MAX_DIM = 4096
CLUSTER_TOL = 1e-6

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


# --------------------------------------------------------------------------
# Fock basis


def _apply_ladder(kind: str, level: int, n: int, idx: np.ndarray, amp: np.ndarray):
    pos = n - level
    bit = (idx >> pos) & 1
    # a+ needs an empty level (bit 1), a needs an occupied one (bit 0)
    allowed = bit == (1 if kind == CREATE else 0)
    sign = 1 - 2 * (np.bitwise_count(idx >> (pos + 1)).astype(np.int64) & 1)
    return idx ^ (1 << pos), np.where(allowed, amp * sign, 0)


def ladder_matrix(kind: str, level: int, n: int) -> np.ndarray:
    """Matrix of a single ``a+_level`` or ``a_level`` on ``n`` levels."""
    return term_matrix(LadderTerm(((kind, level),), 1.0), n)


def _term_entries(term: LadderTerm, n: int):
    idx = np.arange(1 << n)
    amp = np.full(1 << n, complex(term.coefficient))
    out = idx
    for kind, level in reversed(term.factors):
        out, amp = _apply_ladder(kind, level, n, out, amp)
    keep = amp != 0
    return out[keep], idx[keep], amp[keep]


def term_matrix(term: LadderTerm, n: int) -> np.ndarray:
    """Matrix of one ladder product; the rightmost factor acts first."""
    m = np.zeros((1 << n, 1 << n), dtype=complex)
    rows, cols, vals = _term_entries(term, n)
    np.add.at(m, (rows, cols), vals)
    return m


def fock_matrix(h: FermionHamiltonian) -> np.ndarray:
    """Real symmetric Fock-basis matrix of ``h``."""
    n = h.n_levels
    if n > FOCK_MAX_LEVELS:
        raise ResourceError(f"{n} levels exceeds the Fock-matrix cap of {FOCK_MAX_LEVELS}")
    m = np.zeros((1 << n, 1 << n))
    m[np.diag_indices(1 << n)] = h.e0
    for term in h.ladder_terms():
        rows, cols, vals = _term_entries(term, n)
        np.add.at(m, (rows, cols), vals.real)
    return m


# --------------------------------------------------------------------------
# Pauli strings and gates


def pauli_matrix(h: PauliHamiltonian) -> np.ndarray:
    """Dense matrix of a Pauli Hamiltonian, qubit 1 as the high bit.

    Each string acts as ``P|b> = i**nY (-1)**popcount(b & zmask) |b ^ xmask>``.
    """
    n = h.n_qubits
    if n > PAULI_MAX_QUBITS:
        raise ResourceError(f"{n} qubits exceeds the Pauli-matrix cap of {PAULI_MAX_QUBITS}")
    dim = 1 << n
    idx = np.arange(dim)
    m = np.zeros((dim, dim), dtype=complex)
    m[idx, idx] = h.constant
    for s in h.strings:
        xmask = zmask = ny = 0
        for q, p in s.letters:
            bit = 1 << (n - q)
            if p in "XY":
                xmask |= bit
            if p in "YZ":
                zmask |= bit
            ny += p == "Y"
        phase = s.coeff * 1j**ny * (1 - 2 * (np.bitwise_count(idx & zmask).astype(np.int64) & 1))
        m[idx ^ xmask, idx] += phase
    return m


def kron_pauli_matrix(h: PauliHamiltonian) -> np.ndarray:
    """Same as :func:`pauli_matrix` via explicit Kronecker products (slow, for tests)."""
    m = h.constant * np.eye(1 << h.n_qubits, dtype=complex)
    for s in h.strings:
        letters = s.letter_map
        factors = [_PAULI[letters.get(q, "I")] for q in range(1, h.n_qubits + 1)]
        term = factors[0]
        for f in factors[1:]:
            term = np.kron(term, f)
        m += s.coeff * term
    return m


def _exp_pauli(angle: float, p: np.ndarray) -> np.ndarray:
    # exp(-i a P) = cos(a) I - i sin(a) P for any P with P^2 = I
    return math.cos(angle) * np.eye(len(p)) - 1j * math.sin(angle) * p


def local_gate_matrix(op: GateOp) -> tuple[np.ndarray, tuple[int, ...]]:
    """Small unitary of ``op`` and the qubits it acts on (in matrix order)."""
    if isinstance(op, Rot):
        return _exp_pauli(op.angle, _PAULI[op.axis.upper()]), (op.qubit,)
    if isinstance(op, ZZ):
        return _exp_pauli(op.angle, np.kron(_PAULI["Z"], _PAULI["Z"])), (op.qubit_a, op.qubit_b)
    if isinstance(op, H):
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2), (op.qubit,)
    if isinstance(op, CRotZ):
        m = np.zeros((4, 4), dtype=complex)
        m[:2, :2] = np.eye(2)
        m[2:, 2:] = _exp_pauli(op.angle, _PAULI["Z"])
        return m, (op.control, op.target)
    if isinstance(op, CPhase):
        return np.diag([1, np.exp(-1j * op.angle)]), (op.control,)
    if isinstance(op, GlobalPhase):
        return np.array([[np.exp(-1j * op.angle)]]), ()
    raise TypeError(f"not a gate: {op!r}")


def gate_matrix(
    seq: GateSequence | Iterable[GateOp], n_qubits: int | None = None, max_qubits: int = GATE_MAX_QUBITS
) -> np.ndarray:
    """Unitary of a gate sequence, built with tensor contractions."""
    if isinstance(seq, GateSequence):
        ops, n = seq.ops, seq.n_qubits if n_qubits is None else n_qubits
    else:
        ops, n = tuple(seq), n_qubits
    if n is None:
        raise ValueError("n_qubits is required for a bare op list")
    if n > max_qubits:
        raise ResourceError(f"{n} qubits exceeds the gate-matrix cap of {max_qubits}")
    dim = 1 << n
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for op in ops:
        local, qubits = local_gate_matrix(op)
        if not qubits:
            u = u * local[0, 0]
            continue
        if any(not 1 <= q <= n for q in qubits):
            raise DimensionError(f"{op} does not fit {n} qubits")
        k = len(qubits)
        axes = [q - 1 for q in qubits]
        t = local.reshape((2,) * (2 * k))
        u = np.tensordot(t, u, axes=(list(range(k, 2 * k)), axes))
        u = np.moveaxis(u, list(range(k)), axes)
    return u.reshape(dim, dim)


# --------------------------------------------------------------------------
# eigensolver


@dataclass(frozen=True)
class EigenSolution:
    """Sorted spectrum plus clustered levels."""

    eigenvalues: np.ndarray
    levels: np.ndarray
    degeneracies: np.ndarray
    cluster_tol: float
    eigenvectors: np.ndarray | None = None

    def __post_init__(self) -> None:
        if int(self.degeneracies.sum()) != len(self.eigenvalues):
            raise ConsistencyError("degeneracies do not add up to the dimension")

    def to_csv(self, comments: Sequence[str] = ()) -> str:
        buf = io.StringIO()
        for line in comments:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["eigenvalue", "degeneracy"])
        for e, d in zip(self.levels, self.degeneracies):
            writer.writerow([format(float(e), ".12g"), int(d)])
        return buf.getvalue()


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Rounds of disjoint index pairs covering every pair once (circle method)."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p = np.array(players[: m // 2])
        q = np.array(players[m // 2 :][::-1])
        keep = (p < n) & (q < n)
        rounds.append((p[keep], q[keep]))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a real symmetric matrix by parallel-ordered cyclic Jacobi.

    Each round annihilates ``n/2`` disjoint off-diagonal entries at once, so
    a sweep is ``n-1`` vectorized rounds.  Returns unsorted eigenvalues and
    the orthogonal matrix of eigenvectors (columns).
    """
    a = np.array(a, dtype=float)
    n = len(a)
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    scale = np.linalg.norm(a)
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(a.diagonal()))
        if off <= tol * max(scale, 1e-300):
            break
        for p, q in rounds:
            apq = a[p, q]
            active = np.abs(apq) > 1e-300
            # smallest rotation angle (|theta| <= pi/4); larger ones merely swap rows
            tau = (a[q, q] - a[p, p]) / (2 * np.where(active, apq, 1.0))
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1 + tau * tau))
            t = np.where(active, t, 0.0)
            c = 1 / np.sqrt(1 + t * t)
            s = t * c
            rp, rq = a[p, :], a[q, :]
            a[p, :], a[q, :] = c[:, None] * rp - s[:, None] * rq, s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, p], a[:, q]
            a[:, p], a[:, q] = cp * c - cq * s, cp * s + cq * c
            vp, vq = v[:, p], v[:, q]
            v[:, p], v[:, q] = vp * c - vq * s, vp * s + vq * c
    else:
        raise ConsistencyError("Jacobi iteration did not converge")
    return a.diagonal().copy(), v


def _cluster(values: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    if len(values) == 0:
        return values, np.zeros(0, dtype=int)
    breaks = np.flatnonzero(np.diff(values) > tol) + 1
    groups = np.split(values, breaks)
    return np.array([g.mean() for g in groups]), np.array([len(g) for g in groups])


def _hermitian_blocks(m: np.ndarray) -> list[np.ndarray]:
    """Index sets of the connected components of the nonzero pattern."""
    n_comp, labels = connected_components(csr_matrix(np.abs(m) > 0), directed=False)
    return [np.flatnonzero(labels == c) for c in range(n_comp)]


def _solve_block(b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if not np.iscomplexobj(b) or not np.any(b.imag):
        return jacobi_eigh(b.real)
    # real embedding [[Re, -Im], [Im, Re]] doubles every eigenvalue
    k = len(b)
    emb = np.block([[b.real, -b.imag], [b.imag, b.real]])
    w, v = jacobi_eigh(emb)
    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    z = v[:k] + 1j * v[k:]
    vals, vecs = [], []
    for lo, hi in _runs(w, 1e-9 * max(1.0, np.abs(w).max())):
        # each level of multiplicity d appears 2d times; keep an orthonormal basis of rank d
        u, sv, _ = np.linalg.svd(z[:, lo:hi], full_matrices=False)
        d = (hi - lo) // 2
        vals += [w[lo:hi].mean()] * d
        vecs.append(u[:, :d])
    return np.array(vals), np.hstack(vecs)


def _runs(w: np.ndarray, tol: float) -> list[tuple[int, int]]:
    breaks = [0] + list(np.flatnonzero(np.diff(w) > tol) + 1) + [len(w)]
    return list(zip(breaks[:-1], breaks[1:]))


def eigensolve(
    m: np.ndarray,
    cluster_tol: float = CLUSTER_TOL,
    vectors: bool = False,
    max_dim: int = EIGEN_MAX_DIM,
) -> EigenSolution:
    """Full spectrum of a Hermitian matrix.

    The matrix is first split into its decoupled blocks (connected components
    of the nonzero pattern), which keeps the structured model Hamiltonians
    cheap; each block goes through :func:`jacobi_eigh`, via the real
    embedding when it is complex.

    Raises:
        ValueError: if ``m`` is not Hermitian.
        ResourceError: if the dimension exceeds ``max_dim``.
    """
    m = np.asarray(m)
    dim = len(m)
    if m.shape != (dim, dim):
        raise ValueError("matrix must be square")
    if dim > max_dim:
        raise ResourceError(f"dimension {dim} exceeds the eigensolver cap of {max_dim}")
    norm = np.linalg.norm(m)
    if np.abs(m - m.conj().T).max(initial=0.0) > 1e-12 * max(norm, 1.0):
        raise ValueError("matrix is not Hermitian")
    values = np.zeros(dim)
    vecs = np.zeros((dim, dim), dtype=complex if np.iscomplexobj(m) else float)
    col = 0
    for block in _hermitian_blocks(m):
        w, v = _solve_block(m[np.ix_(block, block)])
        values[col : col + len(w)] = w
        vecs[block, col : col + len(w)] = v
        col += len(w)
    resid = np.linalg.norm(m @ vecs - vecs * values, axis=0)
    if resid.max(initial=0.0) > 1e-8 * max(norm, 1e-300):
        raise ConsistencyError(f"eigenpair residual {resid.max():.3g} too large")
    order = np.argsort(values, kind="stable")
    values, vecs = values[order], vecs[:, order]
    levels, degs = _cluster(values, cluster_tol)
    return EigenSolution(values, levels, degs, cluster_tol, vecs if vectors else None)


def spectrum(h: FermionHamiltonian, cluster_tol: float = CLUSTER_TOL) -> EigenSolution:
    return eigensolve(fock_matrix(h), cluster_tol)


# --------------------------------------------------------------------------
# analytic phase-estimation distribution


def dirichlet_weights(phases: np.ndarray, w: int) -> np.ndarray:
    """``P[k, m] = |2**-w sum_t exp(2 pi i t (phi_k - m / 2**w))|**2``."""
    n_bins = 1 << w
    delta = np.asarray(phases)[:, None] - np.arange(n_bins)[None, :] / n_bins
    delta = delta - np.round(delta)
    num = np.sin(np.pi * n_bins * delta)
    den = n_bins * np.sin(np.pi * delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.abs(delta) < 1e-15, 1.0, (num / np.where(den == 0, 1, den)) ** 2)
    return out


def step_unitary(h: FermionHamiltonian, cfg, max_qubits: int = PAULI_MAX_QUBITS) -> np.ndarray:
    """Matrix of ``U = (Trotter step for dt / I) ** I`` of ``h - e_max``."""
    ph = jw_hamiltonian(h).shifted(-cfg.e_max)
    step = compile_trotter_step(ph, cfg.dt / cfg.intervals, cfg.trotter_order)
    u1 = gate_matrix(step, ph.n_qubits, max_qubits=max_qubits)
    return np.linalg.matrix_power(u1, cfg.intervals)


def pe_exact_distribution(h: FermionHamiltonian, cfg, input_state: np.ndarray | None = None) -> np.ndarray:
    """Outcome probabilities of ideal phase estimation over ``2**cfg.w`` bins.

    ``cfg`` needs resolved ``w, dt, e_max, intervals, trotter_order`` and an
    ``exact_evolution`` flag.  ``input_state=None`` averages over the
    maximally mixed input, which is the expected histogram for a fresh random
    state per shot.
    """
    n = h.n_levels
    if n > PAULI_MAX_QUBITS:
        raise ResourceError(f"{n} simulation qubits exceeds the cap of {PAULI_MAX_QUBITS}")
    if getattr(cfg, "exact_evolution", False):
        sol = eigensolve(fock_matrix(h), vectors=True)
        vecs = sol.eigenvectors
        phases = -(sol.eigenvalues - cfg.e_max) * cfg.dt / (2 * np.pi)
    else:
        u = step_unitary(h, cfg)
        t, vecs = scipy.linalg.schur(u, output="complex")
        phases = np.angle(np.diag(t)) / (2 * np.pi)
    phases = np.mod(phases, 1.0)
    if input_state is None:
        weights = np.full(len(phases), 1 / len(phases))
    else:
        psi = np.asarray(input_state, dtype=complex)
        weights = np.abs(vecs.conj().T @ psi) ** 2
        weights /= weights.sum()
    return weights @ dirichlet_weights(phases, cfg.w)


def hubbard_atomic_degeneracies(n_sites: int) -> dict[int, int]:
    """Degeneracy of ``E = n + d`` for the ``t = 0``, ``eps = U = 1`` Hubbard chain.

    ``n`` electrons with ``d`` doubly occupied sites: choose the ``d`` doubles,
    then the ``n - 2d`` singly occupied sites, each with two spin choices.
    """
    out: dict[int, int] = {}
    for d in range(n_sites + 1):
        for singles in range(n_sites - d + 1):
            e = 2 * d + singles + d
            out[e] = out.get(e, 0) + math.comb(n_sites, d) * math.comb(n_sites - d, singles) * 2**singles
    return dict(sorted(out.items()))
