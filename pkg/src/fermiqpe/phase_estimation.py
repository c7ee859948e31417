"""Phase estimation of a fermionic Hamiltonian on the simulated register.

The circuit acts on ``s`` simulation qubits followed by ``w`` work qubits
(indices ``s+1 .. s+w``).  Work qubit ``j`` controls ``2**(j-1)`` applications
of ``U = exp(-i (H - e_max) dt)``, refined into ``intervals`` Trotter steps.
An eigenphase ``phi = -(E - e_max) dt / 2 pi`` is read out as bin
``m = phi * 2**w``, so

    E = e_max - 2 pi m / (2**w dt).

Two backends produce the same distribution:

``"circuit"``
    Full ``(s + w)``-qubit gate-level run including the inverse QFT network.
``"register"``
    Uses that the work register only ever selects a power of ``U``.  ``U`` is
    the control-on branch of the compiled controlled step, assembled gate by
    gate into a sparse operator and split into its decoupled blocks.  Powers
    ``U**x`` for ``x < 2**w`` are built by repeated application, and the
    inverse QFT becomes an FFT over ``x`` (see :class:`OutcomeKernel`).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.stats

from fermiqpe.compiler import (
    GateSequence,
    H,
    compile_controlled_evolution,
    controlled_step,
    on_branch,
)
from fermiqpe.errors import ConfigError, ResourceError
from fermiqpe.fermion_models import FermionHamiltonian
from fermiqpe.pauli import PauliHamiltonian, jw_hamiltonian
from fermiqpe.statevector import (
    BlockOperator,
    CompiledPlan,
    StateVector,
    input_rng,
    inverse_qft,
    random_amplitudes,
    sample_counts,
    sequence_operator,
    shot_rng,
)

MEMORY_BUDGET = 1 << 28  # bytes of trajectory buffer per chunk
MAX_REGISTER_DIM = 1 << 14
BACKENDS = ("register", "circuit")


@dataclass(frozen=True)
class PEConfig:
    """Phase-estimation settings.

    Attributes:
        w: Number of work qubits.
        dt: Time step; ``None`` picks the largest alias-free step for the
            default energy bounds.
        intervals: Trotter steps per ``dt``.
        trotter_order: 1 or 2.
        e_max: Energy mapped to bin 0; ``None`` puts it one bin above the
            default upper bound.
        shots: Number of measurements.
        seed: Root seed of all random streams.
        input_state: ``"random"`` or a bitstring of length ``s`` naming a
            basis state (``"0"`` = occupied level).
        fresh_state: Draw a new random input for every shot.
        exact_evolution: Replace the Trotter step by the exact exponential.
        backend: ``"register"`` or ``"circuit"``.
    """

    w: int
    dt: float | None = None
    intervals: int = 1
    trotter_order: int = 1
    e_max: float | None = None
    shots: int = 1000
    seed: int = 0
    input_state: str = "random"
    fresh_state: bool = True
    exact_evolution: bool = False
    backend: str = "register"

    def __post_init__(self) -> None:
        if not isinstance(self.w, int) or self.w < 1:
            raise ConfigError(f"w must be a positive integer, got {self.w!r}")
        if self.dt is not None and not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be positive, got {self.dt!r}")
        if not isinstance(self.intervals, int) or self.intervals < 1:
            raise ConfigError("intervals must be a positive integer")
        if self.trotter_order not in (1, 2):
            raise ConfigError("trotter_order must be 1 or 2")
        if self.e_max is not None and not math.isfinite(self.e_max):
            raise ConfigError("e_max must be finite")
        if not isinstance(self.shots, int) or self.shots < 1:
            raise ConfigError("shots must be a positive integer")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.input_state != "random" and set(self.input_state) - {"0", "1"}:
            raise ConfigError(f"input_state must be 'random' or a bitstring, got {self.input_state!r}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}")

    @property
    def n_bins(self) -> int:
        return 1 << self.w

    @property
    def resolved(self) -> bool:
        return self.dt is not None and self.e_max is not None

    def resolve(self, h: FermionHamiltonian) -> PEConfig:
        """Fill ``dt`` and ``e_max`` from the default energy bounds."""
        if self.resolved:
            return self
        lo, hi = default_energy_bounds(h)
        slack = (hi - lo) / self.n_bins
        e_max = hi + slack if self.e_max is None else self.e_max
        dt = max_dt(lo - slack, e_max) if self.dt is None else self.dt
        return replace(self, dt=dt, e_max=e_max)

    def bin_width(self) -> float:
        return 2 * math.pi / (self.n_bins * self._dt())

    def _dt(self) -> float:
        if self.dt is None:
            raise ConfigError("configuration is not resolved; call resolve(h) first")
        return self.dt

    def to_dict(self) -> dict:
        return asdict(self)


def max_dt(e_min_bound: float, e_max_bound: float) -> float:
    """Largest step for which ``[e_min_bound, e_max_bound]`` does not wrap."""
    if not e_max_bound > e_min_bound:
        raise ConfigError(f"degenerate energy interval ({e_min_bound}, {e_max_bound})")
    return 2 * math.pi / (e_max_bound - e_min_bound)


def default_energy_bounds(h: FermionHamiltonian | PauliHamiltonian) -> tuple[float, float]:
    """``+-(|e0| + sum |c_k| + |constant|)`` over the qubit Hamiltonian.

    Every Pauli string has unit norm, so this bounds the spectrum.  ``e0`` is
    already folded into the constant of the qubit form.
    """
    ph = jw_hamiltonian(h) if isinstance(h, FermionHamiltonian) else h
    bound = ph.one_norm() + abs(ph.constant)
    if bound == 0:
        return -1.0, 1.0
    return -bound, bound


def energy_from_bin(m: int | np.ndarray, cfg: PEConfig):
    """Energy of work-register outcome ``m``."""
    m_arr = np.asarray(m)
    if np.any((m_arr < 0) | (m_arr >= cfg.n_bins)):
        raise ValueError(f"bin {m} outside 0..{cfg.n_bins - 1}")
    e = cfg.e_max - 2 * math.pi * m_arr / (cfg.n_bins * cfg._dt())
    return float(e) if np.ndim(m) == 0 else e


def bin_from_energy(energy: float, cfg: PEConfig) -> int:
    """Nearest bin to ``energy``, wrapped into the register range."""
    m = round((cfg.e_max - energy) * cfg._dt() * cfg.n_bins / (2 * math.pi))
    return int(m) % cfg.n_bins


# --------------------------------------------------------------------------
# histogram


@dataclass(frozen=True)
class Peak:
    bins: tuple[int, ...]
    mass: int
    energy: float
    top_bin: int


@dataclass(frozen=True)
class SpectrumHistogram:
    """Outcome counts over the ``2**w`` work-register bins."""

    counts: np.ndarray
    config: PEConfig
    n_sim: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.counts) != self.config.n_bins:
            raise ValueError("counts length does not match 2**w")
        if int(self.counts.sum()) != self.config.shots:
            raise ValueError("counts do not add up to shots")

    @property
    def shots(self) -> int:
        return self.config.shots

    @property
    def phi(self) -> np.ndarray:
        return np.arange(self.config.n_bins) / self.config.n_bins

    @property
    def energies(self) -> np.ndarray:
        return energy_from_bin(np.arange(self.config.n_bins), self.config)

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.shots

    def default_threshold(self) -> int:
        return max(5, math.ceil(0.01 * self.shots))

    def peaks(self, threshold: int | None = None) -> list[Peak]:
        """Runs of adjacent bins at or above ``threshold`` counts.

        Each run becomes one peak whose energy is the count-weighted mean
        of its bins.
        """
        thr = self.default_threshold() if threshold is None else threshold
        above = self.counts >= thr
        out: list[Peak] = []
        m = 0
        energies = self.energies
        while m < len(above):
            if not above[m]:
                m += 1
                continue
            start = m
            while m < len(above) and above[m]:
                m += 1
            bins = np.arange(start, m)
            c = self.counts[bins]
            out.append(
                Peak(
                    bins=tuple(int(b) for b in bins),
                    mass=int(c.sum()),
                    energy=float(np.dot(c, energies[bins]) / c.sum()),
                    top_bin=int(bins[np.argmax(c)]),
                )
            )
        return out

    def to_csv(self, dense: bool = False, comments: Sequence[str] = ()) -> str:
        buf = io.StringIO()
        for line in comments:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bin", "phi", "energy", "count", "probability"])
        energies = self.energies
        for m in range(self.config.n_bins):
            c = int(self.counts[m])
            if c or dense:
                writer.writerow(
                    [m, format(m / self.config.n_bins, ".17g"), format(float(energies[m]), ".17g"),
                     c, format(c / self.shots, ".17g")]
                )
        return buf.getvalue()

    def metadata_json(self, version: str) -> str:
        body = {"config": self.config.to_dict(), "n_sim": self.n_sim, "version": version}
        body.update(self.metadata)
        return json.dumps(body, indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# running


def _input_vector(cfg: PEConfig, n: int) -> np.ndarray | None:
    """Shared input state, or ``None`` when every shot draws its own."""
    if cfg.input_state == "random":
        if cfg.fresh_state:
            return None
        return random_amplitudes(input_rng(cfg.seed), 1 << n)
    if len(cfg.input_state) != n:
        raise ConfigError(f"input bitstring has length {len(cfg.input_state)}, register has {n}")
    psi = np.zeros(1 << n, dtype=complex)
    psi[int(cfg.input_state, 2)] = 1
    return psi


def _shot_batch(cfg: PEConfig, n: int, shared: np.ndarray | None, shots: range):
    """Input columns and sampling uniforms for a contiguous range of shots."""
    cols = np.empty((1 << n, len(shots)), dtype=complex)
    uniforms = np.empty(len(shots))
    for b, i in enumerate(shots):
        rng = shot_rng(cfg.seed, i)
        cols[:, b] = random_amplitudes(rng, 1 << n) if shared is None else shared
        uniforms[b] = rng.random()
    return cols, uniforms


def shifted_qubit_hamiltonian(h: FermionHamiltonian, cfg: PEConfig) -> PauliHamiltonian:
    return jw_hamiltonian(h).shifted(-cfg.e_max)


def step_operator(h: FermionHamiltonian, cfg: PEConfig) -> BlockOperator:
    """One controlled application of ``U`` (control on), as a block operator."""
    n = h.n_levels
    if cfg.exact_evolution:
        from fermiqpe.oracle import eigensolve, fock_matrix

        sol = eigensolve(fock_matrix(h), vectors=True)
        v = sol.eigenvectors
        phase = np.exp(-1j * (sol.eigenvalues - cfg.e_max) * cfg.dt)
        u = (v * phase) @ v.conj().T
        u[np.abs(u) < 1e-15] = 0
        return BlockOperator(u)
    ph = shifted_qubit_hamiltonian(h, cfg)
    control = n + 1
    step = controlled_step(ph, cfg.dt / cfg.intervals, control, cfg.trotter_order)
    op = BlockOperator(sequence_operator(on_branch(step, control, n), n))
    return op.power(cfg.intervals)


class OutcomeKernel:
    """Linear map from simulation-register input to work-register amplitudes.

    For each block ``b`` of ``U`` the identity columns are evolved step by
    step, ``U_b**x`` for ``x < 2**w``, and transformed over ``x`` by the
    swap-free inverse QFT (an FFT in exponent order).  This gives
    ``K_b[m] = 2**-w sum_x exp(-2 pi i m x / 2**w) U_b**x`` and the outcome
    amplitudes of any input are ``K_b[m] @ psi_b``.  Blocks whose kernel would
    not fit the memory budget keep only ``U_b`` and are re-evolved per batch.
    """

    def __init__(self, op: BlockOperator, w: int, budget: int = MEMORY_BUDGET):
        self.w = w
        n_bins = 1 << w
        self.groups: list[tuple[np.ndarray, np.ndarray, bool]] = []
        for idx, blocks in op.groups:
            nb, bs = idx.shape
            if 16 * n_bins * nb * bs * bs <= budget:
                eye = np.broadcast_to(np.eye(bs, dtype=complex), (nb, bs, bs))
                self.groups.append((idx, _fourier_trajectory(blocks, eye, n_bins), True))
            else:
                self.groups.append((idx, blocks, False))

    def widest_lazy(self) -> int:
        return max([idx.size for idx, _, pre in self.groups if not pre], default=0)

    def distributions(self, cols: np.ndarray) -> np.ndarray:
        """Outcome probabilities for each input column, shape ``(2**w, B)``."""
        n_bins = 1 << self.w
        probs = np.zeros((n_bins, cols.shape[1]))
        for idx, data, pre in self.groups:
            psi = cols[idx]
            if pre and idx.shape[1] == 1:
                # scalar blocks: |K[m, k] psi_k|^2 summed over k
                weight = np.abs(data[:, :, 0, 0]) ** 2
                probs += weight @ (np.abs(psi[:, 0, :]) ** 2)
                continue
            amps = data @ psi if pre else _fourier_trajectory(data, psi, n_bins)
            probs += np.sum(np.abs(amps) ** 2, axis=(1, 2))
        return probs


def _fourier_trajectory(blocks: np.ndarray, start: np.ndarray, n_bins: int) -> np.ndarray:
    traj = np.empty((n_bins,) + start.shape, dtype=complex)
    traj[0] = start
    for x in range(1, n_bins):
        traj[x] = blocks @ traj[x - 1]
    return np.fft.fft(traj, axis=0) / n_bins


def _register_run(h: FermionHamiltonian, cfg: PEConfig) -> np.ndarray:
    n = h.n_levels
    if 1 << n > MAX_REGISTER_DIM:
        raise ResourceError(f"{n} simulation qubits exceeds the register backend limit")
    kernel = OutcomeKernel(step_operator(h, cfg), cfg.w)
    shared = _input_vector(cfg, n)
    widest = max(kernel.widest_lazy(), 1 << n)
    chunk = max(1, min(cfg.shots, MEMORY_BUDGET // (16 * cfg.n_bins * widest)))
    counts = np.zeros(cfg.n_bins, dtype=np.int64)
    for start in range(0, cfg.shots, chunk):
        shots = range(start, min(cfg.shots, start + chunk))
        cols, uniforms = _shot_batch(cfg, n, shared, shots)
        probs = kernel.distributions(cols)
        counts += np.bincount(_sample_columns(probs, uniforms), minlength=cfg.n_bins)
    return counts


def _sample_columns(probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """One inverse-CDF draw per column."""
    return np.array([sample_counts(probs[:, b], uniforms[b : b + 1])[0] for b in range(len(uniforms))])


def circuit_sequence(h: FermionHamiltonian, cfg: PEConfig) -> GateSequence:
    """Whole phase-estimation circuit before measurement (without input prep)."""
    n = h.n_levels
    ph = shifted_qubit_hamiltonian(h, cfg)
    ops: list = [H(n + j) for j in range(1, cfg.w + 1)]
    for j in range(1, cfg.w + 1):
        ops += compile_controlled_evolution(
            ph, cfg.dt, cfg.intervals, n + j, 2 ** (j - 1), cfg.trotter_order
        ).ops
    return GateSequence(tuple(ops), n + cfg.w)


def _circuit_run(h: FermionHamiltonian, cfg: PEConfig, iqft_method: str = "gates") -> np.ndarray:
    n, w = h.n_levels, cfg.w
    total = n + w
    if total > 20:
        raise ResourceError(f"circuit backend limited to 20 qubits, need {total}")
    if cfg.exact_evolution:
        raise ConfigError("exact evolution is only available on the register backend")
    plan = CompiledPlan(circuit_sequence(h, cfg))
    shared = _input_vector(cfg, n)
    work = range(n + 1, total + 1)

    def simulate(cols: np.ndarray) -> np.ndarray:
        amps = np.zeros((1 << n, 1 << w, cols.shape[1]), dtype=complex)
        amps[:, 0, :] = cols
        state = StateVector(amps.reshape(1 << total, cols.shape[1]), total)
        plan.apply(state)
        inverse_qft(state, work, method=iqft_method)
        return state.amplitudes

    # The circuit is linear in its input, so once there are more shots than
    # basis inputs it is cheaper to simulate the basis columns once and
    # superpose them per shot.
    response = simulate(np.eye(1 << n, dtype=complex)) if cfg.shots > 1 << n else None
    chunk = max(1, min(cfg.shots, MEMORY_BUDGET // (16 << total)))
    counts = np.zeros(cfg.n_bins, dtype=np.int64)
    for start in range(0, cfg.shots, chunk):
        shots = range(start, min(cfg.shots, start + chunk))
        cols, uniforms = _shot_batch(cfg, n, shared, shots)
        out = simulate(cols) if response is None else response @ cols
        probs = np.sum(np.abs(out.reshape(1 << n, 1 << w, len(shots))) ** 2, axis=0)
        counts += np.bincount(_sample_columns(probs, uniforms), minlength=cfg.n_bins)
    return counts


def run_phase_estimation(h: FermionHamiltonian, cfg: PEConfig) -> SpectrumHistogram:
    """Sample ``cfg.shots`` phase-estimation outcomes.

    Every shot uses its own random stream keyed by ``(seed, shot)``: a fresh
    input state (when requested) is drawn first, then one uniform for the
    measurement.  Results are therefore identical for both backends and
    independent of batching.
    """
    cfg = cfg.resolve(h)
    runner = _register_run if cfg.backend == "register" else _circuit_run
    counts = runner(h, cfg)
    return SpectrumHistogram(counts, cfg, h.n_levels)


# --------------------------------------------------------------------------
# post-processing


DEFAULT_SHIFT_FRACTIONS = (-(math.sqrt(2) - 1) / 8, -(math.sqrt(5) - 2) / 5)


@dataclass(frozen=True)
class ClassifiedPeak:
    energy: float
    mass: int
    status: str  # "true" or "aliased"
    shifted_energies: tuple[float | None, ...]


@dataclass(frozen=True)
class ScanReport:
    base: SpectrumHistogram
    shifted: tuple[SpectrumHistogram, ...]
    peaks: tuple[ClassifiedPeak, ...]
    tolerance: float

    @property
    def aliased(self) -> list[ClassifiedPeak]:
        return [p for p in self.peaks if p.status == "aliased"]

    def to_csv(self, comments: Sequence[str] = ()) -> str:
        buf = io.StringIO()
        for line in comments:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        dts = [h.config.dt for h in self.shifted]
        writer.writerow(["energy", "mass", "status"] + [f"energy_dt={dt:.12g}" for dt in dts])
        for p in self.peaks:
            shifted = ["" if e is None else format(e, ".12g") for e in p.shifted_energies]
            writer.writerow([format(p.energy, ".12g"), p.mass, p.status] + shifted)
        return buf.getvalue()


def spectrum_scan(
    h: FermionHamiltonian, cfg: PEConfig, dt_shifts: Sequence[float] | None = None
) -> ScanReport:
    """Flag peaks whose energy moves when the time step changes.

    A true eigenvalue keeps its energy when ``dt`` changes; a wrapped one
    lands ``2 pi k / dt`` away and therefore moves.  A peak is true when every
    shifted run has a peak within one bin width (the widest of all runs).
    """
    base_cfg = cfg.resolve(h)
    if dt_shifts is None:
        dt_shifts = [f * base_cfg.dt for f in DEFAULT_SHIFT_FRACTIONS]
    if not dt_shifts or any(base_cfg.dt + d <= 0 or d == 0 for d in dt_shifts):
        raise ConfigError("need nonzero shifts that keep dt positive")
    base = run_phase_estimation(h, base_cfg)
    runs = tuple(run_phase_estimation(h, replace(base_cfg, dt=base_cfg.dt + d)) for d in dt_shifts)
    tol = max(r.config.bin_width() for r in (base,) + runs)
    classified = []
    for p in base.peaks():
        matches = []
        for r in runs:
            near = [q.energy for q in r.peaks() if abs(q.energy - p.energy) <= tol]
            matches.append(min(near, key=lambda e: abs(e - p.energy)) if near else None)
        status = "true" if all(m is not None for m in matches) else "aliased"
        classified.append(ClassifiedPeak(p.energy, p.mass, status, tuple(matches)))
    return ScanReport(base, runs, tuple(classified), tol)


@dataclass(frozen=True)
class MultiplicityProfile:
    correlation: float
    applicable: bool
    levels: tuple[float, ...]
    masses: tuple[int, ...]
    degeneracies: tuple[int, ...]


def multiplicity_profile(
    hist: SpectrumHistogram,
    levels: Sequence[float],
    degeneracies: Sequence[int],
    threshold: int | None = None,
) -> MultiplicityProfile:
    """Spearman correlation between peak mass and level degeneracy.

    Peaks are assigned to the nearest oracle level within one bin width.
    Levels outside the energy window are ignored; levels inside it without a
    peak count with zero mass.  The comparison only means something when every
    shot starts from a fresh random state, otherwise ``applicable`` is false.
    """
    cfg = hist.config
    applicable = cfg.input_state == "random" and cfg.fresh_state
    lo = cfg.e_max - 2 * math.pi / cfg.dt
    keep = [(e, d) for e, d in zip(levels, degeneracies) if lo < e <= cfg.e_max]
    width = cfg.bin_width()
    masses = [0] * len(keep)
    for p in hist.peaks(threshold):
        dist = [abs(p.energy - e) for e, _ in keep]
        if dist and min(dist) <= width:
            masses[int(np.argmin(dist))] += p.mass
    degs = [d for _, d in keep]
    if len(keep) < 2:
        corr = 1.0
    elif len(set(degs)) == 1 or len(set(masses)) == 1:
        corr = float("nan")
    else:
        corr = float(scipy.stats.spearmanr(masses, degs).statistic)
    return MultiplicityProfile(
        corr if applicable else float("nan"),
        applicable,
        tuple(float(e) for e, _ in keep),
        tuple(masses),
        tuple(degs),
    )
