"""Lowering of Pauli-string evolutions to native gates.

Native gates (all angles in radians, qubits 1-based):

* ``Rot(axis, q, a)``      ``exp(-i a sigma_axis)`` on qubit ``q``
* ``ZZ(q1, q2, a)``        ``exp(-i a Z Z)``
* ``H(q)``                 Hadamard
* ``CRotZ(c, t, a)``       ``exp(-i a Z_t)`` applied when control ``c`` is ``|1>``
* ``CPhase(c, a)``         ``diag(1, exp(-i a))`` on ``c``
* ``GlobalPhase(a)``       ``exp(-i a)`` times identity

A string ``P`` is evolved as ``W+ exp(-i theta C) W`` where the core ``C`` is a
single ``Z`` or a ``Z Z`` pair and ``W`` is a ladder of ``pi/4`` rotations and
``pi/4`` ``ZZ`` couplers.  The ladder is derived symbolically by conjugating
the core one gate at a time, so every sign is checked by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

from fermiqpe.errors import UnsupportedShapeError, WiringError
from fermiqpe.pauli import PauliHamiltonian, PauliString, pauli_multiply

QUARTER = math.pi / 4


@dataclass(frozen=True)
class Rot:
    axis: str
    qubit: int
    angle: float

    def __post_init__(self) -> None:
        if self.axis not in ("x", "y", "z"):
            raise ValueError(f"rotation axis must be x, y or z, got {self.axis!r}")

    def inverse(self) -> Rot:
        return Rot(self.axis, self.qubit, -self.angle)

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)

    @property
    def diagonal(self) -> bool:
        return self.axis == "z"


@dataclass(frozen=True)
class ZZ:
    qubit_a: int
    qubit_b: int
    angle: float

    def __post_init__(self) -> None:
        if self.qubit_a == self.qubit_b:
            raise WiringError("ZZ needs two distinct qubits")

    def inverse(self) -> ZZ:
        return ZZ(self.qubit_a, self.qubit_b, -self.angle)

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit_a, self.qubit_b)

    diagonal = True


@dataclass(frozen=True)
class H:
    qubit: int

    def inverse(self) -> H:
        return self

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)

    diagonal = False


@dataclass(frozen=True)
class CRotZ:
    control: int
    target: int
    angle: float

    def __post_init__(self) -> None:
        if self.control == self.target:
            raise WiringError("control and target coincide")

    def inverse(self) -> CRotZ:
        return CRotZ(self.control, self.target, -self.angle)

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control, self.target)

    diagonal = True


@dataclass(frozen=True)
class CPhase:
    control: int
    angle: float

    def inverse(self) -> CPhase:
        return CPhase(self.control, -self.angle)

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control,)

    diagonal = True


@dataclass(frozen=True)
class GlobalPhase:
    angle: float

    def inverse(self) -> GlobalPhase:
        return GlobalPhase(-self.angle)

    qubits: tuple[int, ...] = ()
    diagonal = True


GateOp = Union[Rot, ZZ, H, CRotZ, CPhase, GlobalPhase]
TWO_QUBIT = (ZZ, CRotZ)


@dataclass(frozen=True)
class GateSequence:
    """Ordered gate program; ``ops[0]`` acts on the state first."""

    ops: tuple[GateOp, ...]
    n_qubits: int

    def __post_init__(self) -> None:
        ops = tuple(self.ops)
        for op in ops:
            for q in op.qubits:
                if not 1 <= q <= self.n_qubits:
                    raise WiringError(f"{op} touches qubit {q} outside 1..{self.n_qubits}")
            angle = getattr(op, "angle", 0.0)
            if not math.isfinite(angle):
                raise ValueError(f"non-finite angle in {op}")
        object.__setattr__(self, "ops", ops)

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self) -> Iterator[GateOp]:
        return iter(self.ops)

    def __add__(self, other: GateSequence) -> GateSequence:
        return GateSequence(self.ops + other.ops, max(self.n_qubits, other.n_qubits))

    def inverse(self) -> GateSequence:
        return GateSequence(tuple(op.inverse() for op in reversed(self.ops)), self.n_qubits)

    def repeated(self, times: int) -> GateSequence:
        return GateSequence(self.ops * times, self.n_qubits)

    def widened(self, n_qubits: int) -> GateSequence:
        return GateSequence(self.ops, max(n_qubits, self.n_qubits))

    def to_text(self) -> str:
        return "".join(format_op(op) + "\n" for op in self.ops)

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> GateSequence:
        ops = [parse_op(line) for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
        if n_qubits is None:
            n_qubits = max((q for op in ops for q in op.qubits), default=1)
        return cls(tuple(ops), n_qubits)


def _angle(a: float) -> str:
    return format(float(a), ".17g")


def format_op(op: GateOp) -> str:
    """One line of the gate-list text format."""
    if isinstance(op, Rot):
        return f"R {op.axis} {op.qubit} {_angle(op.angle)}"
    if isinstance(op, ZZ):
        return f"ZZ {op.qubit_a} {op.qubit_b} {_angle(op.angle)}"
    if isinstance(op, H):
        return f"H {op.qubit}"
    if isinstance(op, CRotZ):
        return f"CRZ {op.control} {op.target} {_angle(op.angle)}"
    if isinstance(op, CPhase):
        return f"CPHASE {op.control} {_angle(op.angle)}"
    if isinstance(op, GlobalPhase):
        return f"GPHASE {_angle(op.angle)}"
    raise TypeError(f"not a gate: {op!r}")


def parse_op(line: str) -> GateOp:
    parts = line.split()
    head, args = parts[0].upper(), parts[1:]
    try:
        if head == "R":
            return Rot(args[0].lower(), int(args[1]), float(args[2]))
        if head == "ZZ":
            return ZZ(int(args[0]), int(args[1]), float(args[2]))
        if head == "H":
            return H(int(args[0]))
        if head == "CRZ":
            return CRotZ(int(args[0]), int(args[1]), float(args[2]))
        if head == "CPHASE":
            return CPhase(int(args[0]), float(args[1]))
        if head == "GPHASE":
            return GlobalPhase(float(args[0]))
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed gate line {line!r}") from exc
    raise ValueError(f"unknown gate {head!r} in line {line!r}")


# --------------------------------------------------------------------------
# single-string lowering


def _gate_pauli(op: GateOp, n: int) -> PauliString:
    """Generator ``Q`` of a pi/4 conjugator ``exp(-i a Q)``."""
    if isinstance(op, Rot):
        return PauliString(1.0, ((op.qubit, op.axis.upper()),), n)
    if isinstance(op, ZZ):
        return PauliString(1.0, ((op.qubit_a, "Z"), (op.qubit_b, "Z")), n)
    raise TypeError(op)


def _conjugate(p: PauliString, op: GateOp) -> PauliString:
    """``G+ P G`` for ``G = exp(-i a Q)`` with ``a = +-pi/4``."""
    q = _gate_pauli(op, p.n_qubits)
    if p.commutes_with(q):
        return p
    return pauli_multiply(p, q).scaled(-1j * math.copysign(1.0, op.angle))


_ROTATE_FROM_Z = {"X": "y", "Y": "x"}
_ROTATE_TO_Z = {"X": "y", "Y": "x"}
_OTHER = {"X": "Y", "Y": "X"}


@dataclass(frozen=True)
class StringPlan:
    """``P = sign * W+ C W``; ``ladder`` lists W's gates in application order."""

    ladder: tuple[GateOp, ...]
    core: tuple[int, ...]
    sign: int


def plan_string(p: PauliString, pure_zz: str = "native") -> StringPlan:
    """Choose core and conjugation ladder for the letters of ``p``.

    ``pure_zz='ladder'`` builds two-Z strings from a single-Z core instead of
    the native ``ZZ`` core.
    """
    letters = p.letter_map
    n = p.n_qubits
    ends = sorted(q for q, c in letters.items() if c in "XY")
    zs = sorted(q for q, c in letters.items() if c == "Z")
    if not ends:
        if len(zs) <= 1 or (len(zs) == 2 and pure_zz == "native"):
            return StringPlan((), tuple(zs), 1)
        segments = [(zs[0], "Z", zs[1:])]
    elif len(ends) == 2:
        segments = [(ends[0], letters[ends[0]], [q for q in zs] + [ends[1]])]
    elif len(ends) == 4:
        inner2 = [q for q in zs if ends[2] < q < ends[3]]
        rest = [q for q in zs if q not in inner2]
        segments = [
            (ends[0], letters[ends[0]], rest + [ends[1]]),
            (ends[2], letters[ends[2]], inner2 + [ends[3]]),
        ]
    else:
        raise UnsupportedShapeError(
            f"string {p.label()} has {len(ends)} X/Y endpoints; only 0, 2 or 4 are compiled"
        )

    steps: list[GateOp] = []
    for root, root_letter, others in segments:
        flips = len(others)
        start = "X" if root_letter == "Z" else (root_letter if flips % 2 == 0 else _OTHER[root_letter])
        steps.append(Rot(_ROTATE_FROM_Z[start], root, QUARTER))
        steps += [ZZ(root, q, QUARTER) for q in others]
        for q in others:
            if letters[q] in "XY":
                steps.append(Rot(_ROTATE_FROM_Z[letters[q]], q, QUARTER))
        if root_letter == "Z":
            final = start if flips % 2 == 0 else _OTHER[start]
            steps.append(Rot(_ROTATE_TO_Z[final], root, QUARTER))

    core = tuple(root for root, _, _ in segments)
    current = PauliString(1.0, tuple((q, "Z") for q in core), n)
    for op in steps:
        current = _conjugate(current, op)
    if current.letters != p.letters or abs(abs(current.coeff) - 1) > 1e-12 or current.coeff.imag:
        raise AssertionError(f"ladder for {p.label()} produced {current}")
    # P = G_T+ ... G_1+ C G_1 ... G_T, so W applies G_T first
    return StringPlan(tuple(reversed(steps)), core, int(round(current.coeff.real)))


def _core_op(core: tuple[int, ...], theta: float) -> GateOp:
    if not core:
        return GlobalPhase(theta)
    if len(core) == 1:
        return Rot("z", core[0], theta)
    return ZZ(core[0], core[1], theta)


def _lower(p: PauliString, dt: float, pure_zz: str = "native") -> tuple[tuple[GateOp, ...], GateOp]:
    if abs(p.coeff.imag) > 1e-12:
        raise ValueError(f"string {p} has a complex coefficient")
    plan = plan_string(p, pure_zz)
    theta = p.coeff.real * dt * plan.sign
    return plan.ladder, _core_op(plan.core, theta)


def compile_string_evolution(p: PauliString, dt: float, pure_zz: str = "native") -> GateSequence:
    """Gates realizing ``exp(-i c dt P)`` for ``p = c P``."""
    ladder, core = _lower(p, dt, pure_zz)
    ops = ladder + (core,) + tuple(op.inverse() for op in reversed(ladder))
    return GateSequence(ops, p.n_qubits)


def _ordered_strings(h: PauliHamiltonian, order: int) -> list[tuple[PauliString, float]]:
    """Strings with their time fractions for one Trotter step."""
    strings = list(h.strings)
    if order == 1 or len(strings) <= 1:
        return [(s, 1.0) for s in strings]
    if order == 2:
        head = [(s, 0.5) for s in strings[:-1]]
        return head + [(strings[-1], 1.0)] + head[::-1]
    raise ValueError(f"Trotter order must be 1 or 2, got {order}")


def compile_trotter_step(
    h: PauliHamiltonian, dt: float, order: int = 1, pure_zz: str = "native"
) -> GateSequence:
    """One first-order or symmetric second-order Trotter step of ``exp(-i h dt)``."""
    ops: list[GateOp] = []
    if h.constant:
        ops.append(GlobalPhase(h.constant * dt))
    for s, frac in _ordered_strings(h, order):
        ops += compile_string_evolution(s, dt * frac, pure_zz).ops
    return GateSequence(tuple(ops), h.n_qubits)


def _controlled_core(core: GateOp, control: int, n: int) -> tuple[GateOp, ...]:
    if isinstance(core, GlobalPhase):
        return (CPhase(control, core.angle),)
    if isinstance(core, Rot):
        return (CRotZ(control, core.qubit, core.angle),)
    # reduce exp(-i a Z_a Z_b) to a single-Z core before controlling it
    zz = PauliString(1.0, ((core.qubit_a, "Z"), (core.qubit_b, "Z")), n)
    plan = plan_string(zz, pure_zz="ladder")
    inner = CRotZ(control, plan.core[0], core.angle * plan.sign)
    return plan.ladder + (inner,) + tuple(op.inverse() for op in reversed(plan.ladder))


def controlled_step(
    h: PauliHamiltonian, dt: float, control: int, order: int = 1
) -> GateSequence:
    """Trotter step with every core controlled; conjugators stay bare."""
    if 1 <= control <= h.n_qubits:
        raise WiringError(f"control qubit {control} collides with simulation qubits 1..{h.n_qubits}")
    if control < 1:
        raise WiringError(f"control qubit {control} is not 1-based")
    n = max(control, h.n_qubits)
    ops: list[GateOp] = []
    if h.constant:
        ops.append(CPhase(control, h.constant * dt))
    for s, frac in _ordered_strings(h, order):
        ladder, core = _lower(s, dt * frac)
        ops += ladder
        ops += _controlled_core(core, control, h.n_qubits)
        ops += [op.inverse() for op in reversed(ladder)]
    return GateSequence(tuple(ops), n)


def compile_controlled_evolution(
    h: PauliHamiltonian,
    dt: float,
    intervals: int,
    control: int,
    repetitions: int = 1,
    order: int = 1,
) -> GateSequence:
    """Controlled ``U(dt)^repetitions`` with ``U`` refined into ``intervals`` Trotter steps."""
    if intervals < 1 or repetitions < 1:
        raise ValueError("intervals and repetitions must be positive")
    step = controlled_step(h, dt / intervals, control, order)
    return GateSequence(_merge_phases(step.ops * (intervals * repetitions)), step.n_qubits)


def _merge_phases(ops: Iterable[GateOp]) -> tuple[GateOp, ...]:
    out: list[GateOp] = []
    for op in ops:
        prev = out[-1] if out else None
        if isinstance(op, CPhase) and isinstance(prev, CPhase) and prev.control == op.control:
            out[-1] = CPhase(op.control, prev.angle + op.angle)
        elif isinstance(op, GlobalPhase) and isinstance(prev, GlobalPhase):
            out[-1] = GlobalPhase(prev.angle + op.angle)
        else:
            out.append(op)
    return tuple(out)


def on_branch(seq: GateSequence, control: int, n_qubits: int) -> GateSequence:
    """Action of ``seq`` on qubits ``1..n_qubits`` when ``control`` is ``|1>``.

    Other qubits above ``n_qubits`` must not be touched.
    """
    ops: list[GateOp] = []
    for op in seq.ops:
        if isinstance(op, CRotZ) and op.control == control:
            ops.append(Rot("z", op.target, op.angle))
        elif isinstance(op, CPhase) and op.control == control:
            ops.append(GlobalPhase(op.angle))
        elif all(q <= n_qubits for q in op.qubits):
            ops.append(op)
        else:
            raise WiringError(f"{op} acts outside the branch register")
    return GateSequence(tuple(ops), n_qubits)


# --------------------------------------------------------------------------
# counting


def count_two_qubit_gates(seq: GateSequence) -> int:
    """Number of uncontrolled ``ZZ`` gates."""
    return sum(1 for op in seq.ops if isinstance(op, ZZ))


def count_controlled_gates(seq: GateSequence) -> int:
    return sum(1 for op in seq.ops if isinstance(op, (CRotZ, CPhase)))


def count_gates(seq: GateSequence) -> int:
    """All physical gates; ``GlobalPhase`` is bookkeeping and not counted."""
    return sum(1 for op in seq.ops if not isinstance(op, GlobalPhase))


def table_count(h: PauliHamiltonian) -> int:
    """Operation count of one first-order step in the per-term cost convention.

    Every rotation and coupler of the step is counted, and strings made of two
    ``Z`` letters are built from a single-``Z`` core like any other
    two-endpoint string (rotation at each end, one coupler per unit of
    distance, mirrored, plus the core).
    """
    return count_gates(compile_trotter_step(h, 1.0, order=1, pure_zz="ladder"))


def count_report(h, dt: float = 1.0) -> dict[str, int]:
    """Gate counts for one first-order Trotter step of a fermionic Hamiltonian."""
    from fermiqpe.pauli import jw_hamiltonian

    ph = jw_hamiltonian(h)
    step = compile_trotter_step(ph, dt)
    ctrl = controlled_step(ph, dt, control=ph.n_qubits + 1)
    return {
        "two_qubit": count_two_qubit_gates(step),
        "single_qubit": sum(1 for op in step.ops if isinstance(op, (Rot, H))),
        "controlled": count_controlled_gates(ctrl),
        "controlled_step_two_qubit": sum(1 for op in ctrl.ops if isinstance(op, TWO_QUBIT)),
        "table": table_count(ph),
    }
