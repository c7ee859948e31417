"""Pauli-string algebra and the Jordan-Wigner map.

Qubit ``q`` carries fermionic level ``q``.  A qubit in ``|0>`` is an occupied
level, so ``Z_q`` has eigenvalue +1 on occupied levels and the number
operator is ``(1 + Z_q) / 2``.  Creation is ``sigma_+ = (X + iY)/2``, which maps
``|1>`` to ``|0>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from fermiqpe.errors import ConsistencyError, DimensionError, InvalidModelError, PauliPrincipleError
from fermiqpe.fermion_models import ANNIHILATE, CREATE, FermionHamiltonian, LadderTerm

MERGE_TOL = 1e-14
IMAG_TOL = 1e-12

Letters = tuple[tuple[int, str], ...]

# single-qubit products: (a, b) -> (phase, letter) with a*b = phase * letter
_PRODUCT = {
    ("X", "X"): (1, ""), ("Y", "Y"): (1, ""), ("Z", "Z"): (1, ""),
    ("X", "Y"): (1j, "Z"), ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"), ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"), ("X", "Z"): (-1j, "Y"),
}


@dataclass(frozen=True)
class PauliString:
    """``coeff`` times a tensor product of X/Y/Z letters; identity elsewhere."""

    coeff: complex
    letters: Letters
    n_qubits: int

    def __post_init__(self) -> None:
        letters = self.letters
        if isinstance(letters, Mapping):
            letters = letters.items()
        letters = tuple(sorted((int(q), str(p).upper()) for q, p in letters))
        qubits = [q for q, _ in letters]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"duplicate qubit in {letters}")
        for q, p in letters:
            if not 1 <= q <= self.n_qubits:
                raise DimensionError(f"qubit {q} outside 1..{self.n_qubits}")
            if p not in "XYZ" or len(p) != 1:
                raise ValueError(f"unknown Pauli letter {p!r}")
        if not math.isfinite(abs(complex(self.coeff))):
            raise ValueError("coefficient must be finite")
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "coeff", complex(self.coeff))

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> PauliString:
        """``"XIZ"`` style label; position 1 is qubit 1."""
        letters = tuple((q + 1, p) for q, p in enumerate(label.upper()) if p != "I")
        return cls(coeff, letters, len(label))

    @property
    def letter_map(self) -> dict[int, str]:
        return dict(self.letters)

    @property
    def weight(self) -> int:
        return len(self.letters)

    def label(self) -> str:
        m = self.letter_map
        return "".join(m.get(q, "I") for q in range(1, self.n_qubits + 1))

    def __mul__(self, other: PauliString) -> PauliString:
        return pauli_multiply(self, other)

    def scaled(self, factor: complex) -> PauliString:
        return PauliString(self.coeff * factor, self.letters, self.n_qubits)

    def commutes_with(self, other: PauliString) -> bool:
        a, b = self.letter_map, other.letter_map
        clashes = sum(1 for q, p in a.items() if q in b and b[q] != p)
        return clashes % 2 == 0

    def __str__(self) -> str:
        body = " ".join(f"{p}{q}" for q, p in self.letters) or "I"
        return f"({self.coeff:.6g}) {body}"


def pauli_multiply(a: PauliString, b: PauliString) -> PauliString:
    """Product ``a * b`` with the phase accumulated qubit by qubit."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"cannot multiply strings on {a.n_qubits} and {b.n_qubits} qubits")
    letters, phase = _multiply_letters(a.letters, b.letters)
    return PauliString(a.coeff * b.coeff * phase, letters, a.n_qubits)


def _multiply_letters(a: Letters, b: Letters) -> tuple[Letters, complex]:
    phase: complex = 1
    merged = dict(a)
    for q, p in b:
        if q in merged:
            f, r = _PRODUCT[(merged[q], p)]
            phase *= f
            if r:
                merged[q] = r
            else:
                del merged[q]
        else:
            merged[q] = p
    return tuple(sorted(merged.items())), phase


class PauliSum(dict):
    """Mutable map ``letters -> complex coefficient``; identity is the empty tuple."""

    def __init__(self, n_qubits: int, items: Iterable[tuple[Letters, complex]] = ()):
        super().__init__()
        self.n_qubits = n_qubits
        for letters, c in items:
            self.add(letters, c)

    def add(self, letters: Letters, coeff: complex) -> None:
        self[letters] = self.get(letters, 0j) + coeff

    def __iadd__(self, other: PauliSum) -> PauliSum:
        for letters, c in other.items():
            self.add(letters, c)
        return self

    def times(self, other: PauliSum) -> PauliSum:
        out = PauliSum(self.n_qubits)
        for la, ca in self.items():
            for lb, cb in other.items():
                letters, phase = _multiply_letters(la, lb)
                out.add(letters, ca * cb * phase)
        return out

    def scaled(self, factor: complex) -> PauliSum:
        return PauliSum(self.n_qubits, ((k, v * factor) for k, v in self.items()))

    def pruned(self, tol: float = MERGE_TOL) -> PauliSum:
        return PauliSum(self.n_qubits, ((k, v) for k, v in self.items() if abs(v) > tol))

    def strings(self) -> list[PauliString]:
        return [PauliString(c, k, self.n_qubits) for k, c in sorted(self.items())]


@dataclass(frozen=True)
class PauliHamiltonian:
    """Real identity constant plus a sorted tuple of real-coefficient strings."""

    constant: float
    strings: tuple[PauliString, ...]
    n_qubits: int

    def __post_init__(self) -> None:
        seen = set()
        for s in self.strings:
            if s.n_qubits != self.n_qubits:
                raise DimensionError("string register size mismatch")
            if not s.letters:
                raise ValueError("identity component belongs in `constant`")
            if s.letters in seen:
                raise ValueError(f"duplicate string {s.letters}")
            if abs(s.coeff.imag) > 0:
                raise ValueError("PauliHamiltonian coefficients must be real")
            seen.add(s.letters)
        object.__setattr__(self, "strings", tuple(sorted(self.strings, key=lambda s: s.letters)))
        object.__setattr__(self, "constant", float(self.constant))

    @classmethod
    def from_sum(cls, terms: PauliSum, imag_tol: float = IMAG_TOL) -> PauliHamiltonian:
        constant = 0.0
        strings = []
        for letters, c in sorted(terms.items()):
            if abs(c.imag) >= imag_tol:
                raise ConsistencyError(
                    f"residual imaginary coefficient {c} on {letters}; sign bookkeeping is broken"
                )
            if abs(c) <= MERGE_TOL:
                continue
            if letters:
                strings.append(PauliString(c.real, letters, terms.n_qubits))
            else:
                constant += c.real
        return cls(constant, tuple(strings), terms.n_qubits)

    def shifted(self, offset: float) -> PauliHamiltonian:
        """Same strings with ``offset`` added to the constant."""
        return PauliHamiltonian(self.constant + offset, self.strings, self.n_qubits)

    def one_norm(self) -> float:
        return sum(abs(s.coeff) for s in self.strings)

    def __len__(self) -> int:
        return len(self.strings)


def jw_ladder(kind: str, level: int, n: int) -> PauliSum:
    """Jordan-Wigner image of ``a+_level`` (``kind='create'``) or ``a_level``."""
    if not 1 <= level <= n:
        raise IndexError(f"level {level} outside 1..{n}")
    if kind not in (CREATE, ANNIHILATE):
        raise ValueError(f"unknown ladder kind {kind!r}")
    z_run = tuple((q, "Z") for q in range(1, level))
    y_sign = 1 if kind == CREATE else -1
    return PauliSum(
        n,
        [
            (z_run + ((level, "X"),), 0.5),
            (z_run + ((level, "Y"),), 0.5j * y_sign),
        ],
    )


def jw_term(term: LadderTerm, n: int) -> PauliSum:
    """Expand a ladder product symbolically; coefficients may be complex."""
    out = PauliSum(n, [((), complex(term.coefficient))])
    for kind, level in term.factors:
        out = out.times(jw_ladder(kind, level, n))
    return out.pruned()


def jw_hamiltonian(h: FermionHamiltonian) -> PauliHamiltonian:
    """Jordan-Wigner image of a whole Hamiltonian, Hermitian partners included."""
    n = h.n_levels
    total = PauliSum(n, [((), complex(h.e0))])
    for term in h.ladder_terms():
        total += jw_term(term, n)
    return PauliHamiltonian.from_sum(total)


def classify_two_body_group(i: int, j: int, l: int, k: int) -> tuple[str, int]:
    """Ordering group of ``a+_i a+_j a_l a_k`` and its overall sign.

    Group I has both creators below (or both above) both annihilators, group II
    interleaves them and group III nests one pair inside the other.  The sign
    is ``-epsilon(alpha, beta, gamma, delta)`` where the Greek labels list which
    of ``(i, j, l, k)`` is smallest, next smallest, and so on.
    """
    labels = (i, j, l, k)
    if len(set(labels)) != 4:
        raise PauliPrincipleError(f"indices {labels} are not all distinct")
    order = sorted(range(4), key=lambda t: labels[t])
    creator_slots = frozenset(pos for pos, t in enumerate(order) if t in (0, 1))
    group = {
        frozenset({0, 1}): "I", frozenset({2, 3}): "I",
        frozenset({0, 2}): "II", frozenset({1, 3}): "II",
        frozenset({0, 3}): "III", frozenset({1, 2}): "III",
    }[creator_slots]
    return group, -_permutation_parity(order)


def _permutation_parity(perm: list[int]) -> int:
    sign = 1
    perm = list(perm)
    for a in range(len(perm)):
        while perm[a] != a:
            b = perm[a]
            perm[a], perm[b] = perm[b], perm[a]
            sign = -sign
    return sign


def hamiltonian_from_strings(
    strings: Mapping[str, float] | Iterable[tuple[str, float]], constant: float = 0.0
) -> PauliHamiltonian:
    """Convenience constructor from ``{"XZX": 0.3, ...}`` labels."""
    items = strings.items() if isinstance(strings, Mapping) else strings
    items = list(items)
    if not items:
        raise InvalidModelError("need at least one string to fix the register size")
    n = len(items[0][0])
    total = PauliSum(n, [((), complex(constant))])
    for label, c in items:
        s = PauliString.from_label(label, c)
        if s.n_qubits != n:
            raise DimensionError("labels have different lengths")
        total.add(s.letters, s.coeff)
    return PauliHamiltonian.from_sum(total)
