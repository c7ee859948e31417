"""Second-quantized Hamiltonians and the pairing / Hubbard benchmark models.

Levels are labelled 1..n.  For the spin-1/2 models, level ``2p-1`` is the
spin-up state of site (or pair level) ``p`` and level ``2p`` its spin-down
partner.

Storage conventions
-------------------
``one_body[(i, j)]`` with ``i <= j`` holds ``E_ij``; for ``i < j`` the stored
value stands for ``E_ij (a+_i a_j + a+_j a_i)``.

``two_body[(i, j, k, l)]`` holds one representative ``V`` per equivalence class
of the operator ``T = a+_i a+_j a_l a_k``.  The class is generated by the
anticommutation sign flips ``(j,i,k,l) -> -T``, ``(i,j,l,k) -> -T`` and by
Hermitian conjugation ``T+ = a+_k a+_l a_j a_i``.  The stored value means
``V (T + T+)``, or just ``V T`` when the class is self-adjoint
(``{i, j} == {k, l}``).  The representative is the lexicographically smallest
tuple of the class, with the sign absorbed into ``V``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from fermiqpe.errors import InvalidModelError, PauliPrincipleError

CREATE = "create"
ANNIHILATE = "annihilate"

OneBodyKey = tuple[int, int]
TwoBodyKey = tuple[int, int, int, int]


@dataclass(frozen=True)
class LadderTerm:
    """A product of creation/annihilation operators times a real coefficient.

    ``factors`` is read left to right as an operator product, e.g.
    ``((CREATE, 1), (CREATE, 2), (ANNIHILATE, 4), (ANNIHILATE, 3))`` is
    ``a+_1 a+_2 a_4 a_3``.
    """

    factors: tuple[tuple[str, int], ...]
    coefficient: float = 1.0

    def __post_init__(self) -> None:
        factors = tuple((str(kind), int(level)) for kind, level in self.factors)
        for kind, level in factors:
            if kind not in (CREATE, ANNIHILATE):
                raise InvalidModelError(f"unknown ladder kind {kind!r}")
            if level < 1:
                raise InvalidModelError(f"level {level} is not 1-based")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "coefficient", _check_real(self.coefficient))

    @classmethod
    def one_body(cls, i: int, j: int, coefficient: float = 1.0) -> LadderTerm:
        """``coefficient * a+_i a_j``."""
        return cls(((CREATE, i), (ANNIHILATE, j)), coefficient)

    @classmethod
    def two_body(cls, i: int, j: int, k: int, l: int, coefficient: float = 1.0) -> LadderTerm:
        """``coefficient * a+_i a+_j a_l a_k`` (note the ``l, k`` order)."""
        return cls(((CREATE, i), (CREATE, j), (ANNIHILATE, l), (ANNIHILATE, k)), coefficient)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(level for _, level in self.factors)

    def adjoint(self) -> LadderTerm:
        flipped = {CREATE: ANNIHILATE, ANNIHILATE: CREATE}
        return LadderTerm(
            tuple((flipped[kind], level) for kind, level in reversed(self.factors)),
            self.coefficient,
        )


def _check_real(value) -> float:
    if isinstance(value, complex):
        if value.imag != 0.0:
            raise InvalidModelError(f"complex coupling {value!r} is not supported")
        value = value.real
    try:
        value = float(value)
    except (TypeError, ValueError) as exc:
        raise InvalidModelError(f"coefficient {value!r} is not a real number") from exc
    if not math.isfinite(value):
        raise InvalidModelError(f"coefficient {value!r} is not finite")
    return value


@dataclass(frozen=True)
class FermionHamiltonian:
    """Constant + one-body + two-body Hamiltonian over ``n_levels`` states.

    Build instances through :meth:`from_terms`, :func:`build_pairing` or
    :func:`build_hubbard`; the direct constructor expects already-canonical maps.
    """

    n_levels: int
    e0: float = 0.0
    one_body: Mapping[OneBodyKey, float] = field(default_factory=dict)
    two_body: Mapping[TwoBodyKey, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.n_levels, int) or self.n_levels < 1:
            raise InvalidModelError(f"n_levels must be a positive integer, got {self.n_levels!r}")
        object.__setattr__(self, "e0", _check_real(self.e0))
        one = {}
        for (i, j), value in sorted(self.one_body.items()):
            self._check_levels((i, j))
            if i > j:
                raise InvalidModelError(f"one-body key {(i, j)} must have i <= j")
            one[(i, j)] = _check_real(value)
        two = {}
        for key, value in sorted(self.two_body.items()):
            self._check_levels(key)
            i, j, k, l = key
            if i == j or k == l:
                raise PauliPrincipleError(f"two-body key {key} repeats a creation or annihilation index")
            rep, _, _ = _two_body_class(key)
            if rep != key:
                raise InvalidModelError(f"two-body key {key} is not canonical (expected {rep})")
            two[key] = _check_real(value)
        object.__setattr__(self, "one_body", MappingProxyType(one))
        object.__setattr__(self, "two_body", MappingProxyType(two))

    def _check_levels(self, key: Sequence[int]) -> None:
        for level in key:
            if not 1 <= level <= self.n_levels:
                raise InvalidModelError(f"level {level} outside 1..{self.n_levels}")

    @classmethod
    def from_terms(
        cls, n_levels: int, terms: Iterable[LadderTerm], e0: float = 0.0
    ) -> FermionHamiltonian:
        """Build a Hamiltonian from raw ladder terms.

        Terms are merged per equivalence class.  Within a class, contributions
        proportional to ``T`` and to ``T+`` are accumulated separately; if only
        one side is present it is taken as shorthand for the Hermitian pair
        (like ``E_ij`` implying ``E_ji``), otherwise both sides must agree.
        """
        one_raw: list[LadderTerm] = []
        two_raw: list[LadderTerm] = []
        for term in terms:
            kinds = tuple(kind for kind, _ in term.factors)
            if kinds == (CREATE, ANNIHILATE):
                one_raw.append(term)
            elif kinds == (CREATE, CREATE, ANNIHILATE, ANNIHILATE):
                two_raw.append(term)
            else:
                raise InvalidModelError(
                    f"term {term.factors} is not a normal-ordered one- or two-body product"
                )
            for level in term.levels:
                if not 1 <= level <= n_levels:
                    raise InvalidModelError(f"level {level} outside 1..{n_levels}")
        return cls(
            n_levels=n_levels,
            e0=e0,
            one_body=_merge_one_body(one_raw),
            two_body=canonicalize_two_body(two_raw),
        )

    def ladder_terms(self) -> list[LadderTerm]:
        """Expand back to literal ladder terms, Hermitian partners included."""
        out: list[LadderTerm] = []
        for (i, j), value in self.one_body.items():
            out.append(LadderTerm.one_body(i, j, value))
            if i != j:
                out.append(LadderTerm.one_body(j, i, value))
        for key, value in self.two_body.items():
            term = LadderTerm.two_body(*key, value)
            out.append(term)
            if not is_self_adjoint(key):
                out.append(term.adjoint())
        return out

    def raw_term_count(self) -> int:
        return len(self.one_body) + len(self.two_body)


def is_self_adjoint(key: TwoBodyKey) -> bool:
    i, j, k, l = key
    return {i, j} == {k, l}


def _two_body_class(key: TwoBodyKey) -> tuple[TwoBodyKey, int, int]:
    """Return ``(representative, sign, side)`` for ``T = a+_i a+_j a_l a_k``.

    ``T == sign * R`` when ``side == 0`` and ``T == sign * R+`` when
    ``side == 1``, with ``R`` the operator of the representative tuple.
    """
    i, j, k, l = key
    members: list[tuple[TwoBodyKey, int, int]] = []
    for side, (a, b, c, d) in enumerate(((i, j, k, l), (k, l, i, j))):
        members += [
            ((a, b, c, d), 1, side),
            ((b, a, c, d), -1, side),
            ((a, b, d, c), -1, side),
            ((b, a, d, c), 1, side),
        ]
    rep, sign, side = min(members)
    if is_self_adjoint(key):
        side = 0
    # sign of T relative to the representative; the flips are involutions
    return rep, sign, side


def canonicalize_two_body(terms: Iterable[LadderTerm]) -> dict[TwoBodyKey, float]:
    """Merge raw ``a+ a+ a a`` terms into one representative per class."""
    sides: dict[TwoBodyKey, list[float]] = {}
    present: dict[TwoBodyKey, list[bool]] = {}
    for term in terms:
        kinds = tuple(kind for kind, _ in term.factors)
        if kinds != (CREATE, CREATE, ANNIHILATE, ANNIHILATE):
            raise InvalidModelError(f"term {term.factors} is not of the form a+ a+ a a")
        i, j, l, k = term.levels
        if i == j or k == l:
            raise PauliPrincipleError(
                f"term {term.factors} repeats a creation or annihilation index"
            )
        rep, sign, side = _two_body_class((i, j, k, l))
        acc = sides.setdefault(rep, [0.0, 0.0])
        seen = present.setdefault(rep, [False, False])
        acc[side] += sign * term.coefficient
        seen[side] = True
    return _resolve_sides(sides, present)


def _merge_one_body(terms: Iterable[LadderTerm]) -> dict[OneBodyKey, float]:
    sides: dict[OneBodyKey, list[float]] = {}
    present: dict[OneBodyKey, list[bool]] = {}
    for term in terms:
        i, j = term.levels
        key = (min(i, j), max(i, j))
        side = 0 if i <= j else 1
        if i == j:
            side = 0
        sides.setdefault(key, [0.0, 0.0])[side] += term.coefficient
        present.setdefault(key, [False, False])[side] = True
    return _resolve_sides(sides, present)


def _resolve_sides(sides, present) -> dict:
    out = {}
    for key in sorted(sides):
        a, b = sides[key]
        has_a, has_b = present[key]
        if has_a and has_b:
            if not math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-14):
                raise InvalidModelError(
                    f"terms of class {key} are not Hermitian: {a} vs conjugate {b}"
                )
            value = a
        else:
            value = a if has_a else b
        if value != 0.0:
            out[key] = value
    return out


PAIRING_PREFACTORS = {"half": 0.5, "full": 1.0}


def build_pairing(
    n_doubly_degenerate_levels: int,
    level_spacing: float,
    pairing_strength: float,
    convention: str = "half",
) -> FermionHamiltonian:
    """Pairing model with ``N`` equally spaced, doubly degenerate levels.

    Single-particle energy of level ``p`` is ``p * d`` on both spin states and
    the interaction is ``-(g/2) sum_{p,q} a+_{p up} a+_{p down} a_{q down} a_{q up}``
    over all ordered pairs, diagonal ``p == q`` included.

    Args:
        n_doubly_degenerate_levels: ``N``; the model has ``2N`` levels with
            spin-up of ``p`` at level ``2p-1`` and spin-down at ``2p``.
        level_spacing: ``d``.
        pairing_strength: ``g``.
        convention: ``"half"`` uses the ``-g/2`` prefactor above.  ``"full"``
            uses ``-g``; at ``d = 0`` this doubles every eigenvalue, giving
            the integer level set ``0, -1, ..., -6, -8, -9, -10, -12`` for
            ``N = 6``.
    """
    if convention not in PAIRING_PREFACTORS:
        raise InvalidModelError(f"unknown pairing convention {convention!r}")
    n = _check_size(n_doubly_degenerate_levels)
    d = _check_real(level_spacing)
    g = _check_real(pairing_strength)
    terms = []
    for p in range(1, n + 1):
        up, down = 2 * p - 1, 2 * p
        if d != 0.0:
            terms += [LadderTerm.one_body(up, up, p * d), LadderTerm.one_body(down, down, p * d)]
    prefactor = PAIRING_PREFACTORS[convention]
    if g != 0.0:
        for p in range(1, n + 1):
            for q in range(1, n + 1):
                # a+_{p up} a+_{p down} a_{q down} a_{q up}
                terms.append(LadderTerm.two_body(2 * p - 1, 2 * p, 2 * q - 1, 2 * q, -prefactor * g))
    return FermionHamiltonian.from_terms(2 * n, terms)


def build_hubbard(
    n_sites: int, eps: float, t: float, u: float, periodic: bool = False
) -> FermionHamiltonian:
    """Spin-1/2 Hubbard chain; open boundary unless ``periodic``."""
    n = _check_size(n_sites)
    eps, t, u = _check_real(eps), _check_real(t), _check_real(u)
    terms = []
    for p in range(1, n + 1):
        for level in (2 * p - 1, 2 * p):
            if eps != 0.0:
                terms.append(LadderTerm.one_body(level, level, eps))
    if t != 0.0:
        for a, b in hubbard_bonds(n, periodic):
            for spin in (1, 0):
                i, j = 2 * a - spin, 2 * b - spin
                terms += [LadderTerm.one_body(i, j, -t), LadderTerm.one_body(j, i, -t)]
    if u != 0.0:
        for p in range(1, n + 1):
            terms.append(LadderTerm.two_body(2 * p - 1, 2 * p, 2 * p - 1, 2 * p, u))
    return FermionHamiltonian.from_terms(2 * n, terms)


def hubbard_bonds(n_sites: int, periodic: bool) -> list[tuple[int, int]]:
    bonds = [(p, p + 1) for p in range(1, n_sites)]
    if periodic and n_sites > 2:
        bonds.append((1, n_sites))
    return bonds


def _check_size(n) -> int:
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InvalidModelError(f"model size must be a positive integer, got {n!r}")
    return n


def from_config_terms(n_levels: int, entries: Iterable[Mapping], e0: float = 0.0) -> FermionHamiltonian:
    """Custom model from ``{"op": "one_body"|"two_body", "indices": [...], "coeff": x}`` entries.

    ``two_body`` indices are ``[i, j, k, l]`` for ``a+_i a+_j a_l a_k``.
    """
    terms = []
    for entry in entries:
        op, idx, coeff = entry["op"], list(entry["indices"]), entry["coeff"]
        if op == "one_body" and len(idx) == 2:
            terms.append(LadderTerm.one_body(*idx, coeff))
        elif op == "two_body" and len(idx) == 4:
            terms.append(LadderTerm.two_body(*idx, coeff))
        else:
            raise InvalidModelError(f"bad custom term {dict(entry)!r}")
    return FermionHamiltonian.from_terms(n_levels, terms, e0=e0)
