from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermiqpe.compiler import H, compile_string_evolution
from fermiqpe.errors import ResourceError
from fermiqpe.fermion_models import FermionHamiltonian, LadderTerm, build_hubbard, build_pairing, canonicalize_two_body
from fermiqpe.oracle import (
    eigensolve,
    fock_matrix,
    gate_matrix,
    hubbard_atomic_degeneracies,
    jacobi_eigh,
    ladder_matrix,
    pauli_matrix,
    pe_exact_distribution,
    spectrum,
    term_matrix,
)
from fermiqpe.pauli import PauliHamiltonian, PauliString, hamiltonian_from_strings, jw_hamiltonian
from fermiqpe.phase_estimation import PEConfig


def test_number_operator_single_level():
    np.testing.assert_array_equal(term_matrix(LadderTerm.one_body(1, 1, 1.0), 1), np.diag([1.0, 0.0]))


def test_five_level_hop_matches_pauli_form():
    sp = np.array([[0, 1], [0, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0])
    expected = np.eye(2)
    for f in (sp @ sz, sz, sp.T, np.eye(2)):
        expected = np.kron(expected, f)
    np.testing.assert_allclose(term_matrix(LadderTerm((("create", 2), ("annihilate", 4)), 1.0), 5), expected)


@pytest.mark.parametrize("n", [1, 3, 6])
def test_fock_anticommutators(n):
    a = [ladder_matrix("annihilate", k, n) for k in range(1, n + 1)]
    for k in range(n):
        for l in range(n):
            np.testing.assert_allclose(a[k] @ a[l] + a[l] @ a[k], 0, atol=1e-12)
            np.testing.assert_allclose(a[k].T @ a[l] + a[l] @ a[k].T, np.eye(2**n) * (k == l), atol=1e-12)


def _random_hamiltonian(rng: np.random.Generator, n: int) -> FermionHamiltonian:
    levels = np.arange(1, n + 1)
    one = {(p, p): rng.normal() for p in levels.tolist()}
    for _ in range(n if n >= 2 else 0):
        p, q = sorted(rng.choice(levels, 2, replace=False).tolist())
        one[(p, q)] = rng.normal()
    two: dict = {}
    if n >= 2:
        for _ in range(2 * n):
            if n >= 4 and rng.random() < 0.7:
                idx = rng.choice(levels, 4, replace=False).tolist()
            else:
                i, j = rng.choice(levels, 2, replace=False).tolist()
                idx = [i, j, i, j]
            two.update(canonicalize_two_body([LadderTerm.two_body(*idx, rng.normal())]))
    return FermionHamiltonian(n, e0=rng.normal(), one_body=one, two_body=two)


def test_master_invariant_fock_equals_pauli():
    """Jordan-Wigner image and Fock-space action agree for 200 random Hamiltonians."""
    rng = np.random.default_rng(20240611)
    for trial in range(200):
        n = int(rng.integers(1, 9))
        h = _random_hamiltonian(rng, n)
        np.testing.assert_allclose(pauli_matrix(jw_hamiltonian(h)), fock_matrix(h), atol=1e-12, err_msg=str(trial))


def test_pauli_matrix_ordering():
    h = hamiltonian_from_strings({"ZI": 1.0})
    np.testing.assert_array_equal(pauli_matrix(h).real, np.diag([1, 1, -1, -1]))


def test_gate_matrix_of_hadamard():
    np.testing.assert_allclose(gate_matrix([H(1)], 1), np.array([[1, 1], [1, -1]]) / math.sqrt(2))


def test_gate_matrix_of_worked_string():
    p = PauliString.from_label("XZX")
    w, v = np.linalg.eigh(pauli_matrix(PauliHamiltonian(0.0, (p,), 3)))
    exact = v @ np.diag(np.exp(-0.77j * w)) @ v.conj().T
    np.testing.assert_allclose(gate_matrix(compile_string_evolution(p, 0.77)), exact, atol=1e-10)


def test_caps():
    with pytest.raises(ResourceError):
        fock_matrix(FermionHamiltonian(15))
    with pytest.raises(ResourceError):
        gate_matrix([H(9)], 9)
    with pytest.raises(ResourceError):
        eigensolve(np.eye(8), max_dim=4)


def test_hubbard_atomic_spectrum():
    sol = spectrum(build_hubbard(4, 1.0, 0.0, 1.0))
    np.testing.assert_allclose(sol.levels, [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12], atol=1e-10)
    assert list(sol.degeneracies) == [1, 8, 24, 36, 40, 48, 38, 24, 24, 4, 8, 1]
    combinatorial = {e: d for e, d in hubbard_atomic_degeneracies(4).items() if d}
    assert combinatorial == dict(zip(sol.levels.round().astype(int).tolist(), sol.degeneracies.tolist()))


def test_pairing_one_level():
    sol = spectrum(build_pairing(1, 0.0, 1.0))
    np.testing.assert_allclose(sol.eigenvalues, [-0.5, 0, 0, 0], atol=1e-12)


def test_diagonal_exact_and_two_by_two():
    d = np.diag([3.0, -1.0, 2.0, 2.0])
    sol = eigensolve(d)
    np.testing.assert_array_equal(sol.eigenvalues, [-1, 2, 2, 3])
    assert list(sol.degeneracies) == [1, 2, 1]
    a, b, c = 0.3, -1.2, 0.8
    m = np.array([[a, b], [b, c]])
    mid, rad = (a + c) / 2, math.hypot((a - c) / 2, b)
    np.testing.assert_allclose(eigensolve(m).eigenvalues, [mid - rad, mid + rad], atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**31))
def test_jacobi_matches_lapack(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    a = a + a.T
    w, v = jacobi_eigh(a)
    np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(a), atol=1e-10 * max(1, np.abs(a).max()))
    np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-10)


def test_complex_hermitian_via_embedding():
    rng = np.random.default_rng(4)
    z = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    m = z + z.conj().T
    m[np.ix_([0, 1], [0, 1])] = np.array([[2, 0], [0, 2]])  # force a degeneracy in some runs
    sol = eigensolve(m, vectors=True)
    np.testing.assert_allclose(sol.eigenvalues, np.linalg.eigvalsh(m), atol=1e-9)
    v = sol.eigenvectors
    np.testing.assert_allclose(v.conj().T @ v, np.eye(12), atol=1e-9)


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        eigensolve(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eigen_csv():
    text = spectrum(build_pairing(1, 0.0, 1.0)).to_csv(["config-hash: x"])
    assert text.splitlines() == ["# config-hash: x", "eigenvalue,degeneracy", "-0.5,1", "0,3"]


def _cfg(**kw) -> PEConfig:
    base = dict(w=5, dt=2 * math.pi / 16, e_max=0.0, shots=1)
    base.update(kw)
    return PEConfig(**base)


def test_pe_dyadic_eigenstate_peak():
    # E = -2 with dt = 2 pi / 16 gives phi = 2/16 = 4/32
    h = FermionHamiltonian(1, one_body={(1, 1): -2.0})
    p = pe_exact_distribution(h, _cfg(), input_state=np.array([1, 0]))
    assert p[4] == pytest.approx(1.0, abs=1e-12)
    assert p.sum() == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(-7.5, -0.01))
def test_pe_generic_phase_mass_near_peak(energy):
    h = FermionHamiltonian(1, one_body={(1, 1): energy})
    cfg = _cfg()
    p = pe_exact_distribution(h, cfg, input_state=np.array([1, 0]))
    phi = -(energy - cfg.e_max) * cfg.dt / (2 * math.pi) * 2**cfg.w
    lo = math.floor(phi)
    near = p[lo % 32] + p[(lo + 1) % 32]
    assert near >= 8 / math.pi**2 - 1e-12
    assert p.sum() == pytest.approx(1.0, abs=1e-10)


def test_pe_mixed_and_exact_flag():
    h = build_hubbard(2, 1.0, 0.0, 1.0)  # commuting terms: Trotter step is exact
    cfg = _cfg(w=4, e_max=5.0)
    trot = pe_exact_distribution(h, cfg)
    ideal = pe_exact_distribution(h, _cfg(w=4, e_max=5.0, exact_evolution=True))
    np.testing.assert_allclose(trot, ideal, atol=1e-10)
    assert trot.sum() == pytest.approx(1.0, abs=1e-10)
