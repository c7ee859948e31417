from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from fermiqpe.compiler import CPhase, CRotZ, GateSequence, GlobalPhase, H, Rot, ZZ, compile_string_evolution, compile_trotter_step
from fermiqpe.errors import DimensionError, ResourceError, WiringError
from fermiqpe.fermion_models import build_hubbard
from fermiqpe.oracle import gate_matrix, pauli_matrix
from fermiqpe.pauli import PauliHamiltonian, PauliString, jw_hamiltonian
from fermiqpe.statevector import (
    BlockOperator,
    CompiledPlan,
    RngStream,
    StateVector,
    apply_gate,
    apply_sequence,
    bit_reverse_indices,
    input_rng,
    inverse_qft,
    iqft_gates,
    new_basis_state,
    new_random_state,
    sample_work_register,
    sequence_operator,
    shot_rng,
    work_marginal,
)


def test_basis_state():
    s = new_basis_state(2, "00")
    np.testing.assert_array_equal(s.amplitudes, [1, 0, 0, 0])
    # qubit 1 is the high bit
    assert new_basis_state(3, "100").amplitudes[4] == 1
    with pytest.raises(DimensionError):
        new_basis_state(3, "10")
    with pytest.raises(DimensionError):
        new_basis_state(2, "0a")


def test_random_state_normalized_and_reproducible():
    a = new_random_state(5, RngStream(42, (3,)).generator())
    b = new_random_state(5, RngStream(42, (3,)).generator())
    c = new_random_state(5, RngStream(42, (4,)).generator())
    assert abs(np.linalg.norm(a.amplitudes) - 1) < 1e-12
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    assert not np.allclose(a.amplitudes, c.amplitudes)


def test_shot_streams_independent_of_run_length():
    assert shot_rng(7, 12).random() == shot_rng(7, 12).random()
    assert shot_rng(7, 12).random() != shot_rng(7, 13).random()
    assert input_rng(7).random() != shot_rng(7, 0).random()


def test_state_invariants():
    with pytest.raises(DimensionError):
        StateVector(np.ones(3, dtype=complex), 2)
    with pytest.raises(ResourceError):
        new_basis_state(40)


def test_hadamard_and_rz():
    s = apply_gate(new_basis_state(1), H(1))
    np.testing.assert_allclose(s.amplitudes, [2**-0.5, 2**-0.5])
    s = apply_gate(new_basis_state(1), Rot("z", 1, 0.3))
    np.testing.assert_allclose(s.amplitudes, [np.exp(-0.3j), 0])


def test_out_of_range_gate():
    with pytest.raises((DimensionError, WiringError)):
        apply_gate(new_basis_state(2), Rot("x", 3, 0.1))


def test_crz_fires_on_one():
    s = new_basis_state(2, "01")
    apply_gate(s, CRotZ(2, 1, 0.4))
    np.testing.assert_allclose(s.amplitudes, [0, np.exp(-0.4j), 0, 0])
    s = new_basis_state(2, "00")
    apply_gate(s, CRotZ(2, 1, 0.4))
    np.testing.assert_allclose(s.amplitudes, [1, 0, 0, 0])


_ops = st.one_of(
    st.builds(Rot, st.sampled_from("xyz"), st.integers(1, 4), st.floats(-4, 4)),
    st.builds(ZZ, st.integers(1, 2), st.integers(3, 4), st.floats(-4, 4)),
    st.builds(H, st.integers(1, 4)),
    st.builds(CRotZ, st.integers(1, 2), st.integers(3, 4), st.floats(-4, 4)),
    st.builds(CPhase, st.integers(1, 4), st.floats(-4, 4)),
    st.builds(GlobalPhase, st.floats(-4, 4)),
)


@settings(max_examples=60, deadline=None)
@given(st.lists(_ops, min_size=10, max_size=10), st.integers(0, 2**31))
def test_sequences_unitary_and_match_dense(ops, seed):
    seq = GateSequence(tuple(ops), 4)
    psi = new_random_state(4, np.random.default_rng(seed))
    ref = gate_matrix(seq) @ psi.amplitudes
    out = apply_sequence(psi.copy(), seq)
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-12
    np.testing.assert_allclose(out.amplitudes, ref, atol=1e-12)
    np.testing.assert_allclose(CompiledPlan(seq).apply(psi.copy()).amplitudes, ref, atol=1e-12)
    np.testing.assert_allclose(sequence_operator(seq) @ psi.amplitudes, ref, atol=1e-12)
    back = apply_sequence(out, seq.inverse())
    np.testing.assert_allclose(back.amplitudes, psi.amplitudes, atol=1e-12)


def test_string_evolution_on_state():
    p = PauliString.from_label("XZZY", 0.6)
    psi = new_random_state(4, np.random.default_rng(3))
    want = scipy.linalg.expm(-0.6j * 0.8 * pauli_matrix(PauliHamiltonian(0.0, (PauliString.from_label("XZZY"),), 4))) @ psi.amplitudes
    got = apply_sequence(psi.copy(), compile_string_evolution(p, 0.8)).amplitudes
    np.testing.assert_allclose(got, want, atol=1e-10)


def test_iqft_one_qubit_is_hadamard():
    assert iqft_gates([1]) == [H(1)]


@pytest.mark.parametrize("w", [1, 2, 3, 5, 8])
def test_iqft_paths_agree(w):
    psi = new_random_state(w + 2, np.random.default_rng(w))
    work = range(2, w + 2)
    a = inverse_qft(psi.copy(), work, method="direct").amplitudes
    b = inverse_qft(psi.copy(), work, method="gates").amplitudes
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_iqft_uniform_to_zero():
    w = 4
    s = StateVector(np.full(1 << w, 2 ** (-w / 2), dtype=complex), w)
    out = inverse_qft(s, range(1, w + 1))
    np.testing.assert_allclose(np.abs(out.amplitudes[0]), 1, atol=1e-12)


@pytest.mark.parametrize("method", ["direct", "gates"])
def test_iqft_dyadic_phase(method):
    # qubit j of the register carries phase digit 2**(j-1), as prepared by phase estimation
    w = 5
    x = bit_reverse_indices(w)
    amps = np.exp(2j * np.pi * x * 5 / 2**w) / 2 ** (w / 2)
    out = inverse_qft(StateVector(amps, w), range(1, w + 1), method=method)
    np.testing.assert_allclose(np.abs(out.amplitudes[5]) ** 2, 1, atol=1e-12)


def test_overlapping_register_rejected():
    with pytest.raises(DimensionError):
        inverse_qft(new_basis_state(3), range(2, 5))


def test_marginal_and_sampling():
    amps = np.zeros(8, dtype=complex)
    amps[0b001] = np.sqrt(0.75)  # work qubit 3 = |1>, register value 1
    amps[0b100] = np.sqrt(0.25)
    s = StateVector(amps, 3)
    probs = work_marginal(s, range(2, 4))
    np.testing.assert_allclose(probs, [0.25, 0.75, 0, 0])
    assert abs(probs.sum() - 1) < 1e-10
    shots = 10_000
    out = sample_work_register(s, range(2, 4), np.random.default_rng(5), shots)
    frac = np.mean(out == 1)
    sigma = np.sqrt(0.75 * 0.25 / shots)
    assert abs(frac - 0.75) < 3 * sigma
    assert set(np.unique(out)) <= {0, 1}


def test_deterministic_state_sampling():
    out = sample_work_register(new_basis_state(3, "011"), range(1, 4), np.random.default_rng(0), 50)
    assert np.all(out == 3)


def test_block_operator_matches_sparse():
    h = jw_hamiltonian(build_hubbard(2, 0.5, 1.0, 2.0))
    seq = compile_trotter_step(h, 0.2)
    u = sequence_operator(seq)
    blocks = BlockOperator(u)
    assert blocks.max_block <= 16
    psi = np.random.default_rng(1).standard_normal((16, 3)) + 0j
    np.testing.assert_allclose(blocks.apply(psi), u @ psi, atol=1e-12)
    np.testing.assert_allclose(blocks.power(3).apply(psi), u @ (u @ (u @ psi)), atol=1e-12)
    assert isinstance(u, sp.csr_matrix)
