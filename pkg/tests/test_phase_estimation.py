from __future__ import annotations

import json
import math

import numpy as np
import pytest

from fermiqpe.compiler import CPhase
from fermiqpe.errors import ConfigError, ResourceError
from fermiqpe.fermion_models import FermionHamiltonian, LadderTerm, build_hubbard, build_pairing
from fermiqpe.oracle import pe_exact_distribution, spectrum
from fermiqpe.phase_estimation import (
    PEConfig,
    SpectrumHistogram,
    bin_from_energy,
    circuit_sequence,
    default_energy_bounds,
    energy_from_bin,
    max_dt,
    multiplicity_profile,
    run_phase_estimation,
    spectrum_scan,
)

TWO_PI = 2 * math.pi


def _two_level(e_a: float, e_b: float) -> FermionHamiltonian:
    """Single level with eigenvalues ``e_a`` (occupied) and ``e_b`` (empty)."""
    return FermionHamiltonian(1, e0=e_b, one_body={(1, 1): e_a - e_b})


def test_config_validation():
    with pytest.raises(ConfigError):
        PEConfig(w=0)
    with pytest.raises(ConfigError):
        PEConfig(w=3, dt=0.0)
    with pytest.raises(ConfigError):
        PEConfig(w=3, dt=-1.0)
    with pytest.raises(ConfigError):
        PEConfig(w=3, shots=0)
    with pytest.raises(ConfigError):
        PEConfig(w=3, backend="gpu")
    with pytest.raises(ConfigError):
        PEConfig(w=3, input_state="01x")
    with pytest.raises(ConfigError):
        PEConfig(w=3).bin_width()


def test_bin_energy_mapping():
    cfg = PEConfig(w=4, dt=TWO_PI / 16, e_max=0.0)
    assert energy_from_bin(0, cfg) == 0.0
    assert energy_from_bin(4, cfg) == pytest.approx(-4.0)
    assert all(bin_from_energy(energy_from_bin(m, cfg), cfg) == m for m in range(16))
    assert np.all(np.diff(energy_from_bin(np.arange(16), cfg)) < 0)
    with pytest.raises(ValueError):
        energy_from_bin(16, cfg)
    cfg2 = PEConfig(w=6, dt=0.37, e_max=2.5)
    assert all(bin_from_energy(energy_from_bin(m, cfg2), cfg2) == m for m in range(64))


def test_max_dt():
    assert max_dt(-12.5, 0.5) == pytest.approx(TWO_PI / 13)
    assert max_dt(-1, 0) == pytest.approx(TWO_PI)
    with pytest.raises(ConfigError):
        max_dt(1.0, 1.0)


def test_default_bounds():
    assert default_energy_bounds(FermionHamiltonian(2)) == (-1.0, 1.0)
    lo, hi = default_energy_bounds(build_hubbard(4, 1.0, 0.0, 1.0))
    assert hi >= 12 and lo <= 0
    raw = [LadderTerm.two_body(1, 2, 3, 4, 0.3), LadderTerm.one_body(1, 2, 0.2)]
    permuted = [LadderTerm.two_body(2, 1, 3, 4, -0.3), LadderTerm.one_body(2, 1, 0.2), LadderTerm.two_body(3, 4, 1, 2, 0.3)]
    assert default_energy_bounds(FermionHamiltonian.from_terms(4, raw)) == default_energy_bounds(
        FermionHamiltonian.from_terms(4, permuted)
    )


def test_resolved_defaults_contain_spectrum():
    h = build_hubbard(2, 0.5, 1.0, 2.0)
    cfg = PEConfig(w=6).resolve(h)
    sol = spectrum(h)
    assert sol.levels.max() < cfg.e_max
    assert sol.levels.min() > cfg.e_max - TWO_PI / cfg.dt


@pytest.mark.parametrize("backend", ["register", "circuit"])
def test_zero_hamiltonian_lands_in_bin_zero(backend):
    h = FermionHamiltonian(2)
    hist = run_phase_estimation(h, PEConfig(w=4, dt=1.0, e_max=0.0, shots=200, backend=backend))
    assert hist.counts[0] == 200


def test_backends_give_identical_counts():
    h = build_pairing(1, 0.7, 1.0)
    for fresh in (True, False):
        cfg = PEConfig(w=4, shots=400, seed=9, fresh_state=fresh, intervals=2)
        a = run_phase_estimation(h, cfg)
        b = run_phase_estimation(h, PEConfig(**{**cfg.to_dict(), "backend": "circuit"}))
        np.testing.assert_array_equal(a.counts, b.counts)


def test_circuit_basis_superposition_matches_direct_shots():
    # up to 2**s shots the circuit runs per shot; one more switches to the basis response
    h = build_hubbard(1, 0.4, 0.0, 1.3)
    cfg = PEConfig(w=4, shots=4, seed=21, backend="circuit")
    direct = run_phase_estimation(h, cfg).counts
    extended = run_phase_estimation(h, PEConfig(**{**cfg.to_dict(), "shots": 5})).counts
    extra = extended - direct
    assert extra.min() == 0 and extra.sum() == 1


def test_deterministic_for_fixed_seed():
    h = build_hubbard(2, 0.3, 1.0, 1.0)
    cfg = PEConfig(w=5, shots=500, seed=123)
    a = run_phase_estimation(h, cfg).counts
    b = run_phase_estimation(h, cfg).counts
    c = run_phase_estimation(h, PEConfig(w=5, shots=500, seed=124)).counts
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_shot_prefix_is_stable():
    # shot k depends only on (seed, k), so a longer run extends a shorter one
    h = build_pairing(1, 1.0, 1.0)
    short = run_phase_estimation(h, PEConfig(w=3, shots=1, seed=5))
    long = run_phase_estimation(h, PEConfig(w=3, shots=300, seed=5))
    m = int(np.argmax(short.counts))
    assert long.counts[m] > 0


def test_basis_input_is_eigenstate():
    # fully occupied pair level of the one-level pairing model has E = -1/2 + 0 (d=0)
    h = build_pairing(1, 0.0, 1.0)
    cfg = PEConfig(w=4, dt=TWO_PI / 8, e_max=0.0, shots=100, input_state="00")
    hist = run_phase_estimation(h, cfg)
    assert hist.counts[bin_from_energy(-0.5, cfg)] == 100
    with pytest.raises(ConfigError):
        run_phase_estimation(h, PEConfig(w=4, input_state="000"))


def test_work_qubit_j_controls_power_two():
    h = FermionHamiltonian(1, e0=0.25)
    cfg = PEConfig(w=3, dt=1.0, e_max=0.0).resolve(h)
    seq = circuit_sequence(h, cfg)
    phases = {op.control: op.angle for op in seq.ops if isinstance(op, CPhase)}
    assert phases == {2: pytest.approx(0.25), 3: pytest.approx(0.5), 4: pytest.approx(1.0)}


def test_histogram_matches_exact_distribution():
    rng = np.random.default_rng(2)
    h = FermionHamiltonian(
        2,
        e0=0.1,
        one_body={(1, 1): rng.normal(), (2, 2): rng.normal(), (1, 2): rng.normal()},
        two_body={(1, 2, 1, 2): rng.normal()},
    )
    cfg = PEConfig(w=4, shots=20_000, seed=1).resolve(h)
    hist = run_phase_estimation(h, cfg)
    exact = pe_exact_distribution(h, cfg)
    assert 0.5 * np.abs(hist.probabilities - exact).sum() < 0.03
    fixed = PEConfig(**{**cfg.to_dict(), "fresh_state": False})
    from fermiqpe.statevector import input_rng, random_amplitudes

    psi = random_amplitudes(input_rng(fixed.seed), 4)
    hist2 = run_phase_estimation(h, fixed)
    assert 0.5 * np.abs(hist2.probabilities - pe_exact_distribution(h, fixed, psi)).sum() < 0.03


def test_exact_evolution_concentrates_near_eigenvalues():
    h = build_hubbard(2, 0.3, 1.0, 2.0)
    cfg = PEConfig(w=6, shots=10_000, seed=4, exact_evolution=True).resolve(h)
    hist = run_phase_estimation(h, cfg)
    levels = spectrum(h).levels
    near = np.array([np.min(np.abs(levels - e)) <= cfg.bin_width() + 1e-12 for e in hist.energies])
    assert hist.counts[near].sum() / cfg.shots >= 8 / math.pi**2
    with pytest.raises(ConfigError):
        run_phase_estimation(h, PEConfig(**{**cfg.to_dict(), "backend": "circuit"}))


def test_resource_limits():
    with pytest.raises(ResourceError):
        run_phase_estimation(FermionHamiltonian(15), PEConfig(w=2, dt=1.0, e_max=0.0))
    with pytest.raises(ResourceError):
        run_phase_estimation(FermionHamiltonian(12), PEConfig(w=10, dt=1.0, e_max=0.0, backend="circuit"))


def test_too_large_dt_aliases():
    h = _two_level(-1.0, -3.0)
    dt_ok = max_dt(-3.5, 0.5)
    cfg = PEConfig(w=5, dt=dt_ok, e_max=0.5, shots=2000)
    energies = sorted(p.energy for p in run_phase_estimation(h, cfg).peaks())
    np.testing.assert_allclose(energies, [-3.0, -1.0], atol=cfg.bin_width())
    bad = PEConfig(w=5, dt=TWO_PI / 3, e_max=0.5, shots=2000)
    aliased = sorted(p.energy for p in run_phase_estimation(h, bad).peaks())
    assert all(abs(e + 3.0) > bad.bin_width() for e in aliased)


def test_scan_flags_only_the_wrapped_level():
    h = _two_level(-1.0, -12.0)
    cfg = PEConfig(w=6, dt=TWO_PI / 8, e_max=0.5, shots=2000, seed=2)
    report = spectrum_scan(h, cfg)
    statuses = {round(p.energy, 1): p.status for p in report.peaks}
    assert [p.status for p in report.peaks].count("aliased") == 1
    assert any(abs(e + 1.0) < 0.2 and s == "true" for e, s in statuses.items())
    assert report.to_csv().splitlines()[0].startswith("energy,mass,status,")


def test_scan_all_true_inside_window():
    h = build_hubbard(2, 1.0, 0.0, 1.0)
    report = spectrum_scan(h, PEConfig(w=6, shots=3000, seed=8))
    assert report.peaks and all(p.status == "true" for p in report.peaks)
    levels = spectrum(h).levels
    assert all(np.min(np.abs(levels - p.energy)) <= report.tolerance for p in report.peaks)


def test_scan_zero_hamiltonian():
    report = spectrum_scan(FermionHamiltonian(1), PEConfig(w=4, shots=100))
    assert [p.status for p in report.peaks] == ["true"]
    with pytest.raises(ConfigError):
        spectrum_scan(FermionHamiltonian(1), PEConfig(w=4, shots=100), dt_shifts=[])


def test_multiplicity_profile():
    h = build_hubbard(2, 1.0, 0.0, 1.0)
    sol = spectrum(h)
    cfg = PEConfig(w=6, dt=TWO_PI / 8, e_max=6.5, shots=4000, seed=1)
    prof = multiplicity_profile(run_phase_estimation(h, cfg), sol.levels, sol.degeneracies, threshold=5)
    assert prof.applicable and prof.correlation > 0.9
    single = multiplicity_profile(run_phase_estimation(FermionHamiltonian(1), PEConfig(w=3, shots=50)), [0.0], [2])
    assert single.correlation == 1.0
    fixed = PEConfig(w=6, dt=TWO_PI / 8, e_max=6.5, shots=500, input_state="0000")
    prof2 = multiplicity_profile(run_phase_estimation(h, fixed), sol.levels, sol.degeneracies)
    assert not prof2.applicable and math.isnan(prof2.correlation)


def test_histogram_outputs():
    h = build_pairing(1, 0.0, 1.0)
    hist = run_phase_estimation(h, PEConfig(w=3, dt=TWO_PI / 4, e_max=0.25, shots=64, seed=3))
    assert int(hist.counts.sum()) == 64
    rows = hist.to_csv(comments=["config-hash: abc"]).splitlines()
    assert rows[0] == "# config-hash: abc"
    assert rows[1] == "bin,phi,energy,count,probability"
    assert len(rows) - 2 == np.count_nonzero(hist.counts)
    assert len(hist.to_csv(dense=True).splitlines()) == 1 + 8
    meta = json.loads(hist.metadata_json("9.9"))
    assert meta["version"] == "9.9" and meta["config"]["w"] == 3 and meta["n_sim"] == 2
    with pytest.raises(ValueError):
        SpectrumHistogram(np.zeros(8, dtype=int), hist.config, 2)
