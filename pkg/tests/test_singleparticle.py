import numpy as np
import pytest

from ffcool import build_heisenberg_single_particle
from ffcool.resetfree import projection_energy_series
from ffcool.singleparticle import LayerProfiles, SingleParticleSolution, dispersion


def test_block_solution_matches_lattice_d1():
    m = build_heisenberg_single_particle(1, 16)
    ser = projection_energy_series(m, m.initial_state, 60)
    sol = SingleParticleSolution(1, 16, 60)
    assert np.max(np.abs(ser.energy - sol.e_tau)) < 1e-12
    assert np.max(np.abs(np.exp(2 * ser.log_norm) - sol.q_tau)) < 1e-12


def test_block_solution_matches_lattice_d2():
    m = build_heisenberg_single_particle(2, 4)
    ser = projection_energy_series(m, m.initial_state, 40)
    sol = SingleParticleSolution(2, 4, 40)
    assert np.max(np.abs(ser.energy - sol.e_tau)) < 1e-12
    assert np.max(np.abs(np.exp(2 * ser.log_norm) - sol.q_tau)) < 1e-12


def test_initial_energy_is_one_half_plus_one_per_extra_axis():
    # <H> of the two-site triplet: 1/4 + 0 + 1/4 per the three touched bonds
    assert SingleParticleSolution(1, 32, 1).e_tau[0] == pytest.approx(0.5, abs=1e-12)
    # each localized transverse axis adds two bonds at 1/2
    assert SingleParticleSolution(2, 8, 1).e_tau[0] == pytest.approx(1.5, abs=1e-12)
    assert SingleParticleSolution(3, 4, 1).e_tau[0] == pytest.approx(2.5, abs=1e-12)


def test_early_energy_lock_in():
    # e(tau) = beta/(2 tau) holds exactly (until tau ~ 1/gap) for d = 1
    sol = SingleParticleSolution(1, 256, 120)
    taus = np.arange(1, 121)
    assert np.max(np.abs(sol.e_tau[1:] * taus - 0.25)) < 2e-3
    # and e(100) = 0.25/100 within 5 percent
    assert sol.e_tau[100] == pytest.approx(0.25 / 100, rel=0.05)


def test_late_rate_is_four_gap():
    sol = SingleParticleSolution(1, 16, 400)
    gap = sol.gap
    lo, hi = int(2.0 / gap), int(3.5 / gap)
    slope = np.polyfit(np.arange(lo, hi), np.log(sol.e_tau[lo:hi]), 1)[0]
    assert -slope == pytest.approx(4 * gap, rel=0.05)


def test_survival_telescopes_to_ground_overlap():
    for dim, L in ((1, 16), (2, 6)):
        sol = SingleParticleSolution(dim, L, int(30 / (1 - np.cos(2 * np.pi / L))))
        assert sol.q_tau[-1] == pytest.approx(2.0 / L**dim, rel=1e-6)


def test_reset_probability_saturates_two_e():
    sol = SingleParticleSolution(1, 128, 200)
    taus = np.arange(20, 150)
    ratio = sol.p_tau[taus] / (2 * sol.e_tau[taus])
    assert np.max(np.abs(ratio - 1)) < 0.05


def test_layer_profiles_subsample_to_round_solution():
    prof = LayerProfiles(1, 16, n_ages=200)
    sol = SingleParticleSolution(1, 16, 100)
    taus = np.arange(1, 100)
    assert np.max(np.abs(sol.q_tau[taus] - prof.S[0, 2 * taus - 1])) < 1e-12
    assert np.max(np.abs(sol.e_tau[taus] - prof.E[0, 2 * taus - 1])) < 1e-12
    # the two d=1 creation types are translation-equivalent
    assert np.max(np.abs(prof.S[0] - prof.S[1])) < 1e-12
    assert np.max(np.abs(prof.E[0] - prof.E[1])) < 1e-12


def test_layer_profiles_d2_types():
    prof = LayerProfiles(2, 4, n_ages=60)
    assert prof.S.shape[0] == 4
    # x-created and y-created types are related by axis exchange: types 0/1
    # (x layers) map to 2/3 (y layers) under swapping the axes
    assert np.allclose(prof.S[0], prof.S[2], atol=1e-12)
    assert np.allclose(prof.S[1], prof.S[3], atol=1e-12)
    assert np.all(prof.hazard >= 0) and np.all(prof.hazard <= 1)


def test_dispersion_shape():
    k = np.array([[0.1, 0.2], [0.0, 0.0]])
    eps = dispersion(k)
    assert eps[1] == 0.0
    assert eps[0] == pytest.approx((1 - np.cos(0.1)) + (1 - np.cos(0.2)))
