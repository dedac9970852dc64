import numpy as np
import pytest

from ffcool import build_fredkin, build_heisenberg_chain, build_heisenberg_single_particle
from ffcool.errors import VanishingNormError
from ffcool.resetfree import (
    ProjectionRound,
    apply_projection_round,
    build_symmetrized,
    detectability_bound_check,
    eigen_correspondence,
    predicted_ratio_correction,
    projection_energy_series,
    round_matrix,
)
from ffcool.spectra import gap_for, hamiltonian
from ffcool.statevec import State


@pytest.fixture(scope="module")
def sp16():
    return build_heisenberg_single_particle(1, 16)


def test_round_fixes_ground_and_contracts(sp16):
    gs = State(sp16.ground_state.astype(complex), sp16.basis)
    out, norm = apply_projection_round(gs, sp16)
    assert norm == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(out.amps, gs.amps, atol=1e-12)
    rng = np.random.default_rng(2)
    for _ in range(20):
        v = rng.normal(size=sp16.basis.size) + 1j * rng.normal(size=sp16.basis.size)
        v /= np.linalg.norm(v)
        _, norm = apply_projection_round(State(v, sp16.basis), sp16)
        assert norm <= 1.0 + 1e-12


def test_overlap_with_ground_is_preserved(sp16):
    # <Omega|P psi> = <Omega|psi>, so the renormalized fidelity is non-decreasing
    rng = np.random.default_rng(5)
    v = rng.normal(size=16) + 1j * rng.normal(size=16)
    v /= np.linalg.norm(v)
    omega = sp16.ground_state.astype(complex)
    out, norm = apply_projection_round(State(v.copy(), sp16.basis), sp16)
    assert np.vdot(omega, out.amps) == pytest.approx(np.vdot(omega, v), abs=1e-12)


def test_symmetrized_identity_on_single_particle_sector(sp16):
    Pt = build_symmetrized(sp16)
    H = hamiltonian(sp16).toarray()
    ident = np.eye(16) - 1.5 * H + 0.5 * (H @ H)
    assert np.max(np.abs(Pt - ident)) < 1e-10
    evals = np.linalg.eigvalsh(Pt)
    assert evals[-1] == pytest.approx(1.0, abs=1e-12)
    # <k|Pt|k> = 1 - (3/2) eps + (1/2) eps^2 for every momentum eigenvalue
    eps = np.linalg.eigvalsh(H)
    lam_pred = np.sort(1 - 1.5 * eps + 0.5 * eps**2)
    assert np.allclose(np.sort(evals), lam_pred, atol=1e-10)


def test_energy_series_asymptotics_d1():
    m = build_heisenberg_single_particle(1, 64)
    ser = projection_energy_series(m, m.initial_state, 120)
    # exact early form beta/(2 tau) at beta = 1/2, while tau*gap stays small
    taus = np.arange(1, 31)
    assert np.max(np.abs(ser.energy[taus] * taus - 0.25)) < 5e-3
    assert ser.energy[0] == pytest.approx(0.5, abs=1e-12)
    # fitted over the early window [5, 0.3/gap]: slope -1, prefactor 0.25
    gap = 1 - np.cos(2 * np.pi / 64)
    lo, hi = 5, int(0.3 / gap)
    x = np.log(ser.tau[lo : hi + 1])
    y = np.log(ser.energy[lo : hi + 1])
    slope, intercept = np.polyfit(x, y, 1)
    assert slope == pytest.approx(-1.0, abs=0.05)
    assert np.exp(intercept) == pytest.approx(0.25, rel=0.10)


def test_vanishing_norm_error():
    m = build_heisenberg_single_particle(1, 8)
    # the staggered k = pi state is annihilated by one round exactly
    # (pairwise symmetrization of (+a, -a) gives zero), triggering the error
    sites = np.array([8 - 1 - int(np.log2(int(c))) for c in m.basis.configs])
    v = ((-1.0) ** sites).astype(complex) / np.sqrt(8)
    with pytest.raises(VanishingNormError):
        projection_energy_series(m, v, 10)


def test_string_reduction_identity(sp16):
    # P (P^dag)^n P = P^{n+1} on a two-layer model (the domain-wall rule)
    P = round_matrix(sp16)
    Pd = P.conj().T
    for n in (1, 2, 3):
        lhs = P @ np.linalg.matrix_power(Pd, n) @ P
        rhs = np.linalg.matrix_power(P, n + 1)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_tau_eff_distribution_for_two_rounds():
    # the four strings of length 2 reduce per the SM table: tau_eff {2,1,1,1};
    # two of four strings carry one domain wall (the binomial density at
    # n_DW = 1), matching rho = binom(2, n_DW)/4 = 1/2
    from itertools import product

    def tau_eff(string):
        n_dw = sum(1 for a, b in zip(string, string[1:]) if a != b)
        tau = len(string) - n_dw / 2
        if string[0] == "d":
            tau -= 0.5
        if string[-1] == "d":
            tau -= 0.5
        return tau

    strings = list(product("pd", repeat=2))
    taus = [tau_eff(s) for s in strings]
    assert sorted(taus) == [1.0, 1.0, 1.0, 2.0]
    n_dw_counts = {0: 0, 1: 0, 2: 0}
    for s in strings:
        n_dw_counts[sum(1 for a, b in zip(s, s[1:]) if a != b)] += 1
    assert n_dw_counts[1] / 4 == 0.5


def test_rho_tau_eff_normalization_and_peak():
    tau = 60
    n_dw = np.arange(0, tau + 1)
    from math import comb

    rho = np.array([comb(tau, int(k)) for k in n_dw], dtype=float) / 2**tau
    assert rho.sum() == pytest.approx(1.0)
    tau_eff = tau - n_dw / 2
    mean = (rho * tau_eff).sum()
    assert mean == pytest.approx(0.75 * tau, rel=1e-12)


def test_two_layer_correspondence_heisenberg_small():
    m = build_heisenberg_chain(12, True, 2)  # dim 66
    corr = eigen_correspondence(m, n_modes=2, tau_max=80)
    for e in corr.entries:
        # leading behavior lam ~ lam_tilde^{4/3}
        assert e.lam_measured == pytest.approx(e.lam_predicted, rel=0.02)
        # correction curve: ratio normalized at the window start follows
        # exp(-(2/27) tau log^2 lam~) within 5 percent
        pred = predicted_ratio_correction(corr.tau, e.lam_tilde)
        lo, hi = 10, 60
        rel = (e.ratio_curve[lo : hi + 1] / e.ratio_curve[lo]) / (
            pred[lo : hi + 1] / pred[lo]
        )
        assert np.max(np.abs(rel - 1)) < 0.05


def test_fredkin_symmetrized_low_energy_eigenvalues():
    m = build_fredkin(12)
    Pt = build_symmetrized(m)
    H = hamiltonian(m).toarray()
    evals, evecs = np.linalg.eigh(H)
    # low-energy eigenstates are near-eigenstates with lam~ ~ exp(-1.5 E)
    for j in range(1, 5):
        v = evecs[:, j]
        diag = float(np.real(v @ Pt @ v))
        nrm = float(np.linalg.norm(Pt @ v))
        assert diag == pytest.approx(np.exp(-1.5 * evals[j]), rel=0.03)
        assert nrm == pytest.approx(diag, rel=0.02)


def test_fredkin_nine_sevenths_correspondence():
    m = build_fredkin(10)
    corr = eigen_correspondence(m, n_modes=3, method="eig")
    assert corr.exponent == pytest.approx(9 / 7)
    for e in corr.entries:
        assert abs(e.lam_measured / e.lam_predicted - 1) < 0.05


def test_detectability_sandwich_small():
    for model in (build_heisenberg_chain(8, True, 4), build_fredkin(8)):
        rep = detectability_bound_check(model, n_random=40, seed=3)
        assert rep.violations == 0
        assert rep.n_states >= 40
    # vacuous lower bound: any state with <H> >= 1/4 gives 1 - 4<H> <= 0
    m = build_heisenberg_chain(8, True, 4)
    rep = detectability_bound_check(m, n_random=40, seed=4)
    assert np.all(rep.upper_slack > -1e-10)


def test_fredkin_reset_free_rate():
    m = build_fredkin(10)
    gap = gap_for(m).gap
    ser = projection_energy_series(m, m.initial_state, int(4.2 / gap))
    lo, hi = int(2.0 / gap), int(4.0 / gap)
    slope = np.polyfit(ser.tau[lo:hi], np.log(ser.energy[lo:hi]), 1)[0]
    assert -slope == pytest.approx(27 / 7 * gap, rel=0.15)
