import numpy as np
import pytest

from ffcool import markov
from ffcool.fits import fit_late_rate
from ffcool.markov import MarkovParams, closed_form_avg_energy, simulate_markov


def test_zero_energy_means_no_resets():
    p = MarkovParams(beta=0.5, gap=0.1, e_of_tau=lambda tau: np.zeros_like(np.asarray(tau, dtype=float)))
    res = simulate_markov(p, 200, 200, seed=1)
    assert res.n_resets.sum() == 0
    assert np.all(res.mean_energy == 0)


def test_lambda_bound_for_small_beta():
    with pytest.raises(ValueError, match=r"lam <= 4"):
        MarkovParams(beta=0.5, gap=0.1, lam=5.0)


def test_scaling_energy_asymptotics():
    e = markov.scaling_energy(0.5, 1e-5, 1)
    taus = np.array([10.0, 50.0, 100.0])
    assert np.allclose(e(taus), 0.25 / taus, rtol=0.01)
    # late: log-slope -> -4 gap
    e2 = markov.scaling_energy(0.5, 0.001, 1)
    t = np.array([3000.0, 3100.0])
    slope = np.diff(np.log(e2(t)))[0] / 100.0
    assert -slope == pytest.approx(4 * 0.001, rel=0.1)


def test_closed_form_branches():
    # beta = 1/2: early algebraic 1/sqrt(t)
    p = MarkovParams.from_scaling(0.5, 1e-4)
    t = np.array([10.0, 40.0])
    vals = closed_form_avg_energy(t, p)
    assert vals[0] / vals[1] == pytest.approx(2.0, rel=1e-6)
    # beta = 2: late rate lam * gap^2
    p2 = MarkovParams.from_scaling(2.0, 1e-2, lam=1.3)
    t = np.array([500.0, 900.0]) / p2.gap
    vals = closed_form_avg_energy(t, p2)
    rate = -np.diff(np.log(vals))[0] / np.diff(t)[0]
    assert rate == pytest.approx(1.3 * p2.gap**2, rel=1e-6)
    # beta = 1: rate lam*gap/|log gap|
    p1 = MarkovParams.from_scaling(1.0, 1e-2, lam=2.0)
    t = np.array([300.0, 700.0]) / p1.gap
    vals = closed_form_avg_energy(t, p1)
    rate = -np.diff(np.log(vals))[0] / np.diff(t)[0]
    assert rate == pytest.approx(2.0 * p1.gap / abs(np.log(p1.gap)), rel=1e-6)
    # continuity at t = 1/gap
    for p in (MarkovParams.from_scaling(0.5, 1e-3), MarkovParams.from_scaling(2.0, 1e-3)):
        t_star = 1.0 / p.gap
        lo, hi = closed_form_avg_energy(np.array([t_star * 0.999, t_star * 1.001]), p)
        assert lo == pytest.approx(hi, rel=5e-3)


def test_fit_late_rate_recovers_injected_lambda():
    p = MarkovParams.from_scaling(0.5, 5e-3, lam=1.7)
    t = np.arange(1.0, 4.0 / p.gap)
    series = closed_form_avg_energy(t, p)
    fit = fit_late_rate(t, series, p.gap, beta_hint=0.5)
    assert fit.lam == pytest.approx(1.7, rel=0.02)


def test_infidelity_bound_and_tc():
    p = MarkovParams.from_scaling(0.5, 1e-2, lam=1.0)
    assert markov.avg_infidelity_bound(0.0, p) == 1.0
    tc = markov.convergence_time(p, 0.2)
    assert markov.avg_infidelity_bound(tc, p) == pytest.approx(0.2, rel=1e-9)
    assert tc == pytest.approx(np.log(5.0) / p.gap, rel=1e-9)
    p1 = MarkovParams.from_scaling(1.0, 1e-2, lam=1.0)
    assert markov.convergence_time(p1, 0.2) == pytest.approx(
        np.log(5.0) * abs(np.log(p1.gap)) / p1.gap, rel=1e-9
    )


def test_reset_distributions_exact_mode():
    params = MarkovParams.exact(1, 16)
    rd = markov.reset_distributions(params)
    assert rd.q_inf == pytest.approx(2 / 16, rel=1e-6)
    assert rd.mean_n_resets == pytest.approx(16 / 2 - 1, rel=1e-6)
    # P_#r normalizes
    n = np.arange(0, 2000)
    assert rd.p_num_resets(n).sum() == pytest.approx(1.0, abs=1e-6)
    # Q' sums to 1 - Q_inf
    assert rd.q_prime.sum() == pytest.approx(1 - rd.q_inf, abs=1e-6)


def test_simulated_gaps_match_exact_q_prime():
    """MC gap histogram vs the exact layer-resolution Q' within 3 sigma/bin."""
    params = MarkovParams.exact(1, 12)
    prof = params.profiles
    n_traj, t_max = 40000, 400
    res = simulate_markov(params, n_traj, t_max, seed=9)
    total = res.gap_counts.sum()
    # exact gap law from the (single) d=1 profile: P(gap = a) = S(a) h(a)
    a_max = prof.hazard.shape[1]
    p_gap = prof.S[0, :a_max] * prof.hazard[0, :]
    p_gap /= p_gap.sum()
    for a in range(0, 30):
        expected = p_gap[a] * total
        sigma = max(np.sqrt(expected), 1.0)
        assert abs(res.gap_counts[a] - expected) < 4 * sigma


def test_mean_resets_and_survival():
    params = MarkovParams.exact(1, 32)
    res = simulate_markov(params, 30000, int(26 / params.gap), seed=3)
    exact = 32 / 2 - 1
    assert res.mean_n_resets == pytest.approx(exact, rel=0.03)


def test_qprime_tail_exponents():
    # d=1: Q'(tau) ~ tau^{-3/2}; d=2: ~ tau^{-2} (layer units; exponents are
    # invariant under the linear change of time unit)
    exps = {}
    for dim, length in ((1, 64), (2, 16)):
        params = MarkovParams.exact(dim, length)
        res = simulate_markov(params, 30000, int(6 / params.gap), seed=dim)
        counts = res.gap_counts
        lo = 6
        hi = int(0.25 / params.gap) * 2 * dim
        ages = np.arange(counts.size)
        sel = (ages >= lo) & (ages <= hi) & (counts > 10)
        slope = np.polyfit(np.log(ages[sel]), np.log(counts[sel]), 1)[0]
        exps[dim] = slope
    assert exps[1] == pytest.approx(-1.5, abs=0.15)
    assert exps[2] < exps[1] - 0.2
    assert exps[2] == pytest.approx(-2.0, abs=0.3)


def test_single_particle_energy_values():
    taus = np.array([0, 1, 5, 20])
    e = markov.single_particle_energy(taus, 1, 256)
    assert e[0] == pytest.approx(0.5)
    assert np.allclose(e[1:] * taus[1:], 0.25, atol=1e-3)
