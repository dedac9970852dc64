"""The exactly solvable single-particle Markov process: imaginary-time rounds
with stochastic resets, in closed form and by Monte Carlo.

A trajectory carries an age tau (rounds since the last reset).  Each round it
resets (tau <- 0) with probability p(tau), else tau <- tau + 1; the recorded
energy is e(tau).  In scaling mode p = clamp(2 e(max(tau, 1))) per the
saturated reset bound (the product defining the no-reset probability starts
at tau' = 1, which also avoids the e(0) >= 1/2 trap); in exact mode p is the
per-round survival decrement of the quantum reset-free trajectory, which
telescopes to Q_inf = |<Omega|psi0>|^2 exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma as _gamma
from typing import Callable

import numpy as np
from scipy.special import gammaincc

from .singleparticle import LayerProfiles, SingleParticleSolution

E_CAP = 0.45  # keeps p = 2e strictly below 1 in scaling mode


@dataclass
class MarkovParams:
    beta: float
    gap: float
    dim: int = 1
    dyn_exponent: float = 2.0
    lam: float = 1.0
    e_of_tau: Callable[[np.ndarray], np.ndarray] | None = None
    p_of_tau: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = "scaling"

    def __post_init__(self):
        if self.beta <= 0 or self.gap <= 0 or self.lam <= 0:
            raise ValueError("beta, gap and lam must be positive")
        if self.beta < 1 and self.lam > 4:
            raise ValueError("for beta < 1 the reset rate constant must satisfy lam <= 4")
        if self.e_of_tau is None:
            self.e_of_tau = scaling_energy(self.beta, self.gap, self.dim)
        if self.p_of_tau is None:
            e = self.e_of_tau
            self.p_of_tau = lambda tau: np.clip(
                2.0 * e(np.maximum(np.asarray(tau, dtype=np.int64), 1)), 0.0, 1.0
            )

    @staticmethod
    def from_scaling(beta: float, gap: float, dim: int = 1, lam: float = 1.0) -> "MarkovParams":
        return MarkovParams(beta=beta, gap=gap, dim=dim, dyn_exponent=dim / beta, lam=lam)

    @staticmethod
    def exact(dim: int, length: int, t_max: int = 0, lam: float = 1.0) -> "MarkovParams":
        """Exact single-particle mode.

        Both the round-level tables (e_of_tau / p_of_tau, used by the closed
        forms and Q-products) and the layer-resolved renewal profiles (used
        by simulate_markov, where a reset re-enters the protocol facing the
        layer after the one that produced it) come from the momentum-block
        solution; the layer-resolved process is statistically identical to
        the quantum trajectory ensemble of the single-particle model.
        """
        gap = 1 - np.cos(2 * np.pi / length)
        rounds = t_max if t_max else int(np.ceil(12.0 / gap))
        sol = SingleParticleSolution(dim, length, rounds)
        params = MarkovParams(
            beta=dim / 2.0,
            gap=sol.gap,
            dim=dim,
            dyn_exponent=2.0,
            lam=lam,
            e_of_tau=sol.energy_of_age,
            p_of_tau=sol.reset_probability,
            label=f"exact-d{dim}-L{length}",
        )
        params.solution = sol
        params.profiles = LayerProfiles(dim, length, n_ages=2 * dim * rounds)
        return params


def scaling_energy(beta: float, gap: float, dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """Piecewise reset-free energy with the incomplete-gamma crossover:
    e(tau) = (beta / (2 tau)) * Gamma(1 + d/2, 4 gap tau) / Gamma(1 + d/2),
    i.e. beta/(2 tau) well below the gap time and ~ exp(-4 gap tau) beyond,
    capped at E_CAP near tau = 0.
    """
    a = 1.0 + dim / 2.0

    def e(tau):
        tau = np.asarray(tau, dtype=float)
        t = np.maximum(tau, 1e-9)
        val = (beta / (2.0 * t)) * gammaincc(a, 4.0 * gap * t)
        return np.minimum(val, E_CAP)

    return e


@dataclass
class MarkovResult:
    t: np.ndarray
    mean_energy: np.ndarray
    sem_energy: np.ndarray
    infidelity_bound: np.ndarray
    n_resets: np.ndarray          # per trajectory
    last_reset: np.ndarray        # per trajectory, -1 if never reset
    gap_counts: np.ndarray        # histogram of clean gaps terminated by a reset
    n_traj: int
    params_label: str = ""

    @property
    def mean_n_resets(self) -> float:
        return float(self.n_resets.mean())


def simulate_markov(
    params: MarkovParams,
    n_traj: int,
    t_max: int,
    seed: int,
    record_every: int = 1,
) -> MarkovResult:
    """Vectorized Monte-Carlo over trajectories; one rng drives the ensemble.

    With exact-mode params the process runs at single-layer resolution (the
    renewal structure of the quantum protocol); gap statistics are then in
    layer units.  Scaling-mode params use the round-level process with
    p = clamp(2 e(tau))."""
    profiles: LayerProfiles | None = getattr(params, "profiles", None)
    if profiles is not None:
        return _simulate_layers(params, profiles, n_traj, t_max, seed, record_every)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    tau = np.zeros(n_traj, dtype=np.int64)
    n_resets = np.zeros(n_traj, dtype=np.int64)
    last_reset = np.full(n_traj, -1, dtype=np.int64)
    gap_counts = np.zeros(t_max + 2, dtype=np.int64)

    rec_t = np.arange(0, t_max + 1, record_every)
    mean_e = np.empty(rec_t.size)
    sem_e = np.empty(rec_t.size)
    e0 = params.e_of_tau(tau)
    mean_e[0], sem_e[0] = float(np.mean(e0)), float(np.std(e0) / np.sqrt(n_traj))
    ptr = 1
    for t in range(1, t_max + 1):
        p = params.p_of_tau(tau)
        reset = rng.random(n_traj) < p
        if np.any(reset):
            gaps = tau[reset]
            np.add.at(gap_counts, np.minimum(gaps, t_max + 1), 1)
            n_resets[reset] += 1
            last_reset[reset] = t
            tau[reset] = 0
        tau[~reset] += 1
        if ptr < rec_t.size and t == rec_t[ptr]:
            e = params.e_of_tau(tau)
            mean_e[ptr] = float(np.mean(e))
            sem_e[ptr] = float(np.std(e) / np.sqrt(n_traj))
            ptr += 1
    bound = np.minimum(mean_e / params.gap, 1.0)
    return MarkovResult(
        t=rec_t,
        mean_energy=mean_e,
        sem_energy=sem_e,
        infidelity_bound=bound,
        n_resets=n_resets,
        last_reset=last_reset,
        gap_counts=gap_counts,
        n_traj=n_traj,
        params_label=params.label,
    )


def _simulate_layers(
    params: MarkovParams,
    profiles: LayerProfiles,
    n_traj: int,
    t_max: int,
    seed: int,
    record_every: int,
) -> MarkovResult:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    n_layers = profiles.n_layers
    a_max = profiles.hazard.shape[1] - 1
    types = np.zeros(n_traj, dtype=np.int64)   # psi0 == type-0 creation at slot 0
    ages = np.zeros(n_traj, dtype=np.int64)
    n_resets = np.zeros(n_traj, dtype=np.int64)
    last_reset = np.full(n_traj, -1, dtype=np.int64)
    n_slots = n_layers * t_max
    gap_counts = np.zeros(n_slots + 2, dtype=np.int64)

    rec_t = np.arange(0, t_max + 1, record_every)
    mean_e = np.empty(rec_t.size)
    sem_e = np.empty(rec_t.size)
    e0 = profiles.E[types, ages]
    mean_e[0], sem_e[0] = float(np.mean(e0)), float(np.std(e0) / np.sqrt(n_traj))
    ptr = 1
    # slot 0 (layer 0) acts trivially on the fresh initial state; start at 1
    for s in range(1, n_slots + 1):
        g = s % n_layers
        h = profiles.hazard[types, np.minimum(ages, a_max)]
        reset = rng.random(n_traj) < h
        if np.any(reset):
            np.add.at(gap_counts, np.minimum(ages[reset], n_slots + 1), 1)
            n_resets[reset] += 1
            last_reset[reset] = s
            types[reset] = g
            ages[reset] = 0
        ages[~reset] += 1
        if g == n_layers - 1:
            t = (s + 1) // n_layers
            if ptr < rec_t.size and t == rec_t[ptr]:
                e = profiles.E[types, np.minimum(ages, a_max)]
                mean_e[ptr] = float(np.mean(e))
                sem_e[ptr] = float(np.std(e) / np.sqrt(n_traj))
                ptr += 1
    bound = np.minimum(mean_e / params.gap, 1.0)
    return MarkovResult(
        t=rec_t,
        mean_energy=mean_e,
        sem_energy=sem_e,
        infidelity_bound=bound,
        n_resets=n_resets,
        last_reset=last_reset,
        gap_counts=gap_counts,
        n_traj=n_traj,
        params_label=params.label + "-layers",
    )


def closed_form_avg_energy(t, params: MarkovParams, amplitude: float = 1.0) -> np.ndarray:
    """Scaling form of the trajectory-averaged energy, the two branches glued
    by continuity at t = 1/gap; log-corrected form for beta = 1."""
    t = np.asarray(t, dtype=float)
    beta, gap, lam = params.beta, params.gap, params.lam
    t_star = 1.0 / gap
    if abs(beta - 1.0) > 1e-12:
        a = max(1.0 - beta, 0.0)
        rate = lam * gap ** max(1.0, beta)
        early = amplitude / np.maximum(t, 1.0) ** a
        b_amp = amplitude * t_star ** (-a) / (gap**a * np.exp(-rate * t_star))
        late = b_amp * gap**a * np.exp(-rate * t)
    else:
        logd = abs(np.log(gap))
        rate = lam * gap / logd
        early = amplitude / np.log(np.maximum(t, 2.0))
        b_amp = amplitude / np.log(t_star) * logd / np.exp(-rate * t_star)
        late = b_amp / logd * np.exp(-rate * t)
    return np.where(t <= t_star, early, late)


def avg_infidelity_bound(t, params: MarkovParams) -> np.ndarray:
    """Closed-form bound on the trajectory-averaged infidelity, clamped to 1."""
    t = np.asarray(t, dtype=float)
    beta, gap, lam = params.beta, params.gap, params.lam
    if abs(beta - 1.0) > 1e-12:
        val = np.exp(-lam * gap ** max(1.0, beta) * t)
    else:
        val = np.exp(-lam * gap * t / abs(np.log(gap)))
    return np.minimum(val, 1.0)


def convergence_time(params: MarkovParams, target: float) -> float:
    """t_c with avg_infidelity_bound(t_c) = target."""
    if not 0 < target < 1:
        raise ValueError("target infidelity must be in (0, 1)")
    beta, gap, lam = params.beta, params.gap, params.lam
    if abs(beta - 1.0) > 1e-12:
        return np.log(1.0 / target) / (lam * gap ** max(1.0, beta))
    return np.log(1.0 / target) * abs(np.log(gap)) / (lam * gap)


@dataclass
class ResetDistributions:
    tau: np.ndarray
    q: np.ndarray                 # Q(tau): no reset during the first tau rounds
    q_prime: np.ndarray           # Q'(tau): tau clean rounds then a reset
    q_inf: float
    c_const: float                # Q_inf / gap^beta
    p_num_resets: Callable[[np.ndarray], np.ndarray]
    mean_n_resets: float
    mean_gap: float               # T_r: mean clean gap conditioned on a reset
    last_reset_density: Callable[[np.ndarray], np.ndarray]


def reset_distributions(params: MarkovParams, tau_max: int = 0) -> ResetDistributions:
    """Exact numeric Q, Q' from the reset probability, plus derived laws."""
    if tau_max <= 0:
        tau_max = int(np.ceil(8.0 / params.gap))
    ages = np.arange(tau_max + 1)
    p = params.p_of_tau(ages)
    q = np.empty(tau_max + 1)
    q[0] = 1.0
    q[1:] = np.cumprod(1.0 - p[:-1])
    q_prime = q * p
    q_inf = float(q[-1])
    c_const = q_inf / params.gap**params.beta
    mean_n = (1.0 - q_inf) / q_inf
    tot = q_prime.sum()
    mean_gap = float((ages * q_prime).sum() / tot) if tot > 0 else np.inf

    def p_num_resets(n):
        n = np.asarray(n, dtype=float)
        return q_inf * (1.0 - q_inf) ** n

    beta, gap, lam = params.beta, params.gap, params.lam
    if abs(beta - 1.0) > 1e-12:
        rate = lam * gap ** max(1.0, beta)

        def last_reset_density(t):
            return rate * np.exp(-rate * np.asarray(t, dtype=float))
    else:
        rate = lam * gap / abs(np.log(gap))

        def last_reset_density(t):
            return rate * np.exp(-rate * np.asarray(t, dtype=float))

    return ResetDistributions(
        tau=ages,
        q=q,
        q_prime=q_prime,
        q_inf=q_inf,
        c_const=c_const,
        p_num_resets=p_num_resets,
        mean_n_resets=mean_n,
        mean_gap=mean_gap,
        last_reset_density=last_reset_density,
    )


def single_particle_energy(tau, dim: int, length: int) -> np.ndarray:
    """Exact reset-free energy e(tau) of the d-dimensional single-particle
    model from the momentum-block solution (asymptotics: beta/(2 tau) early,
    decay rate 4*gap late)."""
    tau = np.asarray(tau, dtype=np.int64)
    sol = SingleParticleSolution(dim, length, int(tau.max()) if tau.size else 1)
    return sol.e_tau[tau]
