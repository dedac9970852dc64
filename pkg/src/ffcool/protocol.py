"""The measurement-feedback cooling loop: rounds of layered projective
measurements with local unitary corrections, trajectory records, ensembles,
optional dephasing noise, postselection, the random-Pauli variant, and an
exact density-matrix channel oracle for small sectors."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from .basis import site_mask
from .errors import BasisMismatchError, CapacityError
from .models import LayeredModel, PauliString
from .spectra import hamiltonian
from .statevec import State, apply_pauli, kernels_for, pauli_phases

CHANNEL_BUDGET = 1024
THREADS_ENV = "FFCOOL_THREADS"
TAIL_RECORDS = 20


@dataclass
class ProtocolConfig:
    max_rounds: int = 100
    stop_clean_rounds: int = 0          # 0 disables the convergence herald
    record_every: int = 1
    dephasing_p: float = 0.0
    postselect_max_hits: int | None = None
    correction_mode: str = "deterministic"   # or "random_pauli"

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if not 0.0 <= self.dephasing_p < 1.0:
            raise ValueError("dephasing_p must lie in [0, 1)")
        if self.correction_mode not in ("deterministic", "random_pauli", "measurement_only"):
            raise ValueError(f"unknown correction mode {self.correction_mode!r}")


@dataclass
class TrajectoryRecord:
    seed: int
    rounds_run: int
    converged: bool
    t: np.ndarray
    energies: np.ndarray
    infidelities: np.ndarray
    cum_hits: np.ndarray                  # cumulative 1-outcomes at each record point
    hit_events: list[tuple[int, int, int]]  # (round, layer, term_index)
    reset_gaps: list[int]
    accepted: bool | None = None

    @property
    def total_hits(self) -> int:
        return len(self.hit_events)

    @property
    def n_reset_rounds(self) -> int:
        return len(self.reset_gaps)


class _ModelRuntime:
    """Precomputed per-model structures shared by all trajectories."""

    def __init__(self, model: LayeredModel):
        self.model = model
        self.kernels = kernels_for(model)
        self.layer_terms = [list(layer) for layer in model.layers]
        self.H = hamiltonian(model)
        self.ground = (
            model.ground_state.astype(complex) if model.ground_state is not None else None
        )
        self.bits = model.basis.bits()
        # correction appliers: (positions, phases) so that new[pos] = phases * old
        self.corrections = [
            self._pauli_applier(model, t.correction) for t in model.terms
        ]

    def _pauli_applier(self, model: LayeredModel, pauli: PauliString):
        basis = model.basis
        phases = pauli_phases(basis, pauli)
        if pauli.flip_mask == 0:
            return None, phases
        flipped = basis.xor(pauli.flip_mask)
        pos = basis.ordinals(flipped)
        if np.any(flipped != basis.configs[np.minimum(pos, basis.size - 1)]):
            raise BasisMismatchError("correction maps outside the sector")
        return pos, phases


def _runtime(model: LayeredModel) -> _ModelRuntime:
    rt = getattr(model, "_runtime", None)
    if rt is None:
        rt = _ModelRuntime(model)
        model._runtime = rt
    return rt


def _random_pauli(model: LayeredModel, support, rng) -> PauliString:
    """Uniform Pauli string on the support (identity included)."""
    x = z = y = 0
    n = model.basis.n_sites
    draws = rng.integers(0, 4, size=len(support))
    for site, d in zip(support, draws):
        m = site_mask(site, n)
        if d == 1:
            x |= m
        elif d == 2:
            y |= m
        elif d == 3:
            z |= m
    return PauliString(n, x, z, y)


def run_round(
    amps: np.ndarray,
    model: LayeredModel,
    cfg: ProtocolConfig,
    rng: np.random.Generator,
) -> list[tuple[int, int]]:
    """One round, in place: layers in order, terms ascending within a layer;
    a 1-outcome triggers the term's correction immediately.  Returns the
    (layer, term_index) list of 1-outcomes."""
    rt = _runtime(model)
    events: list[tuple[int, int]] = []
    n_sites = model.basis.n_sites
    for layer_idx, layer in enumerate(rt.layer_terms):
        for ti in layer:
            kern = rt.kernels[ti]
            c, y = kern.coefficients(amps)
            p1 = float(np.sum(np.abs(c) ** 2))
            if rng.random() < p1:
                kern.collapse(amps, 1)
                events.append((layer_idx, ti))
                if cfg.correction_mode == "deterministic":
                    pos, phases = rt.corrections[ti]
                    if pos is None:
                        amps *= phases
                    else:
                        new = np.zeros_like(amps)
                        new[pos] = phases * amps
                        amps[:] = new
                elif cfg.correction_mode == "random_pauli":
                    pauli = _random_pauli(model, model.terms[ti].support, rng)
                    amps[:] = apply_pauli(State(amps.copy(), model.basis), pauli).amps
                # measurement_only: no feedback
            else:
                proj = np.einsum("ir,ir->i", c[kern.gid, :], kern.V_loc)
                amps[kern.order] = (y - proj) / np.sqrt(max(1.0 - p1, 1e-300))
        if cfg.dephasing_p > 0.0:
            flips = rng.random(n_sites) < cfg.dephasing_p
            if np.any(flips):
                par = rt.bits[:, flips].sum(axis=1) % 2
                amps[par == 1] *= -1.0
    return events


def run_trajectory(
    model: LayeredModel,
    cfg: ProtocolConfig,
    seed,
    init: np.ndarray | None = None,
) -> TrajectoryRecord:
    """Full trajectory with deterministic replay under an identical seed."""
    if isinstance(seed, np.random.SeedSequence):
        seed_seq = seed
        seed_label = seed.entropy if isinstance(seed.entropy, int) else 0
    else:
        seed_seq = np.random.SeedSequence(seed)
        seed_label = int(seed)
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    rt = _runtime(model)
    amps = np.ascontiguousarray(
        init if init is not None else model.initial_state, dtype=complex
    ).copy()
    if amps.shape != (model.basis.size,):
        raise BasisMismatchError("initial state does not match the model basis")

    t_points = [0]
    energies = [float(np.real(np.vdot(amps, rt.H @ amps)))]
    infids = [
        1.0 - float(np.abs(np.vdot(rt.ground, amps)) ** 2) if rt.ground is not None else np.nan
    ]
    cum_hits = [0]
    hit_events: list[tuple[int, int, int]] = []
    reset_rounds: list[int] = []
    clean_streak = 0
    converged = False
    rounds_run = 0
    for t in range(1, cfg.max_rounds + 1):
        events = run_round(amps, model, cfg, rng)
        rounds_run = t
        if events:
            clean_streak = 0
            reset_rounds.append(t)
            for layer_idx, ti in events:
                hit_events.append((t, layer_idx, ti))
        else:
            clean_streak += 1
        if t % cfg.record_every == 0:
            t_points.append(t)
            energies.append(float(np.real(np.vdot(amps, rt.H @ amps))))
            infids.append(
                1.0 - float(np.abs(np.vdot(rt.ground, amps)) ** 2)
                if rt.ground is not None
                else np.nan
            )
            cum_hits.append(len(hit_events))
        if cfg.stop_clean_rounds and clean_streak >= cfg.stop_clean_rounds:
            converged = True
            break
    gaps = []
    prev = 0
    for r in reset_rounds:
        gaps.append(r - prev)
        prev = r
    return TrajectoryRecord(
        seed=seed_label,
        rounds_run=rounds_run,
        converged=converged,
        t=np.asarray(t_points),
        energies=np.asarray(energies),
        infidelities=np.asarray(infids),
        cum_hits=np.asarray(cum_hits),
        hit_events=hit_events,
        reset_gaps=gaps,
    )


@dataclass
class EnsembleSummary:
    n_trajectories: int
    t: np.ndarray
    mean_energy: np.ndarray
    sem_energy: np.ndarray
    mean_infidelity: np.ndarray
    sem_infidelity: np.ndarray
    n_alive: np.ndarray
    acceptance_rate: float
    convergence_times: np.ndarray
    total_hits: np.ndarray
    n_resets: np.ndarray
    master_seed: int = 0
    postselect_threshold: int | None = None
    # unconditional means (equal to the above when no postselection is active)
    mean_energy_all: np.ndarray | None = None
    mean_infidelity_all: np.ndarray | None = None
    # per-trajectory means over the last TAIL_RECORDS record points
    tail_energy: np.ndarray | None = None
    tail_infidelity: np.ndarray | None = None


def trajectory_seed(master_seed: int, i: int) -> np.random.SeedSequence:
    """Stable per-trajectory seed stream: hash of (master_seed, i)."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(i,))


_FORK_STATE: dict = {}


def _fork_init(model, cfg, master_seed, init):
    _FORK_STATE["args"] = (model, cfg, master_seed, init)


def _fork_worker(i):
    model, cfg, master_seed, init = _FORK_STATE["args"]
    return run_trajectory(model, cfg, trajectory_seed(master_seed, i), init)


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def run_ensemble(
    model: LayeredModel,
    cfg: ProtocolConfig,
    n_traj: int,
    master_seed: int,
    init: np.ndarray | None = None,
    n_workers: int | None = None,
    keep_records: bool = False,
) -> EnsembleSummary | tuple[EnsembleSummary, list[TrajectoryRecord]]:
    """Independent trajectories, seeded by stable_hash(master_seed, i); the
    aggregation is associative and reduced in trajectory order, so the result
    is independent of the worker count."""
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    workers = n_workers if n_workers is not None else default_workers()
    workers = min(workers, n_traj)
    if workers <= 1:
        records = [
            run_trajectory(model, cfg, trajectory_seed(master_seed, i), init)
            for i in range(n_traj)
        ]
    else:
        _runtime(model)  # build caches once; forked workers inherit them
        ctx = get_context("fork")
        with ctx.Pool(
            processes=workers, initializer=_fork_init, initargs=(model, cfg, master_seed, init)
        ) as pool:
            records = list(pool.map(_fork_worker, range(n_traj), chunksize=max(1, n_traj // (workers * 8))))
    summary = summarize(records, cfg, master_seed)
    if keep_records:
        return summary, records
    return summary


def postselect_threshold(total_hits: np.ndarray, target_rate: float) -> int:
    """Smallest hit budget whose acceptance rate reaches the target."""
    total_hits = np.asarray(total_hits)
    for k in range(int(total_hits.max()) + 1):
        if np.mean(total_hits <= k) >= target_rate:
            return k
    return int(total_hits.max())


def summarize(
    records: list[TrajectoryRecord], cfg: ProtocolConfig, master_seed: int = 0
) -> EnsembleSummary:
    n = len(records)
    # records may stop early (converged); pad series by holding the last value
    # (a converged trajectory keeps evolving reset-free; holding the recorded
    # tail is only used when stop_clean_rounds > 0)
    max_len = max(r.t.size for r in records)
    t = max(records, key=lambda r: r.t.size).t
    E = np.empty((n, max_len))
    F = np.empty((n, max_len))
    CH = np.zeros((n, max_len), dtype=np.int64)
    for i, r in enumerate(records):
        m = r.t.size
        E[i, :m] = r.energies
        F[i, :m] = r.infidelities
        CH[i, :m] = r.cum_hits
        if m < max_len:
            E[i, m:] = r.energies[-1]
            F[i, m:] = r.infidelities[-1]
            CH[i, m:] = r.cum_hits[-1]
    total_hits = np.array([r.total_hits for r in records])
    n_resets = np.array([r.n_reset_rounds for r in records])
    threshold = cfg.postselect_max_hits
    if threshold is not None:
        alive = CH <= threshold
        accepted = total_hits <= threshold
        for r, a in zip(records, accepted):
            r.accepted = bool(a)
        n_alive = alive.sum(axis=0)
        with np.errstate(invalid="ignore"):
            mean_e = np.where(n_alive > 0, np.sum(E * alive, axis=0) / np.maximum(n_alive, 1), np.nan)
            mean_f = np.where(n_alive > 0, np.sum(F * alive, axis=0) / np.maximum(n_alive, 1), np.nan)
            var_e = np.sum((E - mean_e) ** 2 * alive, axis=0) / np.maximum(n_alive, 1)
            var_f = np.sum((F - mean_f) ** 2 * alive, axis=0) / np.maximum(n_alive, 1)
            sem_e = np.sqrt(var_e / np.maximum(n_alive, 1))
            sem_f = np.sqrt(var_f / np.maximum(n_alive, 1))
        rate = float(np.mean(accepted))
    else:
        n_alive = np.full(max_len, n)
        mean_e = E.mean(axis=0)
        mean_f = F.mean(axis=0)
        sem_e = E.std(axis=0) / np.sqrt(n)
        sem_f = F.std(axis=0) / np.sqrt(n)
        rate = 1.0
    conv = np.array([r.rounds_run for r in records if r.converged])
    tail = max(1, min(TAIL_RECORDS, max_len // 4))
    return EnsembleSummary(
        n_trajectories=n,
        t=t,
        mean_energy=mean_e,
        sem_energy=sem_e,
        mean_infidelity=mean_f,
        sem_infidelity=sem_f,
        n_alive=np.asarray(n_alive),
        acceptance_rate=rate,
        convergence_times=conv,
        total_hits=total_hits,
        n_resets=n_resets,
        master_seed=master_seed,
        postselect_threshold=threshold,
        mean_energy_all=E.mean(axis=0),
        mean_infidelity_all=F.mean(axis=0),
        tail_energy=E[:, -tail:].mean(axis=1),
        tail_infidelity=F[:, -tail:].mean(axis=1),
    )


# ---------------------------------------------------------------------------
# exact channel oracle

@dataclass
class ChannelSeries:
    t: np.ndarray
    ground_overlap: np.ndarray
    energy: np.ndarray


def ground_manifold(model: LayeredModel, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis (columns) of the zero-energy manifold."""
    H = hamiltonian(model).toarray()
    evals, evecs = np.linalg.eigh(H)
    return np.ascontiguousarray(evecs[:, evals < tol])


def evolve_channel_exact(
    model: LayeredModel,
    cfg: ProtocolConfig,
    n_rounds: int,
    rho0: np.ndarray | None = None,
    budget: int = CHANNEL_BUDGET,
) -> ChannelSeries:
    """Exact completely positive map of the protocol round applied to a
    density matrix over the sector (sum over all outcome branches)."""
    dim = model.basis.size
    if dim > budget:
        raise CapacityError(f"channel oracle dimension {dim} exceeds budget {budget}")
    rt = _runtime(model)
    if rho0 is None:
        v = np.ascontiguousarray(model.initial_state, dtype=complex)
        rho = np.outer(v, v.conj())
    else:
        rho = np.array(rho0, dtype=complex)
    V = ground_manifold(model)
    Hs = rt.H

    def overlap(r):
        return float(np.real(np.trace(V.conj().T @ r @ V)))

    def energy_of(r):
        return float(np.real(Hs.multiply(r.T).sum()))

    overlaps = [overlap(rho)]
    energies = [energy_of(rho)]
    for _ in range(n_rounds):
        rho = _channel_round(rho, model, cfg)
        overlaps.append(overlap(rho))
        energies.append(energy_of(rho))
    return ChannelSeries(
        t=np.arange(n_rounds + 1),
        ground_overlap=np.asarray(overlaps),
        energy=np.asarray(energies),
    )


def _project_columns(kern, R: np.ndarray) -> np.ndarray:
    """P @ R for a matrix R (kernel applied to each column)."""
    out = np.zeros_like(R)
    R2 = R[kern.order, :]
    proj = np.zeros_like(R2)
    for r in range(kern.V.shape[0]):
        contrib = R2 * kern.Vc_loc[:, r][:, None]
        c = np.add.reduceat(contrib, kern.starts, axis=0)
        proj += kern.V_loc[:, r][:, None] * c[kern.gid, :]
    out[kern.order, :] = proj
    return out


def _channel_round(rho: np.ndarray, model: LayeredModel, cfg: ProtocolConfig) -> np.ndarray:
    rt = _runtime(model)
    n_sites = model.basis.n_sites
    # keep the map exactly linear-CPTP on all of matrix space: using A^dag for
    # rho P is only valid on hermitian inputs and amplifies the anti-hermitian
    # roundoff component exponentially
    rho = 0.5 * (rho + rho.conj().T)
    for layer in rt.layer_terms:
        for ti in layer:
            kern = rt.kernels[ti]
            A = _project_columns(kern, rho)                      # P rho
            D = _project_columns(kern, rho.conj().T).conj().T    # rho P
            B = _project_columns(kern, D)                        # P rho P
            survive = rho - A - D + B
            if cfg.correction_mode == "deterministic":
                pos, phases = rt.corrections[ti]
                if pos is None:
                    corr = (phases[:, None] * B) * phases.conj()[None, :]
                else:
                    corr = np.zeros_like(B)
                    corr[np.ix_(pos, pos)] = (phases[:, None] * B) * phases.conj()[None, :]
                rho = survive + corr
            elif cfg.correction_mode == "random_pauli":
                rho = survive + _pauli_twirl(kern, B, model)
            else:  # measurement-only
                rho = survive + B
        if cfg.dephasing_p > 0.0:
            p = cfg.dephasing_p
            bits = rt.bits
            for s in range(n_sites):
                z = 1.0 - 2.0 * bits[:, s].astype(float)
                rho = (1 - p) * rho + p * (z[:, None] * rho) * z[None, :]
    return rho


def _pauli_twirl(kern, B: np.ndarray, model: LayeredModel) -> np.ndarray:
    """(1/4^m) sum_sigma sigma B sigma over Pauli strings on the support:
    fully depolarizes the support factor (requires the full-space basis)."""
    m = len(kern.term.support)
    M = 1 << m
    dim = B.shape[0]
    G = kern.n_groups
    if G * M != dim:
        raise CapacityError(
            "random-Pauli channel twirl requires the full-space basis "
            "(incomplete support groups found)"
        )
    Bp = B[kern.order, :][:, kern.order].reshape(G, M, G, M)
    tr = np.trace(Bp, axis1=1, axis2=3) / M      # (G, G)
    out_p = np.zeros_like(Bp)
    for l in range(M):
        out_p[:, l, :, l] = tr
    out = np.zeros_like(B)
    inv = np.argsort(kern.order)
    flat = out_p.reshape(dim, dim)
    out = flat[inv, :][:, inv]
    return out
