"""Desk-scale counterparts of the paper-analogue figures: each builder runs
the required ensembles (through the cache), computes fits, and writes one CSV
per curve plus a figure.json bundle describing axes, per-curve transforms
(precomputed numeric multipliers) and reference lines.  All numerics happen
here; the plotting component only draws what the bundle specifies.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from . import __version__, fits, markov
from .experiments import ensemble_cached, gap_cached, model_cached, rounds_for_gap
from .protocol import EnsembleSummary, ProtocolConfig
from .resetfree import projection_energy_series

CSV_COLUMNS = ["t", "mean_energy", "sem_energy", "mean_infidelity", "sem_infidelity", "n_alive"]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_series_csv(path: Path, summary: EnsembleSummary) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for i in range(summary.t.size):
            row = [
                _fmt(summary.t[i]),
                _fmt(summary.mean_energy[i]),
                _fmt(summary.sem_energy[i]),
                _fmt(summary.mean_infidelity[i]),
                _fmt(summary.sem_infidelity[i]),
                _fmt(summary.n_alive[i]),
            ]
            fh.write(",".join(row) + "\n")


def write_table_csv(path: Path, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    n = len(next(iter(columns.values())))
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(columns[c][i]) for c in names) + "\n")


def _curve(csv, label, y_column, x_mult=1.0, y_mult=1.0, x_column="t", meta=None):
    c = {
        "csv": csv,
        "label": label,
        "x_column": x_column,
        "y_column": y_column,
        "x_mult": float(x_mult),
        "y_mult": float(y_mult),
    }
    if meta:
        c["meta"] = meta
    return c


def _ref_exp(amplitude, rate, label):
    return {"kind": "exp", "amplitude": float(amplitude), "rate": float(rate), "label": label}


def _ref_power(amplitude, exponent, label):
    return {"kind": "power", "amplitude": float(amplitude), "exponent": float(exponent), "label": label}


def _panel(name, curves, x_axis, y_axis, x_label, y_label, reference_lines=()):
    return {
        "name": name,
        "x": {"label": x_label, "axis": x_axis},
        "y": {"label": y_label, "axis": y_axis},
        "curves": curves,
        "reference_lines": list(reference_lines),
    }


def _write_bundle(out: Path, figure_id: str, panels: list, meta: dict) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    bundle = {
        "figure": figure_id,
        "version": __version__,
        "panels": panels,
        "meta": meta,
    }
    path = out / "figure.json"
    with open(path, "w") as fh:
        json.dump(bundle, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# canonical ensemble suites (shared with the acceptance tests)

def single_particle_suite(seed: int = 20240601, n_traj: int = 2000, workers=None):
    """d=1 single-particle ensembles at N in {16, 32, 64}, recorded per round."""
    out = {}
    for length in (16, 32, 64):
        gap = gap_cached("heisenberg_single_particle", dim=1, length=length)
        cfg = ProtocolConfig(max_rounds=rounds_for_gap(gap), record_every=1)
        s = ensemble_cached(
            "heisenberg_single_particle",
            {"dim": 1, "length": length},
            cfg,
            n_traj,
            seed + length,
            n_workers=workers,
        )
        out[length] = (s, gap)
    return out


def heisenberg_chain_suite(seed: int = 20240602, n_traj: int = 1200, workers=None):
    out = {}
    for n in (8, 12, 16):
        gap = gap_cached("heisenberg_chain", n_sites=n, periodic=True, n_up=n // 2)
        cfg = ProtocolConfig(max_rounds=rounds_for_gap(gap, units=4.2), record_every=1)
        s = ensemble_cached(
            "heisenberg_chain",
            {"n_sites": n, "periodic": True, "n_up": n // 2},
            cfg,
            n_traj,
            seed + n,
            n_workers=workers,
        )
        out[n] = (s, gap)
    return out


def fredkin_suite(seed: int = 20240603, n_traj: int = 1500, workers=None):
    out = {}
    for n in (8, 10, 12):
        gap = gap_cached("fredkin", n_sites=n)
        cfg = ProtocolConfig(max_rounds=rounds_for_gap(gap, units=4.2), record_every=1)
        s = ensemble_cached("fredkin", {"n_sites": n}, cfg, n_traj, seed + n, n_workers=workers)
        out[n] = (s, gap)
    return out


def qdm_suite(seed: int = 20240604, n_traj: int = 1500, workers=None):
    out = {}
    for lx, ly in ((2, 4), (4, 4), (4, 6)):
        gap = gap_cached("qdm", lx_sites=lx, ly_sites=ly)
        cfg = ProtocolConfig(max_rounds=rounds_for_gap(gap, units=4.2), record_every=1)
        s = ensemble_cached(
            "qdm", {"lx_sites": lx, "ly_sites": ly}, cfg, n_traj, seed + 10 * lx + ly,
            n_workers=workers,
        )
        out[(lx, ly)] = (s, gap)
    return out


def cluster_ising_suite(seed: int = 20240605, n_traj: int = 800, workers=None):
    out = {}
    for n in (9, 12):
        gap = gap_cached("cluster_ising", n_sites=n)
        cfg = ProtocolConfig(max_rounds=rounds_for_gap(gap, units=4.2), record_every=1)
        s = ensemble_cached("cluster_ising", {"n_sites": n}, cfg, n_traj, seed + n, n_workers=workers)
        out[n] = (s, gap)
    return out


def heisenberg_2d_suite(seed: int = 20240606, n_traj: int = 500, workers=None):
    out = {}
    for lx, ly in ((3, 4), (4, 4)):
        n_up = (lx * ly) // 2
        gap = gap_cached("heisenberg_2d", lx=lx, ly=ly, n_up=n_up)
        cfg = ProtocolConfig(max_rounds=rounds_for_gap(gap, units=4.2), record_every=1)
        s = ensemble_cached(
            "heisenberg_2d", {"lx": lx, "ly": ly, "n_up": n_up}, cfg, n_traj,
            seed + 10 * lx + ly, n_workers=workers,
        )
        out[(lx, ly)] = (s, gap)
    return out


# ---------------------------------------------------------------------------
# figure builders

def fig2(out: Path, workers=None, seed: int = 20240601) -> Path:
    suite = single_particle_suite(seed=seed, workers=workers)
    curves_e, curves_early, curves_eps, refs_e, refs_eps = [], [], [], [], []
    gaps = {}
    lam_fits = {}
    for length, (s, gap) in suite.items():
        name = f"single_particle_N{length}.csv"
        write_series_csv(out_path(out, name), s)
        gaps[length] = gap
        fit = fits.fit_late_rate(s.t, s.mean_energy, gap, beta_hint=0.5, sem=s.sem_energy)
        lam_fits[length] = fit.to_dict()
        curves_e.append(_curve(name, f"N={length}", "mean_energy", x_mult=gap, meta={"N": length, "gap": gap}))
        curves_early.append(_curve(name, f"N={length}", "mean_energy", meta={"N": length}))
        curves_eps.append(_curve(name, f"N={length}", "mean_infidelity", x_mult=gap, meta={"N": length}))
        refs_e.append(_ref_exp(fit.intercept, fit.lam, f"exp(-{fit.lam:.2f} Δt), N={length}"))
        refs_eps.append(_ref_exp(1.0, fit.lam, f"exp(-{fit.lam:.2f} Δt)"))
    panels = [
        _panel("energy", curves_e, "linear", "log", "Δ·t", "mean energy", refs_e),
        _panel(
            "early",
            curves_early,
            "log",
            "log",
            "t",
            "mean energy",
            [_ref_power(0.25, -0.5, "t^{-1/2}")],
        ),
        _panel("infidelity", curves_eps, "linear", "log", "Δ·t", "mean infidelity", refs_eps),
    ]
    return _write_bundle(out, "fig2", panels, {"gaps": {str(k): v for k, v in gaps.items()}, "fits": {str(k): v for k, v in lam_fits.items()}, "seed": seed})


def fig1b(out: Path, workers=None, target: float = 0.2) -> Path:
    families = {
        "single_particle_1d": single_particle_suite(workers=workers),
        "heisenberg_chain": heisenberg_chain_suite(workers=workers),
        "fredkin": fredkin_suite(workers=workers),
        "qdm": qdm_suite(workers=workers),
    }
    curves = []
    meta = {"target_infidelity": target, "t_c": {}}
    for fam, suite in families.items():
        ns, invgaps, tcs = [], [], []
        for key, (s, gap) in suite.items():
            try:
                tc = fits.convergence_time(s.t, s.mean_infidelity, target)
            except Exception:
                continue
            n = key if isinstance(key, int) else key[0] * key[1]
            ns.append(n)
            invgaps.append(1.0 / gap)
            tcs.append(tc)
        name = f"tc_{fam}.csv"
        write_table_csv(
            out_path(out, name),
            {"N": np.array(ns), "inv_gap": np.array(invgaps), "t_c": np.array(tcs)},
        )
        curves.append(_curve(name, fam, "t_c", x_column="inv_gap"))
        meta["t_c"][fam] = {str(n): t for n, t in zip(ns, tcs)}
    panels = [
        _panel("tc_vs_invgap", curves, "log", "log", "1/Δ", f"T_c(ε={target})")
    ]
    return _write_bundle(out, "fig1b", panels, meta)


def fig3a(out: Path, workers=None, seed: int = 20240602) -> Path:
    suite = heisenberg_chain_suite(seed=seed, workers=workers)
    collapse, early, infid, refs = [], [], [], []
    gaps, fit_meta = {}, {}
    for n, (s, gap) in suite.items():
        name = f"heisenberg_chain_N{n}.csv"
        write_series_csv(out_path(out, name), s)
        gaps[n] = gap
        fit = fits.fit_late_rate(s.t, s.mean_energy, gap, beta_hint=0.5, sem=s.sem_energy)
        fit_meta[n] = fit.to_dict()
        ymult = 1.0 / (n * np.sqrt(gap))
        collapse.append(
            _curve(name, f"N={n}", "mean_energy", x_mult=gap, y_mult=ymult, meta={"N": n, "gap": gap})
        )
        early.append(_curve(name, f"N={n}", "mean_energy", y_mult=1.0 / n, meta={"N": n}))
        infid.append(_curve(name, f"N={n}", "mean_infidelity", x_mult=gap, meta={"N": n}))
        refs.append(_ref_exp(fit.intercept / (n * np.sqrt(gap)), fit.lam, f"N={n} fit"))
    panels = [
        _panel("energy_collapse", collapse, "linear", "log", "Δ·t", "Ē/(N√Δ)", refs),
        _panel("early", early, "log", "log", "t", "Ē/N", [_ref_power(0.25, -0.5, "t^{-1/2}")]),
        _panel("infidelity", infid, "linear", "log", "Δ·t", "mean infidelity"),
    ]
    return _write_bundle(
        out, "fig3a", panels,
        {"gaps": {str(k): v for k, v in gaps.items()},
         "fits": {str(k): v for k, v in fit_meta.items()}, "seed": seed},
    )


def fig3b(out: Path, workers=None, seed: int = 20240606) -> Path:
    suite = heisenberg_2d_suite(seed=seed, workers=workers)
    curves = []
    gaps = {}
    for (lx, ly), (s, gap) in suite.items():
        n = lx * ly
        name = f"heisenberg_2d_{lx}x{ly}.csv"
        write_series_csv(out_path(out, name), s)
        gaps[f"{lx}x{ly}"] = gap
        logd = abs(np.log(gap))
        curves.append(
            _curve(
                name, f"{lx}x{ly}", "mean_energy",
                x_mult=gap / logd, y_mult=logd / n,
                meta={"N": n, "gap": gap},
            )
        )
    panels = [
        _panel("energy_log_collapse", curves, "linear", "log", "Δ·t/|logΔ|", "Ē·|logΔ|/N")
    ]
    return _write_bundle(out, "fig3b", panels, {"gaps": gaps, "seed": seed})


def fig4a(out: Path, workers=None, seed: int = 20240603) -> Path:
    suite = fredkin_suite(seed=seed, workers=workers)
    collapse, refs = [], []
    gaps, fit_meta = {}, {}
    for n, (s, gap) in suite.items():
        name = f"fredkin_N{n}.csv"
        write_series_csv(out_path(out, name), s)
        gaps[n] = gap
        fit = fits.fit_late_rate(s.t, s.mean_energy, gap, beta_hint=3.0 / 8.0, sem=s.sem_energy)
        fit_meta[n] = fit.to_dict()
        ymult = 1.0 / (n * gap ** (5.0 / 8.0))
        collapse.append(
            _curve(name, f"N={n}", "mean_energy", x_mult=gap, y_mult=ymult, meta={"N": n, "gap": gap})
        )
        refs.append(_ref_exp(fit.intercept * ymult, fit.lam, f"N={n} fit"))
    panels = [
        _panel("energy_collapse", collapse, "linear", "log", "Δ·t", "Ē/(N·Δ^{5/8})", refs)
    ]
    return _write_bundle(
        out, "fig4a", panels,
        {"gaps": {str(k): v for k, v in gaps.items()},
         "fits": {str(k): v for k, v in fit_meta.items()}, "seed": seed},
    )


def fig4b(out: Path, workers=None, seed: int = 20240604) -> Path:
    suite = qdm_suite(seed=seed, workers=workers)
    collapse, refs = [], []
    gaps, fit_meta = {}, {}
    for (lx, ly), (s, gap) in suite.items():
        n = lx * ly
        name = f"qdm_{lx}x{ly}.csv"
        write_series_csv(out_path(out, name), s)
        gaps[f"{lx}x{ly}"] = gap
        fit = fits.fit_late_rate(
            s.t, s.mean_energy, gap, beta_hint=0.5, sem=s.sem_energy, min_snr=2.0
        )
        fit_meta[f"{lx}x{ly}"] = fit.to_dict()
        ymult = 1.0 / (n * np.sqrt(gap))
        collapse.append(
            _curve(name, f"{lx}x{ly}", "mean_energy", x_mult=gap, y_mult=ymult,
                   meta={"N": n, "gap": gap})
        )
        refs.append(_ref_exp(fit.intercept * ymult, fit.lam, f"{lx}x{ly} fit"))
    panels = [
        _panel("energy_collapse", collapse, "linear", "log", "Δ·t", "Ē/(N√Δ)", refs)
    ]
    return _write_bundle(out, "fig4b", panels, {"gaps": gaps, "fits": fit_meta, "seed": seed})


def sm_markov(out: Path, workers=None, seed: int = 20240607) -> Path:
    # reset-gap distributions for d=1 (N=64) and d=2 (16x16), exact mode
    curves_qp = []
    meta = {}
    for dim, length, n_traj in ((1, 64, 20000), (2, 16, 20000)):
        params = markov.MarkovParams.exact(dim, length)
        gap = params.gap
        res = markov.simulate_markov(params, n_traj, int(np.ceil(20.0 / gap)), seed + dim)
        rd = markov.reset_distributions(params)
        total = max(int(res.gap_counts.sum()), 1)
        ages = np.arange(res.gap_counts.size)
        name = f"qprime_d{dim}.csv"
        write_table_csv(
            out_path(out, name),
            {
                "tau_layers": ages,
                "mc_density": res.gap_counts / total,
                "n": res.gap_counts,
            },
        )
        curves_qp.append(_curve(name, f"d={dim}", "mc_density", x_column="tau_layers"))
        meta[f"d{dim}"] = {
            "gap": gap,
            "mean_n_resets": res.mean_n_resets,
            "q_inf": rd.q_inf,
            "n_traj": n_traj,
        }
    # closed-form average energy curves for beta = 1/2, 1, 2
    t = np.unique(np.round(np.logspace(0, 4, 200))).astype(float)
    cols = {"t": t}
    for beta in (0.5, 1.0, 2.0):
        p = markov.MarkovParams.from_scaling(beta=beta, gap=0.01, lam=1.0)
        cols[f"closed_beta_{beta}"] = markov.closed_form_avg_energy(t, p)
    name = "closed_forms.csv"
    write_table_csv(out_path(out, name), cols)
    curves_cf = [
        _curve(name, f"β={b}", f"closed_beta_{b}", x_column="t") for b in (0.5, 1.0, 2.0)
    ]
    panels = [
        _panel("qprime", curves_qp, "log", "log", "gap τ (layers)", "Q'(τ)",
               [_ref_power(0.3, -1.5, "τ^{-3/2}"), _ref_power(0.3, -2.0, "τ^{-2}")]),
        _panel("closed_forms", curves_cf, "log", "log", "t", "Ē(t) (closed form)"),
    ]
    return _write_bundle(out, "sm-markov", panels, meta)


def sm_cluster(out: Path, workers=None, seed: int = 20240605) -> Path:
    suite = cluster_ising_suite(seed=seed, workers=workers)
    collapse, refs = [], []
    gaps, fit_meta = {}, {}
    for n, (s, gap) in suite.items():
        name = f"cluster_ising_N{n}.csv"
        write_series_csv(out_path(out, name), s)
        gaps[n] = gap
        fit = fits.fit_late_rate(s.t, s.mean_energy, gap, beta_hint=0.5, sem=s.sem_energy)
        fit_meta[n] = fit.to_dict()
        ymult = 1.0 / (n * np.sqrt(gap))
        collapse.append(
            _curve(name, f"N={n}", "mean_energy", x_mult=gap, y_mult=ymult, meta={"N": n, "gap": gap})
        )
        refs.append(_ref_exp(fit.intercept * ymult, fit.lam, f"N={n} fit"))
    panels = [
        _panel("energy_collapse", collapse, "linear", "log", "Δ·t", "Ē/(N√Δ)", refs)
    ]
    return _write_bundle(
        out, "sm-cluster", panels,
        {"gaps": {str(k): v for k, v in gaps.items()},
         "fits": {str(k): v for k, v in fit_meta.items()}, "seed": seed},
    )


def resetfree_csv(model_name: str, model_params: dict, n_rounds: int, path: Path) -> None:
    """CSV contract of the resetfree analysis: tau, norm, energy, overlap."""
    model = model_cached(model_name, **model_params)
    ser = projection_energy_series(model, model.initial_state, n_rounds)
    write_table_csv(
        path,
        {
            "tau": ser.tau,
            "norm": np.exp(ser.log_norm),
            "energy": ser.energy,
            "overlap": ser.overlap,
        },
    )


def out_path(out: Path, name: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    return out / name


FIGURES = {
    "fig1b": fig1b,
    "fig2": fig2,
    "fig3a": fig3a,
    "fig3b": fig3b,
    "fig4a": fig4a,
    "fig4b": fig4b,
    "sm-markov": sm_markov,
    "sm-cluster": sm_cluster,
}


def build_figure(figure_id: str, out_dir: Path, workers=None) -> Path:
    if figure_id not in FIGURES:
        raise ValueError(f"unknown figure id {figure_id!r}; valid: {sorted(FIGURES)}")
    t0 = time.time()
    path = FIGURES[figure_id](Path(out_dir), workers=workers)
    bundle = json.loads(Path(path).read_text())
    bundle["meta"]["wall_time_s"] = round(time.time() - t0, 3)
    Path(path).write_text(json.dumps(bundle, indent=1, sort_keys=True) + "\n")
    return path
