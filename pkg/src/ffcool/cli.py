"""Command-line entry point: `run`, `gap`, `figure`, `markov`, `resetfree`.

Run configs are YAML with the RunConfig key layout; every run directory gets
a manifest.json (config echo, code version, seeds, wall time) from which the
run can be reproduced bit-exactly.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__, fits, markov
from .errors import CapacityError, NoCrossingError, WindowTooShortError
from .experiments import model_cached
from .figures import FIGURES, build_figure, resetfree_csv, write_series_csv, write_table_csv
from .models import BUILDERS
from .protocol import ProtocolConfig, run_ensemble
from .spectra import gap_for, gap_scaling_fit


@dataclass
class RunConfig:
    model: dict
    protocol: dict = field(default_factory=dict)
    ensemble: dict = field(default_factory=dict)
    analysis: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @staticmethod
    def load(path: str | Path) -> "RunConfig":
        text = Path(path).read_text()
        data = yaml.safe_load(text)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: config must be a mapping")
        if "config" in data and "model" not in data:   # manifest.json re-run
            data = data["config"]
        unknown = set(data) - {"model", "protocol", "ensemble", "analysis", "output"}
        if unknown:
            raise ValueError(f"{path}: unknown config sections {sorted(unknown)}")
        if "model" not in data or "name" not in data.get("model", {}):
            raise ValueError(f"{path}: config requires model.name")
        name = data["model"]["name"]
        if name not in BUILDERS:
            raise ValueError(
                f"{path}: unknown model {name!r}; valid names: {sorted(BUILDERS)}"
            )
        return RunConfig(**data)


def cmd_run(args) -> int:
    cfg = RunConfig.load(args.config)
    out = Path(args.out or cfg.output.get("directory", "out/run"))
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    params = dict(cfg.model.get("parameters", {}))
    model = model_cached(cfg.model["name"], **params)
    proto = ProtocolConfig(**cfg.protocol) if cfg.protocol else ProtocolConfig()
    n_traj = int(cfg.ensemble.get("n_trajectories", 100))
    seed = int(args.seed if args.seed is not None else cfg.ensemble.get("master_seed", 0))
    summary = run_ensemble(model, proto, n_traj, seed, n_workers=args.threads)
    write_series_csv(out / "series.csv", summary)

    gap = gap_for(model)
    reports: dict = {"gap": gap.to_dict()}
    analysis = cfg.analysis or {}
    beta_hint = float(analysis.get("beta_hint", 0.5))
    if analysis.get("fit_late_rate", True):
        try:
            reports["late_rate"] = fits.fit_late_rate(
                summary.t, summary.mean_energy, gap.gap, beta_hint
            ).to_dict()
        except WindowTooShortError as exc:
            reports["late_rate"] = {"error": str(exc)}
    if analysis.get("fit_early_exponent", False):
        try:
            reports["early_exponent"] = fits.fit_early_exponent(
                summary.t, summary.mean_energy, gap.gap
            ).to_dict()
        except WindowTooShortError as exc:
            reports["early_exponent"] = {"error": str(exc)}
    target = analysis.get("target_infidelity")
    if target is not None:
        try:
            reports["convergence_time"] = fits.convergence_time(
                summary.t, summary.mean_infidelity, float(target)
            )
        except NoCrossingError as exc:
            reports["convergence_time"] = {"error": str(exc)}
    (out / "fits.json").write_text(json.dumps(reports, indent=1, sort_keys=True) + "\n")

    manifest = {
        "config": {
            "model": cfg.model,
            "protocol": cfg.protocol,
            "ensemble": {"n_trajectories": n_traj, "master_seed": seed},
            "analysis": analysis,
            "output": {"directory": str(out)},
        },
        "version": __version__,
        "model_label": model.label(),
        "master_seed": seed,
        "acceptance_rate": summary.acceptance_rate,
        "wall_time_s": round(time.time() - t0, 3),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    print(f"wrote {out}/series.csv, fits.json, manifest.json")
    return 0


def _model_params_for_size(name: str, size: str) -> dict:
    if name == "heisenberg_single_particle":
        return {"dim": 1, "length": int(size)}
    if name == "heisenberg_2d":
        lx, ly = (int(x) for x in size.lower().split("x"))
        return {"lx": lx, "ly": ly}
    if name == "qdm":
        lx, ly = (int(x) for x in size.lower().split("x"))
        return {"lx_sites": lx, "ly_sites": ly}
    return {"n_sites": int(size)}


def cmd_gap(args) -> int:
    sizes = [s for s in args.sizes.split(",") if s]
    rows = []
    for size in sizes:
        params = _model_params_for_size(args.model, size)
        if args.model == "heisenberg_single_particle" and args.dim != 1:
            params["dim"] = args.dim
        model = model_cached(args.model, **params)
        res = gap_for(model)
        rows.append(
            {"model": model.label(), "size": size, "N": model.n_sites, **res.to_dict()}
        )
    out = {"model": args.model, "gaps": rows}
    if len(rows) >= 2:
        ns = [r["N"] for r in rows]
        gs = [r["gap"] for r in rows]
        dim = args.dim if args.model in ("heisenberg_2d", "qdm") or args.dim > 1 else 1
        if max(ns) / min(ns) >= 1.5 and len(rows) >= 2:
            out["z_fit"] = gap_scaling_fit(ns, gs, dim=dim).to_dict()
    text = json.dumps(out, indent=1, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_figure(args) -> int:
    out = Path(args.out or f"out/figures/{args.figure}")
    path = build_figure(args.figure, out, workers=args.threads)
    print(f"wrote {path}")
    return 0


def cmd_markov(args) -> int:
    if args.exact_length:
        params = markov.MarkovParams.exact(args.dim, args.exact_length)
    else:
        params = markov.MarkovParams.from_scaling(
            beta=args.beta, gap=args.gap, dim=args.dim, lam=args.lam
        )
    t_max = args.t_max or int(np.ceil(8.0 / params.gap))
    res = markov.simulate_markov(params, args.n_traj, t_max, args.seed)
    rd = markov.reset_distributions(params)
    out = Path(args.out or "out/markov")
    out.mkdir(parents=True, exist_ok=True)
    write_table_csv(
        out / "series.csv",
        {
            "t": res.t,
            "mean_E": res.mean_energy,
            "sem_E": res.sem_energy,
            "infidelity_bound": res.infidelity_bound,
        },
    )
    report = {
        "label": params.label,
        "beta": params.beta,
        "gap": params.gap,
        "lam": params.lam,
        "q_inf": rd.q_inf,
        "c_const": rd.c_const,
        "mean_n_resets": res.mean_n_resets,
        "mean_gap": rd.mean_gap,
        "n_traj": args.n_traj,
        "seed": args.seed,
    }
    (out / "markov.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    print(f"wrote {out}/series.csv, markov.json")
    return 0


def cmd_resetfree(args) -> int:
    params = _model_params_for_size(args.model, args.size)
    out = Path(args.out or "out/resetfree.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    resetfree_csv(args.model, params, args.rounds, out)
    print(f"wrote {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ffcool",
        description="Measurement-feedback cooling simulator for frustration-free models",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an ensemble from a YAML config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--threads", type=int, default=None)
    p_run.set_defaults(func=cmd_run)

    p_gap = sub.add_parser("gap", help="sector gaps via exact diagonalization")
    p_gap.add_argument("--model", required=True, choices=sorted(BUILDERS))
    p_gap.add_argument("--sizes", required=True, help="comma list, e.g. 8,12,16 or 4x4,4x6")
    p_gap.add_argument("--dim", type=int, default=1)
    p_gap.add_argument("--out", default=None)
    p_gap.set_defaults(func=cmd_gap)

    p_fig = sub.add_parser("figure", help="build a figure data bundle")
    p_fig.add_argument("figure", choices=sorted(FIGURES))
    p_fig.add_argument("--out", default=None)
    p_fig.add_argument("--threads", type=int, default=None)
    p_fig.set_defaults(func=cmd_figure)

    p_mk = sub.add_parser("markov", help="single-particle Markov process")
    p_mk.add_argument("--beta", type=float, default=0.5)
    p_mk.add_argument("--gap", type=float, default=0.01)
    p_mk.add_argument("--lam", type=float, default=1.0)
    p_mk.add_argument("--dim", type=int, default=1)
    p_mk.add_argument("--exact-length", type=int, default=0,
                      help="use the exact single-particle solution at this length")
    p_mk.add_argument("--n-traj", type=int, default=2000)
    p_mk.add_argument("--t-max", type=int, default=0)
    p_mk.add_argument("--seed", type=int, default=1)
    p_mk.add_argument("--out", default=None)
    p_mk.set_defaults(func=cmd_markov)

    p_rf = sub.add_parser("resetfree", help="reset-free projection evolution series")
    p_rf.add_argument("--model", required=True, choices=sorted(BUILDERS))
    p_rf.add_argument("--size", required=True)
    p_rf.add_argument("--rounds", type=int, default=200)
    p_rf.add_argument("--out", default=None)
    p_rf.set_defaults(func=cmd_resetfree)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
