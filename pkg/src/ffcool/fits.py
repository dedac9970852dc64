"""Extraction of the universal parameters (lambda, beta, z, prefactors) from
ensemble series, and the scaling-collapse diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoCrossingError, WindowTooShortError


@dataclass
class RateFit:
    lam: float
    lam_err: float
    slope: float
    intercept: float           # exp(a): series value extrapolated to t = 0
    window: tuple[float, float]
    n_points: int
    r_squared: float

    def to_dict(self) -> dict:
        return {
            "lam": self.lam,
            "lam_err": self.lam_err,
            "slope": self.slope,
            "intercept": self.intercept,
            "window": list(self.window),
            "n_points": self.n_points,
            "r_squared": self.r_squared,
        }


@dataclass
class ExponentFit:
    exponent: float
    exponent_err: float
    window: tuple[float, float]
    n_points: int
    r_squared: float
    inconclusive: bool = False

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "exponent_err": self.exponent_err,
            "window": list(self.window),
            "n_points": self.n_points,
            "r_squared": self.r_squared,
            "inconclusive": self.inconclusive,
        }


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """Least squares y = a + b x; returns (b, a, b_err, R^2)."""
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    yhat = A @ coef
    resid = y - yhat
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    n = len(x)
    b_err = 0.0
    if n > 2:
        s2 = ss_res / (n - 2)
        cov = s2 * np.linalg.inv(A.T @ A)
        b_err = float(np.sqrt(cov[0, 0]))
    return float(coef[0]), float(coef[1]), b_err, r2


def fit_late_rate(
    t: np.ndarray,
    series: np.ndarray,
    gap: float,
    beta_hint: float = 0.5,
    window: tuple[float, float] | None = None,
    sem: np.ndarray | None = None,
    min_snr: float = 3.0,
) -> RateFit:
    """lambda from the exponential tail: linear fit of log(series) over
    t in [1/gap, min(3/gap, last positive)]; lambda = -slope / gap^{max(1,beta)}
    (for beta = 1 the rate carries the |log gap| correction).

    When standard errors are supplied, bins whose mean falls below
    min_snr * sem are dropped: once the ensemble has depleted (only a few
    unconverged trajectories left), the mean collapses much faster than
    the true rate and would poison the fit."""
    t = np.asarray(t, dtype=float)
    series = np.asarray(series, dtype=float)
    lo = window[0] if window else 1.0 / gap
    hi = window[1] if window else 3.0 / gap
    sel = (t >= lo) & (t <= hi) & (series > 0)
    if sem is not None:
        # truncate at the FIRST noise-floor bin: after ensemble depletion the
        # series can re-stabilize many decades below the true decay curve
        good = series > min_snr * np.asarray(sem, dtype=float)
        idx = np.flatnonzero(sel)
        bad = idx[~good[idx]]
        if bad.size:
            sel[bad[0] :] = False
    if sel.sum() < 4:
        raise WindowTooShortError(
            f"late-rate window [{lo:.1f}, {hi:.1f}] holds {int(sel.sum())} positive points"
        )
    x, y = t[sel], np.log(series[sel])
    slope, a, slope_err, r2 = _linear_fit(x, y)
    if abs(beta_hint - 1.0) < 1e-12:
        denom = gap / abs(np.log(gap))
    else:
        denom = gap ** max(1.0, beta_hint)
    return RateFit(
        lam=-slope / denom,
        lam_err=slope_err / denom,
        slope=slope,
        intercept=float(np.exp(a)),
        window=(float(x.min()), float(x.max())),
        n_points=int(sel.sum()),
        r_squared=r2,
    )


def fit_early_exponent(
    t: np.ndarray,
    series: np.ndarray,
    gap: float,
    window: tuple[float, float] | None = None,
    min_points: int = 8,
) -> ExponentFit:
    """Log-log slope over t in [5, 0.3/gap]."""
    t = np.asarray(t, dtype=float)
    series = np.asarray(series, dtype=float)
    lo = window[0] if window else 5.0
    hi = window[1] if window else 0.3 / gap
    sel = (t >= lo) & (t <= hi) & (series > 0)
    if sel.sum() < min_points:
        raise WindowTooShortError(
            f"early window [{lo:.1f}, {hi:.1f}] holds {int(sel.sum())} points (< {min_points})"
        )
    x, y = np.log(t[sel]), np.log(series[sel])
    slope, _, slope_err, r2 = _linear_fit(x, y)
    # a stable algebraic regime has the same slope in both half-windows;
    # drifting slopes (e.g. an exponential seen through log-log) are flagged
    mid = x.size // 2
    s_lo, *_ = _linear_fit(x[:mid], y[:mid])
    s_hi, *_ = _linear_fit(x[mid:], y[mid:])
    drift = abs(s_hi - s_lo)
    return ExponentFit(
        exponent=slope,
        exponent_err=slope_err,
        window=(float(t[sel].min()), float(t[sel].max())),
        n_points=int(sel.sum()),
        r_squared=r2,
        inconclusive=bool(r2 < 0.9 or drift > max(0.3, 4 * slope_err)),
    )


@dataclass
class PrefactorFit:
    exponent: float            # slope of log(intercept) vs log(N)
    exponent_err: float
    r_squared: float
    collapse_r_squared: float  # log(intercept) regressed on log(N sqrt(gap))
    sizes: np.ndarray
    intercepts: np.ndarray

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "exponent_err": self.exponent_err,
            "r_squared": self.r_squared,
            "collapse_r_squared": self.collapse_r_squared,
            "sizes": self.sizes.tolist(),
            "intercepts": self.intercepts.tolist(),
        }


def fit_prefactor(sizes, intercepts, gaps=None) -> PrefactorFit:
    """Scaling of the late-time intercepts f(N): log f on log N, and the
    quality of the N*sqrt(gap) collapse when gaps are supplied."""
    sizes = np.asarray(sizes, dtype=float)
    intercepts = np.asarray(intercepts, dtype=float)
    if sizes.size < 3:
        raise WindowTooShortError("need at least 3 sizes for a prefactor fit")
    slope, _, err, r2 = _linear_fit(np.log(sizes), np.log(intercepts))
    collapse_r2 = np.nan
    if gaps is not None:
        gaps = np.asarray(gaps, dtype=float)
        s2, _, _, collapse_r2 = _linear_fit(
            np.log(sizes * np.sqrt(gaps)), np.log(intercepts)
        )
    return PrefactorFit(
        exponent=slope,
        exponent_err=err,
        r_squared=r2,
        collapse_r_squared=collapse_r2,
        sizes=sizes,
        intercepts=intercepts,
    )


def convergence_time(t: np.ndarray, infidelity: np.ndarray, target: float) -> float:
    """First time the series crosses the target, linearly interpolated."""
    t = np.asarray(t, dtype=float)
    e = np.asarray(infidelity, dtype=float)
    if e[0] <= target:
        return 0.0
    below = np.flatnonzero(e <= target)
    if below.size == 0:
        raise NoCrossingError(f"series never reaches {target}")
    i = below[0]
    t0, t1 = t[i - 1], t[i]
    e0, e1 = e[i - 1], e[i]
    if e0 == e1:
        return float(t1)
    return float(t0 + (e0 - target) * (t1 - t0) / (e0 - e1))


@dataclass
class CollapseCheck:
    spread: float              # max pointwise relative spread over the window
    window: tuple[float, float]
    n_grid: int
    residual: float            # rms log-deviation from the pooled mean curve


def collapse_spread(
    curves: list[tuple[np.ndarray, np.ndarray]],
    window: tuple[float, float] = (1.0, 3.0),
    n_grid: int = 40,
) -> CollapseCheck:
    """Pointwise spread of transformed curves (x = gap*t, y = scaled series)
    on the common window: max over the grid of (max - min)/mean."""
    lo = max(window[0], max(c[0][c[1] > 0].min() for c in curves))
    hi = min(window[1], min(c[0][c[1] > 0].max() for c in curves))
    if hi <= lo:
        raise WindowTooShortError("collapse curves share no overlap window")
    grid = np.linspace(lo, hi, n_grid)
    vals = []
    for x, y in curves:
        ok = y > 0
        vals.append(np.interp(grid, x[ok], y[ok]))
    V = np.vstack(vals)
    spread = float(np.max((V.max(axis=0) - V.min(axis=0)) / V.mean(axis=0)))
    logs = np.log(V)
    residual = float(np.sqrt(np.mean((logs - logs.mean(axis=0)) ** 2)))
    return CollapseCheck(spread=spread, window=(lo, hi), n_grid=n_grid, residual=residual)
