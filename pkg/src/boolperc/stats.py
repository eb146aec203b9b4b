"""Confidence intervals, envelopes and log-linear tail fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

CONFIDENCE = 0.95
BOOTSTRAP_RESAMPLES = 1000


def wilson(successes: int, trials: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    if trials <= 0:
        return (0.0, 1.0)
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return (float(ci.low), float(ci.high))


def dkw_epsilon(n: int, alpha: float = 0.01) -> float:
    """Half-width of the two-sided DKW band for an empirical CDF of ``n`` draws."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def standard_error(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.inf


def exceed_counts(sizes, grid, censored_mask=None) -> tuple[np.ndarray, int]:
    """``#{i : sizes[i] > n}`` per grid point, censored samples counted everywhere."""
    sizes = np.asarray(sizes)
    cens = np.zeros(sizes.shape, dtype=bool) if censored_mask is None else np.asarray(censored_mask, dtype=bool)
    kept = np.sort(sizes[~cens])
    n_cens = int(cens.sum())
    return kept.size - np.searchsorted(kept, np.asarray(grid), side="right") + n_cens, n_cens


@dataclass
class TailCurve:
    """Empirical ``P(S > n)`` on a grid, with exceed counts kept for refitting."""

    n: np.ndarray
    exceed: np.ndarray
    trials: int
    censored: np.ndarray
    ci_low: np.ndarray = field(init=False)
    ci_high: np.ndarray = field(init=False)

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=np.int64)
        self.exceed = np.asarray(self.exceed, dtype=np.int64)
        self.censored = np.broadcast_to(np.asarray(self.censored, dtype=np.int64), self.n.shape).copy()
        cis = [wilson(k, self.trials) for k in self.exceed.tolist()]
        self.ci_low = np.array([c[0] for c in cis])
        self.ci_high = np.array([c[1] for c in cis])

    @property
    def estimate(self) -> np.ndarray:
        return self.exceed / self.trials if self.trials else np.zeros(self.n.shape)

    @classmethod
    def from_samples(cls, sizes: np.ndarray, n_grid, censored_mask: np.ndarray | None = None) -> "TailCurve":
        """Censored samples count as exceeding every grid point."""
        grid = np.asarray(list(n_grid), dtype=np.int64)
        exceed, n_cens = exceed_counts(sizes, grid, censored_mask)
        return cls(grid, exceed, int(np.size(sizes)), n_cens)

    def rows(self):
        for i in range(self.n.size):
            yield (int(self.n[i]), float(self.estimate[i]), float(self.ci_low[i]), float(self.ci_high[i]), int(self.censored[i]))


@dataclass(frozen=True)
class DecayFit:
    lam: float
    slope: float
    intercept: float
    r2: float
    n_points: int
    decaying: bool
    ci: tuple[float, float] | None = None
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "lambda_hat": self.lam,
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "n_points": self.n_points,
            "decaying": self.decaying,
            "slope_ci_low": None if self.ci is None else self.ci[0],
            "slope_ci_high": None if self.ci is None else self.ci[1],
            "notes": list(self.notes),
        }


def _wls(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[float, float, float]:
    W = w.sum()
    xm = (w * x).sum() / W
    ym = (w * y).sum() / W
    sxx = (w * (x - xm) ** 2).sum()
    if sxx == 0:
        raise ValueError("fit range has a single abscissa")
    slope = (w * (x - xm) * (y - ym)).sum() / sxx
    intercept = ym - slope * xm
    ss_tot = (w * (y - ym) ** 2).sum()
    ss_res = (w * (y - intercept - slope * x) ** 2).sum()
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def fit_log_linear(n, tail, weights=None, *, min_points: int = 5) -> DecayFit:
    """Weighted least squares of ``log tail`` on ``n`` over the positive entries."""
    n = np.asarray(n, dtype=float)
    tail = np.asarray(tail, dtype=float)
    keep = tail > 0
    if not keep.any():
        raise ValueError("tail is identically zero in the fit range; nothing to fit")
    if keep.sum() < min_points:
        raise ValueError(f"only {int(keep.sum())} positive tail points in range, need {min_points}")
    w = np.ones(keep.sum()) if weights is None else np.asarray(weights, dtype=float)[keep]
    y = np.log(tail[keep])
    if np.ptp(y) == 0:
        return DecayFit(0.0, 0.0, float(y[0]), 1.0, int(keep.sum()), False, notes=("flat tail",))
    slope, intercept, r2 = _wls(n[keep], y, w)
    return DecayFit(max(0.0, -slope), slope, intercept, r2, int(keep.sum()), slope < 0)


def fit_decay(
    curve: TailCurve,
    fit_range: tuple[int, int] | None = None,
    *,
    bootstrap_sizes: np.ndarray | None = None,
    bootstrap_censored: np.ndarray | None = None,
    confidence: float = 0.99,
    rng: np.random.Generator | None = None,
    resamples: int = BOOTSTRAP_RESAMPLES,
    max_censored_share: float = 0.5,
) -> DecayFit:
    """Decay rate from a tail curve.

    Points are weighted by the inverse delta-method variance of the log
    estimate, ``k / (1 - k/N)``.  Grid points where censored samples make up
    more than ``max_censored_share`` of the exceedances are refused.  With raw
    samples supplied a percentile bootstrap gives a CI for the slope.
    """
    sel = np.ones(curve.n.shape, dtype=bool)
    if fit_range is not None:
        sel = (curve.n >= fit_range[0]) & (curve.n <= fit_range[1])
    n, k = curve.n[sel], curve.exceed[sel]
    cens = curve.censored[sel]
    positive = k > 0
    if positive.any() and (cens[positive] > max_censored_share * k[positive]).any():
        raise ValueError("censored samples dominate part of the fit range; enlarge the window")
    N = curve.trials
    weights = np.where(k > 0, k / np.maximum(1.0 - k / N, 1.0 / N), 0.0)
    fit = fit_log_linear(n, k / N, weights)
    if bootstrap_sizes is None or not fit.decaying:
        return fit
    rng = rng if rng is not None else np.random.default_rng(0)
    sizes = np.asarray(bootstrap_sizes)
    cmask = None if bootstrap_censored is None else np.asarray(bootstrap_censored, dtype=bool)
    slopes = []
    for _ in range(resamples):
        idx = rng.integers(0, sizes.size, sizes.size)
        kb, _ = exceed_counts(sizes[idx], n, None if cmask is None else cmask[idx])
        if (kb > 0).sum() < 2:
            slopes.append(0.0)
            continue
        wb = np.where(kb > 0, kb / np.maximum(1.0 - kb / N, 1.0 / N), 0.0)
        keep = kb > 0
        try:
            slopes.append(_wls(n[keep].astype(float), np.log(kb[keep] / N), wb[keep])[0])
        except ValueError:
            slopes.append(0.0)
    a = (1.0 - confidence) / 2.0
    lo, hi = np.quantile(slopes, [a, 1.0 - a])
    return DecayFit(fit.lam, fit.slope, fit.intercept, fit.r2, fit.n_points, fit.decaying, (float(lo), float(hi)), fit.notes)
