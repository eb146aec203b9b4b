"""Three-state summation of nonnegative series.

A partial sum is reported as ``finite``, ``infinite`` or ``inconclusive``;
raw floating overflow never escapes.  Divergence is declared when partial
sums exceed ``overflow`` or the term ratio stays at or above one for
``ratio_run`` consecutive terms.  Convergence of an infinite series is
declared when the recent term ratios are bounded below one and the implied
geometric remainder is negligible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

FINITE = "finite"
INFINITE = "infinite"
INCONCLUSIVE = "inconclusive"

OVERFLOW = 1e12
RATIO_RUN = 50
REL_TOL = 1e-15
_WINDOW = 8


@dataclass(frozen=True)
class SeriesResult:
    value: float
    status: str
    n_terms: int

    @property
    def is_finite(self) -> bool:
        return self.status == FINITE

    def scaled(self, factor: float) -> "SeriesResult":
        if self.status != FINITE:
            return self
        return SeriesResult(self.value * factor, self.status, self.n_terms)

    def to_json(self):
        """Finite value, the string ``"inf"``, or ``None`` for inconclusive."""
        if self.status == FINITE:
            return self.value
        return "inf" if self.status == INFINITE else None


def finite_sum(terms: Iterable[float]) -> SeriesResult:
    """Exact (finitely supported) sum; only genuine float overflow gives ``inf``."""
    terms = list(terms)
    try:
        total = math.fsum(terms) if terms else 0.0
    except OverflowError:
        total = math.inf
    status = FINITE if math.isfinite(total) else INFINITE
    return SeriesResult(total if status == FINITE else math.inf, status, len(terms))


def open_sum(
    terms: Iterable[float],
    *,
    overflow: float = OVERFLOW,
    ratio_run: int = RATIO_RUN,
    rel_tol: float = REL_TOL,
) -> SeriesResult:
    """Sum the leading terms of an infinite nonnegative series with verdicts."""
    acc: list[float] = []
    partial = 0.0
    run = 0
    ratios: list[float] = []
    prev = None
    for t in terms:
        t = float(t)
        if t < 0 or math.isnan(t):
            raise ValueError("open_sum expects nonnegative terms")
        if math.isinf(t):
            return SeriesResult(math.inf, INFINITE, len(acc) + 1)
        acc.append(t)
        partial += t
        if partial > overflow:
            return SeriesResult(math.inf, INFINITE, len(acc))
        if prev is not None and prev > 0:
            ratio = t / prev
            ratios.append(ratio)
            run = run + 1 if ratio >= 1.0 else 0
            if run >= ratio_run:
                return SeriesResult(math.inf, INFINITE, len(acc))
            recent = ratios[-_WINDOW:]
            if len(recent) == _WINDOW:
                rho = max(recent)
                if rho < 1.0 and t * rho / (1.0 - rho) <= rel_tol * partial:
                    return SeriesResult(math.fsum(acc), FINITE, len(acc))
        elif prev == 0.0 and t == 0.0 and len(acc) >= _WINDOW and not any(acc[-_WINDOW:]):
            return SeriesResult(math.fsum(acc), FINITE, len(acc))
        prev = t
    return SeriesResult(math.fsum(acc), INCONCLUSIVE, len(acc))
