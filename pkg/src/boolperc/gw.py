"""Dominating Galton-Watson offspring law and tree simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import HorizonError, SupercriticalError
from .graph import GrowthProfile
from .laws import RadiusLaw, check_probability
from .stats import TailCurve

MAX_GENERATIONS = 10_000
MAX_POPULATION = 1_000_000


@dataclass(frozen=True)
class XiLaw:
    """``xi = sum_r c_r * Binomial(m_r, f_r)`` with ``f_r = 1 - q_{r-1}``."""

    c: np.ndarray
    m: np.ndarray
    f: np.ndarray

    @classmethod
    def build(cls, profile: GrowthProfile, law: RadiusLaw, p: float) -> "XiLaw":
        p = check_probability(p)
        top = law.support_max
        if top is None:
            raise HorizonError("the offspring law needs a capped radius law")
        if top > profile.r_max:
            raise HorizonError(f"law support reaches {top} beyond profile r_max={profile.r_max}")
        radii = range(1, top + 1)
        return cls(
            np.array([profile.ball_size(r) for r in radii], dtype=np.int64),
            np.array([profile.slot_count(r) for r in radii], dtype=np.int64),
            np.array([law.one_minus_q(p, r - 1) for r in radii]),
        )

    @property
    def mean(self) -> float:
        return math.fsum((self.c * self.m * self.f).tolist())

    @property
    def variance(self) -> float:
        return math.fsum((self.c**2 * self.m * self.f * (1 - self.f)).tolist())

    def log_mgf(self, t: float) -> float:
        """Exact ``log E[exp(t xi)]``."""
        return math.fsum(
            float(m) * math.log1p(math.expm1(t * float(c)) * f) for c, m, f in zip(self.c, self.m, self.f)
        )

    def sample(self, rng: np.random.Generator, size: int | tuple = 1) -> np.ndarray:
        out = np.zeros(size, dtype=np.int64)
        for c, m, f in zip(self.c, self.m, self.f):
            out += c * rng.binomial(m, f, size=size)
        return out

    def sample_sum(self, rng: np.random.Generator, parents: int) -> int:
        """Total offspring of ``parents`` independent individuals."""
        if parents <= 0:
            return 0
        return int(sum(int(c) * int(rng.binomial(int(m) * parents, f)) for c, m, f in zip(self.c, self.m, self.f)))


def sample_xi(xi: XiLaw, n: int, rng: np.random.Generator) -> np.ndarray:
    return xi.sample(rng, n)


@dataclass(frozen=True)
class GwRun:
    generations: tuple[int, ...]
    total: int
    extinct: bool
    truncated: bool


def run_gw(
    xi: XiLaw,
    rng: np.random.Generator,
    *,
    max_generations: int = MAX_GENERATIONS,
    max_population: int = MAX_POPULATION,
) -> GwRun:
    """One tree from a single ancestor: ``Z_0 = 1``; the total counts the ancestor."""
    if max_generations < 1 or max_population < 1:
        raise ValueError("budgets must be positive")
    z = 1
    gens = [z]
    total = z
    while z > 0:
        if len(gens) > max_generations or total > max_population:
            return GwRun(tuple(gens), total, False, True)
        z = xi.sample_sum(rng, z)
        gens.append(z)
        total += z
    return GwRun(tuple(gens), total, True, False)


def total_size_tail(
    xi: XiLaw, n_grid, n_trials: int, rng: np.random.Generator, **budget
) -> tuple[TailCurve, np.ndarray, np.ndarray]:
    """Empirical ``P(total > n)`` with Wilson intervals.

    Trees that hit the budget count as exceeding every grid point.  Returns
    the curve plus the raw totals and truncation flags.
    """
    if xi.mean >= 1.0:
        raise SupercriticalError(f"offspring mean {xi.mean:.6g} >= 1; total progeny tail is not defined")
    sizes = np.empty(n_trials, dtype=np.int64)
    trunc = np.zeros(n_trials, dtype=bool)
    for i in range(n_trials):
        run = run_gw(xi, rng, **budget)
        sizes[i] = run.total
        trunc[i] = run.truncated
    return TailCurve.from_samples(sizes, n_grid, trunc), sizes, trunc
