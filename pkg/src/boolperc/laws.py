"""Radius laws on the positive integers and the derived activation sequences.

With activation probability ``p``, ``q_n = 1 - p * P(R > n)`` is the
probability that the effective radius ``sigma * R`` is at most ``n``.  The
point-process construction uses the level intensities
``lambda_n = log(q_n / q_{n-1})`` and their tail sums
``sum_{k >= r} lambda_k = -log q_{r-1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .exceptions import DirectSamplerRequired, LawError
from .series import SeriesResult, finite_sum, open_sum

PROB_TOL = 1e-12
DEFAULT_HORIZON = 100_000


def check_probability(p: float, name: str = "p") -> float:
    """Validate ``p`` into [0, 1], clamping rounding noise up to 1e-12."""
    p = float(p)
    if math.isnan(p) or p < -PROB_TOL or p > 1 + PROB_TOL:
        raise LawError(f"{name}={p} is not a probability")
    return min(max(p, 0.0), 1.0)


@dataclass(frozen=True)
class RadiusLaw:
    """Probability law of the radius on {1, 2, ...}.

    Build instances with the ``deterministic``, ``geometric``, ``zeta`` and
    ``table`` constructors.  A ``cap`` conditions the law on ``R <= cap``.
    """

    kind: str
    params: tuple[tuple[str, object], ...]
    cap: int | None = None
    _pmf: np.ndarray | None = field(default=None, repr=False, compare=False)
    _tail: np.ndarray | None = field(default=None, repr=False, compare=False)
    truncated_mass: float = 0.0

    # construction ---------------------------------------------------------

    @classmethod
    def deterministic(cls, k: int, cap: int | None = None) -> "RadiusLaw":
        k = int(k)
        if k < 1:
            raise LawError("deterministic radius must be >= 1")
        pmf = np.zeros(k)
        pmf[-1] = 1.0
        return cls._finite("deterministic", (("k", k),), pmf, cap)

    @classmethod
    def table(cls, pmf: Sequence[float], cap: int | None = None) -> "RadiusLaw":
        arr = np.asarray(pmf, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise LawError("table pmf must be a nonempty list")
        for i, v in enumerate(arr):
            if not math.isfinite(v) or v < 0:
                raise LawError(f"pmf[{i}]={v} is negative or not finite")
        total = math.fsum(arr)
        if abs(total - 1.0) > 1e-9:
            raise LawError(f"pmf sums to {total}, not 1")
        return cls._finite("table", (("pmf", tuple(float(v) for v in arr)),), arr / total, cap)

    @classmethod
    def geometric(cls, a: float, cap: int | None = None) -> "RadiusLaw":
        """``P(R > n) = a**n``, i.e. ``P(R = n) = (1 - a) a**(n-1)``."""
        a = float(a)
        if not 0 <= a < 1:
            raise LawError(f"geometric parameter a={a} must lie in [0, 1)")
        if cap is None:
            return cls("geometric", (("a", a),))
        n = np.arange(1, int(cap) + 1)
        return cls._finite("geometric", (("a", a),), (1 - a) * a ** (n - 1.0), cap, raw_tail=a ** int(cap))

    @classmethod
    def zeta(cls, s: float, cap: int | None = None) -> "RadiusLaw":
        """``P(R = n) = n**-s / zeta(s)`` for ``s > 1``."""
        s = float(s)
        if not s > 1:
            raise LawError(f"zeta exponent s={s} must exceed 1")
        if cap is None:
            return cls("zeta", (("s", s),))
        n = np.arange(1, int(cap) + 1, dtype=float)
        z = special.zeta(s, 1)
        return cls._finite("zeta", (("s", s),), n**-s / z, cap, raw_tail=special.zeta(s, int(cap) + 1) / z)

    @classmethod
    def from_dict(cls, spec: dict) -> "RadiusLaw":
        kind = spec.get("kind")
        cap = spec.get("cap")
        if kind == "deterministic":
            return cls.deterministic(spec["k"], cap)
        if kind == "geometric":
            return cls.geometric(spec["a"], cap)
        if kind == "zeta":
            return cls.zeta(spec["s"], cap)
        if kind == "table":
            return cls.table(spec["pmf"], cap)
        raise LawError(f"unknown law kind {kind!r}")

    @classmethod
    def _finite(cls, kind, params, pmf, cap, raw_tail: float = 0.0) -> "RadiusLaw":
        pmf = np.asarray(pmf, dtype=float)
        truncated = raw_tail
        if cap is not None:
            cap = int(cap)
            if cap < 1:
                raise LawError("cap must be >= 1")
            truncated += math.fsum(pmf[cap:])
            pmf = pmf[:cap]
            mass = math.fsum(pmf)
            if mass <= 0:
                raise LawError(f"cap={cap} leaves no probability mass")
            pmf = pmf / mass
        nz = np.nonzero(pmf)[0]
        pmf = pmf[: nz[-1] + 1]
        # tail[n] = P(R > n) for n = 0..len(pmf)
        tail = np.concatenate([[1.0], np.cumsum(pmf[::-1])[::-1][1:], [0.0]])
        return cls(kind, params, cap, pmf, tail, float(truncated))

    # structure --------------------------------------------------------------

    @property
    def finite_support(self) -> bool:
        return self._pmf is not None

    @property
    def support_max(self) -> int | None:
        """Largest radius with positive mass, ``None`` when unbounded."""
        return len(self._pmf) if self._pmf is not None else None

    def param(self, name: str):
        return dict(self.params)[name]

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for k, v in self.params:
            d[k] = list(v) if isinstance(v, tuple) else v
        if self.cap is not None:
            d["cap"] = self.cap
        return d

    # distribution -------------------------------------------------------------

    def pmf(self, n: int) -> float:
        n = int(n)
        if n < 1:
            return 0.0
        if self._pmf is not None:
            return float(self._pmf[n - 1]) if n <= len(self._pmf) else 0.0
        if self.kind == "geometric":
            a = self.param("a")
            return (1 - a) * a ** (n - 1)
        s = self.param("s")
        return n**-s / special.zeta(s, 1)

    def tail(self, n: int) -> float:
        """``P(R > n)``."""
        n = int(n)
        if n < 0:
            raise LawError("tail index must be >= 0")
        if n == 0:
            return 1.0
        if self._tail is not None:
            return float(self._tail[n]) if n < len(self._tail) else 0.0
        if self.kind == "geometric":
            return self.param("a") ** n
        s = self.param("s")
        return float(special.zeta(s, n + 1) / special.zeta(s, 1))

    def cdf_table(self, horizon: int) -> np.ndarray:
        """``P(R <= n)`` for ``n = 1..horizon`` (forced to 1 at the horizon)."""
        out = np.array([1.0 - self.tail(n) for n in range(1, horizon + 1)])
        out[-1] = 1.0
        return out

    def sample(self, u: np.ndarray, truncate: int | None = None) -> np.ndarray:
        """Inverse-CDF radii for uniforms ``u``; ``truncate`` applies ``min(R, truncate)``."""
        horizon = self.support_max
        if truncate is not None:
            horizon = truncate if horizon is None else min(horizon, truncate)
        if horizon is None:
            raise LawError("sampling an uncapped law needs a truncation radius")
        cdf = self.cdf_table(horizon)
        return np.searchsorted(cdf, u, side="right") + 1

    # activation sequences ----------------------------------------------------

    def one_minus_q(self, p: float, n: int) -> float:
        """``1 - q_n = p * P(R > n)``, without cancellation."""
        return check_probability(p) * self.tail(n)

    def q(self, p: float, n: int) -> float:
        return 1.0 - self.one_minus_q(p, n)

    def lambda_n(self, p: float, n: int) -> float:
        """Level intensity ``log(q_n / q_{n-1})`` for ``n >= 1``."""
        if n < 1:
            raise LawError("lambda_n is defined for n >= 1")
        p = check_probability(p)
        q_prev = 1.0 - p * self.tail(n - 1)
        if q_prev <= 0.0:
            raise DirectSamplerRequired(
                "q_{n-1} = 0 (p = 1): level intensities are infinite; use the direct sampler"
            )
        # q_n - q_{n-1} = p * P(R = n)
        return math.log1p(p * self.pmf(n) / q_prev)

    def tail_intensity(self, p: float, r: int) -> float:
        """``sum_{n >= r} lambda_n = -log q_{r-1}`` for ``r >= 1``."""
        if r < 1:
            raise LawError("tail_intensity is defined for r >= 1")
        x = check_probability(p) * self.tail(r - 1)
        if x >= 1.0:
            raise DirectSamplerRequired(
                "q_{r-1} = 0 (p = 1): tail intensity is infinite; use the direct sampler"
            )
        return -math.log1p(-x)

    # moments ----------------------------------------------------------------------

    def expect_f(self, f: Callable[[int], float], horizon: int = DEFAULT_HORIZON) -> SeriesResult:
        """``E[f(R)]`` by direct summation.

        Finitely supported laws give an exact sum.  Otherwise ``f`` must be
        monotone over the scanned range and divergence/convergence verdicts
        come from :func:`boolperc.series.open_sum`.
        """
        if self._pmf is not None:
            return finite_sum(f(n) * self.pmf(n) for n in range(1, len(self._pmf) + 1))
        return open_sum(self._monotone_terms(f, horizon))

    def _monotone_terms(self, f, horizon):
        direction = 0
        prev = None
        for n in range(1, horizon + 1):
            v = float(f(n))
            if v < 0:
                raise LawError("expect_f on an unbounded law needs a nonnegative f")
            if prev is not None and v != prev:
                step = 1 if v > prev else -1
                if direction and step != direction:
                    raise LawError("f is not monotone; refusing a nonconvergent summation")
                direction = step
            prev = v
            yield v * self.pmf(n)

    def expect_f_telescoping(
        self, p: float, f: Callable[[int], float], horizon: int = DEFAULT_HORIZON
    ) -> SeriesResult:
        """``f(0) + (1/p) sum_{n>=0} (f(n+1) - f(n)) (1 - q_n)`` for nondecreasing ``f``."""
        p = check_probability(p)
        if p == 0:
            raise LawError("the telescoping form needs p > 0")
        f0 = float(f(0))

        def terms():
            prev = f0
            top = self.support_max if self._pmf is not None else horizon
            for n in range(top):
                cur = float(f(n + 1))
                inc = cur - prev
                if inc < 0:
                    raise LawError("expect_f_telescoping needs a nondecreasing f")
                yield inc * self.one_minus_q(p, n) / p
                prev = cur

        res = finite_sum(terms()) if self._pmf is not None else open_sum(terms())
        if res.is_finite:
            return SeriesResult(f0 + res.value, res.status, res.n_terms)
        return res
