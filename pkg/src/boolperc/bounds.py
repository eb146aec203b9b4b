"""Deterministic bound functionals built from a growth profile and a radius law.

The central quantities are the Peierls-type weight

    phi(n) = sum_{r=1}^{n} c_r * max(delta * s_top[r-1], c_top[r])

and the exponential weight ``psi_t(n) = sum_{r=1}^{n} c_top[r] * exp(t c_r)``.
With ``1 - q_n = p P(R > n)``, summation by parts turns ``p E[phi(R)]`` into
``sum_{n>=0} (phi(n+1) - phi(n)) (1 - q_n)``; the same series is the mean of
the dominating offspring law.  All series run on the profile horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .exceptions import HorizonError, LawError
from .graph import GrowthProfile
from .laws import RadiusLaw, check_probability
from .series import FINITE, INCONCLUSIVE, INFINITE, SeriesResult, finite_sum, open_sum

HOLDS = "holds"
FAILS = "fails"


class InconclusiveSeries(HorizonError):
    """The profile horizon ended before a convergence or divergence verdict."""


def phi_increment(profile: GrowthProfile, r: int) -> int:
    """``phi(r) - phi(r - 1)``."""
    if r > profile.r_max:
        raise HorizonError(f"radius {r} exceeds the profile horizon {profile.r_max}")
    return profile.ball_size(r) * profile.slot_count(r)


def phi(profile: GrowthProfile, n: int) -> int:
    if n < 0:
        raise ValueError("n must be nonnegative")
    return sum(phi_increment(profile, r) for r in range(1, n + 1))


def active_branches(profile: GrowthProfile) -> list[str]:
    """Which side of ``max(delta s_top[r-1], c_top[r])`` wins at each radius."""
    return [
        "delta_s" if profile.delta * profile.s_top[r - 1] >= profile.c_top[r - 1] else "c_top"
        for r in range(1, profile.r_max + 1)
    ]


def phi_closed_form_bound(delta: int, n: int) -> float:
    """``2 delta / (delta^2 - 1) * (delta^(2n) - 1)``, overflowing to ``inf``."""
    if delta < 2:
        raise ValueError("the closed-form bound needs delta >= 2")
    if n <= 0:
        return 0.0
    try:
        power = float(delta) ** (2 * n)
    except OverflowError:
        return math.inf
    return 2.0 * delta / (delta * delta - 1.0) * (power - 1.0)


def psi(profile: GrowthProfile, t: float, n: int) -> float:
    """``sum_{r<=n} c_top[r] exp(t c_r)``, accumulated in log space."""
    if t <= 0:
        raise ValueError("t must be positive")
    if n > profile.r_max:
        raise HorizonError(f"n={n} exceeds the profile horizon {profile.r_max}")
    if n <= 0:
        return 0.0
    logs = [math.log(profile.c_top[r - 1]) + t * profile.c[r - 1] for r in range(1, n + 1)]
    total = logsumexp(logs)
    return math.exp(total) if total < 709.0 else math.inf


def psi_increment(profile: GrowthProfile, t: float, r: int) -> float:
    if r > profile.r_max:
        raise HorizonError(f"radius {r} exceeds the profile horizon {profile.r_max}")
    x = math.log(profile.c_top[r - 1]) + t * profile.c[r - 1]
    return math.exp(x) if x < 709.0 else math.inf


def _law_series(profile: GrowthProfile, law: RadiusLaw, weight) -> SeriesResult:
    """``sum_{n>=0} weight(n+1) P(R > n)`` over the profile horizon."""
    top = law.support_max
    if top is not None:
        if top > profile.r_max:
            raise HorizonError(
                f"law support reaches {top} but the profile stops at r_max={profile.r_max}"
            )
        return finite_sum(weight(n + 1) * law.tail(n) for n in range(top))
    return open_sum(weight(n + 1) * law.tail(n) for n in range(profile.r_max))


def phi_expectation(profile: GrowthProfile, law: RadiusLaw) -> SeriesResult:
    """``E[phi(R)]`` through the telescoped series."""
    return _law_series(profile, law, lambda r: phi_increment(profile, r))


def psi_expectation(profile: GrowthProfile, law: RadiusLaw, t: float) -> SeriesResult:
    if t <= 0:
        raise ValueError("t must be positive")
    return _law_series(profile, law, lambda r: psi_increment(profile, t, r))


def pc_lower_bound(profile: GrowthProfile, law: RadiusLaw) -> float:
    """``1 / E[phi(R)]``, or 0 when the expectation diverges."""
    e = phi_expectation(profile, law)
    if e.status == INCONCLUSIVE:
        raise InconclusiveSeries(f"E[phi(R)] undecided after {e.n_terms} terms")
    if e.status == INFINITE:
        return 0.0
    return min(1.0, 1.0 / e.value)


@dataclass(frozen=True)
class CheckResult:
    verdict: str
    series: SeriesResult

    @property
    def value(self) -> float:
        return self.series.value

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS


def _scaled(series: SeriesResult, p: float) -> SeriesResult:
    if series.status == INFINITE and p == 0:
        # every term carries the factor p
        return SeriesResult(0.0, FINITE, series.n_terms)
    return series.scaled(p)


def subcritical_series(profile: GrowthProfile, law: RadiusLaw, p: float) -> SeriesResult:
    """``sum_{n>=0} c_{n+1} max(delta s_top[n], c_top[n+1]) (1 - q_n)``."""
    p = check_probability(p)
    return _scaled(phi_expectation(profile, law), p)


def check_subcritical(profile: GrowthProfile, law: RadiusLaw, p: float) -> CheckResult:
    s = subcritical_series(profile, law, p)
    if s.status == INCONCLUSIVE:
        return CheckResult(INCONCLUSIVE, s)
    return CheckResult(HOLDS if s.is_finite and s.value < 1.0 else FAILS, s)


def expo_series(profile: GrowthProfile, law: RadiusLaw, p: float, t: float) -> SeriesResult:
    """``sum_{n>=0} c_top[n+1] exp(t c_{n+1}) (1 - q_n)``."""
    p = check_probability(p)
    return _scaled(psi_expectation(profile, law, t), p)


def check_expo(profile: GrowthProfile, law: RadiusLaw, p: float, t: float) -> CheckResult:
    s = expo_series(profile, law, p, t)
    if s.status == INCONCLUSIVE:
        return CheckResult(INCONCLUSIVE, s)
    return CheckResult(HOLDS if s.is_finite else FAILS, s)


def xi_mean(profile: GrowthProfile, law: RadiusLaw, p: float) -> float:
    """Mean of the dominating offspring law (``inf`` if the series diverges)."""
    s = subcritical_series(profile, law, p)
    if s.status == INCONCLUSIVE:
        raise InconclusiveSeries(f"E[xi] undecided after {s.n_terms} terms")
    return s.value


def xi_log_mgf_bound(profile: GrowthProfile, law: RadiusLaw, p: float, t: float) -> float:
    """Upper bound ``delta * sum c_top[n+1] exp(t c_{n+1}) (1 - q_n)`` on ``log E[exp(t xi)]``."""
    s = expo_series(profile, law, p, t)
    if s.status == INCONCLUSIVE:
        raise InconclusiveSeries(f"exponential series undecided after {s.n_terms} terms")
    return profile.delta * s.value if s.value > 0 else 0.0


@dataclass
class BoundsReport:
    profile: GrowthProfile
    law: RadiusLaw
    p: float
    t: float
    phi_expectation: SeriesResult
    pc_lower: float | None
    subcritical: CheckResult
    expo: CheckResult
    xi_mean: SeriesResult
    xi_log_mgf_bound: float | None
    branches: list[str]
    notes: list[str] = field(default_factory=list)

    @property
    def inconclusive(self) -> bool:
        return INCONCLUSIVE in (self.phi_expectation.status, self.subcritical.verdict, self.expo.verdict)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "t": self.t,
            "r_max": self.profile.r_max,
            "delta": self.profile.delta,
            "delta_plus": self.profile.delta_plus,
            "delta_minus": self.profile.delta_minus,
            "phi_expectation": self.phi_expectation.to_json(),
            "phi_expectation_status": self.phi_expectation.status,
            "pc_lower": self.pc_lower,
            "subcritical_sum": self.subcritical.series.to_json(),
            "subcritical_verdict": self.subcritical.verdict,
            "expo_sum": self.expo.series.to_json(),
            "expo_verdict": self.expo.verdict,
            "xi_mean": self.xi_mean.to_json(),
            "xi_log_mgf_bound": "inf" if self.xi_log_mgf_bound == math.inf else self.xi_log_mgf_bound,
            "truncated_mass": self.law.truncated_mass,
            "branches": ",".join(self.branches),
            "notes": "; ".join(self.notes),
        }


def bounds_report(
    profile: GrowthProfile, law: RadiusLaw, p: float, t: float = 0.1, pc_site: float | None = None
) -> BoundsReport:
    p = check_probability(p)
    e_phi = phi_expectation(profile, law)
    if e_phi.status == FINITE:
        pc = min(1.0, 1.0 / e_phi.value)
    elif e_phi.status == INFINITE:
        pc = 0.0
    else:
        pc = None
    sub = check_subcritical(profile, law, p)
    expo = check_expo(profile, law, p, t)
    mgf = None
    if expo.series.status != INCONCLUSIVE:
        mgf = profile.delta * expo.value if expo.value > 0 else 0.0
    notes = []
    if law.truncated_mass:
        notes.append(f"cap removed probability mass {law.truncated_mass:.3e}")
    if pc_site is not None:
        notes.append(f"p_c <= p_c_site = {pc_site} (Bernoulli site percolation comparison)")
    if not law.finite_support:
        notes.append(f"series truncated at the profile horizon r_max={profile.r_max}")
    return BoundsReport(profile, law, p, t, e_phi, pc, sub, expo, sub.series, mgf, active_branches(profile), notes)


def format_table(report: BoundsReport) -> str:
    rows = [(k, v) for k, v in report.to_dict().items()]
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def profile_series_terms(profile: GrowthProfile, law: RadiusLaw, p: float) -> np.ndarray:
    """Individual terms of the subcritical series (diagnostics)."""
    top = law.support_max or profile.r_max
    if top > profile.r_max:
        raise LawError("law support beyond the profile horizon")
    return np.array([phi_increment(profile, n + 1) * law.one_minus_q(p, n) for n in range(top)])
