"""Closed-form propagation statistics under the contention channel model.

Model: a message starts at vehicle 0 and hops down the chain. A hop over
gap H succeeds iff H <= max_range and an independent Bernoulli(p_s)
transmission succeeds; the first failed hop ends the process. D is the
total distance covered, N the number of vehicles reached.

With q = p_s * F_H(L) and I_k(L) the truncated headway moments, D is a
geometric compound sum, which gives every closed form below. Everything
divides by 1 - q, so q = 1 raises DegenerateProcessError.

Two variance routes are exposed on purpose: `variance_paper` evaluates
the printed second-moment identity, whose cross term drops the square of
the conditional mean; `variance_renewal` is the compound-geometric
variance. They disagree whenever propagation can continue past one hop;
simulation arbitrates (see the mc module). Bounds enclose the printed
variant, which is what they were derived against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateProcessError, ValidationError
from .headway import HeadwayDistribution
from .quad import CdfCurve, solve_renewal_cdf

__all__ = [
    "ContentionModel",
    "DistanceStats",
    "mean_distance",
    "mean_distance_bounds",
    "variance_paper",
    "variance_renewal",
    "variance_bounds",
    "mean_cluster_size",
    "cdf",
    "distance_stats",
]


@dataclass(frozen=True)
class ContentionModel:
    """Constant per-hop success probability p_s, hard reception cutoff max_range (m)."""

    p_s: float
    max_range: float

    def __post_init__(self):
        if not (isinstance(self.p_s, (int, float)) and 0.0 <= self.p_s <= 1.0):
            raise ValidationError(f"p_s must lie in [0, 1], got {self.p_s!r}")
        if not (isinstance(self.max_range, (int, float)) and math.isfinite(self.max_range)) \
                or self.max_range <= 0:
            raise ValidationError(f"max_range must be finite and > 0, got {self.max_range!r}")


def _q(d: HeadwayDistribution, m: ContentionModel) -> float:
    """Per-hop continuation probability q = p_s * F_H(L); degenerate at 1."""
    q = m.p_s * d.cdf(m.max_range)
    if q >= 1.0:
        raise DegenerateProcessError(
            f"p_s * F_H(L) = {q!r}: every hop succeeds and the propagation "
            "distance diverges"
        )
    return q


def mean_distance(d: HeadwayDistribution, m: ContentionModel) -> float:
    """E[D] = p_s * I1(L) / (1 - q)."""
    return m.p_s * d.truncated_moment(1, m.max_range) / (1.0 - _q(d, m))


def mean_distance_bounds(d: HeadwayDistribution, m: ContentionModel) -> tuple[float, float]:
    """Distribution-free bounds on E[D] from (mu_H, sigma_H, F_H(L)) only.

    lower = [p_s mu_H - (sqrt(sigma_H^2 + (L-mu_H)^2) - (L-mu_H)) / 2] / (1 - q)
    upper = p_s (mu_H - L + L F_H(L)) / (1 - q)

    The lower bound is clamped at 0. The upper bound holds for every
    headway distribution. The lower bound's derivation needs the tail
    mass above L to be dominated by the sqrt bracket, which holds once L
    sits several sigma above mu_H (true for any sane radio range vs gap
    scale); close to L ~ mu_H it can exceed the true mean, so treat it as
    informative only in the far-cutoff regime.
    """
    q = _q(d, m)
    mu = d.mean()
    gap = m.max_range - mu
    bracket = 0.5 * (math.sqrt(d.variance() + gap * gap) - gap)
    lower = (m.p_s * mu - bracket) / (1.0 - q)
    upper = m.p_s * (mu - m.max_range + m.max_range * d.cdf(m.max_range)) / (1.0 - q)
    return max(0.0, lower), upper


def variance_paper(d: HeadwayDistribution, m: ContentionModel) -> float:
    """Printed variance identity:

    Var[D] = p_s I2(L)/(1-q) + mu_D^2 * p_s (1 - F_H(L))/(1-q)

    The second term vanishes whenever F_H(L) = 1, which makes this
    variant systematically low once multi-hop propagation matters; kept
    verbatim so simulation can arbitrate against `variance_renewal`.
    """
    q = _q(d, m)
    mu_d = m.p_s * d.truncated_moment(1, m.max_range) / (1.0 - q)
    second = m.p_s * d.truncated_moment(2, m.max_range) / (1.0 - q)
    tail = m.p_s * (1.0 - d.cdf(m.max_range)) / (1.0 - q)
    return second + mu_d * mu_d * tail


def variance_renewal(d: HeadwayDistribution, m: ContentionModel) -> float:
    """Compound-geometric variance: Var[D] = p_s I2(L)/(1-q) + mu_D^2.

    D is a sum of N iid accepted gaps T with N geometric; the law of
    total variance collapses to E[N] E[T^2] + (Var N - E N) E[T]^2
    = p_s I2(L)/(1-q) + mu_D^2. Matches simulation.
    """
    q = _q(d, m)
    mu_d = m.p_s * d.truncated_moment(1, m.max_range) / (1.0 - q)
    return m.p_s * d.truncated_moment(2, m.max_range) / (1.0 - q) + mu_d * mu_d


def variance_bounds(d: HeadwayDistribution, m: ContentionModel) -> tuple[float, float]:
    """Bounds enclosing `variance_paper` (unconditionally valid):

    lower = mu_D^2 p_s (1 - F_H(L)) / (1 - q)
    upper = [p_s L mu_H - p_s L^2 (1 - F_H(L))] / (1 - q) + lower
    """
    q = _q(d, m)
    L = m.max_range
    tail = 1.0 - d.cdf(L)
    mu_d = m.p_s * d.truncated_moment(1, L) / (1.0 - q)
    lower = mu_d * mu_d * m.p_s * tail / (1.0 - q)
    upper = (m.p_s * L * d.mean() - m.p_s * L * L * tail) / (1.0 - q) + lower
    return lower, upper


def mean_cluster_size(d: HeadwayDistribution, m: ContentionModel) -> float:
    """E[N] = q / (1 - q): expected receivers (source excluded)."""
    q = _q(d, m)
    return q / (1.0 - q)


def cdf(d: HeadwayDistribution, m: ContentionModel,
        grid_step: float, max_s: float) -> CdfCurve:
    """F_D on a uniform grid via the renewal-equation solver."""
    return solve_renewal_cdf(d, m.p_s, m.max_range, grid_step, max_s)


@dataclass(frozen=True)
class DistanceStats:
    """Every closed form for one (headway, model) point."""

    mean: float
    mean_lower: float
    mean_upper: float
    var_paper: float
    var_renewal: float
    var_lower: float
    var_upper: float
    cluster_size: float


def distance_stats(d: HeadwayDistribution, m: ContentionModel) -> DistanceStats:
    mlo, mhi = mean_distance_bounds(d, m)
    vlo, vhi = variance_bounds(d, m)
    return DistanceStats(
        mean=mean_distance(d, m),
        mean_lower=mlo,
        mean_upper=mhi,
        var_paper=variance_paper(d, m),
        var_renewal=variance_renewal(d, m),
        var_lower=vlo,
        var_upper=vhi,
        cluster_size=mean_cluster_size(d, m),
    )
