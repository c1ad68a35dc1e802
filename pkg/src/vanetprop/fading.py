"""Propagation statistics under a Rayleigh fading channel.

Here no hard reception cutoff exists. The received power over a gap tau
is exponentially distributed with mean P_t * K * (d0/tau)^alpha, so a
hop succeeds with probability

    p_s(tau) = exp(-(P_th / (P_t K)) * (tau / d0)^alpha)

and the per-hop failure probability is F_P = E[1 - p_s(H)]. The process
is again a geometric compound sum, now with hop-length density
f_H(tau) p_s(tau) / (1 - F_P).

As with the contention model, the printed variance identity
(`variance_fading_paper`, no mean-square term) and the
compound-geometric one (`variance_fading_renewal`) are both exposed and
simulation arbitrates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import DegenerateProcessError, ValidationError
from .headway import HeadwayDistribution
from .quad import integrate_semi_infinite

__all__ = [
    "FadingModel",
    "FadingStats",
    "success_prob",
    "hop_failure_prob",
    "mean_distance_fading",
    "variance_fading_paper",
    "variance_fading_renewal",
    "fading_stats",
]

# headway densities are smooth; push the quadrature well below the 1e-9
# closed-form acceptance tolerance
_REL_TOL = 1e-11


@dataclass(frozen=True)
class FadingModel:
    """Rayleigh fading link budget.

    tx_power: transmit power P_t (W)
    gain_const: unit-distance path gain constant K
    ref_distance: reference distance d0 (m)
    path_loss_exp: path loss exponent alpha
    power_threshold: required receive power P_th (W)
    """

    tx_power: float
    gain_const: float
    ref_distance: float
    path_loss_exp: float
    power_threshold: float

    def __post_init__(self):
        for name in ("tx_power", "gain_const", "ref_distance", "path_loss_exp",
                     "power_threshold"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)) or v <= 0:
                raise ValidationError(f"{name} must be finite and > 0, got {v!r}")
        if not 1.0 <= self.path_loss_exp <= 6.0:
            raise ValidationError(
                f"path_loss_exp must lie in [1, 6], got {self.path_loss_exp!r}"
            )

    @property
    def decay(self) -> float:
        """c = P_th / (P_t K); p_s(tau) = exp(-c (tau/d0)^alpha)."""
        return self.power_threshold / (self.tx_power * self.gain_const)


def success_prob(f: FadingModel, tau: float) -> float:
    """P(hop over gap tau succeeds). tau -> 0+ limit is 1."""
    if not (isinstance(tau, (int, float)) and math.isfinite(tau)) or tau <= 0:
        raise ValidationError(f"gap must be finite and > 0, got {tau!r}")
    return math.exp(-f.decay * (tau / f.ref_distance) ** f.path_loss_exp)


def _fail_prob(f: FadingModel, tau: float) -> float:
    # 1 - exp(-x) via expm1: the naive form loses all precision for the
    # near-transparent channels the consistency checks use
    return -math.expm1(-f.decay * (tau / f.ref_distance) ** f.path_loss_exp)


def _expect(d: HeadwayDistribution, g: Callable[[float], float]) -> float:
    """E[g(H)]: exact atom sums for atomic families, else adaptive quadrature."""
    at = d.atoms()
    if at is not None:
        values, weights = at
        return float(sum(w * g(float(v)) for v, w in zip(values, weights)))
    return integrate_semi_infinite(lambda t: d.pdf(t) * g(t), 0.0, rel_tol=_REL_TOL).value


def hop_failure_prob(f: FadingModel, d: HeadwayDistribution) -> float:
    """F_P = E[1 - p_s(H)], the probability one hop fails."""
    return _expect(d, lambda t: _fail_prob(f, t) if t > 0 else 0.0)


def _moment_over_failure(f: FadingModel, d: HeadwayDistribution, order: int) -> float:
    fp = hop_failure_prob(f, d)
    if fp <= 0.0:
        raise DegenerateProcessError(
            "hop failure probability is 0: every hop succeeds and the "
            "propagation distance diverges"
        )
    num = _expect(
        d, lambda t: (t ** order) * math.exp(-f.decay * (t / f.ref_distance) ** f.path_loss_exp)
        if t > 0 else 0.0
    )
    return num / fp


def mean_distance_fading(f: FadingModel, d: HeadwayDistribution) -> float:
    """E[D] = E[tau p_s(tau)] / F_P."""
    return _moment_over_failure(f, d, 1)


def variance_fading_paper(f: FadingModel, d: HeadwayDistribution) -> float:
    """Printed identity: E[tau^2 p_s(tau)] / F_P, no mean-square term."""
    return _moment_over_failure(f, d, 2)


def variance_fading_renewal(f: FadingModel, d: HeadwayDistribution) -> float:
    """Compound-geometric variance: E[tau^2 p_s(tau)] / F_P + E[D]^2."""
    mu = mean_distance_fading(f, d)
    return variance_fading_paper(f, d) + mu * mu


@dataclass(frozen=True)
class FadingStats:
    """q_hop is the per-hop success probability 1 - F_P."""

    q_hop: float
    mean: float
    var_paper: float
    var_renewal: float


def fading_stats(f: FadingModel, d: HeadwayDistribution) -> FadingStats:
    fp = hop_failure_prob(f, d)
    if fp <= 0.0:
        raise DegenerateProcessError(
            "hop failure probability is 0: every hop succeeds and the "
            "propagation distance diverges"
        )
    mu = mean_distance_fading(f, d)
    vp = variance_fading_paper(f, d)
    return FadingStats(q_hop=1.0 - fp, mean=mu, var_paper=vp, var_renewal=vp + mu * mu)
