"""Monte Carlo oracle for the propagation process.

Each trial replays the hop-by-hop process literally: draw a gap tau,
decide the hop (contention: tau <= max_range and an independent
Bernoulli(p_s); fading: Bernoulli(p_s(tau))), accumulate D += tau and
N += 1 on success, stop on the first failure. No closed form enters the
simulator, so it can arbitrate between conflicting analytical variants.

Reproducibility: trials are split into fixed blocks of 8192; block b
draws from a Philox stream keyed (seed, b), and trials inside one block
advance in lockstep with the active set compacted each round. Partial
results reduce in block order, so for a given (seed, trials) the output
is bit-identical no matter how many worker threads run the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytic import ContentionModel
from .errors import DegenerateProcessError, ValidationError
from .fading import FadingModel, hop_failure_prob
from .headway import HeadwayDistribution
from .quad import CdfCurve

__all__ = ["SimConfig", "SimStats", "ComparisonReport", "run", "compare"]

BLOCK_TRIALS = 8192
_Z95 = 1.959963984540054  # two-sided 95% normal quantile

_MAX_SEED = 2 ** 64 - 1


@dataclass(frozen=True)
class SimConfig:
    """What to simulate. ecdf_grid = (grid_step, max_s) requests an ECDF."""

    headway: HeadwayDistribution
    model: ContentionModel | FadingModel
    trials: int
    seed: int
    ecdf_grid: tuple[float, float] | None = None

    def __post_init__(self):
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ValidationError(f"trials must be a positive integer, got {self.trials!r}")
        if not isinstance(self.seed, int) or not (0 <= self.seed <= _MAX_SEED):
            raise ValidationError(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        if not isinstance(self.model, (ContentionModel, FadingModel)):
            raise ValidationError(f"model must be ContentionModel or FadingModel, got {self.model!r}")
        if self.ecdf_grid is not None:
            step, max_s = self.ecdf_grid
            if not (isinstance(step, (int, float)) and 0 < step) \
                    or not (isinstance(max_s, (int, float)) and max_s >= step):
                raise ValidationError(f"ecdf_grid must be (step > 0, max_s >= step), got {self.ecdf_grid!r}")


@dataclass(frozen=True)
class SimStats:
    """Sample statistics over all trials.

    var_D and its CI are None when trials < 2 (variance undefined, never
    reported as zero). ci95_* are normal-approximation half-widths; the
    variance CI uses the asymptotic variance (m4 - m2^2)/n.
    """

    trials: int
    mean_D: float
    var_D: float | None
    mean_N: float
    ci95_mean_D: float
    ci95_var_D: float | None
    ci95_mean_N: float
    zero_fraction: float
    ecdf: CdfCurve | None


def _simulate_block(headway: HeadwayDistribution, model, seed: int,
                    block_index: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial (D, N) for one block, from the block's own Philox stream."""
    key = np.array([seed, block_index], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    D = np.zeros(n)
    N = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    if isinstance(model, ContentionModel):
        p_s, L = model.p_s, model.max_range
        fading = None
    else:
        fading = model
        c = model.decay
        d0 = model.ref_distance
        alpha = model.path_loss_exp
    while active.size:
        tau = headway.sample(rng, size=active.size)
        u = rng.random(active.size)
        if fading is None:
            succ = (tau <= L) & (u < p_s)
        else:
            # (tau/d0)^alpha is 0 at tau = 0, so a zero gap succeeds (limit p_s -> 1)
            succ = u < np.exp(-c * (tau / d0) ** alpha)
        idx = active[succ]
        D[idx] += tau[succ]
        N[idx] += 1
        active = idx
    return D, N


def _block_summary(headway, model, seed, block_index, lo, hi, grid):
    D, N = _simulate_block(headway, model, seed, block_index, hi - lo)
    s1 = float(np.sum(D))
    d2 = D * D
    s2 = float(np.sum(d2))
    s3 = float(np.sum(d2 * D))
    s4 = float(np.sum(d2 * d2))
    sum_n = int(np.sum(N))
    sum_n2 = int(np.sum(N * N))
    zeros = int(np.count_nonzero(N == 0))
    counts = None
    if grid is not None:
        ins = np.searchsorted(grid, D, side="left")
        counts = np.bincount(ins, minlength=grid.size + 1)[: grid.size]
    return s1, s2, s3, s4, sum_n, sum_n2, zeros, counts


def _check_terminates(cfg: SimConfig) -> None:
    if isinstance(cfg.model, ContentionModel):
        if cfg.model.p_s * cfg.headway.cdf(cfg.model.max_range) >= 1.0:
            raise DegenerateProcessError(
                "p_s * F_H(L) = 1: trials would never terminate"
            )
    else:
        if hop_failure_prob(cfg.model, cfg.headway) <= 0.0:
            raise DegenerateProcessError(
                "hop failure probability is 0: trials would never terminate"
            )


def run(cfg: SimConfig, workers: int = 1) -> SimStats:
    """Simulate cfg.trials independent trials.

    workers > 1 distributes blocks over a thread pool; the result is
    bit-identical to the single-threaded run.
    """
    if not isinstance(workers, int) or workers < 1:
        raise ValidationError(f"workers must be a positive integer, got {workers!r}")
    _check_terminates(cfg)
    grid = None
    if cfg.ecdf_grid is not None:
        step, max_s = cfg.ecdf_grid
        grid = np.arange(int(math.floor(max_s / step + 1e-9)) + 1) * step

    blocks = []
    lo = 0
    while lo < cfg.trials:
        hi = min(lo + BLOCK_TRIALS, cfg.trials)
        blocks.append((len(blocks), lo, hi))
        lo = hi

    def job(b):
        bi, lo, hi = b
        return _block_summary(cfg.headway, cfg.model, cfg.seed, bi, lo, hi, grid)

    if workers == 1:
        parts = [job(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, blocks))

    # reduce in block order: float sums stay deterministic under any pool size
    s1 = s2 = s3 = s4 = 0.0
    sum_n = sum_n2 = zeros = 0
    counts = np.zeros(grid.size, dtype=np.int64) if grid is not None else None
    for p1, p2, p3, p4, pn, pn2, pz, pc in parts:
        s1 += p1
        s2 += p2
        s3 += p3
        s4 += p4
        sum_n += pn
        sum_n2 += pn2
        zeros += pz
        if counts is not None:
            counts += pc

    n = cfg.trials
    mean = s1 / n
    mean_n = sum_n / n
    if n >= 2:
        m2 = max(s2 / n - mean * mean, 0.0)
        var = m2 * n / (n - 1)
        m4 = s4 / n - 4.0 * mean * s3 / n + 6.0 * mean * mean * s2 / n - 3.0 * mean ** 4
        ci_var = _Z95 * math.sqrt(max(m4 - m2 * m2, 0.0) / n)
        ci_mean = _Z95 * math.sqrt(var / n)
        mn2 = max(sum_n2 / n - mean_n * mean_n, 0.0)
        ci_mean_n = _Z95 * math.sqrt(mn2 * n / (n - 1) / n)
    else:
        var = None
        ci_var = None
        ci_mean = math.inf
        ci_mean_n = math.inf

    ecdf = None
    if grid is not None:
        ecdf = CdfCurve(cfg.ecdf_grid[0], cfg.ecdf_grid[1],
                        np.cumsum(counts) / n)
    return SimStats(
        trials=n,
        mean_D=mean,
        var_D=var,
        mean_N=mean_n,
        ci95_mean_D=ci_mean,
        ci95_var_D=ci_var,
        ci95_mean_N=ci_mean_n,
        zero_fraction=zeros / n,
        ecdf=ecdf,
    )


@dataclass(frozen=True)
class ComparisonReport:
    """One analytic-vs-simulation check.

    Scalar metrics pass iff |analytic - simulated| <= 4 * ci95 (the CI
    half-width); cdf_supnorm passes iff the sup distance on the shared
    grid is below the threshold (recorded in detail).
    """

    metric: str
    analytic: float | None
    simulated: float | None
    ci95: float | None
    abs_error: float
    rel_error: float | None
    passed: bool
    detail: str = ""


def compare(analytic_value, sim: SimStats, metric: str,
            cdf_threshold: float = 0.01) -> ComparisonReport:
    """Check one analytic value against the simulation.

    metric: mean_D | var_D | mean_N | cdf_supnorm. For cdf_supnorm,
    analytic_value is a CdfCurve and sim must carry an ECDF on the same
    grid.
    """
    if sim.trials < 2:
        raise ValidationError("comparison needs at least 2 trials")
    if metric == "cdf_supnorm":
        if not isinstance(analytic_value, CdfCurve):
            raise ValidationError("cdf_supnorm comparison needs a CdfCurve")
        if sim.ecdf is None:
            raise ValidationError("simulation carries no ECDF; set ecdf_grid")
        same = (
            sim.ecdf.values.size == analytic_value.values.size
            and abs(sim.ecdf.grid_step - analytic_value.grid_step) <= 1e-12
        )
        if not same:
            raise ValidationError(
                f"grid mismatch: analytic {analytic_value!r} vs ecdf {sim.ecdf!r}"
            )
        sup = float(np.max(np.abs(analytic_value.values - sim.ecdf.values)))
        return ComparisonReport(
            metric=metric,
            analytic=None,
            simulated=None,
            ci95=None,
            abs_error=sup,
            rel_error=None,
            passed=sup < cdf_threshold,
            detail=f"threshold={cdf_threshold!r}",
        )

    if metric == "mean_D":
        sim_value, ci = sim.mean_D, sim.ci95_mean_D
    elif metric == "var_D":
        if sim.var_D is None:
            raise ValidationError("simulation variance is undefined (trials < 2)")
        sim_value, ci = sim.var_D, sim.ci95_var_D
    elif metric == "mean_N":
        sim_value, ci = sim.mean_N, sim.ci95_mean_N
    else:
        raise ValidationError(f"unknown comparison metric {metric!r}")
    a = float(analytic_value)
    abs_err = abs(a - sim_value)
    if a != 0.0:
        rel_err = abs_err / abs(a)
    else:
        rel_err = 0.0 if abs_err == 0.0 else math.inf
    return ComparisonReport(
        metric=metric,
        analytic=a,
        simulated=sim_value,
        ci95=ci,
        abs_error=abs_err,
        rel_error=rel_err,
        passed=abs_err <= 4.0 * ci,
        detail="",
    )
