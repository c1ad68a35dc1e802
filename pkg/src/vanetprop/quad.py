"""Adaptive quadrature and the renewal-equation CDF solver.

The integrator is a Gauss 7 / Kronrod 15 panel rule with worst-panel
bisection: the Kronrod value is the estimate, |K15 - G7| the panel error,
and the panel with the largest error is split until the summed error
drops below max(rel_tol * |value|, 1e-14). Semi-infinite integrals are
mapped to [0, 1) with tau = a + t/(1-t).

The solver marches the corrected renewal identity

    F_D(s) = 1 - p_s F_H(L) + p_s * integral_0^min(s,L) f_H(tau) F_D(s - tau) dtau

on a uniform grid with trapezoidal kernel evaluation (implicit in the
tau = 0 endpoint). The piecewise form printed in the source theorem is
kept available, unrepaired, for discrepancy reporting only.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateProcessError, NumericError, ValidationError

__all__ = [
    "QuadResult",
    "integrate",
    "integrate_semi_infinite",
    "CdfCurve",
    "solve_renewal_cdf",
    "solve_printed_cdf",
]

ABS_FLOOR = 1e-14
MAX_PANELS = 2000
# a decreasing step larger than this is a solver failure, smaller ones are clamped
MONOTONICITY_TOL = 1e-6

# Kronrod 15 abscissae (positive half) and weights; Gauss 7 is embedded at
# the odd indices. Standard values, e.g. QUADPACK dqk15.
_XK = (
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
)
_WK = (
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
)
_WG = (
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
)


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    evaluations: int


def _panel(f: Callable[[float], float], a: float, b: float) -> tuple[float, float]:
    """Kronrod estimate and |K15 - G7| for one panel."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fk = 0.0
    fg = 0.0
    for i, x in enumerate(_XK):
        if x == 0.0:
            y = f(c)
            if not math.isfinite(y):
                raise NumericError(f"integrand returned non-finite value at x={c!r}")
            fk += _WK[i] * y
            fg += _WG[3] * y
            continue
        y1 = f(c - h * x)
        y2 = f(c + h * x)
        if not (math.isfinite(y1) and math.isfinite(y2)):
            bad = c - h * x if not math.isfinite(y1) else c + h * x
            raise NumericError(f"integrand returned non-finite value at x={bad!r}")
        fk += _WK[i] * (y1 + y2)
        if i % 2 == 1:
            fg += _WG[i // 2] * (y1 + y2)
    return fk * h, abs(fk - fg) * h


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    max_panels: int = MAX_PANELS,
) -> QuadResult:
    """Adaptively integrate f over [a, b].

    Raises NumericError (carrying the best estimate) if the tolerance is
    not met within max_panels panels.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValidationError(f"integration bounds must be finite, got [{a!r}, {b!r}]")
    if b < a:
        raise ValidationError(f"need a <= b, got [{a!r}, {b!r}]")
    if not (rel_tol > 0):
        raise ValidationError(f"rel_tol must be > 0, got {rel_tol!r}")
    if a == b:
        y = f(a)
        if not math.isfinite(y):
            raise NumericError(f"integrand returned non-finite value at x={a!r}")
        return QuadResult(0.0, 0.0, 1)

    val, err = _panel(f, a, b)
    evals = 15
    # heap of (-error, tiebreak, a, b, value, error); worst panel on top
    seq = 0
    heap = [(-err, seq, a, b, val, err)]
    total_val, total_err = val, err
    panels = 1
    while total_err > max(rel_tol * abs(total_val), ABS_FLOOR):
        if panels >= max_panels:
            raise NumericError(
                f"quadrature did not converge within {max_panels} panels "
                f"(value ~ {total_val!r}, error ~ {total_err!r})",
                estimate=total_val,
                error_estimate=total_err,
            )
        _, _, pa, pb, pval, perr = heapq.heappop(heap)
        mid = 0.5 * (pa + pb)
        if mid <= pa or mid >= pb:
            raise NumericError(
                "quadrature stalled on an unsplittable panel "
                f"(value ~ {total_val!r}, error ~ {total_err!r})",
                estimate=total_val,
                error_estimate=total_err,
            )
        lval, lerr = _panel(f, pa, mid)
        rval, rerr = _panel(f, mid, pb)
        evals += 30
        total_val += lval + rval - pval
        total_err += lerr + rerr - perr
        seq += 1
        heapq.heappush(heap, (-lerr, seq, pa, mid, lval, lerr))
        seq += 1
        heapq.heappush(heap, (-rerr, seq, mid, pb, rval, rerr))
        panels += 1
    return QuadResult(total_val, total_err, evals)


def integrate_semi_infinite(
    f: Callable[[float], float],
    a: float,
    rel_tol: float = 1e-10,
    max_panels: int = MAX_PANELS,
) -> QuadResult:
    """Integrate f over [a, inf) via tau = a + t/(1-t), t in [0, 1).

    f must be absolutely integrable; values at huge arguments should
    decay to 0 (all headway densities do).
    """
    if not math.isfinite(a):
        raise ValidationError(f"lower bound must be finite, got {a!r}")

    def g(t: float) -> float:
        omt = 1.0 - t
        if omt <= 0.0:
            return 0.0
        y = f(a + t / omt)
        if y == 0.0:
            return 0.0
        return y / omt / omt

    return integrate(g, 0.0, 1.0, rel_tol=rel_tol, max_panels=max_panels)


@dataclass(frozen=True)
class CdfCurve:
    """F_D sampled on the uniform grid s_j = j * grid_step, j = 0..len(values)-1."""

    grid_step: float
    max_s: float
    values: np.ndarray

    def grid(self) -> np.ndarray:
        return np.arange(self.values.size) * self.grid_step

    def __repr__(self) -> str:
        return (
            f"CdfCurve(grid_step={self.grid_step}, max_s={self.max_s}, "
            f"n={self.values.size})"
        )


def _check_solver_args(headway, p_s: float, max_range: float,
                       grid_step: float, max_s: float) -> float:
    if not (isinstance(p_s, (int, float)) and 0.0 <= p_s <= 1.0):
        raise ValidationError(f"p_s must lie in [0, 1], got {p_s!r}")
    if not (isinstance(max_range, (int, float)) and math.isfinite(max_range)) or max_range <= 0:
        raise ValidationError(f"max_range must be finite and > 0, got {max_range!r}")
    if not (0.0 < grid_step <= max_range / 10.0):
        raise ValidationError(
            f"grid_step must satisfy 0 < grid_step <= max_range/10, got {grid_step!r}"
        )
    if not (math.isfinite(max_s) and max_s >= max_range):
        raise ValidationError(f"max_s must be finite and >= max_range, got {max_s!r}")
    q = p_s * headway.cdf(max_range)
    if q >= 1.0:
        raise DegenerateProcessError(
            f"p_s * F_H(L) = {q!r}: propagation never terminates"
        )
    return q


def _repair(values: np.ndarray) -> np.ndarray:
    """Clamp float-level monotonicity wobble; a real decrease is a failure."""
    out = values.copy()
    run = 0.0
    for j in range(out.size):
        v = out[j]
        if v > 1.0:
            if v - 1.0 >= MONOTONICITY_TOL:
                raise NumericError(
                    f"solved CDF exceeds 1 by {v - 1.0:.3e} at grid index {j}",
                    estimate=float(v),
                )
            v = 1.0
        if v < run:
            if run - v >= MONOTONICITY_TOL:
                raise NumericError(
                    f"solved CDF decreases by {run - v:.3e} at grid index {j}",
                    estimate=float(v),
                )
            v = run
        run = v
        out[j] = v
    return out


def _snap_index(pos: float) -> tuple[int, float]:
    """Split pos = i + frac, snapping float dust at either end."""
    i = int(math.floor(pos))
    frac = pos - i
    if frac < 1e-9:
        frac = 0.0
    elif frac > 1.0 - 1e-9:
        i += 1
        frac = 0.0
    return i, frac


def _clamp_step(val: float, j: int, clamp: bool) -> float:
    """Project one marching step onto F <= 1 (true CDFs obey it, so the
    projection only removes discretization overshoot; projected values no
    longer feed error back into later convolutions). A real excursion past
    1 is a solver bug and raises."""
    if clamp and val > 1.0:
        if val - 1.0 >= MONOTONICITY_TOL:
            raise NumericError(
                f"solved CDF exceeds 1 by {val - 1.0:.3e} at grid index {j}",
                estimate=float(val),
            )
        return 1.0
    return val


def _march_atomic(headway, coef: float, const, n: int, step: float, upper: float,
                  clamp: bool = False) -> np.ndarray:
    """March F_j = const(j) + coef * sum_h w_h F(s_j - h) over atoms h <= min(s_j, upper).

    Atoms landing between grid points contribute through linear
    interpolation; contributions touching F_j itself (atom at 0, or an
    interpolation endpoint at s_j) move to the implicit side.
    """
    values, weights = headway.atoms()
    F = np.zeros(n)
    F[0] = const(0)
    for j in range(1, n):
        s = j * step
        lim = min(s, upper)
        acc = 0.0
        selfw = 0.0
        for h, w in zip(values, weights):
            if h > lim + 1e-12 * max(1.0, h):
                continue
            i0, frac = _snap_index((s - h) / step)
            if i0 >= j:
                selfw += w
            elif frac == 0.0:
                acc += w * F[i0]
            elif i0 + 1 == j:
                acc += w * (1.0 - frac) * F[i0]
                selfw += w * frac
            else:
                acc += w * ((1.0 - frac) * F[i0] + frac * F[i0 + 1])
        denom = 1.0 - coef * selfw
        if denom <= 1e-12:
            raise NumericError(
                f"implicit atom weight {coef * selfw!r} at grid index {j} leaves no equation to solve"
            )
        F[j] = _clamp_step((const(j) + coef * acc) / denom, j, clamp)
    return F


def _march_density(headway, coef: float, const, n: int, step: float, upper: float,
                   clamp: bool = False) -> np.ndarray:
    """Trapezoidal Volterra marching with density kernel f_H on [0, min(s, upper)]."""
    K, r = _snap_index(upper / step)
    if r != 0.0:
        r *= step  # leftover piece [K*step, upper]
    fvals = np.array([headway.pdf(i * step) for i in range(K + 1)])
    f_up = headway.pdf(upper)
    # Normalize the discrete kernel mass to F_H(upper). The marching fixed
    # point is (1-q)/(1 - coef*mass); with raw trapezoid weights the mass
    # misses F_H(upper) by O(step^2) and the solved curve settles slightly
    # off 1. Rescaling removes that bias without changing the scheme order.
    mass = step * (0.5 * fvals[0] + float(fvals[1:K].sum()) + 0.5 * fvals[K])
    if r > 0.0:
        mass += 0.5 * r * (fvals[K] + f_up)
    target = headway.cdf(upper)
    if mass > 0.0 and target > 0.0:
        scale = target / mass
        if not 0.5 <= scale <= 2.0:
            raise NumericError(
                f"kernel mass {mass!r} vs F_H({upper!r}) = {target!r}: "
                "grid_step too coarse to resolve the headway density"
            )
        fvals = fvals * scale
        f_up *= scale
    denom = 1.0 - coef * step * 0.5 * fvals[0]
    if denom < 0.1:
        raise NumericError(
            f"grid_step {step!r} too coarse for density {fvals[0]!r} at 0; implicit step ill-conditioned"
        )
    F = np.zeros(n)
    F[0] = const(0)
    for j in range(1, n):
        if j <= K:
            acc = step * (float(np.dot(fvals[1:j], F[j - 1:0:-1])) + 0.5 * fvals[j] * F[0])
        else:
            acc = float(np.dot(fvals[1:K], F[j - 1:j - K:-1])) + 0.5 * fvals[K] * F[j - K]
            acc *= step
            if r > 0.0:
                # partial panel [K*step, upper]; F_D(s - upper) sits between grid points
                x = j * step - upper
                i0, frac = _snap_index(x / step)
                tail = F[i0] if frac == 0.0 else (1.0 - frac) * F[i0] + frac * F[i0 + 1]
                acc += 0.5 * r * (fvals[K] * F[j - K] + f_up * tail)
        F[j] = _clamp_step((const(j) + coef * acc) / denom, j, clamp)
    return F


def solve_renewal_cdf(headway, p_s: float, max_range: float,
                      grid_step: float, max_s: float) -> CdfCurve:
    """Solve the corrected renewal identity for F_D on [0, max_s].

    F_D(0) = 1 - p_s F_H(L) exactly (the no-propagation atom); later grid
    values come from implicit trapezoidal marching, then monotonicity
    repair (decreases below 1e-6 clamp, anything larger raises).
    """
    q = _check_solver_args(headway, p_s, max_range, grid_step, max_s)
    n = int(math.floor(max_s / grid_step + 1e-9)) + 1
    g0 = 1.0 - q

    const = lambda j: g0
    if headway.has_density:
        F = _march_density(headway, p_s, const, n, grid_step, max_range, clamp=True)
    else:
        F = _march_atomic(headway, p_s, const, n, grid_step, max_range, clamp=True)
    F[0] = g0  # exact by construction, restated for clarity
    return CdfCurve(grid_step, max_s, _repair(F))


def solve_printed_cdf(headway, p_s: float, max_range: float,
                      grid_step: float, max_s: float) -> np.ndarray:
    """Evaluate the piecewise CDF recursion exactly as printed in the source.

    For 0 < s <= L the printed middle case subtracts (1 + p_s) F_H(s) and
    carries no p_s on the integral; for s > L the integral convolves
    against F_D where the derivation calls for the tail of F_D. The output
    is raw and unrepaired (it goes negative and non-monotone for most
    inputs); it exists so the discrepancy against the corrected form can
    be reported, never for downstream use.
    """
    q = _check_solver_args(headway, p_s, max_range, grid_step, max_s)
    n = int(math.floor(max_s / grid_step + 1e-9)) + 1
    g0 = 1.0 - q
    f_L = headway.cdf(max_range)
    K, _ = _snap_index(max_range / grid_step)

    def const(j: int) -> float:
        if j == 0:
            return g0
        if j <= K:
            return g0 - (1.0 + p_s) * headway.cdf(j * grid_step)
        return 1.0 - f_L

    # same marching kernel as the corrected solver; only the constant term
    # and the missing p_s factor on the integral differ
    if headway.has_density:
        F = _march_density(headway, 1.0, const, n, grid_step, max_range)
    else:
        F = _march_atomic(headway, 1.0, const, n, grid_step, max_range)
    return F
