"""Decay-rate estimation and asymptotic bound checks on sampled time series.

Fits operate on positive samples in a time window whose left edge is at
least 1, so log-coordinates are always well defined.  Windows default to
the last two decades of the schedule; early transients are excluded.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError, RateFitDataError
from ..kernels import KernelSpec, tail_minorant

MIN_WINDOW_SAMPLES = 10


class RateModel(str, enum.Enum):
    """Decay laws the fitter understands."""

    POWER_LAW = "powerlaw"      # V ~ C * t^(-gamma)
    LOG_OVER_T = "logovert"     # V ~ C * ln(t) / t


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of a decay law over a time window.

    ``exponent`` is the power-law gamma (nan for the log-over-t model,
    which has no free exponent); ``amplitude`` is the prefactor C;
    ``residual`` is the rms misfit in log coordinates.
    """

    model: RateModel
    window: tuple
    exponent: float
    amplitude: float
    residual: float
    n_samples: int


def default_window(t) -> tuple:
    """Last two decades of the sampled times, clipped to start at t >= 1."""
    t = np.asarray(t, dtype=float)
    if t.size == 0:
        raise InsufficientDataError("empty time series")
    hi = float(np.max(t))
    if hi <= 1.0:
        raise RateFitDataError("series ends at t <= 1; nothing to fit")
    return (max(1.0, hi / 100.0), hi)


def rate_fit(t, values, model=RateModel.POWER_LAW, window=None) -> RateFit:
    """Fit a decay model to ``values`` sampled at times ``t``.

    PowerLaw regresses log V on log t.  LogOverT fits V*t/ln(t) against a
    constant (in log coordinates, so the residual is comparable between
    the two models).  Raises on nonpositive values inside the window: the
    series has hit the floating-point alignment floor and the window
    should be shrunk.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise ValueError("t and values must be 1-d arrays of equal length")
    model = RateModel(model)
    if window is None:
        window = default_window(t)
    lo, hi = float(window[0]), float(window[1])
    if lo < 1.0:
        raise RateFitDataError(f"fit window must start at t >= 1, got {lo}")
    if not hi > lo:
        raise RateFitDataError(f"empty fit window [{lo}, {hi}]")

    sel = (t >= lo) & (t <= hi)
    if model is RateModel.LOG_OVER_T:
        sel &= t > 1.0
    ts, vs = t[sel], v[sel]
    if ts.size < MIN_WINDOW_SAMPLES:
        raise InsufficientDataError(
            f"window [{lo}, {hi}] contains {ts.size} samples; need >= {MIN_WINDOW_SAMPLES}"
        )
    if np.any(vs <= 0.0) or not np.all(np.isfinite(vs)):
        raise RateFitDataError(
            "nonpositive or non-finite values in fit window; shrink the window"
        )

    if model is RateModel.POWER_LAW:
        # log V = log C - gamma * log t
        design = np.column_stack([np.ones_like(ts), -np.log(ts)])
        coef, *_ = np.linalg.lstsq(design, np.log(vs), rcond=None)
        logc, gamma = float(coef[0]), float(coef[1])
        resid = float(np.sqrt(np.mean((design @ coef - np.log(vs)) ** 2)))
        return RateFit(model, (lo, hi), gamma, math.exp(logc), resid, int(ts.size))

    y = np.log(vs * ts / np.log(ts))
    logc = float(np.mean(y))
    resid = float(np.sqrt(np.mean((y - logc) ** 2)))
    return RateFit(model, (lo, hi), math.nan, math.exp(logc), resid, int(ts.size))


# ---------------------------------------------------------------------------
# summability of the kernel-weighted energy flux

@dataclass(frozen=True)
class TailIntegralReport:
    """Partial integral of phi_lower(c*t + d0) * V_p(t) and its decade profile.

    ``decades`` lists (t_lo, t_hi, increment) for successive decades ending
    at the horizon.  A summable flux shows the last-decade fraction of the
    total shrinking toward zero.
    """

    total: float
    decades: tuple
    last_decade_fraction: float


def tail_integral_check(trajectory, kernel: KernelSpec, c_speed: float, d0: float,
                        p: int = 2) -> TailIntegralReport:
    """Trapezoid partial integral of the minorant-weighted velocity variation.

    The flock diameter grows at most like d0 + c_speed*t, so the
    non-increasing kernel minorant evaluated there under-weights every
    pair; a finite limit of this integral is what forces alignment for
    fat-tail kernels.
    """
    if c_speed < 0 or d0 < 0:
        raise ValueError("c_speed and d0 must be nonnegative")
    t = np.asarray(trajectory.t(), dtype=float)
    vp = np.asarray(trajectory.column(f"V{p}"), dtype=float)
    if t.size < 2:
        raise InsufficientDataError("need at least two samples")
    weight = tail_minorant(kernel, c_speed * t + d0)
    integrand = weight * vp

    seg = 0.5 * (integrand[1:] + integrand[:-1]) * np.diff(t)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(cum[-1])

    hi = float(t[-1])
    decades = []
    while hi > float(t[0]) and len(decades) < 12:
        lo = max(hi / 10.0, float(t[0]))
        inc = float(np.interp(hi, t, cum) - np.interp(lo, t, cum))
        decades.append((lo, hi, inc))
        if lo == float(t[0]):
            break
        hi = lo
    decades.reverse()
    last_frac = decades[-1][2] / total if total > 0 else 0.0
    return TailIntegralReport(total, tuple(decades), float(last_frac))


# ---------------------------------------------------------------------------
# minimal-distance lower bounds for strongly singular kernels

@dataclass(frozen=True)
class MinDistanceReport:
    """Fit of the minimal pair distance against its predicted lower bound.

    For beta > 2 the bound is algebraic, d_min >= c * t^(-1/(beta-2));
    ``fitted_exponent`` and ``bound_exponent`` are both signed slopes of t
    (negative means decay), so the bound holds when fitted >= bound.  For
    beta = 2 the bound is exp(-C*sqrt(t)) and ``sqrt_coefficient`` reports
    the fitted C with its residual.  ``floor`` is the smallest separation
    seen anywhere in the run.
    """

    beta: float
    window: tuple
    floor: float
    fitted_exponent: float
    bound_exponent: float | None
    sqrt_coefficient: float | None
    residual: float


def min_distance_rate_check(trajectory, beta: float, window=None) -> MinDistanceReport:
    t = np.asarray(trajectory.t(), dtype=float)
    dmin = np.asarray(trajectory.column("dmin"), dtype=float)
    finite = np.isfinite(dmin)
    t, dmin = t[finite], dmin[finite]
    if t.size == 0:
        raise InsufficientDataError("no minimal-distance samples")
    floor = float(np.min(dmin))
    if window is None:
        window = default_window(t)
    fit = rate_fit(t, dmin, RateModel.POWER_LAW, window)

    sqrt_coef = None
    resid = fit.residual
    if beta == 2.0:
        lo, hi = fit.window
        sel = (t >= lo) & (t <= hi)
        # log d_min = a - C * sqrt(t)
        design = np.column_stack([np.ones(int(sel.sum())), -np.sqrt(t[sel])])
        coef, *_ = np.linalg.lstsq(design, np.log(dmin[sel]), rcond=None)
        sqrt_coef = float(coef[1])
        resid = float(np.sqrt(np.mean((design @ coef - np.log(dmin[sel])) ** 2)))

    bound = -1.0 / (beta - 2.0) if beta > 2.0 else None
    return MinDistanceReport(
        beta=float(beta),
        window=fit.window,
        floor=floor,
        fitted_exponent=-fit.exponent,
        bound_exponent=bound,
        sqrt_coefficient=sqrt_coef,
        residual=resid,
    )


# ---------------------------------------------------------------------------
# windowed-minimum decay (rates that hold along a subsequence)

@dataclass(frozen=True)
class WindowedRateReport:
    """Check of V(t) <= C * t^(-exponent) as a per-dyadic-window minimum.

    Asymptotic rates of this kind hold along a subsequence, not pointwise,
    so each window [2^k, 2^(k+1)] * t_start must contain at least one
    compliant sample.  ``window_minima`` holds min over each window of
    V(t) * t^exponent; the constant is calibrated on the first half of the
    windows and the rest must stay within ``slack`` of it.
    """

    exponent: float
    constant: float
    slack: float
    window_minima: tuple
    calibration_windows: int
    satisfied: bool


def windowed_rate_check(t, values, exponent: float, t_start: float = 1.0,
                        slack: float = 1.05) -> WindowedRateReport:
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise ValueError("t and values must be 1-d arrays of equal length")
    if t_start < 1.0:
        raise RateFitDataError("windows must start at t >= 1")

    minima = []
    lo = float(t_start)
    t_end = float(np.max(t))
    while 2.0 * lo <= t_end:
        sel = (t >= lo) & (t < 2.0 * lo)
        if np.any(sel):
            minima.append(float(np.min(v[sel] * t[sel] ** exponent)))
        lo *= 2.0
    if len(minima) < 4:
        raise InsufficientDataError(
            f"only {len(minima)} dyadic windows with samples; need >= 4"
        )
    n_cal = len(minima) // 2
    constant = max(minima[:n_cal])
    ok = all(m <= slack * constant for m in minima[n_cal:])
    return WindowedRateReport(
        exponent=float(exponent),
        constant=float(constant),
        slack=float(slack),
        window_minima=tuple(minima),
        calibration_windows=n_cal,
        satisfied=bool(ok),
    )
