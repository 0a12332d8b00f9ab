"""Schwarzschild exterior background in horizon units.

Radial coordinate conventions
-----------------------------
Everything in this package works in horizon units: the mass is m = 1/2 so
the horizon sits at r = 1 and the lapse is N(r) = 1 - 1/r.  A solution for
general mass m is recovered by the rescaling W_m(t, r) = W(t/2m, r/2m), so
nothing is lost by fixing the unit.  Output files record this convention as
``mass_units: "2m"``.

The tortoise coordinate is

    x(r) = r + ln(r - 1),

with the free additive constant fixed to zero.  ``radius_r`` inverts the map
numerically; near the horizon r - 1 = exp(x - r) decays exponentially in x,
far out x ~ r.

``potential_factor`` is the curvature prefactor

    (1 - 1/r) / r**2 = (r - 1) / r**3

that multiplies every zeroth-order term of the reduced wave equation.  It
vanishes at the horizon, peaks at r = 3/2 with value 4/27, and decays like
1/r**2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "lapse",
    "tortoise_x",
    "radius_r",
    "radius_offset",
    "potential_factor",
    "potential_factor_x",
    "RadialChart",
    "build_chart",
]

# exp(x - 1) must stay a positive double; below this x the offset r - 1
# underflows and the chart point is not representable.
_X_UNDERFLOW = -740.0


def _as_array(r):
    arr = np.asarray(r, dtype=float)
    return arr, arr.ndim == 0


def lapse(r):
    """Schwarzschild lapse N(r) = 1 - 1/r for r >= 1 (scalar or array)."""
    arr, scalar = _as_array(r)
    if np.any(arr < 1.0):
        raise ValueError("lapse: radius below the horizon r = 1")
    out = 1.0 - 1.0 / arr
    return float(out) if scalar else out


def potential_factor(r):
    """Wave-equation prefactor (1 - 1/r)/r**2, zero at the horizon.

    Computed as (r - 1)/r**3, which is exact at r = 1 and avoids the
    cancellation of 1 - 1/r for r close to 1.
    """
    arr, scalar = _as_array(r)
    if np.any(arr < 1.0):
        raise ValueError("potential_factor: radius below the horizon r = 1")
    out = (arr - 1.0) / arr**3
    return float(out) if scalar else out


def tortoise_x(r):
    """Tortoise coordinate x = r + ln(r - 1), additive constant zero.

    Requires r > 1 strictly; x -> -inf at the horizon and x ~ r far out.
    """
    arr, scalar = _as_array(r)
    if np.any(arr <= 1.0):
        raise ValueError("tortoise_x: requires r > 1")
    out = arr + np.log(arr - 1.0)
    return float(out) if scalar else out


def radius_offset(x, tol=1e-14, max_iter=80):
    """Solve the tortoise map for the horizon offset u = r - 1.

    Returns u > 0 with (1 + u) + ln u = x.  Near the horizon u decays like
    exp(x - 1) and quickly drops below the double-precision spacing of 1.0,
    so the offset (not 1 + u) is the quantity consumers should use there.

    Parameters
    ----------
    x : float or array_like
        Tortoise coordinate(s).
    tol : float
        Relative tolerance on the defect x(r) - x; the default drives the
        iteration to the double-precision floor.
    max_iter : int
        Safety cap on Newton iterations (the solve is quadratically
        convergent and typically needs < 10).

    Notes
    -----
    Solves g(u) = u + ln u - (x - 1) by Newton.  g is increasing and concave,
    so from u0 = exp(x - 1) (near zone) or u0 = (x - 1) - ln(x - 1) (far
    zone) the iteration converges monotonically after at most one overshoot;
    a positivity clip guards that first step.
    """
    arr, scalar = _as_array(x)
    if not np.all(np.isfinite(arr)):
        raise ValueError("radius_offset: non-finite tortoise coordinate")
    if np.any(arr < _X_UNDERFLOW):
        raise ValueError(
            "radius_offset: x < %.0f puts r - 1 below the smallest positive double"
            % _X_UNDERFLOW
        )

    xm1 = np.atleast_1d(arr - 1.0)
    u = np.where(xm1 > 2.0, xm1 - np.log(np.maximum(xm1, 2.0)), np.exp(np.minimum(xm1, 2.0)))

    scale = np.maximum(1.0, np.abs(np.atleast_1d(arr)))
    for _ in range(max_iter):
        g = u + np.log(u) - xm1
        if np.all(np.abs(g) <= tol * scale):
            break
        step = g * u / (u + 1.0)
        u_new = u - step
        # concavity can push the first iterate through zero; fall back short
        u = np.where(u_new > 0.0, u_new, u * 0.5)

    return float(u[0]) if scalar else u.reshape(np.shape(x))


def radius_r(x, tol=1e-14, max_iter=80):
    """Invert the tortoise map: return r with r + ln(r - 1) = x.

    Equals 1 + radius_offset(x).  Roundtrip accuracy is
    |radius_r(tortoise_x(r)) - r| <= 1e-12 * max(1, r); note that for
    x <~ -35 the offset is below the spacing of doubles at 1.0 and the sum
    rounds to exactly 1.0 (use radius_offset where that matters).
    """
    return 1.0 + radius_offset(x, tol=tol, max_iter=max_iter)


def potential_factor_x(x):
    """Wave-equation prefactor as a function of the tortoise coordinate.

    Evaluates (r - 1)/r**3 through radius_offset, so it stays accurate in
    the near-horizon zone where r itself rounds to 1.0 and decays like
    exp(x - 1) there.
    """
    u = radius_offset(x)
    return u / (1.0 + u) ** 3


@dataclass(frozen=True)
class RadialChart:
    """Discrete radial chart: paired r, x and potential-factor samples.

    The grid is strictly increasing in r, log-spaced in r - 1 up to r = 10
    (resolving the horizon approach) and log-spaced in r beyond.  Instances
    are frozen; the arrays are marked read-only by ``build_chart``.
    """

    r_min: float
    r_max: float
    n_points: int
    r_grid: np.ndarray
    x_grid: np.ndarray
    p_grid: np.ndarray


def build_chart(r_min, r_max, n_points):
    """Build a RadialChart on [r_min, r_max] with n_points samples.

    Requires r_min > 1 (the tortoise map needs r strictly outside the
    horizon), r_max > r_min and n_points >= 2.
    """
    if not r_min > 1.0:
        raise ValueError("build_chart: r_min must exceed the horizon r = 1")
    if not r_max > r_min:
        raise ValueError("build_chart: r_max must exceed r_min")
    n_points = int(n_points)
    if n_points < 2:
        raise ValueError("build_chart: need at least 2 points")

    split = 10.0
    if r_max <= split or r_min >= split:
        # single regime; keep the near/far rule by choosing the measure
        if r_max <= split:
            r = 1.0 + np.geomspace(r_min - 1.0, r_max - 1.0, n_points)
        else:
            r = np.geomspace(r_min, r_max, n_points)
    else:
        near_measure = math.log((split - 1.0) / (r_min - 1.0))
        far_measure = math.log(r_max / split)
        n_near = int(round(n_points * near_measure / (near_measure + far_measure)))
        n_near = min(max(n_near, 1), n_points - 1)
        near = 1.0 + np.geomspace(r_min - 1.0, split - 1.0, n_near, endpoint=False)
        far = np.geomspace(split, r_max, n_points - n_near)
        r = np.concatenate([near, far])

    r[0] = r_min
    r[-1] = r_max
    x = tortoise_x(r)
    p = potential_factor(r)
    if not np.all(np.diff(r) > 0.0):
        raise ValueError("build_chart: grid failed to be strictly increasing")
    for a in (r, x, p):
        a.setflags(write=False)
    return RadialChart(r_min=float(r_min), r_max=float(r_max), n_points=n_points,
                       r_grid=r, x_grid=x, p_grid=p)
