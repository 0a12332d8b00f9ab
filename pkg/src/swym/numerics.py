"""Shared numerical kernels: adaptive ODE integration with event location,
classification bisection, partial tridiagonal eigensolves, and monotone
interpolation.

The ODE front end wraps the Dormand-Prince 5(4) embedded pair (scipy's RK45)
behind an explicit config so every caller states its tolerances; dense output
is always on and event times come from root polishing on the dense solution,
which locates them to a few ulps of |t|.  The tridiagonal solver delegates to
LAPACK's Sturm-sequence bisection plus inverse iteration and re-checks the
residual before returning.  ``bisect`` is deliberately not a sign-based root
finder: it bisects between any two distinguishable classifications, which is
what the stationary shooting search needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "NumericsError",
    "StepSizeUnderflow",
    "MaxStepsExceeded",
    "IntegratorConfig",
    "EventSpec",
    "EventRecord",
    "Trajectory",
    "integrate",
    "bisect",
    "BisectResult",
    "tridiag_eigen_lowest",
    "tridiag_eigen_below",
    "pchip_interpolant",
]


class NumericsError(RuntimeError):
    """Base class for kernel-level failures."""


class StepSizeUnderflow(NumericsError):
    """The integrator's step size collapsed below machine spacing.

    Usually signals a singularity or blow-up; ``t_reached`` records where.
    """

    def __init__(self, t_reached, message=""):
        self.t_reached = float(t_reached)
        super().__init__(
            message or "step size underflow at t = %.17g" % self.t_reached
        )


class MaxStepsExceeded(NumericsError):
    def __init__(self, t_reached, max_steps):
        self.t_reached = float(t_reached)
        super().__init__(
            "exceeded %d steps at t = %.17g" % (max_steps, self.t_reached)
        )


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and step policy for ``integrate``.

    rel_tol/abs_tol are the embedded-pair error weights; max_step caps the
    step (callers with singular endpoints chain several calls with tighter
    caps); max_steps guards against runaway integrations.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    initial_step: float | None = None
    max_steps: int = 500_000

    def __post_init__(self):
        if not (1e-14 <= self.rel_tol < 1.0):
            raise ValueError("rel_tol must lie in [1e-14, 1)")
        if not (0.0 < self.abs_tol < 1.0):
            raise ValueError("abs_tol must lie in (0, 1)")
        if not self.max_step > 0.0:
            raise ValueError("max_step must be positive")
        if self.initial_step is not None and not self.initial_step > 0.0:
            raise ValueError("initial_step must be positive when given")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass(frozen=True)
class EventSpec:
    """Scalar event g(t, y): recorded at sign changes of the chosen direction.

    direction: +1 catches -/+ crossings, -1 catches +/-, 0 catches both.
    terminal events stop the integration at the located crossing.
    """

    fn: object
    name: str
    direction: int = 0
    terminal: bool = False


@dataclass(frozen=True)
class EventRecord:
    name: str
    t: float
    y: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Integration result: accepted steps, dense interpolant, event log.

    status is "reached_end" or "event:<name>" for a terminal event stop.
    The dense interpolant is the solver's own 4th-order-accurate polynomial,
    valid on [t[0], t[-1]].
    """

    t: np.ndarray
    y: np.ndarray
    dense: object
    events: tuple
    status: str

    def eval(self, t):
        return self.dense(t)

    @property
    def t_final(self):
        return float(self.t[-1])

    @property
    def y_final(self):
        return self.y[:, -1]


def integrate(rhs, t0, y0, t_end, config=IntegratorConfig(), events=()):
    """Integrate y' = rhs(t, y) from t0 to t_end with event location.

    Returns a Trajectory.  Raises StepSizeUnderflow when the controller
    cannot advance (reported with the location reached) and MaxStepsExceeded
    when the accepted-step count passes config.max_steps.
    """
    t0 = float(t0)
    t_end = float(t_end)
    if t_end == t0:
        raise ValueError("integrate: empty integration interval")
    y0 = np.asarray(y0, dtype=float)

    wrapped = []
    for spec in events:
        def g(t, y, _fn=spec.fn):
            return _fn(t, y)

        g.terminal = bool(spec.terminal)
        g.direction = float(spec.direction)
        wrapped.append(g)

    sol = solve_ivp(
        rhs,
        (t0, t_end),
        y0,
        method="RK45",
        dense_output=True,
        events=wrapped or None,
        rtol=config.rel_tol,
        atol=config.abs_tol,
        max_step=config.max_step,
        first_step=config.initial_step,
    )
    if sol.status == -1:
        raise StepSizeUnderflow(sol.t[-1] if len(sol.t) else t0, sol.message)
    if len(sol.t) > config.max_steps:
        raise MaxStepsExceeded(sol.t[-1], config.max_steps)

    records = []
    if events:
        for spec, t_ev, y_ev in zip(events, sol.t_events, sol.y_events):
            for te, ye in zip(t_ev, y_ev):
                records.append(EventRecord(name=spec.name, t=float(te), y=ye))
        records.sort(key=lambda rec: rec.t)

    if sol.status == 1:
        # the terminating record is the last terminal-event crossing
        terminal_names = {s.name for s in events if s.terminal}
        name = next(
            rec.name for rec in reversed(records) if rec.name in terminal_names
        )
        status = "event:" + name
    else:
        status = "reached_end"

    return Trajectory(
        t=sol.t, y=sol.y, dense=sol.sol, events=tuple(records), status=status
    )


@dataclass(frozen=True)
class BisectResult:
    lo: float
    hi: float
    label_lo: object
    label_hi: object
    n_calls: int
    history: tuple


def bisect(f, lo, hi, tol, max_iter=200):
    """Shrink [lo, hi] until hi - lo <= tol, keeping f's labels distinct.

    f may return any equality-comparable label (a sign, a string, a tuple of
    diagnostics); the invariant maintained is label(lo) != label(hi), so the
    returned bracket pins the classification boundary.  history records every
    (x, label) probe in evaluation order.
    """
    lo = float(lo)
    hi = float(hi)
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError("bisect: need finite lo < hi")
    if not tol > 0.0:
        raise ValueError("bisect: tol must be positive")

    label_lo = f(lo)
    label_hi = f(hi)
    history = [(lo, label_lo), (hi, label_hi)]
    if label_lo == label_hi:
        raise ValueError(
            "bisect: endpoints classify identically (%r)" % (label_lo,)
        )

    n_calls = 2
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # double-precision floor reached
        label_mid = f(mid)
        history.append((mid, label_mid))
        n_calls += 1
        if label_mid == label_lo:
            lo = mid
        elif label_mid == label_hi:
            hi = mid
        else:
            raise NumericsError(
                "bisect: midpoint produced a third classification %r"
                % (label_mid,)
            )
    else:
        raise NumericsError("bisect: max_iter exhausted before tol")

    return BisectResult(lo=lo, hi=hi, label_lo=label_lo, label_hi=label_hi,
                        n_calls=n_calls, history=tuple(history))


def _tridiag_residual(diag, off, w, v):
    av = diag[:, None] * v
    av[:-1] += off[:, None] * v[1:]
    av[1:] += off[:, None] * v[:-1]
    return np.max(np.abs(av - w[None, :] * v), axis=0)


def _check_eigenpairs(diag, off, w, v):
    if w.size == 0:
        return
    scale = np.max(np.abs(diag)) + 2.0 * (np.max(np.abs(off)) if off.size else 0.0)
    res = _tridiag_residual(diag, off, w, v)
    if np.any(res > 1e-10 * max(scale, 1.0)):
        raise NumericsError(
            "tridiagonal eigenpair residual %.3e exceeds 1e-10 * %.3e"
            % (float(np.max(res)), scale)
        )


def tridiag_eigen_lowest(diag, off, k):
    """Lowest k eigenpairs of a symmetric tridiagonal matrix.

    Delegates to LAPACK bisection + inverse iteration and verifies the
    residual max|A v - w v| <= 1e-10 * ||A|| before returning.  Eigenvectors
    come back l2-normalized, one per column.
    """
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    n = diag.size
    if off.size != n - 1:
        raise ValueError("off-diagonal must have length n - 1")
    if not 1 <= k <= n:
        raise ValueError("k must lie in [1, n]")
    w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))
    _check_eigenpairs(diag, off, w, v)
    return w, v


def tridiag_eigen_below(diag, off, cutoff):
    """All eigenpairs with eigenvalue < cutoff, via Sturm-count bisection."""
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    if off.size != diag.size - 1:
        raise ValueError("off-diagonal must have length n - 1")
    floor = float(np.min(diag)) - 2.0 * (np.max(np.abs(off)) if off.size else 0.0)
    w, v = eigh_tridiagonal(
        diag, off, select="v", select_range=(floor - 1.0, float(cutoff))
    )
    _check_eigenpairs(diag, off, w, v)
    return w, v


def pchip_interpolant(xs, ys):
    """Monotone C1 piecewise-cubic interpolant (PCHIP) of ys over xs.

    The interpolant never overshoots monotone data, which is what profile
    consumers rely on.  xs must be strictly increasing with at least two
    samples; the returned object is callable and has ``.derivative()``.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.size < 2:
        raise ValueError("pchip_interpolant: need at least two samples")
    if ys.shape[0] != xs.shape[0]:
        raise ValueError("pchip_interpolant: xs/ys length mismatch")
    if not np.all(np.diff(xs) > 0.0):
        raise ValueError("pchip_interpolant: xs must be strictly increasing")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ValueError("pchip_interpolant: non-finite sample")
    return PchipInterpolator(xs, ys)
