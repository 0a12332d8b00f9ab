"""Time evolution of the reduced wave equation in tortoise coordinates.

The field evolved here is the deviation u = W - W_bg from a fixed
background, with dynamics

    u_tt = u_xx - P (3 W_bg**2 - 1) u - P u**2 (u + 3 W_bg)

in nonlinear mode, and the same with the last term dropped in linear
mode.  Working in u rather than W has two consequences worth knowing:

* (u, pi) = (0, 0) is an exact fixed point of the discrete flow for any
  background, because the background's own discrete stationarity
  residual never enters the right-hand side.
* the energy functional is evaluated on the reconstructed W = W_bg + u,
  so its discrete drift picks up an O(h**2) term proportional to the
  background residual times the overlap with pi.  On the vacuum
  background that term vanishes identically and the drift is pure RK4
  O(dt**4); on a stationary profile it is the h**2 leg of the
  convergence checks.

Spatial discretization is the centered 3-point Laplacian on a uniform
grid; the two boundary rows impose first-order Sommerfeld radiation
(du/dt = +du/dx at the left end, -du/dx at the right) by replacing the
pi equation with the one-sided x-derivative of pi, which preserves the
boundary-condition residual of the initial data exactly.  Time stepping
is classical RK4 under a CFL bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import fileio
from .geometry import potential_factor_x, radius_r
from .numerics import tridiag_eigen_lowest

__all__ = [
    "EvolutionConfig",
    "Background",
    "FieldState",
    "EnergyReport",
    "EvolutionSeries",
    "GrowthFit",
    "vacuum_background",
    "profile_background",
    "flat_background",
    "zero_state",
    "gaussian_pulse",
    "unstable_mode",
    "eigenmode_state",
    "rhs",
    "step",
    "energy",
    "deviation_norm",
    "evolve",
    "fit_growth",
    "write_series_csv",
    "write_snapshot_csv",
    "write_growth",
]


@dataclass(frozen=True)
class EvolutionConfig:
    """Grid and policy knobs for an evolution run.

    saturation_threshold is the max|u| at which runs stop and growth
    fits end their window: 0.05 keeps the field well below the O(1)
    scale where W would cross +-1.  overflow_guard bounds |W| during
    valid runs; exceeding it aborts the run with the last valid time.
    """

    x_lo: float = -100.0
    x_hi: float = 300.0
    n_points: int = 4096
    cfl: float = 0.5
    saturation_threshold: float | None = 0.05
    overflow_guard: float = 10.0
    boundary: str = "radiation"

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ValueError("EvolutionConfig: x_lo must be below x_hi")
        if self.n_points < 8:
            raise ValueError("EvolutionConfig: n_points too small")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("EvolutionConfig: cfl must lie in (0, 1]")
        if self.boundary not in ("radiation", "reflecting"):
            raise ValueError(
                "EvolutionConfig: boundary must be radiation or reflecting"
            )

    @property
    def h(self):
        return (self.x_hi - self.x_lo) / (self.n_points - 1)


@dataclass(frozen=True)
class Background:
    """Fixed reference field sampled on the evolution grid.

    q = P (3 w**2 - 1) is the linear-restoring coefficient; p and w feed
    the nonlinear term and the energy density.  kind is "vacuum" or
    "stationary"; ref records provenance for artifacts.
    """

    x: np.ndarray
    h: float
    w: np.ndarray
    p: np.ndarray
    q: np.ndarray
    kind: str
    ref: dict
    config: EvolutionConfig

    @property
    def n_points(self):
        return self.x.size


def _grid_geometry(config):
    x = np.linspace(config.x_lo, config.x_hi, config.n_points)
    # left of the tortoise map's double-precision range r = 1 and P = 0
    deep = x <= -730.0
    p = np.zeros_like(x)
    r = np.ones_like(x)
    if not deep.all():
        r[~deep] = radius_r(x[~deep])
        p[~deep] = potential_factor_x(x[~deep])
    return x, r, p


def vacuum_background(config=None, sign=1):
    """Constant background W = +-1 (flat connection)."""
    if sign not in (-1, 1):
        raise ValueError("vacuum_background: sign must be +-1")
    config = config or EvolutionConfig()
    x, _, p = _grid_geometry(config)
    w = np.full_like(x, float(sign))
    return Background(
        x=x, h=config.h, w=w, p=p, q=2.0 * p,
        kind="vacuum", ref={"kind": "vacuum", "sign": sign}, config=config,
    )


def flat_background(config=None):
    """Zero-potential synthetic background (free wave equation).

    Carries no geometry: p = q = 0 and W_bg = 0, so linear and nonlinear
    modes coincide with u_tt = u_xx.  Exists for oracle tests (standing
    modes, exact pulse transport), not for physics runs.
    """
    config = config or EvolutionConfig()
    x = np.linspace(config.x_lo, config.x_hi, config.n_points)
    return Background(
        x=x, h=config.h, w=np.zeros_like(x), p=np.zeros_like(x),
        q=np.zeros_like(x),
        kind="synthetic", ref={"kind": "synthetic", "name": "flat"},
        config=config,
    )


def profile_background(profile, config=None):
    """Stationary profile resampled on the evolution grid.

    Beyond the profile's trusted radius the limit value is used, same as
    the spectral sampling.
    """
    config = config or EvolutionConfig()
    x, r, p = _grid_geometry(config)
    w = profile.eval_w(r)
    w = np.where(r > profile.r_trust, float(profile.limit_sign), w)
    return Background(
        x=x, h=config.h, w=w, p=p, q=p * (3.0 * w * w - 1.0),
        kind="stationary",
        ref={"kind": "stationary", "n": int(profile.n), "a": float(profile.a)},
        config=config,
    )


@dataclass(frozen=True)
class FieldState:
    """Deviation pair (u, pi) at time t over a background.

    Arrays are owned by the state; constructors copy their inputs.
    """

    background: Background
    u: np.ndarray
    pi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        n = self.background.n_points
        if self.u.shape != (n,) or self.pi.shape != (n,):
            raise ValueError("FieldState: field shape does not match grid")

    @property
    def x(self):
        return self.background.x

    @property
    def w_full(self):
        """Reconstructed W = W_bg + u."""
        return self.background.w + self.u


def zero_state(background):
    n = background.n_points
    return FieldState(background, np.zeros(n), np.zeros(n), 0.0)


def gaussian_pulse(background, amplitude, center, width, direction=0):
    """Gaussian deviation pulse; direction -1/0/+1 = left/standing/right.

    Moving pulses set pi = -direction * du/dx (exact for the flat wave
    equation, so the pulse is one-directional wherever V is small).
    """
    if direction not in (-1, 0, 1):
        raise ValueError("gaussian_pulse: direction must be -1, 0 or +1")
    x = background.x
    u = amplitude * np.exp(-((x - center) / width) ** 2)
    dudx = -2.0 * (x - center) / width**2 * u
    pi = -float(direction) * dudx
    return FieldState(background, u, pi, 0.0)


def unstable_mode(background):
    """Lowest discrete eigenpair of -d2/dx2 + q on the evolution grid.

    Solving on this exact grid (interior Dirichlet) makes the returned
    mode an eigenvector of the same matrix rhs() applies, so the linear
    flow moves it by exactly its rate everywhere away from the boundary
    rows.  Returns (phi, lam) with phi normalized to unit maximum and
    lam = sqrt(-mu) > 0.  Raises if the background has no negative mode
    resolvable in the window.
    """
    h = background.h
    q = background.q
    n = background.n_points
    diag = 2.0 / h**2 + q[1:-1]
    off = np.full(n - 3, -1.0 / h**2)
    mu, vec = tridiag_eigen_lowest(diag, off, 1)
    col = vec[:, 0]
    d = np.diff(col, prepend=0.0, append=0.0)
    mu0 = (float(np.dot(d, d)) / h**2 + float(np.dot(q[1:-1] * col, col))) \
        / float(np.dot(col, col))
    floor = (math.pi / (background.x[-1] - background.x[0])) ** 2
    if mu0 >= -floor:
        raise ValueError(
            "unstable_mode: no negative eigenvalue below the window floor "
            "(mu = %.3e, floor = %.3e)" % (mu0, floor)
        )
    phi = np.zeros(n)
    phi[1:-1] = col
    phi = phi / np.max(np.abs(phi))
    if phi[int(np.argmax(np.abs(phi)))] < 0.0:
        phi = -phi
    return phi, math.sqrt(-mu0)


def eigenmode_state(background, amplitude):
    """Unstable-mode initial data (u, pi) = amplitude * (phi, lam*phi).

    Returns (state, lam).  Warns when the e-folding time 1/lam is not
    small against the domain-crossing time, since the growth would then
    compete with boundary effects.
    """
    phi, lam = unstable_mode(background)
    crossing = background.x[-1] - background.x[0]
    if 1.0 / lam > 0.1 * crossing:
        warnings.warn(
            "e-folding time %.3g is not small against the domain-crossing "
            "time %.3g; growth rates will be contaminated by the boundary"
            % (1.0 / lam, crossing),
            RuntimeWarning,
        )
    u = amplitude * phi
    return FieldState(background, u, lam * u, 0.0), lam


_MODES = ("linear", "nonlinear")


def rhs(state, mode="nonlinear"):
    """Time derivative (du/dt, dpi/dt) of the deviation pair.

    Interior: du/dt = pi, dpi/dt = D2 u - q u (- P u**2 (u + 3 W_bg) in
    nonlinear mode).  With the default radiation boundary the two edge
    rows replace the pi equation by the Sommerfeld condition
    differentiated in time, dpi/dt = +-dpi/dx with a second-order
    one-sided stencil, which keeps d/dt (pi -+ du/dx) = 0 at the ends
    exactly.  Reflecting boundaries pin the edge values instead
    (dpi/dt = 0 there; with edge data starting at zero this is exact
    Dirichlet).
    """
    if mode not in _MODES:
        raise ValueError("rhs: mode must be one of %s" % (_MODES,))
    bg = state.background
    u, pi, h = state.u, state.pi, bg.h

    du = pi.copy()
    dpi = np.empty_like(pi)
    dpi[1:-1] = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / h**2 - bg.q[1:-1] * u[1:-1]
    if mode == "nonlinear":
        core = u[1:-1]
        dpi[1:-1] -= bg.p[1:-1] * core**2 * (core + 3.0 * bg.w[1:-1])
    if bg.config.boundary == "radiation":
        dpi[0] = (-3.0 * pi[0] + 4.0 * pi[1] - pi[2]) / (2.0 * h)
        dpi[-1] = -(3.0 * pi[-1] - 4.0 * pi[-2] + pi[-3]) / (2.0 * h)
    else:
        dpi[0] = 0.0
        dpi[-1] = 0.0
    return du, dpi


def step(state, dt, mode="nonlinear"):
    """One classical RK4 step; dt must respect the CFL bound."""
    bg = state.background
    if dt > bg.config.cfl * bg.h * (1.0 + 1e-12):
        raise ValueError(
            "step: dt = %.4g exceeds the CFL bound %.4g"
            % (dt, bg.config.cfl * bg.h)
        )
    u, pi, t = state.u, state.pi, state.t

    k1u, k1p = rhs(state, mode)
    s2 = FieldState(bg, u + 0.5 * dt * k1u, pi + 0.5 * dt * k1p, t + 0.5 * dt)
    k2u, k2p = rhs(s2, mode)
    s3 = FieldState(bg, u + 0.5 * dt * k2u, pi + 0.5 * dt * k2p, t + 0.5 * dt)
    k3u, k3p = rhs(s3, mode)
    s4 = FieldState(bg, u + dt * k3u, pi + dt * k3p, t + dt)
    k4u, k4p = rhs(s4, mode)

    nu = u + (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    npi = pi + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    return FieldState(bg, nu, npi, t + dt)


@dataclass(frozen=True)
class EnergyReport:
    """Energy split at one instant; total = kinetic + gradient + potential."""

    t: float
    total: float
    kinetic: float
    gradient: float
    potential: float
    deviation_norm: float
    max_abs_u: float


def deviation_norm(state):
    """Flat energy-type norm sqrt(int pi**2 + (u')**2 + u**2 dx)."""
    u, pi, h = state.u, state.pi, state.background.h
    du = np.diff(u)
    return math.sqrt(
        h * float(np.dot(pi, pi))
        + float(np.dot(du, du)) / h
        + h * float(np.dot(u, u))
    )


def energy(state):
    """Energy of the reconstructed field W = W_bg + u.

    Integrand is Wdot**2 + (W')**2 + (P/2)(W**2-1)**2; kinetic and
    potential parts use the trapezoid rule, the gradient part the
    staggered cell sum that is the summation-by-parts partner of the
    interior Laplacian stencil.
    """
    bg = state.background
    h = bg.h
    w_full = bg.w + state.u
    pi = state.pi
    kinetic = float(np.trapezoid(pi * pi, dx=h))
    dw = np.diff(w_full)
    gradient = float(np.dot(dw, dw)) / h
    dens = 0.5 * bg.p * (w_full * w_full - 1.0) ** 2
    potential = float(np.trapezoid(dens, dx=h))
    return EnergyReport(
        t=float(state.t),
        total=kinetic + gradient + potential,
        kinetic=kinetic,
        gradient=gradient,
        potential=potential,
        deviation_norm=deviation_norm(state),
        max_abs_u=float(np.max(np.abs(state.u))),
    )


@dataclass(frozen=True)
class EvolutionSeries:
    """Probe time series of a run plus its final state and stop reason.

    stop_reason is "completed", "saturation" (max|u| crossed the
    configured threshold; expected for instability runs), "overflow"
    (|W| left the guard band) or "nan".
    """

    t: np.ndarray
    total: np.ndarray
    kinetic: np.ndarray
    gradient: np.ndarray
    potential: np.ndarray
    deviation_norm: np.ndarray
    max_abs_u: np.ndarray
    final_state: FieldState
    stop_reason: str
    mode: str
    dt: float
    snapshots: dict = field(default_factory=dict)

    @property
    def n_probes(self):
        return self.t.size


def evolve(initial, t_max, dt=None, mode="nonlinear", probes=400,
           snapshot_times=()):
    """March the state to t_max, probing energy along the way.

    dt defaults to cfl*h.  The series is sampled at a stride chosen to
    land about `probes` samples; the initial and final instants are
    always included.  Early exits (NaN, saturation, overflow guard) are
    recorded in stop_reason, not raised: instability runs are expected
    to leave the linear regime.  snapshot_times are rounded to the
    nearest probe instant and the full (u, pi) stored.
    """
    if mode not in _MODES:
        raise ValueError("evolve: mode must be one of %s" % (_MODES,))
    bg = initial.background
    cfg = bg.config
    if dt is None:
        dt = cfg.cfl * bg.h
    if dt <= 0.0:
        raise ValueError("evolve: dt must be positive")
    if dt > cfg.cfl * bg.h * (1.0 + 1e-12):
        raise ValueError(
            "evolve: dt = %.4g exceeds the CFL bound %.4g" % (dt, cfg.cfl * bg.h)
        )
    n_steps = max(1, int(math.ceil(t_max / dt - 1e-12)))
    stride = max(1, n_steps // max(1, probes))
    snap_left = sorted(float(ts) for ts in snapshot_times)

    rows = []
    snaps = {}
    state = initial
    stop_reason = "completed"

    def probe(st):
        rows.append(energy(st))
        while snap_left and st.t >= snap_left[0] - 0.5 * dt * stride:
            snaps[snap_left.pop(0)] = st

    probe(state)
    guard = 1.0 + cfg.overflow_guard
    sat = cfg.saturation_threshold
    for i in range(1, n_steps + 1):
        state = step(state, dt, mode)
        if not (np.isfinite(state.u).all() and np.isfinite(state.pi).all()):
            stop_reason = "nan"
            break
        if i % stride == 0 or i == n_steps:
            probe(state)
            m = rows[-1].max_abs_u
            if sat is not None and m > sat:
                stop_reason = "saturation"
                break
            if np.max(np.abs(bg.w + state.u)) > guard:
                stop_reason = "overflow"
                break

    return EvolutionSeries(
        t=np.array([e.t for e in rows]),
        total=np.array([e.total for e in rows]),
        kinetic=np.array([e.kinetic for e in rows]),
        gradient=np.array([e.gradient for e in rows]),
        potential=np.array([e.potential for e in rows]),
        deviation_norm=np.array([e.deviation_norm for e in rows]),
        max_abs_u=np.array([e.max_abs_u for e in rows]),
        final_state=state,
        stop_reason=stop_reason,
        mode=mode,
        dt=float(dt),
        snapshots=snaps,
    )


@dataclass(frozen=True)
class GrowthFit:
    """Exponential-rate fit of a deviation-norm series.

    status "ok" carries the fitted rate; "no_growth" is the explicit
    negative result (no window where the norm grew tenfold while staying
    under saturation), with the remaining fields None.
    """

    lambda_measured: float | None
    fit_window: tuple | None
    r_squared: float | None
    lambda_predicted: float | None
    status: str = "ok"


def fit_growth(series, lambda_predicted=None, min_samples=20):
    """Least-squares rate of log deviation-norm inside the linear window.

    The window opens once the norm exceeds 10x its initial value
    (transients and alignment with the growing mode are over) and closes
    at the last sample with max|u| below the saturation threshold.
    """
    norm = series.deviation_norm
    t = series.t
    if norm.size < 3 or norm[0] <= 0.0:
        return GrowthFit(None, None, None, lambda_predicted, "no_growth")
    sat = series.final_state.background.config.saturation_threshold
    ok = norm >= 10.0 * norm[0]
    if sat is not None:
        ok &= series.max_abs_u <= sat
    idx = np.nonzero(ok)[0]
    if idx.size < min_samples:
        return GrowthFit(None, None, None, lambda_predicted, "no_growth")
    lo, hi = idx[0], idx[-1]
    ts = t[lo:hi + 1]
    ys = np.log(norm[lo:hi + 1])
    slope, intercept = np.polyfit(ts, ys, 1)
    fitted = slope * ts + intercept
    ss_res = float(np.sum((ys - fitted) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 0.0
    return GrowthFit(
        lambda_measured=float(slope),
        fit_window=(float(ts[0]), float(ts[-1])),
        r_squared=float(r2),
        lambda_predicted=lambda_predicted,
        status="ok",
    )


def write_series_csv(path, series):
    """Probe series as delimited text, one row per probe."""
    header = ["t", "energy_total", "energy_kinetic", "energy_gradient",
              "energy_potential", "deviation_norm", "max_abs_u"]
    fileio.write_csv(path, header, [
        series.t, series.total, series.kinetic, series.gradient,
        series.potential, series.deviation_norm, series.max_abs_u,
    ])


def write_snapshot_csv(path, state):
    """Field snapshot (x, u, pi) at one instant."""
    fileio.write_csv(path, ["x", "u", "pi"], [state.x, state.u, state.pi])


def write_growth(path, fit):
    """Growth-fit summary JSON."""
    payload = {
        "format_version": fileio.FORMAT_VERSION,
        "status": fit.status,
        "lambda_measured": fit.lambda_measured,
        "lambda_predicted": fit.lambda_predicted,
        "fit_window": list(fit.fit_window) if fit.fit_window else None,
        "r_squared": fit.r_squared,
    }
    fileio.write_json(path, payload)
