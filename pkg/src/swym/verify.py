"""Invariant suite runnable from the command line (`swym verify`).

Each check is registered with a stable name and a one-line statement of
the property it measures, runs at desk scale (seconds, not the full
acceptance protocol), and reports a measured value against its bound.
Expensive fixtures (profiles, spectra) are computed once per run and
shared through a context cache.  The report is deliberately free of
wall-clock times so identical invocations serialize to identical bytes;
timings go to the console only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fileio
from . import evolution as ev
from . import spectrum as sp
from .geometry import radius_r, tortoise_x
from .numerics import (
    EventSpec,
    IntegratorConfig,
    bisect,
    integrate,
    tridiag_eigen_lowest,
)
from .stationary import (
    A1_EXACT,
    SearchConfig,
    envelope_bound,
    find_a_n,
    hamiltonian_h,
    prufer_zero_count,
    shoot,
    w1_closed_form,
)

__all__ = [
    "CheckResult",
    "VerifyContext",
    "check_names",
    "run_checks",
    "stationary_property_checks",
    "write_report",
]


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named invariant check."""

    name: str
    statement: str
    measured: float | None
    bound: float | None
    passed: bool
    detail: str = ""


class VerifyContext:
    """Lazy shared fixtures so independent checks do not recompute them."""

    def __init__(self, search_config=None):
        self.search_config = search_config or SearchConfig()
        self._cache = {}

    def profile(self, n):
        key = ("profile", n)
        if key not in self._cache:
            self._cache[key] = find_a_n(n, self.search_config)
        return self._cache[key]

    def potential(self, n):
        key = ("potential", n)
        if key not in self._cache:
            self._cache[key] = sp.build_potential(self.profile(n))
        return self._cache[key]

    def fd_report(self, n):
        key = ("fd", n)
        if key not in self._cache:
            self._cache[key] = sp.eigen_fd(self.potential(n), k=n + 1)
        return self._cache[key]

    def shooting_report(self, n):
        key = ("shooting", n)
        if key not in self._cache:
            self._cache[key] = sp.eigen_shooting(self.potential(n), k=n + 1)
        return self._cache[key]

    def background(self, n):
        key = ("background", n)
        if key not in self._cache:
            self._cache[key] = ev.profile_background(self.profile(n))
        return self._cache[key]


# ---------------------------------------------------------------------------
# stationary profile property suite (shared with the CLI and acceptance)

def stationary_property_checks(profile, prefix="stationary"):
    """Pointwise property checks every accepted profile must satisfy.

    Returns CheckResults for: the unit derivative bound, the
    no-wrong-extremum rule, the barrier envelope above r = 3, the
    monotone energy diagnostic in the outgoing regime, and agreement of
    the winding-angle zero count with a plain sign scan.
    """
    r, w, wp = profile.r, profile.w, profile.wp
    out = []

    m = float(np.max(np.abs(wp)))
    out.append(CheckResult(
        f"{prefix}-derivative-bound",
        "profile slope magnitude stays within the unit bound",
        m, 1.0 + 1e-10, m <= 1.0 + 1e-10,
    ))

    interior = (wp[:-1] * wp[1:] < 0.0)
    idx = np.nonzero(interior)[0]
    bad = 0
    for i in idx:
        # slope flips sign across i; classify the extremum between
        if wp[i] < 0.0 < wp[i + 1] and w[i] > 0.0 and w[i + 1] > 0.0:
            bad += 1      # local minimum at positive W
        if wp[i] > 0.0 > wp[i + 1] and w[i] < 0.0 and w[i + 1] < 0.0:
            bad += 1      # local maximum at negative W
    out.append(CheckResult(
        f"{prefix}-extremum-rule",
        "no positive local minima or negative local maxima",
        float(bad), 0.0, bad == 0,
    ))

    far = r >= 3.0
    if far.any():
        env = envelope_bound(r[far])
        worst = float(np.max(np.abs(w[far]) - env))
        out.append(CheckResult(
            f"{prefix}-envelope",
            "|W| stays under the barrier 1 - 1/r - 1/(2 r**2) for r >= 3",
            worst, 1e-8, worst <= 1e-8,
        ))

    hval = hamiltonian_h(r, w, wp)
    dh = np.diff(hval) / np.diff(r)
    mono = far[:-1] & (w[:-1] * wp[:-1] <= 0.0)
    worst_dh = float(np.min(dh[mono])) if mono.any() else 0.0
    out.append(CheckResult(
        f"{prefix}-energy-monotone",
        "discrete energy diagnostic is nondecreasing where r >= 3 and "
        "W moves toward zero",
        worst_dh, -1e-8, worst_dh >= -1e-8,
    ))

    winding = prufer_zero_count(r, w, wp)
    scan = int(np.count_nonzero(w[:-1] * w[1:] < 0.0))
    out.append(CheckResult(
        f"{prefix}-zero-count-consistent",
        "winding-angle zero count agrees with the sign-scan count",
        float(winding - scan), 0.0, winding == scan,
    ))

    limit_err = abs(float(w[-1]) - profile.limit_sign)
    out.append(CheckResult(
        f"{prefix}-limit",
        "profile approaches its limit sign at the far boundary",
        limit_err, 1e-5, limit_err <= 1e-5,
    ))
    return out


# ---------------------------------------------------------------------------
# individual checks

def _chk_geometry_roundtrip(ctx):
    r = np.geomspace(1.0 + 1e-8, 1e6, 20000)
    err = np.abs(radius_r(tortoise_x(r)) - r) / r
    m = float(np.max(err))
    return [CheckResult(
        "geometry-roundtrip",
        "radius -> tortoise -> radius round-trips to relative 1e-12",
        m, 1e-12, m <= 1e-12,
    )]


def _chk_numerics_event(ctx):
    cfg = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)

    def f(t, y):
        return np.array([y[1], -y[0]])

    traj = integrate(f, 0.0, np.array([1.0, 0.0]), 2.0, cfg,
                     events=(EventSpec(fn=lambda t, y: y[0], name="zero"),))
    t0 = traj.events[0].t
    m = abs(t0 - math.pi / 2.0)
    return [CheckResult(
        "numerics-event-location",
        "oscillator zero crossing located at pi/2 by event detection",
        m, 1e-9, m <= 1e-9,
    )]


def _chk_numerics_bisect(ctx):
    res = bisect(lambda v: v * v > 2.0, 1.0, 2.0, tol=1e-13)
    root = 0.5 * (res.lo + res.hi)
    m = abs(root - math.sqrt(2.0))
    return [CheckResult(
        "numerics-bisect",
        "label bisection pins sqrt(2) to 1e-12",
        m, 1e-12, m <= 1e-12,
    )]


def _chk_numerics_laplacian(ctx):
    n = 400
    h = 1.0 / (n + 1)
    diag = np.full(n, 2.0 / h**2)
    off = np.full(n - 1, -1.0 / h**2)
    w, _ = tridiag_eigen_lowest(diag, off, 5)
    j = np.arange(1, 6)
    exact = (4.0 / h**2) * np.sin(np.pi * j * h / 2.0) ** 2
    m = float(np.max(np.abs(w - exact) / exact))
    return [CheckResult(
        "numerics-laplacian",
        "discrete Laplacian eigenvalues match the analytic formula to 0.1%",
        m, 1e-3, m <= 1e-3,
    )]


def _chk_spectrum_square_well(ctx):
    from scipy.optimize import brentq

    e = brentq(lambda s: math.sqrt(1.0 - s) * math.tan(math.sqrt(1.0 - s))
               - math.sqrt(s), 1e-12, 1.0 - 1e-12, xtol=1e-15)
    oracle = -e
    h = 0.01
    x = np.linspace(-20.0, 20.0, 4001)
    v = np.where(np.abs(x) < 1.0 - 1e-12, -1.0, 0.0)
    v[np.isclose(np.abs(x), 1.0, atol=1e-12)] = -0.5
    pot = sp.synthetic_potential(x, v, name="square-well")
    fd = sp.eigen_fd(pot, k=1)
    m = abs(fd.eigenvalues[0] - oracle) / abs(oracle)
    return [CheckResult(
        "spectrum-square-well",
        "square-well bound state matches the transcendental oracle to 1e-6",
        float(m), 1e-6, m <= 1e-6,
        detail="jump nodes carry the mean value so the stencil stays "
               "second order; h = %.3g" % h,
    )]


def _chk_stationary_horizon_value(ctx):
    p = ctx.profile(1)
    m = abs(p.a - A1_EXACT)
    return [CheckResult(
        "stationary-horizon-value",
        "one-zero profile starts at 2 - sqrt(3) at the horizon",
        float(m), 1e-8, m <= 1e-8,
    )]


def _chk_stationary_closed_form(ctx):
    p = ctx.profile(1)
    grid = np.geomspace(1.0 + 1e-9, 1e4, 4000)
    m = float(np.max(np.abs(p.eval_w(grid) - w1_closed_form(grid))))
    return [CheckResult(
        "stationary-closed-form",
        "computed one-zero profile matches its rational closed form to 1e-7",
        m, 1e-7, m <= 1e-7,
    )]


def _chk_stationary_properties(ctx):
    return stationary_property_checks(ctx.profile(1))


def _chk_stationary_residual(ctx):
    p = ctx.profile(1)
    m = float(p.residual_norm)
    return [CheckResult(
        "stationary-residual",
        "accepted profile satisfies the stationary equation in scaled "
        "sup norm",
        m, 1e-6, m <= 1e-6,
    )]


def _chk_stationary_ordering(ctx):
    a1 = ctx.profile(1).a
    a2 = ctx.profile(2).a
    return [CheckResult(
        "stationary-ordering",
        "horizon values decrease with the zero count",
        float(a2 - a1), 0.0, a2 < a1,
    )]


def _chk_stationary_continuity(ctx):
    cfg = ctx.search_config
    a = ctx.profile(1).a * (1.0 + 3e-7)
    base = shoot(a, cfg, keep_dense=True)
    bumped = shoot(a * (1.0 + 1e-9), cfg, keep_dense=True)
    grid = np.linspace(1.5, 4.0, 64)
    m = float(np.max(np.abs(base.dense(grid)[0] - bumped.dense(grid)[0])))
    return [CheckResult(
        "stationary-continuity",
        "shot trajectories move continuously with the horizon value",
        m, 1e-6, m <= 1e-6,
        detail="probe off the critical value; relative nudge 1e-9",
    )]


def _barrier_operator(r):
    # stationary operator applied to Q = 1 - 1/r - 1/(2 r**2), exact
    # derivatives: Q' = 1/r**2 + 1/r**3, Q'' = -2/r**3 - 3/r**4
    q = envelope_bound(r)
    qp = 1.0 / r**2 + 1.0 / r**3
    qpp = -2.0 / r**3 - 3.0 / r**4
    return (1.0 - 1.0 / r) * qpp + qp / r**2 + q * (1.0 - q * q) / r**2


def _chk_stationary_barrier_operator(ctx):
    r = np.geomspace(3.0, 1e6, 200000)
    val = _barrier_operator(r)
    at3 = float(_barrier_operator(np.array([3.0]))[0])
    strict = float(np.max(val))
    ok = at3 <= -1.0 / 81.0 and strict < 0.0
    return [CheckResult(
        "stationary-barrier-operator",
        "the barrier is a strict supersolution: operator value at r = 3 "
        "below -1/81 and negative beyond",
        at3, -1.0 / 81.0, ok,
        detail="sup over [3, 1e6] is %.3e" % strict,
    )]


def _chk_spectrum_integral(ctx):
    pot = ctx.potential(1)
    bound = 2.0 * (3.0 * A1_EXACT**2 - 1.0) / 3.0 + 10.0 / 27.0
    v = pot.integral_v
    return [
        CheckResult(
            "spectrum-integral-negative",
            "line integral of the linearization potential is negative",
            float(v), 0.0, v < 0.0,
        ),
        CheckResult(
            "spectrum-integral-bound",
            "one-zero potential integral obeys its closed-form bound",
            float(v), float(bound), v <= bound,
        ),
    ]


def _chk_spectrum_dual(ctx):
    fd = ctx.fd_report(1)
    sh = ctx.shooting_report(1)
    if fd.count == 0 or fd.count != sh.count:
        return [CheckResult(
            "spectrum-dual-agreement",
            "independent eigensolvers agree on the negative spectrum",
            None, 1e-6, False,
            detail="state counts differ: fd %d, shooting %d"
                   % (fd.count, sh.count),
        )]
    m = max(abs(f - s) / abs(f) for f, s in zip(fd.eigenvalues, sh.eigenvalues))
    return [CheckResult(
        "spectrum-dual-agreement",
        "independent eigensolvers agree on the negative spectrum to 1e-6",
        float(m), 1e-6, m <= 1e-6,
    )]


def _chk_spectrum_count(ctx):
    fd = ctx.fd_report(1)
    return [CheckResult(
        "spectrum-count",
        "one-zero potential carries at least one bound state",
        float(fd.count), 1.0, fd.count >= 1,
        detail="expected exactly 1; found %d" % fd.count,
    )]


def _chk_spectrum_nodes(ctx):
    fd = ctx.fd_report(1)
    sh = ctx.shooting_report(1)
    ok = (fd.node_counts() == tuple(range(fd.count))
          and sh.node_counts() == tuple(range(sh.count)))
    return [CheckResult(
        "spectrum-oscillation",
        "eigenfunction i carries exactly i sign changes",
        None, None, ok,
        detail="fd %s shooting %s" % (fd.node_counts(), sh.node_counts()),
    )]


def _chk_spectrum_window(ctx):
    fd = ctx.fd_report(1)
    wide = sp.build_potential(ctx.profile(1), window=(-90.0, 600.0),
                              n_points=24577)
    fdw = sp.eigen_fd(wide, k=2)
    m = abs(fd.eigenvalues[0] - fdw.eigenvalues[0])
    return [CheckResult(
        "spectrum-window-robustness",
        "enlarging the window by half moves the ground state below 1e-8",
        float(m), 1e-8, m <= 1e-8,
    )]


def _chk_spectrum_qform(ctx):
    fd = ctx.fd_report(1)
    res = sp.quadratic_form_residual(fd, ctx.potential(1))
    m = max(res) if res else 0.0
    return [CheckResult(
        "spectrum-quadratic-form",
        "each pair satisfies the discrete quadratic-form identity to 1e-8",
        float(m), 1e-8, m <= 1e-8,
    )]


def _chk_spectrum_inequalities(ctx):
    rows = [row for row in sp.check_eigenfunction_inequalities(
        ctx.fd_report(1), ctx.potential(1)) if not row.get("skipped")]
    ok = all(row["pass"] for row in rows) and len(rows) > 0
    worst = min((min(row["mass_slack"], row["sign_slack"]) for row in rows),
                default=0.0)
    return [CheckResult(
        "spectrum-eigenfunction-inequalities",
        "weighted-mass and potential-sign inequalities hold with slack",
        float(worst), 0.0, ok,
    )]


def _chk_evolution_fixed_point(ctx):
    bg = ctx.background(1)
    series = ev.evolve(ev.zero_state(bg), 20.0, mode="nonlinear", probes=20)
    m = float(np.max(series.max_abs_u))
    return [CheckResult(
        "evolution-fixed-point",
        "zero deviation about a stationary background stays below 1e-9",
        m, 1e-9, m <= 1e-9,
    )]


def _chk_evolution_odd_symmetry(ctx):
    plus = ev.vacuum_background()
    minus = ev.vacuum_background(sign=-1)
    sa = ev.evolve(ev.gaussian_pulse(plus, 1e-3, 100.0, 5.0), 10.0,
                   mode="nonlinear", probes=5)
    sb = ev.evolve(ev.gaussian_pulse(minus, -1e-3, 100.0, 5.0), 10.0,
                   mode="nonlinear", probes=5)
    m = float(np.max(np.abs(sa.final_state.u + sb.final_state.u)))
    return [CheckResult(
        "evolution-odd-symmetry",
        "negating the field maps solutions to solutions exactly",
        m, 0.0, m == 0.0,
    )]


def _chk_evolution_conservation(ctx):
    bg = ctx.background(1)
    pulse = ev.gaussian_pulse(bg, 5e-3, 50.0, 5.0)
    series = ev.evolve(pulse, 30.0, mode="nonlinear", probes=30)
    m = float(np.max(np.abs(series.total - series.total[0])) / series.total[0])
    return [CheckResult(
        "evolution-conservation",
        "nonlinear energy drifts below 1e-6 relative before boundary "
        "contact",
        m, 1e-6, m <= 1e-6,
    )]


def _chk_evolution_transparency(ctx):
    bg = ev.vacuum_background()
    pulse = ev.gaussian_pulse(bg, 1e-3, 100.0, 5.0, direction=1)
    series = ev.evolve(pulse, 230.0, mode="nonlinear", probes=20)
    m = float(series.total[-1] / series.total[0])
    return [CheckResult(
        "evolution-transparency",
        "an outgoing pulse leaves at most 1e-3 of its energy behind",
        m, 1e-3, m <= 1e-3,
    )]


def _chk_evolution_growth(ctx):
    bg = ctx.background(1)
    lam_ref = float(ctx.fd_report(1).growth_rates[0])
    state, _ = ev.eigenmode_state(bg, 1e-5)
    series = ev.evolve(state, 60.0, mode="linear", probes=600)
    fit = ev.fit_growth(series, lambda_predicted=lam_ref)
    if fit.status != "ok":
        return [CheckResult(
            "evolution-growth-rate",
            "unstable-mode growth rate matches the spectral prediction",
            None, 0.02, False, detail="fit returned no growth",
        )]
    m = abs(fit.lambda_measured - lam_ref) / lam_ref
    return [CheckResult(
        "evolution-growth-rate",
        "unstable-mode growth rate matches the spectral prediction to 2%",
        float(m), 0.02, m <= 0.02 and fit.r_squared >= 0.999,
        detail="fitted %.8f predicted %.8f r2 %.6f"
               % (fit.lambda_measured, lam_ref, fit.r_squared),
    )]


def _chk_fileio_determinism(ctx):
    payload = {"format_version": fileio.FORMAT_VERSION,
               "values": [math.pi, 1.0 / 3.0, 6.4641016151377535],
               "nested": {"a": 1, "b": None}}
    a = fileio.dumps_json(payload)
    b = fileio.dumps_json(payload)
    return [CheckResult(
        "fileio-determinism",
        "identical payloads serialize to identical bytes",
        None, None, a == b,
    )]


def _chk_fileio_version(ctx):
    try:
        fileio.check_format_version({"format_version": "999.0"})
        ok = False
    except fileio.FormatVersionError:
        ok = True
    return [CheckResult(
        "fileio-version-reject",
        "readers reject files from an unknown major format version",
        None, None, ok,
    )]


# every name a check function can emit, declared up front so a filtered
# run can skip the work entirely rather than compute and discard
_PROPERTY_NAMES = (
    "stationary-derivative-bound",
    "stationary-extremum-rule",
    "stationary-envelope",
    "stationary-energy-monotone",
    "stationary-zero-count-consistent",
    "stationary-limit",
)

_REGISTRY = [
    (_chk_geometry_roundtrip, ("geometry-roundtrip",)),
    (_chk_numerics_event, ("numerics-event-location",)),
    (_chk_numerics_bisect, ("numerics-bisect",)),
    (_chk_numerics_laplacian, ("numerics-laplacian",)),
    (_chk_spectrum_square_well, ("spectrum-square-well",)),
    (_chk_stationary_horizon_value, ("stationary-horizon-value",)),
    (_chk_stationary_closed_form, ("stationary-closed-form",)),
    (_chk_stationary_properties, _PROPERTY_NAMES),
    (_chk_stationary_residual, ("stationary-residual",)),
    (_chk_stationary_ordering, ("stationary-ordering",)),
    (_chk_stationary_continuity, ("stationary-continuity",)),
    (_chk_stationary_barrier_operator, ("stationary-barrier-operator",)),
    (_chk_spectrum_integral,
     ("spectrum-integral-negative", "spectrum-integral-bound")),
    (_chk_spectrum_dual, ("spectrum-dual-agreement",)),
    (_chk_spectrum_count, ("spectrum-count",)),
    (_chk_spectrum_nodes, ("spectrum-oscillation",)),
    (_chk_spectrum_window, ("spectrum-window-robustness",)),
    (_chk_spectrum_qform, ("spectrum-quadratic-form",)),
    (_chk_spectrum_inequalities, ("spectrum-eigenfunction-inequalities",)),
    (_chk_evolution_fixed_point, ("evolution-fixed-point",)),
    (_chk_evolution_odd_symmetry, ("evolution-odd-symmetry",)),
    (_chk_evolution_conservation, ("evolution-conservation",)),
    (_chk_evolution_transparency, ("evolution-transparency",)),
    (_chk_evolution_growth, ("evolution-growth-rate",)),
    (_chk_fileio_determinism, ("fileio-determinism",)),
    (_chk_fileio_version, ("fileio-version-reject",)),
]


def check_names():
    """All check names a full run can emit, in report order."""
    out = []
    for _, names in _REGISTRY:
        out.extend(names)
    return out


def run_checks(name_filter=None, context=None, progress=None):
    """Run the suite (optionally substring-filtered) and collect results.

    The filter is a plain substring match against declared check names;
    functions with no matching name are skipped outright, so a filtered
    run costs only the fixtures its own checks touch.  A failed check
    never aborts the run; exceptions become failed results so one broken
    module cannot hide another's report.
    """
    ctx = context or VerifyContext()
    results = []
    for fn, names in _REGISTRY:
        if name_filter and not any(name_filter in nm for nm in names):
            continue
        try:
            rows = fn(ctx)
        except Exception as exc:  # surface, do not abort the suite
            rows = [CheckResult(names[0], "check raised instead of reporting",
                                None, None, False,
                                detail="%s: %s" % (type(exc).__name__, exc))]
        for row in rows:
            if name_filter and name_filter not in row.name:
                continue
            results.append(row)
            if progress is not None:
                progress(row)
    return results


def write_report(path, results):
    """Deterministic JSON report of a verify run."""
    payload = {
        "format_version": fileio.FORMAT_VERSION,
        "checks": [
            {
                "name": r.name,
                "statement": r.statement,
                "measured": r.measured,
                "bound": r.bound,
                "passed": r.passed,
                "detail": r.detail,
            }
            for r in results
        ],
        "counts": {
            "total": len(results),
            "passed": sum(1 for r in results if r.passed),
            "failed": sum(1 for r in results if not r.passed),
        },
        "all_passed": all(r.passed for r in results),
    }
    fileio.write_json(path, payload)
    return payload
