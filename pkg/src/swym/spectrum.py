"""Linearization spectrum around a stationary profile.

Perturbing W = W_n + u and keeping the linear terms turns the wave equation
into a Schroedinger problem on the tortoise line,

    A_n u = -u_xx + V_n(x) u,        V_n = P (3 W_n**2 - 1),

with P = (r-1)/r**3 evaluated through the tortoise map.  V_n vanishes
exponentially toward the horizon (x -> -inf) and like 2/x**2 far out, and
the integral of V_n over the line is negative for every accepted profile,
which forces at least one negative eigenvalue mu_0 = -lambda_0**2 and hence
an exponentially growing mode of the linearized flow.

Two deliberately different eigensolvers compute the negative spectrum:

* ``eigen_fd``: symmetric second-order finite differences with Dirichlet
  ends on the uniform grid, solved by tridiagonal bisection plus inverse
  iteration, with Richardson extrapolation over the grid and its stride-2
  coarsening (both spacings share the same nodes, so no interpolation of V
  enters the h**2 elimination).
* ``eigen_shooting``: Numerov sweeps with decaying boundary data, locating
  each eigenvalue by bisection on the Sturm node count of the left sweep
  and gluing a two-sided eigenfunction at the well bottom.

The two discretizations share nothing but the potential samples; their
agreement (``cross_check``) is the acceptance oracle for the computed
rates.  Eigenvalues are only reported when they clear the resolution floor
(pi/L)**2 of the truncated box, so a state indistinguishable from the
discretized continuum edge is never presented as bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import fileio
from .geometry import potential_factor_x, radius_r
from .numerics import tridiag_eigen_lowest
from .stationary import StationaryProfile

__all__ = [
    "SpectrumError",
    "PotentialProfile",
    "SpectrumReport",
    "build_potential",
    "synthetic_potential",
    "integral_V",
    "eigen_fd",
    "eigen_shooting",
    "cross_check",
    "check_eigenfunction_inequalities",
    "quadratic_form_residual",
    "write_spectrum",
    "DEFAULT_WINDOW",
    "DEFAULT_POINTS",
]

DEFAULT_WINDOW = (-60.0, 400.0)
DEFAULT_POINTS = 16385


class SpectrumError(RuntimeError):
    """Eigensolver failure or an inconsistent spectral result."""


@dataclass(frozen=True)
class PotentialProfile:
    """Sampled potential on a uniform tortoise grid.

    p holds the wave-equation prefactor P at the same nodes (None for
    synthetic potentials, which carry no geometry); integral_v is the full
    line integral of V computed in the radial form with its analytic tail,
    not a quadrature over the truncated window.  extended marks whether any
    grid point lay beyond the profile's trusted radius and was filled with
    the limit value.

    The left end of the window is always deep in the exponential falloff.
    The right end follows a 2/x**2 falloff, so at the default x_hi = 400
    the boundary value is ~1e-4 of max|V| rather than the 1e-6 the left end
    reaches; the tail is positive (repulsive) there, which is why Dirichlet
    truncation still perturbs bound states only exponentially.  end_ratios
    reports both numbers so callers can widen the window when they need the
    strict smallness on the right as well.
    """

    x: np.ndarray
    v: np.ndarray
    h: float
    kind: str
    solution_ref: dict
    integral_v: float
    limit_sign: int = 0
    p: np.ndarray | None = field(default=None, repr=False)
    r: np.ndarray | None = field(default=None, repr=False)
    r_trust: float = math.inf
    extended: bool = False
    background: object = field(default=None, repr=False, compare=False)

    @property
    def window(self):
        return (float(self.x[0]), float(self.x[-1]))

    @property
    def n_points(self):
        return int(self.x.size)

    def end_ratios(self):
        """(|V(x_lo)|, |V(x_hi)|) divided by max|V| over the grid."""
        scale = float(np.max(np.abs(self.v)))
        return abs(float(self.v[0])) / scale, abs(float(self.v[-1])) / scale

    def resolution_floor(self):
        """Smallest |mu| the Dirichlet box can distinguish from 0."""
        length = self.x[-1] - self.x[0]
        return (math.pi / length) ** 2


@dataclass(frozen=True)
class SpectrumReport:
    """Negative eigenvalues mu_i = -lambda_i**2 with eigenfunctions.

    eigenfunctions has one column per state on the potential grid, unit
    discrete L2 norm, sign fixed so the largest-magnitude sample is
    positive.  grid_meta records spacing, window, the reporting floor, and
    per-state error estimates; cross_check_delta is filled by
    ``cross_check`` and stays None for a report that was never compared.
    """

    eigenvalues: np.ndarray
    growth_rates: np.ndarray
    eigenfunctions: np.ndarray
    method: str
    grid_meta: dict
    cross_check_delta: float | None = None

    @property
    def count(self):
        return int(self.eigenvalues.size)

    def node_counts(self):
        return tuple(
            _count_nodes(self.eigenfunctions[:, i]) for i in range(self.count)
        )


def _count_nodes(phi):
    """Interior sign changes, ignoring samples below 1e-9 of the peak."""
    scale = np.max(np.abs(phi))
    if scale == 0.0:
        return 0
    live = phi[np.abs(phi) > 1e-9 * scale]
    return int(np.count_nonzero(live[:-1] * live[1:] < 0.0))


def recommended_grid(n):
    """Window and point count resolving all n expected bound states.

    Binding loosens steeply with the state index: the outermost state of
    the n = 3 potential sits at mu ~ -4.9e-7 and decays at rate
    sqrt(-mu) ~ 7e-4, so both walls must recede far enough that the
    Dirichlet confinement shift drops below the 1e-6 cross-method budget.
    The left extension is cheap (the potential is exactly zero there);
    the right wall also sets the reporting floor (pi/L)**2.  For n >= 4
    the next state (~ -4e-10) would need a window ~1e6 wide; no tabulated
    grid is provided and the n = 3 window is returned, which resolves
    three of the expected states.
    """
    if n <= 1:
        return DEFAULT_WINDOW, DEFAULT_POINTS
    if n == 2:
        return (-340.0, 400.0), 24669
    return (-9000.0, 16000.0), 500001


def build_potential(profile, window=DEFAULT_WINDOW, n_points=DEFAULT_POINTS,
                    extend_by_limit=True, source=None):
    """Sample V = P (3 W**2 - 1) for a stationary profile on a uniform grid.

    n_points must be odd so the stride-2 coarsening used by the Richardson
    step lands on shared nodes.  Grid points beyond the profile's trusted
    radius take W = limit_sign when extend_by_limit is set (the default;
    the substitution changes V by less than 3P there) and raise otherwise.
    """
    x_lo, x_hi = float(window[0]), float(window[1])
    if not x_lo < x_hi:
        raise ValueError("build_potential: window must satisfy x_lo < x_hi")
    if n_points < 3 or n_points % 2 == 0:
        raise ValueError("build_potential: n_points must be odd and >= 3")
    x = np.linspace(x_lo, x_hi, n_points)
    # left of x ~ -730 the tortoise map underflows (r - 1 < e^(x-1) drops
    # out of double range); there r = 1 and P = 0 exactly, so the sampled
    # potential is an exact zero rather than a map failure
    deep = x <= -730.0
    r = np.ones_like(x)
    p = np.zeros_like(x)
    if not deep.all():
        r[~deep] = radius_r(x[~deep])
        p[~deep] = potential_factor_x(x[~deep])

    w = profile.eval_w(r)
    beyond = r > profile.r_trust
    extended = bool(beyond.any())
    if extended:
        if not extend_by_limit:
            raise ValueError(
                "window reaches r = %.4g beyond the trusted radius %.4g; "
                "pass extend_by_limit=True to fill with the limit value"
                % (float(np.max(r)), profile.r_trust)
            )
        w = np.where(beyond, float(profile.limit_sign), w)

    v = p * (3.0 * w * w - 1.0)
    if np.any(v < -p - 1e-9) or np.any(v > 2.0 * p + 1e-9):
        raise SpectrumError("potential escaped its [-P, 2P] envelope")

    ref = {"kind": "stationary" if profile.n else "vacuum",
           "n": int(profile.n), "a": float(profile.a)}
    if source is not None:
        ref["source"] = str(source)
    return PotentialProfile(
        x=x,
        v=v,
        h=float(x[1] - x[0]),
        kind=ref["kind"],
        solution_ref=ref,
        integral_v=integral_V_profile(profile),
        limit_sign=int(profile.limit_sign),
        p=p,
        r=r,
        r_trust=float(profile.r_trust),
        extended=extended,
        background=profile,
    )


def synthetic_potential(x, v, name="synthetic"):
    """Wrap explicit (x, v) samples as a PotentialProfile.

    Carries no geometry: p is None, so the P-dependent inequality checks
    are skipped, and integral_v is the plain trapezoid over the window.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.ndim != 1 or x.size < 3 or v.shape != x.shape:
        raise ValueError("synthetic_potential: need matching 1-D x, v")
    steps = np.diff(x)
    # rounding of the node coordinates themselves puts ~ulp(|x|max) jitter
    # into the diffs, so the tolerance must be absolute in that scale
    jitter = 32.0 * np.finfo(float).eps * max(abs(x[0]), abs(x[-1]), 1.0)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=jitter):
        raise ValueError("synthetic_potential: grid must be uniform")
    return PotentialProfile(
        x=x,
        v=v,
        h=float(steps[0]),
        kind="synthetic",
        solution_ref={"kind": "synthetic", "name": str(name)},
        integral_v=float(np.trapezoid(v, x)),
    )


def integral_V_profile(profile, n_panels_per_decade=30, gauss_order=12):
    """Line integral of V in its radial form, with the analytic tail.

    In r the integral becomes int_1^R (3 W**2 - 1)/r**2 dr; beyond the
    profile's last knot W sits at its limit and the integrand is 2/r**2,
    contributing exactly 2/R.  Composite Gauss-Legendre on geometric
    panels handles the 6 decades of radius.
    """
    r_end = float(profile.r[-1])
    decades = math.log10(r_end)
    edges = np.geomspace(1.0, r_end, max(int(decades * n_panels_per_decade), 8) + 1)
    nodes, weights = np.polynomial.legendre.leggauss(gauss_order)
    a = edges[:-1]
    b = edges[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * nodes[None, :]
    w_vals = profile.eval_w(pts.ravel()).reshape(pts.shape)
    integrand = (3.0 * w_vals**2 - 1.0) / pts**2
    total = float(np.sum(half[:, None] * weights[None, :] * integrand))
    return total + 2.0 / r_end


def integral_V(potential):
    """The line integral of V carried by the potential (see build paths)."""
    return float(potential.integral_v)


def _rayleigh_quotients(v_int, h, vecs):
    """Rayleigh quotients of Dirichlet-interior vectors under -D2 + diag(v).

    LAPACK's tridiagonal bisection stops at an absolute width scaling with
    ||T|| ~ 2/h**2, which swamps shallow eigenvalues on fine grids; the
    quotient of the inverse-iteration vector squares the angular error and
    restores machine-relative eigenvalues.
    """
    out = np.empty(vecs.shape[1])
    for i in range(vecs.shape[1]):
        q = vecs[:, i]
        d = np.diff(q, prepend=0.0, append=0.0)
        num = float(np.dot(d, d)) / h**2 + float(np.dot(v_int * q, q))
        out[i] = num / float(np.dot(q, q))
    return out


def _fd_negative_pairs(v, h, k, floor):
    """Lowest negative eigenpairs of -D2 + diag(v) with Dirichlet ends."""
    n = v.size
    diag = 2.0 / h**2 + v[1:-1]
    off = np.full(n - 3, -1.0 / h**2)
    k_ask = min(k + 2, n - 2)
    w, vecs = tridiag_eigen_lowest(diag, off, k_ask)
    w = _rayleigh_quotients(v[1:-1], h, vecs)
    keep = w < -floor
    return w[keep][:k], vecs[:, keep][:, :k]


def eigen_fd(potential, k=4):
    """Finite-difference negative spectrum with Richardson extrapolation.

    Solves on the potential's grid and on its stride-2 coarsening; the
    reported eigenvalues are the h**2-eliminated combination
    (4 mu_fine - mu_coarse)/3 and the per-state discrepancy
    |mu_fine - mu_coarse|/3 ships as the discretization error estimate.
    Eigenfunctions live on the fine grid.  States that only one spacing
    resolves below the floor are dropped rather than half-reported.
    """
    if k < 1:
        raise ValueError("eigen_fd: k must be >= 1")
    x, v, h = potential.x, potential.v, potential.h
    floor = potential.resolution_floor()

    mu_f, vec_f = _fd_negative_pairs(v, h, k, floor)
    mu_c, _ = _fd_negative_pairs(v[::2], 2.0 * h, k, floor)
    m = min(mu_f.size, mu_c.size)
    mu_rich = (4.0 * mu_f[:m] - mu_c[:m]) / 3.0
    err = np.abs(mu_f[:m] - mu_c[:m]) / 3.0
    mu_rich = mu_rich[mu_rich < -floor]
    m = mu_rich.size

    phi = np.zeros((x.size, m))
    for i in range(m):
        col = vec_f[:, i]
        phi[1:-1, i] = col / math.sqrt(h * float(np.dot(col, col)))
        if phi[np.argmax(np.abs(phi[:, i])), i] < 0.0:
            phi[:, i] = -phi[:, i]

    _validate_report(mu_rich, phi, floor)
    return SpectrumReport(
        eigenvalues=mu_rich,
        growth_rates=np.sqrt(-mu_rich),
        eigenfunctions=phi,
        method="fd",
        grid_meta={
            "h": h,
            "window": list(potential.window),
            "n_points": potential.n_points,
            "floor": floor,
            "richardson_error": err[:m].tolist(),
            # pre-extrapolation values; these, not the Richardson ones,
            # satisfy the discrete quadratic-form identity with phi
            "raw_eigenvalues": mu_f[:m].tolist(),
            "extended": potential.extended,
        },
    )


def _counts_kernel(v, h, mus, nodes):
    """Sturm counts for a batch of trial mu (see _left_node_counts)."""
    t = h * h / 12.0
    n = v.size
    for j in range(mus.size):
        mu = mus[j]
        kappa = math.sqrt(max(v[0] - mu, 1e-300))
        p_prev = 1.0
        p_cur = math.exp(kappa * h)
        a_prev = 1.0 - t * (v[0] - mu)
        a_cur = 1.0 - t * (v[1] - mu)
        c = 0
        for i in range(2, n):
            a_next = 1.0 - t * (v[i] - mu)
            p_next = ((12.0 - 10.0 * a_cur) * p_cur - a_prev * p_prev) / a_next
            if p_next * p_cur < 0.0:
                c += 1
            p_prev = p_cur
            p_cur = p_next
            a_prev = a_cur
            a_cur = a_next
            if i % 256 == 0:
                s = abs(p_cur) + 1e-300
                p_cur /= s
                p_prev /= s
        nodes[j] = c
    return nodes


def _sweep_kernel(v, h, mu, out):
    """Stored Numerov sweep from decaying data (see _stored_sweep)."""
    t = h * h / 12.0
    kappa = math.sqrt(max(v[0] - mu, 1e-300))
    out[0] = 1.0
    out[1] = math.exp(kappa * h)
    a_prev = 1.0 - t * (v[0] - mu)
    a_cur = 1.0 - t * (v[1] - mu)
    for i in range(2, out.size):
        a_next = 1.0 - t * (v[i] - mu)
        out[i] = ((12.0 - 10.0 * a_cur) * out[i - 1] - a_prev * out[i - 2]) / a_next
        a_prev = a_cur
        a_cur = a_next
        if abs(out[i]) > 1e100:
            s = abs(out[i])
            for q in range(i + 1):
                out[q] /= s
    return out


_KERNELS = None


def _kernels():
    """Compile the sweep kernels on first use; None if numba is missing."""
    global _KERNELS
    if _KERNELS is None:
        try:
            from numba import njit
            _KERNELS = (
                njit(cache=True)(_counts_kernel),
                njit(cache=True)(_sweep_kernel),
            )
        except Exception:
            _KERNELS = False
    return _KERNELS if _KERNELS else None


def _left_node_counts(v, h, mus):
    """Sturm counts for a batch of trial mu: nodes of the left-decaying
    Numerov sweep across the whole grid, which equals the number of
    eigenvalues below each mu.

    With A_i = 1 - h**2 (v_i - mu)/12 the O(h**4) recurrence reads
    A_{i+1} phi_{i+1} = (12 - 10 A_i) phi_i - A_{i-1} phi_{i-1}; the
    running pair is renormalized in blocks so the exponential left-tail
    growth never overflows.  Compiled when numba is importable; the numpy
    fallback runs the same recurrence in lockstep over the batch.
    """
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    fast = _kernels()
    if fast is not None:
        return fast[0](v, h, mus, np.zeros(mus.size, dtype=np.int64))
    t = h * h / 12.0
    a = 1.0 - t * (v[None, :] - mus[:, None])
    b = 12.0 - 10.0 * a
    kappa = np.sqrt(np.maximum(v[0] - mus, 1e-300))
    p_prev = np.ones_like(mus)
    p_cur = np.exp(kappa * h)
    nodes = np.zeros(mus.size, dtype=np.int64)
    n = v.size
    for i in range(2, n):
        p_next = (b[:, i - 1] * p_cur - a[:, i - 2] * p_prev) / a[:, i]
        nodes += p_next * p_cur < 0.0
        p_prev, p_cur = p_cur, p_next
        if i % 256 == 0:
            scale = np.abs(p_cur) + 1e-300
            p_cur = p_cur / scale
            p_prev = p_prev / scale
    return nodes


def _stored_sweep(v, h, mu, reverse=False, stop=None):
    """Scalar Numerov sweep keeping the whole solution (for gluing)."""
    vv = v[::-1] if reverse else v
    last = v.size - 1 if stop is None else stop
    out = np.empty(last + 1)
    fast = _kernels()
    if fast is not None:
        return fast[1](np.ascontiguousarray(vv[: last + 1]), h, float(mu), out)
    f = vv - mu
    t = h * h / 12.0
    a = 1.0 - t * f
    b = 12.0 - 10.0 * a
    kappa = math.sqrt(max(f[0], 1e-300))
    out[0] = 1.0
    out[1] = math.exp(kappa * h)
    for i in range(2, last + 1):
        out[i] = (b[i - 1] * out[i - 1] - a[i - 2] * out[i - 2]) / a[i]
        if abs(out[i]) > 1e100:
            out[: i + 1] /= abs(out[i])
    return out


def _glue_eigenfunction(v, h, mu):
    """Two-sided Numerov solution glued at the well bottom.

    Returns the normalized eigenfunction and the derivative mismatch of
    the two sweeps at the junction (both normalized to phi = 1 there), a
    direct residual of the eigenvalue bisection.
    """
    n = v.size
    m = int(np.argmin(v))
    m = min(max(m, 2), n - 3)
    left = _stored_sweep(v, h, mu, stop=m + 1)
    right = _stored_sweep(v, h, mu, reverse=True, stop=n - m)[::-1]
    # right[j] holds the solution at grid index m - 1 + j
    if left[m] == 0.0 or right[1] == 0.0:
        raise SpectrumError("matching point fell on an eigenfunction node")
    phi = np.empty(n)
    phi[: m + 1] = left[: m + 1] / left[m]
    phi[m:] = right[1:] / right[1]
    kink = abs(
        (left[m + 1] - left[m - 1]) / left[m]
        - (right[2] - right[0]) / right[1]
    ) / (2.0 * h)
    phi /= math.sqrt(h * float(np.dot(phi, phi)))
    if phi[np.argmax(np.abs(phi))] < 0.0:
        phi = -phi
    return phi, kink


def eigen_shooting(potential, k=4):
    """Negative spectrum by Numerov shooting with node-count bisection.

    The left sweep starts from decaying data, so its node count equals the
    number of eigenvalues below the trial mu; bisecting each jump of that
    integer pins every eigenvalue to the double-precision width of its
    bracket without any root polish on a matching function (which can lose
    sign changes near an eigenfunction node at the matching point).  All k
    bisections advance in lockstep so the per-node sweep work is shared.
    """
    if k < 1:
        raise ValueError("eigen_shooting: k must be >= 1")
    v, h = potential.v, potential.h
    floor = potential.resolution_floor()
    mu_top = -floor
    mu_bot = float(np.min(v)) * (1.0 + 1e-9) - 1e-12
    if mu_bot >= mu_top:
        return _empty_report(potential, "shooting", floor)

    n_avail = int(_left_node_counts(v, h, mu_top)[0])
    m = min(k, n_avail)
    if m == 0:
        return _empty_report(potential, "shooting", floor)

    lo = np.full(m, mu_bot)
    hi = np.full(m, mu_top)
    # invariant: count(lo[i]) <= i < count(hi[i])
    for _ in range(80):
        width = float(np.max(hi - lo))
        if width <= 1e-15 * abs(mu_bot):
            break
        mid = 0.5 * (lo + hi)
        counts = _left_node_counts(v, h, mid)
        below = counts <= np.arange(m)
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)

    mu = 0.5 * (lo + hi)
    phi = np.zeros((v.size, m))
    kinks = []
    for i in range(m):
        phi[:, i], kink = _glue_eigenfunction(v, h, float(mu[i]))
        kinks.append(kink)
        if _count_nodes(phi[:, i]) != i:
            raise SpectrumError(
                "state %d glued with %d nodes" % (i, _count_nodes(phi[:, i]))
            )

    _validate_report(mu, phi, floor)
    return SpectrumReport(
        eigenvalues=mu,
        growth_rates=np.sqrt(-mu),
        eigenfunctions=phi,
        method="shooting",
        grid_meta={
            "h": h,
            "window": list(potential.window),
            "n_points": potential.n_points,
            "floor": floor,
            "match_kinks": kinks,
            "extended": potential.extended,
        },
    )


def _empty_report(potential, method, floor):
    return SpectrumReport(
        eigenvalues=np.empty(0),
        growth_rates=np.empty(0),
        eigenfunctions=np.empty((potential.n_points, 0)),
        method=method,
        grid_meta={
            "h": potential.h,
            "window": list(potential.window),
            "n_points": potential.n_points,
            "floor": floor,
            "extended": potential.extended,
        },
    )


def _validate_report(mu, phi, floor):
    if mu.size == 0:
        return
    if np.any(mu >= -floor):
        raise SpectrumError("eigenvalue above the reporting floor slipped out")
    if np.any(np.diff(mu) <= 0.0):
        raise SpectrumError("negative eigenvalues not strictly increasing")
    for i in range(mu.size):
        if _count_nodes(phi[:, i]) != i:
            raise SpectrumError(
                "eigenfunction %d carries %d nodes"
                % (i, _count_nodes(phi[:, i]))
            )


def cross_check(report_a, report_b):
    """Max relative eigenvalue disagreement over the common states.

    Returns (delta, report_a, report_b) with the delta recorded in both
    reports.  A count mismatch is not an error here: the extra states of
    the longer report simply carry no cross-check.
    """
    m = min(report_a.count, report_b.count)
    if m == 0:
        delta = 0.0
    else:
        ea = report_a.eigenvalues[:m]
        eb = report_b.eigenvalues[:m]
        delta = float(np.max(np.abs(ea - eb) / np.abs(ea)))
    return (
        delta,
        replace(report_a, cross_check_delta=delta),
        replace(report_b, cross_check_delta=delta),
    )


def check_eigenfunction_inequalities(report, potential):
    """Discrete forms of the two ground-state inequalities, per state.

    For each computed pair (mu = -lambda**2, phi): the weighted-mass bound
    int P phi**2 >= lambda**2 int phi**2 and the sign bound
    -int V phi**2 >= 0.  Both follow from the quadratic-form identity and
    V >= -P, so they only make sense when the potential actually has the
    P-geometry; synthetic wells get a skipped marker instead of a verdict.
    """
    out = []
    for i in range(report.count):
        if potential.p is None:
            out.append({"index": i, "skipped": True,
                        "reason": "synthetic potential has no P weight"})
            continue
        phi = report.eigenfunctions[:, i]
        lam2 = -float(report.eigenvalues[i])
        norm = float(np.trapezoid(phi * phi, potential.x))
        weighted = float(np.trapezoid(potential.p * phi * phi, potential.x))
        vmass = float(np.trapezoid(potential.v * phi * phi, potential.x))
        out.append({
            "index": i,
            "skipped": False,
            "lambda": math.sqrt(lam2),
            "mass_slack": weighted - lam2 * norm,
            "sign_slack": -vmass,
            "pass": bool(weighted - lam2 * norm >= 0.0 and -vmass >= 0.0),
        })
    return out


def quadratic_form_residual(report, potential):
    """Defect of int phi'**2 + int V phi**2 = mu int phi**2 per state.

    The gradient term is the staggered cell sum matching the second-order
    stencil, so for finite-difference eigenvectors this is summation by
    parts and vanishes identically against the pre-extrapolation
    eigenvalue (used when the report carries one; the Richardson value
    differs from it by the h**2 defect on purpose).  Numerov
    eigenfunctions satisfy the identity to their own O(h**2) at the
    stencil level.  Residuals are scaled by |mu|.
    """
    h = potential.h
    raw = report.grid_meta.get("raw_eigenvalues")
    out = []
    for i in range(report.count):
        phi = report.eigenfunctions[:, i]
        mu = float(raw[i]) if raw is not None else float(report.eigenvalues[i])
        grad = float(np.sum(np.diff(phi) ** 2)) / h
        mass = h * float(np.dot(phi, phi))
        vmass = h * float(np.dot(potential.v * phi, phi))
        out.append(abs(grad + vmass - mu * mass) / abs(mu))
    return out


def write_spectrum(path, potential, fd_report, shooting_report=None,
                   inequalities=None, expected_count=None,
                   eigenfunctions_csv=None):
    """Write the spectrum JSON artifact (and optional eigenfunction CSV).

    The top-level eigenvalues/growth_rates are the finite-difference
    (Richardson) values; the shooting values and the cross-check delta ride
    along under their own keys when a second report is given.
    """
    payload = {
        "format_version": fileio.FORMAT_VERSION,
        "mass_units": "2m",
        "solution_ref": dict(potential.solution_ref),
        "window": list(potential.window),
        "h": float(potential.h),
        "n_points": potential.n_points,
        "floor": potential.resolution_floor(),
        "method": fd_report.method,
        "eigenvalues": fd_report.eigenvalues,
        "growth_rates": fd_report.growth_rates,
        "counts": {
            "negative": fd_report.count,
            "expected": (int(expected_count) if expected_count is not None
                         else None),
        },
        "integral_V": float(potential.integral_v),
        "method_deltas": {},
        "grid_meta": {
            "richardson_error": fd_report.grid_meta.get("richardson_error", []),
            "extended": potential.extended,
        },
    }
    if shooting_report is not None:
        payload["shooting_eigenvalues"] = shooting_report.eigenvalues
        delta = fd_report.cross_check_delta
        if delta is None:
            delta, _, _ = cross_check(fd_report, shooting_report)
        payload["method_deltas"]["fd_vs_shooting"] = float(delta)
    if inequalities is not None:
        payload["inequalities"] = [dict(item) for item in inequalities]
    fileio.write_json(path, payload)

    if eigenfunctions_csv is not None and fd_report.count:
        header = ["x"] + ["phi_%d" % i for i in range(fd_report.count)]
        cols = [potential.x] + [fd_report.eigenfunctions[:, i]
                                for i in range(fd_report.count)]
        fileio.write_csv(eigenfunctions_csv, header, cols)
