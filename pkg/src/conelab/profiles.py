"""Equivariant profiles: rotationally invariant hypersurfaces as curves.

A hypersurface in R^{n+1} invariant under the product of rotation groups
acting on the x- and y-blocks is determined by its profile in the (u,v)
quarter plane, u = |x|, v = |y|.  Minimality becomes the geodesic equation
for the weighted length  integral of u^p v^q ds,  which in unit-speed
variables (u, v, alpha) reads

    du/ds = cos(alpha),  dv/ds = sin(alpha),
    dalpha/ds = (q/v) cos(alpha) - (p/u) sin(alpha).

The cone line alpha = cone_angle, v/u = tan(cone_angle) is an exact fixed
profile of this system.  Curves leaving an axis orthogonally correspond to
smooth hypersurfaces; both one-sided foliation families arise this way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .cones import ConeSpec, cone_density
from .errors import ConvergenceError

KINDS = ("foliate_plus", "foliate_minus", "cone_segment", "plateau_solution")

# step-off distance from the axis, as a fraction of the intercept
AXIS_STEP = 1e-3
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-13


def curvature_rhs(cone: ConeSpec, u, v, alpha):
    """Turning rate dalpha/ds of a stationary profile through (u, v, alpha).

    This is the geodesic-curvature condition for the weighted length
    integral u^p v^q ds: the profile curvature must equal the normal
    derivative of log(u^p v^q), which gives
    (q/v) cos(alpha) - (p/u) sin(alpha).  It vanishes exactly on the locus
    tan(alpha) = q u / (p v), in particular along the cone line.
    """
    if np.any(np.asarray(u) <= 0) or np.any(np.asarray(v) <= 0):
        raise ValueError("curvature_rhs needs u > 0 and v > 0; the axes are"
                         " handled by the series expansion instead")
    return (cone.q / v) * np.cos(alpha) - (cone.p / u) * np.sin(alpha)


def _axis_series(p: int, q: int, u0: float):
    """Taylor coefficients of the regular axis crossing u(v) = u0 + c2 v^2 + c4 v^4.

    Balancing d/dv[u^p v^q u' / sqrt(1+u'^2)] = p u^{p-1} v^q sqrt(1+u'^2)
    order by order at v = 0.
    """
    c2 = p / (2.0 * u0 * (q + 1))
    c4 = p * p * (2 * p - (q + 1) ** 2) / (8.0 * u0 ** 3 * (q + 1) ** 3 * (q + 3))
    return c2, c4


def axis_start_expansion(cone: ConeSpec, u0: float, axis: str = "u_axis") -> float:
    """Quadratic coefficient of the smooth axis crossing at intercept u0.

    For a profile meeting the u-axis orthogonally at (u0, 0) the regular
    continuation is u(v) = u0 + c2 v^2 + O(v^4) with c2 = p/(2 u0 (q+1)).
    The v-axis case is the same formula with the roles of p and q swapped.
    """
    if u0 <= 0:
        raise ValueError(f"axis intercept must be positive, got {u0}")
    if axis == "u_axis":
        return _axis_series(cone.p, cone.q, u0)[0]
    if axis == "v_axis":
        return _axis_series(cone.q, cone.p, u0)[0]
    raise ValueError(f"axis must be 'u_axis' or 'v_axis', got {axis!r}")


class ProfileCurve:
    """Arclength-sampled curve (s, u, v, alpha) in the quarter plane.

    samples is an (m, 4) array; rows are ordered by s.  Curves are
    immutable by convention: operations return new instances.  lam is the
    scale label of the curve within its foliation family (0 for the cone),
    u0 the axis intercept for capped curves, axis which axis carries the
    cap ("u", "v", or None for the cone segment).
    """

    def __init__(self, cone: ConeSpec, kind: str, samples, lam: float = 0.0,
                 u0: float = 0.0, axis=None, tolerance: float = DEFAULT_RTOL):
        if kind not in KINDS:
            raise ValueError(f"unknown curve kind {kind!r}")
        self.cone = cone
        self.kind = kind
        self.samples = np.atleast_2d(np.asarray(samples, dtype=float))
        if self.samples.shape[1] != 4:
            raise ValueError("samples must have columns (s, u, v, alpha)")
        self.lam = float(lam)
        self.u0 = float(u0)
        self.axis = axis
        self.tolerance = float(tolerance)

    @property
    def s(self):
        return self.samples[:, 0]

    @property
    def u(self):
        return self.samples[:, 1]

    @property
    def v(self):
        return self.samples[:, 2]

    @property
    def alpha(self):
        return self.samples[:, 3]

    @property
    def r(self):
        return np.hypot(self.u, self.v)

    @property
    def theta(self):
        return np.arctan2(self.v, self.u)

    def __len__(self):
        return self.samples.shape[0]

    def kappa(self):
        """Profile curvature at the samples, including the axis cap rows."""
        u, v, alpha = self.u, self.v, self.alpha
        # origin row of a cone segment keeps curvature 0
        kap = np.zeros_like(u)
        interior = (u > 0) & (v > 0)
        kap[interior] = ((self.cone.q / v[interior]) * np.cos(alpha[interior])
                         - (self.cone.p / u[interior]) * np.sin(alpha[interior]))
        on_u_axis = ~interior & (u > 0)
        if np.any(on_u_axis):
            kap[on_u_axis] = -2.0 * _axis_series(self.cone.p, self.cone.q,
                                                 u[on_u_axis])[0]
        on_v_axis = ~interior & (v > 0)
        if np.any(on_v_axis):
            kap[on_v_axis] = 2.0 * _axis_series(self.cone.q, self.cone.p,
                                                v[on_v_axis])[0]
        return kap

    @cached_property
    def splines(self):
        """Hermite interpolants of u, v, alpha over s (exact derivatives)."""
        s = self.s
        U = CubicHermiteSpline(s, self.u, np.cos(self.alpha))
        V = CubicHermiteSpline(s, self.v, np.sin(self.alpha))
        A = CubicHermiteSpline(s, self.alpha, self.kappa())
        return U, V, A

    def second_fundamental_sq_samples(self):
        """|A|^2 at every sample, with the axis-cap limits filled in."""
        cone = self.cone
        u, v, alpha = self.u, self.v, self.alpha
        kap = self.kappa()
        out = np.zeros_like(u)
        interior = (u > 0) & (v > 0)
        out[interior] = (kap[interior] ** 2
                         + cone.p * (np.sin(alpha[interior]) / u[interior]) ** 2
                         + cone.q * (np.cos(alpha[interior]) / v[interior]) ** 2)
        cap_u = ~interior & (u > 0)
        if np.any(cap_u):
            # (cos(alpha)/v)^2 -> (2 c2)^2 at the cap; total p n / (u0^2 (q+1))
            out[cap_u] = (cone.p * cone.n
                          / (u[cap_u] ** 2 * (cone.q + 1)))
        cap_v = ~interior & (v > 0)
        if np.any(cap_v):
            out[cap_v] = (cone.q * cone.n
                          / (v[cap_v] ** 2 * (cone.p + 1)))
        return out

    @cached_property
    def ray(self):
        """Radial graph r(theta) of the curve over rays from the origin."""
        return RayGraph.from_curve(self)


def second_fundamental_sq(cone: ConeSpec, u, v, alpha, kappa):
    """Squared second fundamental form of the equivariant hypersurface.

    |A|^2 = kappa^2 + p (sin(alpha)/u)^2 + q (cos(alpha)/v)^2: the profile
    curvature plus the two families of orbit principal curvatures.  On the
    cone at radius r it evaluates to (n-1)/r^2.
    """
    if np.any(np.asarray(u) <= 0) or np.any(np.asarray(v) <= 0):
        raise ValueError("second_fundamental_sq is singular on the axes")
    return (np.asarray(kappa) ** 2
            + cone.p * (np.sin(alpha) / u) ** 2
            + cone.q * (np.cos(alpha) / v) ** 2)


def _sample_grid(s_init: float, s_end: float, scale: float):
    """Hybrid arclength grid: dense geometric near the cap, uniform beyond.

    The uniform spacing 0.01*scale out to 10*scale keeps interpolation
    error far below barrier tolerances near the unit ball; beyond that the
    spacing is a uniform 0.025*scale, so decay-fit windows see a constant
    sample density with no weighting seam inside them.
    """
    pieces = [np.geomspace(s_init, min(scale, s_end), 300)]
    if s_end > scale:
        pieces.append(np.arange(scale, min(10 * scale, s_end), 0.01 * scale)[1:])
    if s_end > 10 * scale:
        pieces.append(np.arange(10 * scale, s_end, 0.025 * scale)[1:])
    pieces.append(np.asarray([s_end]))
    grid = np.concatenate(pieces)
    return np.unique(grid[grid <= s_end])


def _integrate_from_u_axis(cone: ConeSpec, u0: float, r_stop: float,
                           rtol: float, atol: float, check_id: str,
                           dense: bool = True):
    """Integrate the profile system from a regular u-axis start to r = r_stop.

    Returns samples including the exact axis row (0, u0, 0, pi/2); with
    dense=False only the terminal row at r = r_stop is returned, the fast
    path for shooting iterations.  Raises ConvergenceError if the curve
    leaves the open quarter plane before reaching r_stop.
    """
    p, q = cone.p, cone.q
    c2, c4 = _axis_series(p, q, u0)
    veps = AXIS_STEP * u0
    u_init = u0 + c2 * veps ** 2 + c4 * veps ** 4
    slope = 2 * c2 * veps + 4 * c4 * veps ** 3
    a_init = 0.5 * math.pi - math.atan(slope)
    s_init = veps + (2.0 / 3.0) * c2 ** 2 * veps ** 3

    def rhs(s, y):
        u, v, a = y
        sa, ca = math.sin(a), math.cos(a)
        return (ca, sa, (q / v) * ca - (p / u) * sa)

    def hit_r(s, y):
        return y[0] * y[0] + y[1] * y[1] - r_stop * r_stop

    hit_r.terminal = True
    hit_r.direction = 1.0

    def hit_u(s, y):
        return y[0]

    def hit_v(s, y):
        return y[1] - 0.25 * veps

    for ev in (hit_u, hit_v):
        ev.terminal = True
        ev.direction = -1.0

    s_cap = 2.0 * (r_stop + u0)
    sol = solve_ivp(rhs, (s_init, s_cap), (u_init, veps, a_init),
                    method="DOP853", rtol=rtol, atol=atol,
                    dense_output=dense, events=(hit_r, hit_u, hit_v),
                    first_step=veps / 8.0)
    if not sol.success:
        raise ConvergenceError(check_id, f"integrator failed: {sol.message}")
    if len(sol.t_events[1]) or len(sol.t_events[2]):
        raise ConvergenceError(
            check_id, f"profile left the quarter plane (u0={u0}, "
                      f"last point {sol.y[:, -1]})")
    if not len(sol.t_events[0]):
        raise ConvergenceError(
            check_id, f"profile never reached radius {r_stop} (u0={u0})")

    s_end = sol.t_events[0][0]
    if not dense:
        ue, ve, ae = sol.y_events[0][0]
        return np.array([[s_end, ue, ve, ae]])
    grid = _sample_grid(s_init, s_end, u0)
    y = sol.sol(grid)
    rows = np.column_stack([grid, y.T])
    axis_row = np.array([[0.0, u0, 0.0, 0.5 * math.pi]])
    return np.vstack([axis_row, rows])


def _swap_samples(samples):
    out = samples.copy()
    out[:, [1, 2]] = samples[:, [2, 1]]
    out[:, 3] = 0.5 * math.pi - samples[:, 3]
    return out


def shoot_foliate(cone: ConeSpec, sign, r_max: float, tol: float = 1e-3,
                  *, rtol: float = DEFAULT_RTOL,
                  atol: float = DEFAULT_ATOL) -> ProfileCurve:
    """One-sided foliation leaf through axis intercept 1, out to radius r_max.

    sign '+' gives the leaf in E_+ (u-axis cap), '-' the leaf in E_- which
    is computed exactly as the u <-> v swap of the '+' leaf of the swapped
    cone.  Postconditions checked: the curve stays strictly on its side of
    the cone line, and the tangent angle has settled onto the cone angle
    to within tol at r_max (raise r_max if a tighter tol is wanted).
    """
    if r_max <= 10:
        raise ValueError(f"r_max must exceed 10, got {r_max}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    sign = {"+": 1, "-": -1, 1: 1, -1: -1}.get(sign)
    if sign is None:
        raise ValueError("sign must be '+' or '-'")

    shoot_cone = cone if sign > 0 else cone.swap()
    samples = _integrate_from_u_axis(shoot_cone, 1.0, r_max, rtol, atol,
                                     "foliate.shoot")
    if sign < 0:
        samples = _swap_samples(samples)
    kind = "foliate_plus" if sign > 0 else "foliate_minus"
    curve = ProfileCurve(cone, kind, samples, lam=1.0, u0=1.0,
                         axis="u" if sign > 0 else "v", tolerance=rtol)

    excess = cone.e_plus_excess(curve.u[1:], curve.v[1:])
    if sign > 0 and np.min(excess) <= 0 or sign < 0 and np.max(excess) >= 0:
        raise ConvergenceError("foliate.containment",
                               "leaf crossed the cone line")
    a_end = curve.alpha[-1]
    if abs(a_end - cone.cone_angle) >= tol:
        raise ConvergenceError(
            "foliate.asymptote",
            f"|alpha - cone_angle| = {abs(a_end - cone.cone_angle):.3e} "
            f">= {tol} at r = {r_max}; raise r_max")
    return curve


def scale_curve(curve: ProfileCurve, factor: float) -> ProfileCurve:
    """Dilation by factor about the origin; minimality is scale invariant."""
    if factor <= 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    samples = curve.samples.copy()
    samples[:, :3] *= factor
    return ProfileCurve(curve.cone, curve.kind, samples,
                        lam=curve.lam * factor, u0=curve.u0 * factor,
                        axis=curve.axis, tolerance=curve.tolerance)


@dataclass(frozen=True)
class GraphOverCone:
    """Signed normal displacement from the cone line as a function of radius.

    h > 0 on the E_+ side.  r_values are strictly increasing; dh_dr is the
    exact sample-wise derivative sin(angle to cone) / cos(angle to ray).
    valid_range is the maximal trailing radius interval where |h|/r < 1/2,
    the scale-invariant graphicality window.
    """

    r_values: np.ndarray
    h_values: np.ndarray
    dh_dr: np.ndarray
    valid_range: tuple


def graph_over_cone(curve: ProfileCurve) -> GraphOverCone:
    cone = curve.cone
    tc = cone.cone_angle
    st, ct = math.sin(tc), math.cos(tc)
    u, v, alpha = curve.u, curve.v, curve.alpha
    r = np.hypot(u, v)
    h = u * st - v * ct

    # single-valued over r: keep the strictly increasing envelope
    keep = np.zeros(len(r), dtype=bool)
    rmax = -np.inf
    for i, ri in enumerate(r):
        if ri > rmax:
            keep[i] = True
            rmax = ri
    r, h = r[keep], h[keep]
    theta = np.arctan2(v[keep], u[keep])
    a = alpha[keep]

    signs = np.sign(h)
    flips = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    if len(flips):
        r_cross = r[flips[0]]
        if r[-1] <= 2.0 * r_cross:
            raise ValueError(
                f"curve crosses the cone line at r = {r_cross:.3g} but only "
                f"extends to r = {r[-1]:.3g}; need more than twice the "
                "crossing radius")

    with np.errstate(divide="ignore", invalid="ignore"):
        dh_dr = np.where(np.abs(np.cos(a - theta)) > 0,
                         np.sin(tc - a) / np.cos(a - theta), np.inf)
        ratio = np.where(r > 0, np.abs(h) / np.where(r > 0, r, 1.0), 0.0)

    ok = ratio < 0.5
    if not ok[-1]:
        raise ValueError("empty valid range: |h|/r >= 1/2 at the outer end")
    m = len(ok) - 1
    while m > 0 and ok[m - 1]:
        m -= 1
    return GraphOverCone(r, h, dh_dr, (r[m], r[-1]))


class DecayFit(NamedTuple):
    coefficient: float
    exponent: float
    residual: float


def fit_decay(graph: GraphOverCone, r_lo: float, r_hi: float) -> DecayFit:
    """Power-law fit h ~ coefficient * r^exponent on [r_lo, r_hi].

    Least squares on log|h| versus log r; the residual is the largest
    relative deviation of h from the fitted law inside the window.  The
    coefficient carries the sign of h.
    """
    if r_hi < 4.0 * r_lo:
        raise ValueError(f"window too narrow: need r_hi >= 4 r_lo, got"
                         f" [{r_lo}, {r_hi}]")
    lo, hi = graph.valid_range
    if r_lo < lo or r_hi > hi:
        raise ValueError(f"window [{r_lo}, {r_hi}] outside valid range"
                         f" [{lo:.4g}, {hi:.4g}]")
    mask = (graph.r_values >= r_lo) & (graph.r_values <= r_hi)
    if np.count_nonzero(mask) < 16:
        raise ValueError("need at least 16 samples in the fit window")
    h = graph.h_values[mask]
    if np.any(h == 0.0):
        raise ValueError("h vanishes inside the fit window; no decay law")
    sgn = 1.0 if np.median(h) > 0 else -1.0
    x = np.log(graph.r_values[mask])
    y = np.log(np.abs(h))
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(np.exp(slope * x + intercept - y) - 1.0)))
    return DecayFit(sgn * math.exp(intercept), float(slope), resid)


def default_fit_window(graph: GraphOverCone):
    """The canonical decay window [10, 100], shrunk if the graph is shorter."""
    lo, hi = graph.valid_range
    r_hi = min(100.0, 0.98 * hi)
    r_lo = max(10.0, lo)
    if r_hi < 4.0 * r_lo:
        r_lo = max(lo, r_hi / 4.0)
    return r_lo, r_hi


def normalize_foliate(curve: ProfileCurve) -> ProfileCurve:
    """Rescale a leaf so its fitted leading coefficient is +-1.

    The graph coefficient scales as lam^(1-gamma) along the family, so the
    normalizing factor is |c|^(-1/(1-gamma)).  The result carries lam = 1,
    the canonical leaf of its side.
    """
    if curve.kind not in ("foliate_plus", "foliate_minus"):
        raise ValueError(f"can only normalize foliates, got {curve.kind}")
    graph = graph_over_cone(curve)
    r_lo, r_hi = default_fit_window(graph)
    fit = fit_decay(graph, r_lo, r_hi)
    gamma = cone_density(curve.cone).gamma
    factor = abs(fit.coefficient) ** (-1.0 / (1.0 - gamma))
    scaled = scale_curve(curve, factor)
    return ProfileCurve(curve.cone, curve.kind, scaled.samples, lam=1.0,
                        u0=scaled.u0, axis=curve.axis,
                        tolerance=curve.tolerance)


class RayGraph:
    """r as a function of the polar angle theta, with asymptotic tail.

    Along every curve handled here the polar angle is strictly monotone,
    so r(theta) is single valued.  Queries beyond the last sampled angle
    (toward the cone angle the curve approaches but never reaches) use the
    power-law tail r ~ ((theta_c - theta))^(1/(gamma-1)) anchored at the
    last sample; beyond the asymptote angle the radius is treated as
    effectively infinite.
    """

    HUGE = 1e30

    def __init__(self, theta, logr, theta_c, gamma):
        self.theta = theta
        self.logr = logr
        self.theta_c = theta_c
        self.gamma = gamma
        self._spline = CubicSpline(theta, logr)

    @classmethod
    def from_curve(cls, curve: ProfileCurve):
        cone = curve.cone
        theta = curve.theta
        r = curve.r
        if curve.kind == "cone_segment":
            raise ValueError("the cone segment is a single ray; its radial"
                             " graph is degenerate")
        side_plus = cone.e_plus_excess(curve.u[-1], curve.v[-1]) > 0
        if not side_plus:
            # mirror E_- data into the E_+ frame of the swapped cone
            theta = 0.5 * math.pi - theta
        order = np.argsort(theta)
        theta, r = theta[order], r[order]
        dedup = np.concatenate([[True], np.diff(theta) > 1e-12])
        theta, r = theta[dedup], r[dedup]
        tc = cone.cone_angle if side_plus else cone.swap().cone_angle
        gamma = cone_density(cone).gamma
        return cls(theta, np.log(r), tc, gamma)

    def r_at(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.full(theta.shape, self.HUGE)
        t0, t1 = self.theta[0], self.theta[-1]
        inside = (theta >= t0) & (theta <= t1)
        out[inside] = np.exp(self._spline(theta[inside]))
        tail = (theta > t1) & (theta < self.theta_c)
        if np.any(tail):
            r_end = math.exp(self.logr[-1])
            frac = (self.theta_c - theta[tail]) / (self.theta_c - t1)
            out[tail] = np.minimum(r_end * frac ** (1.0 / (self.gamma - 1.0)),
                                   self.HUGE)
        below = theta < t0
        if np.any(below):
            out[below] = np.exp(self._spline(np.maximum(theta[below], t0)))
        return out


def write_curve_csv(curve: ProfileCurve, path, extra_meta=()):
    meta = [("p", curve.cone.p), ("q", curve.cone.q), ("kind", curve.kind),
            ("lambda", format(curve.lam, ".17g")),
            ("u0", format(curve.u0, ".17g")),
            ("tolerance", format(curve.tolerance, ".17g"))]
    with open(path, "w") as fh:
        for key, val in list(extra_meta) + meta:
            fh.write(f"# {key}={val}\n")
        fh.write("s,u,v,alpha\n")
        for row in curve.samples:
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")


def read_curve_csv(path) -> ProfileCurve:
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
            elif line[0].isdigit() or line[0] in "+-.":
                rows.append([float(x) for x in line.split(",")])
    cone = ConeSpec(int(meta["p"]), int(meta["q"]))
    samples = np.asarray(rows)
    kind = meta["kind"]
    axis = None
    if len(samples) and samples[0, 2] == 0.0:
        axis = "u"
    elif len(samples) and samples[0, 1] == 0.0:
        axis = "v"
    return ProfileCurve(cone, kind, samples, lam=float(meta["lambda"]),
                        u0=float(meta["u0"]),
                        axis=axis, tolerance=float(meta["tolerance"]))


def cone_segment(cone: ConeSpec, r_max: float = 1.0,
                 n_samples: int = 2001) -> ProfileCurve:
    """The straight profile of the cone itself, from the origin to r_max."""
    s = np.linspace(0.0, r_max, n_samples)
    tc = cone.cone_angle
    samples = np.column_stack([s, s * math.cos(tc), s * math.sin(tc),
                               np.full_like(s, tc)])
    return ProfileCurve(cone, "cone_segment", samples, lam=0.0, u0=0.0,
                        axis=None)
