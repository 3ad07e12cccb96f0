"""Mass, density ratios, and graphicality diagnostics for profile curves.

The mass of an equivariant hypersurface in a ball reduces to a weighted
line integral along the profile: for a ball about the origin the orbit at
(u, v) is either fully inside or fully outside, while for centers on a
symmetry axis the orbit meets the ball in a spherical cap whose measure is
an incomplete-beta integral.  Quadrature is a fixed 5-point Gauss rule per
arclength cell on the curve's Hermite interpolants, with cells split at
the ball boundary so every piece is smooth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import betainc

from .cones import ball_volume, cone_density, sphere_area
from .profiles import ProfileCurve, graph_over_cone

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(5)
_GAUSS_X = 0.5 * (_GAUSS_X + 1.0)  # nodes on [0, 1]
_GAUSS_W = 0.5 * _GAUSS_W


def _cells(curve: ProfileCurve):
    """Per-cell Gauss nodes and weighted integrand values, cached."""
    cache = curve.__dict__.get("_mass_cells")
    if cache is not None:
        return cache
    U, V, _ = curve.splines
    s = curve.s
    ds = np.diff(s)
    nodes = s[:-1, None] + ds[:, None] * _GAUSS_X[None, :]
    u = U(nodes)
    v = V(nodes)
    cone = curve.cone
    cpcq = sphere_area(cone.p) * sphere_area(cone.q)
    # weight w = c_p c_q u^p v^q, premultiplied by the cell jacobian
    wvals = cpcq * np.clip(u, 0.0, None) ** cone.p \
        * np.clip(v, 0.0, None) ** cone.q
    wvals *= ds[:, None] * _GAUSS_W[None, :]
    cache = (nodes, u, v, wvals)
    curve.__dict__["_mass_cells"] = cache
    return cache


def _piece_mass(curve: ProfileCurve, a: float, b: float, frac=None) -> float:
    """Weighted length of the sub-arc [a, b], with optional cap fraction."""
    if b <= a:
        return 0.0
    U, V, _ = curve.splines
    nodes = a + (b - a) * _GAUSS_X
    u, v = U(nodes), V(nodes)
    cone = curve.cone
    cpcq = sphere_area(cone.p) * sphere_area(cone.q)
    w = cpcq * np.clip(u, 0.0, None) ** cone.p \
        * np.clip(v, 0.0, None) ** cone.q
    if frac is not None:
        w = w * frac(u, v)
    return float((b - a) * np.dot(_GAUSS_W, w))


def _classify_center(center):
    cu, cv = float(center[0]), float(center[1])
    if cu == 0.0 and cv == 0.0:
        return "origin", 0.0
    if cv == 0.0 and cu > 0.0:
        return "u_axis", cu
    if cu == 0.0 and cv > 0.0:
        return "v_axis", cv
    raise ValueError(
        f"unsupported center {center!r}: only the origin and points on the"
        " two symmetry axes are allowed")


def _cap_fraction(dim: int, c):
    """Fraction of the unit dim-sphere with polar cosine >= c."""
    c = np.asarray(c, dtype=float)
    cc = np.clip(c, -1.0, 1.0)
    inner = betainc(0.5, dim / 2.0, cc * cc)
    frac = np.where(cc >= 0.0, 0.5 * (1.0 - inner), 0.5 * (1.0 + inner))
    frac = np.where(c >= 1.0, 0.0, frac)
    frac = np.where(c <= -1.0, 1.0, frac)
    return frac


def _crossing_points(curve: ProfileCurve, fun, values_at_samples):
    """Arclengths where fun (evaluated through the splines) changes sign.

    A sample landing exactly on a zero counts as a crossing there, so grid
    points coinciding with the ball boundary are not skipped.
    """
    s = curve.s
    sign = np.sign(values_at_samples)
    flips = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    cuts = [brentq(fun, s[i], s[i + 1], xtol=1e-15, rtol=8.9e-16)
            for i in flips]
    cuts.extend(s[sign == 0.0])
    return sorted(cuts)


def _mass_one_curve(curve: ProfileCurve, center, r: float) -> float:
    mode, rho = _classify_center(center)
    U, V, _ = curve.splines
    s = curve.s

    if mode == "origin":
        rs = curve.r

        def radial(t):
            return math.hypot(U(t), V(t)) - r

        cuts = _crossing_points(curve, radial, rs - r)
        bounds = np.concatenate([[s[0]], cuts, [s[-1]]])
        _, _, _, wvals = _cells(curve)
        total = 0.0
        for a, b in zip(bounds[:-1], bounds[1:]):
            mid = 0.5 * (a + b)
            if math.hypot(U(mid), V(mid)) < r:
                i0, i1 = np.searchsorted(s, [a, b])
                # whole cells strictly inside [a, b]
                if i1 - 1 > i0:
                    total += float(wvals[i0:i1 - 1].sum())
                    total += _piece_mass(curve, a, s[i0])
                    total += _piece_mass(curve, s[i1 - 1], b)
                else:
                    total += _piece_mass(curve, a, b)
        return total

    # axis center: weight each orbit by the spherical-cap fraction
    cone = curve.cone
    if mode == "u_axis":
        dim, radial_coord, other = cone.p, curve.u, curve.v

        def cos_cut(u, v):
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(u > 0,
                                (u * u + v * v + rho * rho - r * r)
                                / (2.0 * np.where(u > 0, u, 1.0) * rho),
                                np.inf)

        def frac(u, v):
            return _cap_fraction(dim, cos_cut(u, v))
    else:
        dim = cone.q

        def cos_cut(u, v):
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(v > 0,
                                (u * u + v * v + rho * rho - r * r)
                                / (2.0 * np.where(v > 0, v, 1.0) * rho),
                                np.inf)

        def frac(u, v):
            return _cap_fraction(dim, cos_cut(u, v))

    c_samples = cos_cut(curve.u, curve.v)
    cuts = []
    for level in (1.0, -1.0):
        def shifted(t, lv=level):
            return float(cos_cut(np.asarray(U(t)), np.asarray(V(t)))) - lv

        finite = np.where(np.isfinite(c_samples), c_samples, 1e6)
        cuts.extend(_crossing_points(curve, shifted, finite - level))
    bounds = np.unique(np.concatenate([[s[0]], cuts, [s[-1]]]))
    total = 0.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        total += _piece_mass(curve, a, b, frac=frac)
    return total


def mass_in_ball(curve, center, r: float) -> float:
    """Weighted surface measure of the curve's orbit inside B_r(center).

    center is (c_u, c_v) in profile coordinates and must be the origin or
    lie on one of the two symmetry axes.  A list of curves is treated as a
    union with additive mass.
    """
    if r <= 0:
        raise ValueError(f"ball radius must be positive, got {r}")
    curves = curve if isinstance(curve, (list, tuple)) else [curve]
    return sum(_mass_one_curve(c, center, r) for c in curves)


@dataclass(frozen=True)
class DensityProfile:
    center: tuple
    radii: np.ndarray
    mass: np.ndarray
    theta: np.ndarray
    max_violation: float  # largest relative monotonicity violation seen


def density(curve, center, radii) -> DensityProfile:
    """Tabulated density ratio Theta(r, center) = mass / (omega_n r^n)."""
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0) or np.any(radii <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    cone = (curve[0] if isinstance(curve, (list, tuple)) else curve).cone
    wn = ball_volume(cone.n)
    mass = np.array([mass_in_ball(curve, center, r) for r in radii])
    theta = mass / (wn * radii ** cone.n)
    drops = theta[:-1] - theta[1:]
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(theta[:-1] > 0, drops / theta[:-1], 0.0)
    max_violation = float(max(0.0, rel.max())) if len(rel) else 0.0
    return DensityProfile((float(center[0]), float(center[1])), radii, mass,
                          theta, max_violation)


def write_density_csv(profile: DensityProfile, path, meta=()):
    with open(path, "w") as fh:
        for key, val in meta:
            fh.write(f"# {key}={val}\n")
        fh.write("r,mass,theta\n")
        for r, m, t in zip(profile.radii, profile.mass, profile.theta):
            fh.write(f"{r:.17g},{m:.17g},{t:.17g}\n")


def density_radius(curve, center, tau: float, r_max: float = 0.5,
                   rel_tol: float = 1e-6):
    """Infimum radius above which the density pins down the cone value.

    Returns the infimum of r < r_max with
        Theta(C) - tau <= Theta(r/4, center) <= (3/2) Theta(C),
    0.0 when the condition holds down to arbitrarily small radii, and None
    when it holds nowhere below r_max.  The default window r_max = 1/2
    matches the blow-up normalization; pass a larger r_max to diagnose
    un-rescaled curves.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    cone = (curve[0] if isinstance(curve, (list, tuple)) else curve).cone
    consts = cone_density(cone)
    wn = ball_volume(cone.n)

    def holds(r: float) -> bool:
        theta = mass_in_ball(curve, center, r / 4.0) / (wn * (r / 4.0) ** cone.n)
        return (consts.theta_c - tau <= theta
                <= 1.5 * consts.theta_c + 1e-14)

    grid = np.geomspace(1e-4 * r_max, r_max, 120)
    flags = [holds(r) for r in grid]
    if not any(flags):
        return None
    first = flags.index(True)
    if first == 0:
        # probe smaller radii before declaring the condition unconditional
        if holds(grid[0] / 8.0) and holds(grid[0] / 64.0):
            return 0.0
        lo, hi = grid[0] / 64.0, grid[0]
    else:
        lo, hi = grid[first - 1], grid[first]
    while hi - lo > rel_tol * hi:
        mid = math.sqrt(lo * hi)
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return float(hi)


def graphicality_radius(curve: ProfileCurve, cone, eps: float,
                        k_cap: int = 50) -> float:
    """Smallest dyadic radius outside which the curve is an eps-small graph.

    Scans the dyadic annuli [2^-k-1, 2^-k] of the unit ball from the
    outside in; an annulus qualifies when the graph over the cone covers
    it entirely and sup(|h|/r) + sup(|dh/dr|) <= eps there.  Returns
    2^-k* for the first failing annulus (1 when none qualifies), 0 when
    every scanned annulus qualifies.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    graph = graph_over_cone(curve)
    r, h, slope = graph.r_values, graph.h_values, graph.dh_dr
    for k in range(k_cap + 1):
        hi, lo = 2.0 ** (-k), 2.0 ** (-k - 1)
        if r[0] > lo or r[-1] < hi:
            return 2.0 ** (-k)
        mask = (r >= lo) & (r <= hi)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.abs(h[mask]) / r[mask]
            ratio = np.where(np.isfinite(ratio), ratio, 0.0)
        worst = ratio.max(initial=0.0) + np.abs(slope[mask]).max(initial=0.0)
        if not worst <= eps:
            return 2.0 ** (-k)
    return 0.0


def mass_bound_check(curve) -> bool:
    """True iff Theta(1, 0) < (3/2) Theta(C) for the curve (or union)."""
    curves = curve if isinstance(curve, (list, tuple)) else [curve]
    # event-terminated curves stop within float noise of the unit sphere
    if max(float(c.r.max()) for c in curves) < 1.0 - 1e-9:
        raise ValueError("mass bound needs the curve defined out to r = 1")
    cone = curves[0].cone
    theta1 = mass_in_ball(curves, (0.0, 0.0), 1.0) / ball_volume(cone.n)
    return bool(theta1 < 1.5 * cone_density(cone).theta_c)


def diagnostics_summary(curve: ProfileCurve, tau: float = 0.01,
                        eps: float = 0.1, r_max: float = 0.5) -> dict:
    """The per-curve summary emitted by the batch driver."""
    cone = curve.cone
    wn = ball_volume(cone.n)
    theta1 = mass_in_ball(curve, (0.0, 0.0), 1.0) / wn
    dr = density_radius(curve, (0.0, 0.0), tau, r_max=r_max)
    return {
        "theta_at_1": theta1,
        "density_radius": dr,
        "graphicality_radius": graphicality_radius(curve, cone, eps),
        "mass_bound_ok": mass_bound_check(curve),
    }
