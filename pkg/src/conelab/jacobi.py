"""Linear theory: spectral Jacobi fields on cone annuli and the scaled
annulus norms, plus the equivariant Jacobi equation along computed leaves.

On the cone every Jacobi field splits over link eigenmodes, and each mode
amplitude is an exact combination c+ r^{gamma+} + c- r^{gamma-}.  The
scaled L^2 norms over the dyadic-type annuli rho0^{k+1} < r < rho0^k then
have closed forms, which makes the growth dichotomy (the three-annulus
alternative) checkable without quadrature error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .cones import ConeSpec, IndicialEntry, indicial_entry
from .errors import ConvergenceError
from .profiles import ProfileCurve, curvature_rhs

DEGREE_CAP = 3  # default mode truncation: k, l <= 3


class ModeCoefficient(NamedTuple):
    entry: IndicialEntry
    harmonic_index: int
    c_plus: float
    c_minus: float


@dataclass(frozen=True)
class SpectralJacobiField:
    """Finite list of modes with radial coefficients on an annulus.

    With r_inner = 0 the domain is a punctured ball and only the better-
    decaying branch is admissible under the interior growth bound, so
    construction rejects any nonzero c_minus there.
    """

    cone: ConeSpec
    modes: tuple
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not 0 <= self.r_inner < self.r_outer:
            raise ValueError(f"bad annulus [{self.r_inner}, {self.r_outer}]")
        if self.r_inner == 0:
            for m in self.modes:
                if m.c_minus != 0.0 and m.entry.gamma_minus < m.entry.gamma_plus:
                    raise ValueError(
                        f"mode ({m.entry.k},{m.entry.l}) has c_minus = "
                        f"{m.c_minus} != 0 on a ball domain; the growth "
                        "bound forces the regular branch")


def make_field(cone: ConeSpec, coeffs, r_inner: float,
               r_outer: float) -> SpectralJacobiField:
    """Assemble a field from {(k, l): (c_plus, c_minus)} or
    {(k, l, index): (c_plus, c_minus)}."""
    modes = []
    for key, (cp, cm) in sorted(coeffs.items()):
        k, l, idx = (key if len(key) == 3 else (key[0], key[1], 0))
        modes.append(ModeCoefficient(indicial_entry(cone, k, l), idx,
                                     float(cp), float(cm)))
    return SpectralJacobiField(cone, tuple(modes), float(r_inner),
                               float(r_outer))


def evaluate_field(field: SpectralJacobiField, r: float, mode_subset=None):
    """Per-mode radial amplitudes a_i(r) = c+ r^{gamma+} + c- r^{gamma-}."""
    if not field.r_inner <= r <= field.r_outer or r <= 0:
        raise ValueError(f"radius {r} outside annulus "
                         f"[{field.r_inner}, {field.r_outer}]")
    modes = field.modes
    if mode_subset is not None:
        modes = [field.modes[i] for i in mode_subset]
    return np.array([m.c_plus * r ** m.entry.gamma_plus
                     + m.c_minus * r ** m.entry.gamma_minus for m in modes])


def solve_mode_annulus(cone: ConeSpec, entry: IndicialEntry,
                       inner_value: float, outer_value: float,
                       r_inner: float, r_outer: float):
    """Coefficients (c_plus, c_minus) matching amplitudes at both radii."""
    if not 0 < r_inner < r_outer:
        raise ValueError(f"need 0 < r_inner < r_outer, got"
                         f" ({r_inner}, {r_outer})")
    gp, gm = entry.gamma_plus, entry.gamma_minus
    a = np.array([[r_inner ** gp, r_inner ** gm],
                  [r_outer ** gp, r_outer ** gm]])
    cp, cm = np.linalg.solve(a, [inner_value, outer_value])
    return float(cp), float(cm)


def solve_dirichlet_ball_bounded(cone: ConeSpec,
                                 boundary_modes) -> SpectralJacobiField:
    """Jacobi field on the unit ball with prescribed boundary modes and the
    critical interior growth bound.

    Every admissible mode has gamma_minus strictly below the critical rate
    (2-n)/2, so the growth constraint kills the c_minus branch and the
    solution is the identity on the boundary coefficients: c_plus = g,
    c_minus = 0.  In particular zero data gives the zero field exactly.
    """
    coeffs = {key: (val, 0.0) for key, val in boundary_modes.items()}
    return make_field(cone, coeffs, 0.0, 1.0)


def _mode_norm_sq(entry: IndicialEntry, cp: float, cm: float,
                  r1: float, r2: float) -> float:
    """integral over [r1, r2] of (cp r^g+ + cm r^g-)^2 dr/r, closed form."""

    def power_int(c: float) -> float:
        # integral of r^(c-1) dr
        if c == 0.0:
            return math.log(r2 / r1)
        return (r2 ** c - r1 ** c) / c

    gp, gm = entry.gamma_plus, entry.gamma_minus
    return (cp * cp * power_int(2 * gp)
            + 2 * cp * cm * power_int(gp + gm)
            + cm * cm * power_int(2 * gm))


def annulus_norm(field, rho0: float, k: int) -> float:
    """Scaled L^2 norm over the annulus rho0^{k+1} < r < rho0^k.

    For spectral fields the link integral collapses by orthonormality and
    the radial integrals are closed form.  A sampled radial profile may be
    passed as a pair (r, values); it is integrated by the trapezoid rule.
    """
    if not 0 < rho0 < 1:
        raise ValueError(f"rho0 must lie in (0,1), got {rho0}")
    r2, r1 = rho0 ** k, rho0 ** (k + 1)
    if isinstance(field, SpectralJacobiField):
        if r1 < field.r_inner or r2 > field.r_outer:
            raise ValueError(f"annulus [{r1}, {r2}] outside field domain"
                             f" [{field.r_inner}, {field.r_outer}]")
        total = sum(_mode_norm_sq(m.entry, m.c_plus, m.c_minus, r1, r2)
                    for m in field.modes)
        return math.sqrt(total)
    r, vals = field
    r = np.asarray(r, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if r1 < r[0] or r2 > r[-1]:
        raise ValueError(f"annulus [{r1}, {r2}] outside sampled domain")
    grid = np.unique(np.concatenate([[r1], r[(r > r1) & (r < r2)], [r2]]))
    a = np.interp(grid, r, vals)
    return math.sqrt(np.trapezoid(a * a / grid, grid))


def three_annulus_check(field, rho0: float, k: int):
    """Both inequalities of the growth dichotomy at level k.

    hypothesis:  norm(k+1) >= rho0^{(2-n)/2} * norm(k)
    conclusion:  norm(k+2) >= rho0^{(2-n)/2} * norm(k+1)

    For Jacobi fields the hypothesis implies the conclusion: once the
    inner-annulus norm grows at the critical rate, only the fast branch
    can be responsible, and it keeps growing.  Returns (hypothesis_holds,
    conclusion_holds).
    """
    n0 = annulus_norm(field, rho0, k)
    n1 = annulus_norm(field, rho0, k + 1)
    n2 = annulus_norm(field, rho0, k + 2)
    cone = field.cone if isinstance(field, SpectralJacobiField) else None
    if cone is None:
        raise ValueError("three_annulus_check needs a spectral field")
    growth = rho0 ** ((2.0 - cone.n) / 2.0)
    return (n1 >= growth * n0, n2 >= growth * n1)


def admissible_levels(field, rho0: float, k_cap: int = 8):
    """Levels k whose three annuli all fit inside the field's domain.

    A level k needs radii down to rho0^(k+3); on a punctured ball every
    level is admissible, so the list is truncated at k_cap.
    """
    ks = []
    for k in range(k_cap + 1):
        if rho0 ** (k + 3) >= field.r_inner and rho0 ** k <= field.r_outer:
            ks.append(k)
    return ks


def write_norms_csv(field, rho0: float, ks, path, meta=()):
    with open(path, "w") as fh:
        for key, val in meta:
            fh.write(f"# {key}={val}\n")
        fh.write("k,norm\n")
        for k in ks:
            fh.write(f"{k},{annulus_norm(field, rho0, k):.17g}\n")


def random_spectral_field(cone: ConeSpec, rng, r_inner: float = 0.0,
                          r_outer: float = 1.0, max_degree: int = DEGREE_CAP,
                          ) -> SpectralJacobiField:
    """Seeded random field: coefficients uniform in [-1, 1] per mode.

    On a ball domain (r_inner = 0) only the c_plus branch is drawn, per
    the construction invariant.
    """
    coeffs = {}
    for k in range(max_degree + 1):
        for l in range(max_degree + 1):
            cp = rng.uniform(-1.0, 1.0)
            cm = 0.0 if r_inner == 0 else rng.uniform(-1.0, 1.0)
            coeffs[(k, l)] = (cp, cm)
    return make_field(cone, coeffs, r_inner, r_outer)


def write_field_json(field: SpectralJacobiField, path):
    payload = {
        "p": field.cone.p,
        "q": field.cone.q,
        "modes": [[m.entry.k, m.entry.l, m.harmonic_index, m.c_plus,
                   m.c_minus] for m in field.modes],
        "r_inner": field.r_inner,
        "r_outer": field.r_outer,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_field_json(path) -> SpectralJacobiField:
    with open(path) as fh:
        payload = json.load(fh)
    cone = ConeSpec(payload["p"], payload["q"])
    coeffs = {(k, l, idx): (cp, cm)
              for k, l, idx, cp, cm in payload["modes"]}
    return make_field(cone, coeffs, payload["r_inner"], payload["r_outer"])


# ---------------------------------------------------------------------------
# equivariant Jacobi equation along a profile curve


@dataclass
class JacobiSolution:
    """Radial samples of a solution of the equivariant Jacobi equation."""

    s: np.ndarray
    r: np.ndarray
    w: np.ndarray
    wprime: np.ndarray
    curve: ProfileCurve

    def amplitude_at(self, r):
        return np.interp(r, self.r, self.w)


def _interior_mask(curve: ProfileCurve, r_span=None):
    mask = (curve.u > 0) & (curve.v > 0)
    if r_span is not None:
        r = curve.r
        mask &= (r >= r_span[0]) & (r <= r_span[1])
    return mask


def equivariant_jacobi_solve(curve: ProfileCurve, inner_data,
                             outer_data=None, r_span=None) -> JacobiSolution:
    """Solve (W w')' / W + |A|^2 w = 0 along the profile, W = weight u^p v^q.

    Boundary data:
      inner_data = ("regular", a)  start from the axis cap with w = a,
                    w' = 0 (the smooth equivariant branch), or
      inner_data = ("value", x)    prescribed amplitude at the inner end.
      outer_data = ("value", y)    prescribed amplitude at the outer end,
                    or None for pure initial-value integration.

    The equation is linear, so two-point data is met by superposing the
    two initial-value basis solutions.  r_span optionally restricts the
    radial window (needed for curves through the origin, where the
    coefficients are singular).
    """
    cone = curve.cone
    p, q = cone.p, cone.q
    mask = _interior_mask(curve, r_span)
    if not np.any(mask):
        raise ValueError("no interior samples in the requested span")
    idx = np.nonzero(mask)[0]
    s_grid = curve.s[idx]
    U, V, A = curve.splines

    def rhs(s, y):
        u, v, a = U(s), V(s), A(s)
        sa, ca = math.sin(a), math.cos(a)
        kap = (q / v) * ca - (p / u) * sa
        dlogw = p * ca / u + q * sa / v
        asq = kap * kap + p * (sa / u) ** 2 + q * (ca / v) ** 2
        return (y[1], -dlogw * y[1] - asq * y[0])

    def basis(y0):
        sol = solve_ivp(rhs, (s_grid[0], s_grid[-1]), y0, method="DOP853",
                        rtol=1e-10, atol=1e-13, dense_output=True)
        if not sol.success:
            raise ConvergenceError("jacobi.integrate",
                                   f"integrator failed: {sol.message}")
        out = sol.sol(s_grid)
        return out[0], out[1]

    kind, *vals = inner_data
    if kind == "regular":
        if curve.axis is None or idx[0] != 1:
            raise ValueError("regular inner data needs an axis-capped curve")
        a = vals[0] if vals else 1.0
        w1, w1p = basis((1.0, 0.0))
        if outer_data is None:
            w, wp = a * w1, a * w1p
        else:
            if vals and vals[0] not in (None, 1.0):
                raise ValueError("cannot prescribe both the axis value and"
                                 " an outer value on the regular branch")
            scale = outer_data[1] / w1[-1]
            w, wp = scale * w1, scale * w1p
    elif kind == "value":
        x = vals[0]
        if outer_data is None:
            raise ValueError("inner value data needs an outer value")
        w1, w1p = basis((1.0, 0.0))
        w2, w2p = basis((0.0, 1.0))
        b = (outer_data[1] - x * w1[-1]) / w2[-1]
        w, wp = x * w1 + b * w2, x * w1p + b * w2p
    else:
        raise ValueError(f"unknown inner data kind {kind!r}")

    r = np.hypot(curve.u[idx], curve.v[idx])
    return JacobiSolution(s_grid, r, w, wp, curve)


# ---------------------------------------------------------------------------
# the scaling field on a foliation leaf


def scaling_field(curve: ProfileCurve) -> JacobiSolution:
    """Normal component of the position field, X . nu = u sin a - v cos a.

    This is the derivative at lambda = 1 of the normal graph of the scaled
    leaves over the base leaf: dilation through minimal surfaces, hence an
    exact solution of the equivariant Jacobi equation, with exact regular
    axis data (w = u0, w' = 0 at the cap).
    """
    u, v, alpha = curve.u, curve.v, curve.alpha
    w = u * np.sin(alpha) - v * np.cos(alpha)
    wp = curve.kappa() * (u * np.cos(alpha) + v * np.sin(alpha))
    return JacobiSolution(curve.s, curve.r, w, wp, curve)


def scaling_residual(curve: ProfileCurve):
    """Pointwise relative residual of the scaling field in the Jacobi ODE.

    All derivatives are closed form, so this measures how far the computed
    leaf itself is from satisfying the profile equation.  Returns (r,
    residual) over the interior samples, residual normalized by the
    largest term of the equation.
    """
    cone = curve.cone
    p, q = cone.p, cone.q
    mask = (curve.u > 0) & (curve.v > 0)
    u, v, a = curve.u[mask], curve.v[mask], curve.alpha[mask]
    sa, ca = np.sin(a), np.cos(a)
    kap = (q / v) * ca - (p / u) * sa
    kap_p = (-kap * (q * sa / v + p * ca / u)
             + sa * ca * (p / u ** 2 - q / v ** 2))
    w = u * sa - v * ca
    wp = kap * (u * ca + v * sa)
    wpp = kap_p * (u * ca + v * sa) + kap * (1.0 - kap * w)
    dlogw = p * ca / u + q * sa / v
    asq = kap ** 2 + p * (sa / u) ** 2 + q * (ca / v) ** 2
    res = wpp + dlogw * wp + asq * w
    scale = np.maximum(np.abs(wpp), np.maximum(np.abs(dlogw * wp),
                                               np.abs(asq * w)))
    return np.hypot(u, v), res / scale


def scaling_field_fd(curve: ProfileCurve, delta: float = 1e-3,
                     stride: int = 20):
    """Scaling field by central differences of the scaled leaves.

    For a subsample of profile points, intersects the normal line with the
    leaves scaled by 1 +- delta and differences the signed displacements.
    Returns (r, w_fd) for comparison against the closed form.
    """
    from .profiles import scale_curve

    cone = curve.cone
    sub = slice(1, len(curve) - 1, stride)
    u, v, a = curve.u[sub], curve.v[sub], curve.alpha[sub]
    r = np.hypot(u, v)
    nu_u, nu_v = np.sin(a), -np.cos(a)  # unit normal pointing into E_+

    def displacement(other: ProfileCurve, i: int) -> float:
        ray = other.ray

        def radial_excess(g):
            pu, pv = u[i] + g * nu_u[i], v[i] + g * nu_v[i]
            theta = math.atan2(pv, pu)
            if other.kind == "foliate_minus":
                theta = 0.5 * math.pi - theta
            return math.hypot(pu, pv) - ray.r_at(theta)

        cap = 6.0 * delta * r[i] + 1e-12
        lo, hi = -cap, cap
        flo, fhi = radial_excess(lo), radial_excess(hi)
        if flo * fhi > 0:
            raise ConvergenceError("jacobi.fd_bracket",
                                   f"no normal crossing near r = {r[i]:.3g}")
        return brentq(radial_excess, lo, hi, xtol=1e-14)

    plus = scale_curve(curve, 1.0 + delta)
    minus = scale_curve(curve, 1.0 - delta)
    w_fd = np.array([
        (displacement(plus, i) - displacement(minus, i)) / (2.0 * delta)
        for i in range(len(r))])
    return r, w_fd


def decay_rigidity_scan(curve: ProfileCurve, anchors=(25.0, 50.0, 100.0)):
    """Mismatch of the regular equivariant solution from critical decay.

    Integrates the smooth axis branch outward, rescales it to match the
    profile r^{(2-n)/2} at each anchor radius, and reports the largest
    relative deviation from that profile over [R, 2R].  A mismatch bounded
    away from zero across anchors witnesses that no nontrivial regular
    solution decays at the critical rate.
    """
    n = curve.cone.n
    sol = equivariant_jacobi_solve(curve, ("regular", 1.0))
    expo = (2.0 - n) / 2.0
    out = []
    for anchor in anchors:
        if 2.0 * anchor > sol.r[-1]:
            raise ValueError(f"anchor {anchor} needs the curve out to"
                             f" r = {2 * anchor}")
        grid = np.geomspace(anchor, 2.0 * anchor, 64)
        w = np.interp(grid, sol.r, sol.w)
        target = grid ** expo
        scaled = w * (anchor ** expo / np.interp(anchor, sol.r, sol.w))
        out.append((anchor, float(np.max(np.abs(scaled - target) / target))))
    return out
