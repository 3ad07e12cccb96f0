"""Equivariant Plateau problem in the unit ball, with barriers and sweeps.

The boundary datum is a single angle: the curve must end on the unit
circle at polar angle cone_angle + t.  Solutions are found by shooting on
the axis intercept; the hit angle at r = 1 is strictly monotone in the
intercept, so the match has no folds and bisection converges to the
unique solution.  Offsets t < 0 cap on the u-axis, t > 0 on the v-axis
(solved as a u-axis shot for the swapped cone), t = 0 is the exact cone
segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .cones import ConeSpec
from .errors import ConvergenceError
from .measures import mass_bound_check
from .profiles import (ProfileCurve, _integrate_from_u_axis, _swap_samples,
                       cone_segment, normalize_foliate, shoot_foliate)

MAX_OFFSET = math.pi / 8.0
SHOOT_RTOL = 1e-11
SHOOT_ATOL = 1e-14


def el_residual(curve: ProfileCurve) -> float:
    """Largest one-step re-substitution defect of the profile ODE.

    Advances each interior sample by a single RK4 step of the stationarity
    system and compares with the next sample.  The RK4 truncation error at
    the stored spacing is far below 1e-8, so the residual measures how
    well the samples themselves satisfy the equation.
    """
    cone = curve.cone
    interior = (curve.u > 0) & (curve.v > 0)
    idx = np.nonzero(interior[:-1] & interior[1:])[0]
    if len(idx) == 0:
        return 0.0
    y0 = curve.samples[idx, 1:]
    h = (curve.s[idx + 1] - curve.s[idx])[:, None]

    def f(y):
        u, v, a = y[:, 0], y[:, 1], y[:, 2]
        return np.column_stack([
            np.cos(a), np.sin(a),
            (cone.q / v) * np.cos(a) - (cone.p / u) * np.sin(a)])

    k1 = f(y0)
    k2 = f(y0 + 0.5 * h * k1)
    k3 = f(y0 + 0.5 * h * k2)
    k4 = f(y0 + h * k3)
    y1 = y0 + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return float(np.max(np.abs(y1 - curve.samples[idx + 1, 1:])))


def _hit_angle(cone: ConeSpec, a: float, rtol=SHOOT_RTOL, atol=SHOOT_ATOL):
    """Polar angle where the u-axis shot from intercept a crosses r = 1."""
    row = _integrate_from_u_axis(cone, a, 1.0, rtol, atol,
                                 "plateau.shoot", dense=False)[0]
    return math.atan2(row[2], row[1])


def intercept_scan(cone: ConeSpec, n_points: int = 25,
                   span=(0.05, 0.95)):
    """Hit angle at r = 1 over a range of u-axis intercepts.

    Diagnostic for the shooting match: the returned angles are strictly
    decreasing in the intercept (no folds), which is what makes the
    boundary solve unambiguous.
    """
    intercepts = np.linspace(span[0], span[1], n_points)
    angles = np.array([_hit_angle(cone, a) for a in intercepts])
    return intercepts, angles


def _solve_intercept(cone: ConeSpec, target: float, start: float,
                     rtol=SHOOT_RTOL, atol=SHOOT_ATOL) -> float:
    """Intercept whose shot hits r = 1 at the target angle.

    The hit angle decreases from near the cone angle (a -> 0) toward 0
    (a -> 1), so a sign-changing bracket around the start always exists;
    it is grown geometrically before bisection.
    """

    def match(a):
        return _hit_angle(cone, a, rtol, atol) - target

    lo = hi = min(max(start, 1e-6), 1.0 - 1e-9)
    f_lo = f_hi = match(lo)
    tries = 0
    while f_lo < 0.0:  # lo too large, angle already below target
        lo /= 8.0
        f_lo = match(lo)
        tries += 1
        if tries > 60:
            raise ConvergenceError(
                "plateau.bracket",
                f"no intercept bracket: scanned down to {lo:.3e}")
    tries = 0
    while f_hi > 0.0:
        hi = 1.0 - (1.0 - hi) / 8.0
        f_hi = match(hi)
        tries += 1
        if tries > 60:
            raise ConvergenceError(
                "plateau.bracket",
                f"no intercept bracket: scanned up to {hi:.12f}")
    if lo == hi:
        return lo
    return brentq(match, lo, hi, xtol=1e-13, rtol=8.9e-16)


def solve_equivariant_plateau(cone: ConeSpec, t: float,
                              tol: float = 1e-8, *, start: float = 0.5,
                              rtol=SHOOT_RTOL, atol=SHOOT_ATOL) -> ProfileCurve:
    """Minimal profile in the unit disk ending at angle cone_angle + t.

    For t = 0 the exact cone segment is returned.  Otherwise the solution
    caps smoothly on the u-axis (t < 0) or the v-axis (t > 0) and is found
    by shooting; the boundary angle residual is checked against tol.
    """
    t = float(t)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if abs(t) >= MAX_OFFSET:
        raise ValueError(f"|t| must stay below pi/8, got {t}")
    theta_bdry = cone.cone_angle + t
    if not 0.0 < theta_bdry < 0.5 * math.pi:
        raise ValueError(
            f"boundary angle {theta_bdry:.4f} leaves the open quarter plane")
    if t == 0.0:
        return cone_segment(cone, r_max=1.0)

    shoot_cone = cone if t < 0 else cone.swap()
    target = theta_bdry if t < 0 else 0.5 * math.pi - theta_bdry
    root = _solve_intercept(shoot_cone, target, start, rtol, atol)
    samples = _integrate_from_u_axis(shoot_cone, root, 1.0, rtol, atol,
                                     "plateau.shoot")
    residual = abs(math.atan2(samples[-1, 2], samples[-1, 1]) - target)
    if not residual < tol:
        raise ConvergenceError(
            "plateau.residual",
            f"boundary angle residual {residual:.3e} >= tol {tol:.1e}")
    if t > 0:
        samples = _swap_samples(samples)
    return ProfileCurve(cone, "plateau_solution", samples, lam=root,
                        u0=root, axis="u" if t < 0 else "v", tolerance=tol)


def _curve_points(curve: ProfileCurve):
    return np.column_stack([curve.u, curve.v])


def _directed_hausdorff(pts_a, pts_b) -> float:
    """sup over a in A of dist(a, polyline B)."""
    tree = cKDTree(pts_b)
    dist, j = tree.query(pts_a)
    # refine vertex distances against the two segments adjacent to the hit
    for off in (-1, 0):
        k = np.clip(j + off, 0, len(pts_b) - 2)
        seg_a = pts_b[k]
        seg = pts_b[k + 1] - seg_a
        ss = np.einsum("ij,ij->i", seg, seg)
        tpar = np.einsum("ij,ij->i", pts_a - seg_a, seg)
        tpar = np.clip(tpar / np.where(ss > 0, ss, 1.0), 0.0, 1.0)
        gap = pts_a - (seg_a + tpar[:, None] * seg)
        dist = np.minimum(dist, np.hypot(gap[:, 0], gap[:, 1]))
    return float(dist.max())


def curve_sup_distance(a: ProfileCurve, b: ProfileCurve) -> float:
    """Symmetric Hausdorff distance between the two sampled profiles."""
    pa, pb = _curve_points(a), _curve_points(b)
    return max(_directed_hausdorff(pa, pb), _directed_hausdorff(pb, pa))


def _cone_offsets(curve: ProfileCurve):
    tc = curve.cone.cone_angle
    return curve.u * math.sin(tc) - curve.v * math.cos(tc)


def curve_min_separation(a: ProfileCurve, b: ProfileCurve) -> float:
    """Positive lower bound for the planar distance between two profiles.

    Opposite-side curves are separated by the cone line, so the sum of
    their minimal distances to it is a valid bound.  Same-side curves are
    compared along rays from the origin; a sign change of the radial gap
    reports 0 (possible contact).
    """
    ha, hb = _cone_offsets(a), _cone_offsets(b)
    if a.kind == "cone_segment" or b.kind == "cone_segment":
        other = hb if a.kind == "cone_segment" else ha
        return float(np.min(np.abs(other)))
    side_a, side_b = np.sign(np.median(ha)), np.sign(np.median(hb))
    if side_a != side_b:
        return float(np.min(np.abs(ha)) + np.min(np.abs(hb)))
    ga, gb = a.ray, b.ray
    lo = max(ga.theta[0], gb.theta[0])
    hi = min(ga.theta[-1], gb.theta[-1])
    if hi <= lo:
        return 0.0
    grid = np.linspace(lo, hi, 4001)
    gap = gb.r_at(grid) - ga.r_at(grid)
    if gap.max() > 0 and gap.min() < 0:
        return 0.0
    return float(np.min(np.abs(gap)))


@dataclass(frozen=True)
class FoliateFamily:
    """The two normalized leaves generating both one-sided families."""
    plus: ProfileCurve
    minus: ProfileCurve


def make_foliate_family(cone: ConeSpec, r_max: float = 150.0,
                        tol: float = 1e-3) -> FoliateFamily:
    plus = normalize_foliate(shoot_foliate(cone, "+", r_max, tol))
    minus = normalize_foliate(shoot_foliate(cone, "-", r_max, tol))
    return FoliateFamily(plus, minus)


def _family_leaf(family, side: str) -> ProfileCurve:
    if isinstance(family, FoliateFamily):
        return family.plus if side == "+" else family.minus
    if isinstance(family, dict):
        return family[side]
    plus, minus = family
    return plus if side == "+" else minus


def barrier_squeeze(solution: ProfileCurve, foliate_family):
    """Tightest own-side foliation scales sandwiching the solution.

    lambda_upper is the smallest leaf scale whose leaf stays on the far
    side of the solution everywhere in the unit disk, lambda_lower the
    largest whose leaf stays between the cone and the solution; both are
    located by bisection with ray-wise separation tests.  The cone segment
    (t = 0) returns (0, 0): it is the common limit of both families.
    """
    if solution.kind == "cone_segment":
        return 0.0, 0.0
    side = "+" if np.median(_cone_offsets(solution)) > 0 else "-"
    base = _family_leaf(foliate_family, side)
    ray_sol, ray_base = solution.ray, base.ray

    grid = ray_sol.theta
    r_sol = np.exp(ray_sol.logr)
    r_base = ray_base.r_at(grid)
    if np.any(r_base >= ray_base.HUGE):
        raise ConvergenceError(
            "barrier.range", "foliate family does not cover the solution's"
                             " angular range; extend r_max")

    def outside(lam):
        return bool(np.all(lam * r_base >= r_sol))

    def between(lam):
        return bool(np.all(lam * r_base <= r_sol))

    ratio = r_sol / r_base
    hi0 = 2.0 * float(ratio.max())
    lo, hi = 0.0, hi0
    while not outside(hi):
        hi *= 2.0
        if hi > 1e6:
            raise ConvergenceError("barrier.range",
                                   "no outer barrier scale below 1e6")
    while hi - lo > 1e-8 * max(hi0, 1.0):
        mid = 0.5 * (lo + hi)
        if outside(mid):
            hi = mid
        else:
            lo = mid
    lam_upper = hi

    lo, hi = 0.0, lam_upper
    while hi - lo > 1e-8 * max(hi0, 1.0):
        mid = 0.5 * (lo + hi)
        if between(mid):
            lo = mid
        else:
            hi = mid
    lam_lower = lo
    return lam_lower, lam_upper


def uniqueness_probe(cone: ConeSpec, t: float, n_starts: int,
                     tol: float = 1e-8):
    """Shooting solves from well-separated starts, clustered by distance.

    Returns one representative curve per cluster of converged solutions
    (clustering threshold 10*tol in sup-distance).  A single cluster is
    the numerical uniqueness witness; an empty list means no start
    converged.
    """
    if n_starts < 3:
        raise ValueError(f"need at least 3 starts, got {n_starts}")
    if t == 0.0:
        return [cone_segment(cone, r_max=1.0)]
    starts = [(i + 1.0) / (n_starts + 1.0) for i in range(n_starts)]
    solutions = []
    for a0 in starts:
        try:
            solutions.append(
                solve_equivariant_plateau(cone, t, tol, start=a0))
        except ConvergenceError:
            continue
    solutions.sort(key=lambda c: c.u0)
    reps = []
    for sol in solutions:
        if reps and curve_sup_distance(reps[-1], sol) < 10.0 * tol:
            continue
        reps.append(sol)
    return reps


@dataclass(frozen=True)
class SweepResult:
    """Solutions of a boundary-offset sweep with their barrier data.

    offsets lists the offsets that were solved (parallel to solutions);
    failures records (t, message) for offsets the solver could not match.
    continuity_modulus is the largest sup-distance between consecutive
    solutions divided by their offset gap.
    """

    offsets: np.ndarray
    solutions: list
    barrier_bounds: list
    continuity_modulus: float
    mass_bound_ok: list
    min_separation: float
    failures: list


def sweep_boundary(cone: ConeSpec, t_min: float, t_max: float,
                   n_samples: int, tol: float = 1e-8,
                   foliate_family=None) -> SweepResult:
    """Solve the Plateau problem across an offset range and collect diagnostics."""
    if n_samples < 5 and not (t_min == t_max):
        raise ValueError(f"need at least 5 samples, got {n_samples}")
    if not (-MAX_OFFSET < t_min <= t_max < MAX_OFFSET):
        raise ValueError(f"offset range [{t_min}, {t_max}] not inside"
                         f" (-pi/8, pi/8)")
    if t_min == t_max:
        requested = np.array([t_min])
    else:
        requested = np.linspace(t_min, t_max, n_samples)

    if foliate_family is None and np.any(requested != 0.0):
        foliate_family = make_foliate_family(cone)

    offsets, solutions, bounds, mass_ok, failures = [], [], [], [], []
    for t in requested:
        try:
            sol = solve_equivariant_plateau(cone, float(t), tol)
            bnd = barrier_squeeze(sol, foliate_family) if t != 0.0 \
                else (0.0, 0.0)
            ok = mass_bound_check(sol)
        except (ConvergenceError, ValueError) as exc:
            failures.append((float(t), str(exc)))
            continue
        offsets.append(float(t))
        solutions.append(sol)
        bounds.append(bnd)
        mass_ok.append(ok)

    modulus = 0.0
    min_sep = math.inf
    for i in range(len(solutions) - 1):
        dt = offsets[i + 1] - offsets[i]
        if dt > 0:
            d = curve_sup_distance(solutions[i], solutions[i + 1])
            modulus = max(modulus, d / dt)
    for i in range(len(solutions)):
        for j in range(i + 1, len(solutions)):
            min_sep = min(min_sep,
                          curve_min_separation(solutions[i], solutions[j]))
    if len(solutions) < 2:
        min_sep = math.inf
    return SweepResult(np.asarray(offsets), solutions, bounds, modulus,
                       mass_ok, min_sep, failures)


def write_sweep_csv(result: SweepResult, path, meta=()):
    with open(path, "w") as fh:
        for key, val in meta:
            fh.write(f"# {key}={val}\n")
        fh.write("t,axis_intercept,lambda_lower,lambda_upper,theta_at_1,"
                 "sup_distance_to_cone\n")
        for t, sol, (lo, hi) in zip(result.offsets, result.solutions,
                                    result.barrier_bounds):
            theta1 = float(sol.theta[-1])
            supd = float(np.max(np.abs(_cone_offsets(sol))))
            row = (t, sol.u0, lo, hi, theta1, supd)
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")
