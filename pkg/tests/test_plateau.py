import math

import numpy as np
import pytest

from conelab import (ConeSpec, ConvergenceError, barrier_squeeze,
                     cone_segment, curve_sup_distance, el_residual,
                     make_foliate_family, scale_curve,
                     solve_equivariant_plateau, sweep_boundary,
                     uniqueness_probe)
from conelab.plateau import curve_min_separation, intercept_scan


@pytest.fixture(scope="module")
def sol_neg(cone33):
    return solve_equivariant_plateau(cone33, -0.03)


def test_offset_zero_returns_cone_segment(cone33):
    sol = solve_equivariant_plateau(cone33, 0.0)
    assert sol.kind == "cone_segment"
    assert np.all(sol.alpha == cone33.cone_angle)
    assert sol.r[-1] == pytest.approx(1.0, rel=1e-15)


def test_offset_domain_validation(cone33):
    with pytest.raises(ValueError):
        solve_equivariant_plateau(cone33, math.pi / 8)
    with pytest.raises(ValueError):
        solve_equivariant_plateau(cone33, -math.pi / 8)
    # for (1,6) the positive range is clipped by the quadrant before pi/8
    steep = ConeSpec(1, 6)
    assert math.pi / 2 - steep.cone_angle < math.pi / 8
    with pytest.raises(ValueError):
        solve_equivariant_plateau(steep, 0.39)


def test_solution_meets_boundary_condition(cone33, sol_neg):
    t = -0.03
    assert sol_neg.kind == "plateau_solution"
    assert sol_neg.axis == "u"
    assert sol_neg.r[-1] == pytest.approx(1.0, abs=1e-12)
    assert sol_neg.theta[-1] == pytest.approx(cone33.cone_angle + t,
                                              abs=1e-10)
    # intercept bookkeeping: the curve starts on the u-axis at lam = u0
    assert sol_neg.v[0] == 0.0
    assert sol_neg.u[0] == pytest.approx(sol_neg.lam, abs=1e-14)
    assert sol_neg.u0 == sol_neg.lam


def test_positive_offset_mirrors_negative_for_symmetric_cone(cone33):
    t = 0.0175
    plus = solve_equivariant_plateau(cone33, t)
    minus = solve_equivariant_plateau(cone33, -t)
    assert plus.axis == "v" and minus.axis == "u"
    mirrored = plus.samples.copy()
    mirrored[:, [1, 2]] = mirrored[:, [2, 1]]
    mirrored[:, 3] = math.pi / 2 - mirrored[:, 3]
    # p = q makes the swap an exact symmetry of the shooting problem
    assert np.max(np.abs(mirrored - minus.samples)) == 0.0


def test_solved_profile_satisfies_curvature_equation(cone33, sol_neg):
    assert el_residual(sol_neg) < 1e-8
    assert el_residual(cone_segment(cone33)) < 1e-14


def test_intercept_scan_is_strictly_decreasing(cone33):
    intercepts, angles = intercept_scan(cone33, n_points=12)
    assert np.all(np.diff(intercepts) > 0)
    assert np.all(np.diff(angles) < 0)


def test_uniqueness_probe_single_cluster(cone33):
    sols = uniqueness_probe(cone33, -0.03, n_starts=8)
    assert len(sols) == 1
    sols = uniqueness_probe(cone33, 0.0, n_starts=8)
    assert len(sols) == 1 and sols[0].kind == "cone_segment"


def test_sup_distance_on_nested_cone_segments(cone33):
    long_seg = cone_segment(cone33, r_max=1.0)
    short_seg = cone_segment(cone33, r_max=0.5)
    d = curve_sup_distance(long_seg, short_seg)
    assert d == pytest.approx(0.5, rel=1e-12)
    assert curve_sup_distance(long_seg, long_seg) == 0.0
    # symmetric by definition
    assert d == curve_sup_distance(short_seg, long_seg)


def test_min_separation_sign_cases(cone33, family33):
    seg = cone_segment(cone33, r_max=100.0, n_samples=4001)
    plus, minus = family33.plus, family33.minus
    assert curve_min_separation(plus, minus) > 0
    assert curve_min_separation(plus, seg) > 0
    assert curve_min_separation(plus, plus) == 0.0
    inner = scale_curve(plus, 0.5)
    gap = curve_min_separation(plus, inner)
    assert 0 < gap <= curve_sup_distance(plus, inner)


def test_barrier_squeeze_brackets_solution(cone33, family33, sol_neg):
    from conelab.plateau import _directed_hausdorff
    lo, hi = barrier_squeeze(sol_neg, family33)
    assert 0 < lo <= hi
    assert hi - lo < 1e-6
    # negative offsets live on the E_+ side, so the squeeze runs in the
    # plus family; the solution is a piece of a leaf and the pinned leaf
    # passes through every solution point (one-sided distance; the leaf
    # runs much farther)
    leaf = scale_curve(family33.plus, hi)
    pts_sol = np.column_stack([sol_neg.u, sol_neg.v])
    pts_leaf = np.column_stack([leaf.u, leaf.v])
    assert _directed_hausdorff(pts_sol, pts_leaf) < 1e-4


def test_barrier_squeeze_cone_returns_zero(cone33, family33):
    seg = solve_equivariant_plateau(cone33, 0.0)
    assert barrier_squeeze(seg, family33) == (0.0, 0.0)


def test_barrier_lambda_symmetric_under_offset_sign(cone33, family33):
    t = 0.02
    lo_p, hi_p = barrier_squeeze(solve_equivariant_plateau(cone33, t),
                                 family33)
    lo_m, hi_m = barrier_squeeze(solve_equivariant_plateau(cone33, -t),
                                 family33)
    assert hi_p == pytest.approx(hi_m, rel=1e-6)


def test_sweep_boundary_full_window(cone33, family33):
    result = sweep_boundary(cone33, -0.05, 0.05, 21, foliate_family=family33)
    assert not result.failures
    assert len(result.offsets) == 21
    assert len(result.solutions) == 21
    assert result.min_separation > 0
    assert math.isfinite(result.continuity_modulus)
    assert all(result.mass_bound_ok)
    lam_by_t = dict(zip(result.offsets,
                        [hi for _, hi in result.barrier_bounds]))
    assert lam_by_t[0.0] == 0.0
    # barrier scale grows with |t|
    ts = sorted(t for t in result.offsets if t >= 0)
    for a, b in zip(ts[:-1], ts[1:]):
        assert lam_by_t[a] < lam_by_t[b]


def test_sweep_boundary_single_point_bypass(cone33):
    result = sweep_boundary(cone33, 0.0, 0.0, 1)
    assert len(result.solutions) == 1
    assert result.solutions[0].kind == "cone_segment"
    assert result.barrier_bounds == [(0.0, 0.0)]


def test_sweep_boundary_validates_sample_count(cone33):
    with pytest.raises(ValueError):
        sweep_boundary(cone33, -0.01, 0.01, 3)


def test_sweep_csv_columns(tmp_path, cone33, family33):
    from conelab.plateau import write_sweep_csv
    result = sweep_boundary(cone33, -0.01, 0.01, 5, foliate_family=family33)
    path = tmp_path / "sweep.csv"
    write_sweep_csv(result, path, meta=(("seed", 0),))
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed=0"
    assert lines[1].split(",") == ["t", "axis_intercept", "lambda_lower",
                                   "lambda_upper", "theta_at_1",
                                   "sup_distance_to_cone"]
    assert len(lines) == 7
