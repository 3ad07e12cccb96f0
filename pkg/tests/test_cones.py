import math

import numpy as np
import pytest

from conelab import (ConeSpec, cone_density, growth_gap, harmonic_multiplicity,
                     indicial_entry, indicial_roots, link_eigenvalue,
                     satisfies_minimizing_criterion, spectrum)
from conelab.cones import ball_volume, sphere_area


def test_cone_spec_rejects_nonpositive_factors():
    with pytest.raises(ValueError):
        ConeSpec(0, 3)
    with pytest.raises(ValueError):
        ConeSpec(3, -1)


def test_dimension_and_cone_angle():
    cone = ConeSpec(3, 3)
    assert cone.n == 7
    assert cone.cone_angle == pytest.approx(math.pi / 4, abs=1e-15)
    assert ConeSpec(1, 6).cone_angle == pytest.approx(math.atan(math.sqrt(6)),
                                                      abs=1e-15)


def test_minimizing_criterion_table():
    assert satisfies_minimizing_criterion(3, 3)
    assert satisfies_minimizing_criterion(2, 4)
    assert satisfies_minimizing_criterion(4, 2)
    assert satisfies_minimizing_criterion(1, 6)   # p+q = 7
    assert not satisfies_minimizing_criterion(2, 2)
    assert not satisfies_minimizing_criterion(1, 5)
    with pytest.raises(ValueError):
        satisfies_minimizing_criterion(0, 9)


def test_harmonic_multiplicity_low_dimensions():
    # circle: constant plus the two Fourier modes per degree
    assert harmonic_multiplicity(1, 0) == 1
    assert [harmonic_multiplicity(1, k) for k in (1, 2, 3)] == [2, 2, 2]
    # S^2: 2k+1
    assert [harmonic_multiplicity(2, k) for k in range(4)] == [1, 3, 5, 7]
    # S^3: (k+1)^2
    assert [harmonic_multiplicity(3, k) for k in range(4)] == [1, 4, 9, 16]
    with pytest.raises(ValueError):
        harmonic_multiplicity(0, 1)
    with pytest.raises(ValueError):
        harmonic_multiplicity(2, -1)


def test_link_eigenvalue_values():
    cone = ConeSpec(3, 3)
    assert link_eigenvalue(cone, 0, 0) == -6.0          # -(n-1)
    assert link_eigenvalue(cone, 1, 0) == 0.0
    assert link_eigenvalue(cone, 0, 1) == 0.0
    assert link_eigenvalue(cone, 1, 1) == 6.0
    # swap symmetry in (k,l) when p = q
    assert link_eigenvalue(cone, 2, 1) == link_eigenvalue(cone, 1, 2)


def test_indicial_roots_solve_characteristic_equation():
    cone = ConeSpec(2, 4)
    for k in range(4):
        for l in range(4):
            mu = link_eigenvalue(cone, k, l)
            gp, gm = indicial_roots(cone, mu)
            assert gp >= gm
            assert gp + gm == pytest.approx(2 - cone.n, abs=1e-12)
            assert gp * gm == pytest.approx(-mu, abs=1e-10)


def test_lowest_mode_roots_are_exact_integers_for_3_3():
    cone = ConeSpec(3, 3)
    entry = indicial_entry(cone, 0, 0)
    assert entry.gamma_plus == -2.0
    assert entry.gamma_minus == -3.0
    assert entry.degeneracy == 1


def test_translation_and_rotation_rates():
    cone = ConeSpec(3, 3)
    assert indicial_entry(cone, 1, 0).gamma_plus == 0.0
    assert indicial_entry(cone, 0, 1).gamma_plus == 0.0
    assert indicial_entry(cone, 1, 1).gamma_plus == 1.0


def test_spectrum_is_sorted_and_complete():
    cone = ConeSpec(2, 4)
    entries = spectrum(cone, 3)
    assert len(entries) == 16
    mus = [e.mu for e in entries]
    assert mus == sorted(mus)
    assert all(e.degeneracy >= 1 for e in entries)
    degs = {(e.k, e.l): e.degeneracy for e in entries}
    assert degs[(0, 0)] == 1
    assert degs[(2, 0)] == harmonic_multiplicity(2, 2)
    assert degs[(1, 3)] == (harmonic_multiplicity(2, 1)
                            * harmonic_multiplicity(4, 3))


def test_growth_gap_values():
    assert growth_gap(ConeSpec(3, 3)) == 0.5
    assert growth_gap(ConeSpec(1, 6)) == pytest.approx(math.sqrt(2),
                                                       abs=1e-14)
    assert growth_gap(ConeSpec(4, 4)) > 0


def test_density_constant_closed_forms():
    c33 = cone_density(ConeSpec(3, 3))
    assert c33.theta_c == pytest.approx(15 * math.pi / 32, abs=1e-10)
    assert c33.gamma == -2.0
    assert c33.growth_gap == 0.5
    c24 = cone_density(ConeSpec(2, 4))
    assert c24.theta_c == pytest.approx(40.0 / 27.0, abs=1e-10)
    # swap invariance of the density constant
    assert c24.theta_c == cone_density(ConeSpec(4, 2)).theta_c
    # density constant of a minimizing cone exceeds the plane value 1
    assert c33.theta_c > 1 and c24.theta_c > 1


def test_link_volume_matches_product_geometry():
    cone = ConeSpec(3, 3)
    cc = cone_density(cone)
    expected = (sphere_area(3) * cone.r_p ** 3
                * sphere_area(3) * cone.r_q ** 3)
    assert cc.link_volume == pytest.approx(expected, rel=1e-14)
    assert cc.theta_c == pytest.approx(
        cc.link_volume / (cone.n * ball_volume(cone.n)), rel=1e-14)


def test_sphere_and_ball_constants():
    assert sphere_area(1) == pytest.approx(2 * math.pi, rel=1e-15)
    assert sphere_area(2) == pytest.approx(4 * math.pi, rel=1e-15)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-15)
    assert ball_volume(7) == pytest.approx(16 * math.pi ** 3 / 105,
                                           rel=1e-14)
