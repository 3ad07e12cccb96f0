"""Exact geometry and spectral data of the quadratic cones C(S^p x S^q).

The cone over S^p(r_p) x S^q(r_q) sits in R^{n+1} with n = p+q+1 as the
zero set of q|x|^2 - p|y|^2.  Everything in this module is closed form:
link radii and volume, eigenvalues of the link Jacobi operator, indicial
roots, and the density constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache


def sphere_area(d: int) -> float:
    """Surface measure of the unit d-sphere S^d in R^{d+1}."""
    if d < 0:
        raise ValueError(f"sphere dimension must be >= 0, got {d}")
    return 2.0 * math.pi ** ((d + 1) / 2.0) / math.gamma((d + 1) / 2.0)


def ball_volume(n: int) -> float:
    """Volume of the unit n-ball."""
    if n < 0:
        raise ValueError(f"ball dimension must be >= 0, got {n}")
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def satisfies_minimizing_criterion(p: int, q: int) -> bool:
    """Sufficient condition for C(S^p x S^q) to be area minimizing.

    True iff p+q > 6 or (p,q) is one of (3,3), (2,4), (4,2).  This is the
    standard sufficient criterion, not an iff: pairs outside it are simply
    not certified by this predicate.
    """
    if p < 1 or q < 1:
        raise ValueError(f"sphere factors need p,q >= 1, got ({p},{q})")
    return p + q > 6 or (p, q) in {(3, 3), (2, 4), (4, 2)}


@dataclass(frozen=True)
class ConeSpec:
    """The pair (p,q) plus derived dimensional data.

    Orientation convention: the unit normal of the cone points into
    E_+ = {q|x|^2 > p|y|^2}, the region of the (u,v) quarter plane below
    the cone line (it contains the u-axis).
    """

    p: int
    q: int

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError(f"need p,q >= 1, got ({self.p},{self.q})")

    @property
    def n(self) -> int:
        """Dimension of the hypersurface (the cone is n-dimensional)."""
        return self.p + self.q + 1

    @property
    def cone_angle(self) -> float:
        """Angle of the cone line {q u^2 = p v^2} in the quarter plane."""
        return math.atan(math.sqrt(self.q / self.p))

    @property
    def r_p(self) -> float:
        return math.sqrt(self.p / (self.n - 1))

    @property
    def r_q(self) -> float:
        return math.sqrt(self.q / (self.n - 1))

    @property
    def orientation(self) -> int:
        # +1: normal points into E_+
        return 1

    def swap(self) -> "ConeSpec":
        return ConeSpec(self.q, self.p)

    def e_plus_excess(self, u, v):
        """q u^2 - p v^2; positive in E_+, negative in E_-, zero on the cone."""
        return self.q * u * u - self.p * v * v

    @property
    def is_minimizing(self) -> bool:
        return satisfies_minimizing_criterion(self.p, self.q)


@lru_cache(maxsize=None)
def harmonic_multiplicity(d: int, k: int) -> int:
    """Dimension of degree-k spherical harmonics on S^d."""
    if d < 1 or k < 0:
        raise ValueError(f"need d >= 1 and k >= 0, got ({d},{k})")
    low = math.comb(d + k - 2, k - 2) if k >= 2 else 0
    return math.comb(d + k, k) - low


def link_eigenvalue(cone: ConeSpec, k: int, l: int) -> float:
    """Eigenvalue mu_{k,l} of minus the link Jacobi operator.

    The link is S^p(r_p) x S^q(r_q) and the operator is the
    Laplace-Beltrami operator plus the constant n-1; the product harmonic
    of bidegree (k,l) gives

        mu_{k,l} = (n-1)/p * k(k+p-1) + (n-1)/q * l(l+q-1) - (n-1).
    """
    if k < 0 or l < 0:
        raise ValueError(f"harmonic degrees must be >= 0, got ({k},{l})")
    m = cone.n - 1
    return m / cone.p * k * (k + cone.p - 1) + m / cone.q * l * (l + cone.q - 1) - m


def indicial_roots(cone: ConeSpec, mu: float) -> tuple[float, float]:
    """Both roots of gamma^2 + (n-2) gamma - mu = 0, descending.

    These are the exponents of homogeneous solutions r^gamma of the radial
    mode equation on the cone.  A negative discriminant means the mode
    oscillates (strict stability fails) and is reported as an error.
    """
    disc = (cone.n - 2) ** 2 + 4.0 * mu
    if disc < 0:
        raise ValueError(
            f"complex indicial roots for mu={mu}: discriminant {disc} < 0"
        )
    root = math.sqrt(disc)
    return (2.0 - cone.n + root) / 2.0, (2.0 - cone.n - root) / 2.0


@dataclass(frozen=True)
class IndicialEntry:
    """One link eigenmode: bidegree, eigenvalue, roots, multiplicity."""

    k: int
    l: int
    mu: float
    gamma_plus: float
    gamma_minus: float
    degeneracy: int


def indicial_entry(cone: ConeSpec, k: int, l: int) -> IndicialEntry:
    mu = link_eigenvalue(cone, k, l)
    gp, gm = indicial_roots(cone, mu)
    deg = harmonic_multiplicity(cone.p, k) * harmonic_multiplicity(cone.q, l)
    return IndicialEntry(k, l, mu, gp, gm, deg)


def spectrum(cone: ConeSpec, max_degree: int) -> list[IndicialEntry]:
    """All modes with k,l <= max_degree, sorted by eigenvalue.

    The sorted flattening of the (k,l) table realizes the single-index
    enumeration mu_1 <= mu_2 <= ... used in the linear theory.
    """
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    entries = [
        indicial_entry(cone, k, l)
        for k in range(max_degree + 1)
        for l in range(max_degree + 1)
    ]
    entries.sort(key=lambda e: (e.mu, e.k, e.l))
    return entries


def growth_gap(cone: ConeSpec, max_degree: int = 3) -> float:
    """Minimal distance of any indicial root to the critical rate (2-n)/2.

    Strictly positive exactly when no mode with k,l <= max_degree carries a
    homogeneous Jacobi field of the critical growth rate.
    """
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    crit = (2.0 - cone.n) / 2.0
    gap = math.inf
    for e in spectrum(cone, max_degree):
        gap = min(gap, abs(e.gamma_plus - crit), abs(e.gamma_minus - crit))
    return gap


@dataclass(frozen=True)
class ConeConstants:
    theta_c: float
    link_volume: float
    gamma: float
    growth_gap: float


def cone_density(cone: ConeSpec) -> ConeConstants:
    """Density constant Theta(C) and companion spectral constants.

    link_volume is the H^{n-1} measure of S^p(r_p) x S^q(r_q) from the
    closed-form sphere areas, theta_c = link_volume / (n * omega_n), and
    gamma is the top indicial root of the lowest mode (the rate at which
    the foliation leaves approach the cone).
    """
    link_volume = (
        sphere_area(cone.p) * cone.r_p ** cone.p
        * sphere_area(cone.q) * cone.r_q ** cone.q
    )
    theta_c = link_volume / (cone.n * ball_volume(cone.n))
    gamma = indicial_roots(cone, link_eigenvalue(cone, 0, 0))[0]
    return ConeConstants(theta_c, link_volume, gamma, growth_gap(cone))


def spectrum_rows(cone: ConeSpec, max_degree: int):
    """Spectrum table as plain tuples (k, l, degeneracy, mu, gamma+, gamma-)."""
    return [
        (e.k, e.l, e.degeneracy, e.mu, e.gamma_plus, e.gamma_minus)
        for e in spectrum(cone, max_degree)
    ]
