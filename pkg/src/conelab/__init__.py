"""conelab: a numerical laboratory for minimal hypersurfaces near
minimizing quadratic cones.

Everything reduces to profile curves in the (u, v) quarter plane: link
spectra and indicial roots, one-sided foliation leaves and their decay
toward the cone, spectral Jacobi fields with exact annulus norms, the
equivariant Plateau problem with barrier squeezing, and density and
graphicality diagnostics.
"""

__version__ = "0.1.0"

from .cones import (ConeConstants, ConeSpec, IndicialEntry, cone_density,
                    growth_gap, harmonic_multiplicity, indicial_entry,
                    indicial_roots, link_eigenvalue,
                    satisfies_minimizing_criterion, spectrum)
from .errors import ConfigError, ConvergenceError
from .jacobi import (SpectralJacobiField, annulus_norm,
                     decay_rigidity_scan, equivariant_jacobi_solve,
                     evaluate_field, make_field, random_spectral_field,
                     scaling_field, scaling_residual,
                     solve_dirichlet_ball_bounded, solve_mode_annulus,
                     three_annulus_check)
from .measures import (DensityProfile, density, density_radius,
                       diagnostics_summary, graphicality_radius,
                       mass_bound_check, mass_in_ball, write_density_csv)
from .plateau import (FoliateFamily, SweepResult, barrier_squeeze,
                      curve_sup_distance, el_residual, make_foliate_family,
                      solve_equivariant_plateau, sweep_boundary,
                      uniqueness_probe)
from .profiles import (GraphOverCone, ProfileCurve, axis_start_expansion,
                       cone_segment, curvature_rhs, fit_decay,
                       graph_over_cone, normalize_foliate, read_curve_csv,
                       scale_curve, second_fundamental_sq, shoot_foliate,
                       write_curve_csv)

__all__ = [name for name in dir() if not name.startswith("_")]
