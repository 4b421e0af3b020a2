"""Numerical laboratory for L^p gradient estimates on conformally flat surfaces."""

from .counterexample import (CounterexampleSpec, EpsilonSchedule, FailureReport,
                             build_sigma, integral_bound_example,
                             optimality_schedule, product_norms,
                             radial_profile_integral, remark_surface,
                             select_epsilon, u_infty_tail, verify_failure)
from .curvature import (CurvatureStats, k_global, k_local, scale_control_report,
                        space_form_volume)
from .fields import (SmoothField, combine, eval_jet, make_cutoff,
                     make_linear_bump, rescale)
from .geodesic import (CoveringReport, DistanceField, distance_field,
                       geodesic_ball, greedy_covering)
from .inequality import (RatioReport, best_constant_search,
                         global_from_local_probe, l2_identity_check,
                         local_gradient_ratio, ratio_qp)
from .quadrature import (EuclideanBall, GeodesicBall, QuadratureGrid, Rectangle,
                         avg_lp_norm, build_grid, integrate, lp_norm)
from .surfaces import (ConformalSurface, ConstantFactorSurface,
                       ExpFactorSurface, FlatSurface, PatchedSurface,
                       laplace_beltrami, min_ricci, riem_grad_norm, rho_k,
                       volume_density)

__version__ = "0.1.0"
