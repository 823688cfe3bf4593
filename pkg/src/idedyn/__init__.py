"""Numerical dynamics of nonautonomous integrodifference equations.

Spline collocation of scalar IDEs on an interval, pullback and forward
experiments, and the analytic bounds that go with them.
"""
from .errors import (ConvergenceError, DegenerateExperimentError, IdeError, InputError,
                     NumericalError, PreconditionError)
from .quadrature import QuadratureRule, integrate, trapezoid_rule
from .splines import (Grid, ProjectionFamily, SplineFunction, SplineSpace, bspline_eval,
                      collocation_points, lebesgue_estimate, project, spline_eval,
                      stability_constant)
from .model import (BevertonHolt, CustomKernel, GrowthBounds, Habitat, IdeModel,
                    LaplaceKernel, Ricker, growth_eval, kernel_eval, kernel_mass,
                    linear_growth_bounds, lipschitz_bound)
from .dynamics import (Discretization, FunctionSet, StateFunction, fixed_point_autonomous,
                       hausdorff_semidist, pullback_state, step, sup_distance, trajectory)
from .analysis import (AbsorbingRadius, ErrorModel, RateTable, absorbing_radius,
                       convergence_table, forward_limit_experiment, global_error_bound,
                       local_error, ricker_conditions)
from .setups import beverton_holt_model, ricker_model

__version__ = "0.1.0"
