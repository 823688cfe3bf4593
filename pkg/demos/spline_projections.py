"""
Collocation projections onto linear, quadratic and cubic splines
================================================================

Interpolate ``sin`` on [-3, 3] and watch the error fall like h^2, h^3, h^4.
Then estimate the norm of each projection from random test functions.
"""
import numpy as np

from idedyn import Grid, SplineSpace, lebesgue_estimate
from idedyn.splines import collocation_points, project_function

x = np.linspace(-3, 3, 20001)

# Cubic collocation also needs u'' at both ends; for sin that is -sin.
for degree in (1, 2, 3):
    print(f"degree {degree}")
    prev = None
    for n in (16, 32, 64, 128, 256):
        space = SplineSpace(Grid.uniform(-3, 3, n), degree)
        f = project_function(space, np.sin, d2=lambda s: -np.sin(s))
        xs = np.union1d(x, collocation_points(space))
        err = np.max(np.abs(f(xs) - np.sin(xs)))
        eoc = "" if prev is None else f"  EOC {np.log2(prev / err):.3f}"
        print(f"  n={n:4d}  error {err:.3e}{eoc}")
        prev = err

# Empirical projection norms stay below the stability constants p.
rng = np.random.default_rng(0)
for degree in (1, 2, 3):
    space = SplineSpace(Grid.uniform(-3, 3, 32), degree)
    est = lebesgue_estimate(space, trials=200, rng=rng)
    print(f"degree {degree}: ||pi|| >= {est:.4f}, p = {space.stability_constant}")
