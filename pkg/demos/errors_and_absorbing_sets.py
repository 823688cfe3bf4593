"""
Absorbing balls, local errors and a global error bound
======================================================

The discrete operator maps the absorbing ball at time tau into the one at
tau + 1. Local errors against a fine reference are second order, and
calibrating the global bound with them dominates the measured error.
"""
import numpy as np

from idedyn import (Discretization, ErrorModel, StateFunction, absorbing_radius,
                    beverton_holt_model, global_error_bound, linear_growth_bounds,
                    lipschitz_bound, local_error, step, sup_distance, trajectory)

model = beverton_holt_model(0.5)
disc = Discretization.uniform(model.habitat, 64)


def coeffs(t):
    gb = linear_growth_bounds(model, t, p=disc.p, rule=disc.rule)
    return gb.a_t, gb.b_t


r0 = absorbing_radius(coeffs, disc.p, tau=0).radius
r1 = absorbing_radius(coeffs, disc.p, tau=1).radius
u = StateFunction.constant(disc, r0, 0)
print(f"||u|| = {r0:.4f} -> ||F(u)|| = {step(model, disc, 0, u).norm():.4f} <= {r1:.4f}")

ref = Discretization.uniform(model.habitat, 4096)
for n in (32, 64, 128, 256, 512):
    e = local_error(model, Discretization.uniform(model.habitat, n), ref, 0,
                    lambda x: 2 + np.sin(x))
    print(f"  local error n={n:4d}: {e:.3e}")

# Global error over five steps, bound calibrated from the measured local errors.
tau, n = -5, 32
coarse = Discretization.uniform(model.habitat, n)
fine = Discretization.uniform(model.habitat, 2048)
orbit_ref = trajectory(model, fine, tau, 0, 3.0)
orbit = trajectory(model, coarse, tau, 0, 3.0)
C = max(local_error(model, coarse, fine, tau + k, orbit_ref[k]) for k in range(5)) * n**2
err = ErrorModel(C=lambda r: C,
                 ell=lambda t, r: coarse.p * lipschitz_bound(model, t, r, rule=coarse.rule))
for k in range(6):
    print(f"  t={tau + k:3d}: measured {sup_distance(orbit[k], orbit_ref[k]):.3e}"
          f"  bound {global_error_bound(err, 5.0, tau, tau + k, n):.3e}")
