"""Randomized property checks behind the ``check-invariants`` subcommand.

Every check returns a :class:`CheckResult`; a failure is a randomized input for
which the documented inequality is violated beyond its relative tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import absorbing_radius
from .dynamics import (Discretization, StateFunction, hausdorff_semidist, step,
                       sup_distance)
from .model import BevertonHolt, IdeModel, linear_growth_bounds, lipschitz_bound
from .splines import SplineSpace, bspline_eval, lebesgue_estimate

RTOL = 1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    trials: int
    failures: int
    worst: float = 0.0  # ratio to the bound, or the extreme violation for sign checks

    @property
    def ok(self) -> bool:
        return self.failures == 0


def random_state(disc, rng, scale=1.0, time=0):
    """Nonnegative piecewise-linear state with random nodal values in ``[0, scale]``."""
    vals = rng.uniform(0.0, scale, len(disc.grid.nodes))
    nodes = disc.grid.nodes
    return StateFunction.from_callable(disc, lambda x: np.interp(x, nodes, vals), time,
                                       d2=lambda x: 0.0)


def partition_of_unity(grid, samples=257):
    x = np.linspace(grid.a, grid.b, samples)
    fails, worst = 0, 0.0
    for l in (1, 2, 3):
        space = SplineSpace(grid, l)
        total = sum(bspline_eval(space, j, x) for j in range(-l, grid.n))
        err = float(np.max(np.abs(total - 1.0)))
        worst = max(worst, err)
        fails += err > 1e-10
    return CheckResult("partition of unity", 3, fails, worst)


def projection_stability(grid, trials, rng):
    fails, worst = 0, 0.0
    for l in (1, 2, 3):
        space = SplineSpace(grid, l)
        est = lebesgue_estimate(space, trials, rng=rng)
        worst = max(worst, est / space.stability_constant)
        fails += int(est > space.stability_constant + 1e-9)
    return CheckResult("projection stability", 3 * trials, fails, worst)


def boundedness(model: IdeModel, disc, t, trials, rng, scale=5.0):
    gb = linear_growth_bounds(model, t, p=disc.p, rule=disc.rule)
    fails, worst = 0, 0.0
    for _ in range(trials):
        u = random_state(disc, rng, scale * rng.uniform(), t)
        lhs = step(model, disc, t, u).norm()
        rhs = disc.p * (gb.b_t + gb.a_t * u.norm())
        worst = max(worst, lhs / rhs)
        fails += lhs > rhs * (1 + RTOL)
    return CheckResult("boundedness", trials, fails, worst)


def lipschitz(model: IdeModel, disc, t, trials, rng, r=5.0):
    ell = lipschitz_bound(model, t, r, rule=disc.rule)
    fails, worst = 0, 0.0
    for _ in range(trials):
        u = random_state(disc, rng, r, t)
        v = random_state(disc, rng, r, t)
        lhs = sup_distance(step(model, disc, t, u), step(model, disc, t, v))
        rhs = disc.p * ell * sup_distance(u, v)
        worst = max(worst, lhs / rhs)
        fails += lhs > rhs * (1 + RTOL)
    return CheckResult("lipschitz", trials, fails, worst)


def order_preservation(model: IdeModel, disc, t, trials, rng, scale=5.0):
    fails, worst = 0, -np.inf
    for _ in range(trials):
        u = random_state(disc, rng, scale, t)
        bump = random_state(disc, rng, scale, t)
        v = StateFunction(disc, type(u.spline)(disc.space, u.spline.coefficients
                                               + bump.spline.coefficients), t)
        fu, fv = step(model, disc, t, u).values, step(model, disc, t, v).values
        gap = float(np.max(fu - fv))
        worst = max(worst, gap)
        fails += gap > RTOL * max(1.0, float(np.max(np.abs(fv))))
    return CheckResult("order preservation", trials, fails, worst)


def positivity(model: IdeModel, disc, t, trials, rng, scale=5.0):
    fails = 0
    worst = np.inf
    for _ in range(trials):
        out = step(model, disc, t, random_state(disc, rng, scale, t)).values
        worst = min(worst, float(out.min()))
        fails += bool(np.any(out < 0))
    return CheckResult("positivity", trials, fails, worst)


def absorbing_invariance(model: IdeModel, disc, tau, trials, rng, rho=1.1):
    """``step`` maps the sphere of radius ``rho R_tau`` into the ball ``rho R_{tau+1}``."""
    def coeffs(s):
        gb = linear_growth_bounds(model, s, p=disc.p, rule=disc.rule)
        return gb.a_t, gb.b_t

    r0 = absorbing_radius(coeffs, disc.p, "pullback", tau, rho=rho).radius
    r1 = absorbing_radius(coeffs, disc.p, "pullback", tau + 1, rho=rho).radius
    fails, worst = 0, 0.0
    for _ in range(trials):
        u = random_state(disc, rng, 1.0, tau)
        u = StateFunction(disc, type(u.spline)(disc.space, u.spline.coefficients
                                               * (r0 / u.norm())), tau)
        lhs = step(model, disc, tau, u).norm()
        worst = max(worst, lhs / r1)
        fails += lhs > r1 * (1 + RTOL)
    return CheckResult("absorbing invariance", trials, fails, worst)


def hausdorff_oracle(disc, trials, rng):
    fails = 0
    for _ in range(trials):
        A = [StateFunction.constant(disc, c) for c in rng.uniform(-3, 3, rng.integers(1, 6))]
        B = [StateFunction.constant(disc, c) for c in rng.uniform(-3, 3, rng.integers(1, 6))]
        brute = 0.0
        for a in A:
            best = np.inf
            for b in B:
                best = min(best, abs(a.spline.coefficients[0] - b.spline.coefficients[0]))
            brute = max(brute, best)
        fails += int(abs(hausdorff_semidist(A, B) - brute) > 1e-12)
    return CheckResult("hausdorff oracle", trials, fails)


def run_all(model: IdeModel, n=64, degree=1, t=0, trials=100, seed=0):
    """Run every check applicable to ``model`` on ``n`` subintervals."""
    rng = np.random.default_rng(seed)
    disc = Discretization.uniform(model.habitat, n, degree)
    results = [
        partition_of_unity(disc.grid),
        projection_stability(disc.grid, max(1, trials // 3), rng),
        boundedness(model, disc, t, trials, rng),
        lipschitz(model, disc, t, trials, rng),
        absorbing_invariance(model, disc, t, trials, rng),
        hausdorff_oracle(disc, trials, rng),
    ]
    if degree == 1:
        results.append(positivity(model, disc, t, trials, rng))
        if isinstance(model.growth, BevertonHolt) and model.growth.alpha <= 1:
            results.append(order_preservation(model, disc, t, trials, rng))
    return results
