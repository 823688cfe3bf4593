import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from idedyn import (BevertonHolt, DegenerateExperimentError, Discretization, ErrorModel,
                    Habitat, IdeModel, InputError, LaplaceKernel, PreconditionError, Ricker,
                    StateFunction, absorbing_radius, beverton_holt_model, convergence_table,
                    forward_limit_experiment, global_error_bound, linear_growth_bounds,
                    lipschitz_bound, local_error, ricker_conditions, ricker_model, step,
                    sup_distance, trajectory)
from idedyn.analysis import decay_ratios

OMEGA = Habitat(-3.0, 3.0)
const = lambda v: (lambda *args: v)


def disc_coeffs(model, disc):
    """Growth coefficients of the discrete operator actually iterated on ``disc``."""
    def get(t):
        gb = linear_growth_bounds(model, t, p=disc.p, rule=disc.rule)
        return gb.a_t, gb.b_t
    return get


# --- absorbing radii -----------------------------------------------------------

def test_radius_no_slope():
    r = absorbing_radius(lambda t: (0.0, 2.0), p=1.5)
    assert r.R == pytest.approx(3.0) and r.radius == pytest.approx(3.3)


@pytest.mark.parametrize("direction", ("pullback", "forward"))
def test_radius_constant_coefficients(direction):
    p, a, b = 2.0, 0.3, 0.7
    r = absorbing_radius(lambda t: (a, b), p=p, direction=direction, tol=1e-12)
    assert r.R == pytest.approx(p * b / (1 - p * a), abs=1e-10)


def test_radius_partial_sum_oracle():
    a = lambda t: 0.3 + 0.1 * math.sin(t)
    tol = 1e-10
    r = absorbing_radius(lambda t: (a(t), 1.0), p=1.0, tau=0, tol=tol)
    direct, prod = 0.0, 1.0
    for k in range(1, 201):
        direct += prod
        prod *= a(-k)
    assert abs(r.R - direct) <= tol
    assert r.truncation_depth < 200


def test_radius_truncation_stable():
    c = lambda t: (0.5 + 0.3 * math.cos(t / 2), 1 + 0.5 * math.sin(t))
    coarse = absorbing_radius(c, tol=1e-8)
    fine = absorbing_radius(c, tol=1e-14)
    assert fine.truncation_depth > coarse.truncation_depth
    assert abs(fine.R - coarse.R) < 1e-8


def test_radius_not_summable():
    with pytest.raises(PreconditionError):
        absorbing_radius(lambda t: (1.0, 1.0), p=1.0)


def test_radius_finite_time_domain():
    m = ricker_model()
    r = absorbing_radius(m, direction="pullback", tau=3)
    gb = [linear_growth_bounds(m, t) for t in range(3)]
    assert r.R == pytest.approx(gb[2].b_t)


def test_forward_radius_periodic_limsup():
    c = lambda t: (0.0, 2.0 + math.sin(math.pi * t / 2))
    r = absorbing_radius(c, direction="forward", tau=0)
    assert r.R == pytest.approx(3.0)


def test_radius_validation():
    with pytest.raises(InputError):
        absorbing_radius(lambda t: (0.1, 1.0), tol=0)
    with pytest.raises(InputError):
        absorbing_radius(lambda t: (0.1, 1.0), rho=1.0)
    with pytest.raises(InputError):
        absorbing_radius(lambda t: (0.1, 1.0), direction="sideways")


@pytest.mark.parametrize("alpha, degree", [(0.5, 1), (1.0, 1), (2.0, 2), (0.5, 3)])
def test_absorbing_ball_positively_invariant(alpha, degree, rng):
    m = beverton_holt_model(alpha)
    disc = Discretization.uniform(m.habitat, 48, degree)
    get = disc_coeffs(m, disc)
    for tau in (-7, 0, 4):
        r0 = absorbing_radius(get, disc.p, tau=tau).radius
        r1 = absorbing_radius(get, disc.p, tau=tau + 1).radius
        for _ in range(10):
            vals = rng.uniform(0, 1, 49)
            u = StateFunction.from_callable(disc, lambda x: np.interp(x, disc.grid.nodes, vals),
                                            tau, d2=lambda x: 0.0)
            u = StateFunction(disc, type(u.spline)(disc.space, u.spline.coefficients * r0 / u.norm()),
                              tau)
            assert step(m, disc, tau, u).norm() <= r1 * (1 + 1e-8)


def test_absorption_time(rng):
    # norms obey ||u_{t+1}|| <= p (b_t + a_t ||u_t||); iterate that majorant
    m = beverton_holt_model(0.5)
    disc = Discretization.uniform(m.habitat, 32)
    get = disc_coeffs(m, disc)
    tau = -10
    radius = lambda t: absorbing_radius(get, disc.p, tau=t).radius
    for _ in range(5):
        u0 = StateFunction.constant(disc, 2 * radius(tau) * rng.uniform(0.5, 1.0), tau)
        bound, t = u0.norm(), tau
        while bound > radius(t):
            a, b = get(t)
            bound, t = disc.p * (b + a * bound), t + 1
        orbit = trajectory(m, disc, tau, t + 5, u0)
        for s, u in enumerate(orbit[t - tau:], start=t):
            assert u.norm() <= radius(s) * (1 + 1e-8)


def test_absorption_one_step_bounded_growth(rng):
    m = beverton_holt_model(2.0)
    disc = Discretization.uniform(m.habitat, 32)
    get = disc_coeffs(m, disc)
    assert get(0)[0] == 0.0
    R = absorbing_radius(get, disc.p, tau=1)
    for _ in range(10):
        u = StateFunction.constant(disc, 2 * R.radius * rng.uniform(), 0)
        assert step(m, disc, 0, u).norm() <= R.radius


# --- local and global errors ---------------------------------------------------

def test_local_error_affine_image():
    m = IdeModel(OMEGA, LaplaceKernel(const(2.0)), BevertonHolt(1.0, const(0.0)),
                 lambda x: 1.0 + 0.2 * x)
    ref = Discretization.uniform(OMEGA, 1024)
    assert local_error(m, Discretization.uniform(OMEGA, 16), ref, 0, 1.0) <= 1e-14


def test_local_error_same_level():
    m = beverton_holt_model(0.5)
    disc = Discretization.uniform(m.habitat, 64)
    assert local_error(m, disc, disc, 0, 2.0) == 0.0
    with pytest.raises(InputError):
        local_error(m, disc, Discretization.uniform(m.habitat, 32), 0, 2.0)


def test_local_error_second_order():
    m = beverton_holt_model(0.5)
    ref = Discretization.uniform(m.habitat, 4096)
    u = lambda x: 2 + np.sin(x)
    errs = {n: local_error(m, Discretization.uniform(m.habitat, n), ref, 0, u)
            for n in (64, 128, 256, 512)}
    for n in (64, 128, 256):
        assert 3.5 <= errs[n] / errs[2 * n] <= 4.5


def test_global_bound_cases():
    err = ErrorModel(C=lambda r: 1.0, ell=lambda t, r: 2.0)
    assert global_error_bound(err, 5.0, 3, 3, 16) == 0.0
    err1 = ErrorModel(C=lambda r: 3.0 * r, ell=lambda t, r: 9.0)
    assert global_error_bound(err1, 2.0, 0, 1, 10) == pytest.approx(6.0 / 100)
    assert global_error_bound(err, 1.0, -3, 0, 8) == 7 / 64
    with pytest.raises(InputError):
        global_error_bound(err, 1.0, 1, 0, 8)


@given(st.integers(1, 6), st.floats(0.1, 3), st.floats(0.1, 3), st.integers(1, 100))
def test_global_bound_matches_recursion(steps, c, ell, n):
    err = ErrorModel(C=lambda r: c, ell=lambda t, r: ell)
    e = 0.0
    for _ in range(steps):
        e = ell * e + c
    assert global_error_bound(err, 1.0, 0, steps, n) == pytest.approx(e / n**2, rel=1e-12)


@pytest.mark.parametrize("n", (16, 64))
def test_global_bound_dominates(n):
    m = beverton_holt_model(0.5)
    disc = Discretization.uniform(m.habitat, n)
    ref = Discretization.uniform(m.habitat, 2048)
    tau = -5
    ref_orbit = trajectory(m, ref, tau, 0, 3.0)
    orbit = trajectory(m, disc, tau, 0, 3.0)
    local = [local_error(m, disc, ref, tau + k, ref_orbit[k]) for k in range(5)]
    err = ErrorModel(C=lambda r: max(local) * n**2,
                     ell=lambda t, r: disc.p * lipschitz_bound(m, t, r, rule=disc.rule))
    for k in range(6):
        measured = sup_distance(orbit[k], ref_orbit[k])
        assert measured <= global_error_bound(err, 5.0, tau, tau + k, n) * (1 + 1e-9) + 1e-14


# --- convergence tables -----------------------------------------------------------

def test_table_small_levels():
    tab = convergence_table(beverton_holt_model(0.5), (16, 32))
    assert [r.n for r in tab.rows] == [16, 32]
    assert tab.rows[0].c == pytest.approx(2.1126, abs=0.05)
    assert np.all(tab.column("err") > 0)
    assert sorted(tab.witnesses) == [16, 32, 64, 128]
    assert "c(n)" in tab.format()


def test_table_interval_convention_differs():
    m = beverton_holt_model(0.5)
    pts = convergence_table(m, (16,), grid="points")
    ivs = convergence_table(m, (16,), grid="intervals")
    assert pts.rows[0].c != ivs.rows[0].c


def test_table_degenerate_exact_case():
    m = IdeModel(OMEGA, LaplaceKernel(const(2.0)), BevertonHolt(1.0, const(0.0)),
                 lambda x: 0.5 + 0.1 * x)
    with pytest.raises(DegenerateExperimentError):
        convergence_table(m, (16, 32), depth=3, seed=1.0)


@pytest.mark.parametrize("kwargs", [
    {"n_list": (16, 24)}, {"n_list": (32, 16)}, {"n_list": ()},
    {"n_list": (16, 1024), "n_ref": 2048}, {"depth": 0}, {"grid": "cells"}])
def test_table_validation(kwargs):
    args = {"n_list": (16,), **kwargs}
    with pytest.raises(InputError):
        convergence_table(beverton_holt_model(1.0), seed=1.0, **args)


def test_table_threads_identical():
    m = beverton_holt_model(1.0)
    a = convergence_table(m, (16, 32), depth=5, seed=4.0)
    b = convergence_table(m, (16, 32), depth=5, seed=4.0, threads=3)
    assert [r.c for r in a.rows] == [r.c for r in b.rows]


# --- forward limits ---------------------------------------------------------------------

def test_ricker_conditions():
    cond = ricker_conditions(ricker_model(), 0, 30)
    assert all(cond["checks"].values())
    assert cond["K0"] >= 1 and cond["k0"] == pytest.approx(1 - math.exp(-6), rel=1e-4)
    bad = ricker_conditions(ricker_model(gamma=0.3), 0, 30)
    assert not bad["checks"]["k0 sup gamma_t < e^2/(1+e^2) (1 - k0 gamma)/K0"]
    with pytest.raises(InputError):
        ricker_conditions(beverton_holt_model(1.0))


def test_forward_limit_precondition_names_inequality():
    with pytest.raises(PreconditionError, match="K0"):
        forward_limit_experiment(ricker_model(gamma=0.3), [16], horizon=5)


def test_forward_limit_from_fixed_point():
    m = ricker_model(autonomous=True)
    tol = 1e-12
    level = forward_limit_experiment(m, [32], horizon=3, tol=tol)[0]
    again = forward_limit_experiment(m, [level.u_star.disc], horizon=10,
                                     seeds=(level.u_star,), tol=tol)[0]
    assert max(d for _, d in again.distances) <= tol


@pytest.mark.parametrize("source", (0.1, 1.0))
def test_forward_limit_rate(source):
    m = ricker_model(source=source, autonomous=True)
    level = forward_limit_experiment(m, [64], horizon=30, seeds=(1.0, 3.0))[0]
    lo = float(level.u_star.values.min())
    slope = Ricker.slope_bound(min(lo, 1.0) * 0.9, 3.0)
    ratios = decay_ratios(level.distances, floor=1e-10)
    assert ratios and max(ratios) <= 0.2 * (1 - math.exp(-6)) * slope + 0.05


def test_forward_limit_nonautonomous_gap():
    tol = 1e-12
    nonaut = forward_limit_experiment(ricker_model(), [64], horizon=40, tol=tol)[0]
    frozen = forward_limit_experiment(ricker_model(autonomous=True), [64], horizon=40, tol=tol)[0]
    assert sup_distance(nonaut.u_star, frozen.u_star) == 0.0
    assert nonaut.distances[-1][1] <= 10 * tol


def test_decay_ratios_floor():
    d = list(enumerate([1.0, 0.1, 0.01, 1e-14, 1e-15], start=1))
    assert decay_ratios(d) == pytest.approx([0.1, 0.1])
