"""Time stepping of collocation discretizations ``u_{t+1} = Pi_n F_t(u_t)``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, InputError, NumericalError, PreconditionError
from .model import IdeModel, LaplaceKernel, lipschitz_bound
from .quadrature import QuadratureRule, trapezoid_rule
from .splines import (Grid, SplineFunction, SplineSpace, collocation_points,
                      end_second_derivatives_fd, project, sampling_points)


@dataclass(frozen=True, eq=False)
class Discretization:
    """Spline space ``X_n`` plus the quadrature rule used for ``F_t``.

    ``level`` is the label ``n`` the discretization is reported under.
    """

    space: SplineSpace
    rule: QuadratureRule
    level: int

    @classmethod
    def uniform(cls, habitat, n: int, degree: int = 1, level=None) -> "Discretization":
        """``n`` equal subintervals; trapezoidal rule on the grid nodes."""
        grid = Grid.uniform(habitat.a, habitat.b, n)
        return cls(SplineSpace(grid, degree), trapezoid_rule(grid), n if level is None else level)

    @classmethod
    def from_points(cls, habitat, points: int, degree: int = 1) -> "Discretization":
        """``points`` equispaced nodes (``points - 1`` subintervals), labelled ``points``."""
        if points < 2:
            raise InputError("need at least two grid points")
        return cls.uniform(habitat, points - 1, degree, level=points)

    @classmethod
    def reference(cls, habitat, n_ref: int = 4096) -> "Discretization":
        """Piecewise-linear stand-in for the exact operator (``level = 0``)."""
        return cls.uniform(habitat, n_ref, 1, level=0)

    @property
    def grid(self) -> Grid:
        return self.space.grid

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    @property
    def degree(self) -> int:
        return self.space.degree

    @property
    def p(self) -> float:
        return self.space.stability_constant


@dataclass(frozen=True, eq=False)
class StateFunction:
    """A spline state stamped with its time; ``values`` live on the quadrature nodes."""

    disc: Discretization
    spline: SplineFunction
    time: int

    def __post_init__(self):
        if self.spline.space is not self.disc.space:
            raise InputError("spline does not belong to the discretization's space")

    @property
    def values(self) -> np.ndarray:
        vals = self.__dict__.get("_values")
        if vals is None:
            vals = self.spline(self.disc.nodes)
            vals.setflags(write=False)
            object.__setattr__(self, "_values", vals)
        return vals

    def __call__(self, x):
        return self.spline(x)

    def norm(self, samples=None) -> float:
        return float(np.max(np.abs(self(_sample_points([self], samples)))))

    def restamp(self, time: int) -> "StateFunction":
        return StateFunction(self.disc, self.spline, time)

    @classmethod
    def constant(cls, disc: Discretization, c: float, time: int = 0) -> "StateFunction":
        # B-splines form a partition of unity
        return cls(disc, SplineFunction(disc.space, np.full(disc.space.dim, float(c))), time)

    @classmethod
    def from_callable(cls, disc: Discretization, f, time: int = 0, d2=None) -> "StateFunction":
        """Project ``f``; cubic end data from ``d2`` or finite differences."""
        space = disc.space
        vals = np.broadcast_to(np.asarray(f(collocation_points(space)), dtype=float),
                               collocation_points(space).shape)
        ends = None
        if space.degree == 3:
            a, b = space.grid.a, space.grid.b
            ends = (d2(a), d2(b)) if d2 is not None else end_second_derivatives_fd(f, a, b)
        return cls(disc, project(space, vals, ends), time)


def as_state(disc: Discretization, u, time: int) -> StateFunction:
    """Coerce a number, callable or state on another level to a state on ``disc``."""
    if isinstance(u, StateFunction):
        if u.disc is disc:
            return u.restamp(time)
        d2 = (lambda x: u.spline.derivative(x, 2)) if u.disc.degree >= 2 else (lambda x: 0.0 * x)
        return StateFunction.from_callable(disc, u, time, d2=d2)
    if callable(u):
        return StateFunction.from_callable(disc, u, time)
    return StateFunction.constant(disc, float(u), time)


@dataclass(frozen=True)
class FunctionSet:
    """Finite set of states sharing one time stamp."""

    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise InputError("a function set must be nonempty")
        if len({m.time for m in members}) != 1:
            raise InputError("members of a function set must share a time stamp")
        object.__setattr__(self, "members", members)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def _check_habitat(model: IdeModel, disc: Discretization):
    g = disc.grid
    h = model.habitat
    if not (np.isclose(g.a, h.a) and np.isclose(g.b, h.b)):
        raise InputError(f"discretization on [{g.a}, {g.b}] but habitat is [{h.a}, {h.b}]")


def apply_operator(model: IdeModel, disc: Discretization, t, u: StateFunction, x=None):
    """Quadrature approximation of ``F_t(u)`` at points ``x`` (default: collocation points).

    Spline overshoot below zero is clipped before the growth law is applied.
    """
    y = disc.nodes
    uy = u.values if u.disc is disc else u(y)
    uy = np.maximum(uy, 0.0)
    with np.errstate(all="raise"):
        try:
            phi = model.growth(t, y, uy)
        except FloatingPointError as exc:
            raise NumericalError(f"dynamics.step: growth evaluation failed at t={t}: {exc}")
    if x is None:
        x = collocation_points(disc.space)
    v = model.kernel.matrix(t, x, y) @ (disc.rule.weights * phi) + model.source(x)
    if not np.all(np.isfinite(v)):
        raise NumericalError(f"dynamics.step: non-finite values at t={t}")
    return v, phi


def _cubic_end_data(model, disc, t, u, v, phi):
    a, b = disc.grid.a, disc.grid.b
    if isinstance(model.kernel, LaplaceKernel):
        # (delta^2 - d^2/dx^2) k = delta^2 * Dirac, evaluated as one-sided limits at a, b
        d = model.kernel.delta(t)
        src = model.source(np.array([a, b]))
        src_d2 = end_second_derivatives_fd(model.source, a, b, h=1e-2 * disc.grid.h_min)
        return (d * d * (v[0] - src[0] - phi[0]) + src_d2[0],
                d * d * (v[-1] - src[1] - phi[-1]) + src_d2[1])
    h = 0.25 * disc.grid.h_min
    return end_second_derivatives_fd(
        lambda x: apply_operator(model, disc, t, u, np.atleast_1d(x))[0], a, b, h=h)


def step(model: IdeModel, disc: Discretization, t: int, u: StateFunction) -> StateFunction:
    """One step ``u -> Pi_n F_t(u)`` of the discretized IDE, stamped ``t + 1``."""
    _check_habitat(model, disc)
    model.check_time(t)
    model.check_time(t + 1)
    v, phi = apply_operator(model, disc, t, u)
    ends = None
    if disc.degree == 3:
        if not (disc.nodes[0] == disc.grid.a and disc.nodes[-1] == disc.grid.b):
            raise InputError("cubic end data need quadrature nodes at both endpoints")
        ends = _cubic_end_data(model, disc, t, u, v, phi)
    return StateFunction(disc, project(disc.space, v, ends), t + 1)


def trajectory(model: IdeModel, disc: Discretization, tau: int, T: int,
               u0) -> list[StateFunction]:
    """States ``phi(t; tau, u0)`` for ``t = tau, ..., T``."""
    if T < tau:
        raise InputError("need tau <= T")
    u = as_state(disc, u0, tau)
    if isinstance(u0, StateFunction) and u0.disc is disc and u0.time != tau:
        raise InputError(f"initial state stamped {u0.time}, expected {tau}")
    out = [u]
    for t in range(tau, T):
        u = step(model, disc, t, u)
        out.append(u)
    return out


def pullback_state(model: IdeModel, disc: Discretization, t: int, depth: int,
                   seed) -> StateFunction:
    """``phi(t; t - depth, seed)``; ``seed`` may be a number, callable or state."""
    if depth < 0:
        raise InputError("depth must be nonnegative")
    u = as_state(disc, seed, t - depth)
    for s in range(t - depth, t):
        u = step(model, disc, s, u)
    return u


def _sample_points(states, samples):
    if samples is not None and np.ndim(samples) > 0:
        return np.asarray(samples, dtype=float)
    grids = [s.disc.grid for s in states]
    if samples is not None:
        return np.linspace(grids[0].a, grids[0].b, int(samples))
    pts = np.unique(np.concatenate([g.nodes for g in grids]
                                   + [s.disc.nodes for s in states]))
    if any(s.disc.degree > 1 for s in states):
        pts = np.union1d(pts, sampling_points(max(grids, key=lambda g: g.n)))
    return pts


def sup_distance(u: StateFunction, v: StateFunction, samples=None) -> float:
    """``max |u(x) - v(x)|`` over sample points.

    ``samples`` may be a count (equispaced points), an array of points or
    ``None``: the union of both node sets, which is the exact sup-norm for
    piecewise-linear states, refined by a dense grid for higher degrees.
    """
    x = _sample_points([u, v], samples)
    return float(np.max(np.abs(u(x) - v(x))))


def hausdorff_semidist(A: Sequence[StateFunction], B: Sequence[StateFunction],
                       samples=None) -> float:
    """``max_{a in A} min_{b in B} ||a - b||``."""
    A, B = list(A), list(B)
    if not A or not B:
        raise InputError("Hausdorff semidistance needs nonempty sets")
    x = _sample_points(A + B, samples)
    va = np.array([a(x) for a in A])
    vb = np.array([b(x) for b in B])
    d = np.max(np.abs(va[:, None, :] - vb[None, :, :]), axis=2)
    return float(np.max(np.min(d, axis=1)))


def contraction_factor(model: IdeModel, disc: Discretization, t=0) -> float:
    """``p * ell_t`` for the discretized operator of an autonomous model."""
    return disc.p * lipschitz_bound(model, t, 1.0, rule=disc.rule)


def fixed_point_autonomous(model: IdeModel, disc: Discretization, seed, tol=1e-12,
                           max_iter=500, t=0, full_output=False):
    """Fixed point of ``Pi_n F`` for an autonomous (frozen) model by Picard iteration.

    Returns the first iterate ``u`` with ``||step(u) - u|| <= tol``. With
    ``full_output`` also returns a dict holding ``iterations``, the residual
    history and the contraction factor.
    """
    if not tol > 0:
        raise InputError("tol must be positive")
    q = contraction_factor(model, disc, t)
    if not q < 1:
        raise PreconditionError(f"operator is not contractive: p * ell = {q:.6g} >= 1")
    u = as_state(disc, seed, t)
    residuals = []
    for it in range(max_iter + 1):
        nxt = step(model, disc, t, u).restamp(t)
        res = sup_distance(nxt, u)
        residuals.append(res)
        if res <= tol:
            if full_output:
                return u, {"iterations": it, "residuals": residuals, "contraction": q}
            return u
        u = nxt
    raise ConvergenceError(
        f"no fixed point within {max_iter} iterations (residual {residuals[-1]:.3e})",
        residual=residuals[-1])
