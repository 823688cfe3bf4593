"""Absorbing radii, discretization errors and the convergence experiments."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .dynamics import (Discretization, StateFunction, as_state, fixed_point_autonomous,
                       hausdorff_semidist, pullback_state, step, sup_distance,
                       trajectory)
from .errors import (ConvergenceError, DegenerateExperimentError, InputError,
                     PreconditionError)
from .model import GrowthBounds, IdeModel, Ricker, kernel_mass, linear_growth_bounds

# ---------------------------------------------------------------------------
# absorbing sets


@dataclass(frozen=True)
class AbsorbingRadius:
    """Radius ``R_tau`` of an absorbing ball; the set itself has radius ``rho * R``."""

    tau: int
    R: float
    direction: str
    truncation_depth: int
    rho: float = 1.1

    @property
    def radius(self) -> float:
        return self.rho * self.R


def _coefficient_source(coeffs, p):
    if isinstance(coeffs, IdeModel):
        model = coeffs
        lo, hi = model.time_domain

        @lru_cache(maxsize=None)
        def get(t):
            if (lo is not None and t < lo) or (hi is not None and t > hi):
                return None
            gb = linear_growth_bounds(model, t, p=p)
            return gb.a_t, gb.b_t
        return get

    def get(t):
        out = coeffs(t)
        if isinstance(out, GrowthBounds):
            return out.a_t, out.b_t
        return out
    return get


def absorbing_radius(coeffs, p=1.0, direction="pullback", tau=0, tol=1e-10, rho=1.1,
                     max_terms=100_000, window=64) -> AbsorbingRadius:
    """Radius ``R_tau`` of the pullback or forward absorbing ball.

    ``coeffs`` is an :class:`IdeModel` (coefficients from
    :func:`linear_growth_bounds`) or a callable ``t -> (a_t, b_t)``. The series
    is truncated once its geometric tail bound, with ratio the largest
    ``p * a_t`` over the last ``window`` terms, drops below ``tol``.

    For ``direction="forward"`` the recursion ``S_{t+1} = p a_t S_t + b_t``,
    ``S_tau = 0`` is run until the initial condition is forgotten to ``tol``
    and ``p * max S_t`` over a further window of the same length is returned;
    for convergent coefficient sequences this is the limit itself.
    """
    if not tol > 0:
        raise InputError("tol must be positive")
    if not rho > 1:
        raise InputError("rho must exceed 1")
    if direction not in ("pullback", "forward"):
        raise InputError(f"unknown direction {direction!r}")
    get = _coefficient_source(coeffs, p)

    ratios = []
    q = bmax = 0.0
    prod, total = 1.0, 0.0
    hist = []
    k = 0
    while True:
        k += 1
        if k > max_terms:
            raise ConvergenceError(
                f"absorbing radius not converged after {max_terms} terms",
                residual=p * bmax * prod / max(1e-300, 1 - min(q, 1 - 1e-16)))
        t = tau - k if direction == "pullback" else tau + k - 1
        ab = get(t)
        if ab is None:  # end of the time domain: the sum is finite
            break
        a_t, b_t = ab
        if a_t < 0 or b_t < 0 or not (math.isfinite(a_t) and math.isfinite(b_t)):
            raise InputError(f"invalid growth coefficients ({a_t}, {b_t}) at t={t}")
        ratios.append(p * a_t)
        q = max(ratios[-window:])
        bmax = max(bmax, b_t)
        if direction == "pullback":
            total += b_t * prod
            prod *= p * a_t
        else:
            total = p * a_t * total + b_t
            hist.append(total)
            prod *= p * a_t
        if k >= window and min(ratios[:window]) >= 1:
            raise PreconditionError(
                f"series not summable: p * a_t >= 1 for all {window} times from tau={tau}")
        if q < 1 and p * bmax * prod / (1 - q) < tol:
            break
    depth = k
    if direction == "forward" and hist:
        for _ in range(depth):
            ab = get(tau + k)
            if ab is None:
                break
            total = p * ab[0] * total + ab[1]
            hist.append(total)
            k += 1
        total = max(hist[depth - 1:])
    return AbsorbingRadius(tau, p * total, direction, depth, rho)


# ---------------------------------------------------------------------------
# discretization errors


def local_error(model: IdeModel, disc_n: Discretization, disc_ref: Discretization, t: int,
                u, samples=None) -> float:
    """``||Pi_n F_t(u) - F_t^ref(u)||`` with the reference level standing in for ``F_t``."""
    if disc_n is disc_ref:
        return 0.0
    if len(disc_ref.nodes) < len(disc_n.nodes):
        raise InputError("reference discretization must be finer")
    if not isinstance(u, StateFunction):
        u = as_state(disc_ref, u, t)
    return sup_distance(step(model, disc_n, t, u), step(model, disc_ref, t, u), samples)


@dataclass
class ErrorModel:
    """Ingredients of the global error bound.

    ``C(r)`` bounds scaled local errors on balls of radius ``r``, ``ell(t, r)``
    the Lipschitz constants and ``gamma`` the convergence function.
    """

    C: Callable[[float], float]
    ell: Callable[[int, float], float]
    gamma: Callable[[float], float] = lambda h: h * h


def global_error_bound(err: ErrorModel, radii, tau: int, t: int, n: int) -> float:
    """``Gamma(1/n) sum_{l=tau}^{t-1} C(B_l) prod_{m=l+1}^{t-1} ell_m(B_m)``."""
    if t < tau:
        raise InputError("need tau <= t")
    radius = radii if callable(radii) else (lambda s: radii)
    total = 0.0
    for l1 in range(tau, t):
        term = err.C(radius(l1))
        for l2 in range(l1 + 1, t):
            term *= err.ell(l2, radius(l2))
        total += term
    return err.gamma(1.0 / n) * total


# ---------------------------------------------------------------------------
# convergence rates of pullback witnesses


@dataclass(frozen=True)
class RateRow:
    n: int
    err: float
    c: float


@dataclass
class RateTable:
    """Rows ``(n, ||xi^n - xi^2n||, c(n))`` plus the pullback witnesses per level."""

    rows: list
    witnesses: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    def format(self, label="c(n)") -> str:
        lines = [f"{'n':>6} || {label}", "-" * 30]
        lines += [f"{r.n:>6} || {r.c:.15f}" for r in self.rows]
        return "\n".join(lines)


def _check_levels(n_list):
    n_list = [int(n) for n in n_list]
    if not n_list:
        raise InputError("n_list is empty")
    for n in n_list:
        if n < 2 or n & (n - 1):
            raise InputError(f"levels must be powers of two, got {n}")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise InputError("levels must be strictly increasing")
    return n_list


def default_seed(model: IdeModel, t: int, depth: int, rho=1.1) -> float:
    """Constant upper solution ``rho * R`` from the pullback absorbing radius at ``t - depth``."""
    return absorbing_radius(model, 1.0, "pullback", t - depth, rho=rho).radius


def convergence_table(model: IdeModel, n_list=(16, 32, 64, 128, 256, 512, 1024), depth=15,
                      t=0, seed=None, grid="points", n_ref=None, threads=1,
                      floor=1e-12) -> RateTable:
    """Empirical convergence rates ``c(n) = log2(||xi^n - xi^2n|| / ||xi^2n - xi^4n||)``.

    ``xi^n`` is the piecewise-linear pullback state ``phi^n(t; t - depth, seed)``.
    With ``grid="points"`` level ``n`` has ``n`` equispaced nodes, with
    ``grid="intervals"`` it has ``n`` subintervals. Distances are exact sup-norms
    of the piecewise-linear differences. A difference at or below
    ``floor * max(1, ||xi||)`` is rounding noise and makes ``c(n)`` degenerate.
    """
    n_list = _check_levels(n_list)
    if depth < 1:
        raise InputError("depth must be >= 1")
    finest = 4 * n_list[-1]
    if n_ref is None:
        n_ref = finest
    if finest > n_ref:
        raise InputError(f"4 * max(n_list) = {finest} exceeds n_ref = {n_ref}")
    if grid not in ("points", "intervals"):
        raise InputError(f"unknown grid convention {grid!r}")
    if seed is None:
        seed = default_seed(model, t, depth)
    levels = sorted({m * n for n in n_list for m in (1, 2, 4)})

    def make(n):
        if grid == "points":
            return Discretization.from_points(model.habitat, n)
        return Discretization.uniform(model.habitat, n)

    def witness(n):
        return pullback_state(model, make(n), t, depth, seed)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            states = dict(zip(levels, pool.map(witness, levels)))
    else:
        states = {n: witness(n) for n in levels}

    diffs = {n: sup_distance(states[n], states[2 * n]) for n in levels if 2 * n in states}
    noise = floor * max(1.0, max(s.norm() for s in states.values()))
    rows = []
    for n in n_list:
        num, den = diffs[n], diffs[2 * n]
        if not (num > noise and den > noise and math.isfinite(num) and math.isfinite(den)):
            raise DegenerateExperimentError(
                f"c({n}) undefined: differences {num:.3e}, {den:.3e}")
        rows.append(RateRow(n, num, math.log2(num / den)))
    meta = {"depth": depth, "t": t, "seed": seed, "grid": grid, "n_ref": n_ref,
            "levels": levels, "norm": "exact sup of piecewise-linear differences"}
    return RateTable(rows, states, meta)


# ---------------------------------------------------------------------------
# forward limit sets of asymptotically autonomous Ricker equations


def ricker_conditions(model: IdeModel, tau=0, horizon=50):
    """Evaluate the asymptotic-autonomy hypotheses on ``[tau, tau + horizon]``.

    Returns a dict with the constants ``k0``, ``gamma``, ``K0``, ``K1`` and a
    boolean per inequality under ``checks``.
    """
    g = model.growth
    if not isinstance(g, Ricker) or g.limit is None:
        raise InputError("needs a Ricker model with a known limit rate")
    gamma = float(g.limit)
    k0 = kernel_mass(model, tau)
    q = k0 * gamma
    ts = np.arange(tau, tau + horizon + 1)
    rates = np.array([g.rate(s) for s in ts])
    logr = np.concatenate([[0.0], np.cumsum(np.log(rates / gamma))])
    # sup over s <= t of prod_{l=s}^{t-1} gamma_l / gamma
    K0 = float(np.exp(max(logr[j] - np.min(logr[:j + 1]) for j in range(len(logr)))))
    with np.errstate(over="ignore", divide="ignore"):
        K1 = float(max(1.0, np.max(np.abs(rates - gamma) / q**ts.astype(float))))
    checks = {
        "gamma*k0 < 1": q < 1,
        "|gamma_t - gamma| <= K1 (k0 gamma)^t": math.isfinite(K1) and K1 < 1e6,
        "k0 sup gamma_t < e^2/(1+e^2) (1 - k0 gamma)/K0":
            k0 * rates.max() < math.e**2 / (1 + math.e**2) * (1 - q) / K0,
    }
    return {"k0": k0, "gamma": gamma, "K0": K0, "K1": K1, "checks": checks}


@dataclass
class ForwardLimitLevel:
    level: int
    u_star: StateFunction
    distances: list
    fixed_point_info: dict


def forward_limit_experiment(model: IdeModel, discs, tau=0, horizon=30, seeds=(1.0,),
                             tol=1e-12, check=True) -> list[ForwardLimitLevel]:
    """Distances of forward orbits to the fixed point ``u*`` of the limit equation.

    For every discretization the fixed point of the autonomous limit is computed
    and ``dist(phi(tau + s; tau, seeds), {u*})`` recorded for
    ``s = 1, ..., horizon``.
    """
    if check:
        cond = ricker_conditions(model, tau, horizon)
        failed = [name for name, ok in cond["checks"].items() if not ok]
        if failed:
            raise PreconditionError("failed hypotheses: " + "; ".join(failed))
    limit = model.autonomous_limit()
    out = []
    for disc in discs:
        if isinstance(disc, int):
            disc = Discretization.uniform(model.habitat, disc)
        u_star, info = fixed_point_autonomous(limit, disc, model.source, tol=tol,
                                              t=tau, full_output=True)
        runs = [trajectory(model, disc, tau, tau + horizon, s) for s in seeds]
        dists = []
        for s in range(1, horizon + 1):
            members = [run[s] for run in runs]
            dists.append((s, hausdorff_semidist(members, [u_star])))
        out.append(ForwardLimitLevel(disc.level, u_star, dists, info))
    return out


def decay_ratios(distances, floor=1e-13):
    """Successive ratios ``d_{s+1} / d_s`` while both exceed ``floor``."""
    d = [v for _, v in distances]
    return [b / a for a, b in zip(d, d[1:]) if a > floor and b > floor]
