"""Right-hand sides ``f_t(x, y, z) = k_t(x, y) g_t(y, z) (+ b(x))`` of scalar IDEs.

Time-dependent parameters are plain callables: ``dispersal(t)`` for the Laplace
kernel, ``gamma(t, y)`` for Beverton-Holt growth (vectorized in ``y``) and
``gamma(t)`` for Ricker growth. Integer-valued time ``t`` is passed as a float.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import InputError
from .quadrature import QuadratureRule, trapezoid_rule


def _const(value):
    return lambda *args: value


@dataclass(frozen=True)
class Habitat:
    """Compact interval ``[a, b]``."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.a < self.b:
            raise InputError(f"invalid habitat [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a

    def check(self, *points):
        tol = 1e-12 * self.length
        for p in points:
            p = np.asarray(p, dtype=float)
            if np.any(p < self.a - tol) or np.any(p > self.b + tol) or np.any(np.isnan(p)):
                raise InputError(f"points outside the habitat [{self.a}, {self.b}]")


# ---------------------------------------------------------------------------
# kernels

@dataclass(frozen=True)
class LaplaceKernel:
    """``k_t(x, y) = delta_t / 2 * exp(-delta_t |x - y|)``."""

    dispersal: Callable[[float], float]

    def delta(self, t) -> float:
        d = float(self.dispersal(float(t)))
        if not d > 0:
            raise InputError(f"dispersal rate must be positive, got {d} at t={t}")
        return d

    def pointwise(self, t, x, y):
        d = self.delta(t)
        return 0.5 * d * np.exp(-d * np.abs(np.subtract(x, y)))

    def matrix(self, t, x, y):
        return self.pointwise(t, np.asarray(x)[:, None], np.asarray(y)[None, :])


@dataclass(frozen=True)
class CustomKernel:
    """Arbitrary nonnegative kernel ``evaluate(t, x, y)`` broadcasting over x, y.

    ``k0`` is ``sup_x int k(x, y) dy``; estimated by quadrature when omitted.
    """

    evaluate: Callable
    k0: Optional[float] = None

    def pointwise(self, t, x, y):
        return np.asarray(self.evaluate(float(t), x, y), dtype=float)

    def matrix(self, t, x, y):
        x = np.asarray(x, dtype=float)[:, None]
        y = np.asarray(y, dtype=float)[None, :]
        return np.broadcast_to(np.asarray(self.evaluate(float(t), x, y), dtype=float),
                               (x.shape[0], y.shape[1]))


def kernel_eval(kernel, t, x, y, habitat: Habitat | None = None):
    """Kernel value ``k_t(x, y)`` for scalar or array ``x``, ``y`` (broadcast)."""
    if habitat is not None:
        habitat.check(x, y)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    vals = np.broadcast_to(kernel.pointwise(t, x, y), x.shape)
    if np.any(vals < 0):
        raise InputError("kernel values must be nonnegative")
    return float(vals) if vals.ndim == 0 else vals.copy()


# ---------------------------------------------------------------------------
# growth functions

@dataclass(frozen=True)
class BevertonHolt:
    """``g_t(y, z) = gamma_t(y) z / (1 + z**alpha)``."""

    alpha: float
    gamma: Callable = _const(1.0)

    def __post_init__(self):
        if not self.alpha > 0:
            raise InputError(f"alpha must be positive, got {self.alpha}")

    def rate(self, t, y):
        return np.broadcast_to(np.asarray(self.gamma(float(t), y), dtype=float), np.shape(y))

    def __call__(self, t, y, z):
        z = np.asarray(z, dtype=float)
        return self.rate(t, y) * z / (1.0 + z**self.alpha)

    @property
    def lipschitz(self) -> float:
        return 1.0

    def sup_shape(self) -> float:
        """``sup_{z >= 0} z / (1 + z**alpha)`` for ``alpha >= 1``."""
        a = self.alpha
        if a < 1:
            return math.inf
        if a == 1:
            return 1.0
        return (a - 1) ** (1 - 1 / a) / a


@dataclass(frozen=True)
class Ricker:
    """``g_t(y, z) = gamma_t z exp(-z)`` with spatially constant ``gamma_t``.

    ``limit`` is the value ``gamma`` of the asymptotically autonomous limit.
    """

    gamma: Callable[[float], float] = _const(1.0)
    limit: Optional[float] = None

    def rate(self, t, y=None):
        return float(self.gamma(float(t)))

    def __call__(self, t, y, z):
        z = np.asarray(z, dtype=float)
        return self.rate(t) * z * np.exp(-z)

    @property
    def lipschitz(self) -> float:
        """Global constant: the slope of ``z exp(-z)`` is 1 at ``z = 0``."""
        return 1.0

    @staticmethod
    def slope_bound(lower=0.0, upper=math.inf) -> float:
        """``sup |d/dz z exp(-z)|`` over ``[lower, upper]``.

        The slope ``(1 - z) exp(-z)`` falls from 1 to its minimum ``-exp(-2)``
        at ``z = 2`` and then tends to 0, so the bound drops to ``exp(-2)``
        once ``lower`` exceeds the root of ``(1 - z) exp(-z) = exp(-2)``.
        """
        if not 0 <= lower <= upper:
            raise InputError("need 0 <= lower <= upper")
        slope = lambda z: abs((1.0 - z) * math.exp(-z)) if math.isfinite(z) else 0.0
        out = max(slope(lower), slope(upper))
        if lower <= 2.0 <= upper:
            out = max(out, math.exp(-2.0))
        return out


def growth_eval(growth, t, y, z):
    """Growth term ``g_t(y, z)`` for ``z >= 0``."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise InputError("growth functions are defined for z >= 0")
    out = growth(t, y, z)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# models

@dataclass(frozen=True)
class IdeModel:
    """Hammerstein IDE ``u_{t+1}(x) = int k_t(x,y) g_t(y,u_t(y)) dy + b(x)``.

    ``time_domain`` is an inclusive ``(first, last)`` pair of integers where
    either end may be ``None`` for an unbounded direction.
    """

    habitat: Habitat
    kernel: object
    growth: object
    inhomogeneity: Optional[Callable] = None
    time_domain: tuple = (None, None)

    def __post_init__(self):
        if isinstance(self.growth, Ricker) and self.inhomogeneity is None:
            object.__setattr__(self, "inhomogeneity", _const(0.1))

    def check_time(self, t):
        lo, hi = self.time_domain
        if (lo is not None and t < lo) or (hi is not None and t > hi):
            raise InputError(f"time {t} outside {self.time_domain}")

    def source(self, x):
        """Inhomogeneity ``b`` at ``x`` (zero when absent)."""
        x = np.asarray(x, dtype=float)
        if self.inhomogeneity is None:
            return np.zeros(x.shape)
        return np.broadcast_to(np.asarray(self.inhomogeneity(x), dtype=float), x.shape)

    def frozen(self, t) -> "IdeModel":
        """Autonomous model with all parameters fixed at time ``t``."""
        t = float(t)
        kernel = self.kernel
        if isinstance(kernel, LaplaceKernel):
            kernel = LaplaceKernel(_const(kernel.delta(t)))
        elif isinstance(kernel, CustomKernel):
            ev = kernel.evaluate
            kernel = CustomKernel(lambda s, x, y: ev(t, x, y), kernel.k0)
        growth = self.growth
        if isinstance(growth, BevertonHolt):
            gam = growth.gamma
            growth = BevertonHolt(growth.alpha, lambda s, y: gam(t, y))
        elif isinstance(growth, Ricker):
            growth = Ricker(_const(growth.rate(t)), growth.limit)
        return replace(self, kernel=kernel, growth=growth)

    def autonomous_limit(self) -> "IdeModel":
        """Ricker model with ``gamma_t`` replaced by its limit ``gamma``."""
        if not isinstance(self.growth, Ricker) or self.growth.limit is None:
            raise InputError("autonomous limit needs a Ricker model with a known limit")
        growth = Ricker(_const(self.growth.limit), self.growth.limit)
        return replace(self, growth=growth).frozen(0.0)


def ricker_rates(gamma, k0, c=0.5):
    """Exponentially convergent rates ``gamma_t = gamma (1 + c (k0 gamma)**t)``."""
    q = k0 * gamma
    return lambda t: gamma * (1.0 + c * q**t)


@dataclass(frozen=True)
class GrowthBounds:
    """Linear growth coefficients ``a_t``, ``b_t`` and the Lipschitz bound ``ell(r)``."""

    a_t: float
    b_t: float
    ell: Callable[[float], float]
    zeta: Optional[float] = None


def _eval_points(habitat, rule, n_eval):
    n = len(rule.nodes) - 1
    if n_eval is None:
        n_eval = 4 * n
    x = np.linspace(habitat.a, habitat.b, n_eval + 1)
    mids = 0.5 * (rule.nodes[1:] + rule.nodes[:-1])
    return np.unique(np.concatenate([x, rule.nodes, mids]))


def weighted_mass(model: IdeModel, t, weight=None, rule: QuadratureRule | None = None,
                  n_eval=None, chunk=512) -> float:
    """``sup_x int k_t(x, y) w(y) dy`` by quadrature and a max over sample points.

    Without ``rule`` a 512-interval trapezoidal rule on the habitat is used;
    passing the rule of a discretization bounds exactly the discrete operator.
    """
    h = model.habitat
    if rule is None:
        rule = trapezoid_rule(np.linspace(h.a, h.b, 513))
    y = rule.nodes
    wy = rule.weights * (1.0 if weight is None else np.asarray(weight, dtype=float))
    x = _eval_points(h, rule, n_eval)
    best = -np.inf
    for i in range(0, len(x), chunk):
        best = max(best, float(np.max(model.kernel.matrix(t, x[i:i + chunk], y) @ wy)))
    return best


def kernel_mass(model: IdeModel, t=0.0, rule=None, n_eval=None) -> float:
    """``k0 = sup_x int k_t(x, y) dy``; uses a custom kernel's ``k0`` if given."""
    k0 = getattr(model.kernel, "k0", None)
    if k0 is not None:
        return float(k0)
    return weighted_mass(model, t, None, rule, n_eval)


def lipschitz_bound(model: IdeModel, t, r=1.0, rule=None, n_eval=None, lower=0.0) -> float:
    """Lipschitz constant ``ell_t(r)`` of the integral operator on the ball of radius ``r``.

    Beverton-Holt shapes have slope at most 1 everywhere, so the value does not
    depend on ``r``. For Ricker growth the slope bound is taken over state
    values in ``[lower, r]``; with the default ``lower = 0`` it is 1, and the
    constant ``gamma_t k0 / e**2`` is only reached for states bounded below by
    about 0.722.
    """
    if not r > 0:
        raise InputError("radius must be positive")
    g = model.growth
    if isinstance(g, BevertonHolt):
        y = (rule or trapezoid_rule(np.linspace(model.habitat.a, model.habitat.b, 513))).nodes
        return weighted_mass(model, t, g.rate(t, y), rule, n_eval)
    if isinstance(g, Ricker):
        return g.rate(t) * kernel_mass(model, t, rule, n_eval) * g.slope_bound(lower, max(r, lower))
    raise InputError(f"unsupported growth {type(g).__name__}")


def tangent_coefficients(alpha, zeta):
    """Slope and intercept of the tangent to ``z/(1+z**alpha)`` at ``zeta``."""
    za = zeta**alpha
    slope = (1 + (1 - alpha) * za) / (1 + za) ** 2
    intercept = alpha * zeta ** (1 + alpha) / (1 + za) ** 2
    return slope, intercept


def default_tangent_point(alpha, ell, p=1.0, target=0.5):
    """Smallest ``zeta = 2**(k/4)`` whose tangent slope satisfies ``p * slope * ell <= target``.

    ``target < 1`` keeps the absorbing-radius series geometrically fast.
    """
    if not 0 < target < 1:
        raise InputError("target contraction must lie in (0, 1)")
    for k in range(-80, 400):
        zeta = 2.0 ** (k / 4)
        if tangent_coefficients(alpha, zeta)[0] * ell * p <= target:
            return zeta
    raise InputError("no admissible tangent point found")


def linear_growth_bounds(model: IdeModel, t, zeta=None, p=1.0, rule=None,
                         n_eval=None, target=0.5) -> GrowthBounds:
    """Coefficients ``(a_t, b_t)`` with ``||F_t(u)|| <= b_t + a_t ||u||``.

    For Beverton-Holt growth with ``alpha < 1`` the bound comes from the tangent
    at ``zeta`` (default from :func:`default_tangent_point`); for ``alpha >= 1``
    from the global maximum of the growth shape. Ricker models use
    ``z exp(-z) <= 1/e`` plus the sup-norm of the inhomogeneity.
    """
    g = model.growth
    ell = lipschitz_bound(model, t, 1.0, rule, n_eval)
    if isinstance(g, BevertonHolt):
        if g.alpha < 1:
            if zeta is None:
                zeta = default_tangent_point(g.alpha, ell, p, target)
            elif not zeta > 0:
                raise InputError("tangent point zeta must be positive")
            slope, intercept = tangent_coefficients(g.alpha, zeta)
            return GrowthBounds(slope * ell, intercept * ell, _const(ell), zeta)
        return GrowthBounds(0.0, g.sup_shape() * ell, _const(ell))
    if isinstance(g, Ricker):
        h = model.habitat
        k0 = kernel_mass(model, t, rule, n_eval)
        bsup = float(np.max(np.abs(model.source(np.linspace(h.a, h.b, 4097)))))
        return GrowthBounds(0.0, g.rate(t) * k0 / math.e + bsup, _const(ell))
    raise InputError(f"unsupported growth {type(g).__name__}")
