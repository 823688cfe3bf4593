"""B-spline ansatz spaces of degree 1 to 3 and their collocation projections.

A :class:`SplineSpace` over a grid ``a = x_0 < ... < x_n = b`` is spanned by the
B-splines ``beta_j`` of degree ``l`` for ``j = -l, ..., n-1``, where ``beta_j`` is
supported on ``[x_j, x_{j+l+1}]`` of the extended knot sequence. Basis index
``j`` is stored at array position ``j + l``.

Collocation conditions per degree:

* ``l = 1``: interpolation at the nodes (coefficients equal nodal values).
* ``l = 2``: interpolation at ``a``, the ``n`` interval midpoints and ``b``.
* ``l = 3``: interpolation at the nodes plus second derivatives at ``a``, ``b``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import factorial

import numpy as np
from scipy.linalg import lapack
from scipy.sparse.linalg import LinearOperator, onenormest

from .errors import InputError, NumericalError

#: collocation matrices with an estimated 1-norm condition above this are rejected
MAX_CONDITION = 1e12


def _as_points(x):
    x = np.asarray(x, dtype=float)
    return x, x.ndim == 0


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing nodes ``a = x_0 < ... < x_n = b``."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2:
            raise InputError("a grid needs at least two nodes")
        if not np.all(np.isfinite(nodes)):
            raise InputError("grid nodes must be finite")
        if np.any(np.diff(nodes) <= 0):
            raise InputError("grid nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, a: float, b: float, n: int) -> "Grid":
        """Grid with ``n`` equal subintervals, ``x_j = a + j (b - a) / n``."""
        if n < 1:
            raise InputError("need at least one subinterval")
        if not a < b:
            raise InputError("need a < b")
        j = np.arange(n + 1)
        nodes = a + j * ((b - a) / n)
        nodes[-1] = b
        return cls(nodes)

    @property
    def n(self) -> int:
        """Number of subintervals."""
        return len(self.nodes) - 1

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    @property
    def h_max(self) -> float:
        return float(np.max(np.diff(self.nodes)))

    @property
    def h_min(self) -> float:
        return float(np.min(np.diff(self.nodes)))

    @property
    def uniform_spacing(self) -> bool:
        h = np.diff(self.nodes)
        return bool(np.allclose(h, h[0], rtol=1e-10, atol=0.0))

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    def locate(self, x) -> np.ndarray:
        """Index ``k`` of the subinterval ``[x_k, x_{k+1}]`` holding each ``x``.

        The right endpoint ``b`` is assigned to the last subinterval.
        """
        x = np.asarray(x, dtype=float)
        tol = 1e-12 * (self.b - self.a)
        if np.any(x < self.a - tol) or np.any(x > self.b + tol) or np.any(np.isnan(x)):
            raise InputError(f"points outside the habitat [{self.a}, {self.b}]")
        k = np.searchsorted(self.nodes, x, side="right") - 1
        return np.clip(k, 0, self.n - 1)


def stability_constant(grid: Grid, degree: int) -> float:
    """Uniform bound ``p`` on the norm of the collocation projection."""
    if degree == 1:
        return 1.0
    if degree == 2:
        return 2.0
    if degree == 3:
        return 1.0 + 1.5 * grid.h_max / grid.h_min
    raise InputError(f"unsupported spline degree {degree}")


@dataclass(frozen=True)
class ProjectionFamily:
    """Degree of a family of projections and its stability constant ``p``."""

    degree: int
    p: float

    @classmethod
    def for_grid(cls, grid: Grid, degree: int) -> "ProjectionFamily":
        return cls(degree, stability_constant(grid, degree))


def _extend_knots(grid: Grid, degree: int) -> np.ndarray:
    x = grid.nodes
    n, a, b = grid.n, grid.a, grid.b
    if n >= degree:
        # mirrored spacing; coincides with uniform continuation on uniform grids
        left = 2 * a - x[np.arange(degree, 0, -1)]
        right = 2 * b - x[n - 1 - np.arange(degree)]
    else:
        h = grid.h_max
        left = a - h * np.arange(degree, 0, -1)
        right = b + h * np.arange(1, degree + 1)
    return np.concatenate([left, x, right])


def _basis_derivatives(knots, degree, span, x, nder):
    """Nonzero B-splines and their derivatives at ``x`` (vectorized).

    ``span`` holds knot indices with ``knots[span] <= x < knots[span + 1]``.
    Returns an array of shape ``(len(x), nder + 1, degree + 1)``; entry
    ``[:, k, r]`` is the ``k``-th derivative of basis ``span - degree + r``.
    Algorithm A2.3 of Piegl & Tiller, *The NURBS Book*.
    """
    m, p = len(x), degree
    ndu = np.zeros((m, p + 1, p + 1))
    ndu[:, 0, 0] = 1.0
    left = np.zeros((m, p + 1))
    right = np.zeros((m, p + 1))
    for j in range(1, p + 1):
        left[:, j] = x - knots[span + 1 - j]
        right[:, j] = knots[span + j] - x
        saved = np.zeros(m)
        for r in range(j):
            ndu[:, j, r] = right[:, r + 1] + left[:, j - r]
            temp = ndu[:, r, j - 1] / ndu[:, j, r]
            ndu[:, r, j] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        ndu[:, j, j] = saved

    ders = np.zeros((m, nder + 1, p + 1))
    ders[:, 0, :] = ndu[:, :, p]
    for r in range(p + 1):
        a = np.zeros((m, 2, p + 1))
        a[:, 0, 0] = 1.0
        s1, s2 = 0, 1
        for k in range(1, min(nder, p) + 1):
            d = np.zeros(m)
            rk, pk = r - k, p - k
            if r >= k:
                a[:, s2, 0] = a[:, s1, 0] / ndu[:, pk + 1, rk]
                d = a[:, s2, 0] * ndu[:, rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[:, s2, j] = (a[:, s1, j] - a[:, s1, j - 1]) / ndu[:, pk + 1, rk + j]
                d = d + a[:, s2, j] * ndu[:, rk + j, pk]
            if r <= pk:
                a[:, s2, k] = -a[:, s1, k - 1] / ndu[:, pk + 1, r]
                d = d + a[:, s2, k] * ndu[:, r, pk]
            ders[:, k, r] = d
            s1, s2 = s2, s1
    for k in range(1, min(nder, p) + 1):
        ders[:, k, :] *= factorial(p) / factorial(p - k)
    return ders


@dataclass(frozen=True, eq=False)
class SplineSpace:
    """Span of the degree-``l`` B-splines ``beta_{-l}, ..., beta_{n-1}`` on a grid."""

    grid: Grid
    degree: int

    def __post_init__(self):
        if self.degree not in (1, 2, 3):
            raise InputError(f"spline degree must be 1, 2 or 3, got {self.degree}")

    @cached_property
    def extended_knots(self) -> np.ndarray:
        return _extend_knots(self.grid, self.degree)

    @property
    def dim(self) -> int:
        return self.grid.n + self.degree

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def stability_constant(self) -> float:
        return stability_constant(self.grid, self.degree)

    def local_basis(self, x, nder=0):
        """Nonzero basis values (and derivatives) at ``x``.

        Returns ``(first, ders)`` where ``first[i]`` is the array position of
        the first of the ``degree + 1`` nonzero basis functions at ``x[i]`` and
        ``ders`` has shape ``(len(x), nder + 1, degree + 1)``.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = self.grid.locate(x)
        x = np.clip(x, self.grid.a, self.grid.b)
        ders = _basis_derivatives(self.extended_knots, self.degree, k + self.degree, x, nder)
        return k, ders

    def collocation_points(self) -> np.ndarray:
        return collocation_points(self)

    @cached_property
    def _factorization(self):
        return _factor_collocation(self)

    @property
    def condition_number(self) -> float:
        """Estimated 1-norm condition number of the collocation matrix."""
        return self._factorization[-1]


def bspline_eval(space: SplineSpace, j: int, x):
    """Value of the basis function ``beta_j`` (``-l <= j <= n-1``) at ``x``."""
    l, n = space.degree, space.n
    if not -l <= j <= n - 1:
        raise InputError(f"basis index {j} outside [{-l}, {n - 1}]")
    x, scalar = _as_points(x)
    first, ders = space.local_basis(x)
    r = (j + l) - first
    inside = (r >= 0) & (r <= l)
    vals = np.where(inside, ders[:, 0, :][np.arange(len(first)), np.clip(r, 0, l)], 0.0)
    return float(vals[0]) if scalar else vals.reshape(x.shape)


def collocation_points(space: SplineSpace) -> np.ndarray:
    """Points at which the projection interpolates."""
    g = space.grid
    if space.degree == 2:
        return np.concatenate([[g.a], g.midpoints, [g.b]])
    return g.nodes.copy()


def _collocation_rows(space: SplineSpace):
    """Dense row blocks of the collocation matrix as (first column, values)."""
    pts = collocation_points(space)
    first, ders = space.local_basis(pts, nder=2 if space.degree == 3 else 0)
    rows = ders[:, 0, :]
    if space.degree != 3:
        return first, rows
    # Hermite end conditions bracket the interpolation rows to keep the band narrow
    first = np.concatenate([first[:1], first, first[-1:]])
    rows = np.concatenate([ders[:1, 2, :], rows, ders[-1:, 2, :]])
    return first, rows


def _factor_collocation(space: SplineSpace):
    l, dim = space.degree, space.dim
    if l == 1:
        return None, None, 1.0
    first, rows = _collocation_rows(space)
    kl = ku = l
    ab = np.zeros((2 * kl + ku + 1, dim))
    for i in range(dim):
        for r in range(l + 1):
            col = first[i] + r
            ab[kl + ku + i - col, col] = rows[i, r]
    col_sums = np.zeros(dim)
    np.add.at(col_sums, (first[:, None] + np.arange(l + 1)).ravel(), np.abs(rows).ravel())
    anorm = col_sums.max()
    lu, piv, info = lapack.dgbtrf(ab, kl, ku)
    if info > 0:
        raise NumericalError(
            f"singular collocation matrix (degree {l}, n={space.n}): zero pivot at {info}")

    def solve(b, trans=0):
        x, info = lapack.dgbtrs(lu, kl, ku, np.asarray(b, dtype=float).reshape(dim, -1),
                                piv, trans=trans)
        return x

    inv = LinearOperator((dim, dim), matvec=lambda v: solve(v).ravel(),
                         rmatvec=lambda v: solve(v, trans=1).ravel(), dtype=float)
    cond = anorm * onenormest(inv) if dim > 1 else 1.0
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NumericalError(
            f"ill-conditioned collocation matrix (degree {l}, n={space.n}): "
            f"cond_1 ~ {cond:.3e}")
    return lu, piv, cond


@dataclass(frozen=True, eq=False)
class SplineFunction:
    """Element ``sum_j c_j beta_j`` of a :class:`SplineSpace`."""

    space: SplineSpace
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != (self.space.dim,):
            raise InputError(f"expected {self.space.dim} coefficients, got {c.shape}")
        object.__setattr__(self, "coefficients", c)

    def __call__(self, x):
        return spline_eval(self, x)

    def derivative(self, x, order=1):
        """``order``-th derivative at ``x``; zero beyond the spline degree."""
        x, scalar = _as_points(x)
        l = self.space.degree
        if order > l:
            out = np.zeros(x.shape)
            return float(out) if scalar else out
        first, ders = self.space.local_basis(x, nder=order)
        idx = first[:, None] + np.arange(l + 1)
        vals = np.sum(ders[:, order, :] * self.coefficients[idx], axis=1)
        return float(vals[0]) if scalar else vals.reshape(x.shape)


def spline_eval(f: SplineFunction, x):
    """Evaluate ``f`` at points of the habitat using the local support."""
    return f.derivative(x, order=0)


def project(space: SplineSpace, values, end_second_derivatives=None) -> SplineFunction:
    """Spline interpolating ``values`` at :func:`collocation_points`.

    For cubic splines ``end_second_derivatives = (u''(a), u''(b))`` is required;
    it is ignored for the other degrees.
    """
    values = np.asarray(values, dtype=float)
    npts = space.n + 2 if space.degree == 2 else space.n + 1
    if values.shape[-1] != npts:
        raise InputError(f"expected {npts} collocation values, got {values.shape[-1]}")
    if space.degree == 1:
        return SplineFunction(space, values.copy())
    rhs = values
    if space.degree == 3:
        if end_second_derivatives is None:
            raise InputError("cubic projection needs (u''(a), u''(b))")
        d2a, d2b = end_second_derivatives
        rhs = np.concatenate([[d2a], values, [d2b]])
    lu, piv, _ = space._factorization
    coef, info = lapack.dgbtrs(lu, space.degree, space.degree, rhs.reshape(-1, 1), piv)
    if info != 0:
        raise NumericalError(f"banded solve failed with info={info}")
    return SplineFunction(space, coef.ravel())


def project_function(space: SplineSpace, u, d2=None) -> SplineFunction:
    """Project a callable ``u``; ``d2`` supplies ``u''`` for cubic splines.

    Without ``d2`` the cubic end data are taken from one-sided finite
    differences of ``u``.
    """
    vals = u(collocation_points(space))
    ends = None
    if space.degree == 3:
        a, b = space.grid.a, space.grid.b
        ends = (d2(a), d2(b)) if d2 is not None else end_second_derivatives_fd(u, a, b)
    return project(space, vals, ends)


def end_second_derivatives_fd(u, a, b, h=None):
    """One-sided second-order difference approximations of ``u''(a)``, ``u''(b)``."""
    if h is None:
        h = 1e-3 * (b - a)
    k = np.arange(4)
    stencil = np.array([2.0, -5.0, 4.0, -1.0])
    left = stencil @ np.asarray(u(a + k * h), dtype=float) / h**2
    right = stencil @ np.asarray(u(b - k * h), dtype=float) / h**2
    return float(left), float(right)


def sampling_points(grid: Grid, count=None) -> np.ndarray:
    """Equispaced sup-norm sampling grid of ``max(1024, 4 n)`` points by default."""
    if count is None:
        count = max(1024, 4 * grid.n)
    return np.linspace(grid.a, grid.b, count)


def lebesgue_estimate(space: SplineSpace, trials: int = 200, sample_points=None,
                      rng=None) -> float:
    """Empirical lower bound for the norm of the collocation projection.

    Each trial draws a piecewise-linear test function with values in ``[-1, 1]``
    on a random mesh finer than the grid, projects it and records
    ``||pi u|| / ||u||`` on a sampling grid that contains all breakpoints.
    Cubic end data are zero, matching the linear end pieces of the test function.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    rng = np.random.default_rng(rng)
    g = space.grid
    base = sampling_points(g, sample_points)
    pts = collocation_points(space)
    best = 0.0
    for _ in range(trials):
        m = int(rng.integers(g.n + 1, 4 * g.n + 8))
        mesh = np.unique(np.concatenate([[g.a, g.b], rng.uniform(g.a, g.b, m)]))
        mesh_vals = rng.uniform(-1.0, 1.0, len(mesh))
        # flatten the end pieces so the Hermite data u''=0 are exact
        mesh = np.concatenate([[g.a], [g.a + 1e-3 * g.h_min], mesh[1:-1],
                               [g.b - 1e-3 * g.h_min], [g.b]])
        mesh_vals = np.concatenate([mesh_vals[:1], mesh_vals[:1], mesh_vals[1:-1],
                                    mesh_vals[-1:], mesh_vals[-1:]])
        order = np.argsort(mesh, kind="stable")
        mesh, mesh_vals = mesh[order], mesh_vals[order]
        u = lambda x: np.interp(x, mesh, mesh_vals)
        pu = project(space, u(pts), (0.0, 0.0))
        xs = np.union1d(np.union1d(base, mesh), g.nodes)
        unorm = np.max(np.abs(u(xs)))
        if unorm == 0.0:
            continue
        best = max(best, float(np.max(np.abs(pu(xs)))) / unorm)
    return best
