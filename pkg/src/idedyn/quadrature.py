"""Composite trapezoidal quadrature on a node grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Quadrature nodes and nonnegative weights on ``[nodes[0], nodes[-1]]``."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise InputError("nodes and weights must be 1-d arrays of equal length")
        if np.any(np.diff(nodes) <= 0):
            raise InputError("quadrature nodes must be strictly increasing")
        if np.any(weights < 0):
            raise InputError("quadrature weights must be nonnegative")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.nodes)


def trapezoid_rule(grid) -> QuadratureRule:
    """Composite trapezoidal rule on the nodes of ``grid``.

    ``grid`` is either a :class:`~idedyn.splines.Grid` or an array of nodes.
    The weights are ``(x1-x0)/2, (x_{j+1}-x_{j-1})/2, ..., (xn-x_{n-1})/2``.
    """
    nodes = np.asarray(getattr(grid, "nodes", grid), dtype=float)
    if nodes.ndim != 1 or len(nodes) < 2:
        raise InputError("the trapezoidal rule needs at least 2 nodes")
    h = np.diff(nodes)
    weights = np.zeros_like(nodes)
    weights[:-1] += 0.5 * h
    weights[1:] += 0.5 * h
    return QuadratureRule(nodes, weights)


def integrate(values, rule: QuadratureRule) -> float:
    """Weighted sum ``sum_j w_j * values_j``."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != len(rule.nodes):
        raise InputError(
            f"got {values.shape[-1]} values for {len(rule.nodes)} quadrature nodes")
    return values @ rule.weights
