import numpy as np
import pytest
from hypothesis import given, strategies as st

from idedyn import Grid, InputError, QuadratureRule, integrate, trapezoid_rule


@pytest.mark.parametrize("nodes, weights", [
    ([0, 0.5, 1], [0.25, 0.5, 0.25]),
    ([0, 1], [0.5, 0.5]),
    ([0, 0.25, 1], [0.125, 0.5, 0.375]),
])
def test_weights(nodes, weights):
    np.testing.assert_allclose(trapezoid_rule(np.array(nodes, float)).weights, weights)


def test_accepts_grid():
    rule = trapezoid_rule(Grid.uniform(0.0, 1.0, 2))
    np.testing.assert_allclose(rule.weights, [0.25, 0.5, 0.25])


def test_too_few_nodes():
    with pytest.raises(InputError):
        trapezoid_rule(np.array([0.0]))


def test_invalid_rule():
    with pytest.raises(InputError):
        QuadratureRule(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    with pytest.raises(InputError):
        QuadratureRule(np.array([0.0, 1.0]), np.array([1.0, -1.0]))


def test_integrate_examples():
    rule = trapezoid_rule(np.array([0.0, 0.5, 1.0]))
    x = rule.nodes
    assert integrate(np.ones(3), rule) == pytest.approx(1.0)
    assert integrate(x, rule) == pytest.approx(0.5)
    # 0.25 * 0 + 0.5 * 0.25 + 0.25 * 1
    assert integrate(x**2, rule) == pytest.approx(0.375)


def test_length_mismatch():
    with pytest.raises(InputError):
        integrate(np.ones(4), trapezoid_rule(np.array([0.0, 1.0])))


nodes_strategy = st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=30,
                          unique=True).map(sorted).filter(lambda v: min(np.diff(v)) > 1e-6)


@given(nodes_strategy, st.floats(-5, 5), st.floats(-5, 5))
def test_affine_exact_and_weights_sum(nodes, c0, c1):
    rule = trapezoid_rule(np.array(nodes))
    a, b = nodes[0], nodes[-1]
    assert np.all(rule.weights >= 0)
    assert rule.weights.sum() == pytest.approx(b - a, rel=1e-12, abs=1e-12)
    exact = c0 * (b - a) + c1 * (b * b - a * a) / 2
    assert integrate(c0 + c1 * rule.nodes, rule) == pytest.approx(exact, rel=1e-10, abs=1e-9)


@given(nodes_strategy, st.integers(0, 2**32 - 1))
def test_linearity(nodes, seed):
    rule = trapezoid_rule(np.array(nodes))
    r = np.random.default_rng(seed)
    u, v = r.normal(size=len(nodes)), r.normal(size=len(nodes))
    assert integrate(u + v, rule) == pytest.approx(integrate(u, rule) + integrate(v, rule),
                                                   rel=1e-12, abs=1e-12)


def test_second_order():
    f, exact = np.exp, np.e - np.exp(-1.0)
    errs = {n: abs(integrate(f(r.nodes), r) - exact)
            for n in (64, 128, 256, 512) for r in [trapezoid_rule(np.linspace(-1, 1, n + 1))]}
    for n in (64, 128, 256):
        assert 3.6 <= errs[n] / errs[2 * n] <= 4.4
