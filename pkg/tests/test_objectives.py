import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from blockprox.checks import nonexpansive_slack, prox_oracle
from blockprox.objectives import (
    EdgeDiffNorm,
    LeastSquaresLoss,
    LossStack,
    Problem,
    Regularizer,
    global_lipschitz_bound,
    objective_value,
    prox_edge_l1,
    prox_edge_l2,
    restricted_prox,
)
from blockprox.topology import Graph

vec = arrays(np.float64, 3, elements=st.floats(-10, 10))


@pytest.mark.parametrize("zi, zj, expected", [
    (3.0, 1.0, (2.5, 1.5)),
    (1.2, 1.0, (1.1, 1.1)),
])
def test_prox_l2_scalar(zi, zj, expected):
    xi, xj = prox_edge_l2([zi], [zj], 0.5)
    np.testing.assert_allclose([xi[0], xj[0]], expected, atol=1e-15)


def test_prox_l1_two_dims():
    xi, xj = prox_edge_l1([3, 1.2], [1, 1.0], 0.5)
    np.testing.assert_allclose(xi, [2.5, 1.1], atol=1e-15)
    np.testing.assert_allclose(xj, [1.5, 1.1], atol=1e-15)


@pytest.mark.parametrize("prox", [prox_edge_l2, prox_edge_l1])
def test_prox_identity_cases(prox):
    z = np.array([1.0, -2.0, 0.5])
    for a, b in [prox(z, -z, 0.0), ]:
        np.testing.assert_array_equal(a, z)
        np.testing.assert_array_equal(b, -z)
    a, b = prox(z, z, 3.0)
    np.testing.assert_array_equal(a, z)
    np.testing.assert_array_equal(b, z)


@pytest.mark.parametrize("variant", ["l2", "l1"])
@pytest.mark.parametrize("seed", range(5))
def test_prox_matches_conic_oracle(variant, seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 6))
    zi, zj = rng.standard_normal((2, d))
    t = float(rng.exponential(0.5))
    got = (prox_edge_l2 if variant == "l2" else prox_edge_l1)(zi, zj, t)
    want = prox_oracle(zi, zj, t, variant)
    np.testing.assert_allclose(got[0], want[0], atol=1e-6)
    np.testing.assert_allclose(got[1], want[1], atol=1e-6)


@given(vec, vec, st.floats(0, 5))
def test_prox_preserves_pair_mean(zi, zj, t):
    for prox in (prox_edge_l2, prox_edge_l1):
        xi, xj = prox(zi, zj, t)
        np.testing.assert_allclose(xi + xj, zi + zj, atol=1e-9)


@settings(max_examples=50)
@given(vec, vec, st.floats(0.01, 5))
def test_prox_optimality(zi, zj, t):
    # z - x must be a subgradient of t |x_i - x_j|: (t u, -t u) with |u|_* <= 1
    xi, xj = prox_edge_l2(zi, zj, t)
    u = (zi - xi) / t
    np.testing.assert_allclose(zj - xj, -t * u, atol=1e-9)
    assert np.linalg.norm(u) <= 1 + 1e-9
    s = xi - xj
    if np.linalg.norm(s) > 1e-9:
        np.testing.assert_allclose(u, s / np.linalg.norm(s), atol=1e-6)


@settings(max_examples=50)
@given(vec, vec, vec, vec, st.floats(0.01, 5), st.sampled_from(["l2", "l1"]))
def test_nonexpansive_inequality(z0, z1, y0, y1, beta, variant):
    comp = EdgeDiffNorm(0, 1, 0.7, variant)
    assert nonexpansive_slack(comp, np.stack([z0, z1]), np.stack([y0, y1]), beta) >= -1e-9


def test_restricted_prox():
    comp = EdgeDiffNorm(0, 2, 1.0)
    z = np.array([[3.0], [7.0], [1.0]])
    np.testing.assert_allclose(restricted_prox(comp, z, 0.5), [[2.5], [1.5]])
    np.testing.assert_array_equal(restricted_prox(comp, z, 0.0), [[3.0], [1.0]])
    with pytest.raises(TypeError):
        restricted_prox(object(), z, 1.0)


def test_lipschitz_bounds():
    assert global_lipschitz_bound([EdgeDiffNorm(0, 1, 1.0)], 3) == pytest.approx(np.sqrt(2))
    assert global_lipschitz_bound([EdgeDiffNorm(0, 1, 0.0)], 3) == 0.0
    mixed = [EdgeDiffNorm(0, 1, 1.0), EdgeDiffNorm(1, 2, 2.0), EdgeDiffNorm(0, 2, 1.0, "l1")]
    assert global_lipschitz_bound(mixed, 4) == pytest.approx(max(2 * np.sqrt(2), np.sqrt(8)))


def test_objective_hand_value():
    losses = [LeastSquaresLoss([[1.0]], [1.0]), LeastSquaresLoss([[1.0]], [-1.0])]
    x = np.zeros((2, 1))
    assert objective_value(losses, [EdgeDiffNorm(0, 1, 1.0)], x) == pytest.approx(1.0)
    assert objective_value(losses, [EdgeDiffNorm(0, 1, 0.0)], np.array([[1.0], [-1.0]])) == 0.0


def test_least_squares_gradient_and_constants(rng):
    A, b = rng.standard_normal((6, 3)), rng.standard_normal(6)
    f = LeastSquaresLoss(A, b, ridge=0.3)
    x = rng.standard_normal(3)
    eps = 1e-6
    fd = [(f.value(x + eps * e) - f.value(x - eps * e)) / (2 * eps) for e in np.eye(3)]
    np.testing.assert_allclose(f.subgradient(x), fd, atol=1e-6)
    ev = np.linalg.eigvalsh(A.T @ A)
    assert f.smoothness == pytest.approx(ev[-1] + 0.3)
    assert f.strong_convexity == pytest.approx(ev[0] + 0.3)
    np.testing.assert_allclose(f.subgradient(f.minimizer()), 0, atol=1e-10)


def test_least_squares_prox(rng):
    A, b = rng.standard_normal((4, 2)), rng.standard_normal(4)
    f = LeastSquaresLoss(A, b)
    v, step = rng.standard_normal(2), 0.7
    x = f.prox(v, step)
    # optimality of min f(x) + |x - v|^2 / (2 step)
    np.testing.assert_allclose(f.subgradient(x) + (x - v) / step, 0, atol=1e-10)


def test_loss_stack_matches_individual(rng):
    losses = [LeastSquaresLoss(rng.standard_normal((k, 3)), rng.standard_normal(k)) for k in (2, 5, 3)]
    stack = LossStack(losses)
    x = rng.standard_normal((3, 3))
    np.testing.assert_allclose(stack.values(x), [f.value(xi) for f, xi in zip(losses, x)])
    np.testing.assert_allclose(stack.subgradients(x), [f.subgradient(xi) for f, xi in zip(losses, x)])


def test_regularizer_prox_sum(rng):
    g = Graph.from_pairs(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    reg = Regularizer.on_graph(g, 0.4)
    v = rng.standard_normal((4, 2))
    x, _ = reg.prox_sum(v, 1.0, iters=5000)
    # compare against the conic solver on the full prox objective
    import cvxpy as cp
    X = cp.Variable((4, 2))
    obj = 0.5 * cp.sum_squares(X - v) + sum(0.4 * cp.norm(X[i] - X[j], 2) for i, j in g.edges)
    cp.Problem(cp.Minimize(obj)).solve(solver="CLARABEL", tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)
    np.testing.assert_allclose(x, X.value, atol=1e-6)


def test_problem_objective(rng):
    g = Graph.from_pairs(3, [(0, 1), (1, 2)])
    losses = [LeastSquaresLoss(rng.standard_normal((3, 2)), rng.standard_normal(3)) for _ in range(3)]
    pb = Problem(losses, Regularizer.on_graph(g, 0.5, "l1"))
    x = rng.standard_normal((3, 2))
    assert pb.objective(x) == pytest.approx(objective_value(losses, pb.reg.components, x))


def test_edge_component_validation():
    with pytest.raises(ValueError):
        EdgeDiffNorm(0, 1, 1.0, "l3")
    with pytest.raises(ValueError):
        EdgeDiffNorm(0, 1, -1.0)
