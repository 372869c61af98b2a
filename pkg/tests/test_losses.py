import math

import numpy as np
import pytest

from conftest import random_shards
from optim import (
    DatasetShard, LossSpec, OptimumError, StackedObjective, estimate_constants,
    global_loss_and_grad, local_grad, local_loss, reference_optimum, simplex_optimum,
    stochastic_grad,
)
from optim.losses import LOSS_KINDS, instance_losses


def _shard(features, labels):
    return DatasetShard(features=np.asarray(features, dtype=float), labels=np.asarray(labels, dtype=float))


def _spec(kind, shards, lam=None):
    return LossSpec.for_shards(kind, shards, lam=lam)


def test_local_loss_examples():
    one = _shard([[1.0]], [1.0])
    assert local_loss(_spec("logistic_log", [one]), one, [0.0]) == pytest.approx(math.log(2.0))
    assert local_loss(_spec("logistic_log", [one]), one, [2.0]) == pytest.approx(0.126928011, rel=1e-8)
    exact = _shard([[1.0, 0.0], [0.0, 1.0]], [0.3, -0.2])
    assert local_loss(_spec("least_squares", [exact]), exact, [0.3, -0.2]) == pytest.approx(0.0, abs=1e-30)


def test_stochastic_gradient_examples():
    logistic = _shard([[1.0, 0.0]], [1.0])
    np.testing.assert_allclose(stochastic_grad(_spec("logistic", [logistic]), logistic, [0.0, 0.0], 0),
                               [-0.5, 0.0])
    lsq = _shard([[1.0, 1.0]], [0.0])
    np.testing.assert_allclose(stochastic_grad(_spec("lsq", [lsq]), lsq, [1.0, 0.0], 0), [1.0, 1.0])

    ridge = _shard([[1.0]], [1.0])
    spec = _spec("ridge", [ridge], lam=0.1)
    assert stochastic_grad(spec, ridge, [0.0], 0)[0] == pytest.approx(-0.5)
    # -1 / (1 + e) + 0.1
    assert stochastic_grad(spec, ridge, [1.0], 0)[0] == pytest.approx(-0.168941421, rel=1e-8)


def test_loss_errors():
    shard = _shard([[1.0, 0.0]], [1.0])
    spec = _spec("logistic", [shard])
    with pytest.raises(IndexError):
        stochastic_grad(spec, shard, [0.0, 0.0], 1)
    with pytest.raises(ValueError):
        local_loss(spec, shard, [0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        _shard(np.empty((0, 2)), [])
    with pytest.raises(ValueError):
        _shard([[2.0]], [1.0])
    with pytest.raises(ValueError):
        _spec("ridge", [shard])
    with pytest.raises(ValueError):
        _spec("hinge", [shard])


def test_global_objective_is_the_node_average():
    shards = [_shard([[1.0, 0.0]], [-1.0]), _shard([[0.0, 1.0]], [-1.0])]
    spec = _spec("least_squares", shards)
    f, g = global_loss_and_grad(spec, shards, [0.0, 0.0])
    np.testing.assert_allclose(g, [0.5, 0.5])
    assert f == pytest.approx(0.5)

    logistic = random_shards(4, 3, 7, seed=1)
    f, _ = global_loss_and_grad(_spec("logistic", logistic), logistic, np.zeros(3))
    assert f == pytest.approx(math.log(2.0))


def test_identical_shards_reproduce_the_local_objective():
    base = random_shards(1, 3, 9, seed=2)[0]
    spec = _spec("logistic", [base])
    x = np.array([0.2, -0.4, 0.9])
    f, g = global_loss_and_grad(spec, [base] * 5, x)
    assert f == pytest.approx(local_loss(spec, base, x), rel=1e-14)
    np.testing.assert_allclose(g, local_grad(spec, base, x), rtol=1e-14)


def test_stacked_objective_matches_the_node_average():
    shards = [random_shards(1, 4, rows, seed=rows)[0] for rows in (3, 10, 25)]
    spec = _spec("ridge", shards, lam=0.05)
    x = np.array([0.5, -0.1, 0.3, 0.0])
    f, g = global_loss_and_grad(spec, shards, x)
    f2, g2 = StackedObjective(spec, shards).loss_and_grad(x)
    assert f2 == pytest.approx(f, rel=1e-13)
    np.testing.assert_allclose(g2, g, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("kind", LOSS_KINDS)
def test_gradients_match_finite_differences(kind):
    rng = np.random.default_rng(5)
    shard = random_shards(1, 3, 100, seed=6, binary=kind != "least_squares")[0]
    spec = _spec(kind, [shard], lam=0.1 if kind in ("ridge_logistic", "smooth_nonconvex") else None)
    h = 1e-6
    for i in range(100):
        x = rng.uniform(-1.0, 1.0, size=3)
        one = DatasetShard(features=shard.features[i:i + 1], labels=shard.labels[i:i + 1])
        g = stochastic_grad(spec, shard, x, i)
        fd = np.array([
            (instance_losses(spec, one, x + h * e)[0] - instance_losses(spec, one, x - h * e)[0]) / (2 * h)
            for e in np.eye(3)
        ])
        assert np.linalg.norm(fd - g) <= 1e-5 * max(np.linalg.norm(g), 1e-4)


@pytest.mark.parametrize("kind", ["logistic_log", "logistic_literal", "ridge_logistic", "least_squares"])
def test_convex_kinds_pass_the_midpoint_check(kind):
    rng = np.random.default_rng(7)
    shards = random_shards(3, 4, 20, seed=8, binary=kind != "least_squares")
    spec = _spec(kind, shards, lam=0.1 if kind == "ridge_logistic" else None)
    assert spec.convex
    for _ in range(300):
        x, y = rng.uniform(-1, 1, size=4), rng.uniform(-1, 1, size=4)
        fx, _ = global_loss_and_grad(spec, shards, x)
        fy, _ = global_loss_and_grad(spec, shards, y)
        fm, _ = global_loss_and_grad(spec, shards, 0.5 * (x + y))
        assert fm <= 0.5 * (fx + fy) + 1e-12


@pytest.mark.parametrize("kind", LOSS_KINDS)
def test_gradient_is_lipschitz_with_the_declared_constant(kind):
    rng = np.random.default_rng(9)
    shards = random_shards(3, 4, 20, seed=10, binary=kind != "least_squares")
    spec = _spec(kind, shards, lam=0.1 if kind in ("ridge_logistic", "smooth_nonconvex") else None)
    for _ in range(300):
        x, y = rng.normal(size=4), rng.normal(size=4)
        if kind == "logistic_literal":
            # the declared L holds on the unit ball
            x /= max(1.0, np.linalg.norm(x))
            y /= max(1.0, np.linalg.norm(y))
        _, gx = global_loss_and_grad(spec, shards, x)
        _, gy = global_loss_and_grad(spec, shards, y)
        assert np.linalg.norm(gx - gy) <= spec.smoothness_L * np.linalg.norm(x - y) + 1e-9


def test_analytic_constants():
    shards = [_shard([[1.0, 0.0], [0.0, 1.0]], [1.0, -1.0])]
    assert _spec("logistic", shards).smoothness_L == pytest.approx(0.25)
    ridge = _spec("ridge", shards, lam=0.1)
    assert ridge.smoothness_L == pytest.approx(0.35)
    assert ridge.strong_convexity_mu_f == pytest.approx(0.1)
    lsq = _spec("lsq", shards)
    assert lsq.smoothness_L == pytest.approx(1.0)
    assert lsq.strong_convexity_mu_f == pytest.approx(0.5)
    assert _spec("nonconvex", shards, lam=0.1).convex is False


def test_estimate_constants_without_sampling_noise():
    # one instance per node: no within-node variance
    shards = [_shard([[1.0, 0.0]], [-1.0]), _shard([[1.0, 0.0]], [1.0])]
    spec = _spec("lsq", shards)
    est = estimate_constants(spec, shards, [np.zeros(2)])
    assert est.sigma_v_sq == 0.0
    # node gradients (1, 0) and (-1, 0) around a zero mean
    assert est.sigma_V_sq == pytest.approx(1.0)
    assert est.G == pytest.approx(1.0)
    assert est.R_sq == 0.0


def test_estimate_constants_identical_nodes():
    shard = _shard([[0.5, 0.5]], [1.0])
    est = estimate_constants(_spec("lsq", [shard]), [shard, shard, shard], [np.zeros(2), np.ones(2)])
    assert est.sigma_v_sq == 0.0
    assert est.sigma_V_sq == 0.0
    assert est.R_sq == pytest.approx(2.0)
    with pytest.raises(ValueError):
        estimate_constants(_spec("lsq", [shard]), [shard], [])


def test_estimate_constants_subsampling_is_seeded():
    shards = random_shards(3, 4, 200, seed=12)
    spec = _spec("logistic", shards)
    probes = [np.zeros(4), np.full(4, 0.5)]
    a = estimate_constants(spec, shards, probes, seed=3, max_instances=50)
    b = estimate_constants(spec, shards, probes, seed=3, max_instances=50)
    assert a == b


def test_reference_optimum_least_squares():
    shards = random_shards(4, 3, 30, seed=13, binary=False)
    spec = _spec("lsq", shards)
    x, f = reference_optimum(spec, shards)
    _, g = global_loss_and_grad(spec, shards, x)
    assert np.linalg.norm(g) <= 1e-10
    assert f == pytest.approx(global_loss_and_grad(spec, shards, x)[0])


def test_reference_optimum_ridge():
    shards = random_shards(4, 3, 30, seed=14)
    spec = _spec("ridge", shards, lam=0.1)
    x, _ = reference_optimum(spec, shards)
    assert np.linalg.norm(global_loss_and_grad(spec, shards, x)[1]) <= 1e-10


def test_reference_optimum_symmetric_logistic():
    shard = _shard([[1.0], [1.0]], [1.0, -1.0])
    x, f = reference_optimum(_spec("logistic", [shard]), [shard])
    assert abs(x[0]) < 1e-8
    assert f == pytest.approx(math.log(2.0))


def test_reference_optimum_reports_failure():
    # separable: the infimum is approached only as x -> infinity
    shard = _shard([[1.0], [-1.0]], [1.0, -1.0])
    with pytest.raises(OptimumError):
        reference_optimum(_spec("logistic", [shard]), [shard], max_iter=3)


def test_simplex_optimum_interior():
    shard = _shard([[1.0, 0.0], [0.0, 1.0]], [0.3, 0.7])
    x, f = simplex_optimum(_spec("lsq", [shard]), [shard])
    np.testing.assert_allclose(x, [0.3, 0.7], atol=1e-5)
    assert x.sum() == pytest.approx(1.0)
    assert f == pytest.approx(0.0, abs=1e-9)


def test_simplex_optimum_on_a_face():
    # the unconstrained optimum (2, -1) lies outside; the constrained one is the vertex (1, 0)
    shard = _shard([[1.0, 0.0], [0.0, 1.0]], [2.0, -1.0])
    x, _ = simplex_optimum(_spec("lsq", [shard]), [shard])
    np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-5)
