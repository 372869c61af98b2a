import math

import numpy as np
import pytest

from optim import (
    DomainError, MirrorMap, bregman, constrained_step, decaying_set_project,
    mirror_objective, mirror_step, simplex_project,
)


def test_bregman_examples(euclidean, entropy):
    assert bregman(euclidean, [1.0, 2.0], [0.0, 0.0]) == pytest.approx(2.5)
    assert bregman(entropy, [0.5, 0.5], [0.5, 0.5]) == pytest.approx(0.0, abs=1e-15)
    # 0.5 log 2 + 0.5 log(2/3)
    assert bregman(entropy, [0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.143841036, rel=1e-8)


def test_bregman_domain_errors(euclidean, entropy):
    with pytest.raises(ValueError):
        bregman(euclidean, [1.0, 2.0], [1.0])
    with pytest.raises(DomainError):
        bregman(entropy, [0.5, 0.5], [1.0, 0.0])
    with pytest.raises(DomainError):
        bregman(entropy, [0.7, 0.5], [0.5, 0.5])
    with pytest.raises(DomainError):
        bregman(euclidean, [np.nan, 0.0], [0.0, 0.0])


def test_entropy_divergence_allows_zero_in_the_first_argument(entropy):
    assert bregman(entropy, [1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2.0))


def test_bregman_is_strongly_convex():
    rng = np.random.default_rng(0)
    euclid = MirrorMap.squared_euclidean()
    ent = MirrorMap.negative_entropy()
    for _ in range(10_000):
        u, v = rng.normal(size=4), rng.normal(size=4)
        assert bregman(euclid, u, v) >= 0.5 * float(np.sum((u - v) ** 2)) - 1e-12
        p, q = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
        # Pinsker: KL(p || q) >= ||p - q||_1^2 / 2
        assert bregman(ent, p, q) >= 0.5 * float(np.sum(np.abs(p - q))) ** 2 - 1e-12


def test_mirror_step_examples(euclidean, entropy):
    np.testing.assert_allclose(mirror_step(euclidean, [1.0, 1.0], [2.0, 0.0], 0.5), [0.0, 1.0])
    np.testing.assert_allclose(mirror_step(entropy, [0.5, 0.5], [0.0, 0.0], 1.0), [0.5, 0.5])
    np.testing.assert_allclose(mirror_step(entropy, [0.5, 0.5], [math.log(4.0), 0.0], 1.0), [0.2, 0.8])


def test_mirror_step_rejects_nonpositive_step(euclidean):
    with pytest.raises(ValueError):
        mirror_step(euclidean, [1.0], [1.0], 0.0)
    with pytest.raises(ValueError):
        mirror_step(euclidean, [1.0], [1.0, 2.0], 0.1)


def test_euclidean_step_is_sgd():
    rng = np.random.default_rng(1)
    euclid = MirrorMap.squared_euclidean()
    for _ in range(200):
        x, g = rng.normal(size=5), rng.normal(size=5)
        eta = float(rng.uniform(1e-3, 2.0))
        np.testing.assert_array_equal(mirror_step(euclid, x, g, eta), x - eta * g)
        np.testing.assert_array_equal(constrained_step(euclid, x, g, eta), x - eta * g)


def test_entropy_step_first_order_condition(entropy):
    rng = np.random.default_rng(2)
    for _ in range(100):
        x = rng.dirichlet(np.ones(6))
        g = rng.normal(size=6)
        eta = float(rng.uniform(0.01, 1.0))
        out = mirror_step(entropy, x, g, eta)
        # grad Phi(out) - grad Phi(x) + eta g is constant across coordinates
        residual = np.log(out) - np.log(x) + eta * g
        assert np.ptp(residual) < 1e-9
        assert out.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("kind", ["squared_euclidean", "negative_entropy"])
def test_mirror_step_minimizes_its_objective(kind):
    mirror = MirrorMap.named(kind)
    rng = np.random.default_rng(3)
    for _ in range(20):
        d = 4
        x = rng.dirichlet(np.ones(d)) if mirror.on_simplex else rng.normal(size=d)
        g = rng.normal(size=d)
        eta = 0.3
        out = mirror_step(mirror, x, g, eta)
        best = mirror_objective(mirror, out, x, g, eta)
        for _ in range(100):
            if mirror.on_simplex:
                z = np.abs(out + 0.05 * rng.normal(size=d)) + 1e-6
                z /= z.sum()
            else:
                z = out + 0.1 * rng.normal(size=d)
            assert mirror_objective(mirror, z, x, g, eta) >= best - 1e-12


def test_decaying_set_projection():
    x, g, eta = np.array([1.0]), np.array([1.0]), 1.0
    # the set is the ball around 0 of radius 1
    np.testing.assert_allclose(decaying_set_project(np.array([0.0]), x, g, eta), [0.0])
    np.testing.assert_allclose(decaying_set_project(np.array([-3.0]), x, g, eta), [-1.0])
    np.testing.assert_allclose(decaying_set_project(np.array([0.5]), x, g, eta), [0.5])


def test_zero_gradient_keeps_the_iterate(euclidean, entropy):
    x = np.array([0.3, -0.7])
    np.testing.assert_array_equal(constrained_step(euclidean, x, np.zeros(2), 0.4), x)
    p = np.array([0.25, 0.75])
    np.testing.assert_allclose(constrained_step(entropy, p, np.zeros(2), 0.4), p, atol=1e-15)


@pytest.mark.parametrize("kind", ["squared_euclidean", "negative_entropy"])
def test_constrained_step_displacement(kind):
    mirror = MirrorMap.named(kind)
    rng = np.random.default_rng(4)
    for _ in range(2000):
        d = int(rng.integers(1, 8))
        x = rng.dirichlet(np.ones(d)) if mirror.on_simplex else rng.normal(size=d)
        g = rng.normal(size=d) * float(rng.choice([1e-3, 1.0, 30.0]))
        eta = float(rng.uniform(1e-4, 3.0))
        out = constrained_step(mirror, x, g, eta)
        moved = float(np.linalg.norm(out - x))
        assert moved <= eta * float(np.linalg.norm(g)) / mirror.mu_phi + 1e-9
        if mirror.on_simplex:
            assert np.all(out >= 0.0)
            assert out.sum() == pytest.approx(1.0, abs=1e-9)


def test_simplex_projection():
    np.testing.assert_array_equal(simplex_project([0.25, 0.75]), [0.25, 0.75])
    np.testing.assert_allclose(simplex_project([1.0, 1.0]), [0.5, 0.5])
    np.testing.assert_allclose(simplex_project([2.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(simplex_project([-1.0, 0.2, 0.4]), [0.0, 0.4, 0.6])


def test_named_maps():
    assert MirrorMap.named("euclidean") == MirrorMap.squared_euclidean()
    assert MirrorMap.named("entropy").on_simplex
    with pytest.raises(ValueError):
        MirrorMap.named("hyperbolic")
