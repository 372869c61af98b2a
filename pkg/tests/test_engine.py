import math

import numpy as np
import pytest

import optim.engine
from conftest import random_shards, single_node
from network import build_topology, metropolis_transition
from optim import (
    DisplacementViolation, DivergenceError, LossSpec, MirrorMap, RunConfig, ScheduleSpec,
    chain_denominator, reference_optimum, regret, run, theorem1_check,
)


def _single_node_lsq(x0, eta=0.5, T=3, **kwargs):
    graph, transition, shards = single_node([[1.0]], [1.0])
    return RunConfig(
        graph=graph, transition=transition, shards=shards,
        loss=LossSpec.for_shards("least_squares", shards),
        mirror=MirrorMap.squared_euclidean(),
        schedule=ScheduleSpec(kind="constant", eta0=eta),
        T=T, x0=np.array([x0]), **kwargs,
    )


def test_single_node_recursion():
    # x_t = x_{t-1} - 0.5 (x_{t-1} - 1) from 0 gives 1 - 2^-t
    trace = run(_single_node_lsq(0.0, retain_every=1))
    np.testing.assert_allclose(trace.retained[:, 0], [0.5, 0.75, 0.875])
    assert trace.x_final[0] == pytest.approx(0.875)
    assert trace.x_bar[0] == pytest.approx((0.5 + 0.75 + 0.875) / 3)
    assert trace.nodes.tolist() == [0, 0, 0]


def test_zero_gradients_leave_the_iterate_alone(complete5, euclidean):
    graph, transition = complete5
    shards = random_shards(5, 2, 6, seed=0, binary=False)
    flat = [type(s)(features=np.zeros_like(s.features), labels=np.zeros(s.n_v)) for s in shards]
    cfg = RunConfig(graph=graph, transition=transition, shards=flat,
                    loss=LossSpec.for_shards("least_squares", flat), mirror=euclidean,
                    schedule=ScheduleSpec(kind="constant"), T=25, x0=np.array([0.3, -0.2]))
    trace = run(cfg)
    np.testing.assert_array_equal(trace.x_final, [0.3, -0.2])
    np.testing.assert_allclose(trace.x_bar, [0.3, -0.2], atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_euclidean_walk_reduces_to_sgd(seed, euclidean):
    rng = np.random.default_rng(seed)
    graph = build_topology("erdos_renyi", 10, seed=seed, p=0.4)
    transition = metropolis_transition(graph)
    shards = random_shards(10, 3, 15, seed=seed)
    loss = LossSpec.for_shards("logistic_log", shards)
    schedule = ScheduleSpec(kind="marchon", coefficient=float(rng.uniform(0.05, 1.0)))
    common = dict(graph=graph, transition=transition, shards=shards, loss=loss, mirror=euclidean,
                  schedule=schedule, T=500, seed=seed)
    a = run(RunConfig(algorithm="marchon", **common))
    b = run(RunConfig(algorithm="baseline_sgd", **common))
    np.testing.assert_array_equal(a.nodes, b.nodes)
    assert np.max(np.abs(a.x_final - b.x_final)) <= 1e-12
    assert np.max(np.abs(a.x_bar - b.x_bar)) <= 1e-12


def test_runs_are_deterministic(lsq_federation, euclidean, sqrt_schedule):
    graph, transition, shards, loss = lsq_federation
    cfg = dict(graph=graph, transition=transition, shards=shards, loss=loss, mirror=euclidean,
               schedule=sqrt_schedule, T=300, seed=17)
    a, b = run(RunConfig(**cfg)), run(RunConfig(**cfg))
    np.testing.assert_array_equal(a.nodes, b.nodes)
    np.testing.assert_array_equal(a.etas, b.etas)
    np.testing.assert_array_equal(a.x_bar, b.x_bar)
    np.testing.assert_array_equal(a.f_values, b.f_values)
    c = run(RunConfig(**{**cfg, "seed": 18}))
    assert not np.array_equal(a.nodes, c.nodes)


def test_stride_leaves_unevaluated_steps_empty(lsq_federation, euclidean, sqrt_schedule):
    graph, transition, shards, loss = lsq_federation
    trace = run(RunConfig(graph=graph, transition=transition, shards=shards, loss=loss, mirror=euclidean,
                          schedule=sqrt_schedule, T=22, stride=5))
    evaluated = np.flatnonzero(~np.isnan(trace.f_values)) + 1
    assert evaluated.tolist() == [5, 10, 15, 20, 22]
    assert np.array_equal(np.isnan(trace.f_values), np.isnan(trace.grad_sq))


@pytest.mark.parametrize("kind", ["squared_euclidean", "negative_entropy"])
def test_online_displacement_check(kind):
    graph = build_topology("watts_strogatz", 8, seed=1, k=2, beta=0.3)
    shards = random_shards(8, 4, 20, seed=2)
    cfg = RunConfig(graph=graph, transition=metropolis_transition(graph), shards=shards,
                    loss=LossSpec.for_shards("logistic_log", shards), mirror=MirrorMap.named(kind),
                    schedule=ScheduleSpec(kind="marchon", coefficient=2.0), T=400,
                    check_displacement=True)
    trace = run(cfg)
    if kind == "negative_entropy":
        assert trace.x_final.sum() == pytest.approx(1.0, abs=1e-9)
        assert "mirror_step_then_ball_projection" in trace.approximations
    else:
        assert trace.approximations == []


def test_displacement_violation_is_reported(monkeypatch, lsq_federation, euclidean, sqrt_schedule):
    graph, transition, shards, loss = lsq_federation
    monkeypatch.setattr(optim.engine, "constrained_step", lambda mirror, x, g, eta: x - 2.0 * eta * g)
    cfg = RunConfig(graph=graph, transition=transition, shards=shards, loss=loss, mirror=euclidean,
                    schedule=sqrt_schedule, T=10, check_displacement=True)
    with pytest.raises(DisplacementViolation):
        run(cfg)


def test_divergence_reports_the_step():
    with pytest.raises(DivergenceError) as info:
        run(_single_node_lsq(0.0, eta=5.0, T=200))
    # |x_t| grows by a factor 4 per step
    assert 15 < info.value.step < 30


def test_regret_is_zero_at_the_optimum():
    trace = run(_single_node_lsq(1.0, T=50), x_star=np.array([1.0]))
    assert regret(trace) == 0.0
    assert trace.suboptimality == 0.0


def test_single_step_regret():
    x0 = 1.0 - math.sqrt(0.6)
    trace = run(_single_node_lsq(x0, T=1), x_star=np.array([1.0]))
    assert regret(trace) == pytest.approx(0.3)


def test_regret_needs_the_optimum():
    trace = run(_single_node_lsq(0.0, T=3))
    with pytest.raises(ValueError):
        regret(trace)


def test_retained_samples_average_to_the_retained_mean(lsq_federation, euclidean, sqrt_schedule):
    graph, transition, shards, loss = lsq_federation
    common = dict(graph=graph, transition=transition, shards=shards, loss=loss, mirror=euclidean,
                  schedule=sqrt_schedule, T=200, seed=3)
    every7 = run(RunConfig(retain_every=7, **common))
    assert every7.retained.shape == (200 // 7, 3)
    np.testing.assert_allclose(every7.retained.mean(axis=0), every7.retained_mean, atol=1e-9)

    every1 = run(RunConfig(retain_every=1, **common))
    np.testing.assert_allclose(every1.retained.mean(axis=0), every1.x_bar, atol=1e-9)


def test_checkpoints_record_the_running_average(lsq_federation, euclidean, sqrt_schedule):
    graph, transition, shards, loss = lsq_federation
    common = dict(graph=graph, transition=transition, shards=shards, loss=loss, mirror=euclidean,
                  schedule=sqrt_schedule, seed=4)
    long = run(RunConfig(T=100, checkpoints=(10, 100), **common))
    short = run(RunConfig(T=10, **common))
    assert sorted(long.xbar_checkpoints) == [10, 100]
    np.testing.assert_array_equal(long.xbar_checkpoints[10], short.x_bar)
    np.testing.assert_array_equal(long.xbar_checkpoints[100], long.x_bar)


def test_run_config_validation(lsq_federation, euclidean, sqrt_schedule):
    graph, transition, shards, loss = lsq_federation
    base = dict(graph=graph, transition=transition, shards=shards, loss=loss, mirror=euclidean,
                schedule=sqrt_schedule, T=10)
    with pytest.raises(ValueError):
        RunConfig(**{**base, "T": 0})
    with pytest.raises(ValueError):
        RunConfig(**{**base, "shards": shards[:4]})
    with pytest.raises(ValueError):
        RunConfig(**{**base, "x0": np.zeros(2)})
    with pytest.raises(ValueError):
        RunConfig(**{**base, "start_node": 5})
    with pytest.raises(ValueError):
        RunConfig(**{**base, "algorithm": "adam"})
    with pytest.raises(ValueError):
        # real-valued labels under a logistic loss
        RunConfig(**{**base, "loss": LossSpec.for_shards("logistic_log", shards)})
    star = build_topology("star", 5)
    with pytest.raises(ValueError):
        RunConfig(**{**base, "graph": star})


def test_chain_denominator():
    complete = metropolis_transition(build_topology("complete", 3))
    # max |P_ij - 1/3| is the zero diagonal: 1 + (1/3) * 3
    assert chain_denominator(complete) == pytest.approx(2.0)
    from network import TransitionMatrix
    assert chain_denominator(TransitionMatrix(rows=np.full((4, 4), 0.25))) == pytest.approx(1.0)


def test_theorem1_diagnostic_at_the_optimum():
    traces = [run(_single_node_lsq(1.0, T=20, seed=s), x_star=np.array([1.0])) for s in range(3)]
    _, transition, _ = single_node([[1.0]], [1.0])
    report = theorem1_check(traces, transition, np.array([1.0]), 0.0)
    assert report.lhs == 0.0
    assert report.rhs == 0.0
    assert report.ratio == 0.0
    assert report.holds
    assert report.mean_distance_to_xstar == 0.0
    assert report.to_dict()["n_traces"] == 3


def test_theorem1_diagnostic_inputs(lsq_federation, euclidean, sqrt_schedule):
    graph, transition, shards, loss = lsq_federation
    x_star, f_star = reference_optimum(loss, shards)
    common = dict(graph=graph, transition=transition, shards=shards, loss=loss, mirror=euclidean,
                  schedule=sqrt_schedule)
    traces = [run(RunConfig(T=50, seed=s, **common), x_star=x_star) for s in range(4)]
    report = theorem1_check(traces, transition, x_star, f_star)
    assert report.lhs >= 0.0
    assert math.isfinite(report.ratio)
    with pytest.raises(ValueError):
        theorem1_check(traces[:1], transition, x_star, f_star)
    with pytest.raises(ValueError):
        theorem1_check(traces + [run(RunConfig(T=10, **common), x_star=x_star)], transition, x_star, f_star)


@pytest.mark.slow
def test_seed_averaged_regret_is_not_negative(euclidean):
    graph = build_topology("complete", 5)
    shards = random_shards(5, 3, 40, seed=21, binary=False)
    loss = LossSpec.for_shards("least_squares", shards)
    x_star, _ = reference_optimum(loss, shards)
    cfg = dict(graph=graph, transition=metropolis_transition(graph), shards=shards, loss=loss,
               mirror=euclidean, schedule=ScheduleSpec(kind="marchon", coefficient=0.2), T=300)
    regrets = [regret(run(RunConfig(seed=s, **cfg), x_star=x_star)) for s in range(40)]
    assert np.mean(regrets) >= -0.5
