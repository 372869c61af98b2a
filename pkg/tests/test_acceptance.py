"""
Scaled-down statistical reproductions of the convergence experiments

Every run uses synthetic data, so none of these need a download. They take
minutes; select them with `pytest -m slow`.
"""

import math

import numpy as np
import pytest

from dataio import local_path, make_synthetic
from experiments import (
    ExperimentConfig, ExperimentOrchestrator, MethodSpec, build_federation, figure_configs,
    run_config_for,
)
from optim import ScheduleSpec, global_loss_and_grad, run, step_size

pytestmark = pytest.mark.slow

SEEDS = list(range(20))
SWEEP_SEEDS = list(range(40))
HORIZONS = [100, 1_000, 10_000, 100_000]


def _rate_config(loss, method, **extra):
    return ExperimentConfig.model_validate({
        "name": "rate",
        "topology": {"kind": "complete", "n": 50},
        "dataset": {"source": "synthetic", "n_samples": 5000, "dim": 4},
        "loss": loss,
        "methods": [method],
        "seeds": SEEDS,
        "T": HORIZONS[-1],
        "stride": HORIZONS[-1],
        "checkpoints": HORIZONS[:-1],
        **extra,
    })


def _fitted_slope(cfg):
    """Slope of log mean suboptimality of x_bar against log T"""
    fed = build_federation(cfg)
    method = cfg.resolved_methods()[0]
    gaps = {T: [] for T in HORIZONS}
    for seed in cfg.seeds:
        trace = run(run_config_for(fed, cfg, method, seed))
        averages = {**trace.xbar_checkpoints, HORIZONS[-1]: trace.x_bar}
        for T in HORIZONS:
            f, _ = global_loss_and_grad(fed.loss, fed.shards, averages[T])
            gaps[T].append(f - fed.f_star)
    means = [float(np.mean(gaps[T])) for T in HORIZONS]
    assert all(m > 0.0 for m in means)
    return float(np.polyfit(np.log(HORIZONS), np.log(means), 1)[0])


def test_convex_rate():
    cfg = _rate_config({"kind": "lsq"}, {"schedule": {"kind": "marchon"}})
    slope = _fitted_slope(cfg)
    assert -1.2 <= slope <= -0.4


def test_strongly_convex_rate():
    cfg = _rate_config({"kind": "ridge", "lam": 0.1},
                       {"schedule": {"kind": "marchon_strongly_convex", "mu_f": 0.1}})
    slope = _fitted_slope(cfg)
    assert -1.3 <= slope <= -0.7


def _final_f(results, method, seed):
    for r in results:
        if r.method == method and r.seed == seed:
            return math.inf if r.diverged else float(r.trace.f_values[-1])
    raise KeyError((method, seed))


@pytest.mark.parametrize("dataset", ["synthetic", "cod-rna"])
def test_method_comparison(tmp_path, dataset):
    if dataset != "synthetic" and not local_path(dataset).exists():
        pytest.skip(f"{dataset} not fetched")
    (cfg,) = figure_configs("2", T=2000, seeds=SEEDS, dataset=dataset, out=str(tmp_path))
    cfg = cfg.model_copy(update={"stride": cfg.T})
    orchestrator = ExperimentOrchestrator(cfg)
    results = orchestrator.execute_compare(write=False)

    for other in ("mcgd_q0.75", "mcsgd_emd", "markov_sgd"):
        wins = sum(_final_f(results, "marchon", s) <= _final_f(results, other, s) for s in SEEDS)
        assert wins >= 0.8 * len(SEEDS), other

    reports = orchestrator.theorem1_reports()
    assert "marchon" in reports
    for report in reports.values():
        assert math.isfinite(report["lhs_mean_suboptimality"])
        assert math.isfinite(report["rhs"])


def _mean_suboptimality(cfg):
    cfg = cfg.model_copy(update={"stride": cfg.T})
    results = ExperimentOrchestrator(cfg).execute_compare(write=False)
    values = np.array([r.suboptimality for r in results])
    assert np.all(np.isfinite(values))
    return float(values.mean())


def test_smaller_networks_do_not_converge_slower(tmp_path):
    means = {cfg.topology.n: _mean_suboptimality(cfg)
             for cfg in figure_configs("3", T=2000, seeds=SWEEP_SEEDS, out=str(tmp_path))}
    for small, large in [(10, 50), (50, 200)]:
        assert means[small] <= 1.05 * means[large]


def test_star_topology_converges_slowest(tmp_path):
    means = {cfg.topology.kind: _mean_suboptimality(cfg)
             for cfg in figure_configs("4", T=2000, seeds=SEEDS, out=str(tmp_path))}
    assert max(means, key=means.get) == "star"
    assert means["star"] <= 5.0 * means["complete"]


def test_nonconvex_gradient_norm_decays():
    T = 100_000
    _, w = make_synthetic(5000, 4, seed=0)
    cfg = ExperimentConfig.model_validate({
        "name": "nonconvex",
        "topology": {"kind": "complete", "n": 10},
        "dataset": {"source": "synthetic", "n_samples": 5000, "dim": 4, "seed": 0},
        "loss": {"kind": "nonconvex", "lam": 0.01},
        "methods": [{"schedule": {"kind": "marchon_nonconvex"}}],
        "seeds": SEEDS,
        "T": T,
        "stride": 10,
        "x0": (-3.0 * w).tolist(),
    })
    fed = build_federation(cfg)
    prescribed = ScheduleSpec(kind="marchon_nonconvex", horizon_T=T)
    # constant step fixed at 0.05; the prescribed constants give a far smaller one
    coefficient = 0.05 / step_size(prescribed, fed.constants, 1)
    method = MethodSpec(schedule=prescribed.model_copy(update={"coefficient": coefficient}))

    early, late = [], []
    for seed in cfg.seeds:
        trace = run(run_config_for(fed, cfg, method, seed))
        assert np.all(trace.etas == trace.etas[0])
        early.append(np.nanmean(trace.grad_sq[:1_000]))
        late.append(np.nanmean(trace.grad_sq))
    assert np.mean(late) < 0.1 * np.mean(early)
