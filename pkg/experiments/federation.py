"""
Turn an ExperimentConfig into a concrete federation: network, chain, shards,
reference optimum and schedule constants
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

import config
from dataio import RawDataset, load_dataset, local_path, make_synthetic, partition
from network import (
    Graph, SpectralReport, TransitionMatrix, build_topology, effective_tau,
    spectral_report, transition_for, validate_chain,
)
from optim import (
    ConstantsEstimate, DatasetShard, DerivedConstants, LossSpec, MirrorMap, OptimumError,
    RunConfig, ScheduleError, derived_constants, estimate_constants, reference_optimum,
    simplex_optimum,
)
from .settings import DatasetSpec, ExperimentConfig, MethodSpec

logger = logging.getLogger(__name__)


@dataclass
class Federation:
    graph: Graph
    transition: TransitionMatrix
    report: SpectralReport
    tau: int
    shards: List[DatasetShard]
    loss: LossSpec
    mirror: MirrorMap
    x0: np.ndarray
    x_star: Optional[np.ndarray]
    f_star: Optional[float]
    estimate: ConstantsEstimate
    constants: Optional[DerivedConstants]
    notes: List[str] = field(default_factory=list)

    def describe(self) -> dict:
        return {
            "n": self.graph.n,
            "topology": self.graph.topology,
            "weighting": self.transition.weighting,
            "edges": len(self.graph.edges),
            "d": self.shards[0].d,
            "shard_sizes": [s.n_v for s in self.shards],
            "loss": self.loss.kind,
            "L": self.loss.smoothness_L,
            "mu_f": self.loss.strong_convexity_mu_f,
            "mirror": self.mirror.kind,
            "rho": self.report.rho,
            "c_p": self.report.c_p,
            "tau": self.tau,
            "f_star": self.f_star,
            "estimate": self.estimate.to_dict(),
            "constants": self.constants.to_dict() if self.constants else None,
            "notes": list(self.notes),
        }


def load_raw(spec: DatasetSpec) -> RawDataset:
    """Normalized dataset described by a DatasetSpec"""
    if spec.source == "synthetic":
        ds, _ = make_synthetic(spec.n_samples, spec.dim, seed=spec.seed, flip=spec.flip, scale=spec.scale)
        return ds
    path = local_path(spec.name) if spec.source == "manifest" else spec.path
    return load_dataset(path, max_rows=spec.max_rows, seed=spec.seed)


def _probe_points(x0: np.ndarray, x_star: Optional[np.ndarray], count: int,
                  on_simplex: bool, seed: int) -> List[np.ndarray]:
    """x0, x*, and seeded points between them that stand in for the iterate path"""
    rng = np.random.default_rng(seed)
    anchor = x_star if x_star is not None else x0
    probes = [x0, anchor]
    spread = max(float(np.linalg.norm(anchor - x0)), 1.0)
    for _ in range(count):
        if on_simplex:
            probes.append(rng.dirichlet(np.ones(x0.shape[0])))
        else:
            mix = rng.random()
            probes.append(x0 + mix * (anchor - x0) + 0.1 * spread * rng.standard_normal(x0.shape[0]))
    return probes


def build_federation(cfg: ExperimentConfig) -> Federation:
    """
    Build every seed-independent piece of an experiment

    The reference optimum is solved on the map's domain; when it fails the
    federation carries no x* and suboptimality and regret are not logged.
    """
    topo = cfg.topology
    graph = build_topology(topo.kind, topo.n, seed=topo.seed, p=topo.p, k=topo.k, beta=topo.beta)
    transition = transition_for(graph, topo.weighting)
    validation = validate_chain(transition)
    notes = []
    if not validation.uniform_stationary:
        notes.append("non_uniform_stationary_distribution")
        logger.warning("%s weighting on %s has a non-uniform stationary distribution",
                       transition.weighting, graph.topology)
    report = spectral_report(transition)
    tau = effective_tau(transition, report, cfg.mixing_epsilon)

    raw = load_raw(cfg.dataset)
    shards = partition(raw, topo.n, cfg.dataset.partition, seed=cfg.dataset.partition_seed,
                       alpha=cfg.dataset.alpha)
    loss = LossSpec.for_shards(cfg.loss.kind, shards, cfg.loss.lam)
    mirror = MirrorMap.named(cfg.mirror)

    d = shards[0].d
    if cfg.x0 is not None:
        x0 = np.asarray(cfg.x0, dtype=float)
    else:
        x0 = np.full(d, 1.0 / d) if mirror.on_simplex else np.zeros(d)

    x_star, f_star = None, None
    try:
        if mirror.on_simplex:
            x_star, f_star = simplex_optimum(loss, shards)
        else:
            x_star, f_star = reference_optimum(loss, shards)
    except OptimumError as e:
        notes.append("no_reference_optimum")
        logger.warning("reference optimum unavailable: %s", e)

    estimate = estimate_constants(loss, shards, _probe_points(x0, x_star, cfg.probes, mirror.on_simplex,
                                                              cfg.dataset.seed),
                                  seed=cfg.dataset.seed)
    try:
        constants = derived_constants(estimate, report.rho, report.c_p, tau, mirror.mu_phi, cfg.T)
    except ScheduleError as e:
        constants = None
        notes.append("no_derived_constants")
        logger.warning("derived constants unavailable: %s", e)

    return Federation(
        graph=graph, transition=transition, report=report, tau=tau, shards=shards, loss=loss,
        mirror=mirror, x0=x0, x_star=x_star, f_star=f_star, estimate=estimate,
        constants=constants, notes=notes,
    )


def run_config_for(fed: Federation, cfg: ExperimentConfig, method: MethodSpec, seed: int) -> RunConfig:
    return RunConfig(
        graph=fed.graph,
        transition=fed.transition,
        shards=fed.shards,
        loss=fed.loss,
        mirror=fed.mirror,
        schedule=method.schedule,
        T=cfg.T,
        algorithm=method.algorithm,
        start_node=cfg.start_node,
        seed=seed,
        x0=fed.x0,
        constants=fed.constants,
        stride=cfg.stride or config.default_stride(cfg.T),
        check_displacement=cfg.check_displacement,
        checkpoints=tuple(cfg.checkpoints),
        metadata={"method": method.label, "algorithm": method.algorithm},
    )
