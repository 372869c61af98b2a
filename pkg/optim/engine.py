"""
Run engine - executes the Markov-chain mirror descent walk and the plain SGD
baseline over a configured federation and records the per-step trace
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import config
from network import Graph, TransitionMatrix, WalkState, sample_instance, walk_step
from .losses import DatasetShard, LossSpec, StackedObjective, local_loss, stochastic_grad
from .mirror import MirrorMap, constrained_step
from .schedules import DerivedConstants, ScheduleSpec, resolve_schedule, step_size

logger = logging.getLogger(__name__)

ALGORITHMS = ("marchon", "baseline_sgd")


class DivergenceError(RuntimeError):
    """The iterate left the finite region; carries the failing step"""

    def __init__(self, step: int, norm: float):
        super().__init__(f"iterate diverged at step {step} (||x|| = {norm:.3e})")
        self.step = step
        self.norm = norm


class DisplacementViolation(AssertionError):
    """A step moved farther than eta ||g|| / mu_phi"""


@dataclass
class RunConfig:
    """Everything one run of the walk needs"""

    graph: Graph
    transition: TransitionMatrix
    shards: Sequence[DatasetShard]
    loss: LossSpec
    mirror: MirrorMap
    schedule: ScheduleSpec
    T: int
    algorithm: str = "marchon"
    start_node: int = 0
    seed: int = 0
    x0: Optional[np.ndarray] = None
    constants: Optional[DerivedConstants] = None
    stride: Optional[int] = None
    check_displacement: bool = False
    retain_every: int = 0
    checkpoints: Tuple[int, ...] = ()
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.graph.n
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm '{self.algorithm}', expected one of {ALGORITHMS}")
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if self.transition.n != n:
            raise ValueError(f"transition matrix is {self.transition.n}x{self.transition.n} for {n} nodes")
        if not self.transition.respects(self.graph):
            raise ValueError("transition matrix puts mass outside the graph's edges")
        if len(self.shards) != n:
            raise ValueError(f"{len(self.shards)} shards for {n} nodes")
        if not (0 <= self.start_node < n):
            raise ValueError(f"start node {self.start_node} outside 0..{n - 1}")
        d = self.shards[0].d
        if any(s.d != d for s in self.shards):
            raise ValueError("shards disagree on the feature dimension")
        if self.loss.needs_binary_labels and not all(s.has_binary_labels() for s in self.shards):
            raise ValueError(f"{self.loss.kind} needs labels in {{-1, +1}}")

        if self.x0 is None:
            x0 = np.full(d, 1.0 / d) if self.mirror.on_simplex else np.zeros(d)
        else:
            x0 = np.asarray(self.x0, dtype=float).reshape(-1).copy()
        if x0.shape[0] != d:
            raise ValueError(f"x0 has dimension {x0.shape[0]}, data has {d}")
        if self.algorithm == "marchon":
            self.mirror.check(x0)
        self.x0 = x0

        if self.stride is None:
            self.stride = config.default_stride(self.T)
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.retain_every < 0:
            raise ValueError("retain_every must be nonnegative")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def d(self) -> int:
        return self.shards[0].d


@dataclass
class RunTrace:
    """Per-step record of one run; row t-1 describes step t"""

    nodes: np.ndarray
    etas: np.ndarray
    f_values: np.ndarray
    grad_sq: np.ndarray
    regret_terms: Optional[np.ndarray]
    x_bar: np.ndarray
    x_final: np.ndarray
    f_bar: float
    f_star: Optional[float]
    stride: int
    seed: int
    schedule: ScheduleSpec
    wall_clock: float = 0.0
    retained: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    retained_mean: Optional[np.ndarray] = None
    xbar_checkpoints: Dict[int, np.ndarray] = field(default_factory=dict)
    approximations: List[str] = field(default_factory=list)
    metadata: Dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def suboptimality(self) -> Optional[float]:
        """f(x_bar_T) - f(x*) when x* was supplied"""
        return None if self.f_star is None else self.f_bar - self.f_star

    def mean_grad_sq(self) -> float:
        """Running mean of the evaluated ||grad f(x_t)||^2"""
        vals = self.grad_sq[~np.isnan(self.grad_sq)]
        return float(vals.mean()) if vals.size else math.nan


def run(cfg: RunConfig, x_star: Optional[np.ndarray] = None) -> RunTrace:
    """
    Execute one run: walk step, instance draw, stochastic gradient, update,
    running average

    marchon applies the mirror step followed by the decaying-set projection;
    baseline_sgd applies x - eta g. Regret summands f_{i_t}(x_{t-1}) - f_{i_t}(x*)
    are logged only when x_star is given.

    Raises:
        DivergenceError: non-finite iterate or ||x_t|| above DIVERGENCE_NORM
        DisplacementViolation: check_displacement is on and a step overshoots
        ScheduleError: the schedule cannot produce a step
    """
    started = time.perf_counter()
    schedule = resolve_schedule(cfg.schedule, cfg.constants)
    approximations = []
    if schedule is not cfg.schedule:
        approximations.append("schedule_fallback_to_c_over_sqrt_t")
    if cfg.algorithm == "marchon" and cfg.mirror.on_simplex:
        approximations.append("mirror_step_then_ball_projection")
        approximations.append("euclidean_simplex_projection")

    objective = StackedObjective(cfg.loss, cfg.shards)
    horizon, stride, d = cfg.T, cfg.stride, cfg.d

    nodes = np.empty(horizon, dtype=np.int64)
    etas = np.empty(horizon)
    f_values = np.full(horizon, np.nan)
    grad_sq = np.full(horizon, np.nan)

    f_star = None
    regret_terms = None
    node_f_star = None
    if x_star is not None:
        x_star = np.asarray(x_star, dtype=float).reshape(-1)
        f_star = objective.loss(x_star)
        node_f_star = np.array([local_loss(cfg.loss, s, x_star) for s in cfg.shards])
        regret_terms = np.empty(horizon)

    checkpoints = set(cfg.checkpoints)
    xbar_checkpoints: Dict[int, np.ndarray] = {}
    retained: List[np.ndarray] = []
    retained_mean = np.zeros(d) if cfg.retain_every else None

    state = WalkState(current_node=cfg.start_node, seed=cfg.seed)
    mu_phi = cfg.mirror.mu_phi
    x = cfg.x0.copy()
    x_bar = np.zeros(d)

    for t in range(1, horizon + 1):
        node = walk_step(state, cfg.transition)
        shard = cfg.shards[node]
        idx = sample_instance(shard, state)
        g = stochastic_grad(cfg.loss, shard, x, idx)
        eta = step_size(schedule, cfg.constants, t)

        if regret_terms is not None:
            regret_terms[t - 1] = local_loss(cfg.loss, shard, x) - node_f_star[node]

        if cfg.algorithm == "marchon":
            x_next = constrained_step(cfg.mirror, x, g, eta)
        else:
            x_next = x - eta * g

        norm = float(np.linalg.norm(x_next))
        if not math.isfinite(norm) or norm > config.DIVERGENCE_NORM:
            raise DivergenceError(t, norm)

        if cfg.check_displacement:
            moved = float(np.linalg.norm(x_next - x))
            limit = eta * float(np.linalg.norm(g)) / mu_phi + config.DISPLACEMENT_SLACK
            if moved > limit:
                raise DisplacementViolation(f"step {t}: moved {moved:.6e} > bound {limit:.6e}")

        x = x_next
        x_bar += (x - x_bar) / t
        nodes[t - 1] = node
        etas[t - 1] = eta

        if t % stride == 0 or t == horizon:
            f_t, grad = objective.loss_and_grad(x)
            f_values[t - 1] = f_t
            grad_sq[t - 1] = float(grad @ grad)
        if cfg.retain_every and t % cfg.retain_every == 0:
            retained.append(x.copy())
            retained_mean += (x - retained_mean) / len(retained)
        if t in checkpoints:
            xbar_checkpoints[t] = x_bar.copy()

    trace = RunTrace(
        nodes=nodes,
        etas=etas,
        f_values=f_values,
        grad_sq=grad_sq,
        regret_terms=regret_terms,
        x_bar=x_bar,
        x_final=x,
        f_bar=objective.loss(x_bar),
        f_star=f_star,
        stride=stride,
        seed=cfg.seed,
        schedule=schedule,
        retained=np.array(retained) if retained else np.empty((0, d)),
        retained_mean=retained_mean,
        xbar_checkpoints=xbar_checkpoints,
        approximations=approximations,
        metadata=dict(cfg.metadata),
    )
    trace.wall_clock = time.perf_counter() - started
    logger.debug("run seed=%d %s finished in %.3fs", cfg.seed, schedule.label, trace.wall_clock)
    return trace


def regret(trace: RunTrace) -> float:
    """Realized regret: the sum of the logged summands along the chain"""
    if trace.regret_terms is None:
        raise ValueError("trace has no regret summands; run it with x_star")
    return math.fsum(trace.regret_terms.tolist())


@dataclass(frozen=True)
class Theorem1Report:
    """Seed-averaged suboptimality against the regret-derived bound"""

    T: int
    n_traces: int
    lhs: float
    regret_mean: float
    denominator: float
    rhs: float
    ratio: float
    holds: bool
    mean_distance_to_xstar: Optional[float]

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "n_traces": self.n_traces,
            "lhs_mean_suboptimality": self.lhs,
            "regret_mean": self.regret_mean,
            "denominator": self.denominator,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "holds": self.holds,
            "mean_distance_to_xstar": self.mean_distance_to_xstar,
        }


def chain_denominator(p: TransitionMatrix) -> float:
    """1 + max_ij |P_ij - 1/n| * n"""
    return 1.0 + float(np.max(np.abs(p.rows - 1.0 / p.n))) * p.n


def theorem1_check(
    traces: Sequence[RunTrace],
    p: TransitionMatrix,
    x_star: Optional[np.ndarray],
    f_star: float,
) -> Theorem1Report:
    """
    Compare mean f(x_bar_T) - f* with mean regret / (denominator T)

    A diagnostic: `holds` is reported, never asserted.
    """
    if len(traces) < 2:
        raise ValueError("the diagnostic averages over seeds; pass at least two traces")
    horizon = traces[0].T
    if any(tr.T != horizon for tr in traces):
        raise ValueError("traces have different lengths")

    lhs = float(np.mean([tr.f_bar - f_star for tr in traces]))
    regret_mean = float(np.mean([regret(tr) for tr in traces]))
    denominator = chain_denominator(p)
    rhs = regret_mean / (denominator * horizon)
    if rhs != 0.0:
        ratio = lhs / rhs
    else:
        ratio = 0.0 if lhs == 0.0 else math.inf

    dist = None
    if x_star is not None:
        x_star = np.asarray(x_star, dtype=float)
        dist = float(np.mean([np.linalg.norm(tr.x_bar - x_star) for tr in traces]))

    return Theorem1Report(
        T=horizon,
        n_traces=len(traces),
        lhs=lhs,
        regret_mean=regret_mean,
        denominator=denominator,
        rhs=rhs,
        ratio=ratio,
        holds=bool(lhs <= rhs + 1e-12),
        mean_distance_to_xstar=dist,
    )
