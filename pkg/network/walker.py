"""
The two levels of randomness of the walk: the node chain and the instance draw
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional

import numpy as np

import config
from .topology import ChainError, TransitionMatrix

# Fixed labels of the sub-streams derived from the master seed
WALK_STREAM = 0x57414C4B
DATA_STREAM = 0x44415441


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


@dataclass
class WalkState:
    """
    Single-owner walk state

    The walk consumes its own stream; every node owns a data stream derived
    from (seed, node), so the instance drawn on the k-th visit to a node does
    not depend on the horizon or on the rest of the trajectory.
    """

    current_node: int
    seed: int
    step_count: int = 0
    walk_rng: np.random.Generator = field(init=False, repr=False)
    _data_rngs: Dict[int, np.random.Generator] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.walk_rng = _stream(self.seed, WALK_STREAM)

    def data_rng(self, node: int) -> np.random.Generator:
        rng = self._data_rngs.get(node)
        if rng is None:
            rng = _stream(self.seed, DATA_STREAM, node)
            self._data_rngs[node] = rng
        return rng


def _next_node(cdf: np.ndarray, row: np.ndarray, u: float) -> int:
    idx = int(np.searchsorted(cdf, u, side="right"))
    if idx >= len(row):
        # u fell in the rounding gap above the last partial sum
        idx = int(np.flatnonzero(row)[-1])
    return idx


def walk_step(state: WalkState, p: TransitionMatrix) -> int:
    """Move to the next node by inverse-CDF sampling of row current_node"""
    if not (0 <= state.current_node < p.n):
        raise ChainError(f"node {state.current_node} outside 0..{p.n - 1}")
    row = p.rows[state.current_node]
    if np.any(row < 0.0) or abs(row.sum() - 1.0) > config.ROW_SUM_TOL:
        raise ChainError(f"row {state.current_node} is not a probability vector")
    node = _next_node(np.cumsum(row), row, state.walk_rng.random())
    state.current_node = node
    state.step_count += 1
    return node


def sample_instance(shard, state: WalkState, node: Optional[int] = None) -> int:
    """Uniform instance index in [0, n_v) from the data stream of the current node

    `shard` is a DatasetShard or its size n_v.
    """
    n_v = shard if isinstance(shard, (int, np.integer)) else shard.n_v
    if n_v < 1:
        raise ValueError("cannot sample from an empty shard")
    owner = state.current_node if node is None else node
    return int(state.data_rng(owner).integers(n_v))


def trajectory(p: TransitionMatrix, start: int, t: int, seed: int) -> np.ndarray:
    """First t visited nodes; identical to t successive walk_step calls"""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    state = WalkState(current_node=start, seed=seed)
    cdfs = np.cumsum(p.rows, axis=1)
    uniforms = state.walk_rng.random(t)
    nodes = np.empty(t, dtype=np.int64)
    cur = start
    for i in range(t):
        cur = _next_node(cdfs[cur], p.rows[cur], uniforms[i])
        nodes[i] = cur
    return nodes


def occupancy_histogram(p: TransitionMatrix, start: int, t: int, seed: int) -> np.ndarray:
    """Fraction of the first t steps spent at each node"""
    nodes = trajectory(p, start, t, seed)
    return np.bincount(nodes, minlength=p.n) / float(t)


def write_trajectory(nodes: Iterable[int], path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        for node in nodes:
            f.write(f"{int(node)}\n")
    return path
