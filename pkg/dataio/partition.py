"""
Split a dataset across the nodes of the federation
"""

import logging
from typing import List, Optional

import numpy as np

from optim.losses import DatasetShard
from .libsvm import RawDataset

logger = logging.getLogger(__name__)

STRATEGIES = ("uniform_random", "label_skewed", "contiguous")


def _largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    """Integer counts summing to total, proportional to weights"""
    if total == 0:
        return np.zeros(weights.shape[0], dtype=int)
    exact = weights / weights.sum() * total
    counts = np.floor(exact).astype(int)
    short = total - counts.sum()
    # ties broken by position so the result is deterministic
    order = np.lexsort((np.arange(weights.shape[0]), -(exact - counts)))
    counts[order[:short]] += 1
    return counts


def _label_skewed(ds: RawDataset, n: int, alpha: float, rng: np.random.Generator) -> List[np.ndarray]:
    classes = np.unique(ds.labels)
    # per-node label proportions, scaled so each class is fully assigned
    props = rng.dirichlet(np.full(classes.size, alpha), size=n)
    members: List[List[int]] = [[] for _ in range(n)]
    for c, label in enumerate(classes):
        rows = rng.permutation(np.flatnonzero(ds.labels == label))
        counts = _largest_remainder(props[:, c], rows.size)
        start = 0
        for v in range(n):
            members[v].extend(rows[start:start + counts[v]].tolist())
            start += counts[v]
    return [np.sort(np.asarray(m, dtype=int)) for m in members]


def _fill_empty(assignment: List[np.ndarray]) -> List[np.ndarray]:
    """Move one row from the largest shard into every empty one"""
    assignment = [a.copy() for a in assignment]
    for v in range(len(assignment)):
        if assignment[v].size:
            continue
        donor = int(np.argmax([a.size for a in assignment]))
        moved = assignment[donor][-1]
        assignment[donor] = assignment[donor][:-1]
        assignment[v] = np.array([moved])
        logger.warning("node %d received no rows; moved row %d from node %d", v, moved, donor)
    return assignment


def assign_rows(ds: RawDataset, n: int, strategy: str = "uniform_random",
                seed: int = 0, alpha: Optional[float] = None) -> List[np.ndarray]:
    """Row indices owned by each node"""
    if n < 1:
        raise ValueError(f"node count must be positive, got {n}")
    if n > ds.n_rows:
        raise ValueError(f"cannot split {ds.n_rows} rows over {n} nodes")
    rng = np.random.default_rng(seed)

    if strategy == "contiguous":
        assignment = np.array_split(np.arange(ds.n_rows), n)
    elif strategy == "uniform_random":
        perm = rng.permutation(ds.n_rows)
        assignment = [perm[v::n] for v in range(n)]
    elif strategy == "label_skewed":
        if alpha is None or alpha <= 0.0:
            raise ValueError(f"label_skewed needs alpha > 0, got {alpha}")
        assignment = _label_skewed(ds, n, alpha, rng)
    else:
        raise ValueError(f"unknown partition strategy '{strategy}', expected one of {STRATEGIES}")

    return _fill_empty(list(assignment))


def partition(ds: RawDataset, n: int, strategy: str = "uniform_random",
              seed: int = 0, alpha: Optional[float] = None) -> List[DatasetShard]:
    """
    One DatasetShard per node

    uniform_random shuffles and deals round-robin, contiguous slices in file
    order, label_skewed draws each node's label mix from Dirichlet(alpha).
    Every row lands in exactly one shard and no shard is empty.
    """
    return [DatasetShard(features=ds.features[rows], labels=ds.labels[rows])
            for rows in assign_rows(ds, n, strategy, seed, alpha)]
