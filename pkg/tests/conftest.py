import numpy as np
import pytest

from network import Graph, TransitionMatrix, build_topology, transition_for
from optim import DatasetShard, LossSpec, MirrorMap, ScheduleSpec


def random_shards(n: int, d: int, rows: int, seed: int = 0, binary: bool = True):
    """n shards of `rows` instances with features in [-1, 1]"""
    rng = np.random.default_rng(seed)
    shards = []
    for _ in range(n):
        a = rng.uniform(-1.0, 1.0, size=(rows, d))
        if binary:
            y = np.where(rng.random(rows) < 0.5, -1.0, 1.0)
        else:
            y = rng.normal(size=rows)
        shards.append(DatasetShard(features=a, labels=y))
    return shards


def single_node(features, labels):
    """One-node federation: the walk never leaves node 0"""
    graph = Graph(n=1, edges=frozenset())
    transition = TransitionMatrix(rows=np.ones((1, 1)))
    shard = DatasetShard(features=np.asarray(features, dtype=float), labels=np.asarray(labels, dtype=float))
    return graph, transition, [shard]


@pytest.fixture
def complete5():
    graph = build_topology("complete", 5)
    return graph, transition_for(graph, "metropolis")


@pytest.fixture
def lsq_federation(complete5):
    graph, transition = complete5
    shards = random_shards(5, 3, 40, seed=11, binary=False)
    loss = LossSpec.for_shards("least_squares", shards)
    return graph, transition, shards, loss


@pytest.fixture
def euclidean():
    return MirrorMap.squared_euclidean()


@pytest.fixture
def entropy():
    return MirrorMap.negative_entropy()


@pytest.fixture
def sqrt_schedule():
    return ScheduleSpec(kind="marchon", coefficient=0.1)
