"""
Network topologies and the transition matrices of the walk over them
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple

import networkx as nx
import numpy as np

import config

logger = logging.getLogger(__name__)

TOPOLOGIES = ("complete", "star", "erdos_renyi", "watts_strogatz")
WEIGHTINGS = ("metropolis", "simple_random_walk", "explicit")


class TopologyError(ValueError):
    """Invalid topology parameters or an unattainable connected graph"""


class ChainError(ValueError):
    """A transition matrix that violates the chain contract"""


@dataclass(frozen=True)
class Graph:
    """Undirected, connected network over nodes 0..n-1"""

    n: int
    edges: FrozenSet[Tuple[int, int]]
    topology: str = "custom"
    params: Tuple[float, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise TopologyError(f"node count must be positive, got {self.n}")
        for u, v in self.edges:
            if u == v:
                raise TopologyError(f"self-edge at node {u}")
            if not (0 <= u < v < self.n):
                raise TopologyError(f"edge ({u}, {v}) is not normalized to u < v < n")
        if self.n > 1 and not nx.is_connected(self.to_networkx()):
            raise TopologyError("graph is disconnected")

    @classmethod
    def from_networkx(cls, g: nx.Graph, topology: str = "custom",
                      params: Tuple[float, ...] = (), seed: int = 0) -> "Graph":
        edges = frozenset((min(u, v), max(u, v)) for u, v in g.edges() if u != v)
        return cls(n=g.number_of_nodes(), edges=edges, topology=topology,
                   params=params, seed=seed)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def neighbors(self) -> Dict[int, List[int]]:
        adj: Dict[int, List[int]] = {u: [] for u in range(self.n)}
        for u, v in sorted(self.edges):
            adj[u].append(v)
            adj[v].append(u)
        return adj


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix P with its provenance"""

    rows: np.ndarray
    weighting: str = "explicit"
    topology: str = "custom"

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
            raise ChainError(f"transition matrix must be square, got shape {rows.shape}")
        if np.any(rows < 0.0) or np.any(rows > 1.0):
            raise ChainError("transition probabilities must lie in [0, 1]")
        sums = rows.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > config.ROW_SUM_TOL)
        if bad.size:
            raise ChainError(f"row {bad[0]} sums to {sums[bad[0]]!r}, not 1")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.rows, self.rows.T))

    def respects(self, g: Graph) -> bool:
        """True when every positive off-diagonal entry is an edge of g"""
        for u, v in zip(*np.nonzero(self.rows)):
            if u != v and (min(u, v), max(u, v)) not in g.edges:
                return False
        return True


@dataclass(frozen=True)
class ChainValidation:
    irreducible: bool
    aperiodic: bool
    uniform_stationary: bool
    stationary: np.ndarray = field(repr=False)

    @property
    def ok(self) -> bool:
        return self.irreducible and self.aperiodic and self.uniform_stationary

    def to_dict(self) -> dict:
        return {
            "irreducible": self.irreducible,
            "aperiodic": self.aperiodic,
            "uniform_stationary": self.uniform_stationary,
            "stationary": [float(x) for x in self.stationary],
        }


# ============================================================================
# CONSTRUCTION
# ============================================================================

def _attempt_seed(seed: int, attempt: int) -> int:
    """Fresh, reproducible seed for the attempt-th resampling of a random graph"""
    state = np.random.SeedSequence([seed, attempt]).generate_state(1, dtype=np.uint32)
    return int(state[0])


def build_topology(
    kind: str,
    n: int,
    seed: int = 0,
    p: Optional[float] = None,
    k: Optional[int] = None,
    beta: Optional[float] = None,
) -> Graph:
    """
    Build a connected network of the requested topology

    Args:
        kind: one of complete, star, erdos_renyi, watts_strogatz
        n: node count (>= 2)
        seed: seed of the random topologies
        p: edge probability for erdos_renyi, in (0, 1]
        k: ring-lattice degree for watts_strogatz, even, 2 <= k < n
        beta: rewiring probability for watts_strogatz, in [0, 1]

    Returns:
        Graph over nodes 0..n-1; random kinds are resampled with fresh derived
        seeds until connected, at most CONNECT_RETRIES times

    Raises:
        TopologyError: invalid parameters or no connected sample in budget
    """
    if n < 2:
        raise TopologyError(f"a network needs at least 2 nodes, got {n}")

    if kind == "complete":
        return Graph.from_networkx(nx.complete_graph(n), topology=kind, seed=seed)
    if kind == "star":
        # star_graph(m) has hub 0 and leaves 1..m
        return Graph.from_networkx(nx.star_graph(n - 1), topology=kind, seed=seed)

    if kind == "erdos_renyi":
        if p is None or not (0.0 < p <= 1.0):
            raise TopologyError(f"erdos_renyi needs p in (0, 1], got {p}")
        params: Tuple[float, ...] = (float(p),)

        def sample(s):
            return nx.erdos_renyi_graph(n, p, seed=s)
    elif kind == "watts_strogatz":
        if k is None or k % 2 or not (2 <= k < n):
            raise TopologyError(f"watts_strogatz needs even k with 2 <= k < n, got k={k}, n={n}")
        if beta is None or not (0.0 <= beta <= 1.0):
            raise TopologyError(f"watts_strogatz needs beta in [0, 1], got {beta}")
        params = (float(k), float(beta))

        def sample(s):
            # rewiring that would duplicate an edge or create a self-edge is redrawn
            return nx.watts_strogatz_graph(n, k, beta, seed=s)
    else:
        raise TopologyError(f"unknown topology '{kind}', expected one of {TOPOLOGIES}")

    for attempt in range(config.CONNECT_RETRIES):
        g = sample(_attempt_seed(seed, attempt))
        if nx.is_connected(g):
            if attempt:
                logger.info("%s graph connected after %d resamples", kind, attempt)
            return Graph.from_networkx(g, topology=kind, params=params, seed=seed)

    raise TopologyError(
        f"no connected {kind} graph with n={n} after {config.CONNECT_RETRIES} samples"
    )


def _require_connected(g: Graph):
    if g.n > 1 and not nx.is_connected(g.to_networkx()):
        raise ChainError("transition matrices need a connected graph")


def metropolis_transition(g: Graph) -> TransitionMatrix:
    """Max-degree Metropolis weighting: symmetric, hence uniform pi*"""
    _require_connected(g)
    deg = g.degrees()
    rows = np.zeros((g.n, g.n))
    for u, v in g.edges:
        w = 1.0 / max(deg[u], deg[v])
        rows[u, v] = w
        rows[v, u] = w
    off = rows.sum(axis=1)
    rows[np.diag_indices(g.n)] = 1.0 - off
    # cancellation can leave -0.0 or a few ulps below zero on the diagonal
    rows[np.diag_indices(g.n)] = np.clip(np.diag(rows), 0.0, 1.0)
    return TransitionMatrix(rows=rows, weighting="metropolis", topology=g.topology)


def simple_rw_transition(g: Graph) -> TransitionMatrix:
    """Uniform choice among neighbours; uniform pi* only on regular graphs"""
    _require_connected(g)
    if g.n == 1:
        return TransitionMatrix(rows=np.ones((1, 1)), weighting="simple_random_walk",
                                topology=g.topology)
    rows = np.zeros((g.n, g.n))
    for u, nbrs in g.neighbors().items():
        rows[u, nbrs] = 1.0 / len(nbrs)
    return TransitionMatrix(rows=rows, weighting="simple_random_walk", topology=g.topology)


def transition_for(g: Graph, weighting: str = "metropolis") -> TransitionMatrix:
    if weighting == "metropolis":
        return metropolis_transition(g)
    if weighting in ("simple", "simple_random_walk"):
        return simple_rw_transition(g)
    raise ChainError(f"unknown weighting '{weighting}'")


# ============================================================================
# VALIDATION
# ============================================================================

def _support_digraph(p: TransitionMatrix) -> nx.DiGraph:
    d = nx.DiGraph()
    d.add_nodes_from(range(p.n))
    d.add_edges_from(zip(*np.nonzero(p.rows)))
    return d


def stationary_distribution(p: TransitionMatrix) -> np.ndarray:
    """
    Stationary distribution by lazy power iteration pi <- pi (I + P) / 2

    The lazy chain shares pi* with P and converges for periodic chains too.
    """
    pi = np.full(p.n, 1.0 / p.n)
    for _ in range(config.POWER_ITER_MAX):
        nxt = 0.5 * (pi + pi @ p.rows)
        if np.max(np.abs(nxt - pi)) < config.POWER_ITER_TOL:
            return nxt / nxt.sum()
        pi = nxt
    logger.warning("power iteration hit %d iterations without converging", config.POWER_ITER_MAX)
    return pi / pi.sum()


def validate_chain(p: TransitionMatrix) -> ChainValidation:
    """Irreducibility, aperiodicity and uniformity of pi* as pass/fail flags"""
    d = _support_digraph(p)
    irreducible = nx.is_strongly_connected(d)
    # gcd of cycle lengths; only meaningful on a single communicating class
    aperiodic = bool(irreducible and nx.is_aperiodic(d))
    pi = stationary_distribution(p)
    uniform = bool(np.max(np.abs(pi - 1.0 / p.n)) <= config.UNIFORM_TOL)
    return ChainValidation(irreducible=irreducible, aperiodic=aperiodic,
                           uniform_stationary=uniform, stationary=pi)


# ============================================================================
# SERIALIZATION
# ============================================================================

def write_edgelist(g: Graph, path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        f.write(f"{g.n}\n")
        for u, v in sorted(g.edges):
            f.write(f"{u} {v}\n")
    return path


def read_edgelist(path) -> Graph:
    lines = [ln.split() for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise TopologyError(f"{path}: empty edge list")
    n = int(lines[0][0])
    edges = set()
    for lineno, parts in enumerate(lines[1:], start=2):
        if len(parts) != 2:
            raise TopologyError(f"{path}:{lineno}: expected 'u v'")
        u, v = int(parts[0]), int(parts[1])
        edges.add((min(u, v), max(u, v)))
    return Graph(n=n, edges=frozenset(edges))


def write_transition_csv(p: TransitionMatrix, path) -> Path:
    path = Path(path)
    np.savetxt(path, p.rows, delimiter=",", fmt="%.17g")
    return path


def read_transition_csv(path, weighting: str = "explicit") -> TransitionMatrix:
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    return TransitionMatrix(rows=rows, weighting=weighting)
