"""
Loss families over a node's local data, constant estimation and the
reference-optimum oracle
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

import config
from .mirror import simplex_project

logger = logging.getLogger(__name__)

LOSS_KINDS = (
    "logistic_log",
    "logistic_literal",
    "ridge_logistic",
    "least_squares",
    "smooth_nonconvex",
)

# command-line spellings
LOSS_ALIASES = {
    "logistic": "logistic_log",
    "logistic-literal": "logistic_literal",
    "ridge": "ridge_logistic",
    "lsq": "least_squares",
    "nonconvex": "smooth_nonconvex",
}

LOGISTIC_KINDS = ("logistic_log", "logistic_literal", "ridge_logistic", "smooth_nonconvex")
CONVEX_KINDS = ("logistic_log", "logistic_literal", "ridge_logistic", "least_squares")


class OptimumError(RuntimeError):
    """The reference-optimum solver did not reach its gradient tolerance"""


def canonical_loss(name: str) -> str:
    kind = LOSS_ALIASES.get(name, name)
    if kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss '{name}', expected one of {LOSS_KINDS}")
    return kind


@dataclass(frozen=True)
class DatasetShard:
    """Local data D_v of one node: n_v instances a with labels y"""

    features: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.features, dtype=float, ndmin=2)
        y = np.array(self.labels, dtype=float).reshape(-1)
        if a.shape[0] != y.shape[0]:
            raise ValueError(f"{a.shape[0]} feature rows but {y.shape[0]} labels")
        if a.shape[0] < 1:
            raise ValueError("a shard needs at least one instance")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(y))):
            raise ValueError("shard holds non-finite values")
        if np.any(np.abs(a) > 1.0 + 1e-12):
            raise ValueError("features must be normalized to [-1, 1]")
        a.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", a)
        object.__setattr__(self, "labels", y)

    @property
    def n_v(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def has_binary_labels(self) -> bool:
        return bool(np.all(np.isin(self.labels, (-1.0, 1.0))))


@dataclass(frozen=True)
class LossSpec:
    """
    Loss family with its analytic constants

    lam is the ridge weight for ridge_logistic and the weight of the
    sum x_i^2 / (1 + x_i^2) regularizer for smooth_nonconvex.
    """

    kind: str
    smoothness_L: float
    strong_convexity_mu_f: float
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind '{self.kind}'")
        if self.kind in ("ridge_logistic", "smooth_nonconvex") and not self.lam > 0.0:
            raise ValueError(f"{self.kind} needs a positive lambda, got {self.lam}")
        if self.smoothness_L <= 0.0 or self.strong_convexity_mu_f < 0.0:
            raise ValueError("L must be positive and mu_f nonnegative")

    @property
    def convex(self) -> bool:
        return self.kind in CONVEX_KINDS

    @property
    def needs_binary_labels(self) -> bool:
        return self.kind in LOGISTIC_KINDS

    @classmethod
    def for_shards(cls, kind: str, shards: Sequence[DatasetShard], lam: Optional[float] = None) -> "LossSpec":
        """Loss spec with L and mu_f computed from the data"""
        kind = canonical_loss(kind)
        _check_dims(shards)
        max_sq = max(float(np.max(np.einsum("ij,ij->i", s.features, s.features))) for s in shards)
        # an all-zero dataset still needs a positive L
        max_sq = max(max_sq, np.finfo(float).tiny)
        lam = float(lam) if lam is not None else 0.0

        if kind == "logistic_log":
            return cls(kind, max_sq / 4.0, 0.0)
        if kind == "logistic_literal":
            # exp(-z) has no global Lipschitz gradient; bound it on the ball of radius r
            r = config.LITERAL_LOSS_RADIUS
            return cls(kind, max_sq * float(np.exp(r * np.sqrt(max_sq))), 0.0)
        if kind == "ridge_logistic":
            return cls(kind, max_sq / 4.0 + lam, lam, lam)
        if kind == "smooth_nonconvex":
            return cls(kind, max_sq / 4.0 + 2.0 * lam, 0.0, lam)

        moment = np.mean([s.features.T @ s.features / s.n_v for s in shards], axis=0)
        mu_f = max(float(np.linalg.eigvalsh(moment)[0]), 0.0)
        return cls(kind, max_sq, mu_f)


@dataclass(frozen=True)
class ConstantsEstimate:
    G: float
    L: float
    sigma_v_sq: float
    sigma_V_sq: float
    R_sq: float

    def to_dict(self) -> dict:
        return {
            "G": self.G,
            "L": self.L,
            "sigma_v_sq": self.sigma_v_sq,
            "sigma_V_sq": self.sigma_V_sq,
            "R_sq": self.R_sq,
        }


# ============================================================================
# PER-INSTANCE PIECES
# ============================================================================

def _check_dims(shards: Sequence[DatasetShard]) -> int:
    if not shards:
        raise ValueError("no shards given")
    d = shards[0].d
    for i, s in enumerate(shards):
        if s.d != d:
            raise ValueError(f"shard {i} has dimension {s.d}, expected {d}")
    return d


def _check_x(shard: DatasetShard, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != shard.d:
        raise ValueError(f"model dimension {x.shape[0]} does not match feature dimension {shard.d}")
    return x


def _margin_loss(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "logistic_literal":
        return 1.0 + np.exp(-z)
    return np.logaddexp(0.0, -z)


def _margin_slope(kind: str, z: np.ndarray) -> np.ndarray:
    """d loss / dz"""
    if kind == "logistic_literal":
        return -np.exp(-z)
    return -expit(-z)


def _margin_curvature(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "logistic_literal":
        return np.exp(-z)
    return expit(z) * expit(-z)


def _regularizer(spec: LossSpec, x: np.ndarray) -> float:
    if spec.kind == "ridge_logistic":
        return 0.5 * spec.lam * float(x @ x)
    if spec.kind == "smooth_nonconvex":
        sq = x * x
        return spec.lam * float(np.sum(sq / (1.0 + sq)))
    return 0.0


def _regularizer_grad(spec: LossSpec, x: np.ndarray) -> np.ndarray:
    if spec.kind == "ridge_logistic":
        return spec.lam * x
    if spec.kind == "smooth_nonconvex":
        return spec.lam * 2.0 * x / (1.0 + x * x) ** 2
    return np.zeros_like(x)


def _regularizer_hess_diag(spec: LossSpec, x: np.ndarray) -> np.ndarray:
    if spec.kind == "ridge_logistic":
        return np.full_like(x, spec.lam)
    if spec.kind == "smooth_nonconvex":
        sq = x * x
        return spec.lam * (2.0 - 6.0 * sq) / (1.0 + sq) ** 3
    return np.zeros_like(x)


def instance_losses(spec: LossSpec, shard: DatasetShard, x) -> np.ndarray:
    """Loss of every instance of the shard at x"""
    x = _check_x(shard, x)
    pred = shard.features @ x
    if spec.kind == "least_squares":
        return 0.5 * (pred - shard.labels) ** 2
    return _margin_loss(spec.kind, shard.labels * pred) + _regularizer(spec, x)


def instance_grads(spec: LossSpec, shard: DatasetShard, x) -> np.ndarray:
    """Gradient of every instance loss at x, one row per instance"""
    x = _check_x(shard, x)
    a, y = shard.features, shard.labels
    pred = a @ x
    if spec.kind == "least_squares":
        return (pred - y)[:, None] * a
    coef = _margin_slope(spec.kind, y * pred) * y
    return coef[:, None] * a + _regularizer_grad(spec, x)[None, :]


# ============================================================================
# LOCAL AND GLOBAL OBJECTIVE
# ============================================================================

def local_loss(spec: LossSpec, shard: DatasetShard, x) -> float:
    """f_v(x) = (1/n_v) sum of instance losses"""
    return float(np.mean(instance_losses(spec, shard, x)))


def local_grad(spec: LossSpec, shard: DatasetShard, x) -> np.ndarray:
    return instance_grads(spec, shard, x).mean(axis=0)


def stochastic_grad(spec: LossSpec, shard: DatasetShard, x, index: int) -> np.ndarray:
    """Exact gradient of the loss of instance `index` at x"""
    if not (0 <= index < shard.n_v):
        raise IndexError(f"instance {index} outside 0..{shard.n_v - 1}")
    x = _check_x(shard, x)
    a = shard.features[index]
    y = shard.labels[index]
    pred = float(a @ x)
    if spec.kind == "least_squares":
        return (pred - y) * a
    coef = float(_margin_slope(spec.kind, np.array(y * pred))) * y
    return coef * a + _regularizer_grad(spec, x)


def global_loss_and_grad(spec: LossSpec, shards: Sequence[DatasetShard], x) -> Tuple[float, np.ndarray]:
    """Node average of the local losses and gradients (not instance weighted)"""
    _check_dims(shards)
    losses = [local_loss(spec, s, x) for s in shards]
    grads = [local_grad(spec, s, x) for s in shards]
    return float(np.mean(losses)), np.mean(grads, axis=0)


class StackedObjective:
    """
    Global objective over all shards stacked into one array

    Each instance carries weight 1 / (n n_v), so the weighted sum is the
    node average of global_loss_and_grad evaluated in a single pass.
    """

    def __init__(self, spec: LossSpec, shards: Sequence[DatasetShard]):
        _check_dims(shards)
        self.spec = spec
        self.n = len(shards)
        self._all = DatasetShard(
            features=np.vstack([s.features for s in shards]),
            labels=np.concatenate([s.labels for s in shards]),
        )
        self._weights = np.concatenate([np.full(s.n_v, 1.0 / (self.n * s.n_v)) for s in shards])

    def loss(self, x) -> float:
        return float(self._weights @ instance_losses(self.spec, self._all, x))

    def loss_and_grad(self, x) -> Tuple[float, np.ndarray]:
        losses = instance_losses(self.spec, self._all, x)
        grads = instance_grads(self.spec, self._all, x)
        return float(self._weights @ losses), self._weights @ grads


def local_hessian(spec: LossSpec, shard: DatasetShard, x) -> np.ndarray:
    x = _check_x(shard, x)
    a, y = shard.features, shard.labels
    if spec.kind == "least_squares":
        return a.T @ a / shard.n_v
    w = _margin_curvature(spec.kind, y * (a @ x))
    return (a.T * w) @ a / shard.n_v + np.diag(_regularizer_hess_diag(spec, x))


def global_hessian(spec: LossSpec, shards: Sequence[DatasetShard], x) -> np.ndarray:
    _check_dims(shards)
    return np.mean([local_hessian(spec, s, x) for s in shards], axis=0)


# ============================================================================
# CONSTANTS
# ============================================================================

def estimate_constants(
    spec: LossSpec,
    shards: Sequence[DatasetShard],
    probe_points: Sequence,
    seed: int = 0,
    max_instances: Optional[int] = None,
) -> ConstantsEstimate:
    """
    Empirical G, sigma_v^2, sigma_V^2 and R^2 over a set of probe points

    G is the largest gradient norm seen (instances and node gradients),
    sigma_v^2 the largest within-shard gradient variance, sigma_V^2 the
    largest across-node variance of grad f_v about grad f. Shards larger
    than max_instances are subsampled with a generator seeded by `seed`.
    """
    if len(probe_points) < 1:
        raise ValueError("estimate_constants needs at least one probe point")
    _check_dims(shards)
    probes = [np.asarray(p, dtype=float).reshape(-1) for p in probe_points]

    rng = np.random.default_rng(seed)
    subsets = []
    for s in shards:
        if max_instances is not None and s.n_v > max_instances:
            subsets.append(np.sort(rng.choice(s.n_v, size=max_instances, replace=False)))
        else:
            subsets.append(None)

    g_max = 0.0
    sigma_v_sq = 0.0
    sigma_V_sq = 0.0
    for x in probes:
        node_grads = []
        for s, idx in zip(shards, subsets):
            grads = instance_grads(spec, s, x)
            if idx is not None:
                grads = grads[idx]
            mean = grads.mean(axis=0)
            node_grads.append(mean)
            norms_sq = np.einsum("ij,ij->i", grads, grads)
            g_max = max(g_max, float(np.sqrt(norms_sq.max())), float(np.linalg.norm(mean)))
            dev = grads - mean
            sigma_v_sq = max(sigma_v_sq, float(np.mean(np.einsum("ij,ij->i", dev, dev))))
        node_grads = np.asarray(node_grads)
        dev = node_grads - node_grads.mean(axis=0)
        sigma_V_sq = max(sigma_V_sq, float(np.mean(np.einsum("ij,ij->i", dev, dev))))

    r_sq = 0.0
    for i in range(len(probes)):
        for j in range(i + 1, len(probes)):
            diff = probes[i] - probes[j]
            r_sq = max(r_sq, float(diff @ diff))

    return ConstantsEstimate(
        G=g_max,
        L=spec.smoothness_L,
        sigma_v_sq=sigma_v_sq,
        sigma_V_sq=sigma_V_sq,
        R_sq=r_sq,
    )


# ============================================================================
# REFERENCE OPTIMUM
# ============================================================================

def _descent_direction(spec: LossSpec, shards, x, grad) -> np.ndarray:
    hess = global_hessian(spec, shards, x)
    try:
        # Cholesky succeeds only on a positive definite Hessian
        np.linalg.cholesky(hess)
        return -np.linalg.solve(hess, grad)
    except np.linalg.LinAlgError:
        return -grad


def reference_optimum(
    spec: LossSpec,
    shards: Sequence[DatasetShard],
    tolerance: float = config.XSTAR_TOL,
    max_iter: int = config.XSTAR_MAX_ITER,
    x0=None,
) -> Tuple[np.ndarray, float]:
    """
    Deterministic full-gradient solve for (x*, f(x*)) to ||grad f|| <= tolerance

    Newton directions are used while the Hessian is positive definite,
    gradient directions otherwise, with Armijo backtracking. For
    least_squares the normal equations are also solved and the better of the
    two points is returned.

    Raises:
        OptimumError: the gradient tolerance was not reached within max_iter
    """
    d = _check_dims(shards)
    x = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float).copy()
    f, g = global_loss_and_grad(spec, shards, x)

    converged = float(np.linalg.norm(g)) <= tolerance
    it = 0
    while not converged and it < max_iter:
        it += 1
        direction = _descent_direction(spec, shards, x, g)
        slope = float(g @ direction)
        if slope >= 0.0:
            direction, slope = -g, -float(g @ g)
        step = 1.0
        while True:
            cand = x + step * direction
            f_new, g_new = global_loss_and_grad(spec, shards, cand)
            if f_new <= f + 1e-4 * step * slope:
                break
            # below rounding of f, accept a step that shrinks the gradient
            if step < 1e-12 or (step == 1.0 and np.linalg.norm(g_new) < 0.5 * np.linalg.norm(g)
                                and abs(f_new - f) <= 1e-12 * max(1.0, abs(f))):
                break
            step *= 0.5
        x, f, g = cand, f_new, g_new
        converged = float(np.linalg.norm(g)) <= tolerance

    if spec.kind == "least_squares":
        a = np.vstack([s.features / np.sqrt(s.n_v) for s in shards])
        b = np.concatenate([s.labels / np.sqrt(s.n_v) for s in shards])
        x_ls = np.linalg.lstsq(a, b, rcond=None)[0]
        f_ls, g_ls = global_loss_and_grad(spec, shards, x_ls)
        if f_ls <= f or not converged:
            x, f, g = x_ls, f_ls, g_ls
            converged = converged or float(np.linalg.norm(g)) <= tolerance

    if not converged:
        raise OptimumError(
            f"gradient norm {np.linalg.norm(g):.3e} above {tolerance:.1e} after {max_iter} iterations"
        )
    logger.debug("reference optimum after %d iterations, f*=%.17g", it, f)
    return x, float(f)


def simplex_optimum(
    spec: LossSpec,
    shards: Sequence[DatasetShard],
    tolerance: float = config.XSTAR_TOL,
    max_iter: int = config.XSTAR_MAX_ITER,
) -> Tuple[np.ndarray, float]:
    """
    Minimizer of f over the probability simplex (SLSQP)

    Convergence is judged by the projected-gradient residual
    ||x - P_simplex(x - grad f(x))||.

    Raises:
        OptimumError: SLSQP failed or the residual stayed above sqrt(tolerance)
    """
    d = _check_dims(shards)
    objective = StackedObjective(spec, shards)
    res = minimize(
        objective.loss_and_grad,
        np.full(d, 1.0 / d),
        jac=True,
        method="SLSQP",
        bounds=[(0.0, 1.0)] * d,
        constraints=[{"type": "eq", "fun": lambda z: z.sum() - 1.0, "jac": lambda z: np.ones_like(z)}],
        options={"ftol": 1e-15, "maxiter": max_iter},
    )
    x = simplex_project(np.clip(res.x, 0.0, None))
    f, g = objective.loss_and_grad(x)
    residual = float(np.linalg.norm(x - simplex_project(x - g)))
    # SLSQP stalls well above 1e-10 on flat faces; sqrt(tol) is what it reliably reaches
    if residual > np.sqrt(tolerance):
        raise OptimumError(f"simplex solve failed: {res.message} (residual {residual:.3e})")
    return x, f
