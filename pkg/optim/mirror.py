"""
Mirror maps, Bregman divergences and the constrained mirror step
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import rel_entr, softmax

import config

MIRROR_KINDS = ("squared_euclidean", "negative_entropy")


class DomainError(ValueError):
    """A point outside the domain of a mirror map"""


@dataclass(frozen=True)
class MirrorMap:
    """Distance-generating function Phi with its modulus and domain"""

    kind: str
    mu_phi: float
    domain: str

    @classmethod
    def squared_euclidean(cls) -> "MirrorMap":
        return cls(kind="squared_euclidean", mu_phi=1.0, domain="all_of_Rd")

    @classmethod
    def negative_entropy(cls) -> "MirrorMap":
        # 1-strongly convex w.r.t. the l1 norm on the simplex (Pinsker)
        return cls(kind="negative_entropy", mu_phi=1.0, domain="probability_simplex")

    @classmethod
    def named(cls, name: str) -> "MirrorMap":
        if name in ("euclidean", "squared_euclidean"):
            return cls.squared_euclidean()
        if name in ("entropy", "negative_entropy"):
            return cls.negative_entropy()
        raise ValueError(f"unknown mirror map '{name}', expected one of {MIRROR_KINDS}")

    @property
    def on_simplex(self) -> bool:
        return self.domain == "probability_simplex"

    def check(self, x: np.ndarray, strictly_positive: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DomainError("point has non-finite entries")
        if self.on_simplex:
            if strictly_positive and np.any(x <= 0.0):
                raise DomainError("negative entropy needs strictly positive entries here")
            if np.any(x < 0.0):
                raise DomainError("simplex point has negative entries")
            if abs(x.sum() - 1.0) > config.SIMPLEX_SUM_TOL:
                raise DomainError(f"simplex point sums to {x.sum()!r}")
        return x

    def phi(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if self.kind == "squared_euclidean":
            return 0.5 * float(x @ x)
        return float(np.sum(rel_entr(x, 1.0)))

    def grad_phi(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "squared_euclidean":
            return x.copy()
        return np.log(np.maximum(x, config.ENTROPY_FLOOR)) + 1.0


def _same_shape(u: np.ndarray, v: np.ndarray):
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")


def bregman(mirror: MirrorMap, u, v) -> float:
    """B_Phi(u, v) = Phi(u) - Phi(v) - <grad Phi(v), u - v>"""
    u = mirror.check(u)
    v = mirror.check(v, strictly_positive=True)
    _same_shape(u, v)
    if mirror.kind == "squared_euclidean":
        d = u - v
        return 0.5 * float(d @ d)
    # on the simplex the divergence is KL(u || v); the mass terms cancel
    return float(np.sum(rel_entr(u, v)) - u.sum() + v.sum())


def mirror_step(mirror: MirrorMap, x, g, eta: float) -> np.ndarray:
    """
    Unconstrained argmin of <g, z - x> + B_Phi(z, x) / eta

    Euclidean: x - eta g. Entropy: multiplicative weights x_i exp(-eta g_i)
    renormalized onto the simplex.
    """
    if eta <= 0.0:
        raise ValueError(f"step size must be positive, got {eta}")
    x = mirror.check(x)
    g = np.asarray(g, dtype=float)
    _same_shape(x, g)
    if mirror.kind == "squared_euclidean":
        return x - eta * g
    logits = np.log(np.maximum(x, config.ENTROPY_FLOOR)) - eta * g
    return softmax(logits)


def decaying_set_project(candidate, x, g, eta: float) -> np.ndarray:
    """
    Euclidean projection onto the decaying set

    The set is the ball centred at x - eta g with radius eta^2 ||g||^2.
    """
    if eta <= 0.0:
        raise ValueError(f"step size must be positive, got {eta}")
    candidate = np.asarray(candidate, dtype=float)
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    center = x - eta * g
    radius = eta * eta * float(g @ g)
    offset = candidate - center
    dist = float(np.linalg.norm(offset))
    if dist <= radius:
        return candidate
    return center + offset * (radius / dist)


def simplex_project(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)"""
    v = np.asarray(v, dtype=float)
    if np.all(v >= 0.0) and v.sum() == 1.0:
        return v
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    k = np.nonzero(u - cssv / ind > 0)[0][-1]
    theta = cssv[k] / (k + 1.0)
    return np.maximum(v - theta, 0.0)


def constrained_step(mirror: MirrorMap, x, g, eta: float) -> np.ndarray:
    """mirror_step, then the decaying-set projection, then back onto the map's domain"""
    candidate = mirror_step(mirror, x, g, eta)
    out = decaying_set_project(candidate, x, g, eta)
    if mirror.on_simplex:
        # non-expansive, so the displacement bound survives
        out = simplex_project(out)
    return out


def mirror_objective(mirror: MirrorMap, z, x, g, eta: float) -> float:
    """<g, z - x> + B_Phi(z, x) / eta, the objective the mirror step minimizes"""
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    return float(np.asarray(g) @ (z - x)) + bregman(mirror, z, x) / eta
