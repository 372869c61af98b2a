"""
Right-hand sides of the regret and gradient-norm guarantees, as diagnostics
"""

from typing import Sequence

import numpy as np

from .schedules import DerivedConstants, ScheduleError


def _require_cp(dc: DerivedConstants) -> float:
    if dc.c_p is None:
        raise ScheduleError("bounds need C_P, which a non-diagonalizable chain does not provide")
    return dc.c_p


def _shared_terms(dc: DerivedConstants, etas: np.ndarray, f_gap: float) -> float:
    """The four groups common to the convex and strongly convex bounds"""
    c_p = _require_cp(dc)
    mu = dc.mu_phi
    th = dc.tau_hat
    horizon = etas.shape[0]

    total = dc.c5 * etas.sum()
    total += 3.0 * dc.G ** 2 / mu * etas[:th].sum()
    total += 3.0 * f_gap / mu

    # prefix[k] = sum of eta_j^2 for j = 1..k
    prefix = np.concatenate(([0.0], np.cumsum(etas ** 2)))
    late = np.arange(th + 1, horizon + 1)
    if late.size:
        window = prefix[late - 1] - prefix[late - th - 1]
        eta_late = etas[late - 1]
        total += float(np.sum(
            3.0 * dc.c1 * th / mu * window
            + 3.0 * (dc.c2 + dc.c3 * th) * eta_late ** 2 / mu
            + 3.0 * dc.c4 * c_p * dc.rho ** th * eta_late / mu
        ))
    return float(total)


def convex_regret_bound(dc: DerivedConstants, etas: Sequence[float], r_sq: float, f_gap: float) -> float:
    etas = np.asarray(etas, dtype=float)
    if etas.size == 0 or np.any(etas <= 0.0):
        raise ValueError("step sizes must be a nonempty positive sequence")
    return _shared_terms(dc, etas, f_gap) + r_sq / etas[-1]


def strongly_convex_regret_bound(
    dc: DerivedConstants, etas: Sequence[float], r_sq: float, f_gap: float, mu_f: float
) -> float:
    etas = np.asarray(etas, dtype=float)
    if etas.size == 0 or np.any(etas <= 0.0):
        raise ValueError("step sizes must be a nonempty positive sequence")
    inv = 1.0 / etas
    drift = float(np.sum(inv[1:] - inv[:-1] - mu_f / dc.mu_phi))
    return _shared_terms(dc, etas, f_gap) + dc.mu_phi * r_sq / 2.0 * drift + r_sq / etas[0]


def nonconvex_gradient_bound(dc: DerivedConstants, eta: float, horizon: int, f_gap: float) -> float:
    """Bound on the sum over t of E||grad f(x_t)||^2 for a constant step eta"""
    c_p = _require_cp(dc)
    if eta <= 0.0:
        raise ValueError(f"step size must be positive, got {eta}")
    th = dc.tau_hat
    per_step = dc.c1 * th * th * eta + (dc.c2 + dc.c3 * th) * eta + dc.c4 * c_p * dc.rho ** th
    return dc.G ** 2 * th + f_gap / eta + per_step * (horizon - th)
