"""
Step-size policies and the derived constants C0-C5
"""

import logging
import math
import threading
from dataclasses import asdict, dataclass
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .losses import ConstantsEstimate

logger = logging.getLogger(__name__)

SCHEDULE_KINDS = (
    "marchon",
    "marchon_convex",
    "marchon_strongly_convex",
    "marchon_nonconvex",
    "mcgd",
    "markov_sgd",
    "mcsgd_emd",
    "constant",
)
THEORETICAL_KINDS = ("marchon_convex", "marchon_strongly_convex", "marchon_nonconvex")

_clamp_warned = set()
_clamp_lock = threading.Lock()


class ScheduleError(ValueError):
    """A schedule that cannot produce a positive step"""


@dataclass(frozen=True)
class DerivedConstants:
    """Inputs and the derived constants of the convergence analysis"""

    G: float
    L: float
    sigma_v_sq: float
    sigma_V_sq: float
    rho: float
    c_p: Optional[float]
    tau: int
    mu_phi: float
    horizon_T: int
    c0: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    tau_hat: int

    @property
    def mixing_term(self) -> Optional[float]:
        """C5 + C_P rho^tau, the denominator of the convex schedules"""
        if self.c_p is None:
            return None
        return self.c5 + self.c_p * self.rho ** self.tau

    def recompute(self) -> "DerivedConstants":
        return _derive(self.G, self.L, self.sigma_v_sq, self.sigma_V_sq, self.rho,
                       self.c_p, self.tau, self.mu_phi, self.horizon_T)

    def to_dict(self) -> dict:
        return asdict(self)


def _derive(g, l, sv, sV, rho, c_p, tau, mu_phi, horizon_T) -> DerivedConstants:
    if not (0.0 < rho < 1.0):
        raise ScheduleError(f"rho must lie in (0, 1) for the chain to mix, got {rho}")
    if mu_phi <= 0.0:
        raise ScheduleError(f"mu_phi must be positive, got {mu_phi}")
    if horizon_T < 1:
        raise ScheduleError(f"horizon must be >= 1, got {horizon_T}")
    if tau < 0:
        raise ScheduleError(f"tau must be nonnegative, got {tau}")
    mu2 = mu_phi * mu_phi
    c0 = sv + sV + g * g
    c1 = 3.0 * l * g * c0 / mu2 + c0 * l * l / (2.0 * mu2)
    c2 = 3.0 * c0 * (l + 1.0) / (2.0 * mu2) + 3.0 * g * g * c0
    c3 = 3.0 * l * l * c0 / (2.0 * mu2) + g * g / 2.0
    c4 = 3.0 * g * g / 2.0 + sV
    c5 = 3.0 * (sv + sV) / mu_phi
    tau_hat = max(int(tau), math.ceil(math.log(horizon_T) / (2.0 * math.log(1.0 / rho))))
    return DerivedConstants(
        G=g, L=l, sigma_v_sq=sv, sigma_V_sq=sV, rho=rho, c_p=c_p, tau=int(tau),
        mu_phi=mu_phi, horizon_T=horizon_T,
        c0=c0, c1=c1, c2=c2, c3=c3, c4=c4, c5=c5, tau_hat=tau_hat,
    )


def derived_constants(
    est: ConstantsEstimate,
    rho: float,
    c_p: Optional[float],
    tau: int,
    mu_phi: float,
    horizon_T: int,
) -> DerivedConstants:
    """
    C0..C5 and tau_hat from the estimated constants and the chain's spectrum

    Raises:
        ScheduleError: rho outside (0, 1), nonpositive mu_phi or horizon
    """
    vals = (est.G, est.L, est.sigma_v_sq, est.sigma_V_sq, rho, mu_phi)
    if not all(math.isfinite(v) for v in vals) or (c_p is not None and not math.isfinite(c_p)):
        raise ScheduleError("derived constants need finite inputs")
    return _derive(est.G, est.L, est.sigma_v_sq, est.sigma_V_sq, rho, c_p, tau, mu_phi, horizon_T)


class ScheduleSpec(BaseModel):
    """Step-size policy; round-trips through experiment config files"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal[
        "marchon",
        "marchon_convex",
        "marchon_strongly_convex",
        "marchon_nonconvex",
        "mcgd",
        "markov_sgd",
        "mcsgd_emd",
        "constant",
    ]
    coefficient: float = Field(default=1.0, gt=0.0)
    q: Optional[float] = None
    horizon_T: Optional[int] = Field(default=None, ge=1)
    mu_f: float = Field(default=0.0, ge=0.0)
    eta0: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def _check_kind_params(self):
        if self.kind == "mcgd":
            if self.q is None or not (0.5 < self.q < 1.0):
                raise ValueError(f"mcgd needs 1/2 < q < 1, got q={self.q}")
        if self.kind == "marchon_strongly_convex" and self.mu_f <= 0.0:
            raise ValueError("marchon_strongly_convex needs mu_f > 0")
        return self

    @property
    def theoretical(self) -> bool:
        return self.kind in THEORETICAL_KINDS

    @property
    def label(self) -> str:
        if self.kind == "mcgd":
            return f"mcgd_q{self.q:g}"
        return self.kind


def _warn_clamp_once(kind: str):
    with _clamp_lock:
        if kind in _clamp_warned:
            return
        _clamp_warned.add(kind)
    logger.warning("%s is undefined below t=3; using the t=3 value", kind)


def _shape(kind: str, t: int, q: Optional[float]) -> float:
    """Unscaled decay shape of the baseline and experimental kinds"""
    if kind == "marchon":
        return 1.0 / math.sqrt(t)
    if kind == "mcgd":
        return 1.0 / t ** q
    if kind == "markov_sgd":
        if t < 3:
            _warn_clamp_once(kind)
            t = 3
        lt = math.log(t)
        return math.log(lt) * lt * lt / math.sqrt(t)
    if kind == "mcsgd_emd":
        t = max(t, 2)
        return 1.0 / math.sqrt(t * math.log(t))
    if kind == "constant":
        return 1.0
    raise ScheduleError(f"'{kind}' has no closed decay shape")


def step_size(spec: ScheduleSpec, dc: Optional[DerivedConstants], t: int) -> float:
    """
    eta_t of the schedule at step t (1-based)

    Raises:
        ScheduleError: t < 1, missing constants, or a zero denominator in a
        theoretical schedule (use the experimental 'marchon' c/sqrt(t) form)
    """
    if t < 1:
        raise ScheduleError(f"step index must be >= 1, got {t}")
    c = spec.coefficient

    if not spec.theoretical:
        shape = _shape(spec.kind, t, spec.q)
        return c * (spec.eta0 if spec.kind == "constant" else shape)

    if dc is None:
        raise ScheduleError(f"{spec.kind} needs derived constants")

    if spec.kind == "marchon_nonconvex":
        horizon = spec.horizon_T or dc.horizon_T
        if horizon < 2:
            raise ScheduleError("marchon_nonconvex needs a horizon T >= 2")
        if dc.c1 <= 0.0:
            raise ScheduleError("C1 = 0; use the experimental 'marchon' form")
        return c * 2.0 * math.log(1.0 / dc.rho) / (math.sqrt(dc.c1 * horizon) * math.log(horizon))

    mixing = dc.mixing_term
    if mixing is None:
        raise ScheduleError("C_P unavailable for a non-diagonalizable chain; use the experimental 'marchon' form")
    if mixing <= 0.0:
        raise ScheduleError("C5 + C_P rho^tau = 0; use the experimental 'marchon' form")

    if spec.kind == "marchon_convex":
        return c / math.sqrt(mixing * math.sqrt(t))
    # marchon_strongly_convex
    return c * min(math.sqrt(mixing), dc.mu_phi / spec.mu_f) / t


def step_sizes(spec: ScheduleSpec, dc: Optional[DerivedConstants], horizon: int) -> np.ndarray:
    return np.array([step_size(spec, dc, t) for t in range(1, horizon + 1)])


def resolve_schedule(spec: ScheduleSpec, dc: Optional[DerivedConstants]) -> ScheduleSpec:
    """The schedule itself, or the experimental c/sqrt(t) form when its constants degenerate"""
    if not spec.theoretical:
        return spec
    try:
        step_size(spec, dc, 1)
        return spec
    except ScheduleError as e:
        logger.warning("%s unavailable (%s); falling back to c/sqrt(t)", spec.kind, e)
        return ScheduleSpec(kind="marchon", coefficient=spec.coefficient)


def equal_eta1_coefficient(kind: str, eta1: float, q: Optional[float] = None) -> float:
    """Coefficient that makes the schedule's first step equal to eta1"""
    if eta1 <= 0.0:
        raise ScheduleError(f"eta1 must be positive, got {eta1}")
    if kind in THEORETICAL_KINDS:
        raise ScheduleError(f"{kind} is fixed by the constants; equal-eta1 does not apply")
    if kind == "constant":
        return eta1
    return eta1 / _shape(kind, 1, q)
