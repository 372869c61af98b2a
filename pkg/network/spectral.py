"""
Chain constants rho, C_P and tau, and the empirical mixing profile
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

import config
from .topology import ChainError, TransitionMatrix, validate_chain

logger = logging.getLogger(__name__)


class SpectralError(RuntimeError):
    """The eigensolver failed on a transition matrix"""


class MixingError(RuntimeError):
    """The chain did not reach the requested deviation within t_max steps"""


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray = field(repr=False)
    rho: float
    c_p: Optional[float]
    tau: Optional[int]
    diagonalizable: bool
    eigenvector_condition: float

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def rho_inverse_n(self) -> float:
        """The 1/n value stated for complete graphs, kept for comparison with rho"""
        return 1.0 / self.n

    def to_json(self) -> dict:
        return {
            "rho": self.rho,
            "c_p": self.c_p,
            "tau": self.tau,
            "eigenvalues_re": [float(z.real) for z in self.eigenvalues],
            "eigenvalues_im": [float(z.imag) for z in self.eigenvalues],
            "diagonalizable": self.diagonalizable,
            "eigenvector_condition": self.eigenvector_condition,
            "rho_inverse_n": self.rho_inverse_n,
        }


def tau_from_blocks(block_dims: Sequence[int], rho: float, rho2_abs: float) -> int:
    """
    Mixing offset tau for a Jordan structure with the given block sizes

    A block of size d contributes
    ceil(2d(d-1)(log(2d / (|rho_2| log(rho/rho_2))) - 1) / ((d+1) log(rho/|rho_2|)));
    blocks of size one contribute nothing, and the result is floored at 0.
    """
    tau = 0
    for d in block_dims:
        if d <= 1 or rho2_abs == 0.0:
            continue
        ratio = math.log(rho / rho2_abs)
        inner = math.log(2 * d / (rho2_abs * ratio)) - 1.0
        term = math.ceil(2 * d * (d - 1) * inner / ((d + 1) * ratio))
        tau = max(tau, term)
    return max(tau, 0)


def _sorted_eigen(rows: np.ndarray, symmetric: bool):
    try:
        if symmetric:
            values, vectors = np.linalg.eigh(rows)
        else:
            values, vectors = np.linalg.eig(rows)
    except np.linalg.LinAlgError as e:
        raise SpectralError(f"eigendecomposition failed: {e}") from e
    values = values.astype(complex)
    # modulus descending; the Perron root 1 first among ties with -1
    order = np.lexsort((-values.real, -np.abs(values)))
    return values[order], vectors[:, order]


def spectral_report(p: TransitionMatrix) -> SpectralReport:
    """
    Eigen data and the constants rho, C_P, tau of a transition matrix

    Only the diagonalizable case carries C_P and tau: every Jordan block is
    trivial, so C_P = sqrt(n-1) ||U||_F ||U^-1||_F and tau = 0.

    Raises:
        ChainError: the chain is reducible
        SpectralError: the eigensolver failed
    """
    if not validate_chain(p).irreducible:
        raise ChainError("spectral constants need an irreducible chain")

    values, vectors = _sorted_eigen(p.rows, p.is_symmetric())
    n = p.n

    if abs(values[0] - 1.0) > config.EIGENVALUE_ONE_TOL:
        logger.warning("leading eigenvalue %s is not 1 within tolerance", values[0])

    moduli = np.abs(values)
    second = max(moduli[1], moduli[-1]) if n > 1 else 0.0
    rho = (float(second) + 1.0) / 2.0

    cond = float(np.linalg.cond(vectors))
    diagonalizable = bool(np.isfinite(cond) and cond < config.DIAGONALIZABLE_COND)

    c_p: Optional[float] = None
    tau: Optional[int] = None
    if diagonalizable:
        u_inv = np.linalg.inv(vectors)
        c_p = float(math.sqrt(n - 1) * np.linalg.norm(vectors, "fro") * np.linalg.norm(u_inv, "fro"))
        tau = tau_from_blocks([1] * (n - 1), rho, float(second))

    logger.info("rho=%.6g from the eigenvalue definition; 1/n=%.6g", rho, 1.0 / n)
    return SpectralReport(
        eigenvalues=values,
        rho=rho,
        c_p=c_p,
        tau=tau,
        diagonalizable=diagonalizable,
        eigenvector_condition=cond,
    )


def deviation_sup_norm(p: TransitionMatrix, t: int, stationary: Optional[np.ndarray] = None) -> float:
    """||P^t - Pi*||_inf with Pi* the matrix whose rows are pi* (uniform by default)"""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    pt = np.linalg.matrix_power(p.rows, t)
    target = np.full(p.n, 1.0 / p.n) if stationary is None else np.asarray(stationary)
    return float(np.abs(pt - target[None, :]).sum(axis=1).max())


def empirical_mixing_time(p: TransitionMatrix, epsilon: float, t_max: Optional[int] = None) -> int:
    """
    Smallest t <= t_max with ||P^t - Pi*||_inf <= epsilon

    Raises:
        MixingError: the deviation stays above epsilon up to t_max (default 10 n^2)
    """
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    limit = t_max if t_max is not None else 10 * p.n * p.n
    for t in range(1, limit + 1):
        if deviation_sup_norm(p, t) <= epsilon:
            return t
    raise MixingError(
        f"deviation above {epsilon} after {limit} steps; chain is near-periodic or near-reducible"
    )


def effective_tau(p: TransitionMatrix, report: SpectralReport, epsilon: float = 0.25) -> int:
    """tau from the report, or the empirical mixing time when C_P is unavailable"""
    if report.tau is not None:
        return report.tau
    return empirical_mixing_time(p, epsilon)
