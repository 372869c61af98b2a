"""
Synthetic binary classification data from a planted linear model
"""

from typing import Tuple

import numpy as np

from .libsvm import RawDataset


def make_synthetic(
    n_samples: int,
    dim: int,
    seed: int = 0,
    flip: float = 0.1,
    scale: float = 0.5,
) -> Tuple[RawDataset, np.ndarray]:
    """
    Gaussian features clipped to [-1, 1] with labels sign(a^T w)

    Each label is flipped with probability `flip`. Returns the dataset and
    the planted unit vector w.
    """
    if n_samples < 1 or dim < 1:
        raise ValueError(f"need n_samples >= 1 and dim >= 1, got {n_samples}, {dim}")
    if not (0.0 <= flip < 0.5):
        raise ValueError(f"flip probability must be in [0, 0.5), got {flip}")
    if scale <= 0.0:
        raise ValueError(f"scale must be positive, got {scale}")

    rng = np.random.default_rng(seed)
    w = rng.standard_normal(dim)
    w /= np.linalg.norm(w)
    features = np.clip(rng.normal(0.0, scale, size=(n_samples, dim)), -1.0, 1.0)
    labels = np.where(features @ w >= 0.0, 1.0, -1.0)
    flips = rng.random(n_samples) < flip
    labels[flips] *= -1.0

    meta = {"source": "synthetic", "n_samples": n_samples, "dim": dim,
            "seed": seed, "flip": flip, "scale": scale}
    return RawDataset(d=dim, labels=labels, features=features, metadata=meta), w
