"""
libsvm text format: parsing, serialization, normalization to [-1, 1] and loading
"""

import bz2
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)


class LibSVMFormatError(ValueError):
    """A malformed libsvm line; carries its 1-based line number"""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class RawDataset:
    """
    Binary-labelled dataset, densified

    Rows are kept dense (d is small for every dataset used here); sparse_rows()
    gives back the (1-based index, value) view of the file format.
    """

    d: int
    labels: np.ndarray = field(repr=False)
    features: np.ndarray = field(repr=False)
    metadata: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=float).reshape(-1)
        features = np.asarray(self.features, dtype=float).reshape(labels.shape[0], self.d)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "features", features)

    @property
    def n_rows(self) -> int:
        return self.labels.shape[0]

    def sparse_rows(self) -> Iterable[Tuple[float, List[Tuple[int, float]]]]:
        for y, row in zip(self.labels, self.features):
            nz = np.flatnonzero(row)
            yield float(y), [(int(j) + 1, float(row[j])) for j in nz]

    def subset(self, rows) -> "RawDataset":
        rows = np.asarray(rows, dtype=int)
        return RawDataset(d=self.d, labels=self.labels[rows], features=self.features[rows],
                          metadata=dict(self.metadata))

    def equals(self, other: "RawDataset") -> bool:
        return (self.d == other.d
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.features, other.features))


def _remap_labels(raw: np.ndarray) -> Tuple[np.ndarray, Dict[str, float]]:
    values = np.unique(raw)
    if np.all(np.isin(values, (-1.0, 1.0))):
        return raw, {}
    if values.size == 2:
        mapping = {values[0]: -1.0, values[1]: 1.0}
    else:
        mapping = {values[0]: -1.0 if values[0] <= 0 else 1.0}
    logger.info("remapping labels %s", {f"{k:g}": v for k, v in mapping.items()})
    remapped = np.where(raw == values[0], mapping[values[0]], 1.0)
    return remapped, {f"{k:g}": v for k, v in mapping.items()}


def parse_libsvm(stream, n_features: Optional[int] = None) -> RawDataset:
    """
    Parse `label idx:val idx:val ...` lines into a RawDataset

    Blank lines and '#' comments are skipped. d is the largest index seen,
    or n_features when given. Labels other than {-1, +1} are remapped, the
    smaller label to -1.

    Raises:
        LibSVMFormatError: non-numeric token, index < 1, non-increasing
        indices, an index above n_features, or a third distinct label
    """
    labels: List[float] = []
    entries: List[List[Tuple[int, float]]] = []
    d = 0
    seen_labels = set()
    for lineno, line in enumerate(stream, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise LibSVMFormatError(lineno, f"non-numeric label '{tokens[0]}'") from None
        if label not in seen_labels:
            if len(seen_labels) == 2:
                raise LibSVMFormatError(lineno, f"expected binary labels, found a third label {label:g}")
            seen_labels.add(label)
        row = []
        last = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise LibSVMFormatError(lineno, f"expected idx:val, got '{tok}'")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise LibSVMFormatError(lineno, f"non-numeric token '{tok}'") from None
            if idx < 1:
                raise LibSVMFormatError(lineno, f"feature index {idx} < 1")
            if idx <= last:
                raise LibSVMFormatError(lineno, f"index {idx} does not increase past {last}")
            if n_features is not None and idx > n_features:
                raise LibSVMFormatError(lineno, f"index {idx} above n_features={n_features}")
            last = idx
            row.append((idx, val))
        d = max(d, last)
        labels.append(label)
        entries.append(row)

    if n_features is not None:
        d = n_features
    features = np.zeros((len(labels), d))
    for i, row in enumerate(entries):
        for idx, val in row:
            features[i, idx - 1] = val

    y = np.asarray(labels, dtype=float)
    label_map: Dict[str, float] = {}
    if y.size:
        y, label_map = _remap_labels(y)
    return RawDataset(d=d, labels=y, features=features, metadata={"label_map": label_map})


def serialize_libsvm(ds: RawDataset) -> str:
    """libsvm text of the dataset; parse_libsvm of the result reproduces it"""
    out = io.StringIO()
    for i, (y, row) in enumerate(ds.sparse_rows()):
        parts = [f"{y:.17g}"]
        parts += [f"{j}:{v:.17g}" for j, v in row]
        # an explicit zero at index d keeps all-zero trailing columns
        if i == 0 and ds.d and (not row or row[-1][0] < ds.d):
            parts.append(f"{ds.d}:0")
        out.write(" ".join(parts) + "\n")
    return out.getvalue()


def normalize(ds: RawDataset) -> RawDataset:
    """
    Per-feature min-max map onto [-1, 1]

    Constant features map to 0; a column already spanning exactly [-1, 1] is
    left untouched, which makes the map idempotent.
    """
    if ds.n_rows < 1:
        raise ValueError("cannot normalize an empty dataset")
    lo = ds.features.min(axis=0)
    hi = ds.features.max(axis=0)
    out = np.zeros_like(ds.features)
    for j in range(ds.d):
        col = ds.features[:, j]
        if lo[j] == hi[j]:
            continue
        if lo[j] == -1.0 and hi[j] == 1.0:
            out[:, j] = col
        else:
            out[:, j] = 2.0 * (col - lo[j]) / (hi[j] - lo[j]) - 1.0
    meta = dict(ds.metadata)
    meta["normalization"] = {"min": lo.tolist(), "max": hi.tolist()}
    return RawDataset(d=ds.d, labels=ds.labels.copy(), features=out, metadata=meta)


def open_text(path):
    """Text handle on a plain or bz2-compressed file"""
    path = Path(path)
    if path.suffix == ".bz2":
        return bz2.open(path, "rt", encoding="utf-8")
    return path.open("r", encoding="utf-8")


def load_dataset(path, max_rows: Optional[int] = None, seed: int = 0,
                 n_features: Optional[int] = None, normalized: bool = True) -> RawDataset:
    """
    Parse a libsvm file, optionally subsample max_rows rows, and normalize

    Subsampling draws rows without replacement and keeps file order.
    """
    with open_text(path) as f:
        ds = parse_libsvm(f, n_features=n_features)
    if max_rows is not None and ds.n_rows > max_rows:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(ds.n_rows, size=max_rows, replace=False))
        logger.info("subsampled %s to %d of %d rows", Path(path).name, max_rows, ds.n_rows)
        ds = ds.subset(keep)
    ds.metadata["source"] = str(path)
    return normalize(ds) if normalized else ds
