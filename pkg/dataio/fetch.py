"""
Dataset manifest, download and the statistics check against it
"""

import bz2
import hashlib
import json
import logging
import shutil
import urllib.request
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict

import config
from .libsvm import RawDataset

logger = logging.getLogger(__name__)

MANIFEST_PATH = Path(__file__).with_name("manifest.json")


class DatasetEntry(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    url: str
    compression: Optional[str] = None
    sha256: Optional[str] = None
    rows: int
    features: int


def load_manifest(path=MANIFEST_PATH) -> Dict[str, DatasetEntry]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return {e["name"]: DatasetEntry(**e) for e in doc["datasets"]}


def dataset_names() -> List[str]:
    return sorted(load_manifest())


def local_path(name: str, data_dir=None) -> Path:
    """Where a fetched dataset lives (always decompressed)"""
    return Path(data_dir or config.DATA_DIR) / name


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def fetch_dataset(name: str, dest=None, manifest: Optional[Dict[str, DatasetEntry]] = None) -> Path:
    """
    Download a manifest dataset into dest, verify it, and decompress it

    Raises:
        KeyError: the name is not in the manifest
        ValueError: the download does not match the pinned checksum
    """
    manifest = manifest or load_manifest()
    if name not in manifest:
        raise KeyError(f"unknown dataset '{name}', known: {sorted(manifest)}")
    entry = manifest[name]
    target = local_path(name, dest)
    target.parent.mkdir(parents=True, exist_ok=True)
    if target.exists():
        logger.info("%s already present at %s", name, target)
        return target

    download = target.with_name(target.name + (".bz2" if entry.compression == "bz2" else ".part"))
    logger.info("downloading %s from %s", name, entry.url)
    with urllib.request.urlopen(entry.url) as resp, download.open("wb") as out:
        shutil.copyfileobj(resp, out)

    if entry.sha256 is not None:
        digest = _sha256(download)
        if digest != entry.sha256:
            download.unlink()
            raise ValueError(f"{name}: checksum {digest} does not match {entry.sha256}")
    else:
        logger.warning("%s has no pinned checksum; skipping verification", name)

    if entry.compression == "bz2":
        with bz2.open(download, "rb") as src, target.open("wb") as out:
            shutil.copyfileobj(src, out)
        download.unlink()
    else:
        download.rename(target)
    return target


def check_statistics(name: str, ds: RawDataset,
                     manifest: Optional[Dict[str, DatasetEntry]] = None) -> Dict[str, object]:
    """(rows, d) of a loaded dataset against the published statistics"""
    entry = (manifest or load_manifest())[name]
    return {
        "name": name,
        "rows": ds.n_rows,
        "features": ds.d,
        "expected_rows": entry.rows,
        "expected_features": entry.features,
        "ok": ds.n_rows == entry.rows and ds.d == entry.features,
    }
