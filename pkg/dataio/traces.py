"""
Trace CSV and JSON sidecar output
"""

import json
import math
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

import config
from optim.engine import RunTrace, regret

TRACE_COLUMNS = ["t", "node", "eta", "f", "grad_sq", "regret_term"]
FLOAT_FORMAT = "%.17g"


def trace_frame(trace: RunTrace) -> pd.DataFrame:
    regret_terms = trace.regret_terms if trace.regret_terms is not None else np.full(trace.T, np.nan)
    return pd.DataFrame({
        "t": np.arange(1, trace.T + 1),
        "node": trace.nodes,
        "eta": trace.etas,
        "f": trace.f_values,
        "grad_sq": trace.grad_sq,
        "regret_term": regret_terms,
    }, columns=TRACE_COLUMNS)


def _finite_or_none(value: Optional[float]):
    if value is None or not math.isfinite(value):
        return None
    return value


def sidecar_for(trace: RunTrace, extra: Optional[Dict] = None) -> Dict:
    """Everything needed to re-run the trace bit-identically; no timing"""
    doc = {
        "artifact_version": config.ARTIFACT_VERSION,
        "seed": trace.seed,
        "stride": trace.stride,
        "T": trace.T,
        "schedule": trace.schedule.model_dump(),
        "approximations": list(trace.approximations),
        "f_bar": trace.f_bar,
        "f_star": trace.f_star,
        "suboptimality": trace.suboptimality,
        "regret": regret(trace) if trace.regret_terms is not None else None,
        "mean_grad_sq": _finite_or_none(trace.mean_grad_sq()),
        "x_bar": trace.x_bar.tolist(),
        "x_final": trace.x_final.tolist(),
    }
    doc.update(trace.metadata)
    if extra:
        doc.update(extra)
    return doc


def write_trace(trace: RunTrace, path, extra: Optional[Dict] = None) -> Tuple[Path, Path]:
    """
    Write `<path>` as CSV (t,node,eta,f,grad_sq,regret_term) and
    `<path stem>.json` as the sidecar

    Unevaluated cells are empty fields; floats carry 17 significant digits.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace_frame(trace).to_csv(path, index=False, float_format=FLOAT_FORMAT,
                              na_rep="", lineterminator="\n")
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps(sidecar_for(trace, extra), indent=2, sort_keys=True) + "\n",
                       encoding="utf-8")
    return path, sidecar


def read_trace(path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def read_sidecar(path) -> Dict:
    return json.loads(Path(path).with_suffix(".json").read_text(encoding="utf-8"))


def write_frame(frame: pd.DataFrame, path) -> Path:
    """Summary-style CSV with the same float formatting as traces"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="NaN", lineterminator="\n")
    return path
