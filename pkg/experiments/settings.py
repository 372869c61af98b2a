"""
Experiment descriptions: JSON documents validated into pydantic models
"""

import copy
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

import config
from optim.losses import canonical_loss
from optim.schedules import ScheduleSpec, equal_eta1_coefficient

TOPOLOGY_ALIASES = {"er": "erdos_renyi", "ws": "watts_strogatz"}
WEIGHTING_ALIASES = {"simple": "simple_random_walk"}
MIRROR_ALIASES = {"euclidean": "squared_euclidean", "entropy": "negative_entropy"}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TopologySpec(_Strict):
    kind: Literal["complete", "star", "erdos_renyi", "watts_strogatz"]
    n: int = Field(ge=2)
    p: Optional[float] = None
    k: Optional[int] = None
    beta: Optional[float] = None
    seed: int = 0
    weighting: Literal["metropolis", "simple_random_walk"] = "metropolis"

    @field_validator("kind", mode="before")
    @classmethod
    def _kind_alias(cls, v):
        return TOPOLOGY_ALIASES.get(v, v)

    @field_validator("weighting", mode="before")
    @classmethod
    def _weighting_alias(cls, v):
        return WEIGHTING_ALIASES.get(v, v)


class DatasetSpec(_Strict):
    """Synthetic generator, a manifest dataset by name, or a libsvm file path"""

    source: Literal["synthetic", "manifest", "file"] = "synthetic"
    name: Optional[str] = None
    path: Optional[str] = None
    n_samples: int = Field(default=5000, ge=1)
    dim: int = Field(default=8, ge=1)
    flip: float = 0.1
    scale: float = 0.5
    seed: int = 0
    max_rows: Optional[int] = Field(default=None, ge=1)
    partition: Literal["uniform_random", "label_skewed", "contiguous"] = "uniform_random"
    alpha: Optional[float] = None
    partition_seed: int = 0

    @model_validator(mode="after")
    def _check_source(self):
        if self.source == "manifest" and not self.name:
            raise ValueError("a manifest dataset needs a name")
        if self.source == "file" and not self.path:
            raise ValueError("a file dataset needs a path")
        return self


class LossConfig(_Strict):
    kind: str = "logistic_log"
    lam: Optional[float] = None

    @field_validator("kind")
    @classmethod
    def _canonical(cls, v):
        return canonical_loss(v)


class MethodSpec(_Strict):
    """One compared method: an algorithm and its step-size schedule"""

    algorithm: Literal["marchon", "baseline_sgd"] = "marchon"
    schedule: ScheduleSpec
    name: Optional[str] = None

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.algorithm == "baseline_sgd":
            return f"sgd_{self.schedule.label}"
        return self.schedule.label


class ExperimentConfig(_Strict):
    """Complete description of a comparison: federation, methods, seeds"""

    name: str = "experiment"
    topology: TopologySpec
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    loss: LossConfig = Field(default_factory=LossConfig)
    mirror: Literal["squared_euclidean", "negative_entropy"] = "squared_euclidean"
    methods: List[MethodSpec] = Field(min_length=1)
    seeds: List[int] = Field(default_factory=lambda: list(range(config.DEFAULT_SEED_COUNT)), min_length=1)
    T: int = Field(ge=1)
    start_node: int = Field(default=0, ge=0)
    stride: Optional[int] = Field(default=None, ge=1)
    eta1: float = Field(default=config.DEFAULT_ETA1, gt=0.0)
    x0: Optional[List[float]] = None
    check_displacement: bool = False
    checkpoints: List[int] = Field(default_factory=list)
    probes: int = Field(default=8, ge=1)
    mixing_epsilon: float = Field(default=0.25, gt=0.0, lt=1.0)
    jobs: int = Field(default=config.JOBS, ge=1)
    out: str = config.OUTPUT_DIR

    @field_validator("mirror", mode="before")
    @classmethod
    def _mirror_alias(cls, v):
        return MIRROR_ALIASES.get(v, v)

    @model_validator(mode="after")
    def _check_consistency(self):
        if self.start_node >= self.topology.n:
            raise ValueError(f"start_node {self.start_node} outside 0..{self.topology.n - 1}")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ValueError(f"method labels must be unique, got {labels}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be unique")
        return self

    def resolved_methods(self) -> List[MethodSpec]:
        """
        Methods with equal-eta1 coefficients filled in

        A coefficient written in the config is kept; baseline and experimental
        schedules without one get the coefficient that makes eta_1 = eta1.
        """
        out = []
        for m in self.methods:
            sched = m.schedule
            if "coefficient" not in sched.model_fields_set and not sched.theoretical:
                coef = equal_eta1_coefficient(sched.kind, self.eta1, sched.q)
                sched = sched.model_copy(update={"coefficient": coef})
            if sched.kind == "marchon_nonconvex" and sched.horizon_T is None:
                sched = sched.model_copy(update={"horizon_T": self.T})
            out.append(m.model_copy(update={"schedule": sched}))
        return out


def deep_merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_experiment(path=None, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Read a JSON config (optional), apply flag overrides, validate"""
    doc: Dict[str, Any] = {}
    if path is not None:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if overrides:
        doc = deep_merge(doc, overrides)
    return ExperimentConfig.model_validate(doc)


def config_hash(cfg: ExperimentConfig) -> str:
    """Digest of everything that shapes a trace except the seed list and output placement"""
    payload = cfg.model_dump(mode="json", exclude={"seeds", "jobs", "out"})
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
