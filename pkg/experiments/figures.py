"""
Preset experiment families: method comparison, network-size sweep, topology sweep
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

import config
from .settings import DatasetSpec, ExperimentConfig

FIGURES = ("2", "3", "4")

COMPARED_METHODS = [
    {"schedule": {"kind": "marchon"}},
    {"schedule": {"kind": "mcgd", "q": config.DEFAULT_MCGD_Q}},
    {"schedule": {"kind": "mcsgd_emd"}},
    {"schedule": {"kind": "markov_sgd"}},
]

TOPOLOGY_SWEEP = {
    "complete": {"kind": "complete"},
    "erdos_renyi": {"kind": "erdos_renyi", "p": 0.2},
    "watts_strogatz": {"kind": "watts_strogatz", "k": 4, "beta": 0.3},
    "star": {"kind": "star"},
}


def _dataset(name: Optional[str]) -> Dict:
    if name is None or name == "synthetic":
        return DatasetSpec().model_dump()
    if Path(name).exists():
        return {"source": "file", "path": str(name)}
    return {"source": "manifest", "name": name}


def _base(name: str, topology: Dict, n: int, T: int, seeds: Sequence[int],
          dataset: Optional[str], out: str, methods: List[Dict]) -> ExperimentConfig:
    return ExperimentConfig.model_validate({
        "name": name,
        "topology": {**topology, "n": n},
        "dataset": _dataset(dataset),
        "loss": {"kind": "logistic_log"},
        "mirror": "squared_euclidean",
        "methods": methods,
        "seeds": list(seeds),
        "T": T,
        "out": out,
    })


def method_comparison(T: int = 2000, n: int = 50, seeds: Sequence[int] = range(20),
                      dataset: Optional[str] = None, out: str = config.OUTPUT_DIR) -> List[ExperimentConfig]:
    """Four schedules with equal first steps on a complete graph"""
    return [_base("fig2_methods", {"kind": "complete"}, n, T, seeds, dataset,
                  str(Path(out) / "fig2"), COMPARED_METHODS)]


def size_sweep(T: int = 2000, sizes: Sequence[int] = (10, 50, 200), seeds: Sequence[int] = range(20),
               dataset: Optional[str] = None, out: str = config.OUTPUT_DIR) -> List[ExperimentConfig]:
    """The proposed method on complete graphs of several sizes, same total T"""
    return [_base(f"fig3_n{n}", {"kind": "complete"}, n, T, seeds, dataset,
                  str(Path(out) / "fig3" / f"n{n}"), COMPARED_METHODS[:1])
            for n in sizes]


def topology_sweep(T: int = 2000, n: int = 200, seeds: Sequence[int] = range(20),
                   dataset: Optional[str] = None, out: str = config.OUTPUT_DIR) -> List[ExperimentConfig]:
    """The proposed method on 200 nodes under four topologies"""
    return [_base(f"fig4_{name}", topo, n, T, seeds, dataset,
                  str(Path(out) / "fig4" / name), COMPARED_METHODS[:1])
            for name, topo in TOPOLOGY_SWEEP.items()]


def figure_configs(figure: str, **kwargs) -> List[ExperimentConfig]:
    builders = {"2": method_comparison, "3": size_sweep, "4": topology_sweep}
    if figure not in builders:
        raise ValueError(f"unknown figure '{figure}', expected one of {FIGURES}")
    return builders[figure](**kwargs)


def sweep_frame(summaries: Dict[str, pd.DataFrame], key: str) -> pd.DataFrame:
    """Stack per-experiment summaries with a leading column naming the sweep value"""
    frames = [df.assign(**{key: value})[[key] + list(df.columns)] for value, df in summaries.items()]
    return pd.concat(frames, ignore_index=True)
