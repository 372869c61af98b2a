"""
Experiments module: config models, federation building, orchestration and presets
"""

from .settings import (
    DatasetSpec, ExperimentConfig, LossConfig, MethodSpec, TopologySpec,
    config_hash, deep_merge, load_experiment,
)
from .federation import Federation, build_federation, load_raw, run_config_for
from .orchestrator import CellResult, ExperimentOrchestrator
from .figures import figure_configs, method_comparison, size_sweep, sweep_frame, topology_sweep

__all__ = [
    'DatasetSpec', 'ExperimentConfig', 'LossConfig', 'MethodSpec', 'TopologySpec',
    'config_hash', 'deep_merge', 'load_experiment',
    'Federation', 'build_federation', 'load_raw', 'run_config_for',
    'CellResult', 'ExperimentOrchestrator',
    'figure_configs', 'method_comparison', 'size_sweep', 'sweep_frame', 'topology_sweep',
]
