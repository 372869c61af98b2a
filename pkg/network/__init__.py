"""
Network module: topologies, transition matrices, chain constants and the walk
"""

from .topology import (
    ChainError,
    ChainValidation,
    Graph,
    TopologyError,
    TransitionMatrix,
    build_topology,
    metropolis_transition,
    read_edgelist,
    read_transition_csv,
    simple_rw_transition,
    stationary_distribution,
    transition_for,
    validate_chain,
    write_edgelist,
    write_transition_csv,
)
from .spectral import (
    MixingError,
    SpectralError,
    SpectralReport,
    deviation_sup_norm,
    effective_tau,
    empirical_mixing_time,
    spectral_report,
    tau_from_blocks,
)
from .walker import (
    WalkState,
    occupancy_histogram,
    sample_instance,
    trajectory,
    walk_step,
    write_trajectory,
)

__all__ = [
    'ChainError', 'ChainValidation', 'Graph', 'TopologyError', 'TransitionMatrix',
    'build_topology', 'metropolis_transition', 'read_edgelist', 'read_transition_csv',
    'simple_rw_transition', 'stationary_distribution', 'transition_for', 'validate_chain',
    'write_edgelist', 'write_transition_csv',
    'MixingError', 'SpectralError', 'SpectralReport', 'deviation_sup_norm', 'effective_tau',
    'empirical_mixing_time', 'spectral_report', 'tau_from_blocks',
    'WalkState', 'occupancy_histogram', 'sample_instance', 'trajectory', 'walk_step',
    'write_trajectory',
]
