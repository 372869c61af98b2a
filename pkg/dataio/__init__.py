"""
Data module: libsvm ingestion, partitioning, synthetic data and trace output
"""

from .libsvm import LibSVMFormatError, RawDataset, load_dataset, normalize, parse_libsvm, serialize_libsvm
from .partition import assign_rows, partition
from .synthetic import make_synthetic
from .fetch import DatasetEntry, check_statistics, dataset_names, fetch_dataset, load_manifest, local_path
from .traces import read_sidecar, read_trace, sidecar_for, trace_frame, write_frame, write_trace

__all__ = [
    'LibSVMFormatError', 'RawDataset', 'load_dataset', 'normalize', 'parse_libsvm', 'serialize_libsvm',
    'assign_rows', 'partition',
    'make_synthetic',
    'DatasetEntry', 'check_statistics', 'dataset_names', 'fetch_dataset', 'load_manifest', 'local_path',
    'read_sidecar', 'read_trace', 'sidecar_for', 'trace_frame', 'write_frame', 'write_trace',
]
