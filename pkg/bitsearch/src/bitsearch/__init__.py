"""Differentiable DSP-aware bit-width search.

Trains a super-net whose per-layer quantization branches are weighted by
trainable selection probabilities, with a complexity loss expressed in
expected DSP operations from the packing toolkit's throughput tables, and
emits per-layer bit-width assignments in the toolkit's JSON schema.
"""

from .losses import loss_comp, total_loss, weighted_throughput
from .lut import exact_op_dsp, load_net, load_table, load_tables, save_assignment
from .search import SearchConfig, SearchResult, min_op_dsp_assignment, run_search
from .supernet import Supernet, toy_network

__version__ = "0.1.0"

__all__ = [
    "SearchConfig",
    "SearchResult",
    "Supernet",
    "exact_op_dsp",
    "load_net",
    "load_table",
    "load_tables",
    "loss_comp",
    "min_op_dsp_assignment",
    "run_search",
    "save_assignment",
    "total_loss",
    "toy_network",
    "weighted_throughput",
]
