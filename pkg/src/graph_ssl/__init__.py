"""Generative semi-supervised node classification on graphs.

Joint edge/label models (latent-space or planted-partition edge heads over
an MLP label prior) trained against GCN/GAT variational posteriors, with a
benchmark harness for the standard, missing-edge, and reduced-label
settings.
"""

from .bench import CellSummary, accuracy, emit_report, run_trials, welch_t_test
from .data import Dataset, apply_setting, load_dataset, save_dataset, synth_sbm_generate
from .graphs import EdgeBatch, SparseGraph, full_edge_batch, gcn_normalize, negative_sample_edges
from .kernels import active_backend
from .objective import LsmEdgeModel, ModelBundle, SbmEdgeModel, total_loss
from .train import FitResult, GridSpec, TrainConfig, fit, grid_search

__version__ = "0.1.0"

__all__ = [
    "CellSummary",
    "Dataset",
    "EdgeBatch",
    "FitResult",
    "GridSpec",
    "LsmEdgeModel",
    "ModelBundle",
    "SbmEdgeModel",
    "SparseGraph",
    "TrainConfig",
    "accuracy",
    "active_backend",
    "apply_setting",
    "emit_report",
    "fit",
    "full_edge_batch",
    "gcn_normalize",
    "grid_search",
    "load_dataset",
    "negative_sample_edges",
    "run_trials",
    "save_dataset",
    "synth_sbm_generate",
    "total_loss",
    "welch_t_test",
]
