"""Benchmark harness: datasets, parameter sweeps, result files and figure data."""

from .config import ExperimentConfig, load_config
from .data import gen_synthetic, load_points_csv, load_points_sparse_text
from .figures import emit_figure_data
from .results import ResultRow, emit_results, read_results_csv
from .sweep import run_sweep

__all__ = [
    "ExperimentConfig", "ResultRow", "emit_figure_data", "emit_results", "gen_synthetic",
    "load_config", "load_points_csv", "load_points_sparse_text", "read_results_csv", "run_sweep",
]
