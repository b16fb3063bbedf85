"""Experiment driver: config, records, runs, reports, sweeps."""

from .config import (
    BackendConfig,
    ExperimentConfig,
    GenerateSpec,
    config_from_file,
    config_from_obj,
    desk_generate_spec,
)
from .records import EvalRecord, SelectionRow, load_records, load_selections
from .report import ReportTable, clue_count_series, stratify
from .run import RunResult, build_corpus, run
from .sweep import sweep, sweep_csv

__all__ = [
    "BackendConfig",
    "ExperimentConfig",
    "GenerateSpec",
    "config_from_file",
    "config_from_obj",
    "desk_generate_spec",
    "EvalRecord",
    "SelectionRow",
    "load_records",
    "load_selections",
    "ReportTable",
    "clue_count_series",
    "stratify",
    "RunResult",
    "build_corpus",
    "run",
    "sweep",
    "sweep_csv",
]
