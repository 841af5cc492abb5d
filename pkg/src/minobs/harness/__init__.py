"""Experiment configuration, execution and reporting."""

from .config import EXPERIMENTS, ConfigIOError, ExperimentConfig, load_config, validate
from .runner import ResultBundle, emit_report, run, summary

__all__ = [
    "EXPERIMENTS",
    "ConfigIOError",
    "ExperimentConfig",
    "load_config",
    "validate",
    "ResultBundle",
    "emit_report",
    "run",
    "summary",
]
