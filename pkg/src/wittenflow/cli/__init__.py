"""Declarative experiment runner."""
from .checks import CHECKS, CheckResult, Context
from .config import ExperimentConfig, validate
from .presets import CRITERIA, PRESETS, list_presets, preset
from .runner import RunVerdict, load_config, run

__all__ = [
    "CHECKS", "CRITERIA", "CheckResult", "Context", "ExperimentConfig", "PRESETS", "RunVerdict",
    "list_presets", "load_config", "preset", "run", "validate",
]
