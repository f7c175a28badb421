"""Scripted scenarios: one JSON config per acceptance criterion plus report sweeps."""

from modspace.scenarios.runner import (
    CriterionResult,
    criterion_names,
    list_configs,
    load_config,
    run_config,
    run_criterion,
    run_scenario,
)

__all__ = [
    "CriterionResult",
    "criterion_names",
    "list_configs",
    "load_config",
    "run_config",
    "run_criterion",
    "run_scenario",
]
