"""Orchestration: manifest-driven pipeline, ablation harness, serving
runtime, HTTP API and CLI."""

from .ablation import render_table, run_ablation, save_ablation, split_by_patient
from .pipeline import (
    MissingDependencyError, PipelineConfig, StaleArtifactError, load_manifest,
    run_pipeline,
)
from .runtime import (
    PipelineRuntime, StateValidationError, packet_core, validate_state,
)

__all__ = [
    "MissingDependencyError", "PipelineConfig", "PipelineRuntime",
    "StaleArtifactError", "StateValidationError", "load_manifest",
    "packet_core", "render_table", "run_ablation", "run_pipeline",
    "save_ablation", "split_by_patient", "validate_state",
]
