"""
Snapshot monitoring, synthetic independent-block data and the pipeline runner.
"""

from .cms_monitor import (
    GammaSource,
    MonitorConfig,
    MonitorReport,
    FactorizationCheck,
    CmsMonitor,
    monitor,
    verify_factorization,
)
from .synth import BlockSource, synth_independent, block_partition, load_synth_spec
from .workflow import Workflow, WorkflowStep, StepStatus, build_monitor_pipeline, run_pipeline

__all__ = [
    "GammaSource",
    "MonitorConfig",
    "MonitorReport",
    "FactorizationCheck",
    "CmsMonitor",
    "monitor",
    "verify_factorization",
    "BlockSource",
    "synth_independent",
    "block_partition",
    "load_synth_spec",
    "Workflow",
    "WorkflowStep",
    "StepStatus",
    "build_monitor_pipeline",
    "run_pipeline",
]
