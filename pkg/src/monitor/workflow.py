"""
Named, dependency-ordered steps for the end-to-end monitoring pipeline.

Each step receives the shared context as keyword arguments and returns a dict
that is merged back into the context for the steps after it.
"""

import logging
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional

from ..clustering.cka_matrix import cka_matrix, save_cka_matrix
from ..clustering.linkage import cluster
from ..clustering.partition import save_partition
from ..errors import CmsMonitorError, InputFormatError
from ..kernels.bandwidth import median_heuristic_gamma
from ..kernels.pixel_kernels import KernelSpec
from ..tensor_io.loader import load_sample_matrix
from ..tensor_io.snapshots import load_snapshot_series
from ..reports import report_emit
from .cms_monitor import CmsMonitor, GammaSource, MonitorConfig

logger = logging.getLogger(__name__)


class StepStatus(Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class WorkflowStep:
    """One step of a workflow."""
    name: str
    func: Callable[..., Optional[Dict[str, Any]]]
    description: str = ""
    dependencies: List[str] = field(default_factory=list)
    status: StepStatus = StepStatus.PENDING
    elapsed: float = 0.0


class Workflow:
    """Runs steps in dependency order, merging each step's dict result into the context."""

    def __init__(self, name: str, description: str = ""):
        self.name = name
        self.description = description
        self.steps: List[WorkflowStep] = []
        self.logger = logging.getLogger(f"Workflow.{name}")

    def add_step(self, step: WorkflowStep) -> None:
        if any(s.name == step.name for s in self.steps):
            raise CmsMonitorError(f"duplicate step '{step.name}' in workflow '{self.name}'")
        self.steps.append(step)
        self.logger.debug(f"Added step: {step.name}")

    def _topological_sort(self) -> List[WorkflowStep]:
        """Steps ordered so that dependencies come first; ties keep insertion order."""
        names = {s.name for s in self.steps}
        for step in self.steps:
            missing = [d for d in step.dependencies if d not in names]
            if missing:
                raise CmsMonitorError(f"step '{step.name}' depends on unknown steps {missing}")
        ordered: List[WorkflowStep] = []
        done = set()
        pending = list(self.steps)
        while pending:
            ready = next((s for s in pending if all(d in done for d in s.dependencies)), None)
            if ready is None:
                raise CmsMonitorError(f"dependency cycle among steps {[s.name for s in pending]}")
            ordered.append(ready)
            done.add(ready.name)
            pending.remove(ready)
        return ordered

    def run(self, context: Dict[str, Any]) -> Dict[str, Any]:
        """Execute every step; returns the final context."""
        self.logger.info(f"Starting workflow: {self.name}")
        context = dict(context)
        for step in self._topological_sort():
            self.logger.info(f"Executing step: {step.name}")
            step.status = StepStatus.RUNNING
            start = time.time()
            try:
                result = step.func(**context)
            except Exception as e:
                step.status = StepStatus.FAILED
                self.logger.error(f"Step '{step.name}' failed: {e}")
                raise
            step.elapsed = time.time() - start
            step.status = StepStatus.COMPLETED
            if isinstance(result, dict):
                context.update(result)
            self.logger.info(f"Step '{step.name}' completed in {step.elapsed:.2f}s")
        self.logger.info(f"Workflow '{self.name}' completed successfully")
        return context


def _load_step(train_path: str, test_path: str, snapshots_dir: str, **_) -> Dict[str, Any]:
    return {
        "train": load_sample_matrix(train_path),
        "test": load_sample_matrix(test_path),
        "series": load_snapshot_series(snapshots_dir),
    }


def _cka_step(train, test, monitor_config: MonitorConfig, out_dir: str, **_) -> Dict[str, Any]:
    cfg = monitor_config
    if isinstance(cfg.kernel, KernelSpec):
        spec = cfg.kernel
    else:
        source = train if cfg.gamma_source is GammaSource.TRAIN else test.head(cfg.n_test)
        spec = KernelSpec(cfg.family, median_heuristic_gamma(source, None, cfg.median_max_pairs, cfg.median_seed))
    M = cka_matrix(spec, train, cfg.estimator, workers=cfg.workers, show_progress=cfg.show_progress)
    save_cka_matrix(M, os.path.join(out_dir, "cka_matrix.f32"))
    return {"spec": spec, "matrix": M}


def _cluster_step(matrix, monitor_config: MonitorConfig, out_dir: str, **_) -> Dict[str, Any]:
    partition = cluster(matrix, monitor_config.num_clusters, monitor_config.linkage)
    save_partition(partition, os.path.join(out_dir, "partition.json"))
    return {"partition": partition}


def _monitor_step(test, series, spec, partition, monitor_config: MonitorConfig, **_) -> Dict[str, Any]:
    mon = CmsMonitor(monitor_config)
    mon.spec = spec
    mon.partition = partition
    reports = mon.monitor(test, series)
    return {"reports": reports, "header": mon.header()}


def _emit_step(reports, header, partition, test, out_dir: str, formats=None, **_) -> Dict[str, Any]:
    written = report_emit(reports, out_dir, formats, header=header, partition=partition, meta=test.meta)
    return {"written": written}


def build_monitor_pipeline() -> Workflow:
    """load -> cka -> cluster -> monitor -> emit."""
    workflow = Workflow("cms_pipeline", "CKA matrix, pixel clusters and CMS monitoring in one run")
    workflow.add_step(WorkflowStep("load", _load_step, "Read training, test and snapshot data"))
    workflow.add_step(WorkflowStep("cka", _cka_step, "Pairwise-pixel CKA on training data", ["load"]))
    workflow.add_step(WorkflowStep("cluster", _cluster_step, "Hierarchical clustering of pixels", ["cka"]))
    workflow.add_step(WorkflowStep("monitor", _monitor_step, "Image-wise and cluster-wise CMS", ["cluster"]))
    workflow.add_step(WorkflowStep("emit", _emit_step, "Write reports", ["monitor"]))
    return workflow


def run_pipeline(train_path: str, test_path: str, snapshots_dir: str, out_dir: str,
                 monitor_config: MonitorConfig, formats: Optional[List[str]] = None) -> Dict[str, Any]:
    if monitor_config.num_clusters is None:
        raise InputFormatError("the pipeline needs num_clusters")
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise InputFormatError(f"cannot create output directory {out_dir}: {e}") from e
    context = {
        "train_path": train_path,
        "test_path": test_path,
        "snapshots_dir": snapshots_dir,
        "out_dir": out_dir,
        "monitor_config": monitor_config,
        "formats": formats,
    }
    return build_monitor_pipeline().run(context)
