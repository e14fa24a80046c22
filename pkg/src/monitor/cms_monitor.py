"""
Monitoring image-wise and cluster-wise CMS across generator snapshots.

For each snapshot the image-wise CMS over all pixels and the CMS over every
cluster of the partition are estimated against the same test set. When the
clusters are mutually independent (zero cross-cluster CKA) the image-wise
value equals the product of the cluster-wise values, and it can never exceed
the smallest of them.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Union, Any

from tqdm import tqdm

from ..clustering.cka_matrix import cka_matrix
from ..clustering.linkage import cluster
from ..clustering.partition import Partition
from ..errors import CmsMonitorError, InputFormatError, ShapeMismatchError
from ..estimators.blocks import EstimatorConfig, block_mean
from ..estimators.embedding import block_statistics
from ..kernels.bandwidth import median_heuristic_gamma
from ..kernels.pixel_kernels import KernelSpec, KernelFamily, IndexSet
from ..tensor_io.formats import SampleMatrix, SnapshotSeries
from config.settings import KERNEL_SETTINGS, MONITOR_SETTINGS, CLUSTERING_SETTINGS, PERFORMANCE_CONFIG

logger = logging.getLogger(__name__)

MEDIAN_HEURISTIC = "median-heuristic"


class GammaSource(Enum):
    """Dataset the median heuristic runs on, or a fixed value."""
    TRAIN = "train"
    TEST = "test"
    VALUE = "value"


@dataclass
class MonitorConfig:
    """Settings of one monitoring run.

    ``kernel`` is either a fixed KernelSpec or ``"median-heuristic"``. When no
    partition is given, one is computed from training data with
    ``num_clusters`` and ``linkage``.
    """
    kernel: Union[KernelSpec, str] = MEDIAN_HEURISTIC
    family: KernelFamily = KernelFamily.RBF
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    partition: Optional[Partition] = None
    num_clusters: Optional[int] = None
    linkage: str = "average"
    n_test: Optional[int] = None
    emit_mmd: bool = False
    gamma_source: GammaSource = GammaSource.TEST
    workers: int = 1
    corollary_tolerance: float = 1e-9
    median_max_pairs: int = 500_000
    median_seed: int = 0
    show_progress: bool = False

    def __post_init__(self):
        self.family = KernelFamily(self.family) if not isinstance(self.family, KernelFamily) else self.family
        self.gamma_source = GammaSource(self.gamma_source) if not isinstance(self.gamma_source, GammaSource) \
            else self.gamma_source
        if isinstance(self.kernel, KernelSpec):
            self.gamma_source = GammaSource.VALUE
        elif self.kernel != MEDIAN_HEURISTIC:
            raise InputFormatError(f"kernel must be a KernelSpec or '{MEDIAN_HEURISTIC}', got {self.kernel!r}")
        elif self.gamma_source is GammaSource.VALUE:
            raise InputFormatError("gamma_source 'value' needs a fixed KernelSpec")
        if self.partition is None and self.num_clusters is None:
            raise InputFormatError("MonitorConfig needs a partition or num_clusters")
        if self.n_test is not None and self.n_test < 1:
            raise InputFormatError(f"n_test must be >= 1, got {self.n_test}")

    @classmethod
    def from_settings(cls, **overrides) -> "MonitorConfig":
        """Defaults from the settings dicts; ``None`` overrides are ignored."""
        gamma = KERNEL_SETTINGS["gamma"]
        family = KernelFamily(KERNEL_SETTINGS["family"])
        values: Dict[str, Any] = {
            "kernel": MEDIAN_HEURISTIC if gamma == "median" else KernelSpec(family, float(gamma)),
            "family": family,
            "estimator": EstimatorConfig.from_settings(),
            "linkage": CLUSTERING_SETTINGS["linkage"],
            "n_test": MONITOR_SETTINGS["n_test"],
            "emit_mmd": MONITOR_SETTINGS["emit_mmd"],
            "gamma_source": GammaSource(MONITOR_SETTINGS["gamma_source"]),
            "workers": PERFORMANCE_CONFIG["workers"],
            "corollary_tolerance": MONITOR_SETTINGS["corollary_tolerance"],
            "median_max_pairs": KERNEL_SETTINGS["median_max_pairs"],
            "median_seed": KERNEL_SETTINGS["median_seed"],
            "show_progress": PERFORMANCE_CONFIG["show_progress"],
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class MonitorReport:
    """Image-wise and cluster-wise similarities of one snapshot."""
    ordinal: int
    image_cms: float
    cluster_cms: List[float]
    product_cms: float
    factorization_gap: float
    corollary_violation: bool
    mmd2: Optional[float] = None
    label: str = ""
    external: Dict[str, float] = field(default_factory=dict)

    def to_json_dict(self) -> Dict[str, Any]:
        """Fixed JSON-lines schema; ``external`` only appears when present."""
        record = {
            "ordinal": self.ordinal,
            "image_cms": self.image_cms,
            "cluster_cms": list(self.cluster_cms),
            "product_cms": self.product_cms,
            "gap": self.factorization_gap,
            "mmd2": self.mmd2,
            "corollary_violation": self.corollary_violation,
        }
        if self.external:
            record["external"] = dict(self.external)
        return record


class FactorizationCheck(NamedTuple):
    image_cms: float
    product_cms: float
    gap: float


def product_of(values: List[float]) -> float:
    """Product accumulated left to right in partition order."""
    result = 1.0
    for value in values:
        result *= value
    return result


def build_report(ordinal: int, image_cms: float, cluster_cms: List[float], tolerance: float,
                 mmd2: Optional[float] = None, label: str = "") -> MonitorReport:
    product = product_of(cluster_cms)
    if all(0.0 < c <= 1.0 for c in cluster_cms) and product > min(cluster_cms):
        raise CmsMonitorError(f"product {product} exceeds the smallest cluster CMS {min(cluster_cms)}")
    violation = abs(image_cms) > min(abs(c) for c in cluster_cms) + tolerance
    return MonitorReport(
        ordinal=ordinal,
        image_cms=image_cms,
        cluster_cms=list(cluster_cms),
        product_cms=product,
        factorization_gap=abs(image_cms - product),
        corollary_violation=violation,
        mmd2=mmd2,
        label=label,
    )


class CmsMonitor:
    """Runs the monitoring loop: resolve gamma and partition once, then score every snapshot."""

    def __init__(self, config: MonitorConfig):
        self.config = config
        self.logger = logging.getLogger(__name__)
        self.spec: Optional[KernelSpec] = config.kernel if isinstance(config.kernel, KernelSpec) else None
        self.partition: Optional[Partition] = config.partition

    def resolve_kernel(self, test: SampleMatrix, train: Optional[SampleMatrix] = None) -> KernelSpec:
        """Freeze the kernel for the whole series."""
        if self.spec is not None:
            return self.spec
        cfg = self.config
        if cfg.gamma_source is GammaSource.TRAIN:
            if train is None:
                raise InputFormatError("gamma source 'train' needs training data")
            source = train
        else:
            source = test
        gamma = median_heuristic_gamma(source, None, cfg.median_max_pairs, cfg.median_seed)
        self.spec = KernelSpec(cfg.family, gamma)
        self.logger.info(f"Resolved gamma={gamma:.6g} from {cfg.gamma_source.value} data")
        return self.spec

    def resolve_partition(self, train: Optional[SampleMatrix] = None,
                          test: Optional[SampleMatrix] = None) -> Partition:
        """Given partition, else cluster the training CKA matrix under the frozen kernel.

        Without a resolved kernel, gamma comes from the configured source, so a
        ``test`` source needs ``test``.
        """
        if self.partition is not None:
            return self.partition
        if train is None:
            raise InputFormatError("computing a partition needs training data")
        if self.spec is None and test is None and self.config.gamma_source is GammaSource.TEST:
            raise InputFormatError("gamma source 'test' needs the test set before clustering")
        spec = self.resolve_kernel(test, train)
        M = cka_matrix(spec, train, self.config.estimator, workers=self.config.workers,
                       show_progress=self.config.show_progress)
        self.partition = cluster(M, self.config.num_clusters, self.config.linkage)
        return self.partition

    def header(self) -> Dict[str, Any]:
        """Run metadata written next to the reports."""
        cfg = self.config
        return {
            "kernel": self.spec.family.value if self.spec else cfg.family.value,
            "gamma": self.spec.gamma if self.spec else None,
            "gamma_source": cfg.gamma_source.value,
            "cms_batch": cfg.estimator.cms_batch,
            "block_mode": cfg.estimator.block_mode,
            "drop_remainder": cfg.estimator.drop_remainder,
            "n_test": cfg.n_test,
            "num_clusters": len(self.partition) if self.partition else cfg.num_clusters,
            "emit_mmd": cfg.emit_mmd,
        }

    def _subset_scores(self, spec: KernelSpec, subsets: List[IndexSet], X: SampleMatrix,
                       Y: SampleMatrix, executor: Optional[ThreadPoolExecutor]):
        """Block statistics for each subset, in subset order."""
        est = self.config.estimator

        def _score(subset: IndexSet):
            return block_statistics(spec, subset, X, Y, est)

        if executor is None:
            return [_score(s) for s in subsets]
        return list(executor.map(_score, subsets))

    def score(self, X: SampleMatrix, Y: SampleMatrix, partition: Partition, spec: KernelSpec,
              ordinal: int = 0, label: str = "",
              executor: Optional[ThreadPoolExecutor] = None) -> MonitorReport:
        """Compare one generated set Y with reference X."""
        if not X.meta.same_grid(Y.meta):
            raise ShapeMismatchError(f"snapshot {label or ordinal} does not match the test set's shape")
        if partition.d != X.d:
            raise ShapeMismatchError(f"partition d={partition.d} does not match data d={X.d}")
        subsets = [IndexSet.full(X.d)] + list(partition.clusters)
        stats = self._subset_scores(spec, subsets, X, Y, executor)
        image_cms = block_mean([s.cms for s in stats[0]])
        cluster_cms = [block_mean([s.cms for s in per_block]) for per_block in stats[1:]]
        mmd2 = block_mean([s.mmd2 for s in stats[0]]) if self.config.emit_mmd else None
        return build_report(ordinal, image_cms, cluster_cms, self.config.corollary_tolerance, mmd2, label)

    def monitor(self, test: SampleMatrix, series: SnapshotSeries,
                train: Optional[SampleMatrix] = None) -> List[MonitorReport]:
        """Score every snapshot, sequentially in ordinal order."""
        cfg = self.config
        if cfg.n_test is not None and cfg.n_test > test.n:
            raise InputFormatError(f"n_test={cfg.n_test} exceeds the {test.n} available test samples")
        test = test.head(cfg.n_test)
        if not test.meta.same_grid(series.meta):
            raise ShapeMismatchError("test set and snapshots differ in image shape")
        spec = self.resolve_kernel(test, train)
        partition = self.resolve_partition(train)
        if partition.d != test.d:
            raise ShapeMismatchError(f"partition d={partition.d} does not match data d={test.d}")

        self.logger.info(f"Monitoring {len(series)} snapshots over {len(partition)} clusters "
                         f"(n_test={test.n}, workers={cfg.workers})")
        reports = []
        executor = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
        try:
            for snap in tqdm(series, desc="Snapshots", disable=not cfg.show_progress):
                report = self.score(test, snap.samples, partition, spec, snap.ordinal, snap.label, executor)
                self.logger.info(f"{snap.label}: image CMS {report.image_cms:.4f}, "
                                 f"product {report.product_cms:.4f}, gap {report.factorization_gap:.4f}")
                if report.corollary_violation:
                    self.logger.warning(f"{snap.label}: image CMS exceeds the smallest cluster CMS")
                reports.append(report)
        finally:
            if executor is not None:
                executor.shutdown(wait=True)
        return reports


def monitor(test: SampleMatrix, series: SnapshotSeries, cfg: MonitorConfig,
            train: Optional[SampleMatrix] = None) -> List[MonitorReport]:
    """Image-wise and cluster-wise CMS of every snapshot against ``test``."""
    return CmsMonitor(cfg).monitor(test, series, train)


def verify_factorization(X: SampleMatrix, Y: SampleMatrix, partition: Partition, spec: KernelSpec,
                         cfg: Optional[EstimatorConfig] = None, workers: int = 1) -> FactorizationCheck:
    """Both sides of the factorization: image-wise CMS, product of cluster CMS, and their gap."""
    mon_cfg = MonitorConfig(kernel=spec, estimator=cfg or EstimatorConfig.from_settings(),
                            partition=partition, workers=workers)
    mon = CmsMonitor(mon_cfg)
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        report = mon.score(X, Y, partition, spec, executor=executor)
    finally:
        if executor is not None:
            executor.shutdown(wait=True)
    return FactorizationCheck(report.image_cms, report.product_cms, report.factorization_gap)
