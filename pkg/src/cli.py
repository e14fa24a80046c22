"""
Command-line interface of the CMS monitor.

Subcommands: cka, cluster, monitor, synth, verify, merge, pipeline.
Exit codes: 0 success, 2 input/format error, 3 degenerate data.
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

import pandas as pd
import yaml

from config.logging_setup import setup_logging
from config.settings import load_config_file, BASE_CONFIG, KERNEL_SETTINGS
from .clustering import (
    cka_matrix,
    cka_matrix_to_csv,
    cluster,
    linkage_heights,
    load_cka_matrix,
    load_partition,
    reorder_by_partition,
    save_cka_matrix,
    save_partition,
)
from .errors import CmsMonitorError, DegenerateDataError, InputFormatError
from .estimators import EstimatorConfig
from .kernels import KernelFamily, KernelSpec, median_heuristic_gamma
from .monitor import (
    CmsMonitor,
    MonitorConfig,
    block_partition,
    load_synth_spec,
    run_pipeline,
    synth_independent,
    verify_factorization,
)
from .monitor.cms_monitor import MEDIAN_HEURISTIC
from .reports import attach_external, merge_reports, report_emit
from .tensor_io import load_sample_matrix, load_snapshot_series, save_sample_matrix

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3


def _gamma_arg(value: str) -> Optional[float]:
    """``median`` or a positive float."""
    if value.lower() == "median":
        return None
    try:
        gamma = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"gamma must be a positive number or 'median', got {value!r}")
    if not gamma > 0:
        raise argparse.ArgumentTypeError(f"gamma must be positive, got {value}")
    return gamma


def _formats_arg(value: str) -> List[str]:
    return [f.strip() for f in value.split(",") if f.strip()]


def _family(args) -> KernelFamily:
    return KernelFamily(args.family or KERNEL_SETTINGS["family"])


def _kernel_choice(args):
    """KernelSpec for an explicit --gamma, the median marker for ``--gamma median``, else None."""
    if args.gamma is None:
        return MEDIAN_HEURISTIC if getattr(args, "gamma_given", False) else None
    return KernelSpec(_family(args), args.gamma)


def _fixed_gamma(args) -> Optional[float]:
    """Explicit --gamma, else a numeric gamma from the settings, else None for the median heuristic."""
    if args.gamma is not None or getattr(args, "gamma_given", False):
        return args.gamma
    configured = KERNEL_SETTINGS["gamma"]
    return None if configured == "median" else float(configured)


def cmd_cka(args) -> int:
    train = load_sample_matrix(args.train)
    family = _family(args)
    gamma = _fixed_gamma(args)
    if gamma is None:
        sample = train.head(args.n_train)
        gamma = median_heuristic_gamma(sample, None, KERNEL_SETTINGS["median_max_pairs"], KERNEL_SETTINGS["median_seed"])
    spec = KernelSpec(family, gamma)
    cfg = EstimatorConfig.from_settings(cka_batch=args.batch)
    M = cka_matrix(spec, train, cfg, workers=args.workers, n_train=args.n_train)
    save_cka_matrix(M, args.out)
    if args.csv:
        cka_matrix_to_csv(M, args.csv)
    logger.info(f"CKA matrix written to {args.out} (gamma={gamma:.6g})")
    return EXIT_OK


def cmd_cluster(args) -> int:
    M = load_cka_matrix(args.matrix)
    partition = cluster(M, args.k, args.linkage)
    save_partition(partition, args.out)
    if args.ordered_csv:
        _, order = reorder_by_partition(M, partition)
        cka_matrix_to_csv(M, args.ordered_csv, order)
    if args.heights:
        merges = linkage_heights(M, args.linkage)
        frame = pd.DataFrame([{"lo": m.lo, "hi": m.hi, "height": m.height, "size": m.size} for m in merges])
        try:
            frame.to_csv(args.heights, index=False, lineterminator="\n")
        except OSError as e:
            raise InputFormatError(f"cannot write {args.heights}: {e}") from e
    return EXIT_OK


def cmd_monitor(args) -> int:
    test = load_sample_matrix(args.test)
    series = load_snapshot_series(args.snapshots)
    train = load_sample_matrix(args.train) if args.train else None
    partition = load_partition(args.partition) if args.partition else None
    if partition is None and (args.k is None or train is None):
        raise InputFormatError("monitor needs --partition, or --k together with --train")

    cfg = MonitorConfig.from_settings(
        kernel=_kernel_choice(args),
        family=KernelFamily(args.family) if args.family else None,
        estimator=EstimatorConfig.from_settings(cms_batch=args.batch),
        partition=partition,
        num_clusters=args.k,
        n_test=args.n_test,
        emit_mmd=True if args.mmd else None,
        gamma_source=args.gamma_source,
        workers=args.workers,
    )
    mon = CmsMonitor(cfg)
    reports = mon.monitor(test, series, train)
    if args.external:
        reports = attach_external(reports, args.external)
    report_emit(reports, args.out, args.formats, header=mon.header(), partition=mon.partition, meta=test.meta)
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = load_synth_spec(args.spec)
    samples = synth_independent(spec["blocks"], args.n, args.seed, spec["height"], spec["width"], spec["channels"])
    save_sample_matrix(samples, args.out)
    if args.partition_out:
        save_partition(block_partition(spec["blocks"]), args.partition_out)
    return EXIT_OK


def cmd_verify(args) -> int:
    X = load_sample_matrix(args.x)
    Y = load_sample_matrix(args.y)
    partition = load_partition(args.partition)
    gamma = _fixed_gamma(args)
    if gamma is None:
        gamma = median_heuristic_gamma(X, None, KERNEL_SETTINGS["median_max_pairs"], KERNEL_SETTINGS["median_seed"])
    spec = KernelSpec(_family(args), gamma)
    result = verify_factorization(X, Y, partition, spec, EstimatorConfig.from_settings(cms_batch=args.batch),
                                  workers=args.workers or 1)
    print(json.dumps({"image_cms": result.image_cms, "product_cms": result.product_cms, "gap": result.gap}))
    return EXIT_OK


def cmd_merge(args) -> int:
    merged = merge_reports(args.reports)
    try:
        merged.to_csv(args.out, index=False, lineterminator="\n")
    except OSError as e:
        raise InputFormatError(f"cannot write {args.out}: {e}") from e
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = MonitorConfig.from_settings(
        kernel=_kernel_choice(args),
        family=KernelFamily(args.family) if args.family else None,
        num_clusters=args.k,
        linkage=args.linkage,
        n_test=args.n_test,
        emit_mmd=True if args.mmd else None,
        gamma_source=args.gamma_source,
        workers=args.workers,
    )
    run_pipeline(args.train, args.test, args.snapshots, args.out, cfg, args.formats)
    return EXIT_OK


class _GammaAction(argparse.Action):
    """Stores the parsed gamma and remembers that the flag was given."""

    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.gamma_given = True


def _add_gamma(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=_gamma_arg, action=_GammaAction, default=None,
                   help="Kernel bandwidth, or 'median' for the median heuristic")
    p.add_argument("--family", choices=[f.value for f in KernelFamily], default=None, help="Pixel kernel family")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cms-monitor", description=BASE_CONFIG["description"])
    parser.add_argument("--version", action="version", version=f"%(prog)s {BASE_CONFIG['version']}")
    parser.add_argument("--config", help="YAML file overriding settings")
    parser.add_argument("--log-level", default=None, help="Logging level (DEBUG, INFO, ...)")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("cka", help="Pairwise-pixel CKA matrix on training data")
    p.add_argument("--train", required=True, help="Training samples (.f32 or .csv)")
    p.add_argument("--out", required=True, help="Output matrix (.f32 with sidecar)")
    p.add_argument("--batch", type=int, default=None, help="CKA block size")
    p.add_argument("--n-train", type=int, default=None, help="Use only the first N training samples")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--csv", default=None, help="Also write the matrix as CSV")
    _add_gamma(p)
    p.set_defaults(func=cmd_cka)

    p = sub.add_parser("cluster", help="Hierarchical clustering of pixels")
    p.add_argument("--matrix", required=True)
    p.add_argument("--k", type=int, required=True, help="Number of clusters")
    p.add_argument("--linkage", default=None, choices=["average", "complete", "single"])
    p.add_argument("--out", required=True, help="Partition JSON")
    p.add_argument("--heights", default=None, help="Write the full merge sequence as CSV")
    p.add_argument("--ordered-csv", default=None, help="Write the matrix as CSV with pixels grouped by cluster")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("monitor", help="Image-wise and cluster-wise CMS over snapshots")
    p.add_argument("--test", required=True)
    p.add_argument("--snapshots", required=True, help="Directory of snap_<k>.f32 files")
    p.add_argument("--partition", default=None)
    p.add_argument("--k", type=int, default=None, help="Cluster count when no partition is given")
    p.add_argument("--train", default=None, help="Training samples for gamma or partition")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--batch", type=int, default=None, help="CMS block size")
    p.add_argument("--mmd", action="store_true", help="Also report MMD^2")
    p.add_argument("--gamma-source", choices=["train", "test", "value"], default=None)
    p.add_argument("--n-test", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--formats", type=_formats_arg, default=None, help="Comma-separated: json,csv,svg,xlsx")
    p.add_argument("--external", default=None, help="CSV of external metrics keyed by ordinal")
    _add_gamma(p)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("synth", help="Synthetic images with independent pixel blocks")
    p.add_argument("--spec", required=True, help="JSON block description")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--partition-out", default=None, help="Also write the ground-truth partition")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="Compare image-wise CMS with the product of cluster-wise CMS")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    _add_gamma(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("merge", help="Average report CSVs of several runs by ordinal")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("pipeline", help="cka, cluster and monitor in one run")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--snapshots", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--linkage", default=None, choices=["average", "complete", "single"])
    p.add_argument("--out", required=True)
    p.add_argument("--gamma-source", choices=["train", "test", "value"], default=None)
    p.add_argument("--n-test", type=int, default=None)
    p.add_argument("--mmd", action="store_true")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--formats", type=_formats_arg, default=None)
    _add_gamma(p)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(level=args.log_level.upper() if args.log_level else None)
    try:
        if args.config:
            if not os.path.exists(args.config):
                raise InputFormatError(f"config file not found: {args.config}")
            try:
                load_config_file(args.config)
            except (KeyError, TypeError, yaml.YAMLError) as e:
                raise InputFormatError(f"invalid config {args.config}: {e}") from e
            setup_logging(level=args.log_level.upper() if args.log_level else None)
        return args.func(args)
    except InputFormatError as e:
        logger.error(f"Input error: {e}")
        return EXIT_INPUT
    except DegenerateDataError as e:
        logger.error(f"Degenerate data: {e}")
        return EXIT_DEGENERATE
    except CmsMonitorError as e:
        logger.error(str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
