"""Command-line entry point: ``drod {detect,eval,synth,bench}``.

Exit status is 0 on success, 2 for usage errors and 1 for runtime failures.
Data goes to files or standard output; diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from drod.data_io import DataMatrix, load_csv, read_scores, write_csv, write_scores
from drod.detector import DetectorConfig, detect, dump_round
from drod.errors import DrodError
from drod.evaluation import EvalReport, auc, precision_at_s, remove_top_s_and_cluster
from drod.geometry import METRICS
from drod.synth import InjectionPlan, inject

logger = logging.getLogger("drod")

VARIANT_FLAGS = {"full": "full", "lai": "lai_only", "sai": "sai_only", "single": "single_round"}
AGGREGATE_FLAGS = {"sum": "sum", "mean": "mean_by_inclusion"}
DEFAULT_ROUNDS = 60


class UsageError(Exception):
    """Flag combination that argparse cannot reject by itself."""


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Show every default, unless the help text already explains it."""

    def _get_help_string(self, action: argparse.Action) -> str:
        text = action.help or ""
        if "default:" in text or action.default is argparse.SUPPRESS or action.required:
            return text
        if action.option_strings == [] and action.default is None:
            return text
        return f"{text} (default: %(default)s)".lstrip()


def _eta(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"eta must lie in (0, 1], got {value}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _label_arg(value: str) -> str | None:
    return None if value == "none" else value


def _load(path: str, label_col: str, has_header: bool) -> DataMatrix:
    return load_csv(path, label_column=_label_arg(label_col), has_header=has_header)


# --------------------------------------------------------------------- detect


def cmd_detect(args: argparse.Namespace) -> int:
    if args.variant == "single" and args.rounds is not None and args.rounds > 1:
        raise UsageError("--variant single runs exactly one round; drop --rounds or set it to 1")
    data = _load(args.input, args.label_col, args.has_header)
    config = DetectorConfig(
        eta=args.eta,
        rounds=args.rounds if args.rounds is not None else DEFAULT_ROUNDS,
        upper_limit=args.upper_limit,
        metric_kind=args.metric,
        variant=VARIANT_FLAGS[args.variant],
        seed=args.seed,
        standardize=args.standardize,
        normalize_lai=args.normalize_lai,
        aggregate=AGGREGATE_FLAGS[args.aggregate],
        n_jobs=args.n_jobs,
    )
    result = detect(data, config)
    write_scores(args.output, result, data.ids)
    if args.debug_dir:
        dump_round(args.debug_dir, data, config, t=1)

    summary = (
        f"n={data.n} rounds={len(result.lambdas)} skipped={result.skipped_rounds} "
        f"lambda={min(result.lambdas)}..{max(result.lambdas)} "
        f"subsets={min(result.subset_counts)}..{max(result.subset_counts)}"
    )
    if data.labels is not None and 0 < int(data.labels.sum()) < data.n:
        summary += f" auc={auc(result.scores, data.labels):.4f}"
    print(summary, file=sys.stderr)
    return 0


# ----------------------------------------------------------------------- eval


def cmd_eval(args: argparse.Namespace) -> int:
    if args.dbi and args.k is None:
        raise UsageError("--dbi needs --k")
    data = _load(args.input, args.label_col, args.has_header)
    ids, scores, _ = read_scores(args.scores)
    if not np.array_equal(ids, np.sort(data.ids)):
        raise DrodError(f"score ids in {args.scores} do not match the {data.n} rows of {args.input}")
    # scores are sorted by id; rows are stored in id order
    scores = scores[np.searchsorted(ids, data.ids)]

    report = EvalReport()
    if data.labels is not None:
        report.auc = auc(scores, data.labels)
        report.precision_s = precision_at_s(scores, data.labels, args.s)
        report.s = args.s if args.s is not None else int(data.labels.sum())
    elif not args.dbi:
        raise UsageError("no labels to evaluate against; pass --label-col or --dbi")

    if args.dbi:
        s = args.s if args.s is not None else report.s
        if s is None:
            raise UsageError("--dbi without labels needs --s")
        clustered = remove_top_s_and_cluster(data.values, scores, s, args.k, seed=args.seed)
        report.s = s
        report.dbi_before = clustered.dbi_before
        report.dbi_after = clustered.dbi_after

    text = json.dumps(report.to_dict(), sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


# ---------------------------------------------------------------------- synth


def cmd_synth(args: argparse.Namespace) -> int:
    base = _load(args.base, args.label_col, args.has_header)
    plan = InjectionPlan.from_json(args.spec)
    seed = plan.seed if args.seed is None else args.seed
    result = inject(base, plan.scatterliers, plan.clusterliers, seed=seed, force=args.force)
    write_csv(args.output, result.as_matrix())
    counts = np.bincount(result.labels, minlength=2)
    print(f"wrote {result.values.shape[0]} rows ({counts[1]} injected) to {args.output}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------- bench


def bench_data(n: int, d: int, seed: int, latent: int = 3, noise: float = 0.01, clusters: int = 5) -> np.ndarray:
    """Gaussian clusters on a ``latent``-dimensional linear subspace of R^d plus isotropic noise.

    Real high-dimensional benchmarks concentrate near low-dimensional
    structure; this generator keeps that property while d grows.
    """
    rng = np.random.default_rng(seed)
    latent = min(latent, d)
    centers = rng.normal(scale=4.0, size=(clusters, latent))
    z = centers[rng.integers(clusters, size=n)] + rng.normal(size=(n, latent))
    embed = rng.normal(size=(latent, d)) / np.sqrt(latent)
    return z @ embed + noise * rng.normal(size=(n, d))


@dataclass(frozen=True)
class BenchPoint:
    n: int
    d: int
    seconds: float


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)), 1)[0])


def run_bench(
    ns: list[int],
    ds: list[int],
    rounds: int = 10,
    eta: float = 0.8,
    seed: int = 42,
    latent: int = 3,
    noise: float = 0.01,
) -> tuple[list[BenchPoint], dict[str, float]]:
    """Time ``detect`` over the ``ns x ds`` grid.

    Returns the timings and the fitted log-log slopes: ``"n@d=<d>"`` for every
    d with at least two sizes, ``"d@n=<n>"`` for every n with at least two
    dimensionalities.
    """
    points: list[BenchPoint] = []
    config = DetectorConfig(eta=eta, rounds=rounds, seed=seed)
    for d in ds:
        for n in ns:
            values = bench_data(n, d, seed, latent=latent, noise=noise)
            start = time.perf_counter()
            detect(values, config)
            points.append(BenchPoint(n, d, time.perf_counter() - start))
            logger.info("bench n=%d d=%d %.3fs", n, d, points[-1].seconds)

    slopes: dict[str, float] = {}
    for d in ds:
        row = [p for p in points if p.d == d]
        if len({p.n for p in row}) > 1:
            slopes[f"n@d={d}"] = loglog_slope([p.n for p in row], [p.seconds for p in row])
    for n in ns:
        col = [p for p in points if p.n == n]
        if len({p.d for p in col}) > 1:
            slopes[f"d@n={n}"] = loglog_slope([p.d for p in col], [p.seconds for p in col])
    return points, slopes


def cmd_bench(args: argparse.Namespace) -> int:
    points, slopes = run_bench(
        args.n, args.d, rounds=args.rounds, eta=args.eta, seed=args.seed, latent=args.latent, noise=args.noise
    )
    sink = open(args.output, "w", newline="", encoding="utf-8") if args.output else sys.stdout
    try:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(("n", "d", "seconds"))
        for p in points:
            writer.writerow((p.n, p.d, f"{p.seconds:.6f}"))
    finally:
        if sink is not sys.stdout:
            sink.close()
    for key, value in slopes.items():
        print(f"log-log slope {key}: {value:.3f}", file=sys.stderr)
    return 0


# --------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    fmt = _HelpFormatter
    parser = argparse.ArgumentParser(prog="drod", description=__doc__.splitlines()[0], formatter_class=fmt)
    parser.add_argument("--log-level", default="WARNING", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="score every sample of a CSV", formatter_class=fmt)
    p.add_argument("--input", required=True, help="data CSV")
    p.add_argument("--output", required=True, help="score CSV to write")
    p.add_argument("--label-col", default="last", help="'none', 'last' or a header name")
    p.add_argument("--has-header", action="store_true", help="first CSV row holds column names")
    p.add_argument("--metric", choices=METRICS, default="euclidean", help="distance")
    p.add_argument("--eta", type=_eta, default=0.8, help="sampling rate in (0, 1]")
    p.add_argument("--rounds", type=_positive_int, default=None, help=f"sampling rounds T (default: {DEFAULT_ROUNDS}; 1 with --variant single)")
    p.add_argument("--upper-limit", type=_positive_int, default=None, help="subset size limit U (default: ceil(sqrt(n)) of the round sample)")
    p.add_argument("--variant", choices=tuple(VARIANT_FLAGS), default="full", help="scoring variant")
    p.add_argument("--seed", type=_seed, default=42, help="master seed for round sampling")
    p.add_argument("--standardize", action="store_true", help="z-score features before detection")
    p.add_argument("--normalize-lai", action="store_true", help="min-max LAI within each round")
    p.add_argument("--aggregate", choices=tuple(AGGREGATE_FLAGS), default="sum", help="combine rounds by sum or by mean over inclusions")
    p.add_argument("--n-jobs", type=_positive_int, default=1, help="rounds computed concurrently")
    p.add_argument("--debug-dir", default=None, help="write round-1 edges, subsets and subset scores here (default: off)")
    p.set_defaults(func=cmd_detect, subparser=p)

    p = sub.add_parser("eval", help="AUC, Precision-s and optional DBI for a score file", formatter_class=fmt)
    p.add_argument("--scores", required=True, help="score CSV written by detect")
    p.add_argument("--input", required=True, help="data CSV providing labels (and values for --dbi)")
    p.add_argument("--label-col", default="last", help="'none', 'last' or a header name")
    p.add_argument("--has-header", action="store_true", help="first CSV row holds column names")
    p.add_argument("--s", type=_positive_int, default=None, help="top-s cut (default: the labelled outlier count)")
    p.add_argument("--dbi", action="store_true", help="also cluster before and after removing the top s")
    p.add_argument("--k", type=_positive_int, default=None, help="k-means cluster count, required by --dbi")
    p.add_argument("--seed", type=_seed, default=0, help="k-means seed")
    p.add_argument("--output", default=None, help="JSON report path (default: standard output)")
    p.set_defaults(func=cmd_eval, subparser=p)

    p = sub.add_parser("synth", help="inject scatterliers and clusterliers into a base CSV", formatter_class=fmt)
    p.add_argument("--base", required=True, help="base data CSV")
    p.add_argument("--spec", required=True, help="injection spec JSON")
    p.add_argument("--output", required=True, help="labelled CSV to write")
    p.add_argument("--label-col", default="none", help="label column of the base file, dropped on read")
    p.add_argument("--has-header", action="store_true", help="first CSV row holds column names")
    p.add_argument("--seed", type=_seed, default=None, help="overrides the seed in the spec file (default: the spec seed)")
    p.add_argument("--force", action="store_true", help="allow clusterliers above 10%% of the total")
    p.set_defaults(func=cmd_synth, subparser=p)

    p = sub.add_parser("bench", help="time detect over a grid of sizes", formatter_class=fmt)
    p.add_argument("--n", type=_positive_int, nargs="+", default=[1000, 2000, 4000, 8000], help="sample sizes")
    p.add_argument("--d", type=_positive_int, nargs="+", default=[36], help="dimensionalities")
    p.add_argument("--rounds", type=_positive_int, default=10, help="sampling rounds T")
    p.add_argument("--eta", type=_eta, default=0.8, help="sampling rate")
    p.add_argument("--seed", type=_seed, default=42, help="data and sampling seed")
    p.add_argument("--latent", type=_positive_int, default=3, help="intrinsic dimension of generated data")
    p.add_argument("--noise", type=float, default=0.01, help="isotropic noise added in all d dimensions")
    p.add_argument("--output", default=None, help="timing CSV (default: standard output)")
    p.set_defaults(func=cmd_bench, subparser=p)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        args.subparser.error(str(exc))
    except (DrodError, OSError, ValueError, KeyError) as exc:
        print(f"drod {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
