"""Batch command-line front end.

Loads fact files, runs one of the commands (stats, mine, predict, cv,
coverage, sweep) and emits a result document as a human table, JSON, or CSV.
JSON is the machine interface: with fixed inputs, flags, and seed the output
is byte-identical apart from the timing fields in `diagnostics` and sweep
rows, which are informational only.

Exit codes: 0 success (including empty result sets), 1 argument/parse/
validation errors, 2 unexpected runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time

from .errors import DatasetError, EhupmError, FactSyntaxError, SpecError
from .facts import FactSet, parse_facts
from .masks import parse_mask
from .miner import MiningConfig, PatternMode, item_filter_to_text, mine, parse_item_filter
from .model import Dataset, assemble_dataset
from .prediction import (
    PredictorSet,
    build_predictors,
    classify,
    coverage_metrics,
    cross_validate,
    predict,
)
from .utility import parse_utility_spec


class _UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on bad flags, not argparse's default 2
        raise _UsageError(f"{self.prog}: error: {message}")


def _default_threads() -> int:
    try:
        return max(int(os.environ.get("EHUPM_THREADS", "1")), 1)
    except ValueError:
        return 1


def _add_common(parser: _ArgumentParser) -> None:
    parser.add_argument("inputs", nargs="+", help="fact file(s); multiple files are merged in order")
    parser.add_argument(
        "--rename",
        action="append",
        default=[],
        metavar="OLD=NEW",
        help="rename an input predicate before assembly (repeatable)",
    )
    parser.add_argument(
        "--format", choices=("table", "json", "csv"), default="table", help="output format"
    )
    parser.add_argument("--out", metavar="PATH", help="write output to a file instead of stdout")
    parser.add_argument("--seed", type=int, default=0, help="seed for fold assignment")
    parser.add_argument(
        "--threads",
        type=int,
        default=_default_threads(),
        help="worker threads for mining (default: EHUPM_THREADS or 1); results do not depend on it",
    )


def _add_fit_options(parser: _ArgumentParser) -> None:
    parser.add_argument("--min-occ", type=int, default=1, help="occurrence threshold for patterns")
    parser.add_argument(
        "--pearson", type=float, default=0.5, help="minimum absolute correlation for a predictor"
    )
    parser.add_argument("--max-size", type=int, default=3, help="maximum pattern size")
    parser.add_argument(
        "--target-facets",
        metavar="J,K,...",
        help="transaction facet indices to fit against (default: all)",
    )
    parser.add_argument("--object-facet", type=int, default=0, help="target object facet index")
    parser.add_argument("--filter", default="all", help="item pre-filter (all | nonzero:COL | disagree:COND,COND)")


def build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(
        prog="ehupm",
        description="Mine extended high-utility patterns from layered fact files.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("stats", help="dataset statistics", description="Report dataset statistics.")
    _add_common(p)

    p = sub.add_parser(
        "mine",
        help="enumerate valid patterns",
        description="Enumerate patterns meeting the occurrence, utility, size, and mask constraints.",
    )
    _add_common(p)
    p.add_argument("--min-occ", type=int, default=1, help="occurrence threshold")
    p.add_argument("--min-util", type=float, default=0.0, help="utility threshold (strict lower bound)")
    p.add_argument("--size", default="1..3", metavar="MIN..MAX", help="pattern size range")
    p.add_argument("--mode", choices=("itemset", "sequence"), default="itemset")
    p.add_argument(
        "--contiguous",
        action="store_true",
        help="sequence mode: require pattern items to be adjacent in the transaction",
    )
    p.add_argument("--filter", default="all", help="item pre-filter (all | nonzero:COL | disagree:COND,COND)")
    p.add_argument(
        "--utility", required=True, metavar="SPEC", help="utility function, e.g. 'hfirst:filter(obj.0):max'"
    )
    p.add_argument("--intra", choices=("sum", "max", "min", "avg"), default="sum", help="intra-pattern aggregator")
    p.add_argument("--mask", action="append", default=[], help="pattern mask, e.g. size:2..4 or cover:noun,verb,adj@3")

    p = sub.add_parser(
        "predict",
        help="predict the object facet per transaction",
        description="Predict the target object facet for every transaction, from a saved or freshly fitted model.",
    )
    _add_common(p)
    _add_fit_options(p)
    p.add_argument("--model", metavar="PATH", help="load predictors instead of fitting")
    p.add_argument("--save-model", metavar="PATH", help="persist the fitted predictors")

    p = sub.add_parser(
        "cv",
        help="cross-validate the prediction pipeline",
        description="K-fold cross-validation; folds partition objects.",
    )
    _add_common(p)
    _add_fit_options(p)
    p.add_argument("--folds", type=int, default=5)

    p = sub.add_parser(
        "coverage",
        help="pattern coverage metrics",
        description="Transaction and combination coverage of the fitted predictor patterns.",
    )
    _add_common(p)
    _add_fit_options(p)

    p = sub.add_parser(
        "sweep",
        help="grid of cv + coverage over thresholds",
        description="Run cv and coverage over a grid of occurrence and correlation thresholds.",
    )
    _add_common(p)
    p.add_argument("--min-occ", default="1", metavar="A,B,...", help="occurrence thresholds")
    p.add_argument(
        "--pearson", default="0.5", metavar="A..B:STEP | A,B,...", help="absolute correlation thresholds"
    )
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--max-size", type=int, default=3)
    p.add_argument("--target-facets", metavar="J,K,...")
    p.add_argument("--object-facet", type=int, default=0)
    p.add_argument("--filter", default="all")

    return parser


def _load_dataset(args) -> Dataset:
    merged = FactSet()
    for path in args.inputs:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                text = handle.read()
        except OSError as err:
            raise _UsageError(f"cannot read {path}: {err.strerror}") from None
        merged.merge(parse_facts(text))
    renames = {}
    for entry in args.rename:
        old, sep, new = entry.partition("=")
        if not sep or not old or not new:
            raise _UsageError(f"--rename expects OLD=NEW, got {entry!r}")
        renames[old] = new
    if renames:
        merged = merged.rename(renames)
    return assemble_dataset(merged)


def _dataset_section(dataset: Dataset) -> dict:
    stats = dataset.stats()
    stats["facet_dims"] = {
        "item": dataset.dims.item,
        "transaction": dataset.dims.transaction,
        "object": dataset.dims.object,
        "container": dataset.dims.container,
    }
    return stats


def _parse_size_range(text: str) -> tuple[int, int]:
    low, sep, high = text.partition("..")
    if not sep or not low.strip().isdigit() or not high.strip().isdigit():
        raise _UsageError(f"--size expects MIN..MAX, got {text!r}")
    return int(low), int(high)


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise _UsageError(f"{flag} expects a comma-separated integer list, got {text!r}") from None


def _parse_float_axis(text: str, flag: str) -> list[float]:
    if ".." in text:
        bounds, sep, step_text = text.partition(":")
        low_text, _, high_text = bounds.partition("..")
        try:
            low, high = float(low_text), float(high_text)
            step = float(step_text) if sep else 0.1
        except ValueError:
            raise _UsageError(f"{flag} expects A..B:STEP, got {text!r}") from None
        if step <= 0 or high < low:
            raise _UsageError(f"{flag}: empty or descending range {text!r}")
        count = int(round((high - low) / step)) + 1
        return [round(low + i * step, 10) for i in range(count)]
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise _UsageError(f"{flag} expects numbers, got {text!r}") from None


def _target_facets(args) -> list[int] | None:
    if args.target_facets is None:
        return None
    return _parse_int_list(args.target_facets, "--target-facets")


def _cmd_stats(args, dataset: Dataset) -> dict:
    return {
        "command": "stats",
        "config": {"inputs": list(args.inputs)},
        "dataset": _dataset_section(dataset),
        "rows": [],
        "diagnostics": {},
    }


def _cmd_mine(args, dataset: Dataset) -> dict:
    min_size, max_size = _parse_size_range(args.size)
    spec = parse_utility_spec(args.utility, intra=args.intra)
    config = MiningConfig(
        utility=spec,
        min_occurrences=args.min_occ,
        min_utility=args.min_util,
        min_size=min_size,
        max_size=max_size,
        mode=PatternMode(args.mode),
        contiguous=args.contiguous,
        item_filter=parse_item_filter(args.filter),
        masks=tuple(parse_mask(text) for text in args.mask),
    )
    result = mine(dataset, config, threads=max(args.threads, 1))
    rows = [
        {
            "pattern": list(entry.pattern.items),
            "mode": entry.pattern.mode.value,
            "support": entry.support,
            "transactions": list(entry.transactions),
            "utility": entry.utility,
        }
        for entry in result.patterns
    ]
    return {
        "command": "mine",
        "config": {
            "inputs": list(args.inputs),
            "min_occ": args.min_occ,
            "min_util": args.min_util,
            "size": f"{min_size}..{max_size}",
            "mode": args.mode,
            "contiguous": args.contiguous,
            "filter": item_filter_to_text(config.item_filter),
            "utility": spec.to_text(),
            "masks": list(args.mask),
        },
        "dataset": _dataset_section(dataset),
        "rows": rows,
        "diagnostics": {
            "patterns": len(rows),
            "candidates_checked": result.candidates_checked,
            "undefined_utility": result.undefined_utility,
        },
    }


def _fit_config(args) -> dict:
    return {
        "min_occ": args.min_occ,
        "pearson": args.pearson,
        "max_size": args.max_size,
        "target_facets": args.target_facets,
        "object_facet": args.object_facet,
        "filter": args.filter,
    }


def _fit(args, dataset: Dataset) -> PredictorSet:
    return build_predictors(
        dataset,
        target_facets=_target_facets(args),
        object_facet=args.object_facet,
        min_occurrences=args.min_occ,
        min_abs_correlation=args.pearson,
        max_size=args.max_size,
        item_filter=parse_item_filter(args.filter),
    )


def _cmd_predict(args, dataset: Dataset) -> dict:
    if args.model:
        try:
            predictors = PredictorSet.load(args.model)
        except OSError as err:
            raise _UsageError(f"cannot read {args.model}: {err.strerror}") from None
    else:
        predictors = _fit(args, dataset)
    if args.save_model:
        predictors.save(args.save_model)
    rows = []
    for transaction in dataset.transactions:
        estimate = predict(predictors, transaction)
        rows.append(
            {
                "transaction": transaction.id,
                "estimate": estimate,
                "class": None if estimate is None else classify(estimate),
            }
        )
    missing = sum(1 for row in rows if row["estimate"] is None)
    return {
        "command": "predict",
        "config": {"inputs": list(args.inputs), "model": args.model, **_fit_config(args)},
        "dataset": _dataset_section(dataset),
        "rows": rows,
        "diagnostics": {"predictors": len(predictors.predictors), "missing": missing},
    }


def _cmd_cv(args, dataset: Dataset) -> dict:
    report = cross_validate(
        dataset,
        folds=args.folds,
        seed=args.seed,
        target_facets=_target_facets(args),
        object_facet=args.object_facet,
        min_occurrences=args.min_occ,
        min_abs_correlation=args.pearson,
        max_size=args.max_size,
        item_filter=parse_item_filter(args.filter),
    )
    rows = [
        {
            "fold": fold.fold,
            "total": fold.total,
            "attempted": fold.attempted,
            "exact": fold.exact,
            "missing": fold.missing,
            "accuracy": fold.accuracy,
            "missing_rate": fold.missing_rate,
            "flagged": fold.flagged,
        }
        for fold in report.folds
    ]
    return {
        "command": "cv",
        "config": {"inputs": list(args.inputs), "folds": args.folds, "seed": args.seed, **_fit_config(args)},
        "dataset": _dataset_section(dataset),
        "rows": rows,
        "summary": {
            "mean_accuracy": report.mean_accuracy,
            "accuracy_variance": report.accuracy_variance,
            "missing_rate": report.missing_rate,
        },
        "diagnostics": {},
    }


def _cmd_coverage(args, dataset: Dataset) -> dict:
    predictors = _fit(args, dataset)
    metrics = coverage_metrics(dataset, predictors.patterns())
    rows = [
        {"metric": "transaction_coverage", "value": metrics.transaction_coverage},
        {"metric": "combination_coverage", "value": metrics.combination_coverage},
    ]
    return {
        "command": "coverage",
        "config": {"inputs": list(args.inputs), **_fit_config(args)},
        "dataset": _dataset_section(dataset),
        "rows": rows,
        "diagnostics": {"predictors": len(predictors.predictors), "patterns": len(predictors.patterns())},
    }


def _cmd_sweep(args, dataset: Dataset) -> dict:
    occurrences = _parse_int_list(args.min_occ, "--min-occ")
    thresholds = _parse_float_axis(args.pearson, "--pearson")
    if not occurrences or not thresholds:
        raise _UsageError("sweep needs at least one occurrence and one correlation threshold")
    target_facets = _target_facets(args)
    item_filter = parse_item_filter(args.filter)
    rows = []
    for min_occ in occurrences:
        for threshold in thresholds:
            started = time.perf_counter()
            report = cross_validate(
                dataset,
                folds=args.folds,
                seed=args.seed,
                target_facets=target_facets,
                object_facet=args.object_facet,
                min_occurrences=min_occ,
                min_abs_correlation=threshold,
                max_size=args.max_size,
                item_filter=item_filter,
            )
            predictors = build_predictors(
                dataset,
                target_facets=target_facets,
                object_facet=args.object_facet,
                min_occurrences=min_occ,
                min_abs_correlation=threshold,
                max_size=args.max_size,
                item_filter=item_filter,
            )
            metrics = coverage_metrics(dataset, predictors.patterns())
            rows.append(
                {
                    "min_occ": min_occ,
                    "pearson": threshold,
                    "accuracy": report.mean_accuracy,
                    "missing_rate": report.missing_rate,
                    "transaction_coverage": metrics.transaction_coverage,
                    "combination_coverage": metrics.combination_coverage,
                    "predictors": len(predictors.predictors),
                    "elapsed_seconds": round(time.perf_counter() - started, 6),
                }
            )
    return {
        "command": "sweep",
        "config": {
            "inputs": list(args.inputs),
            "min_occ": args.min_occ,
            "pearson": args.pearson,
            "folds": args.folds,
            "seed": args.seed,
            "max_size": args.max_size,
            "target_facets": args.target_facets,
            "object_facet": args.object_facet,
            "filter": args.filter,
        },
        "dataset": _dataset_section(dataset),
        "rows": rows,
        "diagnostics": {},
    }


_SWEEP_METRICS = ("accuracy", "missing_rate", "transaction_coverage", "combination_coverage")


def emit_plot_data(sweep_rows: list[dict]) -> str:
    """Long-format CSV (min_occ, threshold, metric, value) from sweep rows,
    ready for plotting tools."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["min_occ", "threshold", "metric", "value"])
    for row in sweep_rows:
        for metric in _SWEEP_METRICS:
            writer.writerow([row["min_occ"], row["pearson"], metric, row[metric]])
    return buffer.getvalue()


def _render_csv(doc: dict) -> str:
    if doc["command"] == "sweep":
        return emit_plot_data(doc["rows"])
    rows = doc["rows"]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if not rows:
        return ""
    header = list(rows[0])
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if row[key] is None else _cell(row[key]) for key in header])
    return buffer.getvalue()


def _cell(value) -> str:
    if isinstance(value, list):
        return " ".join(str(v) for v in value)
    if isinstance(value, bool):
        return str(value).lower()
    return str(value)


def _render_table(doc: dict) -> str:
    lines = [f"command: {doc['command']}"]
    stats = doc["dataset"]
    dims = stats["facet_dims"]
    lines.append(
        f"dataset: {stats['containers']} containers, {stats['objects']} objects, "
        f"{stats['transactions']} transactions, {stats['items']} items; "
        f"facets (item,transaction,object,container) = "
        f"({dims['item']},{dims['transaction']},{dims['object']},{dims['container']})"
    )
    if "summary" in doc:
        for key, value in doc["summary"].items():
            lines.append(f"{key}: {value:.4f}" if isinstance(value, float) else f"{key}: {value}")
    rows = doc["rows"]
    if rows:
        header = list(rows[0])
        table = [[_cell(row[key]) if row[key] is not None else "-" for key in header] for row in rows]
        widths = [max(len(header[i]), *(len(row[i]) for row in table)) for i in range(len(header))]
        lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        for row in table:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    for key, value in doc.get("diagnostics", {}).items():
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


_COMMANDS = {
    "stats": _cmd_stats,
    "mine": _cmd_mine,
    "predict": _cmd_predict,
    "cv": _cmd_cv,
    "coverage": _cmd_coverage,
    "sweep": _cmd_sweep,
}


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(err, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1

    started = time.perf_counter()
    try:
        dataset = _load_dataset(args)
        doc = _COMMANDS[args.command](args, dataset)
    except (_UsageError, FactSyntaxError, DatasetError, SpecError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except EhupmError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # pragma: no cover - defensive
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2

    doc["diagnostics"]["elapsed_seconds"] = round(time.perf_counter() - started, 6)
    if args.format == "json":
        text = json.dumps(doc, indent=2) + "\n"
    elif args.format == "csv":
        text = _render_csv(doc)
    else:
        text = _render_table(doc)

    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as handle:
                handle.write(text)
        except OSError as err:
            print(f"error: cannot write {args.out}: {err.strerror}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
