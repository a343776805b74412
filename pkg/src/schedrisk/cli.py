"""Command-line entry point: validate, simulate, transform, compare, report.

Exit codes: 0 success, 1 validation or transform failure, 2 parse/IO failure,
3 runtime failure, 4 usage error. Diagnostics go to stderr as ``error[CODE]: ...``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .documents import ParseError, parse_model, parse_scenario, serialize_model
from .engine import ExecutionCapExceeded, SimulationConfig, derive_seed, run_monte_carlo
from .model import ProcessModel, validate_model
from .scenario import TransformError, apply_scenario
from .stats import (
    METRICS,
    boxplot_descriptor,
    compare,
    export_results_csv,
    read_results_csv,
    summarize,
    summarize_results,
)

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, "USAGE", f"{self.prog}: {message}")


def _err(code: str, message: str) -> None:
    print(f"error[{code}]: {message}", file=sys.stderr)


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(EXIT_PARSE, "IO", f"cannot read {path}: {exc.strerror}") from None


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(EXIT_PARSE, "IO", f"cannot write {path}: {exc.strerror}") from None


def _report_parse_error(exc: ParseError) -> None:
    for issue in exc.issues[:-1]:
        _err(issue.code, issue.format(exc.source))


def _load_model(path: str, check: bool = True) -> ProcessModel:
    try:
        model = parse_model(_read(path), source=path)
    except ParseError as exc:
        _report_parse_error(exc)
        last = exc.issues[-1]
        raise CliError(EXIT_PARSE, last.code, last.format(path)) from None
    if check:
        diags = validate_model(model)
        if diags:
            for d in diags[:-1]:
                _err(d.rule, f"{path}: {d}")
            raise CliError(EXIT_INVALID, diags[-1].rule, f"{path}: {diags[-1]}")
    return model


def _load_scenario(path: str):
    try:
        return parse_scenario(_read(path), source=path)
    except ParseError as exc:
        _report_parse_error(exc)
        last = exc.issues[-1]
        raise CliError(EXIT_PARSE, last.code, last.format(path)) from None


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _simulate(model: ProcessModel, iterations: int, seed: int, workers: int):
    try:
        return run_monte_carlo(model, SimulationConfig(iterations=iterations, master_seed=seed), workers=workers)
    except ExecutionCapExceeded as exc:
        raise CliError(EXIT_RUNTIME, "EXECUTION_CAP", str(exc)) from None


def _summary_doc(model: ProcessModel, rs, seed: int) -> dict:
    return {
        "model": model.name,
        "iterations": len(rs),
        "seed": seed,
        "metrics": {m: s.to_dict() for m, s in summarize_results(rs).items()},
        "loop_firings": {d: {"mean": float(v.mean()), "max": int(v.max())} for d, v in rs.loop_firings.items()},
    }


def cmd_validate(args) -> int:
    model = _load_model(args.model)
    n_tasks = sum(1 for _ in model.iter_tasks())
    print(f"ok: {args.model}: {len(model.steps)} steps, {n_tasks} tasks")
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = _load_model(args.model)
    rs = _simulate(model, args.iterations, args.seed, args.workers)
    _write(args.out, export_results_csv(rs))
    if args.summary:
        _write(args.summary, _dump_json(_summary_doc(model, rs, args.seed)))
    total = summarize(rs.totals)
    print(f"{model.name}: {len(rs)} iterations, total median {total.median:.1f} d, "
          f"mean {total.mean:.1f} d, std {total.sample_std:.1f} d")
    return EXIT_OK


def _transformed(args):
    model = _load_model(args.model)
    scenario = _load_scenario(args.scenario)
    try:
        return model, scenario, apply_scenario(model, scenario)
    except TransformError as exc:
        raise CliError(EXIT_INVALID, exc.code, f"{args.scenario}: {exc.message}") from None


def cmd_transform(args) -> int:
    _, scenario, out = _transformed(args)
    _write(args.out, serialize_model(out))
    print(f"applied {len(scenario.ops)} ops from {scenario.name!r}; wrote {args.out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    model, scenario, to_be = _transformed(args)
    other_seed = args.seed if args.paired else derive_seed(args.seed, "transformed")
    base = _simulate(model, args.iterations, args.seed, args.workers)
    trans = _simulate(to_be, args.iterations, other_seed, args.workers)
    report = compare(base, trans)
    doc = {
        "model": model.name,
        "scenario": scenario.name,
        "iterations": args.iterations,
        "seed": args.seed,
        "transformed_seed": other_seed,
        "paired": args.paired,
        "metrics": report.to_dict(),
    }
    _write(args.report, _dump_json(doc))
    print(f"{'metric':24s} {'as-is':>8s} {'to-be':>8s} {'median -%':>10s}")
    for name, mc in report.metrics.items():
        red = mc.display("reduction_pct_median")
        print(f"{name:24s} {mc.baseline.median:8.1f} {mc.transformed.median:8.1f} "
              f"{'n/a' if red is None else f'{red:.1f}':>10s}")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        columns = read_results_csv(_read(args.results).decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise CliError(EXIT_PARSE, "CSV", f"{args.results}: {exc}") from None
    if args.boxplot:
        boxes = [boxplot_descriptor(m, columns[m]).to_dict() for m in METRICS]
        _write(args.boxplot, _dump_json({"source": args.results, "boxplots": boxes}))
    if args.summary:
        _write(args.summary, _dump_json({"source": args.results,
                                         "metrics": {m: summarize(columns[m]).to_dict() for m in METRICS}}))
    for m in METRICS:
        s = summarize(columns[m])
        print(f"{m:24s} median {s.median:8.1f}  mean {s.mean:8.1f}  std {s.sample_std:7.1f}  "
              f"outliers {s.outliers_low}/{s.outliers_high}")
    return EXIT_OK


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="schedrisk", description="Monte Carlo schedule-risk analysis of process models.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def run_opts(sp):
        sp.add_argument("--iterations", type=_positive, default=10_000)
        sp.add_argument("--seed", type=_seed, default=0)
        sp.add_argument("--workers", type=_positive, default=1,
                        help="processes used for the Monte Carlo batch (output does not depend on it)")

    sp = sub.add_parser("validate", help="check a model document")
    sp.add_argument("model")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("simulate", help="run a Monte Carlo analysis and write per-iteration CSV")
    sp.add_argument("model")
    run_opts(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--summary")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("transform", help="apply a scenario and write the canonical transformed model")
    sp.add_argument("model")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("compare", help="simulate a model with and without a scenario and compare")
    sp.add_argument("model")
    sp.add_argument("--scenario", required=True)
    run_opts(sp)
    sp.add_argument("--report", required=True)
    sp.add_argument("--paired", action="store_true",
                    help="use the same master seed on both sides (common random numbers)")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("report", help="boxplot descriptors and summaries from a results CSV")
    sp.add_argument("results")
    sp.add_argument("--boxplot")
    sp.add_argument("--summary")
    sp.set_defaults(func=cmd_report)
    return p


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            raise CliError(EXIT_USAGE, "USAGE", "missing subcommand (validate, simulate, transform, compare, report)")
        return args.func(args)
    except CliError as exc:
        _err(exc.code, exc.message)
        return exc.status
    except KeyboardInterrupt:
        _err("INTERRUPTED", "interrupted")
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
