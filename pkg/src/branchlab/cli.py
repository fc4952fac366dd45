# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Command-line entry point.

    branchlab enumerate [--list] [--out branches.csv]
    branchlab run --run-id R [--workers N] [--seed-list 1,2,3] [--overwrite | --resume]
    branchlab analyze [NAME ...] [--run-ids A,B] [--metric M] [--component C] [--out DIR]
    branchlab report [--run-ids A,B] [--component C] [--out report.txt]

The config file (--config, else .branchlab.yaml found upwards from cwd)
drives everything; flags only narrow scope. Diagnostics go to stderr,
listings and artifact paths to stdout.

Exit codes: 0 success, 1 usage/analysis error, 2 config error,
3 run-id conflict, 4 I/O error (dataset, log root, records).
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import pandas as pd

from .analysis import ANALYSIS_DIR, merge_logs
from .analysis_stats import AnalysisError
from .analysis_suite import ANALYSES, AnalysisOptions, run_analyses
from .config_loader import ConfigError, LabConfig
from .dataset import DatasetError, load_dataset
from .executor import ExecutionOptions, LogRootError, RecordError, RunIdConflictError, run_all
from .report import ReportPrinter, render_report
from .search_space import branch_id, data_collection_key, effective_size, enumerate_branches, logdir_path

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_CONFLICT = 3
EXIT_IO = 4


def eprint(*args, **kwargs):
    print(*args, file=sys.stderr, **kwargs)


def _split_list(value: str | None) -> list[str]:
    if not value:
        return []
    return [item.strip() for item in value.split(",") if item.strip()]


def _seed_list(value: str | None) -> list[int] | None:
    items = _split_list(value)
    if not items:
        return None
    try:
        return [int(item) for item in items]
    except ValueError:
        raise ConfigError("seeds", f"--seed-list must be comma-separated integers, got {value!r}") from None


def _run_ids(args) -> list[str] | None:
    ids = _split_list(getattr(args, "run_ids", None))
    if getattr(args, "run_id", None):
        ids.append(args.run_id)
    return ids or None


def _analysis_options(config: LabConfig, args) -> AnalysisOptions:
    return AnalysisOptions.from_mapping(config.analysis).narrowed(
        metric=getattr(args, "metric", None),
        component=getattr(args, "component", None),
        top_n=getattr(args, "top_n", None),
    )


def cmd_enumerate(config: LabConfig, args) -> int:
    spec = config.search_space(_seed_list(args.seed_list))
    branches = enumerate_branches(spec)
    collections = {data_collection_key(b) for b in branches}
    eprint(f"[branchlab-enumerate] {len(branches)} branches in {len(collections)} data collections")
    print(effective_size(spec))
    if args.list:
        for branch in branches:
            print(branch_id(branch))
    if args.out:
        rows = [
            {"BranchID": branch_id(b), "LogDir": logdir_path(b), "Collection": data_collection_key(b), **b.to_dict()}
            for b in branches
        ]
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(rows).to_csv(out, index=False, lineterminator="\n")
        eprint(f"[branchlab-enumerate] branch listing written to {out}")
    return EXIT_OK


def cmd_run(config: LabConfig, args) -> int:
    run_id = args.run_id or config.run_id
    if not run_id:
        raise ConfigError("run_id", "no run id: pass --run-id or set 'run_id' in the config file")
    path, schema = config.require_dataset()
    dataset = load_dataset(path, schema)
    spec = config.search_space(_seed_list(args.seed_list))
    options = ExecutionOptions(
        settings=config.transform_settings(),
        model_specs=config.model_specs(),
        overwrite=args.overwrite,
        resume=args.resume,
        cache_dir=config.cache_dir,
        dump_intermediate=bool(config.execution["dump_intermediate"]),
        save_models=bool(config.execution["save_models"]),
    )
    workers = args.workers or config.workers
    eprint(f"[branchlab-run] {effective_size(spec)} branches on {dataset.n_rows}×{dataset.n_features} "
           f"({path.name}), {workers} worker(s)")

    summary = run_all(spec, dataset, run_id, workers=workers, log_root=config.log_root, options=options)

    eprint("")
    eprint("=" * 60)
    eprint(f"RUN {summary.run_id}")
    eprint("=" * 60)
    eprint(f"  Branches: {summary.branch_count}")
    if summary.resumed:
        eprint(f"  Resumed: {summary.resumed}")
    eprint(f"  Failed: {len(summary.failures)}")
    eprint(f"  Time: {summary.elapsed:.2f}s")
    for failed_id, error in summary.failures[:10]:
        eprint(f"    - {failed_id}: {error}")
    if len(summary.failures) > 10:
        eprint(f"    ... and {len(summary.failures) - 10} more")
    eprint("=" * 60)
    if summary.failures:
        eprint(f"[branchlab-run] warning: {len(summary.failures)} branch(es) failed; see run.json")
    print(summary.merged_csv)
    return EXIT_OK


def cmd_analyze(config: LabConfig, args) -> int:
    options = _analysis_options(config, args)
    table = merge_logs(config.log_root, _run_ids(args), lenient=args.lenient)
    out_dir = Path(args.out) if args.out else config.log_root / ANALYSIS_DIR
    eprint(f"[branchlab-analyze] {len(table)} branches from run(s) {', '.join(table.run_ids)}")
    result = run_analyses(table, args.analyses or None, out_dir, options)
    for name, paths in result.artifacts.items():
        for path in paths:
            print(path)
        eprint(f"[branchlab-analyze] {name}: {len(paths)} artifact(s)")
    for name, reason in result.skipped.items():
        eprint(f"[branchlab-analyze] {name}: skipped ({reason})")
    return EXIT_OK


def cmd_report(config: LabConfig, args) -> int:
    options = _analysis_options(config, args)
    table = merge_logs(config.log_root, _run_ids(args), lenient=args.lenient)
    if args.out:
        text = render_report(table, options)
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        eprint(f"[branchlab-report] written to {out}")
    else:
        sys.stdout.write(ReportPrinter(use_colors=True, stream=sys.stdout).render(table, options))
    return EXIT_OK


COMMANDS = {
    "enumerate": cmd_enumerate,
    "run": cmd_run,
    "analyze": cmd_analyze,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchlab",
        description="Branchlab: deterministic pipeline search experiments on tabular binary classification",
    )
    parser.add_argument("--config", default=None, help="Path to config file (default: .branchlab.yaml lookup)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_enum = sub.add_parser("enumerate", help="Count (and list) the branches of the search space")
    p_enum.add_argument("--list", action="store_true", help="Print every branch id")
    p_enum.add_argument("--out", default=None, help="Write the branch listing as CSV")
    p_enum.add_argument("--seed-list", default=None, help="Comma-separated seeds overriding the config")

    p_run = sub.add_parser("run", help="Execute every branch and write the LogDir tree")
    p_run.add_argument("--run-id", default=None, help="Run id (default: 'run_id' from the config)")
    p_run.add_argument("--workers", type=int, default=None, help="Concurrent jobs (default: config 'workers')")
    p_run.add_argument("--seed-list", default=None, help="Comma-separated seeds overriding the config")
    mode = p_run.add_mutually_exclusive_group()
    mode.add_argument("--overwrite", action="store_true", help="Replace an existing run with the same id")
    mode.add_argument("--resume", action="store_true", help="Continue a partial run, skipping recorded branches")

    p_an = sub.add_parser("analyze", help="Write analysis CSV artifacts")
    p_an.add_argument("analyses", nargs="*", help=f"Analyses to run (default: all of {', '.join(ANALYSES)})")
    p_report = sub.add_parser("report", help="Print the consolidated text report")
    for p in (p_an, p_report):
        p.add_argument("--run-id", default=None, help="Restrict to one run")
        p.add_argument("--run-ids", default=None, help="Comma-separated run ids (default: all runs)")
        p.add_argument("--metric", default=None, help="Primary metric (default: config 'analysis.metric')")
        p.add_argument("--component", default=None, help="Restrict component-level analyses to one component")
        p.add_argument("--top-n", type=int, default=None, help="Rows in ranking tables")
        p.add_argument("--out", default=None, help="Output directory (analyze) or file (report)")
        p.add_argument("--lenient", action="store_true", help="Skip malformed branch records with a warning")
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    eprint(f"[branchlab] warning: {message}")


def main(argv: list[str] | None = None) -> int:
    """Console entry point."""
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", None) is not None and args.workers < 1:
        eprint("[branchlab] error: --workers must be a positive integer")
        return EXIT_USAGE
    warnings.showwarning = _show_warning
    try:
        config = LabConfig(args.config)
        return COMMANDS[args.command](config, args)
    except ConfigError as exc:
        eprint(f"[branchlab] config error ({exc.key}): {exc}")
        return EXIT_CONFIG
    except RunIdConflictError as exc:
        eprint(f"[branchlab] {exc}")
        return EXIT_CONFLICT
    except (LogRootError, RecordError, DatasetError, OSError) as exc:
        eprint(f"[branchlab] I/O error: {exc}")
        return EXIT_IO
    except AnalysisError as exc:
        eprint(f"[branchlab] analysis error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
