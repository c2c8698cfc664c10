"""Command-line interface.

Subcommands: ingest (panel intake and summary statistics), select (forest
importances and per-group proxy choice), grow (one pruned tree on the full
sample), study (the full multi-subsample pipeline). Exit codes: 0 on
success, 1 when a study or grow run ends degraded (some subsample supports
no tree), 2 on configuration or input errors.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import CONFIG_ENV_VAR, RunConfig, SubsampleSpec, load_config
from .errors import ChartersegError
from .forest import ForestParams, grow_forest, importance_to_csv, permutation_importance
from .panel import FullSample, compute_raw_proxies, load_panel, write_exclusions_csv
from .rescale import build_scored_matrix
from .seeding import derive_seed
from .select import (
    default_catalog,
    select_proxies,
    selection_to_csv,
    selection_to_spec_fragment,
)
from .study import _fmt, _summary_table, run_study, write_study


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="charterseg",
        description="Charter-value segmentation of bank panels with regression trees.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("ingest", "load the panel, report row counts, write summary statistics"),
        ("select", "grow the proxy forest and pick one proxy per group"),
        ("grow", "grow and prune a single tree on the full sample"),
        ("study", "run the full study over all configured subsamples"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=os.environ.get(CONFIG_ENV_VAR),
                       help=f"run config JSON (default: ${CONFIG_ENV_VAR})")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker threads; results do not depend on this")
        p.add_argument("--min-leaf", type=int, default=None,
                       help="override tree min_leaf")
        p.add_argument("--trees", type=int, default=None,
                       help="override forest n_trees")
        p.add_argument("--rescale-scope", choices=("subsample", "full"), default=None,
                       help="override where score knots are computed")
    return parser


def _load_run_config(args) -> RunConfig:
    if not args.config:
        raise ChartersegError(
            f"no config given: pass --config or set ${CONFIG_ENV_VAR}")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    if args.min_leaf is not None:
        cfg = replace(cfg, tree=replace(cfg.tree, min_leaf=args.min_leaf))
    if args.trees is not None:
        cfg = replace(cfg, forest=replace(cfg.forest, n_trees=args.trees))
    if args.rescale_scope is not None:
        cfg = replace(cfg, rescale_scope=args.rescale_scope)
    return cfg


def _load_data(cfg: RunConfig):
    if not cfg.data.path:
        raise ChartersegError("config.data.path is required for this command")
    return load_panel(cfg.data.path, schema=cfg.data.columns, window=cfg.data.window)


def cmd_ingest(cfg: RunConfig) -> int:
    panel = _load_data(cfg)
    frame = compute_raw_proxies(panel)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [[name, s.n, _fmt(s.mean), _fmt(s.std), _fmt(s.min), _fmt(s.max),
             int(s.std_defined)] for name, s in _summary_table(frame)]
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variable", "n", "mean", "std", "min", "max", "std_defined"])
        writer.writerows(rows)
    write_exclusions_csv(panel.exclusions + frame.exclusions, out / "exclusions.csv")
    print(f"panel: {len(panel)} rows loaded, window {panel.window[0]}-{panel.window[1]}")
    print(f"usable after ratio checks: {len(frame)} "
          f"(excluded: {len(panel.exclusions) + len(frame.exclusions)})")
    print(f"summary statistics: {out / 'summary.csv'}")
    return 0


def cmd_select(cfg: RunConfig) -> int:
    panel = _load_data(cfg)
    matrix = build_scored_matrix(panel, cfg.proxies)
    forest = grow_forest(matrix, ForestParams(cfg.forest.n_trees, cfg.forest.mtry,
                                              cfg.forest.min_leaf,
                                              derive_seed(cfg.seed, 1)))
    importance = permutation_importance(forest, matrix, seed=derive_seed(cfg.seed, 2))
    selection = select_proxies(importance, default_catalog(cfg.proxies))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    importance_to_csv(importance, out / "importance.csv")
    selection_to_csv(selection, out / "selection.csv")
    (out / "selected_proxies.json").write_text(
        selection_to_spec_fragment(selection, cfg.proxies), encoding="utf-8")
    print(f"rows scored: {matrix.n_rows}; forest: {cfg.forest.n_trees} trees, "
          f"OOB MSE {importance.oob_mse:.6f}")
    for group, name in selection.chosen:
        print(f"  {group}: {name} ({selection.importance.by_name()[name]:.1f}% IncMSE)")
    print(f"wrote {out / 'importance.csv'}, {out / 'selection.csv'}, "
          f"{out / 'selected_proxies.json'}")
    return 0


def _print_study_summary(results) -> None:
    factor_order: list[str] = []
    for r in results:
        for name, _ in r.verdicts:
            if name not in factor_order:
                factor_order.append(name)
    name_width = max(len(r.name) for r in results)
    header = "subsample".ljust(name_width) + "  status   " + "  ".join(
        f"{f:>5}" for f in factor_order)
    print(header)
    for r in results:
        verdicts = dict(r.verdicts)
        cells = "  ".join(f"{verdicts.get(f, ''):>5}" for f in factor_order)
        print(f"{r.name.ljust(name_width)}  {r.status:<8} {cells}")


def cmd_grow(cfg: RunConfig, jobs: int) -> int:
    cfg = replace(cfg, subsamples=(SubsampleSpec("full", FullSample()),))
    result = run_study(cfg, jobs=jobs)
    write_study(result, cfg.out)
    r = result.results[0]
    if r.status != "ok":
        print(f"no tree: {r.reason}", file=sys.stderr)
        return 1
    print(f"tree on {r.n_rows} rows: {r.tree.n_leaves} leaves "
          f"(alpha {r.trace.chosen_alpha:.6g})")
    print(f"Q^Min {r.qmin.leaf.mean:.3f} via {r.qmin.describe()}")
    print(f"Q^Max {r.qmax.leaf.mean:.3f} via {r.qmax.describe()}")
    print(f"wrote {Path(cfg.out) / 'trees'} and {Path(cfg.out) / 'report.md'}")
    return 0


def cmd_study(cfg: RunConfig, jobs: int) -> int:
    result = run_study(cfg, jobs=jobs)
    write_study(result, cfg.out)
    _print_study_summary(result.results)
    print(f"bundle written to {cfg.out}")
    return 1 if result.degraded else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_run_config(args)
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "select":
            return cmd_select(cfg)
        if args.command == "grow":
            return cmd_grow(cfg, args.jobs)
        if args.command == "study":
            return cmd_study(cfg, args.jobs)
        raise ChartersegError(f"unknown command {args.command!r}")
    except (ChartersegError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    raise SystemExit(main())
