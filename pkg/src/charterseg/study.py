"""End-to-end segmentation study over configured subsamples.

For each subsample: score the proxy catalog, pick one proxy per group by
forest importance (or take a fixed list), grow and CV-prune a tree on the
six scored factors, read off the extreme-Q leaves, alignment verdicts, and
the supporting statistical tables. Results land in a deterministic bundle:
report.md, tables/*.csv, trees/*.dot and trees/*.json. The same master seed
produces byte-identical output regardless of worker count.
"""

from __future__ import annotations

import csv
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import tree as tree_mod
from .analysis import (
    GroupComparison,
    LeafPath,
    alignment_verdicts,
    extreme_leaves,
    group_comparison,
    path_rows,
)
from .config import RunConfig, SubsampleSpec
from .errors import (
    ChartersegError,
    ConfigError,
    DegenerateInputError,
    EmptyModelError,
    EmptySubsampleError,
)
from .forest import ForestParams, ImportanceReport, grow_forest, permutation_importance
from .panel import (
    PROXY_FIELDS,
    Panel,
    ProxyFrame,
    SummaryStats,
    compute_raw_proxies,
    filter_subsample,
    load_panel,
    summary_stats,
)
from .rescale import GROUPS, ScoredMatrix, build_scored_matrix
from .seeding import derive_seed
from .select import SelectionResult, canonical_specs, default_catalog, select_proxies
from .stats import pearson
from .tree import RegressionTree, TreeParams, cv_prune, export_dot, export_json


@dataclass(frozen=True)
class SubsampleResult:
    name: str
    status: str  # "ok" | "no_tree" | "empty"
    reason: str = ""
    n_rows: int = 0
    chosen: tuple[tuple[str, str], ...] = ()
    importance: Optional[ImportanceReport] = None
    tree: Optional[RegressionTree] = None
    trace: Optional[tree_mod.PruneTrace] = None
    qmin: Optional[LeafPath] = None
    qmax: Optional[LeafPath] = None
    verdicts: tuple = ()  # (factor, verdict label) pairs in factor order
    summary: tuple = ()  # (variable, SummaryStats) pairs
    correlations: tuple = ()  # (factor, r, p) triples
    comparison: Optional[GroupComparison] = None
    exclusions: tuple = ()


@dataclass(frozen=True)
class StudyResult:
    config: RunConfig
    results: tuple[SubsampleResult, ...]

    @property
    def degraded(self) -> bool:
        return any(r.status != "ok" for r in self.results)


class _MatrixCache:
    """Full-panel matrices per spec set, for rescale_scope = "full"."""

    def __init__(self, panel: Panel, frame: ProxyFrame):
        self.panel = panel
        self.frame = frame
        self._cache: dict[tuple[str, ...], ScoredMatrix] = {}

    def matrix(self, specs) -> ScoredMatrix:
        key = tuple(s.name for s in specs)
        if key not in self._cache:
            self._cache[key] = build_scored_matrix(self.panel, specs, frame=self.frame)
        return self._cache[key]


def _scope_matrix(config: RunConfig, specs, sub_panel: Panel, sub_frame: ProxyFrame,
                  full_cache: _MatrixCache) -> ScoredMatrix:
    if config.rescale_scope == "subsample":
        return build_scored_matrix(sub_panel, specs, frame=sub_frame)
    full = full_cache.matrix(specs)
    wanted = {r.row_id for r in sub_panel.rows}
    idx = [i for i, rid in enumerate(full.row_ids) if rid in wanted]
    if not idx:
        raise EmptySubsampleError("no scored rows fall inside this subsample")
    return full.take(np.array(idx))


def _run_selection(config: RunConfig, sub_panel: Panel, sub_frame: ProxyFrame,
                   full_cache: _MatrixCache, seed: int):
    """Returns (chosen mapping, ImportanceReport or None)."""
    specs = config.proxies
    by_name = {s.name: s for s in specs}
    if config.selection.mode == "fixed":
        chosen = {}
        for name in config.selection.fixed:
            if name not in by_name:
                raise ConfigError(f"fixed selection names unknown proxy {name!r}")
            group = by_name[name].group
            if group in chosen:
                raise ConfigError(f"fixed selection has two proxies for group {group!r}")
            chosen[group] = name
        return chosen, None

    catalog = default_catalog(specs)
    fp = config.forest
    if config.selection.forest_scope == "joint":
        matrix = _scope_matrix(config, specs, sub_panel, sub_frame, full_cache)
        forest = grow_forest(matrix, ForestParams(fp.n_trees, fp.mtry, fp.min_leaf,
                                                  derive_seed(seed, 1)))
        importance = permutation_importance(forest, matrix, seed=derive_seed(seed, 2))
        return select_proxies(importance, catalog).as_dict(), importance

    # Independent forest per group, each over that group's candidates only.
    names, pct, raw, err = [], [], [], []
    oob = float("nan")
    for gi, (group, members) in enumerate(catalog.groups):
        group_specs = [by_name[m] for m in members]
        matrix = _scope_matrix(config, group_specs, sub_panel, sub_frame, full_cache)
        forest = grow_forest(matrix, ForestParams(fp.n_trees, fp.mtry, fp.min_leaf,
                                                  derive_seed(seed, 1, gi)))
        rep = permutation_importance(forest, matrix, seed=derive_seed(seed, 2, gi))
        names.extend(rep.feature_names)
        pct.extend(rep.pct_inc_mse)
        raw.extend(rep.raw_delta)
        err.extend(rep.stderr)
        oob = rep.oob_mse
    importance = ImportanceReport(tuple(names), np.array(pct), np.array(raw),
                                  np.array(err), oob)
    return select_proxies(importance, catalog).as_dict(), importance


def _summary_table(frame: ProxyFrame) -> tuple:
    rows = []
    for name in ("q",) + PROXY_FIELDS:
        values = frame.column(name)
        values = values[np.isfinite(values)]
        if values.size == 0:
            continue
        rows.append((name, summary_stats(values)))
    return tuple(rows)


def _correlation_table(matrix: ScoredMatrix) -> tuple:
    rows = []
    for j, name in enumerate(matrix.feature_names):
        try:
            r, p = pearson(matrix.scores[:, j], matrix.response)
        except DegenerateInputError:
            continue
        rows.append((name, r, p))
    return tuple(rows)


def _comparison_table(matrix: ScoredMatrix, frame: ProxyFrame, specs,
                      qmin: LeafPath, qmax: LeafPath) -> Optional[GroupComparison]:
    lo = path_rows(matrix, qmin)
    hi = path_rows(matrix, qmax)
    if not lo.any() or not hi.any():
        return None
    frame_pos = {rid: i for i, rid in enumerate(frame.row_ids)}
    idx = np.array([frame_pos[rid] for rid in matrix.row_ids])
    lo_idx, hi_idx = idx[lo], idx[hi]

    min_vars = {"Q": frame.q[lo_idx]}
    max_vars = {"Q": frame.q[hi_idx]}
    directions: dict[str, Optional[str]] = {"Q": None}
    for spec in specs:
        col = frame.columns[spec.raw_field]
        min_vars[spec.name] = col[lo_idx]
        max_vars[spec.name] = col[hi_idx]
        directions[spec.name] = spec.direction
    return group_comparison(min_vars, max_vars, directions)


def _study_subsample(config: RunConfig, panel: Panel, full_cache: _MatrixCache,
                     sub: SubsampleSpec, seed: int) -> SubsampleResult:
    min_leaf = sub.min_leaf if sub.min_leaf is not None else config.tree.min_leaf
    try:
        sub_panel = filter_subsample(panel, sub.criterion)
        sub_frame = compute_raw_proxies(sub_panel)
    except (EmptySubsampleError, EmptyModelError) as exc:
        return SubsampleResult(sub.name, "empty", reason=str(exc))

    summary = _summary_table(sub_frame)
    try:
        chosen, importance = _run_selection(config, sub_panel, sub_frame, full_cache, seed)
        six = canonical_specs(chosen, config.proxies)
        matrix = _scope_matrix(config, six, sub_panel, sub_frame, full_cache)
    except (EmptySubsampleError, EmptyModelError) as exc:
        return SubsampleResult(sub.name, "no_tree", reason=str(exc), summary=summary,
                               exclusions=sub_frame.exclusions)

    chosen_pairs = tuple((g, chosen[g]) for g in GROUPS if g in chosen)
    n = matrix.n_rows
    if n < 2 * min_leaf or n < config.tree.cv_folds:
        reason = (f"{n} rows cannot support a split with min_leaf={min_leaf} "
                  f"and {config.tree.cv_folds}-fold CV")
        return SubsampleResult(sub.name, "no_tree", reason=reason, n_rows=n,
                               chosen=chosen_pairs, importance=importance,
                               summary=summary, exclusions=matrix.exclusions)

    params = TreeParams(min_leaf=min_leaf, max_depth=config.tree.max_depth)
    fitted, trace = cv_prune(matrix, params, k=config.tree.cv_folds,
                             rule=config.tree.prune_rule, seed=derive_seed(seed, 3))
    qmin, qmax = extreme_leaves(fitted)
    verdicts = alignment_verdicts(fitted, (qmin, qmax))
    verdict_pairs = tuple((name, verdicts[name].label) for name in fitted.feature_names)
    comparison = None
    if fitted.n_leaves > 1:
        comparison = _comparison_table(matrix, sub_frame if config.rescale_scope == "subsample"
                                       else full_cache.frame, six, qmin, qmax)
    return SubsampleResult(
        sub.name, "ok", n_rows=n, chosen=chosen_pairs, importance=importance,
        tree=fitted, trace=trace, qmin=qmin, qmax=qmax, verdicts=verdict_pairs,
        summary=summary, correlations=_correlation_table(matrix),
        comparison=comparison, exclusions=matrix.exclusions,
    )


def run_study(config: RunConfig, panel: Optional[Panel] = None, jobs: int = 1) -> StudyResult:
    """Run the segmentation study on every configured subsample.

    Args:
        config: run configuration; config.data.path is read when no panel is
            passed in directly.
        panel: optional pre-loaded panel (tests, notebooks).
        jobs: worker threads across subsamples; results are seeded per
            subsample index, so output does not depend on this value.

    Returns:
        StudyResult in configuration order; degraded is True when any
        subsample ended without a tree.
    """
    if panel is None:
        if not config.data.path:
            raise ConfigError("config.data.path is required when no panel is supplied")
        panel = load_panel(config.data.path, schema=config.data.columns,
                           window=config.data.window)
    full_cache = _MatrixCache(panel, compute_raw_proxies(panel))

    tasks = [(sub, derive_seed(config.seed, i)) for i, sub in enumerate(config.subsamples)]

    def run_one(item):
        sub, seed = item
        try:
            return _study_subsample(config, panel, full_cache, sub, seed)
        except ChartersegError as exc:
            return SubsampleResult(sub.name, "no_tree", reason=str(exc))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_one, tasks))
    else:
        results = [run_one(t) for t in tasks]
    return StudyResult(config, tuple(results))


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_study(result: StudyResult, outdir) -> None:
    """Write the study bundle: report.md, tables/*.csv, trees/*.dot|.json."""
    out = Path(outdir)
    tables = out / "tables"
    trees = out / "trees"
    tables.mkdir(parents=True, exist_ok=True)
    trees.mkdir(parents=True, exist_ok=True)

    factor_order: list[str] = []
    for r in result.results:
        for name, _ in r.verdicts:
            if name not in factor_order:
                factor_order.append(name)
    _write_csv(tables / "verdicts.csv", ["subsample", "status"] + factor_order,
               [[r.name, r.status] + [dict(r.verdicts).get(f, "") for f in factor_order]
                for r in result.results])

    lines = ["# Charter-value segmentation report", ""]
    lines.append(f"- master seed: {result.config.seed}")
    lines.append(f"- rescale scope: {result.config.rescale_scope}")
    lines.append(f"- selection mode: {result.config.selection.mode}")
    lines.append(f"- prune rule: {result.config.tree.prune_rule} "
                 f"({result.config.tree.cv_folds}-fold CV)")
    lines.append("")

    for r in result.results:
        slug = _slug(r.name)
        lines.append(f"## {r.name}")
        lines.append("")
        if r.status != "ok":
            lines.append(f"- status: {r.status} ({r.reason})")

        if r.summary:
            _write_csv(tables / f"summary_{slug}.csv",
                       ["variable", "n", "mean", "std", "min", "max", "std_defined"],
                       [[name, s.n, _fmt(s.mean), _fmt(s.std), _fmt(s.min), _fmt(s.max),
                         int(s.std_defined)] for name, s in r.summary])
        if r.exclusions:
            _write_csv(tables / f"exclusions_{slug}.csv", ["row_id", "reason"],
                       [[e.row_id, e.reason] for e in r.exclusions])
        if r.importance is not None:
            _write_csv(tables / f"importance_{slug}.csv",
                       ["feature", "pct_inc_mse", "raw_delta", "stderr"],
                       [[name, _fmt(r.importance.pct_inc_mse[i]),
                         _fmt(r.importance.raw_delta[i]), _fmt(r.importance.stderr[i])]
                        for i, name in enumerate(r.importance.feature_names)])
        if r.chosen:
            lines.append("- selected: " + " ".join(f"{g}={n}" for g, n in r.chosen))
            _write_csv(tables / f"selection_{slug}.csv", ["group", "proxy"], list(r.chosen))

        if r.status == "ok":
            lines.append(f"- rows: {r.n_rows} (excluded: {len(r.exclusions)})")
            lines.append(f"- tree: {r.tree.n_leaves} leaves, "
                         f"chosen alpha {r.trace.chosen_alpha!r}")
            lines.append(f"- Q^Min leaf: mean {r.qmin.leaf.mean:.3f}, n {r.qmin.leaf.n}, "
                         f"share {100 * r.qmin.share:.2f}% via {r.qmin.describe()}")
            lines.append(f"- Q^Max leaf: mean {r.qmax.leaf.mean:.3f}, n {r.qmax.leaf.n}, "
                         f"share {100 * r.qmax.share:.2f}% via {r.qmax.describe()}")
            lines.append("- verdicts: " + " | ".join(f"{f}: {v}" for f, v in r.verdicts))
            (trees / f"{slug}.dot").write_text(export_dot(r.tree), encoding="utf-8")
            (trees / f"{slug}.json").write_text(export_json(r.tree), encoding="utf-8")

            if r.correlations:
                _write_csv(tables / f"correlations_{slug}.csv", ["factor", "r", "p"],
                           [[name, _fmt(rv), _fmt(pv)] for name, rv, pv in r.correlations])
                lines.append("")
                lines.append("| factor | r | p |")
                lines.append("| --- | --- | --- |")
                for name, rv, pv in r.correlations:
                    lines.append(f"| {name} | {rv:.4f} | {pv:.4g} |")
            if r.comparison is not None:
                _write_csv(tables / f"comparison_{slug}.csv",
                           ["variable", "mean_qmin", "mean_qmax", "ks_d", "p_value",
                            "stars", "lower_risk"],
                           [[c.variable, _fmt(c.mean_min), _fmt(c.mean_max), _fmt(c.ks_d),
                             _fmt(c.p_value), c.stars, c.lower_risk or ""]
                            for c in r.comparison.rows])
                lines.append("")
                lines.append("| variable | mean Q^Min | mean Q^Max | KS D | p | lower risk |")
                lines.append("| --- | --- | --- | --- | --- | --- |")
                for c in r.comparison.rows:
                    lines.append(f"| {c.variable} | {c.mean_min:.4f} | {c.mean_max:.4f} "
                                 f"| {c.ks_d:.4f} | {c.p_value:.4g}{c.stars} "
                                 f"| {c.lower_risk or '-'} |")
        lines.append("")

    (out / "report.md").write_text("\n".join(lines), encoding="utf-8")
