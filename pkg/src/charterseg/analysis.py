"""Reading a pruned tree: extreme leaves, alignment verdicts, group contrasts.

The leaf with the lowest mean Q marks the weakest charter-value segment
(Q^Min) and the highest marks the strongest (Q^Max). At every split along
those two root-to-leaf paths the low-score side is the lower-risk side, so
comparing subtree mean Q across the split says whether charter value and
measured risk move together: low-risk side richer = aligned evidence,
poorer = misaligned. Factors can also be contrasted directly between the
two extreme leaves' populations with KS tests on the raw ratios.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateInputError
from .rescale import DECREASING, INCREASING, ScoredMatrix
from .stats import ks_two_sample
from .tree import Internal, Leaf, RegressionTree, extreme_leaf_indices

ALIGNED = "aligned"
MISALIGNED = "misaligned"
AMBIGUOUS = "ambiguous"
NO_EVIDENCE = "no_evidence"

VERDICT_LABELS = {ALIGNED: "Yes", MISALIGNED: "No", AMBIGUOUS: "Ambig", NO_EVIDENCE: "-"}


@dataclass(frozen=True)
class PathStep:
    feature: int
    name: str
    threshold: float
    side: str  # "lt" when the path goes left (value < threshold), else "ge"

    def describe(self) -> str:
        op = "<" if self.side == "lt" else ">="
        return f"{self.name} {op} {self.threshold:.3f}"


@dataclass(frozen=True)
class LeafPath:
    steps: tuple[PathStep, ...]
    leaf: Leaf
    share: float

    def describe(self) -> str:
        if not self.steps:
            return "(root)"
        return " -> ".join(s.describe() for s in self.steps)


def leaf_share(tree: RegressionTree, leaf: Leaf) -> float:
    """Fraction of the training rows that ended in this leaf."""
    if tree.total_n <= 0:
        raise DegenerateInputError("tree has no training rows")
    return leaf.n / tree.total_n


def _paths_to_leaves(tree: RegressionTree) -> list[tuple[tuple[PathStep, ...], Leaf]]:
    out = []

    def walk(node, steps):
        if isinstance(node, Leaf):
            out.append((steps, node))
            return
        s = node.split
        name = tree.feature_names[s.feature]
        walk(node.left, steps + (PathStep(s.feature, name, s.threshold, "lt"),))
        walk(node.right, steps + (PathStep(s.feature, name, s.threshold, "ge"),))

    walk(tree.root, ())
    return out


def extreme_leaves(tree: RegressionTree) -> tuple[LeafPath, LeafPath]:
    """Root-to-leaf paths of the minimum- and maximum-mean leaves (Q^Min, Q^Max).

    Mean ties break to the larger leaf, then the leftmost one.
    """
    paths = _paths_to_leaves(tree)
    lo, hi = extreme_leaf_indices(tree)
    mk = lambda i: LeafPath(paths[i][0], paths[i][1], leaf_share(tree, paths[i][1]))
    return mk(lo), mk(hi)


def path_rows(matrix: ScoredMatrix, path: LeafPath) -> np.ndarray:
    """Boolean mask of the matrix rows satisfying the path's conjunction."""
    mask = np.ones(matrix.n_rows, dtype=bool)
    for step in path.steps:
        col = matrix.scores[:, step.feature]
        mask &= (col < step.threshold) if step.side == "lt" else (col >= step.threshold)
    return mask


@dataclass(frozen=True)
class Evidence:
    """One split node's contribution to a factor's verdict."""

    feature: int
    name: str
    threshold: float
    low_risk_mean: float  # subtree mean Q on the left (score < threshold) side
    high_risk_mean: float
    aligned: Optional[bool]  # None when the two means tie


@dataclass(frozen=True)
class AlignmentVerdict:
    factor: str
    verdict: str
    evidence: tuple[Evidence, ...]

    @property
    def label(self) -> str:
        return VERDICT_LABELS[self.verdict]


def _collect_path_nodes(tree: RegressionTree, paths) -> list[Internal]:
    """Internal nodes lying on any of the given paths, deduplicated."""
    seen: set[int] = set()
    out = []
    for path in paths:
        node = tree.root
        for step in path.steps:
            if not isinstance(node, Internal):
                raise DegenerateInputError("path does not match the tree's structure")
            if id(node) not in seen:
                seen.add(id(node))
                out.append(node)
            node = node.left if step.side == "lt" else node.right
    return out


def _all_internal(node) -> list[Internal]:
    if isinstance(node, Leaf):
        return []
    return [node] + _all_internal(node.left) + _all_internal(node.right)


def alignment_verdicts(tree: RegressionTree, paths=None,
                       scope: str = "paths") -> dict[str, AlignmentVerdict]:
    """Judge each factor by the split nodes along the extreme-leaf paths.

    A node splitting on factor X separates a low-risk side (score below the
    threshold) from a high-risk side. If the low-risk side's mean Q exceeds
    the high-risk side's, the node is evidence that X is aligned with
    charter value; the opposite is misaligned evidence. Factors with mixed
    evidence come back ambiguous, untouched factors have no evidence.

    Args:
        tree: pruned tree with per-node stats.
        paths: the (Q^Min, Q^Max) paths; computed from the tree if omitted.
        scope: "paths" restricts evidence to nodes on those paths, "all"
            admits every internal node.

    Returns:
        Verdict per feature name, every tree feature present.
    """
    if scope not in ("paths", "all"):
        raise DegenerateInputError(f"unknown verdict scope {scope!r}")
    if scope == "all":
        nodes = _all_internal(tree.root)
    else:
        if paths is None:
            paths = extreme_leaves(tree)
        nodes = _collect_path_nodes(tree, paths)

    evidence: dict[str, list[Evidence]] = {name: [] for name in tree.feature_names}
    for node in nodes:
        name = tree.feature_names[node.split.feature]
        low, high = node.left.mean, node.right.mean
        aligned = None if low == high else bool(low > high)
        evidence[name].append(Evidence(node.split.feature, name,
                                       node.split.threshold, low, high, aligned))

    verdicts = {}
    for name in tree.feature_names:
        judged = [e.aligned for e in evidence[name] if e.aligned is not None]
        if not judged:
            verdict = NO_EVIDENCE
        elif all(judged):
            verdict = ALIGNED
        elif not any(judged):
            verdict = MISALIGNED
        else:
            verdict = AMBIGUOUS
        verdicts[name] = AlignmentVerdict(name, verdict, tuple(evidence[name]))
    return verdicts


@dataclass(frozen=True)
class ComparisonRow:
    variable: str
    mean_min: float
    mean_max: float
    ks_d: float
    p_value: float
    stars: str
    lower_risk: Optional[str]  # "qmin" / "qmax" by raw direction, None without one


@dataclass(frozen=True)
class GroupComparison:
    rows: tuple[ComparisonRow, ...]


def significance_stars(p: float) -> str:
    if p <= 0.01:
        return "***"
    if p <= 0.05:
        return "**"
    if p <= 0.10:
        return "*"
    return ""


def group_comparison(min_vars: dict[str, np.ndarray], max_vars: dict[str, np.ndarray],
                     directions: dict[str, Optional[str]]) -> GroupComparison:
    """Contrast raw variables between the Q^Min and Q^Max leaf populations.

    Args:
        min_vars / max_vars: variable name -> raw values for the rows in the
            respective extreme leaf; both must share the same keys.
        directions: raw risk direction per variable ("increasing" means a
            bigger raw value is riskier); None for variables like Q that
            carry no risk orientation.

    Returns:
        One row per variable: group means, KS distance and p-value, the
        usual significance stars (10/5/1%), and which group looks less
        risky under the raw direction.
    """
    if set(min_vars) != set(max_vars):
        raise DegenerateInputError("both groups must provide the same variables")
    rows = []
    for name in min_vars:
        a = np.asarray(min_vars[name], dtype=float)
        b = np.asarray(max_vars[name], dtype=float)
        a = a[np.isfinite(a)]
        b = b[np.isfinite(b)]
        if a.size == 0 or b.size == 0:
            raise DegenerateInputError(f"variable {name!r} has an empty group")
        d, p = ks_two_sample(a, b)
        direction = directions.get(name)
        ma, mb = float(a.mean()), float(b.mean())
        if direction is None or ma == mb:
            lower = None
        elif direction == INCREASING:
            lower = "qmin" if ma < mb else "qmax"
        elif direction == DECREASING:
            lower = "qmin" if ma > mb else "qmax"
        else:
            raise DegenerateInputError(f"bad direction {direction!r} for {name!r}")
        rows.append(ComparisonRow(name, ma, mb, d, p, significance_stars(p), lower))
    return GroupComparison(tuple(rows))
