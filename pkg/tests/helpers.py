"""Independent oracles and small builders shared across the test modules.

The oracles here deliberately avoid the library's own algebra: sums of
squares are computed by direct summation, the KS statistic by a literal
ECDF sweep, so that agreement with the fast implementations is evidence
rather than tautology.
"""

from __future__ import annotations

import re

import numpy as np

from charterseg.rescale import ScoredMatrix
from charterseg.tree import Internal, Leaf, RegressionTree, SplitRule, TreeParams


def direct_sse(y) -> float:
    """Sum of squared deviations computed the obvious way."""
    y = np.asarray(y, dtype=float)
    return float(np.sum((y - y.mean()) ** 2))


def candidate_thresholds(x):
    """Midpoints between consecutive distinct sorted values.

    When a midpoint rounds onto the lower value in floating point, the
    upper value itself is the candidate, so strict-< routing still puts
    the lower value on the left.
    """
    xs = np.unique(np.asarray(x, dtype=float))
    out = []
    for a, b in zip(xs[:-1], xs[1:]):
        t = a + (b - a) / 2.0
        if t <= a:
            t = b
        out.append(t)
    return out


def brute_force_best_split(X, y, min_leaf):
    """Exhaustive split search; returns (feature, threshold, gain) or None.

    Ties: first feature index, then smallest threshold (thresholds are
    visited in ascending order per feature and only strict improvements
    replace the incumbent).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    total = direct_sse(y)
    best = None
    for j in range(X.shape[1]):
        for thr in candidate_thresholds(X[:, j]):
            left = X[:, j] < thr
            nl = int(left.sum())
            if nl < min_leaf or n - nl < min_leaf:
                continue
            gain = total - direct_sse(y[left]) - direct_sse(y[~left])
            if gain <= 0.0:
                continue
            if best is None or gain > best[2]:
                best = (j, thr, gain)
    return best


def ecdf(sample, t) -> float:
    sample = np.asarray(sample, dtype=float)
    return float(np.mean(sample <= t))


def brute_force_ks_d(a, b) -> float:
    """sup |ECDF_a - ECDF_b| over every pooled sample point."""
    pooled = np.concatenate([np.asarray(a, float), np.asarray(b, float)])
    return max(abs(ecdf(a, t) - ecdf(b, t)) for t in pooled)


def make_matrix(X, y, names=None) -> ScoredMatrix:
    """Wrap plain arrays as a ScoredMatrix (scores must sit in [1, 5])."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if names is None:
        names = tuple(f"f{j}" for j in range(X.shape[1]))
    ids = tuple(f"r{i}:0" for i in range(X.shape[0]))
    return ScoredMatrix(tuple(names), X, y, ids)


def random_matrix(rng, n=None, m=None, tie_heavy=False):
    """Random score matrix + response for oracle comparisons."""
    n = int(rng.integers(10, 201)) if n is None else n
    m = int(rng.integers(1, 9)) if m is None else m
    X = rng.uniform(1.0, 5.0, size=(n, m))
    if tie_heavy:
        X = np.round(X * 2.0) / 2.0  # heavy duplication -> few candidates
    y = rng.normal(size=n)
    return make_matrix(X, y)


def consistent_internal(split, left, right):
    """Internal node whose (n, mean, sse) follow from its children.

    Uses the between-group decomposition, so the stats are exactly those
    of a real sample that realizes both child nodes.
    """
    n = left.n + right.n
    mean = (left.n * left.mean + right.n * right.mean) / n
    gap = left.mean - right.mean
    sse = left.sse + right.sse + left.n * right.n / n * gap * gap
    return Internal(split, left, right, n, mean, sse)


def build_tree(node, names, total_n=None, min_leaf=1) -> RegressionTree:
    tn = total_n if total_n is not None else node.n
    return RegressionTree(node, tuple(names), TreeParams(min_leaf=min_leaf), tn)


def check_stats_consistency(node, rel=1e-9):
    """Recursively verify n, mean, and the SSE decomposition identity."""
    if isinstance(node, Leaf):
        return
    l, r = node.left, node.right
    assert node.n == l.n + r.n
    merged_mean = (l.n * l.mean + r.n * r.mean) / node.n
    assert abs(node.mean - merged_mean) <= rel * max(1.0, abs(node.mean))
    gap = l.mean - r.mean
    expect = l.sse + r.sse + l.n * r.n / node.n * gap * gap
    assert abs(node.sse - expect) <= rel * max(1.0, abs(node.sse))
    check_stats_consistency(l, rel)
    check_stats_consistency(r, rel)


def same_topology(a, b) -> bool:
    """Structural equality: node kinds, split rules, and row counts.

    Means and SSEs are left out on purpose; they may differ in the last
    ulp when the same row set is visited in a different order.
    """
    if isinstance(a, RegressionTree):
        a = a.root
    if isinstance(b, RegressionTree):
        b = b.root
    if isinstance(a, Leaf) and isinstance(b, Leaf):
        return a.n == b.n
    if isinstance(a, Internal) and isinstance(b, Internal):
        return (a.split.feature == b.split.feature
                and a.split.threshold == b.split.threshold
                and a.n == b.n
                and same_topology(a.left, b.left)
                and same_topology(a.right, b.right))
    return False


_DOT_NODE = re.compile(r'^\s*(n\d+)\s*\[label="(.*)"\];\s*$')
_DOT_EDGE = re.compile(r'^\s*(n\d+)\s*->\s*(n\d+);\s*$')


def parse_dot(text):
    """Minimal DOT reader: {node id: label}, [(parent, child), ...]."""
    nodes, edges = {}, []
    for line in text.splitlines():
        m = _DOT_NODE.match(line)
        if m:
            nodes[m.group(1)] = m.group(2)
            continue
        m = _DOT_EDGE.match(line)
        if m:
            edges.append((m.group(1), m.group(2)))
    return nodes, edges


def dot_structure(tree: RegressionTree):
    """Recover (feature name, children count) shape info from exported DOT."""
    from charterseg.tree import export_dot

    nodes, edges = parse_dot(export_dot(tree))
    children = {}
    for a, b in edges:
        children.setdefault(a, []).append(b)
    return nodes, children


def panel_csv_text(rows, header=None):
    """Render bank-year rows (list of dicts) as CSV text."""
    if header is None:
        header = ["bank_id", "country", "year", "mve", "bvl", "nta", "equity",
                  "total_assets", "loans", "deposits"]
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(row.get(col, "")) for col in header))
    return "\n".join(lines) + "\n"
