"""Rescaling raw ratios onto a one-to-five supervisory risk scale.

Two modes. Quantile mode pins the in-sample minimum, quartiles, and maximum
to scores 1..5 and interpolates linearly inside each piece. Threshold mode
pins a regulatory benchmark u to score 2: the safe side of u spans [1, 2]
and the risky side stretches over (2, 5] so that breaching the benchmark is
visibly worse than any safe value. For ratios where risk falls as the raw
value rises (capital, ROA, ...) the orientation is reversed, so score 1 is
always the safest observation and 5 the riskiest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import panel as panel_mod
from .errors import ConfigError, DegenerateInputError, EmptySubsampleError, SchemaError
from .panel import Exclusion, Panel, ProxyFrame, compute_raw_proxies

INCREASING = "increasing"  # raw value up -> risk up
DECREASING = "decreasing"  # raw value up -> risk down
QUANTILE = "quantile"
THRESHOLD = "threshold"

GROUPS = ("C", "A", "M", "E", "L", "S")


@dataclass(frozen=True)
class ProxySpec:
    """How one raw ratio becomes a scored risk factor."""

    name: str
    group: str
    raw_field: str
    direction: str
    mode: str
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ConfigError(f"{self.name}: group must be one of {GROUPS}, got {self.group!r}")
        if self.direction not in (INCREASING, DECREASING):
            raise ConfigError(f"{self.name}: bad direction {self.direction!r}")
        if self.mode not in (QUANTILE, THRESHOLD):
            raise ConfigError(f"{self.name}: bad mode {self.mode!r}")
        if self.mode == THRESHOLD and self.threshold is None:
            raise ConfigError(f"{self.name}: threshold mode needs a threshold value")
        if self.mode == QUANTILE and self.threshold is not None:
            raise ConfigError(f"{self.name}: quantile mode takes no threshold")
        if self.raw_field not in panel_mod.PROXY_FIELDS:
            raise SchemaError(f"{self.name}: unknown raw field {self.raw_field!r}")


# Default proxy catalog. Benchmarks: 6% capital, 1.5% allowances, 1%
# provisions, 0.7 cost/income, 1% ROA, 15% ROE, 0.8 loans/deposits.
DEFAULT_PROXY_SPECS: tuple[ProxySpec, ...] = (
    ProxySpec("Capt", "C", "capital_ratio", DECREASING, QUANTILE),
    ProxySpec("Capt_x", "C", "capital_ratio", DECREASING, THRESHOLD, 0.06),
    ProxySpec("Asts", "A", "allowances_to_loans", INCREASING, QUANTILE),
    ProxySpec("Asts_x", "A", "allowances_to_loans", INCREASING, THRESHOLD, 0.015),
    ProxySpec("Asts_p", "A", "provisions_to_loans", INCREASING, QUANTILE),
    ProxySpec("Asts_px", "A", "provisions_to_loans", INCREASING, THRESHOLD, 0.01),
    ProxySpec("Mang", "M", "growth_gap", DECREASING, QUANTILE),
    ProxySpec("Mang_p", "M", "cost_income", INCREASING, QUANTILE),
    ProxySpec("Mang_pp", "M", "expense_to_assets", INCREASING, QUANTILE),
    ProxySpec("Mang_px", "M", "cost_income", INCREASING, THRESHOLD, 0.7),
    ProxySpec("Ergs", "E", "roa", DECREASING, QUANTILE),
    ProxySpec("Ergs_p", "E", "roe", DECREASING, QUANTILE),
    ProxySpec("Ergs_x", "E", "roa", DECREASING, THRESHOLD, 0.01),
    ProxySpec("Ergs_px", "E", "roe", DECREASING, THRESHOLD, 0.15),
    ProxySpec("Liqt", "L", "loans_to_deposits", INCREASING, QUANTILE),
    ProxySpec("Liqt_x", "L", "loans_to_deposits", INCREASING, THRESHOLD, 0.8),
    ProxySpec("Liqt_p", "L", "liquid_to_assets", DECREASING, QUANTILE),
    ProxySpec("Syst", "S", "beta", INCREASING, QUANTILE),
)


def _check_values(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DegenerateInputError("cannot rescale an empty column")
    if not np.isfinite(v).all():
        raise DegenerateInputError("cannot rescale non-finite values")
    return v


def _quantile_increasing(v: np.ndarray) -> np.ndarray:
    # Knots min, Q1, median, Q3, max -> scores 1..5, linear inside each piece.
    # A value sitting on a repeated knot takes the highest score touching it,
    # i.e. values inside a zero-width piece map to that piece's upper bound.
    knots = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0])
    if knots[0] == knots[4]:
        return np.full(v.shape, 3.0)
    idx = np.searchsorted(knots, v, side="right") - 1
    scores = np.full(v.shape, 5.0)
    inner = idx < 4
    i = idx[inner]
    width = knots[i + 1] - knots[i]
    base = (i + 1).astype(float)
    frac = np.where(width > 0, (v[inner] - knots[i]) / np.where(width > 0, width, 1.0), 1.0)
    scores[inner] = base + frac
    return scores


def quantile_rescale(values, direction: str) -> np.ndarray:
    """Score a raw column through its quartile knots onto [1, 5].

    Args:
        values: finite raw values; the knots come from this same sample.
        direction: "increasing" if risk grows with the raw value, else
            "decreasing" (orientation is reversed so high score = high risk).

    Returns:
        Array of scores in [1, 5]; a constant column scores 3.0 everywhere.
    """
    v = _check_values(values)
    if direction == INCREASING:
        return _quantile_increasing(v)
    if direction == DECREASING:
        return _quantile_increasing(-v)
    raise ConfigError(f"bad direction {direction!r}")


def threshold_rescale(values, direction: str, u: float) -> np.ndarray:
    """Score a raw column against a regulatory benchmark u.

    The safe side of u maps linearly onto [1, 2] with the benchmark itself
    at exactly 2.0; the risky side maps onto (2, 5] with the worst observed
    value at 5. A zero-width safe piece (sample edge equal to u) sends its
    values to 2.0; a constant column scores 3.0 everywhere.
    """
    v = _check_values(values)
    u = float(u)
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        return np.full(v.shape, 3.0)
    scores = np.empty(v.shape)
    if direction == INCREASING:
        safe = v <= u
        w_safe = u - lo
        if w_safe > 0:
            scores[safe] = 1.0 + (v[safe] - lo) / w_safe
        else:
            scores[safe] = 2.0
        risky = ~safe
        if risky.any():
            scores[risky] = 2.0 + 3.0 * (v[risky] - u) / (hi - u)
    elif direction == DECREASING:
        safe = v >= u
        w_safe = hi - u
        if w_safe > 0:
            scores[safe] = 1.0 + (hi - v[safe]) / w_safe
        else:
            scores[safe] = 2.0
        risky = ~safe
        if risky.any():
            scores[risky] = 2.0 + 3.0 * (u - v[risky]) / (u - lo)
    else:
        raise ConfigError(f"bad direction {direction!r}")
    return scores


@dataclass(frozen=True)
class ScoredMatrix:
    """Feature matrix of risk scores with the Tobin's Q response."""

    feature_names: tuple[str, ...]
    scores: np.ndarray  # (n, m)
    response: np.ndarray  # (n,)
    row_ids: tuple[str, ...]
    exclusions: tuple[Exclusion, ...] = ()

    def __post_init__(self):
        n, m = self.scores.shape
        if m != len(self.feature_names):
            raise SchemaError("feature_names and score columns disagree")
        if n != self.response.shape[0] or n != len(self.row_ids):
            raise SchemaError("row count mismatch between scores, response, and row_ids")
        if n and (self.scores.min() < 1.0 or self.scores.max() > 5.0):
            raise DegenerateInputError("scores must lie within [1, 5]")

    @property
    def n_rows(self) -> int:
        return self.scores.shape[0]

    @property
    def n_features(self) -> int:
        return self.scores.shape[1]

    def take(self, indices) -> "ScoredMatrix":
        idx = np.asarray(indices)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        return ScoredMatrix(
            feature_names=self.feature_names,
            scores=self.scores[idx],
            response=self.response[idx],
            row_ids=tuple(self.row_ids[i] for i in idx),
            exclusions=self.exclusions,
        )

    def select(self, names, rename: dict[str, str] | None = None) -> "ScoredMatrix":
        """Column subset in the given order, optionally renamed."""
        pos = []
        for name in names:
            if name not in self.feature_names:
                raise SchemaError(f"matrix has no feature {name!r}")
            pos.append(self.feature_names.index(name))
        new_names = tuple((rename or {}).get(n, n) for n in names)
        return ScoredMatrix(new_names, self.scores[:, pos], self.response, self.row_ids,
                            self.exclusions)


def build_scored_matrix(panel: Panel, specs, frame: ProxyFrame | None = None) -> ScoredMatrix:
    """Assemble the scored feature matrix for a set of proxy specs.

    Rows missing any active raw field (or Q) are excluded and logged on the
    returned matrix's frame; inactive proxies never cost a row. Rescaling is
    computed within the rows that survive, i.e. within the panel given here.
    """
    specs = tuple(specs)
    if not specs:
        raise ConfigError("need at least one proxy spec")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate proxy names in spec set: {names}")
    if frame is None:
        frame = compute_raw_proxies(panel)

    active_fields = []
    for s in specs:
        if s.raw_field not in frame.columns:
            raise SchemaError(f"{s.name}: raw field {s.raw_field!r} not in proxy frame")
        if s.raw_field not in active_fields:
            active_fields.append(s.raw_field)

    keep = np.isfinite(frame.q)
    exclusions = list(frame.exclusions)
    for fname in active_fields:
        bad = ~np.isfinite(frame.columns[fname]) & keep
        for i in np.flatnonzero(bad):
            exclusions.append(Exclusion(frame.row_ids[i], f"missing {fname}"))
        keep &= ~bad

    idx = np.flatnonzero(keep)
    if idx.size == 0:
        raise EmptySubsampleError("no rows left after per-proxy exclusions")

    cols = []
    for s in specs:
        raw = frame.columns[s.raw_field][idx]
        if s.mode == QUANTILE:
            cols.append(quantile_rescale(raw, s.direction))
        else:
            cols.append(threshold_rescale(raw, s.direction, s.threshold))

    return ScoredMatrix(
        feature_names=tuple(names),
        scores=np.column_stack(cols),
        response=frame.q[idx],
        row_ids=tuple(frame.row_ids[i] for i in idx),
        exclusions=tuple(exclusions),
    )
