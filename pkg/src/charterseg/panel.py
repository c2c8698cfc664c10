"""Bank-year panel ingestion and raw proxy ratios.

A panel is a list of typed bank-year rows read from CSV. From it the module
derives Tobin's Q and the raw balance-sheet ratios that later get rescaled
into one-to-five risk scores: capital ratio, loan-loss allowances and
provisions over loans, loan-growth gap, cost/income, expenses over assets,
ROA, ROE, loans over deposits, liquid assets over assets, and market beta.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DegenerateInputError,
    DuplicateRowError,
    EmptySubsampleError,
    ParseError,
    SchemaError,
)

log = logging.getLogger(__name__)

PIGS_COUNTRIES = ("ES", "GR", "IE", "PT")

# CSV schema: required fields must be present and numeric in every kept row,
# optional fields may be blank (stored as NaN and resolved per proxy later).
KEY_FIELDS = ("bank_id", "country", "year")
REQUIRED_FIELDS = ("mve", "bvl", "nta", "equity", "total_assets", "loans", "deposits")
OPTIONAL_FIELDS = (
    "loan_loss_allowances",
    "loan_loss_provisions",
    "non_interest_expense",
    "income",
    "liquid_assets",
    "roa",
    "roe",
    "loan_growth",
    "gdp_growth",
    "beta",
)
ALL_FIELDS = KEY_FIELDS + REQUIRED_FIELDS + OPTIONAL_FIELDS

NAN = float("nan")


@dataclass(frozen=True)
class BankYear:
    """One bank-year observation; monetary fields share one currency unit."""

    bank_id: str
    country: str
    year: int
    mve: float
    bvl: float
    nta: float
    equity: float
    total_assets: float
    loans: float
    deposits: float
    loan_loss_allowances: float = NAN
    loan_loss_provisions: float = NAN
    non_interest_expense: float = NAN
    income: float = NAN
    liquid_assets: float = NAN
    roa: float = NAN
    roe: float = NAN
    loan_growth: float = NAN
    gdp_growth: float = NAN
    beta: float = NAN

    @property
    def row_id(self) -> str:
        return f"{self.bank_id}:{self.year}"


@dataclass(frozen=True)
class Exclusion:
    row_id: str
    reason: str


@dataclass(frozen=True)
class Panel:
    rows: tuple[BankYear, ...]
    provenance: str = ""
    window: tuple[int, int] = (0, 0)
    exclusions: tuple[Exclusion, ...] = ()

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        """Numeric field as a float array (key fields excluded)."""
        if name not in REQUIRED_FIELDS + OPTIONAL_FIELDS:
            raise SchemaError(f"unknown panel field {name!r}")
        return np.array([getattr(r, name) for r in self.rows], dtype=float)


def _parse_cell(text: str, line: int, column: str) -> float:
    text = text.strip()
    if not text:
        return NAN
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"expected a number, got {text!r}", line=line, column=column) from None


def load_panel(path, schema: dict[str, str] | None = None,
               window: tuple[int, int] | None = None) -> Panel:
    """Read a bank-year panel from CSV.

    Args:
        path: CSV file with one row per bank-year.
        schema: optional mapping from field name to CSV column name; fields
            absent from the mapping use their own name as the column.
        window: optional (start_year, end_year); rows outside are excluded
            and logged. Defaults to the span observed in the data.

    Returns:
        Panel with typed rows, a source digest, and an exclusion log for
        rows dropped over missing required cells, bad years, or the window.

    Raises:
        SchemaError: a required column is missing from the header.
        ParseError: a non-blank cell fails numeric parsing.
        DuplicateRowError: the same (bank_id, year) appears twice.
    """
    schema = schema or {}
    colname = {f: schema.get(f, f) for f in ALL_FIELDS}

    with open(path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()

    rows: list[BankYear] = []
    exclusions: list[Exclusion] = []
    seen: set[tuple[str, int]] = set()

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, no header row") from None
        index = {name.strip(): i for i, name in enumerate(header)}
        needed = KEY_FIELDS + REQUIRED_FIELDS
        missing = [colname[f] for f in needed if colname[f] not in index]
        if missing:
            raise SchemaError(f"{path}: missing required columns {missing}")

        for line_no, record in enumerate(reader, start=2):
            def cell(fname: str) -> str:
                col = colname[fname]
                i = index.get(col)
                if i is None or i >= len(record):
                    return ""
                return record[i]

            bank_id = cell("bank_id").strip()
            country = cell("country").strip()
            year_text = cell("year").strip()
            row_id = f"{bank_id}:{year_text}" if bank_id and year_text else f"line:{line_no}"
            if not bank_id or not country or not year_text:
                exclusions.append(Exclusion(row_id, "missing bank_id, country, or year"))
                continue
            try:
                year = int(year_text)
            except ValueError:
                raise ParseError(f"expected an integer year, got {year_text!r}",
                                 line=line_no, column=colname["year"]) from None

            values = {}
            missing_field = None
            for fname in REQUIRED_FIELDS + OPTIONAL_FIELDS:
                v = _parse_cell(cell(fname), line_no, colname[fname])
                values[fname] = v
                if fname in REQUIRED_FIELDS and math.isnan(v) and missing_field is None:
                    missing_field = fname
            if missing_field is not None:
                exclusions.append(Exclusion(row_id, f"missing {missing_field}"))
                continue
            if window is not None and not (window[0] <= year <= window[1]):
                exclusions.append(Exclusion(row_id, f"year {year} outside window"))
                continue

            key = (bank_id, year)
            if key in seen:
                raise DuplicateRowError(f"duplicate bank-year {key} at line {line_no}")
            seen.add(key)
            rows.append(BankYear(bank_id=bank_id, country=country, year=year, **values))

    if window is None:
        years = [r.year for r in rows]
        window = (min(years), max(years)) if years else (0, 0)
    return Panel(tuple(rows), provenance=f"sha256:{digest}", window=window,
                 exclusions=tuple(exclusions))


def tobin_q(mve: float, bvl: float, nta: float) -> float:
    """Tobin's Q: (market value of equity + book liabilities) / net total assets."""
    if not nta > 0:
        raise DegenerateInputError(f"net total assets must be positive, got {nta}")
    return (mve + bvl) / nta


def compute_beta(bank_returns, market_returns) -> float:
    """Market beta as the OLS slope of bank returns on market returns."""
    b = np.asarray(bank_returns, dtype=float)
    m = np.asarray(market_returns, dtype=float)
    if b.shape != m.shape or b.ndim != 1:
        raise DegenerateInputError("return series must be one-dimensional and equally long")
    if b.size < 2:
        raise DegenerateInputError("need at least two return observations")
    # An exactly constant series must fail even when rounding of the mean
    # leaves a nonzero residual variance.
    if np.all(m == m[0]):
        raise DegenerateInputError("market return series has zero variance")
    mc = m - m.mean()
    var = float(mc @ mc)
    if var == 0.0:
        raise DegenerateInputError("market return series has zero variance")
    return float(mc @ (b - b.mean())) / var


def attach_betas(panel: Panel, betas: dict[tuple[str, int], float]) -> Panel:
    """Fill missing beta values from a computed map.

    Rows whose beta column is already set keep it; a warning reports how many
    computed values were shadowed by the column.
    """
    rows = []
    shadowed = 0
    for r in panel.rows:
        key = (r.bank_id, r.year)
        if key in betas:
            if math.isnan(r.beta):
                r = replace(r, beta=float(betas[key]))
            else:
                shadowed += 1
        rows.append(r)
    if shadowed:
        log.warning("beta column takes precedence over %d computed value(s)", shadowed)
    return replace(panel, rows=tuple(rows))


# Raw proxy columns, in fixed reporting order. Directions (which way risk
# moves in the raw value) live with the rescale specs, not here.
PROXY_FIELDS = (
    "capital_ratio",
    "allowances_to_loans",
    "provisions_to_loans",
    "growth_gap",
    "cost_income",
    "expense_to_assets",
    "roa",
    "roe",
    "loans_to_deposits",
    "liquid_to_assets",
    "beta",
)


@dataclass(frozen=True)
class ProxyFrame:
    """Column table of Tobin's Q and raw proxy ratios for surviving rows."""

    row_ids: tuple[str, ...]
    q: np.ndarray
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    exclusions: tuple[Exclusion, ...] = ()

    def __len__(self) -> int:
        return len(self.row_ids)

    def column(self, name: str) -> np.ndarray:
        if name == "q":
            return self.q
        if name not in self.columns:
            raise SchemaError(f"unknown proxy column {name!r}")
        return self.columns[name]


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Elementwise num/den with non-positive or zero denominators giving NaN."""
    out = np.full(num.shape, NAN)
    ok = np.isfinite(num) & np.isfinite(den) & (den != 0.0)
    out[ok] = num[ok] / den[ok]
    return out


def compute_raw_proxies(panel: Panel) -> ProxyFrame:
    """Derive Tobin's Q and the raw proxy ratios from a panel.

    Rows violating hard positivity requirements (nta, total_assets, deposits
    positive; loans non-negative; Q positive) are excluded and logged. Within
    surviving rows, a proxy whose own denominator is zero or whose inputs are
    missing is NaN; such rows drop out later only if that proxy is active.
    """
    if not panel.rows:
        raise EmptySubsampleError("panel has no rows")

    def col(name):
        return np.array([getattr(r, name) for r in panel.rows], dtype=float)

    nta, ta, dep, loans = col("nta"), col("total_assets"), col("deposits"), col("loans")
    q_all = np.where(nta > 0, (col("mve") + col("bvl")) / np.where(nta > 0, nta, 1.0), NAN)

    exclusions = []
    keep = np.ones(len(panel.rows), dtype=bool)
    checks = (
        (nta <= 0, "nta <= 0"),
        (ta <= 0, "total_assets <= 0"),
        (dep <= 0, "deposits <= 0"),
        (loans < 0, "loans < 0"),
        (~(q_all > 0), "q <= 0"),
    )
    for bad, reason in checks:
        for i in np.flatnonzero(bad & keep):
            exclusions.append(Exclusion(panel.rows[i].row_id, reason))
        keep &= ~bad

    idx = np.flatnonzero(keep)
    rows = [panel.rows[i] for i in idx]
    sub = lambda name: col(name)[idx]

    columns = {
        "capital_ratio": sub("equity") / sub("total_assets"),
        "allowances_to_loans": _ratio(sub("loan_loss_allowances"), sub("loans")),
        "provisions_to_loans": _ratio(sub("loan_loss_provisions"), sub("loans")),
        "growth_gap": sub("loan_growth") - sub("gdp_growth"),
        "cost_income": _ratio(sub("non_interest_expense"), sub("income")),
        "expense_to_assets": sub("non_interest_expense") / sub("total_assets"),
        "roa": sub("roa"),
        "roe": sub("roe"),
        "loans_to_deposits": sub("loans") / sub("deposits"),
        "liquid_to_assets": sub("liquid_assets") / sub("total_assets"),
        "beta": sub("beta"),
    }
    return ProxyFrame(
        row_ids=tuple(r.row_id for r in rows),
        q=q_all[idx],
        columns=columns,
        exclusions=tuple(exclusions),
    )


@dataclass(frozen=True)
class FullSample:
    """Identity criterion: keep every row."""


@dataclass(frozen=True)
class YearRange:
    start: int
    end: int


@dataclass(frozen=True)
class Countries:
    """Keep rows whose country is in (or, with exclude=True, not in) codes."""

    codes: tuple[str, ...]
    exclude: bool = False

    @classmethod
    def pigs(cls) -> "Countries":
        return cls(PIGS_COUNTRIES)

    @classmethod
    def non_pigs(cls) -> "Countries":
        return cls(PIGS_COUNTRIES, exclude=True)


@dataclass(frozen=True)
class SizeHalf:
    """Split at the median of total assets; ties at the median count as large."""

    half: str  # "small" | "large"


def filter_subsample(panel: Panel, criterion) -> Panel:
    """Select panel rows by year range, country group, or size half."""
    rows = panel.rows
    if isinstance(criterion, FullSample):
        kept = rows
    elif isinstance(criterion, YearRange):
        kept = tuple(r for r in rows if criterion.start <= r.year <= criterion.end)
    elif isinstance(criterion, Countries):
        codes = set(criterion.codes)
        if criterion.exclude:
            kept = tuple(r for r in rows if r.country not in codes)
        else:
            kept = tuple(r for r in rows if r.country in codes)
    elif isinstance(criterion, SizeHalf):
        if criterion.half not in ("small", "large"):
            raise SchemaError(f"size half must be 'small' or 'large', got {criterion.half!r}")
        if not rows:
            raise EmptySubsampleError("cannot take a size half of an empty panel")
        med = float(np.median([r.total_assets for r in rows]))
        if criterion.half == "small":
            kept = tuple(r for r in rows if r.total_assets < med)
        else:
            kept = tuple(r for r in rows if r.total_assets >= med)
    else:
        raise SchemaError(f"unknown subsample criterion {criterion!r}")

    if not kept:
        raise EmptySubsampleError(f"criterion {criterion!r} matched no rows")
    return Panel(kept, provenance=panel.provenance, window=panel.window)


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    std: float
    min: float
    max: float
    std_defined: bool = True


def summary_stats(values) -> SummaryStats:
    """n, mean, sample std (n-1), min, max; a single value has std 0, flagged."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DegenerateInputError("cannot summarise an empty sample")
    if v.size == 1:
        x = float(v[0])
        return SummaryStats(1, x, 0.0, x, x, std_defined=False)
    return SummaryStats(int(v.size), float(v.mean()), float(v.std(ddof=1)),
                        float(v.min()), float(v.max()))


def write_exclusions_csv(exclusions, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_id", "reason"])
        for e in exclusions:
            writer.writerow([e.row_id, e.reason])
