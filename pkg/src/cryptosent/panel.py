"""Date-indexed multivariate panel: loading, return transforms, alignment.

A SeriesPanel is an immutable matrix of daily observations (rows = strictly
increasing calendar dates, columns = named variables). Missing observations
are NaN cells; every non-missing cell is finite. All operations return new
panels.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ComputationError, InputError

TRANSFORM_KINDS = ("log-return", "simple-return", "pct-volume-change", "first-difference")


@dataclass(frozen=True)
class TransformSpec:
    """One derived-series definition: `target = kind(source)`."""

    kind: str
    source: str
    target: str

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise InputError(f"unknown transform kind {self.kind!r}; expected one of {TRANSFORM_KINDS}")


@dataclass(frozen=True)
class FillReport:
    """Outcome of align_and_complete: what was filled and what was dropped."""

    policy: str
    fills_per_variable: dict[str, int]
    dropped_dates: tuple[date, ...]

    @property
    def total_fills(self) -> int:
        return sum(self.fills_per_variable.values())


@dataclass(frozen=True)
class SeriesPanel:
    """Dense date × variable matrix with NaN marking missing cells."""

    dates: tuple[date, ...]
    variables: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        values.setflags(write=False)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "values", values)
        self._validate()

    def _validate(self):
        if self.values.ndim != 2:
            raise InputError("panel values must be a 2-D matrix")
        if self.values.shape != (len(self.dates), len(self.variables)):
            raise InputError(
                f"panel shape {self.values.shape} does not match "
                f"{len(self.dates)} dates x {len(self.variables)} variables"
            )
        if len(set(self.variables)) != len(self.variables):
            raise InputError("variable names must be unique")
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise InputError(f"dates must be strictly increasing; saw {a} before {b}")
        if np.isinf(self.values).any():
            raise InputError("panel cells must be finite or missing; found +/-inf")

    # -- basic accessors -------------------------------------------------

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def missing_mask(self) -> np.ndarray:
        """Boolean matrix, True where the cell is missing."""
        return np.isnan(self.values)

    def missing_count(self) -> int:
        return int(self.missing_mask().sum())

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self._col(name)].copy()

    def _col(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise InputError(f"no variable named {name!r} in panel") from None

    def with_column(self, name: str, column: np.ndarray) -> "SeriesPanel":
        """Return a panel with one extra column appended."""
        if name in self.variables:
            raise InputError(f"variable {name!r} already exists in panel")
        column = np.asarray(column, dtype=float).reshape(-1)
        if column.shape[0] != self.n_dates:
            raise InputError(f"column length {column.shape[0]} != {self.n_dates} panel rows")
        values = np.column_stack([self.values, column])
        return SeriesPanel(self.dates, self.variables + (name,), values)

    def select(self, names: Sequence[str]) -> "SeriesPanel":
        idx = [self._col(n) for n in names]
        return SeriesPanel(self.dates, tuple(names), self.values[:, idx])

    def take_rows(self, row_idx: Sequence[int]) -> "SeriesPanel":
        row_idx = list(row_idx)
        return SeriesPanel(tuple(self.dates[i] for i in row_idx), self.variables, self.values[row_idx, :])


def concat_rows(first: SeriesPanel, second: SeriesPanel) -> SeriesPanel:
    """Stack two panels over the same variables; first must precede second."""
    if first.variables != second.variables:
        raise InputError("panels have different variables")
    if first.dates and second.dates and not first.dates[-1] < second.dates[0]:
        raise InputError("panels overlap or are out of order")
    return SeriesPanel(
        first.dates + second.dates,
        first.variables,
        np.vstack([first.values, second.values]),
    )


# -- loading ---------------------------------------------------------------


def _parse_date(token: str, path, line_no: int) -> date:
    try:
        return date.fromisoformat(token.strip())
    except ValueError:
        raise InputError(f"{path}: line {line_no}: unparseable date {token!r} (expected YYYY-MM-DD)") from None


def _parse_cell(token: str, path, line_no: int, column: str) -> float:
    token = token.strip()
    if token == "" or token.lower() in ("nan", "na"):
        return math.nan
    try:
        value = float(token)
    except ValueError:
        raise InputError(f"{path}: line {line_no}: column {column!r}: not a number: {token!r}") from None
    if math.isinf(value):
        raise InputError(f"{path}: line {line_no}: column {column!r}: non-finite value")
    return value


def load_panel(paths: Iterable[str | Path], schema: Mapping[str, Mapping[str, str]] | None = None) -> SeriesPanel:
    """Load one panel from CSV files; dates are unioned, variables concatenated.

    Each file must have a header whose first column is `date` (ISO-8601);
    the remaining columns are numeric variables. `schema` optionally renames
    columns per file, keyed by path or basename: {"btc.csv": {"close": "BTC"}}.
    Cells absent from a source file are missing in the result.
    """
    schema = dict(schema or {})
    cells: dict[tuple[date, str], float] = {}
    variables: list[str] = []
    all_dates: set[date] = set()

    paths = [Path(p) for p in paths]
    if not paths:
        raise InputError("no input files given")
    for path in paths:
        rename = dict(schema.get(str(path), schema.get(path.name, {})))
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
        if len(rows) < 2:
            raise InputError(f"{path}: empty file (need a header and at least one data row)")
        header = [h.strip() for h in rows[0]]
        if not header or header[0].lower() != "date":
            raise InputError(f"{path}: first column must be 'date', got {header[:1]}")
        col_names = [rename.get(c, c) for c in header[1:]]
        for name in col_names:
            if name not in variables:
                variables.append(name)
        for line_no, row in enumerate(rows[1:], start=2):
            if len(row) != len(header):
                raise InputError(f"{path}: line {line_no}: expected {len(header)} fields, got {len(row)}")
            d = _parse_date(row[0], path, line_no)
            all_dates.add(d)
            for name, token in zip(col_names, row[1:]):
                value = _parse_cell(token, path, line_no, name)
                if math.isnan(value):
                    continue
                if (d, name) in cells:
                    raise InputError(f"{path}: line {line_no}: duplicate observation for ({d}, {name})")
                cells[(d, name)] = value

    dates = tuple(sorted(all_dates))
    values = np.full((len(dates), len(variables)), np.nan)
    date_idx = {d: i for i, d in enumerate(dates)}
    var_idx = {v: j for j, v in enumerate(variables)}
    for (d, name), value in cells.items():
        values[date_idx[d], var_idx[name]] = value
    return SeriesPanel(dates, tuple(variables), values)


def write_csv(panel: SeriesPanel, path: str | Path, header_comment: str | None = None) -> None:
    """Write a panel as CSV (missing cells empty; floats via repr for exact round trip)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["date", *panel.variables])
        for i, d in enumerate(panel.dates):
            row = [d.isoformat()]
            for x in panel.values[i]:
                row.append("" if math.isnan(x) else repr(float(x)))
            writer.writerow(row)


# -- transforms --------------------------------------------------------------


def _shifted_pair(series: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return series[:-1], series[1:]


def transform(panel: SeriesPanel, spec: TransformSpec) -> SeriesPanel:
    """Apply one TransformSpec; the first output row is always missing."""
    src = panel.column(spec.source)
    out = np.full(panel.n_dates, np.nan)
    prev, cur = _shifted_pair(src)

    if spec.kind == "log-return":
        bad = np.where(~np.isnan(src) & (src <= 0))[0]
        if bad.size:
            raise ComputationError(
                f"log-return of {spec.source!r}: nonpositive price at {panel.dates[bad[0]]}"
            )
        out[1:] = np.log(cur) - np.log(prev)
    elif spec.kind == "simple-return":
        with np.errstate(divide="ignore", invalid="ignore"):
            out[1:] = (cur - prev) / prev
    elif spec.kind == "pct-volume-change":
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = (cur - prev) / prev
        zero_prev = ~np.isnan(prev) & (prev == 0)
        ratio[zero_prev] = np.nan
        if zero_prev.any():
            warnings.warn(
                f"{spec.source!r}: {int(zero_prev.sum())} zero-volume cells; change marked missing",
                stacklevel=2,
            )
        out[1:] = ratio
    elif spec.kind == "first-difference":
        out[1:] = cur - prev

    clean = np.where(np.isinf(out), np.nan, out)
    return panel.with_column(spec.target, clean)


def compute_return(panel: SeriesPanel, spec: TransformSpec) -> SeriesPanel:
    """Price return column: log-return (default choice) or simple-return."""
    if spec.kind not in ("log-return", "simple-return"):
        raise InputError(f"compute_return expects a return kind, got {spec.kind!r}")
    return transform(panel, spec)


def volume_change(panel: SeriesPanel, spec: TransformSpec) -> SeriesPanel:
    """Relative change of trading volume; zero previous volume yields a missing cell."""
    if spec.kind != "pct-volume-change":
        raise InputError(f"volume_change expects kind 'pct-volume-change', got {spec.kind!r}")
    return transform(panel, spec)


def reconstruct_prices(returns: np.ndarray, anchor: float, kind: str = "log-return") -> np.ndarray:
    """Invert a return series back to levels, anchored at the first price."""
    if kind == "log-return":
        return anchor * np.exp(np.concatenate([[0.0], np.cumsum(returns[1:])]))
    if kind == "simple-return":
        return anchor * np.concatenate([[1.0], np.cumprod(1.0 + returns[1:])])
    raise InputError(f"cannot reconstruct from kind {kind!r}")


# -- alignment ---------------------------------------------------------------


def align_and_complete(
    panel: SeriesPanel, policy: str = "drop", max_gap: int = 0
) -> tuple[SeriesPanel, FillReport]:
    """Produce a panel with zero missing cells.

    policy='drop' removes any date with a missing cell. policy='ffill'
    copies the last observed value forward up to max_gap consecutive days
    per variable, then drops rows that are still incomplete.
    """
    if panel.n_dates == 0:
        raise InputError("empty panel")
    if policy not in ("drop", "ffill"):
        raise InputError(f"unknown alignment policy {policy!r} (expected 'drop' or 'ffill')")

    values = panel.values.copy()
    fills = {v: 0 for v in panel.variables}
    if policy == "ffill":
        if max_gap < 1:
            raise InputError("forward-fill requires max_gap >= 1")
        for j, name in enumerate(panel.variables):
            run = 0
            for i in range(1, panel.n_dates):
                if np.isnan(values[i, j]) and not np.isnan(values[i - 1, j]):
                    run += 1
                    if run <= max_gap:
                        values[i, j] = values[i - 1, j]
                        fills[name] += 1
                elif not np.isnan(values[i, j]):
                    run = 0

    keep = ~np.isnan(values).any(axis=1)
    if not keep.any():
        raise ComputationError("empty intersection: every date has at least one missing cell")
    dropped = tuple(d for d, k in zip(panel.dates, keep) if not k)
    out = SeriesPanel(
        tuple(d for d, k in zip(panel.dates, keep) if k),
        panel.variables,
        values[keep, :],
    )
    return out, FillReport(policy=policy, fills_per_variable=fills, dropped_dates=dropped)
