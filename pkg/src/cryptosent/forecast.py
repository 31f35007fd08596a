"""Sentiment-augmented forecasting harness: splits, baselines, scenario grid.

Forecasters see lagged target values and lagged sentiment indices at the
forecast origin; fitting uses the train and validation segments only, so
the test period never leaks into parameters. The scenario matrix mirrors
the window-size x sentiment-channel evaluation grid, scoring each cell with
MSE and MAE and reporting improvement against the Twitter-only scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ComputationError, InputError
from .multiscale import SCALE_LEVELS, scale_filtered_series
from .panel import SeriesPanel, concat_rows

RIDGE_PENALTY_GRID = tuple(np.logspace(-4.0, 2.0, 13))
FORECASTERS = ("persistence", "ar", "ridge")


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.60
    validation: float = 0.10
    test: float = 0.30

    def __post_init__(self):
        fracs = (self.train, self.validation, self.test)
        if any(f <= 0 for f in fracs):
            raise InputError("split fractions must all be positive")
        if abs(sum(fracs) - 1.0) > 1e-12:
            raise InputError(f"split fractions must sum to 1, got {sum(fracs)}")


@dataclass(frozen=True)
class Scenario:
    target: str
    channels: tuple[str, ...] = ()
    scale: int | None = None
    forecaster: str = "ridge"
    horizon: int = 1

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if self.scale is not None and self.scale not in SCALE_LEVELS:
            raise InputError(f"scale {self.scale} not in {sorted(SCALE_LEVELS)}")
        if self.forecaster not in FORECASTERS:
            raise InputError(f"unknown forecaster {self.forecaster!r}")
        if self.horizon < 1:
            raise InputError("horizon must be >= 1")

    def label(self) -> str:
        return "+".join(self.channels) if self.channels else "none"


@dataclass(frozen=True)
class Dataset:
    """Supervised rows: predictors at the forecast origin, response at origin+horizon."""

    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    feature_names: tuple[str, ...] = ()
    target: str = ""
    lag_columns: tuple[int, ...] = ()  # indices of the lagged-target predictors
    response_rows: tuple[int, ...] = ()  # panel row index of each response

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def subset(self, mask: np.ndarray) -> "Dataset":
        mask = np.asarray(mask, dtype=bool)
        rows = tuple(r for r, keep in zip(self.response_rows, mask) if keep)
        return Dataset(self.X[mask], self.y[mask], self.feature_names, self.target, self.lag_columns, rows)


def split(panel: SeriesPanel, spec: SplitSpec = SplitSpec()) -> tuple[SeriesPanel, SeriesPanel, SeriesPanel]:
    """Chronological train/validation/test panels with floor-based row counts."""
    T = panel.n_dates
    if T < 20:
        raise InputError("need at least 20 rows to split")
    n_train = int(T * spec.train)
    n_val = int(T * spec.validation)
    n_test = T - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise InputError("every split segment must be nonempty")
    idx = list(range(T))
    return (
        panel.take_rows(idx[:n_train]),
        panel.take_rows(idx[n_train : n_train + n_val]),
        panel.take_rows(idx[n_train + n_val :]),
    )


def make_features(panel: SeriesPanel, scenario: Scenario, lags: int) -> Dataset:
    """Build the supervised dataset for one scenario from one panel segment.

    When a wavelet scale is set, every input series is low-passed at the
    mapped dyadic level before lagging. Rows with any missing value drop out.
    """
    if lags < 1:
        raise InputError("lags must be >= 1")
    columns = {scenario.target: panel.column(scenario.target)}
    for channel in scenario.channels:
        columns[f"{channel}_tsi"] = panel.column(f"{channel}_tsi")

    if scenario.scale is not None:
        for name, series in columns.items():
            if np.isnan(series).any():
                raise InputError(f"column {name!r} has missing values; cannot wavelet-filter")
            columns[name] = scale_filtered_series(series, scenario.scale)

    T = panel.n_dates
    h = scenario.horizon
    rows = range(lags - 1, T - h)
    names: list[str] = []
    blocks: list[np.ndarray] = []
    lag_columns: list[int] = []
    for lag in range(1, lags + 1):
        names.append(f"{scenario.target}.l{lag}")
        lag_columns.append(len(blocks))
        blocks.append(np.array([columns[scenario.target][t - lag + 1] for t in rows]))
    for channel in scenario.channels:
        for lag in range(1, lags + 1):
            names.append(f"{channel}_tsi.l{lag}")
            blocks.append(np.array([columns[f"{channel}_tsi"][t - lag + 1] for t in rows]))
    X = np.column_stack(blocks) if blocks else np.empty((0, 0))
    y = np.array([columns[scenario.target][t + h] for t in rows])

    keep = ~(np.isnan(X).any(axis=1) | np.isnan(y))
    response_rows = tuple(t + h for t, k in zip(rows, keep) if k)
    return Dataset(X[keep], y[keep], tuple(names), scenario.target, tuple(lag_columns), response_rows)


# -- forecasters -----------------------------------------------------------------


@dataclass(frozen=True)
class FitInfo:
    forecaster: str
    coefficients: np.ndarray | None = None
    intercept: float = 0.0
    penalty: float | None = None


def _lstsq_fit(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    n, p = X.shape
    design = np.column_stack([np.ones(n), X])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise ComputationError("singular normal equations; use the ridge forecaster")
    beta, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    return beta[1:], float(beta[0])


def _ridge_fit(X: np.ndarray, y: np.ndarray, penalty: float) -> tuple[np.ndarray, float, dict]:
    """Ridge on standardized predictors and centered response; intercept unpenalized."""
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd == 0, 1.0, sd)
    Z = (X - mu) / sd
    ybar = float(y.mean())
    p = Z.shape[1]
    beta_std = np.linalg.solve(Z.T @ Z + penalty * np.eye(p), Z.T @ (y - ybar))
    beta = beta_std / sd
    intercept = ybar - float(mu @ beta)
    return beta, intercept, {"mu": mu, "sd": sd}


def fit_predict(
    forecaster: str,
    train: Dataset,
    val: Dataset,
    test: Dataset,
    penalty_grid: Sequence[float] = RIDGE_PENALTY_GRID,
) -> tuple[np.ndarray, FitInfo]:
    """Fit one baseline forecaster and predict every test row.

    persistence repeats the last observed target value; ar is least squares
    on the lagged-target columns; ridge penalizes all predictors, choosing
    its penalty on validation MSE and refitting on train+validation.
    """
    if forecaster not in FORECASTERS:
        raise InputError(f"unknown forecaster {forecaster!r}")
    for ds in (train, val, test):
        if ds.n_rows == 0:
            raise InputError("empty dataset segment")

    if forecaster == "persistence":
        lag1 = test.lag_columns[0]
        return test.X[:, lag1].copy(), FitInfo("persistence")

    if forecaster == "ar":
        cols = list(train.lag_columns)
        X_fit = np.vstack([train.X[:, cols], val.X[:, cols]])
        y_fit = np.concatenate([train.y, val.y])
        beta, intercept = _lstsq_fit(X_fit, y_fit)
        preds = test.X[:, cols] @ beta + intercept
        return preds, FitInfo("ar", beta, intercept)

    best = None
    for penalty in penalty_grid:
        beta, intercept, _ = _ridge_fit(train.X, train.y, float(penalty))
        val_mse = float(np.mean((val.X @ beta + intercept - val.y) ** 2))
        if best is None or val_mse < best[0] - 1e-15:
            best = (val_mse, float(penalty))
    penalty = best[1]
    X_fit = np.vstack([train.X, val.X])
    y_fit = np.concatenate([train.y, val.y])
    beta, intercept, _ = _ridge_fit(X_fit, y_fit, penalty)
    preds = test.X @ beta + intercept
    return preds, FitInfo("ridge", beta, intercept, penalty)


def evaluate(predictions: np.ndarray, actuals: np.ndarray) -> dict[str, float]:
    predictions = np.asarray(predictions, dtype=float).reshape(-1)
    actuals = np.asarray(actuals, dtype=float).reshape(-1)
    if predictions.shape != actuals.shape or predictions.size == 0:
        raise InputError("predictions and actuals must have equal nonzero length")
    err = predictions - actuals
    # fsum is exactly rounded, so the metrics are invariant under any
    # reordering of the (prediction, actual) pairs
    n = err.size
    return {
        "mse": math.fsum(err**2) / n,
        "mae": math.fsum(np.abs(err)) / n,
    }


# -- scenario grid ----------------------------------------------------------------


@dataclass(frozen=True)
class ReportCell:
    scenario: Scenario
    mse: float = float("nan")
    mae: float = float("nan")
    n_test: int = 0
    best_mse: bool = False
    best_mae: bool = False
    improvement_mse: float | None = None
    improvement_mae: float | None = None
    error: str | None = None


@dataclass(frozen=True)
class ForecastReport:
    cells: tuple[ReportCell, ...]
    baseline_channels: tuple[str, ...] = ("twitter",)

    def cell(self, scenario: Scenario) -> ReportCell:
        for c in self.cells:
            if c.scenario == scenario:
                return c
        raise KeyError(scenario)


def scenario_matrix(
    panel: SeriesPanel,
    scenarios: Sequence[Scenario],
    lags: int = 3,
    split_spec: SplitSpec = SplitSpec(),
    baseline_channels: Sequence[str] = ("twitter",),
) -> ForecastReport:
    """Run every scenario on identical splits and assemble the evaluation grid.

    Per-scenario failures are recorded in their cells; the rest of the
    matrix still completes. Improvements compare each cell to the scenario
    with the baseline channel set and the same (target, scale, forecaster).

    Fit-side features come from the combined train+validation panel (lags
    stay continuous across the boundary and wavelet filters see the whole
    in-sample stretch); the test panel is featurized in isolation so its
    values can never reach fitted parameters.
    """
    train_p, val_p, test_p = split(panel, split_spec)
    fit_panel = concat_rows(train_p, val_p)
    boundary = train_p.n_dates
    cells: list[ReportCell] = []
    for scenario in scenarios:
        try:
            fit_ds = make_features(fit_panel, scenario, lags)
            in_train = np.array([r < boundary for r in fit_ds.response_rows], dtype=bool)
            train = fit_ds.subset(in_train)
            val = fit_ds.subset(~in_train)
            test = make_features(test_p, scenario, lags)
            preds, _ = fit_predict(scenario.forecaster, train, val, test)
            metrics = evaluate(preds, test.y)
            cells.append(
                ReportCell(scenario, metrics["mse"], metrics["mae"], n_test=test.n_rows)
            )
        except (InputError, ComputationError) as exc:
            cells.append(ReportCell(scenario, error=str(exc)))

    baseline = tuple(sorted(baseline_channels))
    by_key: dict[tuple, ReportCell] = {}
    for c in cells:
        if c.error is None and tuple(sorted(c.scenario.channels)) == baseline:
            by_key[(c.scenario.target, c.scenario.scale, c.scenario.forecaster)] = c

    # flag per-(target, scale) minima and compute improvement vs baseline
    final: list[ReportCell] = []
    for c in cells:
        if c.error is not None:
            final.append(c)
            continue
        group = [
            g
            for g in cells
            if g.error is None
            and g.scenario.target == c.scenario.target
            and g.scenario.scale == c.scenario.scale
        ]
        best_mse = c.mse <= min(g.mse for g in group)
        best_mae = c.mae <= min(g.mae for g in group)
        ref = by_key.get((c.scenario.target, c.scenario.scale, c.scenario.forecaster))
        imp_mse = imp_mae = None
        if ref is not None and ref.mse > 0 and ref.mae > 0:
            imp_mse = (ref.mse - c.mse) / ref.mse
            imp_mae = (ref.mae - c.mae) / ref.mae
        final.append(
            replace(
                c,
                best_mse=best_mse,
                best_mae=best_mae,
                improvement_mse=imp_mse,
                improvement_mae=imp_mae,
            )
        )
    return ForecastReport(tuple(final), tuple(baseline))


# -- table-shaped exports -----------------------------------------------------------


def report_rows(report: ForecastReport) -> list[dict]:
    rows = []
    for c in report.cells:
        rows.append(
            {
                "window": c.scenario.scale if c.scenario.scale is not None else "",
                "channels": c.scenario.label(),
                "forecaster": c.scenario.forecaster,
                "target": c.scenario.target,
                "mse": None if c.error else c.mse,
                "mae": None if c.error else c.mae,
                "n_test": c.n_test,
                "best": bool(c.best_mse),
                "best_mae": bool(c.best_mae),
                "improvement_mse": c.improvement_mse,
                "improvement_mae": c.improvement_mae,
                "error": c.error or "",
            }
        )
    return rows


def wide_table_rows(report: ForecastReport, targets: Sequence[str]) -> list[list[str]]:
    """Window x scenario rows with per-target MSE/MAE column pairs (Table-4 shape)."""
    header = ["Window Size", "Scenario"]
    for t in targets:
        header.extend([f"{t} MSE", f"{t} MAE"])
    used = [c for c in report.cells if c.error is None]
    windows = sorted({c.scenario.scale for c in used}, key=lambda s: (s is None, s))
    labels = []
    for c in used:
        if c.scenario.label() not in labels:
            labels.append(c.scenario.label())
    rows = [header]
    for window in windows:
        for label in labels:
            row = ["" if window is None else str(window), label]
            for t in targets:
                match = [
                    c
                    for c in used
                    if c.scenario.scale == window
                    and c.scenario.label() == label
                    and c.scenario.target == t
                ]
                if match:
                    row.extend([f"{match[0].mse:.4g}", f"{match[0].mae:.4g}"])
                else:
                    row.extend(["", ""])
            rows.append(row)
    return rows
