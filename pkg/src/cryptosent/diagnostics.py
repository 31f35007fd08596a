"""Stationarity and normality diagnostics used before the spillover analysis.

adf_test regresses the first difference on the lagged level, lagged
differences and deterministic terms; the reported statistic is the t-ratio
of the lagged-level coefficient, compared against asymptotic MacKinnon
(2010) critical values. jarque_bera uses moment estimators with denominator
n. select_lag is a generic AR-order chooser by information criterion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ComputationError, InputError

Deterministic = Literal["none", "constant", "constant+trend"]

# Asymptotic tau critical values, MacKinnon (2010), one variable.
_CRITICAL_VALUES: dict[str, dict[str, float]] = {
    "none": {"1%": -2.56574, "5%": -1.94100, "10%": -1.61682},
    "constant": {"1%": -3.43035, "5%": -2.86154, "10%": -2.56677},
    "constant+trend": {"1%": -3.95877, "5%": -3.41049, "10%": -3.12705},
}

LEVELS = ("1%", "5%", "10%")


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lag: int
    deterministic: str
    critical_values: dict[str, float]
    reject: dict[str, bool]
    nobs: int

    def __post_init__(self):
        cv = [self.critical_values[lv] for lv in LEVELS]
        if not (cv[0] < cv[1] < cv[2]):
            raise ComputationError("critical values must increase from 1% to 10%")
        for lv in LEVELS:
            if self.reject[lv] != (self.statistic < self.critical_values[lv]):
                raise ComputationError("decision inconsistent with statistic vs critical value")

    def stars(self) -> str:
        """Significance stars: *** at 1%, ** at 5%, * at 10%."""
        if self.reject["1%"]:
            return "***"
        if self.reject["5%"]:
            return "**"
        if self.reject["10%"]:
            return "*"
        return ""


@dataclass(frozen=True)
class JbResult:
    statistic: float
    skewness: float
    kurtosis: float
    n: int

    @property
    def p_value(self) -> float:
        # chi-square(2) survival function
        return float(np.exp(-self.statistic / 2.0))

    def stars(self) -> str:
        p = self.p_value
        if p < 0.01:
            return "***"
        if p < 0.05:
            return "**"
        if p < 0.10:
            return "*"
        return ""


def _ols(y: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Least squares fit returning (coefficients, standard errors, rss)."""
    n, k = X.shape
    xtx = X.T @ X
    try:
        xtx_inv = np.linalg.inv(xtx)
    except np.linalg.LinAlgError:
        raise ComputationError("degenerate regressor") from None
    beta = xtx_inv @ (X.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    sigma2 = rss / (n - k)
    se = np.sqrt(np.diag(xtx_inv) * sigma2)
    return beta, se, rss


def _deterministic_columns(deterministic: str, n: int) -> list[np.ndarray]:
    if deterministic == "none":
        return []
    cols = [np.ones(n)]
    if deterministic == "constant+trend":
        cols.append(np.arange(1.0, n + 1.0))
    elif deterministic != "constant":
        raise InputError(f"unknown deterministic spec {deterministic!r}")
    return cols


def _adf_design(y: np.ndarray, lag: int, deterministic: str, offset: int = 0):
    """Build the ADF regression at a given lag.

    offset shifts the first usable row so candidate lags can share one
    estimation sample during selection.
    """
    dy = np.diff(y)
    start = lag + offset
    resp = dy[start:]
    cols = [y[start : len(y) - 1]]
    for i in range(1, lag + 1):
        cols.append(dy[start - i : len(dy) - i])
    cols.extend(_deterministic_columns(deterministic, len(resp)))
    return resp, np.column_stack(cols)


def adf_test(
    series: np.ndarray,
    deterministic: Deterministic = "constant",
    max_lag: int = 0,
    lag_selection: str = "fixed",
) -> AdfResult:
    """Augmented Dickey-Fuller unit root t-test.

    With lag_selection 'aic' or 'bic' the lag order is chosen over
    0..max_lag on a common estimation sample; 'fixed' uses max_lag as-is.
    """
    y = np.asarray(series, dtype=float).reshape(-1)
    if np.isnan(y).any():
        raise InputError("series contains missing values")
    if len(y) < max_lag + 20:
        raise InputError(f"series too short: need at least max_lag + 20 = {max_lag + 20} observations")
    if np.std(y) < 1e-12 * max(1.0, abs(float(np.mean(y)))) or np.std(y) == 0.0:
        raise ComputationError("degenerate regressor: series variance is (near) zero")
    if lag_selection not in ("fixed", "aic", "bic"):
        raise InputError(f"unknown lag_selection {lag_selection!r}")

    if lag_selection == "fixed":
        lag = max_lag
    else:
        best = None
        for k in range(max_lag + 1):
            resp, X = _adf_design(y, k, deterministic, offset=max_lag - k)
            _, _, rss = _ols(resp, X)
            n = len(resp)
            ic = _information_criterion(rss, n, X.shape[1], lag_selection)
            if best is None or ic < best[0] - 1e-12:
                best = (ic, k)
        lag = best[1]

    resp, X = _adf_design(y, lag, deterministic)
    beta, se, _ = _ols(resp, X)
    if se[0] == 0:
        raise ComputationError("degenerate regressor")
    stat = float(beta[0] / se[0])
    critical = dict(_CRITICAL_VALUES[deterministic])
    reject = {lv: stat < critical[lv] for lv in LEVELS}
    return AdfResult(stat, lag, deterministic, critical, reject, nobs=len(resp))


def _information_criterion(rss: float, n: int, k: int, criterion: str) -> float:
    if rss <= 0:
        rss = 1e-300
    if criterion == "aic":
        return n * np.log(rss / n) + 2 * k
    if criterion == "bic":
        return n * np.log(rss / n) + k * np.log(n)
    raise InputError(f"unknown criterion {criterion!r}")


def jarque_bera(series: np.ndarray) -> JbResult:
    """Normality test from sample skewness and kurtosis (denominator n)."""
    y = np.asarray(series, dtype=float).reshape(-1)
    if np.isnan(y).any():
        raise InputError("series contains missing values")
    n = len(y)
    if n < 8:
        raise InputError("need at least 8 observations")
    centered = y - y.mean()
    m2 = float(np.mean(centered**2))
    if m2 == 0:
        raise ComputationError("zero variance series")
    skew = float(np.mean(centered**3)) / m2**1.5
    kurt = float(np.mean(centered**4)) / m2**2
    stat = n / 6.0 * (skew**2 + (kurt - 3.0) ** 2 / 4.0)
    return JbResult(stat, skew, kurt, n)


def select_lag(series: np.ndarray, max_lag: int, criterion: str = "bic") -> int:
    """Choose an AR order for the series by AIC/BIC over 0..max_lag.

    All candidates are fit on the rows available at max_lag, so criteria are
    comparable; ties go to the smaller lag.
    """
    y = np.asarray(series, dtype=float).reshape(-1)
    if max_lag < 0:
        raise InputError("max_lag must be >= 0")
    if np.isnan(y).any():
        raise InputError("series contains missing values")
    if len(y) < max_lag + 20:
        raise InputError("series too short for requested max_lag")
    if max_lag == 0:
        return 0

    n = len(y) - max_lag
    resp = y[max_lag:]
    best = None
    for p in range(max_lag + 1):
        cols = [np.ones(n)]
        for i in range(1, p + 1):
            cols.append(y[max_lag - i : len(y) - i])
        _, _, rss = _ols(resp, np.column_stack(cols))
        ic = _information_criterion(rss, n, p + 1, criterion)
        if best is None or ic < best[0] - 1e-12:
            best = (ic, p)
    return best[1]
