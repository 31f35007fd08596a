"""Vector autoregression: estimation, moving-average form, stability.

The coefficient layout follows the companion convention: y_t = c + sum_j
Phi_j y_{t-j} + e_t, estimated equation by equation with a shared regressor
matrix. The MA recursion feeding the variance decomposition is
A_0 = I, A_h = sum_{j<=min(h,p)} Phi_j A_{h-j}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import ComputationError, InputError
from .panel import SeriesPanel


@dataclass(frozen=True)
class VarModel:
    names: tuple[str, ...]
    p: int
    intercept: np.ndarray = field(repr=False)
    coefficients: tuple[np.ndarray, ...] = field(repr=False)  # Phi_1..Phi_p
    residuals: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)

    @property
    def n_variables(self) -> int:
        return len(self.names)

    def __post_init__(self):
        n = self.n_variables
        if self.intercept.shape != (n,):
            raise ComputationError("intercept shape mismatch")
        for phi in self.coefficients:
            if phi.shape != (n, n):
                raise ComputationError("coefficient matrix shape mismatch")
        if self.sigma.shape != (n, n):
            raise ComputationError("sigma shape mismatch")
        if not np.allclose(self.sigma, self.sigma.T, atol=1e-12):
            raise ComputationError("sigma must be symmetric")
        if np.linalg.eigvalsh(self.sigma).min() < -1e-10:
            raise ComputationError("sigma must be positive semidefinite")


def _lag_matrix(values: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Response rows t=p..T-1 and regressors [1, y_{t-1}, ..., y_{t-p}]."""
    T, N = values.shape
    Y = values[p:, :]
    cols = [np.ones(T - p)]
    for j in range(1, p + 1):
        cols.append(values[p - j : T - j, :])
    X = np.column_stack(cols)
    return Y, X


def _name_collinear(X: np.ndarray, labels: list[str]) -> list[str]:
    """Identify a set of columns involved in an exact linear dependence."""
    _, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag.max() * max(X.shape) * np.finfo(float).eps
    bad = [labels[piv[i]] for i in range(len(diag)) if diag[i] <= tol]
    return bad or [labels[piv[-1]]]


def fit_var(panel: SeriesPanel, p: int) -> VarModel:
    """Least-squares VAR(p) on a complete panel."""
    if panel.missing_count():
        raise InputError("panel must be complete; run align_and_complete first")
    if p < 1:
        raise InputError("lag order must be >= 1")
    values = panel.values
    T, N = values.shape
    if T - p <= N * p + 1:
        raise InputError(f"not enough rows: T-p={T - p} must exceed N*p+1={N * p + 1}")

    Y, X = _lag_matrix(values, p)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        labels = ["const"] + [f"{v}.l{j}" for j in range(1, p + 1) for v in panel.variables]
        raise ComputationError(f"rank-deficient regressors; collinear: {_name_collinear(X, labels)}")

    beta, _, _, _ = np.linalg.lstsq(X, Y, rcond=None)  # (1+N*p) x N
    resid = Y - X @ beta
    sigma = resid.T @ resid / (T - p)
    intercept = beta[0, :].copy()
    coeffs = tuple(beta[1 + (j - 1) * N : 1 + j * N, :].T.copy() for j in range(1, p + 1))
    return VarModel(panel.variables, p, intercept, coeffs, resid, (sigma + sigma.T) / 2.0)


def ma_coefficients(model: VarModel, horizon: int) -> list[np.ndarray]:
    """MA matrices A_0..A_{H-1} of the fitted VAR."""
    if horizon < 1:
        raise InputError("horizon must be >= 1")
    N = model.n_variables
    out = [np.eye(N)]
    for h in range(1, horizon):
        acc = np.zeros((N, N))
        for j in range(1, min(h, model.p) + 1):
            acc += model.coefficients[j - 1] @ out[h - j]
        out.append(acc)
    return out


def companion_matrix(model: VarModel) -> np.ndarray:
    N, p = model.n_variables, model.p
    comp = np.zeros((N * p, N * p))
    for j in range(p):
        comp[:N, j * N : (j + 1) * N] = model.coefficients[j]
    if p > 1:
        comp[N:, : N * (p - 1)] = np.eye(N * (p - 1))
    return comp


def spectral_radius(model: VarModel) -> float:
    """Largest absolute eigenvalue of the companion matrix (>= 1 means unstable)."""
    return float(np.abs(np.linalg.eigvals(companion_matrix(model))).max())


def select_order(panel: SeriesPanel, max_p: int = 8, criterion: str = "bic") -> int:
    """VAR order by multivariate AIC/BIC over 1..max_p on a common sample."""
    if max_p < 1:
        raise InputError("max_p must be >= 1")
    if criterion not in ("aic", "bic"):
        raise InputError(f"unknown criterion {criterion!r}")
    values = panel.values
    if np.isnan(values).any():
        raise InputError("panel must be complete")
    T, N = values.shape
    n_eff = T - max_p
    if n_eff <= N * max_p + 1:
        raise InputError("not enough rows for the requested max_p")

    best = None
    for p in range(1, max_p + 1):
        Y = values[max_p:, :]
        cols = [np.ones(n_eff)]
        for j in range(1, p + 1):
            cols.append(values[max_p - j : T - j, :])
        X = np.column_stack(cols)
        beta, _, _, _ = np.linalg.lstsq(X, Y, rcond=None)
        resid = Y - X @ beta
        sigma = resid.T @ resid / n_eff
        sign, logdet = np.linalg.slogdet(sigma)
        if sign <= 0:
            continue
        k = N * (N * p + 1)
        penalty = 2.0 * k / n_eff if criterion == "aic" else k * np.log(n_eff) / n_eff
        ic = logdet + penalty
        if best is None or ic < best[0] - 1e-12:
            best = (ic, p)
    if best is None:
        raise ComputationError("order selection failed: residual covariance singular at every lag")
    return best[1]


# -- serialization -------------------------------------------------------------


def model_to_dict(model: VarModel) -> dict:
    return {
        "names": list(model.names),
        "p": model.p,
        "intercept": model.intercept.tolist(),
        "coefficients": [phi.tolist() for phi in model.coefficients],
        "sigma": model.sigma.tolist(),
    }


def save_model(model: VarModel, path: str | Path, meta: dict | None = None) -> None:
    doc = model_to_dict(model)
    if meta:
        doc["meta"] = meta
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path: str | Path, panel: SeriesPanel | None = None) -> VarModel:
    """Rehydrate a model; residuals are recomputed from the panel if given."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    names = tuple(doc["names"])
    p = int(doc["p"])
    intercept = np.array(doc["intercept"], dtype=float)
    coeffs = tuple(np.array(m, dtype=float) for m in doc["coefficients"])
    sigma = np.array(doc["sigma"], dtype=float)
    if panel is not None:
        values = panel.select(names).values
        Y, X = _lag_matrix(values, p)
        beta = np.vstack([intercept[None, :]] + [phi.T for phi in coeffs])
        resid = Y - X @ beta
    else:
        resid = np.zeros((0, len(names)))
    return VarModel(names, p, intercept, coeffs, resid, sigma)
