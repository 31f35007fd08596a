"""Univariate GARCH(1,1) and DCC conditional correlation estimation.

Both stages maximize Gaussian quasi-likelihoods by quasi-Newton search in
an unconstrained reparameterization:

    omega = exp(a)
    alpha + beta = sigmoid(b) * (1 - 1e-6),  alpha = share * sigmoid(c)

which enforces omega > 0, alpha, beta >= 0 and alpha + beta < 1 without
penalties; the DCC pair (a, b) uses the same map. Gradients are analytic
(recursive derivatives of the variance / correlation recursions) and are
checked against finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.optimize

from .errors import ComputationError, ConvergenceError, InputError

_MARGIN = 1e-6
_LOG2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class GarchParams:
    omega: float
    alpha: float
    beta: float
    loglik: float
    h: np.ndarray = field(repr=False)
    nll_path: tuple[float, ...] = field(repr=False, default=())
    grad_norm: float = float("nan")

    def __post_init__(self):
        if not (self.omega > 0 and self.alpha >= 0 and self.beta >= 0):
            raise ComputationError("invalid GARCH parameters: need omega>0, alpha,beta>=0")
        if self.alpha + self.beta >= 1.0:
            raise ComputationError("invalid GARCH parameters: alpha+beta must be < 1")
        if (self.h <= 0).any():
            raise ComputationError("conditional variance path must be positive")

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.alpha - self.beta)


@dataclass(frozen=True)
class DccFit:
    a: float
    b: float
    qbar: np.ndarray = field(repr=False)
    q_path: np.ndarray = field(repr=False)
    r_path: np.ndarray = field(repr=False)
    loglik: float = float("nan")
    nll_path: tuple[float, ...] = field(repr=False, default=())
    grad_norm: float = float("nan")

    def __post_init__(self):
        if not (self.a >= 0 and self.b >= 0 and self.a + self.b < 1.0):
            raise ComputationError("invalid DCC parameters: need a,b>=0 and a+b<1")
        diag = np.diagonal(self.r_path, axis1=1, axis2=2)
        if not np.allclose(diag, 1.0, atol=1e-12):
            raise ComputationError("every R_t must have a unit diagonal")
        if np.abs(self.r_path).max() > 1.0 + 1e-10:
            raise ComputationError("R_t entries must lie in [-1, 1]")


# -- parameter transforms --------------------------------------------------


def _sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    # clipping keeps exp() in range; exact in double precision beyond +-37
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500.0, 500.0)))


def _pair_from_unconstrained(b: float, c: float) -> tuple[float, float]:
    """Map R^2 onto {(x, y): x, y >= 0, x + y < 1 - margin}."""
    share = _sigmoid(b) * (1.0 - _MARGIN)
    frac = _sigmoid(c)
    return share * frac, share * (1.0 - frac)


def _pair_to_unconstrained(x: float, y: float) -> tuple[float, float]:
    share = min(max(x + y, 1e-8), 1.0 - _MARGIN - 1e-12)
    frac = min(max(x / share, 1e-8), 1.0 - 1e-8)
    sb = share / (1.0 - _MARGIN)
    return float(np.log(sb / (1.0 - sb))), float(np.log(frac / (1.0 - frac)))


def _pair_jacobian(b: float, c: float) -> np.ndarray:
    """d(x, y)/d(b, c) for the pair transform."""
    sb = _sigmoid(b)
    frac = _sigmoid(c)
    share = sb * (1.0 - _MARGIN)
    dshare_db = (1.0 - _MARGIN) * sb * (1.0 - sb)
    dfrac_dc = frac * (1.0 - frac)
    return np.array(
        [
            [frac * dshare_db, share * dfrac_dc],
            [(1.0 - frac) * dshare_db, -share * dfrac_dc],
        ]
    )


# -- GARCH(1,1) ---------------------------------------------------------------


def garch_variance_path(eps: np.ndarray, omega: float, alpha: float, beta: float) -> np.ndarray:
    """h_t = omega + alpha eps_{t-1}^2 + beta h_{t-1}, started at the sample variance."""
    eps = np.asarray(eps, dtype=float)
    h = np.empty_like(eps)
    h[0] = np.var(eps)
    for t in range(1, len(eps)):
        h[t] = omega + alpha * eps[t - 1] ** 2 + beta * h[t - 1]
    return h


def garch_negative_loglik(eps: np.ndarray, omega: float, alpha: float, beta: float) -> float:
    h = garch_variance_path(eps, omega, alpha, beta)
    return float(0.5 * np.sum(_LOG2PI + np.log(h) + eps**2 / h))


def garch_negative_loglik_grad(
    eps: np.ndarray, omega: float, alpha: float, beta: float
) -> tuple[float, np.ndarray]:
    """NLL and its gradient in (omega, alpha, beta), via the recursive dh/dtheta."""
    eps = np.asarray(eps, dtype=float)
    n = len(eps)
    h = garch_variance_path(eps, omega, alpha, beta)
    dh = np.zeros((n, 3))
    for t in range(1, n):
        dh[t, 0] = 1.0 + beta * dh[t - 1, 0]
        dh[t, 1] = eps[t - 1] ** 2 + beta * dh[t - 1, 1]
        dh[t, 2] = h[t - 1] + beta * dh[t - 1, 2]
    weight = 0.5 * (1.0 / h - eps**2 / h**2)
    grad = weight @ dh
    nll = float(0.5 * np.sum(_LOG2PI + np.log(h) + eps**2 / h))
    return nll, grad


def _quasi_newton(fun, x0: np.ndarray, max_iter: int = 500):
    """BFGS with an iterate log; returns (x, nll_path, grad_norm, last_step)."""
    path: list[float] = [fun(x0)[0]]
    steps: list[float] = []
    last_x = {"x": np.array(x0, dtype=float)}

    def callback(xk):
        steps.append(float(np.linalg.norm(xk - last_x["x"])))
        last_x["x"] = np.array(xk, dtype=float)
        path.append(fun(xk)[0])

    res = scipy.optimize.minimize(
        fun,
        x0,
        jac=True,
        method="BFGS",
        callback=callback,
        options={"gtol": 1e-6, "maxiter": max_iter},
    )
    grad_norm = float(np.linalg.norm(res.jac))
    last_step = steps[-1] if steps else 0.0
    converged = bool(res.success) or grad_norm < 1e-6 or (steps and last_step < 1e-8)
    return res.x, tuple(path), grad_norm, converged


def fit_garch11(series: np.ndarray, max_iter: int = 500) -> GarchParams:
    """Gaussian QMLE of GARCH(1,1) on a (de)meaned series."""
    eps = np.asarray(series, dtype=float).reshape(-1)
    if np.isnan(eps).any():
        raise InputError("series contains missing values")
    if len(eps) < 100:
        raise InputError("need at least 100 observations")
    sample_var = float(np.var(eps))
    if sample_var <= 0:
        raise ComputationError("zero-variance input")

    def objective(x):
        a, b, c = x
        if abs(a) > 60:
            return 1e300, np.zeros(3)
        omega = float(np.exp(a))
        alpha, beta = _pair_from_unconstrained(b, c)
        nll, g_nat = garch_negative_loglik_grad(eps, omega, alpha, beta)
        if not np.isfinite(nll):
            return 1e300, np.zeros(3)
        g = np.empty(3)
        g[0] = g_nat[0] * omega
        g[1:] = _pair_jacobian(b, c).T @ g_nat[1:]
        return nll, g

    starts = []
    for alpha0, beta0 in ((0.05, 0.90), (0.10, 0.80), (0.02, 0.95), (0.15, 0.70)):
        omega0 = sample_var * (1.0 - alpha0 - beta0)
        b0, c0 = _pair_to_unconstrained(alpha0, beta0)
        starts.append(np.array([np.log(omega0), b0, c0]))
    starts.sort(key=lambda x: objective(x)[0])

    x, nll_path, grad_norm, converged = _quasi_newton(objective, starts[0], max_iter)
    if not converged:
        raise ConvergenceError(
            f"GARCH QMLE did not converge (gradient norm {grad_norm:.3e})",
            last_params=x,
            grad_norm=grad_norm,
        )
    omega = float(np.exp(x[0]))
    alpha, beta = _pair_from_unconstrained(x[1], x[2])
    h = garch_variance_path(eps, omega, alpha, beta)
    loglik = -garch_negative_loglik(eps, omega, alpha, beta)
    return GarchParams(omega, alpha, beta, loglik, h, nll_path, grad_norm)


def simulate_garch11(
    omega: float, alpha: float, beta: float, n: int, seed: int, burn: int = 500
) -> np.ndarray:
    """Draw a GARCH(1,1) path with standard normal innovations."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n + burn)
    h = omega / (1.0 - alpha - beta)
    eps = np.empty(n + burn)
    for t in range(n + burn):
        if t > 0:
            h = omega + alpha * eps[t - 1] ** 2 + beta * h
        eps[t] = np.sqrt(h) * z[t]
    return eps[burn:]


def standardized_residuals(fits: Sequence[GarchParams], residuals: np.ndarray) -> np.ndarray:
    """Divide each residual column by its conditional standard deviation."""
    residuals = np.asarray(residuals, dtype=float)
    if residuals.shape[1] != len(fits):
        raise InputError("one GARCH fit per residual column required")
    std = np.column_stack([np.sqrt(f.h) for f in fits])
    if std.shape != residuals.shape:
        raise InputError("variance paths do not match residual matrix length")
    return residuals / std


# -- DCC ------------------------------------------------------------------------


def _correlation_from_q(q: np.ndarray) -> np.ndarray:
    inv_sqrt = 1.0 / np.sqrt(np.diag(q))
    r = q * np.outer(inv_sqrt, inv_sqrt)
    np.fill_diagonal(r, 1.0)
    return r


def dcc_correlation_path(
    z: np.ndarray, a: float, b: float, qbar: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Run the DCC recursion; returns (Q_t, R_t) paths, Q_1 = Qbar."""
    z = np.asarray(z, dtype=float)
    T, N = z.shape
    if qbar is None:
        qbar = np.corrcoef(z.T) if N > 1 else np.ones((1, 1))
    q_path = np.empty((T, N, N))
    r_path = np.empty((T, N, N))
    q = qbar.copy()
    for t in range(T):
        if t > 0:
            q = (1.0 - a - b) * qbar + a * np.outer(z[t - 1], z[t - 1]) + b * q_path[t - 1]
        q_path[t] = q
        r_path[t] = _correlation_from_q(q)
    return q_path, r_path


def dcc_negative_loglik(z: np.ndarray, a: float, b: float, qbar: np.ndarray | None = None) -> float:
    nll, _ = dcc_negative_loglik_grad(z, a, b, qbar)
    return nll


def dcc_negative_loglik_grad(
    z: np.ndarray, a: float, b: float, qbar: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """Stage-2 correlation NLL 0.5 sum(log|R_t| + z'R^-1 z - z'z) and d/d(a,b).

    Uses the recursive sensitivities dQ_t/da, dQ_t/db and the chain rule
    through the diagonal normalization of Q_t into R_t.
    """
    z = np.asarray(z, dtype=float)
    T, N = z.shape
    if qbar is None:
        qbar = np.corrcoef(z.T) if N > 1 else np.ones((1, 1))

    q = qbar.copy()
    sa = np.zeros((N, N))
    sb = np.zeros((N, N))
    nll = 0.0
    grad = np.zeros(2)
    for t in range(T):
        if t > 0:
            sa_new = -qbar + np.outer(z[t - 1], z[t - 1]) + b * sa
            sb_new = -qbar + q + b * sb
            q = (1.0 - a - b) * qbar + a * np.outer(z[t - 1], z[t - 1]) + b * q
            sa, sb = sa_new, sb_new
        diag = np.diag(q)
        if (diag <= 0).any():
            return 1e300, np.zeros(2)
        inv_sqrt = 1.0 / np.sqrt(diag)
        r = q * np.outer(inv_sqrt, inv_sqrt)
        np.fill_diagonal(r, 1.0)
        try:
            chol = np.linalg.cholesky(r)
        except np.linalg.LinAlgError:
            return 1e300, np.zeros(2)
        logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
        w = np.linalg.solve(r, z[t])
        nll += 0.5 * (logdet + z[t] @ w - z[t] @ z[t])
        r_inv = np.linalg.inv(r)
        for k, s in enumerate((sa, sb)):
            u = np.diag(s) / diag
            dr = s * np.outer(inv_sqrt, inv_sqrt) - 0.5 * r * (u[:, None] + u[None, :])
            grad[k] += 0.5 * (np.sum(r_inv * dr) - w @ dr @ w)
    return float(nll), grad


def fit_dcc(std_residuals: np.ndarray, max_iter: int = 300) -> DccFit:
    """Stage-2 DCC QMLE on GARCH-standardized residuals."""
    z = np.asarray(std_residuals, dtype=float)
    if z.ndim != 2:
        raise InputError("std_residuals must be a T x N matrix")
    T, N = z.shape
    if np.isnan(z).any():
        raise InputError("std_residuals contain missing values")
    if N == 1:
        q_path = np.ones((T, 1, 1))
        return DccFit(0.0, 0.0, np.ones((1, 1)), q_path, q_path.copy(), loglik=0.0)
    if np.any(np.std(z, axis=0) <= 0):
        raise ComputationError("degenerate standardized residuals (zero-variance column)")
    qbar = np.corrcoef(z.T)
    if np.linalg.eigvalsh(qbar).min() <= 1e-10:
        raise ComputationError("unconditional correlation is not positive definite")

    def objective(x):
        a, b = _pair_from_unconstrained(x[0], x[1])
        nll, g_nat = dcc_negative_loglik_grad(z, a, b, qbar)
        if nll >= 1e299:
            return nll, np.zeros(2)
        return nll, _pair_jacobian(x[0], x[1]).T @ g_nat

    starts = [
        np.array(_pair_to_unconstrained(a0, b0))
        for a0, b0 in ((0.05, 0.90), (0.02, 0.95), (0.10, 0.80))
    ]
    starts.sort(key=lambda x: objective(x)[0])
    x, nll_path, grad_norm, converged = _quasi_newton(objective, starts[0], max_iter)
    if not converged:
        raise ConvergenceError(
            f"DCC QMLE did not converge (gradient norm {grad_norm:.3e})",
            last_params=x,
            grad_norm=grad_norm,
        )
    a, b = _pair_from_unconstrained(x[0], x[1])
    q_path, r_path = dcc_correlation_path(z, a, b, qbar)
    loglik = -dcc_negative_loglik(z, a, b, qbar)
    return DccFit(a, b, qbar, q_path, r_path, loglik, nll_path, grad_norm)


def conditional_covariances(fits: Sequence[GarchParams], dcc: DccFit) -> np.ndarray:
    """Daily covariance H_t = D_t R_t D_t, D_t = diag(sqrt(h_{i,t}))."""
    N = len(fits)
    if dcc.r_path.shape[1] != N:
        raise InputError(f"DCC dimension {dcc.r_path.shape[1]} != {N} GARCH fits")
    T = dcc.r_path.shape[0]
    if any(len(f.h) != T for f in fits):
        raise InputError("variance path lengths differ from correlation path")
    std = np.column_stack([np.sqrt(f.h) for f in fits])
    scale = std[:, :, None] * std[:, None, :]
    return dcc.r_path * scale


def simulate_dcc(
    a: float,
    b: float,
    qbar: np.ndarray,
    T: int,
    seed: int,
    burn: int = 200,
) -> np.ndarray:
    """Draw standardized innovations following a DCC correlation process."""
    qbar = np.asarray(qbar, dtype=float)
    N = qbar.shape[0]
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal((T + burn, N))
    z = np.empty((T + burn, N))
    q = qbar.copy()
    for t in range(T + burn):
        if t > 0:
            q = (1.0 - a - b) * qbar + a * np.outer(z[t - 1], z[t - 1]) + b * q
        r = _correlation_from_q(q)
        z[t] = np.linalg.cholesky(r) @ eta[t]
    return z[burn:]
