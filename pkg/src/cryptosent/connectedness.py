"""Generalized variance-decomposition connectedness of shocks across variables.

theta[i, j] is the share of variable i's H-step forecast-error variance
attributable to shocks in variable j, computed from the VAR's MA form and a
shock covariance, then row-normalized (the generalized decomposition is not
row-stochastic on its own). Directional sums give TO/FROM/NET, pairwise
differences give NPDC, and the grand average of FROM gives the total
connectedness index in percent.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ComputationError, InputError
from .var import VarModel, ma_coefficients, spectral_radius


@dataclass(frozen=True)
class ConnectednessTable:
    names: tuple[str, ...]
    theta: np.ndarray = field(repr=False)  # row-stochastic, fraction units
    to_others: np.ndarray = field(repr=False)
    from_others: np.ndarray = field(repr=False)
    net: np.ndarray = field(repr=False)
    npdc: np.ndarray = field(repr=False)
    tci: float = 0.0
    day: date | None = None

    @property
    def n_variables(self) -> int:
        return len(self.names)


def gfevd(ma: Sequence[np.ndarray], sigma: np.ndarray, normalize: bool = True) -> np.ndarray:
    """Generalized forecast-error variance decomposition over the MA horizon.

    theta_ij = sigma_jj^-1 sum_h ((A_h Sigma)_ij)^2 / sum_h (A_h Sigma A_h')_ii,
    rows rescaled to sum to one when normalize is set.
    """
    sigma = np.asarray(sigma, dtype=float)
    if not ma:
        raise InputError("need at least one MA matrix (H >= 1)")
    if not np.allclose(sigma, sigma.T, atol=1e-10):
        raise InputError("sigma must be symmetric")
    if np.linalg.eigvalsh(sigma).min() < -1e-10:
        raise InputError("sigma must be positive semidefinite")
    diag = np.diag(sigma)
    if (diag <= 0).any():
        raise ComputationError("zero diagonal in sigma; cannot scale shock sizes")

    N = sigma.shape[0]
    num = np.zeros((N, N))
    den = np.zeros(N)
    for A in ma:
        As = A @ sigma
        num += As**2
        den += np.einsum("ij,ij->i", As, A)
    num /= diag[None, :]
    if (den <= 0).any():
        raise ComputationError("zero forecast-error variance; cannot decompose")
    theta = num / den[:, None]
    if normalize:
        theta = theta / theta.sum(axis=1, keepdims=True)
    return theta


def directional_measures(
    theta: np.ndarray,
    names: Sequence[str],
    day: date | None = None,
    corrected: bool = False,
) -> ConnectednessTable:
    """TO/FROM/NET/NPDC vectors and the total connectedness index from theta.

    corrected=True uses the N-1 denominator for the index instead of N.
    """
    theta = np.asarray(theta, dtype=float)
    N = theta.shape[0]
    if theta.shape != (N, N) or len(names) != N:
        raise InputError("theta must be square and match the name list")
    if np.abs(theta.sum(axis=1) - 1.0).max() > 1e-8:
        raise InputError("theta rows must sum to 1 (fraction units)")

    off = theta - np.diag(np.diag(theta))
    from_others = off.sum(axis=1)
    to_others = off.sum(axis=0)
    net = to_others - from_others
    npdc = theta.T - theta
    denom = (N - 1) if corrected else N
    tci = 100.0 * from_others.sum() / denom
    return ConnectednessTable(tuple(names), theta, to_others, from_others, net, npdc, tci, day)


def static_connectedness(
    model: VarModel, horizon: int = 10, corrected: bool = False
) -> ConnectednessTable:
    """Full-sample table from the fitted VAR's own residual covariance."""
    theta = gfevd(ma_coefficients(model, horizon), model.sigma)
    return directional_measures(theta, model.names, corrected=corrected)


def dynamic_connectedness(
    model: VarModel,
    h_path: np.ndarray,
    days: Sequence[date],
    horizon: int = 10,
    corrected: bool = False,
    on_bad_day: str = "skip",
) -> list[ConnectednessTable]:
    """One table per day: same MA coefficients, day-specific shock covariance H_t.

    Days whose H_t is not positive definite are skipped with a warning
    (on_bad_day='skip') or abort the run (on_bad_day='abort').
    """
    h_path = np.asarray(h_path, dtype=float)
    if h_path.ndim != 3 or h_path.shape[1] != h_path.shape[2]:
        raise InputError("h_path must be a T x N x N array")
    if len(days) != h_path.shape[0]:
        raise InputError("one date per covariance matrix required")
    if on_bad_day not in ("skip", "abort"):
        raise InputError("on_bad_day must be 'skip' or 'abort'")
    if spectral_radius(model) >= 1.0:
        warnings.warn("VAR is not stable; decomposition horizon sums may diverge", stacklevel=2)

    ma = ma_coefficients(model, horizon)
    tables = []
    for day, H in zip(days, h_path):
        if np.linalg.eigvalsh((H + H.T) / 2.0).min() <= 0:
            if on_bad_day == "abort":
                raise ComputationError(f"non-positive-definite covariance on {day}")
            warnings.warn(f"skipping {day}: covariance not positive definite", stacklevel=2)
            continue
        theta = gfevd(ma, (H + H.T) / 2.0)
        tables.append(directional_measures(theta, model.names, day=day, corrected=corrected))
    return tables


# -- export ----------------------------------------------------------------------


def network_document(table: ConnectednessTable, threshold: float, mode: str = "net-pairwise") -> dict:
    """Node/edge lists for the shock-transmission graph.

    net-pairwise: edge j->i with weight NPDC_ij where NPDC_ij > threshold.
    gross: edge j->i with weight theta_ij for off-diagonal entries > threshold.
    """
    if mode not in ("net-pairwise", "gross"):
        raise InputError("mode must be 'net-pairwise' or 'gross'")
    nodes = [
        {
            "name": name,
            "net": float(table.net[i]),
            "role": "transmitter" if table.net[i] > 0 else "receiver",
        }
        for i, name in enumerate(table.names)
    ]
    edges = []
    N = table.n_variables
    source = table.npdc if mode == "net-pairwise" else table.theta
    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            w = float(source[i, j])
            if w > threshold:
                edges.append({"from": table.names[j], "to": table.names[i], "weight": w})
    return {"mode": mode, "threshold": threshold, "tci": table.tci, "nodes": nodes, "edges": edges}


def default_threshold(table: ConnectednessTable, mode: str = "net-pairwise") -> float:
    """75th percentile of the relevant off-diagonal mass (presentation default)."""
    N = table.n_variables
    mask = ~np.eye(N, dtype=bool)
    source = table.npdc if mode == "net-pairwise" else table.theta
    return float(np.percentile(np.abs(source[mask]), 75.0))


def to_dot(doc: dict, comment: str | None = None) -> str:
    lines = ["digraph connectedness {"]
    if comment:
        lines.insert(0, f"// {comment}")
    lines.append('  rankdir=LR; node [style=filled];')
    for node in doc["nodes"]:
        color = "lightcoral" if node["role"] == "transmitter" else "lightblue"
        lines.append(
            f'  "{node["name"]}" [fillcolor={color}, label="{node["name"]}\\nNET={node["net"]:+.4f}"];'
        )
    for edge in doc["edges"]:
        lines.append(f'  "{edge["from"]}" -> "{edge["to"]}" [penwidth={1 + 8 * edge["weight"]:.2f}, weight={edge["weight"]:.6f}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_network(
    table: ConnectednessTable,
    threshold: float | None = None,
    mode: str = "net-pairwise",
    dot_path: str | Path | None = None,
    json_path: str | Path | None = None,
    comment: str | None = None,
) -> dict:
    """Build the graph document and optionally write DOT / JSON files."""
    if threshold is None:
        threshold = default_threshold(table, mode)
    doc = network_document(table, threshold, mode)
    if dot_path is not None:
        Path(dot_path).write_text(to_dot(doc, comment), encoding="utf-8")
    if json_path is not None:
        out = dict(doc)
        if comment:
            out["meta"] = comment
        Path(json_path).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return doc


def table_to_csv_rows(table: ConnectednessTable, percent: bool = True) -> list[list[str]]:
    """Matrix with TO/FROM/NET margins and a TCI footer, Diebold-Yilmaz style."""
    scale = 100.0 if percent else 1.0
    header = ["variable", *table.names, "FROM"]
    rows = [header]
    for i, name in enumerate(table.names):
        rows.append(
            [name]
            + [f"{scale * table.theta[i, j]:.6f}" for j in range(table.n_variables)]
            + [f"{scale * table.from_others[i]:.6f}"]
        )
    rows.append(["TO", *[f"{scale * v:.6f}" for v in table.to_others], ""])
    rows.append(["NET", *[f"{scale * v:.6f}" for v in table.net], ""])
    rows.append(["TCI", f"{table.tci:.6f}", *[""] * table.n_variables])
    return rows


def tci_series_document(tables: Iterable[ConnectednessTable]) -> list[dict]:
    """JSON-ready time series of {date, tci, net per variable}."""
    out = []
    for t in tables:
        out.append(
            {
                "date": t.day.isoformat() if t.day else None,
                "tci": t.tci,
                "net": {name: float(t.net[i]) for i, name in enumerate(t.names)},
            }
        )
    return out
