"""Rolling-window correlation sweeps, peak counting, and the MODWT.

Windows are trailing (the reported date is the window's last day) with a
one-day default step. The wavelet transform is the maximal-overlap variant
under periodic boundaries: the multiresolution details and smooth add back
to the input exactly, and the raw coefficient variances decompose the input
variance exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date
from typing import Mapping, Sequence

import numpy as np

from .errors import ComputationError, InputError

ANALYSIS_WINDOWS = (7, 14, 32, 64, 128, 256)

# window size -> MODWT level whose dyadic scale 2^j approximates it
SCALE_LEVELS = {7: 3, 14: 4, 32: 5, 64: 6, 128: 7, 256: 8}


@dataclass(frozen=True)
class RollingCorrSeries:
    window: int
    step: int
    dates: tuple[date, ...]
    values: np.ndarray = field(repr=False)
    degenerate_windows: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", tuple(self.dates))
        finite = values[~np.isnan(values)]
        if finite.size and (np.abs(finite) > 1.0 + 1e-12).any():
            raise ComputationError("correlation outside [-1, 1]")


def rolling_corr(
    x: np.ndarray,
    y: np.ndarray,
    window: int,
    step: int = 1,
    dates: Sequence[date] | None = None,
) -> RollingCorrSeries:
    """Pearson correlation over trailing windows of fixed length.

    Windows where either series is constant yield a missing value; their
    count is reported on the result.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise InputError("series must have equal length")
    if window < 3:
        raise InputError("window must be >= 3")
    if step < 1:
        raise InputError("step must be >= 1")
    T = len(x)
    if window > T:
        raise InputError(f"window {window} exceeds series length {T}")
    if np.isnan(x).any() or np.isnan(y).any():
        raise InputError("series contain missing values; align the panel first")

    ends = list(range(window - 1, T, step))
    values = np.empty(len(ends))
    degenerate = 0
    for k, e in enumerate(ends):
        xs = x[e - window + 1 : e + 1]
        ys = y[e - window + 1 : e + 1]
        xd = xs - xs.mean()
        yd = ys - ys.mean()
        sx = float(xd @ xd)
        sy = float(yd @ yd)
        if sx <= 0.0 or sy <= 0.0:
            values[k] = np.nan
            degenerate += 1
            continue
        values[k] = float(np.clip((xd @ yd) / math.sqrt(sx * sy), -1.0, 1.0))

    if dates is not None:
        if len(dates) != T:
            raise InputError("dates must match series length")
        out_dates = tuple(dates[e] for e in ends)
    else:
        out_dates = tuple(date.fromordinal(1 + e) for e in ends)
    return RollingCorrSeries(window, step, out_dates, values, degenerate)


def sweep(
    x: np.ndarray,
    y: np.ndarray,
    windows: Sequence[int] = ANALYSIS_WINDOWS,
    step: int = 1,
    dates: Sequence[date] | None = None,
) -> tuple[dict[int, RollingCorrSeries], dict[int, str]]:
    """rolling_corr per window size; windows that cannot run are reported, not fatal."""
    results: dict[int, RollingCorrSeries] = {}
    skipped: dict[int, str] = {}
    for w in windows:
        try:
            results[w] = rolling_corr(x, y, w, step=step, dates=dates)
        except (InputError, ComputationError) as exc:
            skipped[w] = str(exc)
    return results, skipped


# -- peak counting -----------------------------------------------------------


def _local_maxima(values: np.ndarray) -> list[int]:
    """Indices of strict local maxima; plateaus contribute their leftmost index."""
    peaks = []
    T = len(values)
    i = 1
    while i < T - 1:
        if values[i] > values[i - 1]:
            j = i
            while j + 1 < T and values[j + 1] == values[i]:
                j += 1
            if j + 1 < T and values[j + 1] < values[i]:
                peaks.append(i)
            i = j + 1
        else:
            i += 1
    return peaks


def _prominence(values: np.ndarray, peak: int) -> float:
    """Topographic prominence: height above the higher of the two flanking bases."""
    h = values[peak]
    left_min = h
    for i in range(peak - 1, -1, -1):
        if values[i] > h:
            break
        left_min = min(left_min, values[i])
    right_min = h
    for i in range(peak + 1, len(values)):
        if values[i] > h:
            break
        right_min = min(right_min, values[i])
    return float(h - max(left_min, right_min))


def count_peaks(
    series: np.ndarray,
    min_prominence: float = 0.25,
    min_separation: int = 1,
    dates: Sequence[date] | None = None,
) -> tuple[int, list]:
    """Count prominent local maxima at least min_separation apart.

    A candidate survives if its prominence reaches min_prominence and no
    retained higher peak lies within min_separation indices.
    """
    values = np.asarray(series, dtype=float).reshape(-1)
    if values.size == 0:
        raise InputError("series is empty")
    candidates = [
        (i, _prominence(values, i))
        for i in _local_maxima(values)
    ]
    candidates = [(i, p) for i, p in candidates if p >= min_prominence]
    # highest first; equal heights resolve left to right
    candidates.sort(key=lambda ip: (-values[ip[0]], ip[0]))
    kept: list[int] = []
    for i, _ in candidates:
        if all(abs(i - j) >= min_separation for j in kept if values[j] > values[i]):
            kept.append(i)
    kept.sort()
    if dates is not None:
        return len(kept), [dates[i] for i in kept]
    return len(kept), kept


# -- MODWT --------------------------------------------------------------------

_SQRT3 = math.sqrt(3.0)
_DWT_FILTERS: dict[str, np.ndarray] = {
    "haar": np.array([1.0, 1.0]) / math.sqrt(2.0),
    "d4": np.array([1.0 + _SQRT3, 3.0 + _SQRT3, 3.0 - _SQRT3, 1.0 - _SQRT3]) / (4.0 * math.sqrt(2.0)),
}


def _modwt_filters(name: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        g = _DWT_FILTERS[name]
    except KeyError:
        raise InputError(f"unknown wavelet filter {name!r}; available: {sorted(_DWT_FILTERS)}") from None
    h = np.array([(-1.0) ** l * g[len(g) - 1 - l] for l in range(len(g))])
    return g / math.sqrt(2.0), h / math.sqrt(2.0)


def _circular_filter(v: np.ndarray, coeffs: np.ndarray, spacing: int) -> np.ndarray:
    """sum_l c_l v[t - spacing*l mod T] for every t."""
    out = np.zeros_like(v)
    for l, c in enumerate(coeffs):
        out += c * np.roll(v, spacing * l)
    return out


def _circular_adjoint(v: np.ndarray, coeffs: np.ndarray, spacing: int) -> np.ndarray:
    """sum_l c_l v[t + spacing*l mod T]: transpose of the analysis operator."""
    out = np.zeros_like(v)
    for l, c in enumerate(coeffs):
        out += c * np.roll(v, -spacing * l)
    return out


@dataclass(frozen=True)
class WaveletDecomposition:
    filter_name: str
    levels: int
    details: tuple[np.ndarray, ...] = field(repr=False)  # MRA detail series D_1..D_J
    smooth: np.ndarray = field(repr=False)  # MRA smooth S_J
    coeff_details: tuple[np.ndarray, ...] = field(repr=False)  # W_1..W_J
    coeff_smooth: np.ndarray = field(repr=False)  # V_J
    boundary: str = "periodic"

    def reconstruct(self) -> np.ndarray:
        """Additive inverse: sum of details plus the smooth."""
        return np.sum(self.details, axis=0) + self.smooth

    def scale_filter(self, level: int) -> np.ndarray:
        """Series with fluctuations finer than 2^(level-1) removed: D_level + S via deeper sums."""
        if not (1 <= level <= self.levels):
            raise InputError(f"level {level} outside 1..{self.levels}")
        return np.sum(self.details[level - 1 :], axis=0) + self.smooth


def modwt(series: np.ndarray, filter_name: str = "haar", levels: int = 4) -> WaveletDecomposition:
    """Maximal-overlap DWT with multiresolution details under periodic boundary."""
    x = np.asarray(series, dtype=float).reshape(-1)
    if np.isnan(x).any():
        raise InputError("series contains missing values")
    if levels < 1:
        raise InputError("levels must be >= 1")
    T = len(x)
    if T < 2**levels:
        raise InputError(f"series length {T} too short for {levels} levels (need >= {2 ** levels})")
    g, h = _modwt_filters(filter_name)

    coeff_w: list[np.ndarray] = []
    v = x
    for j in range(1, levels + 1):
        spacing = 2 ** (j - 1)
        coeff_w.append(_circular_filter(v, h, spacing))
        v = _circular_filter(v, g, spacing)
    coeff_v = v

    def synthesize(level: int, w: np.ndarray | None, vj: np.ndarray | None) -> np.ndarray:
        """Invert from level `level` down to the signal, other inputs zero."""
        acc = np.zeros(T)
        if vj is not None:
            acc = vj
        for j in range(level, 0, -1):
            spacing = 2 ** (j - 1)
            top = _circular_adjoint(w, h, spacing) if (w is not None and j == level) else np.zeros(T)
            acc = top + _circular_adjoint(acc, g, spacing)
        return acc

    details = tuple(synthesize(j, coeff_w[j - 1], None) for j in range(1, levels + 1))
    smooth = synthesize(levels, None, coeff_v)
    return WaveletDecomposition(filter_name, levels, details, smooth, tuple(coeff_w), coeff_v)


def scale_filtered_series(series: np.ndarray, window: int, filter_name: str = "haar") -> np.ndarray:
    """Low-pass a series at the dyadic level mapped from an analysis window size."""
    if window not in SCALE_LEVELS:
        raise InputError(f"window {window} not in the analysis set {sorted(SCALE_LEVELS)}")
    level = SCALE_LEVELS[window]
    dec = modwt(series, filter_name=filter_name, levels=level)
    return dec.details[level - 1] + dec.smooth
