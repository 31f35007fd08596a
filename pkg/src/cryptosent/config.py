"""Run configuration: one declarative YAML file, flag overrides, stable hashing.

The config hash is the SHA-256 of the canonical JSON form of the resolved
configuration; it is stamped into every artifact header so reruns are
verifiable. Referenced input files must exist at validation time.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import InputError

COIN_GROUPS = ("gold2.0", "altcoin", "stablecoin")


@dataclass(frozen=True)
class RunConfig:
    market_files: tuple[str, ...]
    coins: dict[str, str]  # coin -> group tag
    sentiment_files: dict[str, str]  # platform -> jsonl path
    text_files: dict[str, str] = field(default_factory=dict)  # platform -> jsonl path
    out_dir: str = "out"
    seed: int = 7
    windows: tuple[int, ...] = (7, 14, 32, 64, 128, 256)
    horizon: int = 10
    align_policy: str = "ffill"
    align_max_gap: int = 3
    var_order: int | None = None  # None -> BIC over 1..var_max_order
    var_max_order: int = 8
    return_kind: str = "log-return"
    forecast_lags: int = 3
    forecast_scales: tuple[int | None, ...] = (None, 7, 32, 64)
    forecast_forecasters: tuple[str, ...] = ("ridge",)
    forecast_targets: tuple[str, ...] = ()
    topics_k: int | None = None  # None -> silhouette selection over topics_k_range
    topics_k_range: tuple[int, int] = (2, 8)
    topics_iterations: int = 300
    topics_max_docs: int = 2000
    network_threshold: float | None = None
    network_mode: str = "net-pairwise"
    tci_corrected: bool = False

    def validate(self) -> None:
        if not self.market_files:
            raise InputError("config: market.files must list at least one CSV")
        for p in list(self.market_files) + list(self.sentiment_files.values()) + list(self.text_files.values()):
            if not Path(p).exists():
                raise InputError(f"config: input file not found: {p}")
        for coin, group in self.coins.items():
            if group not in COIN_GROUPS:
                raise InputError(f"config: coin {coin}: unknown group {group!r} (expected {COIN_GROUPS})")
        if not self.windows:
            raise InputError("config: window set must be nonempty")
        if self.align_policy not in ("drop", "ffill"):
            raise InputError(f"config: unknown align policy {self.align_policy!r}")
        if self.return_kind not in ("log-return", "simple-return"):
            raise InputError(f"config: unknown return kind {self.return_kind!r}")

    def to_canonical(self) -> dict[str, Any]:
        doc: dict[str, Any] = {}
        for key, value in self.__dict__.items():
            if key == "out_dir":  # where artifacts land does not change what they contain
                continue
            if isinstance(value, tuple):
                value = list(value)
            doc[key] = value
        return doc

    def hash(self) -> str:
        blob = json.dumps(self.to_canonical(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def targets(self) -> list[str]:
        """Forecast target columns; defaults to every coin's return and volume change."""
        if self.forecast_targets:
            return list(self.forecast_targets)
        out = []
        for coin in self.coins:
            out.extend([f"{coin}PRC", f"{coin}VOL"])
        return out


def _get(section: dict, key: str, default):
    value = section.get(key, default)
    return default if value is None else value


def load_config(path: str | Path, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Parse the YAML config; overrides (from CLI flags) win over file values."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise InputError(f"config file is not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError("config root must be a mapping")
    overrides = overrides or {}

    market = doc.get("market", {}) or {}
    sentiment = doc.get("sentiment", {}) or {}
    align = doc.get("align", {}) or {}
    var_section = doc.get("var", {}) or {}
    forecast = doc.get("forecast", {}) or {}
    topics = doc.get("topics", {}) or {}
    network = doc.get("network", {}) or {}

    scales = forecast.get("scales", [None, 7, 32, 64])
    scales = tuple(None if s in (None, "none") else int(s) for s in scales)

    cfg = RunConfig(
        market_files=tuple(str(p) for p in _get(market, "files", [])),
        coins={str(k): str(v) for k, v in _get(market, "coins", {}).items()},
        sentiment_files={str(k): str(v) for k, v in _get(sentiment, "scored", {}).items()},
        text_files={str(k): str(v) for k, v in _get(sentiment, "texts", {}).items()},
        out_dir=str(overrides.get("out_dir") or doc.get("out_dir", "out")),
        seed=int(overrides.get("seed") if overrides.get("seed") is not None else doc.get("seed", 7)),
        windows=tuple(int(w) for w in _get(doc, "windows", [7, 14, 32, 64, 128, 256])),
        horizon=int(_get(doc, "horizon", 10)),
        align_policy=str(_get(align, "policy", "ffill")),
        align_max_gap=int(_get(align, "max_gap", 3)),
        var_order=(None if var_section.get("order") in (None, "auto") else int(var_section["order"])),
        var_max_order=int(_get(var_section, "max_order", 8)),
        return_kind=str(_get(doc, "return_kind", "log-return")),
        forecast_lags=int(_get(forecast, "lags", 3)),
        forecast_scales=scales,
        forecast_forecasters=tuple(str(f) for f in _get(forecast, "forecasters", ["ridge"])),
        forecast_targets=tuple(str(t) for t in _get(forecast, "targets", [])),
        topics_k=(None if topics.get("k") in (None, "auto") else int(topics["k"])),
        topics_k_range=tuple(int(x) for x in _get(topics, "k_range", [2, 8])),  # type: ignore[arg-type]
        topics_iterations=int(_get(topics, "iterations", 300)),
        topics_max_docs=int(_get(topics, "max_docs", 2000)),
        network_threshold=(None if network.get("threshold") is None else float(network["threshold"])),
        network_mode=str(_get(network, "mode", "net-pairwise")),
        tci_corrected=bool(_get(doc, "tci_corrected", False)),
    )
    return cfg


EXAMPLE_CONFIG = """\
# Complete annotated run configuration.
seed: 7                     # master seed, stamped into every artifact header
out_dir: out                # artifact directory (flag --out overrides)
return_kind: log-return     # or simple-return
windows: [7, 14, 32, 64, 128, 256]   # rolling-correlation window sizes (days)
horizon: 10                 # variance-decomposition horizon (days)
tci_corrected: false        # true -> N-1 denominator for the connectedness index

market:
  files:                    # CSVs: header 'date,<COIN>_price,<COIN>_volume'
    - data/btc.csv
    - data/doge.csv
    - data/usdt.csv
  coins:                    # group tags: gold2.0 | altcoin | stablecoin
    BTC: gold2.0
    DOGE: altcoin
    USDT: stablecoin

sentiment:
  scored:                   # pre-scored JSONL feeds (platform -> file)
    twitter: data/twitter.jsonl
    tiktok: data/tiktok.jsonl
  texts:                    # raw text JSONL ({id, text} per line) for topics
    twitter: data/twitter_texts.jsonl
    tiktok: data/tiktok_texts.jsonl

align:
  policy: ffill             # drop | ffill
  max_gap: 3                # max consecutive days to forward-fill

var:
  order: auto               # auto -> BIC selection over 1..max_order
  max_order: 8

forecast:
  lags: 3                   # lagged predictors per series
  scales: [none, 7, 32, 64]  # wavelet window sizes; 'none' for unfiltered
  forecasters: [ridge]      # persistence | ar | ridge
  targets: []               # default: every <COIN>PRC and <COIN>VOL

topics:
  k: auto                   # auto -> silhouette selection over k_range
  k_range: [2, 8]
  iterations: 300           # Gibbs sweeps
  max_docs: 2000            # cap per platform for tractability

network:
  mode: net-pairwise        # net-pairwise | gross
  threshold: null           # null -> 75th percentile of off-diagonal mass
"""
