"""Bundled synthetic dataset: seeded market prices/volumes plus sentiment feeds.

The generator plants known structure so the full pipeline is exercisable
without proprietary data: GARCH-style return volatility, cross-series
correlation, and a lagged sentiment signal driving the speculative coin's
return and volume change. Identical seeds give identical files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path

import numpy as np

from .sentiment import SentimentRecord, write_jsonl

DEFAULT_COINS = {"BTC": "gold2.0", "DOGE": "altcoin", "USDT": "stablecoin"}


@dataclass(frozen=True)
class SyntheticDataset:
    market_files: tuple[Path, ...]
    sentiment_files: dict[str, Path]
    text_files: dict[str, Path]
    start: date
    n_days: int
    seed: int


def _sentiment_index(rng: np.random.Generator, n_days: int, persistence: float = 0.9) -> np.ndarray:
    """Mean daily sentiment on [0, 10]: a mean-reverting path around neutral."""
    level = np.empty(n_days)
    x = 0.0
    for t in range(n_days):
        x = persistence * x + rng.normal(0.0, 0.55)
        level[t] = np.clip(5.0 + x, 0.5, 9.5)
    return level


def _garch_returns(rng: np.random.Generator, n_days: int, omega: float, alpha: float, beta: float) -> np.ndarray:
    h = omega / (1.0 - alpha - beta)
    eps = np.empty(n_days)
    for t in range(n_days):
        if t > 0:
            h = omega + alpha * eps[t - 1] ** 2 + beta * h
        eps[t] = np.sqrt(h) * rng.standard_normal()
    return eps


def generate(
    out_dir: str | Path,
    n_days: int = 700,
    seed: int = 7,
    start: date = date(2021, 11, 8),
    coins: dict[str, str] = DEFAULT_COINS,
    tweets_per_day: int = 24,
    videos_per_day: int = 6,
) -> SyntheticDataset:
    """Write per-coin market CSVs, per-platform scored JSONL feeds and text JSONLs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    days = [start + timedelta(days=i) for i in range(n_days)]

    twitter = _sentiment_index(rng, n_days)
    tiktok = _sentiment_index(rng, n_days, persistence=0.75)

    returns: dict[str, np.ndarray] = {}
    vol_changes: dict[str, np.ndarray] = {}
    for coin, group in coins.items():
        if group == "stablecoin":
            base = _garch_returns(rng, n_days, 2e-8, 0.05, 0.80)
        elif group == "gold2.0":
            base = _garch_returns(rng, n_days, 4e-5, 0.08, 0.88)
            base += 0.004 * np.concatenate([[0.0], (twitter[:-1] - 5.0) / 5.0])
        else:  # altcoin: speculative, led by the video platform
            base = _garch_returns(rng, n_days, 1e-4, 0.08, 0.84)
            base += 0.15 * np.concatenate([[0.0], (tiktok[:-1] - 5.0) / 5.0])
        returns[coin] = base
        lead = tiktok if group == "altcoin" else twitter
        vol_changes[coin] = (
            0.05 * np.concatenate([[0.0], (lead[:-1] - 5.0) / 5.0])
            + rng.normal(0.0, 0.12, n_days)
        )

    market_files = []
    for coin in coins:
        price0 = {"gold2.0": 60000.0, "altcoin": 0.25, "stablecoin": 1.0}[coins[coin]]
        prices = price0 * np.exp(np.cumsum(returns[coin]))
        volumes = np.empty(n_days)
        volumes[0] = 1e9 if coins[coin] != "altcoin" else 5e8
        for t in range(1, n_days):
            volumes[t] = max(volumes[t - 1] * (1.0 + vol_changes[coin][t]), 1e5)
        path = out_dir / f"{coin.lower()}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", f"{coin}_price", f"{coin}_volume"])
            for d, p, v in zip(days, prices, volumes):
                writer.writerow([d.isoformat(), repr(float(p)), repr(float(v))])
        market_files.append(path)

    vocab = {
        "twitter": ["bitcoin", "stock", "inflation", "elon", "bull", "bear", "hodl", "pump", "crash", "moon"],
        "tiktok": ["market", "bitcoin", "rate", "inflation", "bank", "doge", "viral", "trade", "dip", "rally"],
    }
    sentiment_files: dict[str, Path] = {}
    text_files: dict[str, Path] = {}
    for platform, index, per_day in (("twitter", twitter, tweets_per_day), ("tiktok", tiktok, videos_per_day)):
        records = []
        texts = []
        for i, d in enumerate(days):
            n_items = max(1, int(rng.poisson(per_day)))
            scores = np.clip(index[i] + rng.normal(0.0, 1.6, n_items), 0.0, 10.0)
            for j, s in enumerate(scores):
                stamp = datetime.combine(d, time(hour=int(rng.integers(0, 24))), tzinfo=timezone.utc)
                item_id = f"{platform}-{d.isoformat()}-{j}"
                records.append(SentimentRecord(platform, stamp, float(np.round(s, 3)), item_id))
                words = rng.choice(vocab[platform], size=rng.integers(4, 9), replace=True)
                texts.append({"id": item_id, "text": " ".join(words)})
        spath = out_dir / f"{platform}.jsonl"
        write_jsonl(records, spath)
        sentiment_files[platform] = spath
        tpath = out_dir / f"{platform}_texts.jsonl"
        with open(tpath, "w", encoding="utf-8") as fh:
            import json

            for obj in texts:
                fh.write(json.dumps(obj, sort_keys=True) + "\n")
        text_files[platform] = tpath

    return SyntheticDataset(tuple(market_files), sentiment_files, text_files, start, n_days, seed)
