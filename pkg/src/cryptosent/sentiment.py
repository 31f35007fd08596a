"""Daily sentiment inclination index from per-item scores.

Items carry a score on the 0-10 scale (0 = strong decline conviction,
5 = neutral, 10 = strong rise conviction). The daily index per platform is
the arithmetic mean of that UTC day's item scores; days without items are
simply absent. An HTTP scorer client is provided for unscored text, but the
whole pipeline runs from pre-scored JSONL files.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .panel import SeriesPanel

PLATFORMS = ("twitter", "tiktok")


@dataclass(frozen=True)
class SentimentRecord:
    """One scored social-media item."""

    platform: str
    timestamp: datetime
    score: float
    item_id: str

    def __post_init__(self):
        if self.platform not in PLATFORMS:
            raise InputError(f"unknown platform {self.platform!r} (item {self.item_id!r})")
        if not self.item_id:
            raise InputError("item_id must be nonempty")
        if not (0.0 <= self.score <= 10.0):
            raise InputError(f"score {self.score} outside [0, 10] (item {self.item_id!r})")

    def utc_day(self) -> date:
        ts = self.timestamp
        if ts.tzinfo is not None:
            ts = ts.astimezone(timezone.utc)
        return ts.date()


@dataclass(frozen=True)
class SentimentIndexSeries:
    """Daily mean sentiment per platform, with item counts."""

    platform: str
    dates: tuple[date, ...]
    tsi: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        tsi = np.array(self.tsi, dtype=float, copy=True)
        counts = np.array(self.counts, dtype=int, copy=True)
        tsi.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tsi", tsi)
        object.__setattr__(self, "counts", counts)
        if len(self.dates) != tsi.shape[0] or len(self.dates) != counts.shape[0]:
            raise InputError("dates, tsi, counts must have equal length")
        if tsi.size and (np.nanmin(tsi) < 0 or np.nanmax(tsi) > 10):
            raise InputError("tsi values must lie in [0, 10]")
        if (counts < 1).any():
            raise InputError("every reported day needs count >= 1")


def aggregate_tsi(records: Iterable[SentimentRecord], platform: str) -> SentimentIndexSeries:
    """Bucket records by UTC day and average scores into the daily index.

    Items repeated under one item_id (multiple scoring passes) are collapsed
    to their mean score first, so each item contributes once to its day.
    """
    if platform not in PLATFORMS:
        raise InputError(f"unknown platform {platform!r}")
    per_item: dict[str, list[float]] = {}
    item_day: dict[str, date] = {}
    for rec in records:
        if rec.platform != platform:
            continue
        per_item.setdefault(rec.item_id, []).append(rec.score)
        item_day.setdefault(rec.item_id, rec.utc_day())
    if not per_item:
        raise InputError(f"no records for platform {platform!r}")

    # canonical accumulation order makes the result bit-identical under
    # any permutation of the input records
    by_day: dict[date, list[float]] = {}
    for item_id in sorted(per_item):
        scores = sorted(per_item[item_id])
        by_day.setdefault(item_day[item_id], []).append(sum(scores) / len(scores))

    days = sorted(by_day)
    tsi = np.array([sum(by_day[d]) / len(by_day[d]) for d in days])
    counts = np.array([len(by_day[d]) for d in days])
    return SentimentIndexSeries(platform, tuple(days), tsi, counts)


def merge_index_series(shards: Sequence[SentimentIndexSeries]) -> SentimentIndexSeries:
    """Combine per-shard daily aggregates into one series, weighting by counts."""
    if not shards:
        raise InputError("no shards to merge")
    platform = shards[0].platform
    if any(s.platform != platform for s in shards):
        raise InputError("cannot merge shards from different platforms")
    sums: dict[date, float] = {}
    counts: dict[date, int] = {}
    for shard in shards:
        for d, value, n in zip(shard.dates, shard.tsi, shard.counts):
            sums[d] = sums.get(d, 0.0) + value * int(n)
            counts[d] = counts.get(d, 0) + int(n)
    days = sorted(sums)
    tsi = np.array([sums[d] / counts[d] for d in days])
    n = np.array([counts[d] for d in days])
    return SentimentIndexSeries(platform, tuple(days), tsi, n)


def merge_sentiment(panel: SeriesPanel, series: SentimentIndexSeries) -> SeriesPanel:
    """Add the `<platform>_tsi` column to a market panel, aligned on panel dates."""
    if panel.n_dates == 0:
        raise InputError("empty panel")
    if len(series.dates) == 0:
        raise InputError("empty sentiment series")
    name = f"{series.platform}_tsi"
    lookup = dict(zip(series.dates, series.tsi))
    column = np.array([lookup.get(d, math.nan) for d in panel.dates])
    if np.isnan(column).all():
        warnings.warn(
            f"no overlap between panel dates and {series.platform} sentiment dates", stacklevel=2
        )
    return panel.with_column(name, column)


# -- JSONL ingestion ---------------------------------------------------------


def read_jsonl(path: str | Path) -> list[SentimentRecord]:
    """Read pre-scored records: one object per line with platform/timestamp/score/id."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: line {line_no}: invalid JSON: {exc}") from None
            try:
                ts = datetime.fromisoformat(str(obj["timestamp"]))
                rec = SentimentRecord(
                    platform=str(obj["platform"]),
                    timestamp=ts,
                    score=float(obj["score"]),
                    item_id=str(obj["id"]),
                )
            except KeyError as exc:
                raise InputError(f"{path}: line {line_no}: missing key {exc}") from None
            except ValueError as exc:
                raise InputError(f"{path}: line {line_no}: {exc}") from None
            records.append(rec)
    if not records:
        raise InputError(f"{path}: no records")
    return records


def write_jsonl(records: Iterable[SentimentRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "platform": rec.platform,
                        "timestamp": rec.timestamp.isoformat(),
                        "score": rec.score,
                        "id": rec.item_id,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


# -- external scorer endpoint --------------------------------------------------


@dataclass(frozen=True)
class ScoreItem:
    """Unscored text plus the metadata needed to build a SentimentRecord."""

    item_id: str
    text: str
    platform: str
    timestamp: datetime


@dataclass(frozen=True)
class EndpointConfig:
    url: str
    batch_size: int = 32
    timeout: float = 10.0
    max_retries: int = 3
    backoff: float = 0.5


@dataclass(frozen=True)
class ScoreFailure:
    item_id: str
    reason: str


@dataclass(frozen=True)
class ScoreResult:
    records: tuple[SentimentRecord, ...]
    failures: tuple[ScoreFailure, ...]


def score_via_endpoint(items: Sequence[ScoreItem], config: EndpointConfig) -> ScoreResult:
    """Score texts through the external HTTP endpoint.

    Wire contract: POST a JSON array of {id, text}; the response is a JSON
    array of {id, score}. Non-2xx responses are retried up to max_retries
    with linear backoff, after which the whole batch is reported failed.
    Per-item malformed or out-of-range responses are rejected individually;
    the rest of the batch is kept. Output preserves input order.
    """
    import requests

    if not items:
        raise InputError("empty batch")
    by_id = {it.item_id: it for it in items}
    if len(by_id) != len(items):
        raise InputError("duplicate item ids in batch")

    records: dict[str, SentimentRecord] = {}
    failures: dict[str, ScoreFailure] = {}

    for start in range(0, len(items), config.batch_size):
        batch = items[start : start + config.batch_size]
        payload = [{"id": it.item_id, "text": it.text} for it in batch]
        response = None
        last_error = "exhausted retries"
        for attempt in range(config.max_retries + 1):
            try:
                r = requests.post(config.url, json=payload, timeout=config.timeout)
            except requests.RequestException as exc:
                last_error = f"network error: {exc}"
            else:
                if 200 <= r.status_code < 300:
                    response = r
                    break
                last_error = f"HTTP {r.status_code}"
            if attempt < config.max_retries:
                time.sleep(config.backoff * (attempt + 1))
        if response is None:
            for it in batch:
                failures[it.item_id] = ScoreFailure(it.item_id, f"retriable: {last_error}")
            continue

        try:
            body = response.json()
            if not isinstance(body, list):
                raise ValueError("response is not a JSON array")
        except ValueError as exc:
            for it in batch:
                failures[it.item_id] = ScoreFailure(it.item_id, f"malformed response: {exc}")
            continue

        answered: dict[str, object] = {}
        for entry in body:
            if isinstance(entry, dict) and "id" in entry:
                answered[str(entry["id"])] = entry.get("score")
        for it in batch:
            if it.item_id not in answered:
                failures[it.item_id] = ScoreFailure(it.item_id, "no score in response")
                continue
            raw = answered[it.item_id]
            try:
                score = float(raw)  # type: ignore[arg-type]
            except (TypeError, ValueError):
                failures[it.item_id] = ScoreFailure(it.item_id, f"non-numeric score {raw!r}")
                continue
            if not (0.0 <= score <= 10.0):
                failures[it.item_id] = ScoreFailure(it.item_id, f"score {score} outside [0, 10]")
                continue
            records[it.item_id] = SentimentRecord(it.platform, it.timestamp, score, it.item_id)

    ordered_records = tuple(records[it.item_id] for it in items if it.item_id in records)
    ordered_failures = tuple(failures[it.item_id] for it in items if it.item_id in failures)
    return ScoreResult(ordered_records, ordered_failures)
