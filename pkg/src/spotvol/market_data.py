"""Ingestion and validation of asynchronous multivariate tick observations.

Each asset carries its own strictly increasing observation times; nothing is
aligned or interpolated. Timestamps are mapped onto [0, 1] with one global
affine transformation (per-asset scaling would distort cross terms), and all
estimation happens in normalized time. Assets whose first or last tick does
not touch the global endpoints keep interior times; the estimators only use
sums over increments, so that is well defined.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


class MarketDataError(ValueError):
    """Raised when tick input fails validation."""


@dataclass(frozen=True)
class TickSeries:
    """One asset's observation times in [0, 1] and log-price values."""

    asset_id: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or values.ndim != 1 or times.size != values.size:
            raise MarketDataError(f"{self.asset_id}: times and values must be 1-d of equal length")
        if times.size < 2:
            raise MarketDataError(f"{self.asset_id}: at least 2 ticks are required")
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(values)):
            raise MarketDataError(f"{self.asset_id}: times and values must be finite")
        if np.any(np.diff(times) <= 0.0):
            raise MarketDataError(f"{self.asset_id}: times must be strictly increasing")
        if times[0] < 0.0 or times[-1] > 1.0:
            raise MarketDataError(f"{self.asset_id}: times must lie in [0, 1]")

    @property
    def n_increments(self) -> int:
        return int(self.times.size - 1)


@dataclass(frozen=True)
class ObservationSet:
    """A panel of tick series on a common normalized time interval.

    time_span is the original real-world duration; output of the estimators
    is variance per unit of normalized time and can be rescaled by
    1/time_span for per-real-time units.
    """

    series: tuple[TickSeries, ...]
    time_span: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "series", tuple(self.series))
        if not self.series:
            raise MarketDataError("observation set must contain at least one asset")
        ids = [s.asset_id for s in self.series]
        if len(set(ids)) != len(ids):
            raise MarketDataError("asset ids must be unique")
        if not self.time_span > 0.0:
            raise MarketDataError("time_span must be positive")

    @property
    def d(self) -> int:
        return len(self.series)

    @property
    def asset_ids(self) -> tuple[str, ...]:
        return tuple(s.asset_id for s in self.series)


@dataclass(frozen=True)
class AssetIncrements:
    """Per-asset first differences paired with their right-endpoint times."""

    asset_id: str
    times: np.ndarray  # t_l for l = 1..N
    dx: np.ndarray     # value[l] - value[l-1]


@dataclass(frozen=True)
class IncrementTable:
    """Increment series for every asset of an observation set."""

    assets: tuple[AssetIncrements, ...]

    @property
    def d(self) -> int:
        return len(self.assets)

    @property
    def asset_ids(self) -> tuple[str, ...]:
        return tuple(a.asset_id for a in self.assets)


def increments(obs: ObservationSet) -> IncrementTable:
    """Exact first differences of the log-prices, keyed by right endpoints."""
    return IncrementTable(
        assets=tuple(
            AssetIncrements(asset_id=s.asset_id, times=s.times[1:].copy(), dx=np.diff(s.values))
            for s in obs.series
        )
    )


def load_csv(path, price_kind: str = "log") -> ObservationSet:
    """Load long-format tick data: header ``asset,time,price``.

    Rows must be sorted by time within each asset (any interleaving across
    assets is fine). Timestamps are normalized to [0, 1] with the global
    minimum and maximum over all assets; the original span is recorded as
    time_span. With ``price_kind="raw"`` prices must be positive and are
    log-transformed; with ``"log"`` the price column is taken as is.
    """
    if price_kind not in ("log", "raw"):
        raise MarketDataError(f"price_kind must be 'log' or 'raw', got {price_kind!r}")
    order: list[str] = []
    raw_times: dict[str, list[float]] = {}
    raw_prices: dict[str, list[float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["asset", "time", "price"]:
            raise MarketDataError(f"{path}: expected header 'asset,time,price', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise MarketDataError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            asset = row[0].strip()
            if not asset:
                raise MarketDataError(f"{path}:{lineno}: empty asset id")
            try:
                t = float(row[1])
                p = float(row[2])
            except ValueError as exc:
                raise MarketDataError(f"{path}:{lineno}: {exc}") from exc
            if not (math.isfinite(t) and math.isfinite(p)):
                raise MarketDataError(f"{path}:{lineno}: non-finite time or price")
            if asset not in raw_times:
                order.append(asset)
                raw_times[asset] = []
                raw_prices[asset] = []
            prev = raw_times[asset]
            if prev:
                if t == prev[-1]:
                    raise MarketDataError(f"asset {asset!r}: duplicate timestamp {t!r}")
                if t < prev[-1]:
                    raise MarketDataError(
                        f"asset {asset!r}: timestamps must be strictly increasing "
                        f"(got {t!r} after {prev[-1]!r})"
                    )
            prev.append(t)
            raw_prices[asset].append(p)
    if not order:
        raise MarketDataError(f"{path}: no data rows")
    for asset in order:
        if len(raw_times[asset]) < 2:
            raise MarketDataError(f"asset {asset!r}: at least 2 ticks are required")
        if price_kind == "raw":
            bad = [p for p in raw_prices[asset] if p <= 0.0]
            if bad:
                raise MarketDataError(f"asset {asset!r}: non-positive raw price {bad[0]!r}")
    t_min = min(ts[0] for ts in raw_times.values())
    t_max = max(ts[-1] for ts in raw_times.values())
    span = t_max - t_min
    if not span > 0.0:
        raise MarketDataError("all timestamps coincide; cannot normalize the time axis")
    series = []
    for asset in order:
        times = (np.asarray(raw_times[asset]) - t_min) / span
        values = np.asarray(raw_prices[asset])
        if price_kind == "raw":
            values = np.log(values)
        series.append(TickSeries(asset_id=asset, times=times, values=values))
    return ObservationSet(series=tuple(series), time_span=span)


def write_csv(obs: ObservationSet, path) -> None:
    """Write an observation set in the long tick format (prices as log-prices).

    Round-trips through ``load_csv(..., price_kind="log")``: once the global
    tick span is exactly [0, 1], renormalizing is the identity.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["asset", "time", "price"])
        for s in obs.series:
            for t, v in zip(s.times, s.values):
                writer.writerow([s.asset_id, repr(float(t)), repr(float(v))])
