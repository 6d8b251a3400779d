"""Co-movement analysis of two price series through the sign decomposition.

Each interval contributes the sign of the price change, with a flat interval
counted as a down move (only a strict rise is +1). The paired signs are then
decomposed: X tracks the shared trend, Y the relative moves and T/(T+S) the
fraction of intervals in which both assets moved together.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Sequence

from .decomposition import decompose
from .models import JointPath


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class PriceSeries:
    timestamps: tuple
    prices: tuple
    name: str = ""

    def __post_init__(self):
        if len(self.timestamps) != len(self.prices):
            raise IngestError("timestamps and prices differ in length")
        if len(self.prices) < 2:
            raise IngestError(f"need at least 2 prices, got {len(self.prices)}")
        for i in range(1, len(self.timestamps)):
            if not self.timestamps[i - 1] < self.timestamps[i]:
                raise IngestError(f"timestamps not strictly increasing at row {i + 1}: {self.timestamps[i]!r}")
        for ts, p in zip(self.timestamps, self.prices):
            if not (p > 0 and math.isfinite(p)):
                raise IngestError(f"non-positive or non-finite price {p!r} at {ts!r}")

    def __len__(self):
        return len(self.prices)


_MISSING = {"", "na", "nan", "null", "none", "-"}


def _parse_time(text: str):
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise IngestError(f"unparseable timestamp {text!r}") from None


def _parse_price(text: str):
    if text is None or text.strip().lower() in _MISSING:
        return None
    try:
        return float(text)
    except ValueError:
        raise IngestError(f"unparseable price {text!r}") from None


def parse_csv(
    data: bytes | str,
    time_col: str = "timestamp",
    cols: Sequence[str] | None = None,
) -> tuple:
    """Parse a CSV with a timestamp column and two price columns.

    ``cols`` names the price columns; by default the first two non-timestamp
    columns are used. Rows missing either price are dropped from both series.
    """
    text = data.decode("utf-8-sig") if isinstance(data, bytes) else data
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    if time_col not in header:
        raise IngestError(f"no {time_col!r} column in header {header}")
    if cols is None:
        cols = [h for h in header if h != time_col][:2]
    cols = list(cols)
    if len(cols) != 2 or any(c not in header for c in cols):
        raise IngestError(f"need two price columns present in header {header}, got {cols}")
    times, a, b = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if None in row:
            raise IngestError(f"row {lineno} has more fields than the header")
        try:
            pa, pb = _parse_price(row[cols[0]]), _parse_price(row[cols[1]])
            ts = _parse_time(row[time_col] or "")
        except IngestError as exc:
            raise IngestError(f"row {lineno}: {exc}") from None
        if pa is None or pb is None:
            continue
        if times and not times[-1][1] < ts:
            raise IngestError(f"row {lineno}: timestamp {row[time_col]!r} is not after row {times[-1][0]}")
        times.append((lineno, ts))
        a.append(pa)
        b.append(pb)
    if len(times) < 2:
        raise IngestError(f"need at least 2 usable rows, got {len(times)}")
    stamps = tuple(t for _, t in times)
    return PriceSeries(stamps, tuple(a), cols[0]), PriceSeries(stamps, tuple(b), cols[1])


def parse_single(data: bytes | str, time_col: str = "timestamp", col: str | None = None) -> PriceSeries:
    """Parse one price column; rows with a missing price are dropped."""
    text = data.decode("utf-8-sig") if isinstance(data, bytes) else data
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    if time_col not in header:
        raise IngestError(f"no {time_col!r} column in header {header}")
    col = col or next((h for h in header if h != time_col), None)
    if col not in header:
        raise IngestError(f"price column {col!r} not in header {header}")
    times, prices = [], []
    for lineno, row in enumerate(reader, start=2):
        price = _parse_price(row[col])
        if price is None:
            continue
        ts = _parse_time(row[time_col] or "")
        if times and not times[-1] < ts:
            raise IngestError(f"row {lineno}: timestamp {row[time_col]!r} is not after the previous row")
        times.append(ts)
        prices.append(price)
    return PriceSeries(tuple(times), tuple(prices), col)


def align(s1: PriceSeries, s2: PriceSeries) -> tuple:
    """Inner join on timestamps."""
    lookup = dict(zip(s2.timestamps, s2.prices))
    common = [(t, p) for t, p in zip(s1.timestamps, s1.prices) if t in lookup]
    if len(common) < 2:
        raise IngestError(f"only {len(common)} shared timestamps")
    ts = tuple(t for t, _ in common)
    return (
        PriceSeries(ts, tuple(p for _, p in common), s1.name),
        PriceSeries(ts, tuple(lookup[t] for t in ts), s2.name),
    )


def to_signs(series: PriceSeries) -> tuple:
    p = series.prices
    return tuple(1 if p[i] > p[i - 1] else -1 for i in range(1, len(p)))


@dataclass
class WindowStats:
    start: int  # first interval, 1-based
    stop: int  # last interval, inclusive
    X: int
    Y: int
    T: int
    S: int

    @property
    def ratio(self) -> float:
        return self.T / (self.T + self.S)

    @property
    def regime(self) -> str:
        if self.T > self.S:
            return "rising co-trend" if self.X > 0 else "falling co-trend" if self.X < 0 else "flat co-trend"
        if self.T < self.S:
            return "divergence"
        return "balanced"

    def to_json(self) -> dict:
        d = asdict(self)
        d.update(
            co_movement_ratio=self.ratio,
            market_trend=(self.X > 0) - (self.X < 0),
            relative_strength=(self.Y > 0) - (self.Y < 0),
            regime=self.regime,
        )
        return d


@dataclass
class TrendReport:
    full: WindowStats
    trailing: WindowStats
    windows: list = field(default_factory=list)
    names: tuple = ("", "")

    @property
    def X_final(self) -> int:
        return self.full.X

    @property
    def Y_final(self) -> int:
        return self.full.Y

    @property
    def T_final(self) -> int:
        return self.full.T

    @property
    def S_final(self) -> int:
        return self.full.S

    def to_json(self) -> dict:
        return {
            "type": "trend",
            "series": list(self.names),
            "full": self.full.to_json(),
            "trailing": self.trailing.to_json(),
            "windows": [w.to_json() for w in self.windows],
        }


def _stats(xi, eta, start: int) -> WindowStats:
    dec = decompose(JointPath.from_signs(xi, eta))
    T = dec.T[-1]
    return WindowStats(start, start + len(xi) - 1, dec.X[-1] if dec.X else 0, dec.Y[-1] if dec.Y else 0, T, len(xi) - T)


def analyze(s1: PriceSeries, s2: PriceSeries, window: int | None = None) -> TrendReport:
    """Decompose the paired sign series over the full range and trailing windows.

    ``windows`` lists consecutive non-overlapping windows of ``window``
    intervals ending at the last interval; a leading remainder is skipped.
    """
    if len(s1) != len(s2):
        raise IngestError(f"series lengths differ: {len(s1)} != {len(s2)}")
    xi, eta = to_signs(s1), to_signs(s2)
    n = len(xi)
    window = n if window is None else window
    if not 1 <= window <= n:
        raise IngestError(f"window must lie in 1..{n}, got {window}")
    full = _stats(xi, eta, 1)
    windows = []
    for stop in range(n, window - 1, -window):
        start = stop - window
        windows.append(_stats(xi[start:stop], eta[start:stop], start + 1))
    windows.reverse()
    return TrendReport(full, windows[-1], windows, (s1.name, s2.name))
