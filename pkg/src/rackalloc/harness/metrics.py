"""Deployment analytics and experiment metric aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


def adoption_rate(events: Iterable[dict]) -> float | None:
    """Accepted-suggestion placements over all placements.

    Placements are accepted suggestions plus manual placements; rejections
    alone place nothing and only enter once a manual placement lands. An
    event log with no placements has no defined rate (None).
    """
    accepted = 0
    manual = 0
    for e in events:
        kind = e.get("kind")
        if kind == "accepted":
            accepted += 1
        elif kind == "manual_placed":
            manual += 1
    total = accepted + manual
    if total == 0:
        return None
    return accepted / total


def stranding_increase(series: Sequence[float]) -> float:
    """Sum of positive month-over-month gains in the stranding series.

    Inputs are decimal percentages; differencing runs through their decimal
    representations so reported gains carry no binary-float residue
    (0.12 - 0.10 + 0.15 - 0.11 is exactly 0.06).
    """
    if len(series) < 2:
        raise ValueError("need at least two observations")
    vals = [Fraction(repr(float(v))) for v in series]
    total = sum(max(Fraction(0), b - a) for a, b in zip(vals, vals[1:]))
    return float(total)


def bucket_series(events: Iterable[dict], key: str, window: float) -> list[float]:
    """Last value of ``key`` per time window, for month-style aggregation."""
    rows = sorted(
        (e for e in events if key in e.get("payload", {})),
        key=lambda e: e["timestamp"],
    )
    if not rows:
        return []
    start = rows[0]["timestamp"]
    out: dict[int, float] = {}
    for e in rows:
        out[int((e["timestamp"] - start) // window)] = e["payload"][key]
    series = []
    last = None
    for i in range(max(out) + 1):
        if i in out:
            last = out[i]
        series.append(last)
    return series


@dataclass(frozen=True)
class MetricRow:
    cell_id: str
    policy: str
    n: int
    mean: float  # ratio-to-hindsight, or % excess for bin packing
    se: float
    mean_wall_time: float

    def csv_fields(self) -> list[str]:
        return [
            self.cell_id,
            self.policy,
            str(self.n),
            repr(self.mean),
            repr(self.se),
        ]


CSV_HEADER = ["cell", "policy", "n", "mean", "se"]


def summarize_ratios(
    cell_id: str, policy: str, values: Sequence[float], wall_times: Sequence[float]
) -> MetricRow:
    n = len(values)
    mean = sum(values) / n
    if n > 1:
        var = sum((v - mean) ** 2 for v in values) / (n - 1)
        se = math.sqrt(var / n)
    else:
        se = 0.0
    wt = sum(wall_times) / len(wall_times) if wall_times else 0.0
    return MetricRow(cell_id, policy, n, mean, se, wt)


def summarize_excess(
    cell_id: str, policy: str, ratios: Sequence[float], wall_times: Sequence[float]
) -> MetricRow:
    """Geometric mean of bins-over-hindsight ratios, reported as % excess."""
    n = len(ratios)
    log_mean = sum(math.log(r) for r in ratios) / n
    gm = math.exp(log_mean)
    mean_excess = 100.0 * (gm - 1.0)
    if n > 1:
        log_var = sum((math.log(r) - log_mean) ** 2 for r in ratios) / (n - 1)
        se = 100.0 * gm * math.sqrt(log_var / n)
    else:
        se = 0.0
    wt = sum(wall_times) / len(wall_times) if wall_times else 0.0
    return MetricRow(cell_id, policy, n, mean_excess, se, wt)
