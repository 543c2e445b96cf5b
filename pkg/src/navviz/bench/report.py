"""Trial records, aggregation statistics, and report rendering."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
from dataclasses import dataclass, field, asdict
from typing import Iterable, Sequence

MODE_LABELS: dict[int, str] = {
    1: "Without any sensor data visualization",
    2: "With laser scan visualization",
    3: "With environment map visualization",
    4: "With laser scan and environment map visualization",
    5: "With laser scan, environment and navigation visualization",
}


@dataclass(frozen=True)
class ModeSpec:
    """One benchmark condition: which channels run, for how long, and the
    navigation goal to send mid-trial (None = no goal, no latency metric)."""

    mode: int
    duration: float = 10.0
    goal: tuple[float, float, float] | None = None
    label: str = ""

    def __post_init__(self):
        if self.mode not in MODE_LABELS:
            raise ValueError(f"mode must be 1..5, got {self.mode}")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if not self.label:
            object.__setattr__(self, "label", MODE_LABELS[self.mode])
        if self.goal is not None:
            object.__setattr__(self, "goal", tuple(float(v) for v in self.goal))


@dataclass(frozen=True)
class TrialResult:
    mode: int
    update_rate: float            # scene ticks per second (fps analogue)
    mean_tick_cost: float         # s
    p95_tick_cost: float          # s
    time_to_execution: float | None  # s, goal publish -> plan applied to scene
    points_peak: int

    def __post_init__(self):
        if self.update_rate <= 0:
            raise ValueError("update_rate must be > 0")


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    std: float
    min: float
    max: float


@dataclass(frozen=True)
class BoxStats:
    """Box-plot statistics: quartiles by inclusive linear interpolation."""

    mean: float
    std: float
    min: float
    q1: float
    median: float
    q3: float
    max: float


def quantile_linear(values: Sequence[float], q: float) -> float:
    """Inclusive quantile with linear interpolation between order statistics.

    With n sorted values the q-quantile sits at rank h = (n-1)*q and is
    interpolated between the neighboring values (spreadsheet convention).
    """
    if not values:
        raise ValueError("no values")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be in [0, 1], got {q}")
    v = sorted(float(x) for x in values)
    n = len(v)
    if n == 1:
        return v[0]
    h = (n - 1) * q
    lo = int(math.floor(h))
    hi = min(lo + 1, n - 1)
    return v[lo] + (v[hi] - v[lo]) * (h - lo)


def summarize(values: Sequence[float]) -> SummaryStats:
    """Mean/population-std/min/max (std is 0 for a single value)."""
    if not values:
        raise ValueError("no values")
    v = [float(x) for x in values]
    n = len(v)
    mean = sum(v) / n
    var = sum((x - mean) ** 2 for x in v) / n
    return SummaryStats(mean=mean, std=math.sqrt(var), min=min(v), max=max(v))


def box_stats(values: Sequence[float]) -> BoxStats:
    s = summarize(values)
    return BoxStats(mean=s.mean, std=s.std, min=s.min,
                    q1=quantile_linear(values, 0.25),
                    median=quantile_linear(values, 0.5),
                    q3=quantile_linear(values, 0.75),
                    max=s.max)


@dataclass(frozen=True)
class ModeAggregate:
    mode: int
    label: str
    trials: int
    update_rate: SummaryStats
    tick_cost: SummaryStats
    p95_tick_cost: SummaryStats
    time_to_execution: BoxStats | None
    points_peak: int


@dataclass(frozen=True)
class Report:
    aggregates: tuple[ModeAggregate, ...]
    trials_per_mode: int
    fingerprint: dict = field(default_factory=dict)
    partial: bool = False


def make_fingerprint(config: dict) -> dict:
    """Host description + a stable hash of the run configuration."""
    digest = hashlib.sha256(
        json.dumps(config, sort_keys=True, default=str).encode("utf-8")).hexdigest()
    return {
        "host": f"{platform.platform()} python/{platform.python_version()}",
        "config_hash": digest[:16],
    }


def aggregate(results: Iterable[TrialResult], *, trials_per_mode: int,
              labels: dict[int, str] | None = None,
              fingerprint: dict | None = None, partial: bool = False) -> Report:
    """Group trial results per mode and summarize each metric."""
    labels = labels or MODE_LABELS
    by_mode: dict[int, list[TrialResult]] = {}
    for r in results:
        by_mode.setdefault(r.mode, []).append(r)

    aggregates = []
    for mode in sorted(by_mode):
        rows = by_mode[mode]
        if not partial and len(rows) != trials_per_mode:
            raise ValueError(f"mode {mode} has {len(rows)} trials, expected {trials_per_mode}")
        ttes = [r.time_to_execution for r in rows if r.time_to_execution is not None]
        aggregates.append(ModeAggregate(
            mode=mode,
            label=labels.get(mode, str(mode)),
            trials=len(rows),
            update_rate=summarize([r.update_rate for r in rows]),
            tick_cost=summarize([r.mean_tick_cost for r in rows]),
            p95_tick_cost=summarize([r.p95_tick_cost for r in rows]),
            time_to_execution=box_stats(ttes) if ttes else None,
            points_peak=max(r.points_peak for r in rows),
        ))
    return Report(aggregates=tuple(aggregates), trials_per_mode=trials_per_mode,
                  fingerprint=fingerprint or {}, partial=partial)


CSV_COLUMNS = (
    "mode", "label", "trials",
    "update_rate_mean", "update_rate_std", "update_rate_min", "update_rate_max",
    "tick_cost_mean", "tick_cost_std",
    "tick_cost_p95_mean",
    "tte_mean", "tte_std", "tte_min", "tte_q1", "tte_median", "tte_q3", "tte_max",
    "points_peak",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def _row_values(agg: ModeAggregate) -> list:
    tte = agg.time_to_execution
    return [
        agg.mode, agg.label, agg.trials,
        agg.update_rate.mean, agg.update_rate.std, agg.update_rate.min, agg.update_rate.max,
        agg.tick_cost.mean, agg.tick_cost.std,
        agg.p95_tick_cost.mean,
        tte.mean if tte else None, tte.std if tte else None,
        tte.min if tte else None, tte.q1 if tte else None,
        tte.median if tte else None, tte.q3 if tte else None,
        tte.max if tte else None,
        agg.points_peak,
    ]


def render_report(report: Report, format: str = "markdown") -> str:
    """Report -> csv | json | markdown document with a fixed column order."""
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for agg in report.aggregates:
            writer.writerow([_fmt(v) for v in _row_values(agg)])
        return buf.getvalue()

    if format == "json":
        doc = {
            "trials_per_mode": report.trials_per_mode,
            "partial": report.partial,
            "fingerprint": report.fingerprint,
            "modes": [asdict(agg) for agg in report.aggregates],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    if format == "markdown":
        lines = ["| " + " | ".join(CSV_COLUMNS) + " |",
                 "|" + "---|" * len(CSV_COLUMNS)]
        for agg in report.aggregates:
            lines.append("| " + " | ".join(_fmt(v) for v in _row_values(agg)) + " |")
        if report.fingerprint:
            lines.append("")
            lines.append(f"trials per mode: {report.trials_per_mode}"
                         + (" (partial)" if report.partial else ""))
            lines.append(f"host: {report.fingerprint.get('host', '?')}, "
                         f"config: {report.fingerprint.get('config_hash', '?')}")
        return "\n".join(lines) + "\n"

    raise ValueError(f"unknown report format {format!r}")
