"""Summary statistics, boxplot data and as-is/to-be comparison for Monte Carlo output."""

from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional, Sequence

import numpy as np

from .engine import ResultSet
from .model import CATEGORIES, TaskCategory

METRICS: tuple[str, ...] = ("total",) + tuple(c.value for c in CATEGORIES)
CSV_HEADER = "iteration," + ",".join(METRICS)


def round_half_up(x: float, ndigits: int = 1) -> float:
    """Round like a printed report does (2.45 -> 2.5), using the shortest repr of ``x``."""
    q = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


def _sorted(samples) -> np.ndarray:
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise ValueError("need at least one sample")
    return x


def _quantile_sorted(x: np.ndarray, q: float) -> float:
    h = (x.size - 1) * q
    lo = int(math.floor(h))
    if lo >= x.size - 1:
        return float(x[-1])
    return float(x[lo] + (h - lo) * (x[lo + 1] - x[lo]))


def quantile(samples: Sequence[float], q: float) -> float:
    """Linear interpolation between order statistics at position (n-1)*q."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    return _quantile_sorted(_sorted(samples), q)


@dataclass(frozen=True)
class SummaryStatistics:
    n: int
    median: float
    mean: float
    sample_std: float
    min: float
    max: float
    q1: float
    q3: float
    iqr: float
    whisker_low: float
    whisker_high: float
    outliers_low: int
    outliers_high: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoxplotDescriptor:
    label: str
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["outliers"] = list(self.outliers)
        return d


def _fences(x: np.ndarray):
    q1 = _quantile_sorted(x, 0.25)
    q3 = _quantile_sorted(x, 0.75)
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    # an interpolated quartile can fall outside every in-fence sample; clamp to the box edge
    whiskers = (min(float(inside[0]), q1), max(float(inside[-1]), q3))
    return q1, q3, iqr, lo_fence, hi_fence, whiskers


def summarize(samples: Sequence[float]) -> SummaryStatistics:
    x = _sorted(samples)
    q1, q3, iqr, lo_fence, hi_fence, (w_lo, w_hi) = _fences(x)
    std = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return SummaryStatistics(
        n=int(x.size),
        median=_quantile_sorted(x, 0.5),
        mean=float(np.mean(x)),
        sample_std=std,
        min=float(x[0]),
        max=float(x[-1]),
        q1=q1,
        q3=q3,
        iqr=iqr,
        # the box itself always lies inside the fences, so some sample is inside
        whisker_low=w_lo,
        whisker_high=w_hi,
        outliers_low=int(np.count_nonzero(x < lo_fence)),
        outliers_high=int(np.count_nonzero(x > hi_fence)),
    )


def boxplot_descriptor(label: str, samples: Sequence[float]) -> BoxplotDescriptor:
    x = _sorted(samples)
    q1, q3, _, lo_fence, hi_fence, (w_lo, w_hi) = _fences(x)
    outliers = x[(x < lo_fence) | (x > hi_fence)]
    return BoxplotDescriptor(label, q1, _quantile_sorted(x, 0.5), q3, w_lo, w_hi, tuple(float(v) for v in outliers))


def percent_reduction(baseline: float, transformed: float, ndigits: Optional[int] = 1) -> float:
    """100 * (baseline - transformed) / baseline, rounded half-up unless ``ndigits`` is None."""
    if not baseline > 0:
        raise ValueError(f"baseline must be positive, got {baseline}")
    pct = 100.0 * (baseline - transformed) / baseline
    return pct if ndigits is None else round_half_up(pct, ndigits)


_REDUCED = ("median", "mean", "sample_std")


@dataclass(frozen=True)
class MetricComparison:
    metric: str
    baseline: SummaryStatistics
    transformed: SummaryStatistics
    # full precision; None where the baseline value is zero and the sides differ
    reduction_pct_median: Optional[float]
    reduction_pct_mean: Optional[float]
    reduction_pct_std: Optional[float]

    def display(self, field_name: str) -> Optional[float]:
        v = getattr(self, field_name)
        return None if v is None else round_half_up(v, 1)

    def to_dict(self) -> dict:
        out = {"baseline": self.baseline.to_dict(), "transformed": self.transformed.to_dict()}
        for f in ("reduction_pct_median", "reduction_pct_mean", "reduction_pct_std"):
            out[f] = getattr(self, f)
            out[f + "_display"] = self.display(f)
        return out


@dataclass(frozen=True)
class ComparisonReport:
    metrics: dict[str, MetricComparison]

    def __getitem__(self, metric: str) -> MetricComparison:
        return self.metrics[metric]

    def to_dict(self) -> dict:
        return {name: mc.to_dict() for name, mc in self.metrics.items()}


def _reduction(b: float, t: float) -> Optional[float]:
    if b > 0:
        return percent_reduction(b, t, ndigits=None)
    return 0.0 if b == t else None


def compare_samples(metric: str, baseline: Sequence[float], transformed: Sequence[float]) -> MetricComparison:
    sb, st = summarize(baseline), summarize(transformed)
    return MetricComparison(metric, sb, st, *(_reduction(getattr(sb, f), getattr(st, f)) for f in _REDUCED))


def compare(baseline: ResultSet, transformed: ResultSet) -> ComparisonReport:
    """Per-metric statistics on both sides plus percent reductions of median, mean and std."""
    if set(baseline.category_work) != set(transformed.category_work):
        raise ValueError("result sets track different task categories")
    if len(baseline) == 0 or len(transformed) == 0:
        raise ValueError("cannot compare empty result sets")
    return ComparisonReport({m: compare_samples(m, baseline.metric(m), transformed.metric(m)) for m in METRICS})


def summarize_results(rs: ResultSet) -> dict[str, SummaryStatistics]:
    return {m: summarize(rs.metric(m)) for m in METRICS}


def export_results_csv(rs: ResultSet) -> str:
    cols = [rs.totals] + [rs.category_work[c] for c in CATEGORIES]
    table = np.column_stack(cols)
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for i, row in enumerate(table):
        buf.write(f"{i}," + ",".join(f"{v:.6f}" for v in row) + "\n")
    return buf.getvalue()


def read_results_csv(text: str) -> dict[str, np.ndarray]:
    """Parse a CSV written by :func:`export_results_csv` back into metric columns."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ValueError(f"expected header {CSV_HEADER!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(METRICS) + 1:
            raise ValueError(f"line {lineno}: expected {len(METRICS) + 1} fields, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts[1:]])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric field") from None
    if not rows:
        raise ValueError("no data rows")
    data = np.array(rows)
    return {m: data[:, j] for j, m in enumerate(METRICS)}
