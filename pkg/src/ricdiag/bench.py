"""Runtime measurement for the diagnosis pipelines and the compute kernels.

Times are wall-clock, min-of-repeats, with an adaptive inner loop so that
sub-millisecond calls are still measured against a sane floor. The fitted
slopes and exponents are reported as measured; nothing here asserts a
complexity class, that is the test suite's job.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .rca import CausalityFilter, KpiSpec, diagnose
from .reldisc import RelDiscParams, discover
from .synth import generate_relationship
from .telemetry import PM, DesignMatrix, TimeGrid

RCA_COLUMN_SIZES = (50, 100, 200, 400)
RELDISC_SIZES = (1_000, 10_000, 100_000)
BACKEND_SIZES = (200, 400, 800, 1600)

MIN_TIMED_INTERVAL = 0.01  # seconds; inner loop grows until one rep takes this long


@dataclass(frozen=True)
class BenchPoint:
    size: int
    seconds: float  # best per-call time across repeats
    repeats: int
    loops: int  # inner calls per timed repeat
    spread: float  # (worst - best) / best across repeats


def _run_once(fn: Callable[[], None], loops: int) -> float:
    start = time.perf_counter()
    for _ in range(loops):
        fn()
    return time.perf_counter() - start


def time_callable(
    fn: Callable[[], None], repeats: int = 3, min_time: float = MIN_TIMED_INTERVAL
) -> tuple[float, int, float]:
    """(best per-call seconds, loops used, spread) for a zero-arg callable."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    fn()  # warm-up: imports, allocator, branch caches
    loops = 1
    elapsed = _run_once(fn, loops)
    while elapsed < min_time:
        loops *= 2
        elapsed = _run_once(fn, loops)
    samples = [elapsed / loops]
    for _ in range(repeats - 1):
        samples.append(_run_once(fn, loops) / loops)
    best = min(samples)
    spread = (max(samples) - best) / best if best > 0 else 0.0
    return best, loops, spread


def scaling_matrix(n_columns: int, rows: int = 120, seed: int = 0) -> DesignMatrix:
    """Synthetic all-PM matrix for timing: one spiky KPI plus noise counters."""
    if n_columns < 2:
        raise ValueError("need the KPI plus at least one candidate column")
    rng = np.random.default_rng(seed)
    kpi = 0.4 + rng.normal(0.0, 0.1, rows)
    kpi[rng.integers(0, rows, size=max(3, rows // 20))] += 2.0
    columns = [kpi]
    for _ in range(n_columns - 1):
        columns.append(rng.normal(rng.uniform(10.0, 90.0), rng.uniform(1.0, 5.0), rows))
    grid = TimeGrid(window_start=0, delta_t=60_000, window=rows * 60_000)
    names = ("kpi_drop_rate", *(f"pm_c{i:04d}" for i in range(n_columns - 1)))
    return DesignMatrix(
        grid=grid, names=names, kinds=(PM,) * n_columns, data=np.column_stack(columns)
    )


def run_rca_scaling(
    sizes: Sequence[int] = RCA_COLUMN_SIZES,
    rows: int = 120,
    seed: int = 0,
    repeats: int = 3,
) -> list[BenchPoint]:
    """Diagnosis wall time as the column count grows at fixed row count."""
    points = []
    for n in sizes:
        matrix = scaling_matrix(n, rows=rows, seed=seed + n)
        spec = KpiSpec(column_index=0, threshold=1.0, direction="above_is_bad")
        causality = CausalityFilter.allow_all_except_kpi(n, 0)
        best, loops, spread = time_callable(
            lambda: diagnose(matrix, spec, causality), repeats=repeats
        )
        points.append(BenchPoint(size=n, seconds=best, repeats=repeats, loops=loops, spread=spread))
    return points


def run_reldisc_scaling(
    sizes: Sequence[int] = RELDISC_SIZES,
    k: int = 30,
    seed: int = 0,
    repeats: int = 3,
) -> list[BenchPoint]:
    """Relationship discovery wall time as the sample count grows at fixed k."""
    params = RelDiscParams(k=k, gamma=0)
    points = []
    for m in sizes:
        x, y = generate_relationship("shannon", m, seed)
        best, loops, spread = time_callable(lambda: discover(x, y, params), repeats=repeats)
        points.append(BenchPoint(size=m, seconds=best, repeats=repeats, loops=loops, spread=spread))
    return points


def run_backend_compare(
    sizes: Sequence[int] = BACKEND_SIZES,
    seed: int = 0,
    repeats: int = 3,
) -> list[tuple[str, BenchPoint]]:
    """Density-clustering kernel time per backend, same inputs for both."""
    rows = []
    for name in _backend.available_backends():
        kernel = _backend.get_backend(name)
        for n in sizes:
            rng = np.random.default_rng(seed)
            half = n // 2
            blob_a = rng.normal((0.3, 0.3), 0.05, (half, 2))
            blob_b = rng.normal((0.7, 0.7), 0.05, (n - half, 2))
            pts = np.ascontiguousarray(np.vstack([blob_a, blob_b]))
            best, loops, spread = time_callable(
                lambda: kernel.dbscan_labels(pts, 0.1, 5), repeats=repeats
            )
            rows.append(
                (name, BenchPoint(size=n, seconds=best, repeats=repeats, loops=loops, spread=spread))
            )
    return rows


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """(slope, intercept, r_squared) of a least-squares line."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.size != y.size or x.size < 2:
        raise ValueError("need at least two (x, y) points")
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    ss_res = float(((y - predicted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def loglog_exponent(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Fitted growth exponent: slope of log(y) against log(x)."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if (x <= 0).any() or (y <= 0).any():
        raise ValueError("log-log fit needs strictly positive values")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def doubling_ratios(points: Sequence[BenchPoint]) -> list[float]:
    """Consecutive time ratios; near 2 indicates linear scaling on doubled sizes."""
    return [
        points[i + 1].seconds / points[i].seconds
        for i in range(len(points) - 1)
        if points[i].seconds > 0
    ]


def write_timings_csv(path: str | Path, points: Sequence[BenchPoint]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["size", "seconds"])
        for p in points:
            writer.writerow([p.size, repr(p.seconds)])


def write_backend_csv(path: str | Path, rows: Sequence[tuple[str, BenchPoint]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["backend", "size", "seconds"])
        for name, p in rows:
            writer.writerow([name, p.size, repr(p.seconds)])


def summarize(points: Sequence[BenchPoint]) -> str:
    """Human-readable fit summary: linear R^2 and the measured exponent."""
    sizes = [p.size for p in points]
    times = [p.seconds for p in points]
    lines = [f"  size={p.size:>8d}  t={p.seconds:.6f}s  (x{p.loops} loops)" for p in points]
    if len(points) >= 2:
        slope, _, r2 = linear_fit(sizes, times)
        exponent = loglog_exponent(sizes, times)
        lines.append(f"  linear fit: slope={slope:.3e} s/unit, R^2={r2:.4f}")
        lines.append(f"  measured log-log exponent: {exponent:.3f}")
    return "\n".join(lines)
