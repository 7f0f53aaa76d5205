"""Root cause analysis for a degraded KPI.

The pipeline: flag the KPI's degraded rows against an absolute threshold,
binarize every other column into anomaly flags by running density
clustering on the (column, KPI) pair over an epsilon grid, correlate each
flag column with the KPI flags through the phi coefficient, mask the
correlations with an expert-authored causality filter, and report the
argmax column with its |phi| as the certainty score.

Binary columns (fault and configuration pulses) already are anomaly
flags, so they skip the clustering step and are used as-is.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .cluster import DbscanParams, dbscan, minmax_scale
from .telemetry import DesignMatrix, TimeGrid

DEFAULT_EPSILON_GRID = (0.1, 0.3, 0.5)
DEFAULT_MIN_PTS = 5
DEFAULT_KPI_THRESHOLD = 1.0
DEFAULT_KPI_DIRECTION = "above_is_bad"

THREADS_ENV_VAR = "RIC_DIAG_THREADS"

DIRECTIONS = ("above_is_bad", "below_is_bad")


@dataclass(frozen=True)
class KpiSpec:
    """Which column is the KPI and what counts as degraded."""

    column_index: int
    threshold: float
    direction: str = DEFAULT_KPI_DIRECTION

    def __post_init__(self) -> None:
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")
        if not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")
        if self.column_index < 0:
            raise ValueError("column_index must be >= 0")


@dataclass(frozen=True)
class CausalityFilter:
    """Expert mask over matrix columns: 1 = admissible cause, 0 = excluded.

    The KPI's own column must be masked out; a degradation cannot be its
    own root cause.
    """

    mask: np.ndarray
    kpi_column: int

    def __post_init__(self) -> None:
        mask = np.asarray(self.mask, dtype=np.uint8)
        object.__setattr__(self, "mask", mask)
        if mask.ndim != 1:
            raise ValueError("mask must be 1-D")
        if not np.isin(mask, (0, 1)).all():
            raise ValueError("mask entries must be 0 or 1")
        if not 0 <= self.kpi_column < mask.size:
            raise ValueError(f"kpi_column {self.kpi_column} outside mask of size {mask.size}")
        if mask[self.kpi_column] != 0:
            raise ValueError("mask must exclude the KPI column itself")

    @classmethod
    def allow_all_except_kpi(cls, n_columns: int, kpi_column: int) -> "CausalityFilter":
        mask = np.ones(n_columns, dtype=np.uint8)
        mask[kpi_column] = 0
        return cls(mask=mask, kpi_column=kpi_column)


@dataclass(frozen=True)
class RankingEntry:
    column: str
    index: int
    g: float
    phi: float  # NaN when undefined
    chosen_epsilon: Optional[float]


@dataclass(frozen=True)
class RcaReport:
    """Diagnosis outcome: the top admissible cause plus the full ranking."""

    kpi: str
    threshold: float
    direction: str
    root_cause: Optional[str]
    root_cause_index: Optional[int]
    score: float
    ranking: tuple[RankingEntry, ...]
    anomaly_matrix: np.ndarray
    grid: TimeGrid

    def to_dict(self) -> dict:
        return {
            "kpi": self.kpi,
            "threshold": self.threshold,
            "direction": self.direction,
            "root_cause": self.root_cause,
            "score": self.score,
            "ranking": [
                {
                    "column": e.column,
                    "g": e.g,
                    "phi": None if math.isnan(e.phi) else e.phi,
                    "chosen_epsilon": e.chosen_epsilon,
                }
                for e in self.ranking
            ],
            "window": {
                "start": self.grid.window_start,
                "delta_t": self.grid.delta_t,
                "rows": self.grid.rows,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def phi(a: np.ndarray, b: np.ndarray) -> float:
    """Phi correlation of two binary vectors; NaN where undefined.

    Computed from the 2x2 contingency table; any zero marginal (either
    vector constant) leaves the coefficient undefined.
    """
    x = np.asarray(a).astype(bool)
    y = np.asarray(b).astype(bool)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"phi needs two equal-length vectors, got {x.shape} and {y.shape}")
    n11 = int(np.count_nonzero(x & y))
    n10 = int(np.count_nonzero(x & ~y))
    n01 = int(np.count_nonzero(~x & y))
    n00 = int(np.count_nonzero(~x & ~y))
    denom = (n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00)
    if denom == 0:
        return math.nan
    return (n11 * n00 - n10 * n01) / math.sqrt(denom)


def _abs_phi_or_zero(a: np.ndarray, b: np.ndarray) -> float:
    value = phi(a, b)
    return 0.0 if math.isnan(value) else abs(value)


def binarize_kpi(values: np.ndarray, spec: KpiSpec) -> np.ndarray:
    """Flag rows where the KPI strictly violates its threshold (NaN rows stay 0)."""
    vals = np.asarray(values, dtype=np.float64)
    if spec.direction == "above_is_bad":
        flags = vals > spec.threshold
    else:
        flags = vals < spec.threshold
    flags &= ~np.isnan(vals)
    return flags.astype(np.uint8)


def binarize_column(
    values: np.ndarray,
    kpi_flags: np.ndarray,
    kpi_values: np.ndarray,
    epsilon_grid: Sequence[float] = DEFAULT_EPSILON_GRID,
    min_pts: int = DEFAULT_MIN_PTS,
) -> tuple[np.ndarray, Optional[float]]:
    """Anomaly flags for one column, judged jointly with the KPI column.

    Already binary columns (event pulses) are returned unchanged. Otherwise
    the min-max scaled (column, KPI) pair is density-clustered once per
    epsilon in the grid and the candidate whose flags correlate best with
    the KPI flags (largest |phi|, ties to the smaller epsilon) wins.
    Constant columns carry no anomaly evidence and yield all-zero flags.
    Rows where either value is NaN are left out and flagged 0.
    """
    if not epsilon_grid:
        raise ValueError("epsilon grid must be non-empty")
    vals = np.asarray(values, dtype=np.float64)
    kpi_vals = np.asarray(kpi_values, dtype=np.float64)
    kflags = np.asarray(kpi_flags, dtype=np.uint8)
    if not (vals.shape == kpi_vals.shape == kflags.shape):
        raise ValueError("column, KPI values, and KPI flags must share one length")

    flags = np.zeros(vals.size, dtype=np.uint8)
    finite = np.isfinite(vals) & np.isfinite(kpi_vals)
    if not finite.any():
        return flags, None

    sub = vals[finite]
    if np.isin(sub, (0.0, 1.0)).all():
        flags[finite] = sub.astype(np.uint8)
        return flags, None
    if sub.min() == sub.max():
        return flags, None

    pair = minmax_scale(np.column_stack([sub, kpi_vals[finite]]))
    kflags_sub = kflags[finite]
    best_score = -1.0
    best_eps: Optional[float] = None
    best_flags: Optional[np.ndarray] = None
    for eps in sorted(epsilon_grid):
        result = dbscan(pair, DbscanParams(epsilon=float(eps), min_pts=min_pts))
        score = _abs_phi_or_zero(result.anomaly_flags, kflags_sub)
        if score > best_score:
            best_score = score
            best_eps = float(eps)
            best_flags = result.anomaly_flags
    assert best_flags is not None
    flags[finite] = best_flags
    return flags, best_eps


def _resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV_VAR, "").strip()
        if not raw:
            return 1
        try:
            threads = int(raw)
        except ValueError:
            warnings.warn(
                f"ignoring non-integer {THREADS_ENV_VAR}={raw!r}", RuntimeWarning, stacklevel=2
            )
            return 1
    if threads == 0:
        return os.cpu_count() or 1
    return max(1, threads)


def diagnose(
    matrix: DesignMatrix,
    spec: KpiSpec,
    causality: CausalityFilter,
    epsilon_grid: Sequence[float] = DEFAULT_EPSILON_GRID,
    min_pts: int = DEFAULT_MIN_PTS,
    threads: Optional[int] = None,
) -> RcaReport:
    """Full diagnosis: binarize, correlate, filter, and pick the top cause.

    Rows where the KPI is NaN are excluded pairwise from every phi
    computation (missing telemetry must not manufacture correlation).
    Returns a report with root_cause None when no admissible column
    correlates at all.
    """
    m, n = matrix.data.shape
    v = spec.column_index
    if not 0 <= v < n:
        raise ValueError(f"KPI column index {v} outside matrix with {n} columns")
    if causality.mask.size != n:
        raise ValueError(
            f"causality mask has {causality.mask.size} entries, matrix has {n} columns"
        )
    if causality.kpi_column != v:
        raise ValueError("causality filter was built for a different KPI column")

    kpi_values = matrix.data[:, v]
    kpi_flags = binarize_kpi(kpi_values, spec)
    kpi_finite = np.isfinite(kpi_values)

    def binarize(i: int) -> tuple[np.ndarray, Optional[float]]:
        if i == v:
            return kpi_flags, None
        return binarize_column(matrix.data[:, i], kpi_flags, kpi_values, epsilon_grid, min_pts)

    n_threads = _resolve_threads(threads)
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(binarize, range(n)))
    else:
        results = [binarize(i) for i in range(n)]

    anomaly = np.column_stack([flags for flags, _ in results]).astype(np.uint8)
    chosen_eps = [eps for _, eps in results]

    phis = np.full(n, math.nan)
    r = np.zeros(n)
    for i in range(n):
        if i == v:
            continue
        value = phi(anomaly[kpi_finite, i], kpi_flags[kpi_finite])
        phis[i] = value
        r[i] = 0.0 if math.isnan(value) else abs(value)
    g = causality.mask.astype(np.float64) * r

    order = sorted(range(n), key=lambda i: (-g[i], i))
    ranking = tuple(
        RankingEntry(
            column=matrix.names[i],
            index=i,
            g=float(g[i]),
            phi=float(phis[i]),
            chosen_epsilon=chosen_eps[i],
        )
        for i in order
    )

    i_star = int(np.argmax(g))
    if g[i_star] == 0.0:
        root_cause = None
        root_index = None
        score = 0.0
    else:
        root_cause = matrix.names[i_star]
        root_index = i_star
        score = float(r[i_star])

    return RcaReport(
        kpi=matrix.names[v],
        threshold=spec.threshold,
        direction=spec.direction,
        root_cause=root_cause,
        root_cause_index=root_index,
        score=score,
        ranking=ranking,
        anomaly_matrix=anomaly,
        grid=matrix.grid,
    )


def accuracy(predictions: Sequence[Optional[int]], truths: Sequence[int]) -> float:
    """Fraction of diagnostic runs whose predicted cause matches the truth."""
    if len(predictions) == 0 or len(truths) == 0:
        raise ValueError("accuracy needs at least one diagnostic run")
    if len(predictions) != len(truths):
        raise ValueError(
            f"got {len(predictions)} predictions but {len(truths)} ground truths"
        )
    hits = sum(1 for p, t in zip(predictions, truths) if p == t)
    return hits / len(predictions)


def read_filter_csv(path: str | Path, matrix: DesignMatrix, kpi_name: str) -> CausalityFilter:
    """Load the expert causality filter for one KPI.

    Format: kpi_name,column_name,allowed rows with allowed in {0,1}.
    Columns not listed stay allowed (the expert narrows, never widens).
    """
    v = matrix.column_index(kpi_name)
    mask = np.ones(matrix.n_columns, dtype=np.uint8)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["kpi_name", "column_name", "allowed"]:
            raise ValueError(f"{path} line 1: expected header kpi_name,column_name,allowed")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path} line {line_no}: expected 3 fields, got {len(row)}")
            if row[0].strip() != kpi_name:
                continue
            column = row[1].strip()
            if row[2].strip() not in ("0", "1"):
                raise ValueError(f"{path} line {line_no}: allowed must be 0 or 1, got {row[2]!r}")
            try:
                idx = matrix.column_index(column)
            except KeyError:
                warnings.warn(
                    f"{path} line {line_no}: unknown column {column!r} ignored",
                    RuntimeWarning,
                    stacklevel=2,
                )
                continue
            mask[idx] = int(row[2])
    mask[v] = 0
    return CausalityFilter(mask=mask, kpi_column=v)


def write_filter_csv(
    path: str | Path, kpi_name: str, entries: Sequence[tuple[str, int]]
) -> None:
    """Write a causality filter CSV (one KPI, explicit allowed flags)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kpi_name", "column_name", "allowed"])
        for column, allowed in entries:
            writer.writerow([kpi_name, column, int(allowed)])
