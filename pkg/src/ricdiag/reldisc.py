"""Relationship discovery between two observable quantities.

Builds a lookup table y = f(x) from raw (p_x, p_y) samples: cluster the
x axis on an equidistant centroid line, aggregate the y values landing in
each cluster, drop under-populated clusters as unreliable, impute the
holes, and smooth the result with a centered moving average. The output
approximates the hidden functional relationship without assuming a
parametric form.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .cluster import (
    CentroidLine,
    ClusterAssignment,
    EmptyInput,
    kmeans1d_assign,
    make_centroid_line,
)

DEFAULT_K = 30
DEFAULT_AGGREGATE = "average"
DEFAULT_GAMMA = 100
DEFAULT_SMOOTH_WINDOW = 3

AGGREGATES = ("average", "max")
IMPUTATIONS = ("forward_fill",)
KMEANS_MODES = ("frozen", "lloyd")

PLOT_SCATTER_CAP = 10_000


@dataclass(frozen=True)
class RelDiscParams:
    k: int = DEFAULT_K
    aggregate: str = DEFAULT_AGGREGATE
    gamma: int = DEFAULT_GAMMA
    smooth_window: int = DEFAULT_SMOOTH_WINDOW
    imputation: str = "forward_fill"
    kmeans_mode: str = "frozen"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.aggregate not in AGGREGATES:
            raise ValueError(f"aggregate must be one of {AGGREGATES}, got {self.aggregate!r}")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise ValueError("smooth_window must be a positive odd integer")
        if self.imputation not in IMPUTATIONS:
            raise ValueError(f"imputation must be one of {IMPUTATIONS}")
        if self.kmeans_mode not in KMEANS_MODES:
            raise ValueError(f"kmeans_mode must be one of {KMEANS_MODES}")


@dataclass(frozen=True)
class LookupTable:
    """Discovered relationship: one row per cluster, ordered by x.

    y holds the raw per-cluster aggregate and is NaN where the cluster
    had too few samples to trust (count <= gamma). y_imputed fills those
    holes; y_smooth is the moving average of the imputed series.
    """

    x: np.ndarray
    y: np.ndarray
    y_imputed: np.ndarray
    y_smooth: np.ndarray
    counts: np.ndarray
    params: RelDiscParams = field(compare=False)

    def __post_init__(self) -> None:
        arrays = (self.x, self.y, self.y_imputed, self.y_smooth, self.counts)
        if len({a.shape for a in arrays}) != 1 or self.x.ndim != 1:
            raise ValueError("lookup columns must be 1-D and equal length")
        if np.isnan(self.y_imputed).any() or np.isnan(self.y_smooth).any():
            raise ValueError("imputed and smoothed series must be NaN-free")

    @property
    def size(self) -> int:
        return int(self.x.size)

    def lookup(self, x: float) -> float:
        """Smoothed y for the cluster nearest to x."""
        idx = int(np.abs(self.x - x).argmin())
        return float(self.y_smooth[idx])


def aggregate_clusters(
    assignment: ClusterAssignment,
    p_y: np.ndarray,
    k: int,
    aggregate: str = DEFAULT_AGGREGATE,
    gamma: int = DEFAULT_GAMMA,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-cluster aggregate of p_y; NaN where the support is not > gamma."""
    labels = assignment.labels
    y = np.asarray(p_y, dtype=np.float64)
    counts = np.bincount(labels, minlength=k).astype(np.int64)
    out = np.full(k, np.nan)
    for i in range(k):
        if counts[i] > gamma:
            members = y[labels == i]
            out[i] = members.max() if aggregate == "max" else members.mean()
    return out, counts


def impute_forward_fill(values: np.ndarray) -> np.ndarray:
    """Fill NaN holes from the left neighbour; leading holes from the right.

    All-NaN input has no information to propagate and raises.
    """
    vals = np.asarray(values, dtype=np.float64).copy()
    finite = ~np.isnan(vals)
    if not finite.any():
        raise EmptyInput("cannot impute an all-NaN series")
    idx = np.where(finite, np.arange(vals.size), -1)
    idx = np.maximum.accumulate(idx)
    first = int(np.flatnonzero(finite)[0])
    idx[idx < 0] = first
    return vals[idx]


def smooth_moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average, truncated at the edges; window 1 is identity."""
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    vals = np.asarray(values, dtype=np.float64)
    if window == 1:
        return vals.copy()
    half = window // 2
    out = np.empty_like(vals)
    n = vals.size
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        out[i] = vals[lo:hi].mean()
    return out


def discover(
    p_x: np.ndarray,
    p_y: np.ndarray,
    params: RelDiscParams = RelDiscParams(),
) -> LookupTable:
    """Discover y = f(x) from paired samples.

    Samples where either coordinate is NaN are dropped up front. Warns
    when fewer samples than clusters remain (some clusters must then be
    empty) and when every surviving cluster is under-populated, in which
    case the whole table would be guesswork.
    """
    x = np.asarray(p_x, dtype=np.float64).ravel()
    y = np.asarray(p_y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"p_x and p_y must have equal length, got {x.size} and {y.size}")
    keep = ~(np.isnan(x) | np.isnan(y))
    x, y = x[keep], y[keep]
    if x.size == 0:
        raise EmptyInput("no finite (x, y) samples to discover a relationship from")
    if x.size < params.k:
        warnings.warn(
            f"only {x.size} samples for {params.k} clusters; most clusters will be empty",
            RuntimeWarning,
            stacklevel=2,
        )

    start_line = make_centroid_line(x, params.k)
    assignment, line = kmeans1d_assign(x, start_line, mode=params.kmeans_mode)
    k = line.k

    raw, counts = aggregate_clusters(assignment, y, k, params.aggregate, params.gamma)
    if np.isnan(raw).all():
        warnings.warn(
            f"no cluster exceeds gamma={params.gamma} samples; the lookup table is "
            "imputed from nothing and unreliable",
            RuntimeWarning,
            stacklevel=2,
        )
        # Fall back to ignoring gamma so the table stays well-defined.
        raw_unguarded, _ = aggregate_clusters(assignment, y, k, params.aggregate, gamma=0)
        occupied = counts > 0
        imputable = np.where(occupied, raw_unguarded, np.nan)
        imputed = impute_forward_fill(imputable)
    else:
        imputed = impute_forward_fill(raw)

    smoothed = smooth_moving_average(imputed, params.smooth_window)
    return LookupTable(
        x=line.centroids.copy(),
        y=raw,
        y_imputed=imputed,
        y_smooth=smoothed,
        counts=counts,
        params=params,
    )


def write_lookup_csv(path: str | Path, table: LookupTable, imputed: bool = False) -> None:
    """Export the table as x,y,y_smooth,count rows.

    With imputed=False the y column keeps its holes (empty cells) so the
    consumer can tell measured aggregates from filled ones; imputed=True
    writes the gap-free series instead.
    """
    y = table.y_imputed if imputed else table.y
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "y_smooth", "count"])
        for i in range(table.size):
            y_cell = "" if np.isnan(y[i]) else repr(float(y[i]))
            writer.writerow(
                [repr(float(table.x[i])), y_cell, repr(float(table.y_smooth[i])), int(table.counts[i])]
            )


def read_lookup_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Read back an exported table as (x, y, y_smooth, counts)."""
    xs, ys, ss, cs = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "y", "y_smooth", "count"]:
            raise ValueError(f"{path}: expected header x,y,y_smooth,count")
        for row in reader:
            if not row:
                continue
            xs.append(float(row[0]))
            ys.append(float(row[1]) if row[1] else np.nan)
            ss.append(float(row[2]))
            cs.append(int(row[3]))
    return (np.array(xs), np.array(ys), np.array(ss), np.array(cs, dtype=np.int64))


def plot_data(
    p_x: np.ndarray,
    p_y: np.ndarray,
    table: LookupTable,
    scatter_cap: int = PLOT_SCATTER_CAP,
) -> dict:
    """JSON-ready payload: capped raw scatter plus the discovered curve.

    The scatter is down-sampled deterministically (evenly spaced in input
    order) so repeated exports are byte-identical.
    """
    x = np.asarray(p_x, dtype=np.float64).ravel()
    y = np.asarray(p_y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError("p_x and p_y must have equal length")
    keep = ~(np.isnan(x) | np.isnan(y))
    x, y = x[keep], y[keep]
    if x.size > scatter_cap:
        pick = np.linspace(0, x.size - 1, scatter_cap).round().astype(np.int64)
        x, y = x[pick], y[pick]

    def listify(arr: np.ndarray) -> list:
        return [None if np.isnan(v) else float(v) for v in arr]

    return {
        "scatter": {"x": listify(x), "y": listify(y)},
        "lookup": {
            "x": listify(table.x),
            "y": listify(table.y),
            "y_smooth": listify(table.y_smooth),
            "count": [int(c) for c in table.counts],
        },
    }


def write_plot_json(path: str | Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
