"""Unsupervised learners used by the diagnosis engine.

Two primitives, both implemented from scratch on top of the kernel backend:

* density clustering that labels isolated low-density points as anomalies
  (Euclidean neighborhoods, epsilon radius, minimum population), and
* one-dimensional k-means over a deterministic line of equidistant
  centroids spanning the data range, either frozen (single assignment
  pass) or iterated with Lloyd updates.

Everything here is deterministic: input scan order fixes cluster ids and
nearest-centroid ties break toward the lower centroid index.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _backend

NOISE = -1

CENTROID_SPACING_RTOL = 1e-9


class NonFiniteInput(ValueError):
    """Input contains NaN or infinity where finite values are required."""


class EmptyInput(ValueError):
    """Operation requires at least one data point."""


@dataclass(frozen=True)
class DbscanParams:
    """Neighborhood radius and minimum population for a dense region."""

    epsilon: float
    min_pts: int

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.min_pts < 1:
            raise ValueError(f"min_pts must be >= 1, got {self.min_pts}")


@dataclass(frozen=True)
class DbscanResult:
    """Cluster labels (noise = -1) and the derived per-point anomaly flags."""

    labels: np.ndarray
    anomaly_flags: np.ndarray

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max() + 1) if self.labels.size else 0


def dbscan(points: np.ndarray, params: DbscanParams) -> DbscanResult:
    """Density-cluster points; flag noise points as anomalies.

    A core point has at least `min_pts` neighbors (itself included) within
    `epsilon` Euclidean distance. Clusters are the maximal sets reachable
    through core points; points reachable from no core are noise. A border
    point reachable from several clusters goes to the one discovered first.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError(f"points must be 1-D or 2-D, got shape {pts.shape}")
    if pts.shape[0] == 0:
        empty = np.empty(0, dtype=np.int64)
        return DbscanResult(labels=empty, anomaly_flags=empty.astype(np.uint8))
    if not np.isfinite(pts).all():
        raise NonFiniteInput("points contain NaN or infinity")
    labels = _backend.dbscan_labels(
        np.ascontiguousarray(pts), float(params.epsilon), int(params.min_pts)
    )
    return DbscanResult(labels=labels, anomaly_flags=(labels == NOISE).astype(np.uint8))


def minmax_scale(data: np.ndarray) -> np.ndarray:
    """Scale each column to [0, 1]; constant columns map to zeros."""
    arr = np.asarray(data, dtype=np.float64)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[:, None]
    lo = arr.min(axis=0)
    hi = arr.max(axis=0)
    span = hi - lo
    span[span == 0] = 1.0
    out = (arr - lo) / span
    return out[:, 0] if squeeze else out


@dataclass(frozen=True)
class CentroidLine:
    """Strictly increasing 1-D centroids.

    Lines built by make_centroid_line are equidistant and span the data
    range exactly; Lloyd updates preserve the ordering but may drift off
    the equidistant spacing.
    """

    centroids: np.ndarray

    def __post_init__(self) -> None:
        line = np.asarray(self.centroids, dtype=np.float64)
        object.__setattr__(self, "centroids", line)
        if line.ndim != 1 or line.size < 1:
            raise ValueError("centroids must be a non-empty 1-D vector")
        if not np.isfinite(line).all():
            raise NonFiniteInput("centroids contain NaN or infinity")
        if line.size > 1 and (np.diff(line) <= 0).any():
            raise ValueError("centroids must be strictly increasing")

    @property
    def k(self) -> int:
        return self.centroids.size

    def is_equidistant(self, rtol: float = CENTROID_SPACING_RTOL) -> bool:
        if self.centroids.size < 2:
            return True
        gaps = np.diff(self.centroids)
        scale = max(abs(float(self.centroids[0])), abs(float(self.centroids[-1])), 1.0)
        return bool((np.abs(gaps - gaps[0]) <= rtol * scale).all())


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-point index of the nearest centroid."""

    labels: np.ndarray


def make_centroid_line(data: np.ndarray, k: int) -> CentroidLine:
    """k equidistant centroids from min(data) to max(data) inclusive.

    k = 1 places the single centroid at the middle of the range. Constant
    data collapses to a single centroid regardless of k (constant columns
    happen in real telemetry, so this warns instead of failing).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    arr = np.asarray(data, dtype=np.float64)
    finite = arr[np.isfinite(arr)]
    if finite.size == 0:
        raise EmptyInput("no finite values to span")
    lo = float(finite.min())
    hi = float(finite.max())
    if lo == hi:
        if k > 1:
            warnings.warn(
                f"data range is degenerate (all values {lo}); "
                f"collapsing {k} centroids to one",
                RuntimeWarning,
                stacklevel=2,
            )
        return CentroidLine(centroids=np.array([lo]))
    if k == 1:
        return CentroidLine(centroids=np.array([(lo + hi) / 2.0]))
    return CentroidLine(centroids=np.linspace(lo, hi, k))


def kmeans1d_assign(
    data: np.ndarray,
    line: CentroidLine,
    max_iters: int = 100,
    mode: str = "frozen",
) -> tuple[ClusterAssignment, CentroidLine]:
    """Assign 1-D data to centroids; optionally iterate Lloyd updates.

    In "frozen" mode (the default) centroids never move and a single
    nearest-centroid pass is made. In "lloyd" mode assignment and centroid
    update alternate from the same deterministic start until labels stop
    changing or `max_iters` passes run; a cluster that loses all members
    keeps its previous centroid. Each pass costs O(n * k).
    """
    if mode not in ("frozen", "lloyd"):
        raise ValueError(f"mode must be 'frozen' or 'lloyd', got {mode!r}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    arr = np.ascontiguousarray(np.asarray(data, dtype=np.float64).ravel())
    if arr.size == 0:
        raise EmptyInput("cannot assign an empty data vector")
    if not np.isfinite(arr).all():
        raise NonFiniteInput("data contains NaN or infinity")

    centroids = line.centroids
    labels = _backend.assign_nearest(arr, centroids)
    if mode == "frozen":
        return ClusterAssignment(labels=labels), line

    k = centroids.size
    for _ in range(max_iters - 1):
        sums = np.bincount(labels, weights=arr, minlength=k)
        counts = np.bincount(labels, minlength=k)
        centroids = np.where(counts > 0, sums / np.maximum(counts, 1), centroids)
        new_labels = _backend.assign_nearest(arr, np.ascontiguousarray(centroids))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return ClusterAssignment(labels=labels), CentroidLine(centroids=centroids)
