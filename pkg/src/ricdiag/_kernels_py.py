"""Pure-numpy fallback for the compiled kernels.

Must stay label-for-label identical to ricdiag._kernels: same scan order,
same cluster id assignment, same tie breaks, and float comparisons built
from the same elementary operations.
"""

from __future__ import annotations

import numpy as np

UNVISITED = -2
NOISE = -1


def dbscan_labels(points: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Label points by density clustering; -1 marks noise."""
    n = points.shape[0]
    labels = np.full(n, UNVISITED, dtype=np.int64)
    eps2 = eps * eps
    cid = -1

    def region(i: int) -> np.ndarray:
        diff = points - points[i]
        dist2 = (diff * diff).sum(axis=1)
        return np.flatnonzero(dist2 <= eps2)

    for i in range(n):
        if labels[i] != UNVISITED:
            continue
        nbr = region(i)
        if nbr.size < min_pts:
            labels[i] = NOISE
            continue
        cid += 1
        labels[i] = cid
        queue = []
        former_noise = labels[nbr] == NOISE
        unvisited = labels[nbr] == UNVISITED
        labels[nbr[former_noise]] = cid
        fresh = nbr[unvisited]
        labels[fresh] = cid
        queue.extend(fresh.tolist())
        head = 0
        while head < len(queue):
            c = queue[head]
            head += 1
            nbr = region(c)
            if nbr.size < min_pts:
                continue
            former_noise = labels[nbr] == NOISE
            unvisited = labels[nbr] == UNVISITED
            labels[nbr[former_noise]] = cid
            fresh = nbr[unvisited]
            labels[fresh] = cid
            queue.extend(fresh.tolist())
    return labels


def assign_nearest(data: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Index of the nearest centroid per data point; ties go to the lower index."""
    dist = np.abs(data[:, None] - centroids[None, :])
    return dist.argmin(axis=1).astype(np.int64)
