"""Shared test oracles, implemented independently of the package internals.

The clustering oracle builds the neighbor graph explicitly and takes
density-connected components; border points go to the earliest-formed
adjacent cluster, matching the production scan-order semantics. Keeping
these here (not in the package) means the implementations under test and
the references can only agree by computing the same thing.
"""

from __future__ import annotations

import math

import numpy as np
import pytest


def dbscan_oracle(points: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Brute-force density clustering: adjacency matrix + BFS components."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    n = pts.shape[0]
    diff = pts[:, None, :] - pts[None, :, :]
    dist2 = (diff * diff).sum(axis=-1)
    adjacent = dist2 <= eps * eps  # self included on the diagonal
    core = adjacent.sum(axis=1) >= min_pts

    labels = np.full(n, -1, dtype=np.int64)
    cid = -1
    for i in range(n):
        if not core[i] or labels[i] != -1:
            continue
        cid += 1
        stack = [i]
        labels[i] = cid
        while stack:
            c = stack.pop()
            for j in np.flatnonzero(adjacent[c]):
                if not core[j] or labels[j] != -1:
                    continue
                labels[j] = cid
                stack.append(j)
    # Border points: non-core adjacent to a core; first-formed cluster wins.
    for i in range(n):
        if core[i]:
            continue
        neighbor_cores = [j for j in np.flatnonzero(adjacent[i]) if core[j]]
        if neighbor_cores:
            labels[i] = min(labels[j] for j in neighbor_cores)
    return labels


def nearest_oracle(data: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Vectorized brute-force nearest centroid; argmin keeps the lowest index."""
    d = np.asarray(data, dtype=np.float64).reshape(-1, 1)
    c = np.asarray(centroids, dtype=np.float64).reshape(1, -1)
    return np.abs(d - c).argmin(axis=1).astype(np.int64)


def nearest_oracle_slow(data, centroids) -> list[int]:
    """Same scan written as a plain loop, for cross-checking the vectorized form."""
    out = []
    for v in data:
        best, best_j = abs(v - centroids[0]), 0
        for j in range(1, len(centroids)):
            dist = abs(v - centroids[j])
            if dist < best:
                best, best_j = dist, j
        out.append(best_j)
    return out


def phi_oracle(a, b) -> float:
    """Phi from the 2x2 contingency table, tallied pairwise."""
    n11 = n10 = n01 = n00 = 0
    assert len(a) == len(b)
    for x, y in zip(a, b):
        if x and y:
            n11 += 1
        elif x and not y:
            n10 += 1
        elif y:
            n01 += 1
        else:
            n00 += 1
    denom = (n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00)
    if denom == 0:
        return math.nan
    return (n11 * n00 - n10 * n01) / math.sqrt(denom)


@pytest.fixture
def verdict(capsys):
    """Print one visible PASS/FAIL line per acceptance criterion, then assert."""

    def _verdict(cid: str, name: str, ok: bool, detail: str = "") -> None:
        status = "PASS" if ok else "FAIL"
        tail = f" ({detail})" if detail else ""
        with capsys.disabled():
            print(f"[acceptance] {cid} {name}: {status}{tail}")
        assert ok, f"{cid} {name}: {status}{tail}"

    return _verdict
