# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: density-scan clustering and nearest-centroid assignment.

Mirrors ricdiag._kernels_py exactly; both backends must produce identical
labels for identical inputs (same scan order, same tie breaks, same float
comparisons). The extension is built with -ffp-contract=off so distance
arithmetic matches numpy's non-fused evaluation.
"""

import numpy as np

UNVISITED = -2
NOISE = -1

cdef long long C_UNVISITED = UNVISITED
cdef long long C_NOISE = NOISE


def dbscan_labels(double[:, ::1] points, double eps, Py_ssize_t min_pts):
    """Label points by density clustering; -1 marks noise.

    Scan order is input order and cluster ids are assigned in discovery
    order, so the result is fully deterministic.
    """
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    labels_arr = np.full(n, UNVISITED, dtype=np.int64)
    cdef long long[::1] labels = labels_arr
    nbr_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] nbr = nbr_arr
    queue_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] queue = queue_arr
    cdef double eps2 = eps * eps
    cdef Py_ssize_t i, j, c, head, tail, count, x
    cdef long long cid = -1

    with nogil:
        for i in range(n):
            if labels[i] != C_UNVISITED:
                continue
            count = _region_query(points, n, d, i, eps2, nbr)
            if count < min_pts:
                labels[i] = C_NOISE
                continue
            cid += 1
            labels[i] = cid
            head = 0
            tail = 0
            for j in range(count):
                x = nbr[j]
                if labels[x] == C_NOISE:
                    # former noise point reached by this cluster: border point
                    labels[x] = cid
                elif labels[x] == C_UNVISITED:
                    labels[x] = cid
                    queue[tail] = x
                    tail += 1
            while head < tail:
                c = queue[head]
                head += 1
                count = _region_query(points, n, d, c, eps2, nbr)
                if count < min_pts:
                    continue
                for j in range(count):
                    x = nbr[j]
                    if labels[x] == C_NOISE:
                        labels[x] = cid
                    elif labels[x] == C_UNVISITED:
                        labels[x] = cid
                        queue[tail] = x
                        tail += 1
    return labels_arr


cdef Py_ssize_t _region_query(double[:, ::1] points, Py_ssize_t n, Py_ssize_t d,
                              Py_ssize_t i, double eps2, long long[::1] out) nogil:
    cdef Py_ssize_t j, k, count = 0
    cdef double dist2, diff
    for j in range(n):
        dist2 = 0.0
        for k in range(d):
            diff = points[j, k] - points[i, k]
            dist2 += diff * diff
        if dist2 <= eps2:
            out[count] = j
            count += 1
    return count


def assign_nearest(double[::1] data, double[::1] centroids):
    """Index of the nearest centroid per data point; ties go to the lower index."""
    cdef Py_ssize_t n = data.shape[0]
    cdef Py_ssize_t k = centroids.shape[0]
    labels_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] labels = labels_arr
    cdef Py_ssize_t i, j, best_j
    cdef double best, dist
    with nogil:
        for i in range(n):
            best = data[i] - centroids[0]
            if best < 0:
                best = -best
            best_j = 0
            for j in range(1, k):
                dist = data[i] - centroids[j]
                if dist < 0:
                    dist = -dist
                if dist < best:
                    best = dist
                    best_j = j
            labels[i] = best_j
    return labels_arr
