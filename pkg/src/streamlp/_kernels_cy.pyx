# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot streaming kernels.

Mirrors ``_kernels_py`` exactly: same outputs, same tie-breaking. All dot
products run through one accumulation routine so streamed and rebuilt rows
agree bit for bit, and results are reproducible across runs of the same
build.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"


cdef inline double _dot(const double* a, const double* b, Py_ssize_t d) nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t j
    for j in range(d):
        acc += a[j] * b[j]
    return acc


cdef Py_ssize_t _select_top_k(
    const double* sims, Py_ssize_t n, Py_ssize_t k, double* best, cnp.int64_t* idx
) nogil:
    """Fill best/idx (capacity k) with the top-k of sims; ties to lower index.

    Returns the number of entries filled. Insertion keeps the list sorted by
    (similarity desc, index asc); an equal-similarity candidate never
    displaces an earlier index.
    """
    cdef Py_ssize_t m = 0
    cdef Py_ssize_t i, p
    cdef double s
    if k > n:
        k = n
    if k <= 0:
        return 0
    for i in range(n):
        s = sims[i]
        if m == k and s <= best[m - 1]:
            continue
        p = m if m < k else k - 1
        while p > 0 and best[p - 1] < s:
            if p < k:
                best[p] = best[p - 1]
                idx[p] = idx[p - 1]
            p -= 1
        if p < k:
            best[p] = s
            idx[p] = i
        if m < k:
            m += 1
    return m


cdef void _replace_rows(
    double[:, ::1] weights,
    cnp.int64_t[:, ::1] targets,
    cnp.int64_t[::1] counts,
    const double* sims,
    Py_ssize_t n,
    Py_ssize_t new_id,
    Py_ssize_t capacity,
) nogil:
    cdef Py_ssize_t r, c, slot
    cdef cnp.int64_t m
    cdef double s, clamped, min_w
    cdef cnp.int64_t min_t
    for r in range(n):
        s = sims[r]
        clamped = s if s > 0.0 else 0.0
        m = counts[r]
        if m < capacity:
            weights[r, m] = clamped
            targets[r, m] = new_id
            counts[r] = m + 1
            continue
        slot = 0
        min_w = weights[r, 0]
        min_t = targets[r, 0]
        for c in range(1, capacity):
            if weights[r, c] < min_w or (weights[r, c] == min_w and targets[r, c] < min_t):
                slot = c
                min_w = weights[r, c]
                min_t = targets[r, c]
        if s > min_w:
            weights[r, slot] = clamped
            targets[r, slot] = new_id


def dot_scan(double[:, ::1] mat, double[::1] vec):
    """Row-wise dot products of an (n, d) matrix against one d-vector."""
    cdef Py_ssize_t n = mat.shape[0]
    cdef Py_ssize_t d = mat.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = _dot(&mat[i, 0], &vec[0], d)
    return out_arr


def top_k(double[::1] sims, Py_ssize_t k):
    """Indices of the k largest similarities; ties go to the lower index."""
    cdef Py_ssize_t n = sims.shape[0]
    if k <= 0 or n == 0:
        return np.empty(0, dtype=np.int64)
    if k > n:
        k = n
    best_arr = np.empty(k, dtype=np.float64)
    idx_arr = np.empty(k, dtype=np.int64)
    cdef double[::1] best = best_arr
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef Py_ssize_t m
    with nogil:
        m = _select_top_k(&sims[0], n, k, &best[0], &idx[0])
    return idx_arr[:m]


def replace_weakest(
    double[:, ::1] weights,
    cnp.int64_t[:, ::1] targets,
    cnp.int64_t[::1] counts,
    double[::1] sims,
    Py_ssize_t new_id,
    Py_ssize_t capacity,
):
    """Bounded-degree reverse update; see the numpy twin for the contract."""
    cdef Py_ssize_t n = counts.shape[0]
    if n == 0 or capacity <= 0:
        return
    with nogil:
        _replace_rows(weights, targets, counts, &sims[0], n, new_id, capacity)


def scan_select_store(
    double[:, ::1] cache,
    double[::1] vec,
    Py_ssize_t k,
    double[:, ::1] weights,
    cnp.int64_t[:, ::1] targets,
    cnp.int64_t[::1] counts,
    Py_ssize_t row,
    Py_ssize_t base_id,
):
    """Scan one block, keep the top-k, store them as row ``row``'s edges."""
    cdef Py_ssize_t n = cache.shape[0]
    cdef Py_ssize_t d = cache.shape[1]
    if k <= 0 or n == 0:
        counts[row] = 0
        return
    sims_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] sims = sims_arr
    cdef Py_ssize_t kk = k if k < n else n
    best_arr = np.empty(kk, dtype=np.float64)
    idx_arr = np.empty(kk, dtype=np.int64)
    cdef double[::1] best = best_arr
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef Py_ssize_t i, m
    with nogil:
        for i in range(n):
            sims[i] = _dot(&cache[i, 0], &vec[0], d)
        m = _select_top_k(&sims[0], n, kk, &best[0], &idx[0])
        for i in range(m):
            weights[row, i] = best[i] if best[i] > 0.0 else 0.0
            targets[row, i] = base_id + idx[i]
        counts[row] = m


def expand_test_block(
    double[:, ::1] cache,
    double[:, ::1] raw,
    double[::1] vec,
    double[::1] probe,
    double[:, ::1] weights,
    cnp.int64_t[:, ::1] targets,
    cnp.int64_t[::1] counts,
    Py_ssize_t row,
    Py_ssize_t base_id,
    Py_ssize_t k,
):
    """Fused test-block update; see the numpy twin for the contract."""
    scan_select_store(cache, vec, k, weights, targets, counts, row, base_id)
    cdef Py_ssize_t n = raw.shape[0]
    cdef Py_ssize_t d = raw.shape[1]
    if n == 0 or k <= 0:
        return
    rev_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] rev = rev_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            rev[i] = _dot(&raw[i, 0], &probe[0], d)
        _replace_rows(weights[:row], targets[:row], counts[:row], &rev[0], row, base_id + row, k)
