# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel implementations.

Semantics are specified by the pure-numpy twin in `_kernels_py`; the two
backends must agree bit-for-bit (distance sums are 3-term and accumulate in
the same order).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef inline double _d2(const double* a, const double* b) nogil:
    cdef double dx = a[0] - b[0]
    cdef double dy = a[1] - b[1]
    cdef double dz = a[2] - b[2]
    return (dx * dx + dy * dy) + dz * dz


cdef inline bint _lex_less(const double* a, const double* b) nogil:
    if a[0] != b[0]:
        return a[0] < b[0]
    if a[1] != b[1]:
        return a[1] < b[1]
    return a[2] < b[2]


def fps_greedy(cnp.ndarray[cnp.float64_t, ndim=2] coords, int k, long first):
    cdef Py_ssize_t n = coords.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] selected = np.empty(k, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] min_d2 = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(coords)
    cdef double[::1] md = min_d2
    cdef Py_ssize_t i, j, best
    cdef double d, best_val
    cdef long last = first

    selected[0] = first
    for j in range(n):
        md[j] = _d2(&c[j, 0], &c[last, 0])
    for i in range(1, k):
        best = 0
        best_val = md[0]
        for j in range(1, n):
            d = md[j]
            if d > best_val or (d == best_val and _lex_less(&c[j, 0], &c[best, 0])):
                best = j
                best_val = d
        selected[i] = best
        last = best
        for j in range(n):
            d = _d2(&c[j, 0], &c[last, 0])
            if d < md[j]:
                md[j] = d
    return selected


def ball_query(cnp.ndarray[cnp.float64_t, ndim=2] centers,
               cnp.ndarray[cnp.float64_t, ndim=2] coords,
               double radius, int nsample):
    cdef Py_ssize_t k = centers.shape[0]
    cdef Py_ssize_t n = coords.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(k * nsample, dtype=np.int64)
    cdef long[::1] o = out
    cdef double[:, ::1] ce = np.ascontiguousarray(centers)
    cdef double[:, ::1] co = np.ascontiguousarray(coords)
    cdef double r2 = radius * radius
    cdef Py_ssize_t i, j, cnt, nearest
    cdef double d, nearest_d2

    for i in range(k):
        cnt = 0
        nearest = 0
        nearest_d2 = _d2(&ce[i, 0], &co[0, 0])
        for j in range(n):
            d = _d2(&ce[i, 0], &co[j, 0])
            if d < nearest_d2:
                nearest_d2 = d
                nearest = j
            if d <= r2 and cnt < nsample:
                o[i * nsample + cnt] = j
                cnt += 1
        if cnt == 0:
            for j in range(nsample):
                o[i * nsample + j] = nearest
        else:
            for j in range(cnt, nsample):
                o[i * nsample + j] = o[i * nsample]
    return out.reshape(k, nsample)


def ball_query_nearest(cnp.ndarray[cnp.float64_t, ndim=2] centers,
                       cnp.ndarray[cnp.float64_t, ndim=2] coords,
                       double radius, int nsample):
    cdef Py_ssize_t k = centers.shape[0]
    cdef Py_ssize_t n = coords.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(k * nsample, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hit_buf = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] hd_buf = np.empty(n, dtype=np.float64)
    cdef long[::1] o = out
    cdef long[::1] hits = hit_buf
    cdef double[::1] hd = hd_buf
    cdef double[:, ::1] ce = np.ascontiguousarray(centers)
    cdef double[:, ::1] co = np.ascontiguousarray(coords)
    cdef double r2 = radius * radius
    cdef Py_ssize_t i, j, m, cnt, take, best, nearest
    cdef long tmp_i
    cdef double d, tmp_d, nearest_d2

    for i in range(k):
        cnt = 0
        nearest = 0
        nearest_d2 = _d2(&ce[i, 0], &co[0, 0])
        for j in range(n):
            d = _d2(&ce[i, 0], &co[j, 0])
            if d < nearest_d2:
                nearest_d2 = d
                nearest = j
            if d <= r2:
                hits[cnt] = j
                hd[cnt] = d
                cnt += 1
        if cnt == 0:
            for j in range(nsample):
                o[i * nsample + j] = nearest
            continue
        take = nsample if cnt > nsample else cnt
        # partial selection sort by (distance, lex coords)
        for j in range(take):
            best = j
            for m in range(j + 1, cnt):
                if hd[m] < hd[best] or (hd[m] == hd[best]
                                        and _lex_less(&co[hits[m], 0], &co[hits[best], 0])):
                    best = m
            if best != j:
                tmp_i = hits[j]; hits[j] = hits[best]; hits[best] = tmp_i
                tmp_d = hd[j]; hd[j] = hd[best]; hd[best] = tmp_d
            o[i * nsample + j] = hits[j]
        for j in range(take, nsample):
            o[i * nsample + j] = hits[0]
    return out.reshape(k, nsample)


def nn_dists(cnp.ndarray[cnp.float64_t, ndim=2] query,
             cnp.ndarray[cnp.float64_t, ndim=2] ref):
    cdef Py_ssize_t nq = query.shape[0]
    cdef Py_ssize_t nr = ref.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(nq, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[:, ::1] q = np.ascontiguousarray(query)
    cdef double[:, ::1] r = np.ascontiguousarray(ref)
    cdef Py_ssize_t i, j
    cdef double d, best

    for i in range(nq):
        best = _d2(&q[i, 0], &r[0, 0])
        for j in range(1, nr):
            d = _d2(&q[i, 0], &r[j, 0])
            if d < best:
                best = d
        o[i] = sqrt(best)
    return out


def max_pairwise_dist(cnp.ndarray[cnp.float64_t, ndim=2] points):
    cdef Py_ssize_t n = points.shape[0]
    cdef double[:, ::1] p = np.ascontiguousarray(points)
    cdef Py_ssize_t i, j
    cdef double d, best = 0.0

    for i in range(n):
        for j in range(i + 1, n):
            d = _d2(&p[i, 0], &p[j, 0])
            if d > best:
                best = d
    return sqrt(best)
