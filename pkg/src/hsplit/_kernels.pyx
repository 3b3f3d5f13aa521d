# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled geometry kernels.

Must stay call-compatible with ``_kernels_py``; the test-suite compares the
two backends on random inputs.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, asinh, atanh, tanh, fabs

cnp.import_array()


cdef inline double _dot(const double[::1] a, const double[::1] b) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


cpdef double euclid_dist(const double[::1] a, const double[::1] b):
    cdef Py_ssize_t i
    cdef double s = 0.0, t
    for i in range(a.shape[0]):
        t = a[i] - b[i]
        s += t * t
    return sqrt(s)


cpdef double poincare_dist(const double[::1] a, const double[::1] b):
    cdef Py_ssize_t i
    cdef double diff = 0.0, t
    cdef double na = _dot(a, a), nb = _dot(b, b)
    for i in range(a.shape[0]):
        t = a[i] - b[i]
        diff += t * t
    if diff == 0.0:
        return 0.0
    return 2.0 * asinh(sqrt(diff / ((1.0 - na) * (1.0 - nb))))


cpdef cnp.ndarray mobius_add(const double[::1] a, const double[::1] b):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double ab = _dot(a, b), na = _dot(a, a), nb = _dot(b, b)
    cdef double ca = 1.0 + 2.0 * ab + nb
    cdef double cb = 1.0 - na
    cdef double den = 1.0 + 2.0 * ab + na * nb
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    for i in range(n):
        out[i] = (ca * a[i] + cb * b[i]) / den
    return out


cpdef cnp.ndarray poincare_geodesic(const double[::1] a, const double[::1] b, double lam):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] neg = np.empty(n)
    for i in range(n):
        neg[i] = -a[i]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = mobius_add(neg, b)
    cdef double nw = sqrt(_dot(w, w))
    if nw == 0.0:
        return np.array(a, dtype=np.float64)
    cdef double r = tanh(lam * atanh(nw)) / nw
    for i in range(n):
        w[i] *= r
    return mobius_add(a, w)


cpdef cnp.ndarray pairwise_sq_euclid(const double[:, ::1] A, const double[:, ::1] B):
    cdef Py_ssize_t i, j, k, m = A.shape[0], n = B.shape[0], d = A.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((m, n))
    cdef double s, t
    for i in range(m):
        for j in range(n):
            s = 0.0
            for k in range(d):
                t = A[i, k] - B[j, k]
                s += t * t
            out[i, j] = s
    return out


cpdef cnp.ndarray pairwise_sq_poincare(const double[:, ::1] A, const double[:, ::1] B):
    cdef Py_ssize_t i, j, k, m = A.shape[0], n = B.shape[0], d = A.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((m, n))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ca = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cb = np.empty(n)
    cdef double s, t, r
    for i in range(m):
        ca[i] = 1.0 - _dot(A[i], A[i])
    for j in range(n):
        cb[j] = 1.0 - _dot(B[j], B[j])
    for i in range(m):
        for j in range(n):
            s = 0.0
            for k in range(d):
                t = A[i, k] - B[j, k]
                s += t * t
            if s == 0.0:
                out[i, j] = 0.0
            else:
                r = 2.0 * asinh(sqrt(s / (ca[i] * cb[j])))
                out[i, j] = r * r
    return out


cdef inline double _tree_dist(long u1, long v1, double s1, double l1,
                              long u2, long v2, double s2, double l2,
                              const double[:, ::1] D) noexcept nogil:
    cdef double best, c
    if u1 == u2 and v1 == v2 and u1 != v1:
        return fabs(s1 - s2)
    best = s1 + D[u1, u2] + s2
    c = s1 + D[u1, v2] + (l2 - s2)
    if c < best:
        best = c
    c = (l1 - s1) + D[v1, u2] + s2
    if c < best:
        best = c
    c = (l1 - s1) + D[v1, v2] + (l2 - s2)
    if c < best:
        best = c
    return best


cpdef double tree_dist(long u1, long v1, double s1, double l1,
                       long u2, long v2, double s2, double l2,
                       const double[:, ::1] D):
    return _tree_dist(u1, v1, s1, l1, u2, v2, s2, l2, D)


cpdef cnp.ndarray pairwise_sq_tree(const long[::1] u1, const long[::1] v1,
                                   const double[::1] s1, const double[::1] l1,
                                   const long[::1] u2, const long[::1] v2,
                                   const double[::1] s2, const double[::1] l2,
                                   const double[:, ::1] D):
    cdef Py_ssize_t i, j, m = u1.shape[0], n = u2.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((m, n))
    cdef double t
    for i in range(m):
        for j in range(n):
            t = _tree_dist(u1[i], v1[i], s1[i], l1[i], u2[j], v2[j], s2[j], l2[j], D)
            out[i, j] = t * t
    return out
