# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled kernels; same contracts and arithmetic order as ``_kernels_py``."""

import numpy as np

from libc.math cimport floor, INFINITY
from libcpp.algorithm cimport nth_element
from libcpp.utility cimport pair
from libcpp.vector cimport vector

BACKEND = "cython"


cdef inline double _ell(double t, double a) noexcept nogil:
    if t > 0.5:
        t = 1.0 - t
    if a >= 0.5:
        return 2.0 * (1.0 - a) * t
    if a >= t and a > 0.0:
        return t / (2.0 * a)
    if a < t:
        return 1.0 - a / (2.0 * t)
    return 0.0


def ell_array(t, a):
    tb, ab = np.broadcast_arrays(np.asarray(t, dtype=np.float64), np.asarray(a, dtype=np.float64))
    shape = tb.shape
    cdef double[::1] tv = np.ascontiguousarray(tb).ravel()
    cdef double[::1] av = np.ascontiguousarray(ab).ravel()
    out = np.empty(tv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(tv.shape[0]):
            ov[i] = _ell(tv[i], av[i])
    return out.reshape(shape)


def knn_mean(train_x, train_y, queries, Py_ssize_t k):
    cdef double[:, ::1] X = np.ascontiguousarray(train_x, dtype=np.float64)
    cdef double[:, ::1] Q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef long long[::1] y = np.ascontiguousarray(train_y, dtype=np.int64)
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], nq = Q.shape[0]
    out = np.empty(nq, dtype=np.float64)
    cdef double[::1] ov = out
    cdef vector[pair[double, Py_ssize_t]] buf
    cdef Py_ssize_t i, j, qi
    cdef double acc, diff
    cdef long long hits
    buf.resize(n)
    with nogil:
        for qi in range(nq):
            for i in range(n):
                acc = 0.0
                for j in range(d):
                    diff = X[i, j] - Q[qi, j]
                    acc = acc + diff * diff
                buf[i].first = acc
                buf[i].second = i
            if k < n:
                nth_element(buf.begin(), buf.begin() + (k - 1), buf.end())
            hits = 0
            for i in range(k):
                hits += y[buf[i].second]
            ov[qi] = <double>hits / <double>k
    return out


def grid_search_allocation(targets, weights, double alpha, double step):
    cdef double[::1] t = np.ascontiguousarray(targets, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t m = t.shape[0]
    cdef Py_ssize_t n_steps = <Py_ssize_t>round(1.0 / step)
    cdef Py_ssize_t n1 = n_steps + 1 if m >= 2 else 1
    cdef Py_ssize_t n2 = n_steps + 1 if m >= 3 else 1
    cdef Py_ssize_t i1, i2
    cdef double a1, a2, a_last, used, obj, slack, idx, total
    cdef double best = INFINITY, b1 = 0.0, b2 = 0.0, b_last = 0.0
    cdef double w_last = w[m - 1]
    with nogil:
        for i1 in range(n1):
            a1 = min(i1 * step, 1.0)
            for i2 in range(n2):
                a2 = min(i2 * step, 1.0)
                used = 0.0
                obj = 0.0
                if m >= 2:
                    used = used + w[0] * a1
                    obj = obj + w[0] * _ell(t[0], a1)
                if m >= 3:
                    used = used + w[1] * a2
                    obj = obj + w[1] * _ell(t[1], a2)
                slack = alpha + 1e-12 - used
                if slack < 0.0:
                    continue
                if w_last > 0.0:
                    idx = floor(slack / (w_last * step))
                    if idx > n_steps:
                        idx = n_steps
                else:
                    idx = n_steps
                a_last = min(idx * step, 1.0)
                total = obj + w_last * _ell(t[m - 1], a_last)
                if total < best:
                    best = total
                    b1 = a1
                    b2 = a2
                    b_last = a_last
    if m == 1:
        a = [b_last]
    elif m == 2:
        a = [b1, b_last]
    else:
        a = [b1, b2, b_last]
    return np.array(a), float(best)
