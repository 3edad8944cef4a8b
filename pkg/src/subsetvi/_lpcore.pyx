# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dense simplex kernel.

Same algorithm and tolerances as ``_lpcore_py``: condensed tableau,
Bland's rule, one auxiliary variable for infeasible starts.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

cdef enum:
    OPTIMAL = 0
    INFEASIBLE = 1
    UNBOUNDED = 2
    ITERATION_LIMIT = 3


cdef void _pivot(double[:, ::1] T, Py_ssize_t nrow, Py_ssize_t width,
                 Py_ssize_t r, Py_ssize_t j) noexcept nogil:
    cdef double p = T[r, j]
    cdef double f
    cdef Py_ssize_t i, l
    for l in range(width):
        T[r, l] = T[r, l] / p
    T[r, j] = 1.0 / p
    for i in range(nrow):
        if i == r:
            continue
        f = T[i, j]
        if f == 0.0:
            continue
        for l in range(width):
            T[i, l] -= f * T[r, l]
        T[i, j] = -f / p


cdef inline double _pos(double x) noexcept nogil:
    return x if x > 0.0 else 0.0


cdef int _bland(double[:, ::1] T, Py_ssize_t m, Py_ssize_t ncol,
                long[::1] nlab, long[::1] blab, char[::1] eligible,
                double tol, long max_iter, long *pivots) noexcept nogil:
    cdef Py_ssize_t i, j, jbest, rbest
    cdef long lab, tmp
    cdef double ratio, best, a, slack
    cdef long it = 0
    while True:
        jbest = -1
        lab = 0
        for j in range(ncol):
            if eligible[j] and T[m, j] > tol:
                if jbest < 0 or nlab[j] < lab:
                    jbest = j
                    lab = nlab[j]
        if jbest < 0:
            pivots[0] += it
            return OPTIMAL
        rbest = -1
        best = 0.0
        for i in range(m):
            a = T[i, jbest]
            if a > tol:
                ratio = _pos(T[i, ncol]) / a  # drift below 0 is degenerate
                if rbest < 0 or ratio < best:
                    rbest = i
                    best = ratio
        if rbest >= 0:
            slack = 1e-12 * (fabs(best) if fabs(best) > 1.0 else 1.0)
            for i in range(m):
                a = T[i, jbest]
                if a > tol and blab[i] < blab[rbest] and _pos(T[i, ncol]) / a <= best + slack:
                    rbest = i
        if rbest < 0:
            pivots[0] += it
            return UNBOUNDED
        _pivot(T, m + 1, ncol + 1, rbest, jbest)
        tmp = nlab[jbest]
        nlab[jbest] = blab[rbest]
        blab[rbest] = tmp
        it += 1
        if it >= max_iter:
            pivots[0] += it
            return ITERATION_LIMIT


def simplex_max(c, A, b, double tol=1e-9, long max_iter=0, bint duals=False):
    """Maximize ``c . x`` subject to ``A x <= b``, ``x >= 0``.

    Returns ``(status, x, objective, pivots)``, plus the row duals ``y``
    when ``duals`` is set.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cc = np.ascontiguousarray(c, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] AA = np.ascontiguousarray(A, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bb = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t m = AA.shape[0]
    cdef Py_ssize_t n = AA.shape[1]
    cdef Py_ssize_t i, j, r, ncol
    cdef long pivots = 0
    cdef int status
    cdef double bmin, ci
    if max_iter <= 0:
        max_iter = 50 * (m + n + 10)
    cdef bint phase1 = False
    for i in range(m):
        if bb[i] < -tol:
            phase1 = True
            break
    ncol = n + 1 if phase1 else n
    Tn = np.zeros((m + 1, ncol + 1), dtype=np.float64)
    cdef double[:, ::1] T = Tn
    for i in range(m):
        for j in range(n):
            T[i, j] = AA[i, j]
        T[i, ncol] = bb[i]
    nlab_np = np.arange(ncol, dtype=np.int_)
    blab_np = np.arange(ncol, ncol + m, dtype=np.int_)
    elig_np = np.ones(ncol, dtype=np.int8)
    cdef long[::1] nlab = nlab_np
    cdef long[::1] blab = blab_np
    cdef char[::1] eligible = elig_np
    cdef long tmp

    if phase1:
        for i in range(m):
            T[i, n] = -1.0
        T[m, n] = -1.0
        r = 0
        bmin = T[0, ncol]
        for i in range(1, m):
            if T[i, ncol] < bmin:
                bmin = T[i, ncol]
                r = i
        _pivot(T, m + 1, ncol + 1, r, n)
        tmp = nlab[n]
        nlab[n] = blab[r]
        blab[r] = tmp
        pivots += 1
        with nogil:
            status = _bland(T, m, ncol, nlab, blab, eligible, tol, max_iter, &pivots)
        if status == ITERATION_LIMIT:
            return _out(status, np.zeros(n), np.nan, pivots, np.zeros(m), duals)
        if -T[m, ncol] < -tol:
            return _out(INFEASIBLE, np.zeros(n), np.nan, pivots, np.zeros(m), duals)
        r = -1
        for i in range(m):
            if blab[i] == n:
                r = i
                break
        if r >= 0:
            j = -1
            for i in range(ncol):
                if fabs(T[r, i]) > tol and (j < 0 or nlab[i] < nlab[j]):
                    j = i
            if j >= 0:
                _pivot(T, m + 1, ncol + 1, r, j)
                tmp = nlab[j]
                nlab[j] = blab[r]
                blab[r] = tmp
                pivots += 1
            else:
                for i in range(ncol + 1):
                    T[r, i] = 0.0
        for j in range(ncol):
            if nlab[j] == n:
                for i in range(m + 1):
                    T[i, j] = 0.0
                eligible[j] = 0
        for j in range(ncol + 1):
            T[m, j] = 0.0
        for j in range(ncol):
            if nlab[j] < n:
                T[m, j] += cc[nlab[j]]
        for i in range(m):
            if blab[i] < n:
                ci = cc[blab[i]]
                for j in range(ncol + 1):
                    T[m, j] -= ci * T[i, j]
    else:
        for j in range(n):
            T[m, j] = cc[j]

    with nogil:
        status = _bland(T, m, ncol, nlab, blab, eligible, tol, max_iter, &pivots)
    x = np.zeros(n)
    cdef double[::1] xv = x
    for i in range(m):
        if blab[i] < n:
            xv[blab[i]] = T[i, ncol]
    y = np.zeros(m)
    cdef double[::1] yv = y
    for j in range(ncol):
        if nlab[j] >= ncol:
            yv[nlab[j] - ncol] = -T[m, j]
    return _out(status, x, float(np.dot(cc, x)), pivots, y, duals)


cdef _out(int status, x, double obj, long pivots, y, bint duals):
    return (status, x, obj, pivots, y) if duals else (status, x, obj, pivots)


def dominated_mask(Q, double tie_tol=1e-12):
    """Flag rows of ``Q`` that cannot carry a witness (see ``_lpcore_py``)."""
    Qc = np.ascontiguousarray(Q, dtype=np.float64)
    cdef double[:, ::1] q = Qc
    cdef Py_ssize_t m = q.shape[0]
    cdef Py_ssize_t k = q.shape[1]
    out_np = np.zeros(m, dtype=bool)
    if m < 2:
        return out_np
    cdef cnp.int64_t[::1] order = np.argsort(-Qc.sum(axis=1), kind="stable").astype(np.int64)
    cdef cnp.int64_t[::1] front = np.empty(m, dtype=np.int64)
    cdef cnp.uint8_t[::1] out = out_np.view(np.uint8)
    cdef Py_ssize_t t, f, i, j, l, size = 0
    cdef bint tie, ge
    cdef double d
    with nogil:
        for t in range(m):
            i = order[t]
            for f in range(size):
                j = front[f]
                tie = True
                ge = True
                for l in range(k):
                    d = q[j, l] - q[i, l]
                    if fabs(d) > tie_tol:
                        tie = False
                    if d < 0.0:
                        ge = False
                    if not tie and not ge:
                        break
                if tie or ge:
                    out[i] = 1
                    break
            if not out[i]:
                front[size] = i
                size += 1
    return out_np
