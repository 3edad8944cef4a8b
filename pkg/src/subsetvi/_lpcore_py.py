"""Pure numpy fallback for the dense simplex kernel.

Mirrors ``_lpcore.pyx`` exactly (same pivoting rule, same tolerances), so the
two backends return identical answers up to floating point rounding.

The tableau is kept in condensed (Tucker) form: every basic variable is
written as ``x_B = rhs - row . x_N``.  The objective is stored as one more
row with ``-z`` in the rhs slot so a single pivot formula updates everything.
"""

import numpy as np

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
ITERATION_LIMIT = 3


def _pivot(T, r, j):
    p = T[r, j]
    row = T[r] / p
    row[j] = 1.0 / p
    col = T[:, j].copy()
    T -= np.outer(col, row)
    T[:, j] = -col / p
    T[r] = row


def _bland(T, m, ncol, nlab, blab, eligible, tol, max_iter):
    """Run Bland's rule on tableau ``T``; returns status and pivot count."""
    obj = T[m]
    rhs = T[:m, ncol]
    it = 0
    while True:
        cand = np.nonzero((obj[:ncol] > tol) & eligible)[0]
        if cand.size == 0:
            return OPTIMAL, it
        j = cand[np.argmin(nlab[cand])]
        col = T[:m, j]
        rows = np.nonzero(col > tol)[0]
        if rows.size == 0:
            return UNBOUNDED, it
        ratios = np.maximum(rhs[rows], 0.0) / col[rows]  # drift below 0 is degenerate
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = ties[np.argmin(blab[ties])]
        _pivot(T, r, j)
        nlab[j], blab[r] = blab[r], nlab[j]
        it += 1
        if it >= max_iter:
            return ITERATION_LIMIT, it


def simplex_max(c, A, b, tol=1e-9, max_iter=0, duals=False):
    """Maximize ``c . x`` subject to ``A x <= b``, ``x >= 0``.

    Returns ``(status, x, objective, pivots)``, plus the row duals ``y``
    when ``duals`` is set.  Infeasible starting points
    (negative ``b``) go through a one-variable auxiliary phase.
    """
    c = np.asarray(c, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, n = A.shape
    if max_iter <= 0:
        max_iter = 50 * (m + n + 10)
    phase1 = m > 0 and b.min() < -tol
    ncol = n + 1 if phase1 else n
    T = np.zeros((m + 1, ncol + 1))
    T[:m, :n] = A
    T[:m, ncol] = b
    nlab = np.arange(ncol, dtype=np.int64)
    blab = np.arange(ncol, ncol + m, dtype=np.int64)
    eligible = np.ones(ncol, dtype=bool)
    pivots = 0

    if phase1:
        # auxiliary x0 relaxes every row: slack_i = b_i - a_i.x + x0
        T[:m, n] = -1.0
        T[m, n] = -1.0
        rmin = T[:m, ncol].min()
        r = int(np.nonzero(T[:m, ncol] <= rmin)[0][0])
        _pivot(T, r, n)
        nlab[n], blab[r] = blab[r], nlab[n]
        pivots += 1
        status, it = _bland(T, m, ncol, nlab, blab, eligible, tol, max_iter)
        pivots += it
        if status == ITERATION_LIMIT:
            return _out(status, np.zeros(n), np.nan, pivots, np.zeros(m), duals)
        if -T[m, ncol] < -tol:
            return _out(INFEASIBLE, np.zeros(n), np.nan, pivots, np.zeros(m), duals)
        aux = n  # label of x0
        hit = np.nonzero(blab == aux)[0]
        if hit.size:
            r = int(hit[0])
            nz = np.nonzero(np.abs(T[r, :ncol]) > tol)[0]
            if nz.size:
                j = nz[np.argmin(nlab[nz])]
                _pivot(T, r, j)
                nlab[j], blab[r] = blab[r], nlab[j]
                pivots += 1
            else:
                T[r, :] = 0.0
        jx0 = np.nonzero(nlab == aux)[0]
        if jx0.size:
            T[:, jx0[0]] = 0.0
            eligible[jx0[0]] = False
        # rebuild the phase 2 objective over the current basis
        T[m, :] = 0.0
        for j in range(ncol):
            if nlab[j] < n:
                T[m, j] += c[nlab[j]]
        for i in range(m):
            if blab[i] < n:
                ci = c[blab[i]]
                T[m, :ncol] -= ci * T[i, :ncol]
                T[m, ncol] -= ci * T[i, ncol]
    else:
        T[m, :n] = c

    status, it = _bland(T, m, ncol, nlab, blab, eligible, tol, max_iter)
    pivots += it
    x = np.zeros(n)
    for i in range(m):
        if blab[i] < n:
            x[blab[i]] = T[i, ncol]
    y = np.zeros(m)
    for j in range(ncol):
        if nlab[j] >= ncol:
            y[nlab[j] - ncol] = -T[m, j]
    return _out(status, x, float(c @ x), pivots, y, duals)


def _out(status, x, obj, pivots, y, duals):
    return (status, x, obj, pivots, y) if duals else (status, x, obj, pivots)


def sum_order(Q):
    """Row order for the dominance scan: descending row sum, ties by index."""
    return np.argsort(-Q.sum(axis=1), kind="stable")


def dominated_mask(Q, tie_tol=1e-12):
    """Flag rows of ``Q`` that cannot carry a witness.

    Rows are scanned in ``sum_order``; a row is flagged when a row already
    kept ties it (max abs difference at most ``tie_tol``) or is
    componentwise ``>=``.  A dominating row never has a smaller sum, so the
    kept rows form the Pareto front and each row only meets the front.
    """
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    m = Q.shape[0]
    out = np.zeros(m, dtype=bool)
    if m < 2:
        return out
    front = np.empty_like(Q)
    size = 0
    for i in sum_order(Q):
        if size:
            diff = front[:size] - Q[i]
            if ((diff >= 0.0).all(axis=1) | (np.abs(diff).max(axis=1) <= tie_tol)).any():
                out[i] = True
                continue
        front[size] = Q[i]
        size += 1
    return out
