"""Witness linear programs and the pruning engine.

Everything here works on *projected* values: ``Q[i, l]`` is the value of
vector ``i`` at basis point ``l``.  A belief in the region is a convex
combination ``lam`` of basis points, so the value of vector ``i`` there is
``Q[i] @ lam``.  The full space is the special case of unit-vector points.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from ._kernels import OPTIMAL

MARGIN = 1e-9
TIE_TOL = 1e-12
SAMPLE_SEED = 20240517


class LPError(RuntimeError):
    """The simplex kernel failed on a problem that is feasible by construction."""


def max_min_advantage(D):
    """Solve max_lam min_j D[j] @ lam over the probability simplex.

    Returns ``(x, lam)`` with ``x`` recomputed exactly at ``lam``.  With no
    rows the advantage is ``+inf`` at the first vertex.

    This is the value of a matrix game.  Rescaling D to M in [1, 2] makes
    the opponent's problem origin-feasible with one row per basis point:

        maximize sum(y)  s.t.  M.T y <= 1,  y >= 0,

    and ``lam`` is read off the row duals, normalized.  The tableau has only
    k rows however many competitors there are, which keeps pivots few and
    well conditioned.
    """
    D = np.asarray(D, dtype=np.float64)
    m, k = D.shape
    if m == 0:
        lam = np.zeros(k)
        lam[0] = 1.0
        return np.inf, lam
    if k == 1:
        return float(D[:, 0].min()), np.ones(1)
    lo, hi = float(D.min()), float(D.max())
    if hi - lo <= 0.0:
        lam = np.zeros(k)
        lam[0] = 1.0
        return lo, lam
    M = (D - lo) / (hi - lo) + 1.0
    status, _, _, _, y = _kernels.simplex_max(np.ones(m), M.T, np.ones(k), duals=True)
    if status != OPTIMAL:
        raise LPError(f"witness LP returned status {status}")
    lam = np.clip(y, 0.0, None)
    s = lam.sum()
    if not s > 0.0:
        raise LPError("witness LP returned no mixed strategy")
    lam /= s
    return float((D @ lam).min()), lam


def witness_by_rows(D, margin, start):
    """Decide ``max_lam min_j D[j] @ lam > margin`` by row generation.

    The LP is solved over the rows in ``start``; a restricted optimum at or
    below ``margin`` already settles the answer (fewer rows only raise it),
    and a restricted optimum whose ``lam`` beats every row by more than
    ``margin`` is a witness for the full set.  Otherwise the most violated
    rows join and the LP is solved again.  Returns
    ``(found, advantage, lam, lp_count)``: when found, ``advantage`` is
    ``min(D @ lam)``; otherwise it is the restricted optimum, an upper bound.
    """
    m, k = D.shape
    active = np.zeros(m, dtype=bool)
    active[np.asarray(start, dtype=np.int64)] = True
    lps = 0
    while True:
        x, lam = max_min_advantage(D[active])
        lps += 1
        if x <= margin:
            return False, x, lam, lps
        d = D @ lam
        worst = float(d.min())
        if worst > margin:
            return True, worst, lam, lps
        viol = np.nonzero(d <= margin)[0]  # never active: active rows have d >= x > margin
        if viol.size > 2 * k:
            viol = viol[np.argpartition(d[viol], 2 * k)[:2 * k]]
        active[viol] = True


_SAMPLE_CACHE: dict = {}


def sample_weights(k: int) -> np.ndarray:
    """Fixed probe points in weight space: vertices, centroid, seeded Dirichlet draws."""
    W = _SAMPLE_CACHE.get(k)
    if W is None:
        rng = np.random.Generator(np.random.PCG64(SAMPLE_SEED + k))
        extra = min(4 * k + 8, 64) if k > 1 else 0
        parts = [np.eye(k), np.full((1, k), 1.0 / k)]
        if extra:
            parts.append(rng.dirichlet(np.ones(k), size=extra))
        W = np.vstack(parts)
        W.setflags(write=False)
        _SAMPLE_CACHE[k] = W
    return W


class PruneOutcome:
    """Result of ``prune_projected``: keep mask, witness weights, LP count."""

    __slots__ = ("keep", "weights", "advantage", "lp_count")

    def __init__(self, n, k):
        self.keep = np.zeros(n, dtype=bool)
        self.weights = np.zeros((n, k))
        self.advantage = np.zeros(n)
        self.lp_count = 0


def prefilter(Q, tie_tol=MARGIN):
    """Mask of rows that cannot be useful: tied or pointwise-dominated by a kept row."""
    return _kernels.dominated_mask(Q, tie_tol)


def prune_projected(Q, margin=MARGIN, survivors=False, candidates=None):
    """Decide which rows of ``Q`` have a witness against the others.

    Each candidate is tested against every row that survives the
    prefilter (original-set semantics).  With ``survivors=True`` rows
    already rejected are dropped from later constraint sets.  ``candidates``
    restricts which rows are tested; the others still act as constraints.
    """
    Q = np.asarray(Q, dtype=np.float64)
    n, k = Q.shape
    out = PruneOutcome(n, k)
    if n == 0:
        return out
    dead = prefilter(Q)
    alive = np.nonzero(~dead)[0]
    todo = np.zeros(n, dtype=bool)
    todo[alive] = True
    if candidates is not None:
        mask = np.zeros(n, dtype=bool)
        mask[np.asarray(candidates, dtype=np.int64)] = True
        todo &= mask
    if alive.size == 1:
        i = alive[0]
        if todo[i]:
            out.keep[i] = True
            out.weights[i, 0] = 1.0
            out.advantage[i] = np.inf
        return out

    # cheap witnesses: a probe point where the row beats every other alive row
    W = sample_weights(k)
    V = Q[alive] @ W.T  # (alive, probes)
    order = np.argsort(-V, axis=0, kind="stable")
    top, second = order[0], order[1]
    cols = np.arange(V.shape[1])
    gap = V[top, cols] - V[second, cols]
    best_gap = np.full(n, -np.inf)
    best_col = np.zeros(n, dtype=np.int64)
    for p in np.argsort(-gap, kind="stable"):
        i = alive[top[p]]
        if gap[p] > best_gap[i]:
            best_gap[i] = gap[p]
            best_col[i] = p
    quick = todo & (best_gap > margin)
    out.keep[quick] = True
    out.weights[quick] = W[best_col[quick]]
    out.advantage[quick] = best_gap[quick]

    rejected = np.zeros(n, dtype=bool)
    pos = np.full(n, -1)
    pos[alive] = np.arange(alive.size)
    for i in np.nonzero(todo & ~quick)[0]:
        pool = alive[alive != i]
        if survivors:
            pool = pool[~rejected[pool]]
        D = Q[i][None, :] - Q[pool]
        if pool.size <= 4 * k:
            x, lam = max_min_advantage(D)
            out.lp_count += 1
            found = x > margin
        else:
            # seed rows: strongest competitors at the probe where row i fares best
            r = pos[i]
            rival = np.where(top == r, V[second, cols], V[top, cols])
            p = int(np.argmax(V[r] - rival))
            seed = np.argpartition(-V[pos[pool], p], 2 * k)[:2 * k]
            seed = np.union1d(seed, np.argmin(D, axis=0))
            found, x, lam, lps = witness_by_rows(D, margin, seed)
            out.lp_count += lps
        if found:
            out.keep[i] = True
            out.weights[i] = lam
            out.advantage[i] = x
        else:
            rejected[i] = True
    return out


def region_max_gap(Qa, Qb, stop_above=np.inf):
    """max over the region of (envelope of Qa) - (envelope of Qb).

    Exact via one witness LP per row of ``Qa`` that might beat the current
    best; rows tied with a row of ``Qb`` are skipped.  Returns
    ``(gap, lp_count)``; the gap may be negative.
    """
    Qa = np.asarray(Qa, dtype=np.float64)
    Qb = np.asarray(Qb, dtype=np.float64)
    if Qa.shape[0] == 0:
        return -np.inf, 0
    if Qb.shape[0] == 0:
        return np.inf, 0
    k = Qa.shape[1]
    W = sample_weights(k)
    Va = Qa @ W.T
    Vb = Qb @ W.T
    low = (Va - Vb.max(axis=0)).max(axis=1)  # per row lower bound
    best = float(low.max())
    # upper bound per row: min over b-rows of max over vertices of (a - b)
    ub = np.empty(Qa.shape[0])
    chunk = max(1, 2_000_000 // max(1, Qb.shape[0] * k))
    for s in range(0, Qa.shape[0], chunk):
        diff = Qa[s:s + chunk, None, :] - Qb[None, :, :]
        ub[s:s + chunk] = diff.max(axis=2).min(axis=1)
    lps = 0
    for i in np.argsort(-ub, kind="stable"):
        if ub[i] <= best or best >= stop_above:
            break
        if ub[i] <= low[i] + TIE_TOL:
            continue
        x, _ = max_min_advantage(Qa[i][None, :] - Qb)
        lps += 1
        if x > best:
            best = x
    return best, lps
