"""Alpha vectors, vector sets, witnesses and pruning over regions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .lp import MARGIN, TIE_TOL, max_min_advantage, prune_projected
from .model import SimplexBasis, space_basis


class GeometryError(ValueError):
    """Dimension or support mismatch between vectors, sets and bases."""


@dataclass(frozen=True, eq=False)
class AlphaVector:
    """One linear piece of a value function.

    ``obs_map[z]`` is the index of the predecessor vector chosen for
    observation ``z`` (-1 when the observation carries no weight).
    ``support`` is set for reduced-dimension vectors.
    """

    values: np.ndarray
    action: int = 0
    obs_map: Optional[tuple] = None
    history: Optional[tuple] = None
    support: Optional[tuple] = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.support is not None and len(self.support) != v.size:
            raise GeometryError("support tag length differs from vector length")

    @property
    def dim(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class VectorSet:
    """A set of alpha vectors sharing one dimension.

    Stored column-wise: ``values`` is (n, d); ``actions`` (n,);
    ``obs_maps`` (n, |Z|) or None; ``histories`` a tuple with one entry
    (History or None) per vector, or None.
    """

    values: np.ndarray
    actions: np.ndarray = None
    obs_maps: Optional[np.ndarray] = None
    histories: Optional[tuple] = None
    support: Optional[tuple] = None
    region: tuple = ("space",)

    def __post_init__(self):
        V = np.array(self.values, dtype=np.float64)
        if V.ndim == 1:
            V = V.reshape(1, -1)
        if V.ndim != 2:
            raise GeometryError("values must be a 2-d array")
        V.setflags(write=False)
        object.__setattr__(self, "values", V)
        n = V.shape[0]
        acts = np.zeros(n, dtype=np.int64) if self.actions is None else np.array(self.actions, dtype=np.int64).reshape(-1)
        if acts.size != n:
            raise GeometryError("one action per vector required")
        acts.setflags(write=False)
        object.__setattr__(self, "actions", acts)
        if self.obs_maps is not None:
            M = np.array(self.obs_maps, dtype=np.int64).reshape(n, -1)
            M.setflags(write=False)
            object.__setattr__(self, "obs_maps", M)
        if self.histories is not None:
            hs = tuple(self.histories)
            if len(hs) != n:
                raise GeometryError("one history entry per vector required")
            object.__setattr__(self, "histories", hs)
        if self.support is not None:
            sup = tuple(int(s) for s in self.support)
            if len(sup) != V.shape[1]:
                raise GeometryError("support tag length differs from vector length")
            object.__setattr__(self, "support", sup)

    @classmethod
    def from_vectors(cls, vectors: Sequence[AlphaVector], region=("space",)):
        vectors = list(vectors)
        if not vectors:
            raise GeometryError("cannot build a set from no vectors without a dimension")
        dims = {v.dim for v in vectors}
        sups = {v.support for v in vectors}
        if len(dims) != 1 or len(sups) != 1:
            raise GeometryError("mixing dimensions or supports in one set")
        maps = None
        if all(v.obs_map is not None for v in vectors):
            maps = np.array([v.obs_map for v in vectors])
        hist = None
        if any(v.history is not None for v in vectors):
            hist = tuple(v.history for v in vectors)
        return cls(np.array([v.values for v in vectors]), [v.action for v in vectors],
                   maps, hist, vectors[0].support, region)

    @classmethod
    def empty(cls, dim: int, support=None, region=("space",)):
        return cls(np.zeros((0, dim)), np.zeros(0, dtype=np.int64), None, None, support, region)

    def __len__(self):
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __getitem__(self, i) -> AlphaVector:
        return AlphaVector(
            self.values[i], int(self.actions[i]),
            None if self.obs_maps is None else tuple(int(x) for x in self.obs_maps[i]),
            None if self.histories is None else self.histories[i],
            self.support,
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def take(self, idx) -> "VectorSet":
        idx = np.asarray(idx, dtype=np.int64).reshape(-1)
        return VectorSet(
            self.values[idx], self.actions[idx],
            None if self.obs_maps is None else self.obs_maps[idx],
            None if self.histories is None else tuple(self.histories[i] for i in idx),
            self.support, self.region,
        )

    def with_region(self, region) -> "VectorSet":
        return VectorSet(self.values, self.actions, self.obs_maps, self.histories,
                         self.support, region)

    def with_histories(self, histories) -> "VectorSet":
        return VectorSet(self.values, self.actions, self.obs_maps, histories,
                         self.support, self.region)

    def concat(self, other: "VectorSet") -> "VectorSet":
        if self.dim != other.dim or self.support != other.support:
            raise GeometryError("mixing dimensions or supports in one set")
        maps = None
        if self.obs_maps is not None and other.obs_maps is not None and \
                self.obs_maps.shape[1] == other.obs_maps.shape[1]:
            maps = np.vstack([self.obs_maps, other.obs_maps])
        hist = None
        if self.histories is not None or other.histories is not None:
            hist = (self.histories or (None,) * len(self)) + \
                   (other.histories or (None,) * len(other))
        return VectorSet(np.vstack([self.values, other.values]),
                         np.concatenate([self.actions, other.actions]),
                         maps, hist, self.support, self.region)

    def embed(self, num_states: int) -> "VectorSet":
        """Full-dimension copy with zeros off the support."""
        if self.support is None:
            return self
        V = np.zeros((len(self), num_states))
        V[:, list(self.support)] = self.values
        return VectorSet(V, self.actions, self.obs_maps, self.histories, None, self.region)


@dataclass(frozen=True, eq=False)
class Witness:
    """A belief where a vector beats every other by ``advantage``."""

    belief: np.ndarray
    advantage: float
    coefficients: np.ndarray = field(default=None)


# -- helpers -------------------------------------------------------------------

def _as_set(x, dim=None) -> VectorSet:
    if isinstance(x, VectorSet):
        return x
    if isinstance(x, AlphaVector):
        return VectorSet(x.values.reshape(1, -1), [x.action], None, None, x.support)
    arr = np.asarray(x, dtype=np.float64)
    if arr.size == 0:
        return VectorSet.empty(dim if dim is not None else 0)
    return VectorSet(np.atleast_2d(arr))


def _as_vector(x) -> AlphaVector:
    if isinstance(x, AlphaVector):
        return x
    return AlphaVector(np.asarray(x, dtype=np.float64))


def project(vs: VectorSet, basis: SimplexBasis) -> np.ndarray:
    """Values of every vector at every basis point, shape (n, k).

    Reduced-dimension sets accept bases written either over their support
    (same width as the vectors) or over the full state space.
    """
    P = basis.points
    if P.shape[1] == vs.dim:
        return vs.values @ P.T
    if vs.support is None:
        raise GeometryError(f"basis dimension {P.shape[1]} vs vector dimension {vs.dim}")
    sup = list(vs.support)
    off = np.delete(P, sup, axis=1)
    if off.size and np.abs(off).max() > 1e-12:
        raise GeometryError("basis has mass outside the vectors' support")
    return vs.values @ P[:, sup].T


# -- operations ----------------------------------------------------------------

def dedupe(vs: VectorSet, tol: float = TIE_TOL) -> VectorSet:
    """Drop vectors componentwise within ``tol`` of an earlier kept vector."""
    n = len(vs)
    if n < 2:
        return vs
    V = vs.values
    s = V.sum(axis=1)
    order = np.argsort(s, kind="stable")
    ss = s[order]
    win = vs.dim * tol + 1e-300
    pairs = []
    off = 1
    while off < n:
        close = (ss[off:] - ss[:-off]) <= win
        if not close.any():
            break
        ia = order[:-off][close]
        ib = order[off:][close]
        eq = np.abs(V[ia] - V[ib]).max(axis=1) <= tol
        for a, b in zip(ia[eq], ib[eq]):
            pairs.append((min(a, b), max(a, b)))
        off += 1
    if not pairs:
        return vs
    earlier = {}
    for a, b in pairs:
        earlier.setdefault(int(b), []).append(int(a))
    removed = np.zeros(n, dtype=bool)
    for j in sorted(earlier):
        if any(not removed[i] for i in earlier[j]):
            removed[j] = True
    return vs.take(np.nonzero(~removed)[0])


def simplex_witness_lp(beta, others, basis: SimplexBasis, margin: float = MARGIN) -> Optional[Witness]:
    """Witness for ``beta`` against ``others`` over the hull of ``basis``."""
    beta = _as_vector(beta)
    if basis.empty:
        raise GeometryError("empty basis")
    others = _as_set(others, beta.dim)
    qb = project(_as_set(beta), basis)[0]
    if len(others) == 0:
        lam = np.zeros(len(basis))
        lam[0] = 1.0
        return Witness(basis.points[0].copy(), np.inf, lam)
    if others.dim != beta.dim or others.support != beta.support:
        raise GeometryError("mixing dimensions or supports")
    D = qb[None, :] - project(others, basis)
    x, lam = max_min_advantage(D)
    if not x > margin:
        return None
    return Witness(lam @ basis.points, x, lam)


def space_witness_lp(beta, others, margin: float = MARGIN) -> Optional[Witness]:
    """Witness for ``beta`` against ``others`` over the whole belief simplex."""
    beta = _as_vector(beta)
    return simplex_witness_lp(beta, others, space_basis(beta.dim), margin)


@dataclass
class PruneInfo:
    lp_count: int = 0
    witnesses: dict = field(default_factory=dict)  # kept index -> Witness
    basis_index: dict = field(default_factory=dict)  # kept index -> basis position
    kept_indices: np.ndarray = None  # positions of survivors in the input set


def union_prune(vs: VectorSet, bases: Sequence[SimplexBasis], margin: float = MARGIN,
                survivors: bool = False, return_info: bool = False):
    """Keep vectors with a witness on at least one basis.

    Bases are visited in order and a kept vector is not re-tested on later
    bases; the first basis where it succeeded is recorded.
    """
    bases = [b for b in bases if not b.empty]
    if not bases:
        raise GeometryError("union_prune needs at least one nonempty basis")
    info = PruneInfo()
    n = len(vs)
    keep = np.zeros(n, dtype=bool)
    for t, basis in enumerate(bases):
        todo = np.nonzero(~keep)[0]
        if todo.size == 0:
            break
        Q = project(vs, basis)
        res = prune_projected(Q, margin, survivors, candidates=todo)
        info.lp_count += res.lp_count
        for i in np.nonzero(res.keep)[0]:
            keep[i] = True
            info.basis_index[int(i)] = t
            info.witnesses[int(i)] = Witness(res.weights[i] @ basis.points, float(res.advantage[i]),
                                             res.weights[i].copy())
    idx = np.nonzero(keep)[0]
    out = vs.take(idx)
    if return_info:
        info.kept_indices = idx
        remap = {int(i): p for p, i in enumerate(idx)}
        info.witnesses = {remap[i]: w for i, w in info.witnesses.items()}
        info.basis_index = {remap[i]: t for i, t in info.basis_index.items()}
        return out, info
    return out


def simplex_prune(vs: VectorSet, basis: SimplexBasis, margin: float = MARGIN,
                  survivors: bool = False, return_info: bool = False):
    """Minimal subset of ``vs`` over the hull of ``basis``."""
    return union_prune(vs, [basis], margin, survivors, return_info)


def space_prune(vs: VectorSet, margin: float = MARGIN, survivors: bool = False,
                return_info: bool = False):
    """Minimal subset of ``vs`` over its whole (possibly reduced) belief simplex."""
    return union_prune(vs, [space_basis(vs.dim)], margin, survivors, return_info)


def induced_value(vs: VectorSet, b):
    """``(max_i alpha_i . b, argmax)``; ties go to the lowest index.

    For reduced-dimension sets ``b`` may be full length (it is read on the
    support) or already restricted.
    """
    b = np.asarray(b, dtype=np.float64)
    if vs.support is not None and b.size != vs.dim:
        b = b[list(vs.support)]
    vals = vs.values @ b
    i = int(np.argmax(vals))
    return float(vals[i]), i


def values_at(vs: VectorSet, B) -> np.ndarray:
    """Induced value at each row of ``B``."""
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if vs.support is not None and B.shape[1] != vs.dim:
        B = B[:, list(vs.support)]
    return (B @ vs.values.T).max(axis=1)
