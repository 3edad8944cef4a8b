"""One-step DP updates over the belief space, simplex unions and simplex families."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import VectorSet, dedupe, project, union_prune
from .lp import MARGIN, region_max_gap
from .model import PomdpModel, SimplexBasis, phi_simplex_basis, space_basis, tau_simplex_basis

ENUM_CAP = 5_000_000


class ResourceError(RuntimeError):
    """Predicted enumeration size exceeds the configured cap."""


@dataclass
class DpUpdateStats:
    enumerated_count: int = 0
    kept_count: int = 0
    lp_count: int = 0
    region: str = "space"

    def add(self, other: "DpUpdateStats"):
        self.enumerated_count += other.enumerated_count
        self.kept_count += other.kept_count
        self.lp_count += other.lp_count


@dataclass(frozen=True, eq=False)
class SimplexFamily:
    """Per-simplex value functions.

    ``entries`` maps a key to ``(basis, vectors)``.  Keys are (a, z) pairs,
    bare observations (``keyed_by="obs"``, action-independent observation
    models) or histories.
    """

    entries: dict
    keyed_by: str = "pair"
    region: str = "tau"

    def keys(self):
        return list(self.entries)

    def basis(self, key) -> SimplexBasis:
        return self.entries[key][0]

    def vectors(self, key) -> VectorSet:
        return self.entries[key][1]

    def key_for(self, a: int, z: int):
        return int(z) if self.keyed_by == "obs" else (int(a), int(z))

    def pred(self, a: int, z: int) -> Optional[VectorSet]:
        e = self.entries.get(self.key_for(a, z))
        return None if e is None else e[1]

    def total_count(self) -> int:
        return sum(len(v) for _, v in self.entries.values())

    def replace_vectors(self, sets: dict) -> "SimplexFamily":
        return SimplexFamily({k: (self.entries[k][0], sets[k]) for k in self.entries},
                             self.keyed_by, self.region)


# -- vector construction -------------------------------------------------------

def weights(model: PomdpModel) -> np.ndarray:
    """``W[a, z, s, s'] = discount * P(s'|s,a) P(z|s',a)``, cached on the model."""
    W = model.__dict__.get("_dp_weights")
    if W is None:
        W = model.discount * np.ascontiguousarray(model.joint.transpose(0, 1, 3, 2))
        W.setflags(write=False)
        object.__setattr__(model, "_dp_weights", W)
    return W


def _read(W_rows, vs: VectorSet) -> np.ndarray:
    """Backed-up contribution ``vs @ W_rows.T`` honouring support tags."""
    if vs.support is not None:
        return vs.values @ W_rows[:, list(vs.support)].T
    return vs.values @ W_rows.T


def build_vector(model: PomdpModel, a: int, delta, rows=None) -> np.ndarray:
    """beta(s) = r(s,a) + discount * sum_z sum_s' P(s'|s,a) P(z|s',a) delta_z(s').

    ``delta`` maps each observation to an AlphaVector (or array); entries
    may be omitted for observations with zero probability.  ``rows``
    restricts the output to those states.
    """
    model.check_action(a)
    W = weights(model)
    rows = np.arange(model.num_states) if rows is None else np.asarray(rows)
    beta = model.reward[rows, a].astype(np.float64)
    items = delta.items() if isinstance(delta, dict) else enumerate(delta)
    for z, d in items:
        if d is None:
            continue
        vals = np.asarray(getattr(d, "values", d), dtype=np.float64)
        sup = getattr(d, "support", None)
        Wr = W[a, z][rows]
        if sup is not None:
            beta = beta + Wr[:, list(sup)] @ vals
        else:
            if vals.size != model.num_states:
                raise ValueError("predecessor vector has the wrong dimension")
            beta = beta + Wr @ vals
    return beta


# -- enumeration -----------------------------------------------------------------

def _check_cap(n, cap):
    if n > cap:
        raise ResourceError(f"enumeration of {n} vectors exceeds cap {cap}")


def enumerate_action(model, a, preds, rows, relevant_rows, enum_cap=ENUM_CAP, stage_prune=None):
    """Cross-sum enumeration for one action.

    ``preds[z]`` is the predecessor VectorSet for observation z (or None).
    Output vectors have one entry per state in ``rows``.  Observations whose
    weights vanish on ``relevant_rows`` cannot change values on the target
    region; they keep predecessor 0 and are not enumerated.
    ``stage_prune`` (optional) prunes each partial cross-sum.
    Returns ``(values, obs_maps, produced)``.
    """
    W = weights(model)
    Z = model.num_observations
    base = model.reward[rows, a][None, :].astype(np.float64)
    maps = np.zeros((1, Z), dtype=np.int64)
    terms = []
    for z in range(Z):
        pz = preds[z]
        if pz is None or len(pz) == 0:
            maps[:, z] = -1
            continue
        if not W[a, z][relevant_rows].any():
            maps[:, z] = 0
            Wr = W[a, z][rows]
            base = base + _read(Wr, pz.take([0]))
            continue
        terms.append(z)
    total = 1
    for z in terms:
        total *= len(preds[z])
    if stage_prune is None:
        _check_cap(total, enum_cap)
    produced = 0
    for z in terms:
        G = _read(W[a, z][rows], preds[z])  # (n_z, d)
        n0, nz = base.shape[0], G.shape[0]
        _check_cap(n0 * nz, enum_cap)
        base = (base[:, None, :] + G[None, :, :]).reshape(n0 * nz, -1)
        maps = np.repeat(maps, nz, axis=0)
        maps[:, z] = np.tile(np.arange(nz), n0)
        produced = base.shape[0]
        if stage_prune is not None:
            keep = stage_prune(base)
            base, maps = base[keep], maps[keep]
    return base, maps, max(produced, base.shape[0])


def _stage_pruner(bases, support_tag, margin):
    def prune(values):
        vs = VectorSet(values, None, None, None, support_tag)
        _, info = union_prune(vs, bases, margin, return_info=True)
        return info.kept_indices
    return prune


def _region_update(model, bases, pred_for, rows, relevant, support_tag, region, *,
                   margin=MARGIN, incremental=False, survivors=False, enum_cap=ENUM_CAP):
    """Enumerate over all actions and prune over the union of ``bases``.

    ``rows`` are the states carried by output vectors, ``relevant`` the
    states where the target region has mass.
    """
    stage = _stage_pruner(bases, support_tag, margin) if incremental else None
    parts_v, parts_m, acts = [], [], []
    enumerated = 0
    for a in range(model.num_actions):
        preds = [pred_for(a, z) for z in range(model.num_observations)]
        vals, maps, _ = enumerate_action(model, a, preds, rows, relevant, enum_cap, stage)
        parts_v.append(vals)
        parts_m.append(maps)
        acts.append(np.full(vals.shape[0], a, dtype=np.int64))
        enumerated += vals.shape[0]
    _check_cap(enumerated, enum_cap)
    vs = VectorSet(np.vstack(parts_v), np.concatenate(acts), np.vstack(parts_m), None,
                   support_tag, region)
    vs = dedupe(vs)
    kept, info = union_prune(vs, bases, margin, survivors, return_info=True)
    stats = DpUpdateStats(enumerated, len(kept), info.lp_count, region[0] if region else "")
    return kept, info, stats


def dp_update_space(model: PomdpModel, V: VectorSet, **kw):
    """Monahan update over the whole belief space."""
    if len(V) == 0:
        raise ValueError("predecessor set is empty")
    basis = space_basis(model.num_states)
    allS = np.arange(model.num_states)
    kept, _, stats = _region_update(model, [basis], lambda a, z: V, allS, allS, None,
                                    ("space",), **kw)
    return kept, stats


def dp_update_subset_collective(model: PomdpModel, V: VectorSet, bases: Sequence[SimplexBasis], **kw):
    """Eq.-(9)-style update: every observation draws from the single set V, pruned over the union."""
    kept, _, stats = dp_update_subset_collective_info(model, V, bases, **kw)
    return kept, stats


def dp_update_subset_collective_info(model, V, bases, **kw):
    """As ``dp_update_subset_collective`` but also returns the PruneInfo."""
    bases = [b for b in bases if not b.empty]
    rel = _union_support(bases)
    return _region_update(model, bases, lambda a, z: V, np.arange(model.num_states), rel,
                          None, ("union",), **kw)


def _union_support(bases):
    return np.unique(np.concatenate([b.support for b in bases]))


def dp_update_subset_individual(model: PomdpModel, family: SimplexFamily, **kw):
    """Per-simplex update: observation z of a new vector with action a draws from entry (a, z)."""
    new = {}
    stats = DpUpdateStats(region="tau-family")
    for key in family.keys():
        basis = family.basis(key)
        kept, _, st = _region_update(model, [basis], family.pred, np.arange(model.num_states),
                                     basis.support, None, (family.region, key), **kw)
        new[key] = kept
        stats.add(st)
    return family.replace_vectors(new), stats


def dp_update_phi(model: PomdpModel, family: SimplexFamily, **kw):
    """Low-dimension update: each entry's vectors live on its observation support."""
    new = {}
    stats = DpUpdateStats(region="phi-family")
    for key in family.keys():
        basis = family.basis(key)
        sup = np.asarray(basis.support)
        local = SimplexBasis(basis.points[:, sup], basis.tag)
        kept, _, st = _region_update(model, [local], family.pred, sup, sup,
                                     tuple(int(s) for s in sup), ("phi", key), **kw)
        new[key] = kept
        stats.add(st)
    return family.replace_vectors(new), stats


# -- families --------------------------------------------------------------------

def tau_family(model: PomdpModel, init: Callable[[int], VectorSet] = None) -> SimplexFamily:
    """Family over all realizable tau-simplices, each starting from ``init``."""
    entries = {}
    for a, z in model.realizable_pairs:
        b = tau_simplex_basis(model, a, z)
        if b.empty:
            continue
        vs = init() if init is not None else VectorSet(np.zeros((1, model.num_states)))
        entries[(a, z)] = (b, vs.with_region(("tau", (a, z))))
    return SimplexFamily(entries, "pair", "tau")


def phi_family(model: PomdpModel) -> SimplexFamily:
    """Family over the phi-simplices of realizable pairs with zero reduced vectors.

    Keyed by observation when the observation model ignores the action.
    """
    entries = {}
    by_obs = model.observation_action_independent
    for a, z in model.realizable_pairs:
        key = z if by_obs else (a, z)
        if key in entries:
            continue
        b = phi_simplex_basis(model, a, z)
        if b.empty:
            continue
        sup = tuple(int(s) for s in b.support)
        entries[key] = (b, VectorSet(np.zeros((1, len(sup))), None, None, None, sup, ("phi", key)))
    if by_obs:
        entries = dict(sorted(entries.items()))
    return SimplexFamily(entries, "obs" if by_obs else "pair", "phi")


# -- residuals -------------------------------------------------------------------

def _region_bases(vs: VectorSet, region):
    if region is None or (isinstance(region, str) and region == "space"):
        return [space_basis(vs.dim)]
    if isinstance(region, SimplexBasis):
        return [region]
    return [b for b in region if not b.empty]


def bellman_residual(Vnew: VectorSet, Vold: VectorSet, region=None, return_lps: bool = False):
    """max over the region of |Vnew(b) - Vold(b)|, exact via LPs.

    ``region`` is None (whole space), a basis, or a list of bases (union:
    max over members).
    """
    if Vnew.dim != Vold.dim or Vnew.support != Vold.support:
        raise ValueError("residual between sets of different dimension")
    best, lps = 0.0, 0
    for basis in _region_bases(Vnew, region):
        Qn = project(Vnew, basis)
        Qo = project(Vold, basis)
        g1, l1 = region_max_gap(Qn, Qo)
        g2, l2 = region_max_gap(Qo, Qn)
        lps += l1 + l2
        best = max(best, g1, g2)
    return (best, lps) if return_lps else best


def family_residual(new: SimplexFamily, old: SimplexFamily, return_lps: bool = False):
    best, lps = 0.0, 0
    for key in new.keys():
        basis = new.basis(key)
        vn, vo = new.vectors(key), old.vectors(key)
        if vn.support is not None:
            basis = SimplexBasis(basis.points[:, list(vn.support)], basis.tag)
        r, l = bellman_residual(vn, vo, basis, return_lps=True)
        best, lps = max(best, r), lps + l
    return (best, lps) if return_lps else best
