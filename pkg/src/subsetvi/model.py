"""POMDP data model, belief calculus and reachability analysis."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

PROB_TOL = 1e-9
UPDATE_TOL = 1e-12
RANK_TOL = 1e-9

History = tuple  # tuple of (action, observation) pairs


class ModelError(ValueError):
    """Raised for invalid model tables or out-of-range indices."""


def _readonly(x):
    x = np.array(x, dtype=np.float64)
    x.setflags(write=False)
    return x


@dataclass(frozen=True, eq=False)
class PomdpModel:
    """Finite POMDP.

    ``transition[s, a, s']``, ``observation[a, s', z]``, ``reward[s, a]``.
    Arrays are copied and frozen at construction.
    """

    transition: np.ndarray
    observation: np.ndarray
    reward: np.ndarray
    discount: float
    state_names: Optional[tuple] = None
    action_names: Optional[tuple] = None
    observation_names: Optional[tuple] = None
    note: str = field(default="", compare=False)

    def __post_init__(self):
        T = _readonly(self.transition)
        O = _readonly(self.observation)
        R = _readonly(self.reward)
        object.__setattr__(self, "transition", T)
        object.__setattr__(self, "observation", O)
        object.__setattr__(self, "reward", R)
        object.__setattr__(self, "discount", float(self.discount))
        if T.ndim != 3 or T.shape[0] != T.shape[2]:
            raise ModelError(f"transition must be (S, A, S), got {T.shape}")
        S, A, _ = T.shape
        if O.ndim != 3 or O.shape[:2] != (A, S):
            raise ModelError(f"observation must be (A, S, Z) = ({A}, {S}, Z), got {O.shape}")
        if R.shape != (S, A):
            raise ModelError(f"reward must be (S, A) = ({S}, {A}), got {R.shape}")
        if S < 1 or A < 1 or O.shape[2] < 1:
            raise ModelError("state, action and observation counts must be positive")
        for name, P in (("transition", T), ("observation", O)):
            if not np.all(np.isfinite(P)) or P.min() < 0.0 or P.max() > 1.0:
                raise ModelError(f"{name} probabilities must lie in [0, 1]")
        bad = np.argwhere(np.abs(T.sum(axis=2) - 1.0) > PROB_TOL)
        if bad.size:
            rows = ", ".join(f"(s={s}, a={a})" for s, a in bad[:10])
            raise ModelError(f"transition rows do not sum to 1: {rows}")
        bad = np.argwhere(np.abs(O.sum(axis=2) - 1.0) > PROB_TOL)
        if bad.size:
            rows = ", ".join(f"(a={a}, s'={s})" for a, s in bad[:10])
            raise ModelError(f"observation rows do not sum to 1: {rows}")
        if not np.all(np.isfinite(R)):
            raise ModelError("rewards must be finite")
        if not (0.0 <= self.discount < 1.0):
            raise ModelError(f"discount must lie in [0, 1), got {self.discount}")
        for attr, n in (("state_names", S), ("action_names", A),
                        ("observation_names", O.shape[2])):
            names = getattr(self, attr)
            if names is not None:
                names = tuple(str(x) for x in names)
                if len(names) != n:
                    raise ModelError(f"{attr} has {len(names)} entries, expected {n}")
                object.__setattr__(self, attr, names)

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def num_observations(self) -> int:
        return self.observation.shape[2]

    @cached_property
    def joint(self) -> np.ndarray:
        """``joint[a, z, s', s] = P(s', z | s, a)``, the stack of P_az."""
        # O[a, s', z] * T[s, a, s'] -> (a, z, s', s)
        J = np.einsum("ayz,say->azys", self.observation, self.transition)
        J.setflags(write=False)
        return J

    @cached_property
    def unit_obs_prob(self) -> np.ndarray:
        """``[a, z, s] = P(z | unit_s, a)``."""
        P = self.joint.sum(axis=2)
        P.setflags(write=False)
        return P

    @cached_property
    def realizable_pairs(self) -> tuple:
        """(a, z) pairs that some belief can produce, in (a, z) order."""
        ok = (self.unit_obs_prob > 0.0).any(axis=2)
        return tuple((int(a), int(z)) for a, z in zip(*np.nonzero(ok)))

    @cached_property
    def observation_action_independent(self) -> bool:
        O = self.observation
        return bool(np.all(O == O[:1]))

    def check_action(self, a):
        if not (0 <= int(a) < self.num_actions):
            raise ModelError(f"action {a} out of range")

    def check_observation(self, z):
        if not (0 <= int(z) < self.num_observations):
            raise ModelError(f"observation {z} out of range")

    def check_belief(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (self.num_states,):
            raise ModelError(f"belief must have length {self.num_states}")
        if b.min() < -UPDATE_TOL or abs(b.sum() - 1.0) > PROB_TOL:
            raise ModelError("belief must be a probability distribution")
        return b

    def with_reward(self, reward) -> "PomdpModel":
        return PomdpModel(self.transition, self.observation, reward, self.discount,
                          self.state_names, self.action_names, self.observation_names,
                          self.note)


def unit(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


# -- belief calculus ---------------------------------------------------------

def observation_prob(model: PomdpModel, b, a: int, z: int) -> float:
    """P(z | b, a)."""
    model.check_action(a)
    model.check_observation(z)
    b = np.asarray(b, dtype=np.float64)
    return float(model.unit_obs_prob[a, z] @ b)


def belief_update(model: PomdpModel, b, a: int, z: int) -> Optional[np.ndarray]:
    """Bayes update tau(b, a, z); ``None`` when P(z | b, a) = 0."""
    model.check_action(a)
    model.check_observation(z)
    b = np.asarray(b, dtype=np.float64)
    v = model.joint[a, z] @ b
    p = v.sum()
    if p <= UPDATE_TOL:
        return None
    return v / p


def belief_reward(model: PomdpModel, b, a: int) -> float:
    model.check_action(a)
    return float(np.asarray(b, dtype=np.float64) @ model.reward[:, a])


# -- transformational matrices ------------------------------------------------

@dataclass(frozen=True, eq=False)
class TransformationalMatrix:
    """Entry (s', s) is P(s', z | s, a)."""

    entries: np.ndarray
    action: int
    observation: int


def transformational_matrix(model: PomdpModel, a: int, z: int) -> TransformationalMatrix:
    model.check_action(a)
    model.check_observation(z)
    return TransformationalMatrix(np.array(model.joint[a, z]), int(a), int(z))


def numerical_rank(M, tol: float = RANK_TOL) -> int:
    """Rank by row echelon elimination with partial pivoting.

    A pivot counts when its magnitude exceeds ``tol`` times the largest
    absolute entry of the input.
    """
    A = np.array(M, dtype=np.float64)
    if A.size == 0:
        return 0
    scale = np.abs(A).max()
    if scale == 0.0:
        return 0
    thresh = tol * scale
    rows, cols = A.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(A[r:, c])))
        if abs(A[p, c]) <= thresh:
            continue
        A[[r, p]] = A[[p, r]]
        A[r + 1:] -= np.outer(A[r + 1:, c] / A[r, c], A[r])
        r += 1
    return r


def is_degenerate(m, tol: float = RANK_TOL):
    """Return ``(degenerate, rank)`` for a transformational matrix."""
    M = m.entries if isinstance(m, TransformationalMatrix) else np.asarray(m)
    rank = numerical_rank(M, tol)
    return rank < M.shape[0], rank


@dataclass(frozen=True)
class PropernessReport:
    entries: dict  # (a, z) -> (degenerate, rank)
    proper: bool

    @property
    def verdict(self) -> str:
        if self.proper:
            return "proper (every transformational matrix is degenerate)"
        return "not proper (some transformational matrix is invertible)"


def analyze_properness(model: PomdpModel, tol: float = RANK_TOL) -> PropernessReport:
    """Degeneracy of every P_az; tau(B) is reported proper iff all are degenerate."""
    entries = {}
    for a in range(model.num_actions):
        for z in range(model.num_observations):
            entries[(a, z)] = is_degenerate(model.joint[a, z], tol)
    return PropernessReport(entries, all(d for d, _ in entries.values()))


# -- simplex bases ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SimplexBasis:
    """Belief points (rows of ``points``) spanning a belief simplex.

    ``tag`` names the generator: ``("tau", a, z)``, ``("history", h)``,
    ``("phi", key)`` or ``("space",)``.  ``support`` lists the states where
    some point has mass, in increasing order.
    """

    points: np.ndarray
    tag: tuple = ("space",)

    def __post_init__(self):
        P = np.array(self.points, dtype=np.float64)
        if P.ndim == 1:
            P = P.reshape(1, -1) if P.size else P.reshape(0, 0)
        P.setflags(write=False)
        object.__setattr__(self, "points", P)

    def __len__(self):
        return self.points.shape[0]

    @property
    def empty(self) -> bool:
        return self.points.shape[0] == 0

    @cached_property
    def support(self) -> np.ndarray:
        if self.empty:
            return np.zeros(0, dtype=np.int64)
        return np.nonzero((self.points > 0.0).any(axis=0))[0]

    def belief(self, coefficients) -> np.ndarray:
        return np.asarray(coefficients) @ self.points


def space_basis(n: int) -> SimplexBasis:
    return SimplexBasis(np.eye(n), ("space",))


def tau_simplex_basis(model: PomdpModel, a: int, z: int) -> SimplexBasis:
    """{tau(unit_i, a, z) : P(z | unit_i, a) > 0}; empty when (a, z) is impossible."""
    model.check_action(a)
    model.check_observation(z)
    cols = model.joint[a, z]  # column i is P_az unit_i
    p = cols.sum(axis=0)
    keep = np.nonzero(p > 0.0)[0]
    pts = (cols[:, keep] / p[keep]).T if keep.size else np.zeros((0, model.num_states))
    return SimplexBasis(pts, ("tau", int(a), int(z)))


def history_simplex_basis(model: PomdpModel, h) -> SimplexBasis:
    """Fold belief updates through ``h`` starting from the unit vectors."""
    h = tuple((int(a), int(z)) for a, z in h)
    if not h:
        raise ModelError("history must contain at least one pair")
    pts = np.eye(model.num_states)
    for a, z in h:
        model.check_action(a)
        model.check_observation(z)
        v = pts @ model.joint[a, z].T
        p = v.sum(axis=1)
        keep = p > UPDATE_TOL
        pts = v[keep] / p[keep, None]
        if pts.shape[0] == 0:
            break
    return SimplexBasis(pts.reshape(-1, model.num_states), ("history", h))


@dataclass(frozen=True)
class ObservationSupport:
    pair: tuple
    states: tuple


def observation_support(model: PomdpModel, a: int, z: int) -> ObservationSupport:
    model.check_action(a)
    model.check_observation(z)
    states = tuple(int(s) for s in np.nonzero(model.observation[a, :, z] > 0.0)[0])
    return ObservationSupport((int(a), int(z)), states)


def phi_simplex_basis(model: PomdpModel, a: int, z: int) -> SimplexBasis:
    sup = observation_support(model, a, z).states
    pts = np.zeros((len(sup), model.num_states))
    pts[np.arange(len(sup)), list(sup)] = 1.0
    return SimplexBasis(pts, ("phi", (int(a), int(z))))


@dataclass(frozen=True)
class InformativenessReport:
    sizes: dict  # (a, z) -> |S^az|
    num_states: int

    @property
    def max_size(self) -> int:
        return max(self.sizes.values()) if self.sizes else 0

    def mean_fraction(self, a: int) -> float:
        vals = [n for (b, _), n in self.sizes.items() if b == a]
        return float(np.mean(vals)) / self.num_states if vals else 1.0


def informativeness_report(model: PomdpModel) -> InformativenessReport:
    """Support sizes for every realizable pair."""
    sizes = {}
    for a, z in model.realizable_pairs:
        sizes[(a, z)] = int((model.observation[a, :, z] > 0.0).sum())
    return InformativenessReport(sizes, model.num_states)


# -- convex hull membership ---------------------------------------------------

def hull_coefficients(point, points, tol: float = PROB_TOL):
    """Convex weights expressing ``point`` over rows of ``points``, or None.

    Solves min e s.t. |points^T lam - point| <= e, lam >= 0, sum lam = 1 and
    accepts when e <= tol.
    """
    from ._kernels import OPTIMAL, simplex_max

    P = np.asarray(points, dtype=np.float64)
    x = np.asarray(point, dtype=np.float64)
    k, d = P.shape
    if k == 0:
        return None
    # variables: lam (k), e;  maximize -e
    A = np.zeros((2 * d + 2, k + 1))
    A[:d, :k] = P.T
    A[:d, k] = -1.0
    A[d:2 * d, :k] = -P.T
    A[d:2 * d, k] = -1.0
    A[2 * d, :k] = 1.0
    A[2 * d + 1, :k] = -1.0
    b = np.concatenate([x, -x, [1.0, -1.0]])
    c = np.zeros(k + 1)
    c[k] = -1.0
    status, sol, _, _ = simplex_max(c, A, b)
    if status != OPTIMAL:
        return None
    lam = np.clip(sol[:k], 0.0, None)
    lam = lam / lam.sum()
    if np.abs(lam @ P - x).max() > tol:
        return None
    return lam


def minimal_basis(basis: SimplexBasis, return_coefficients: bool = False):
    """Drop points that are convex combinations of the others.

    Points are examined from last to first so the first copy of a duplicate
    survives.  With ``return_coefficients`` also returns a dict mapping each
    removed input index to its weights over the kept points.
    """
    P = basis.points
    alive = list(range(len(P)))
    for i in reversed(range(len(P))):
        others = [j for j in alive if j != i]
        if others and hull_coefficients(P[i], P[others]) is not None:
            alive.remove(i)
    out = SimplexBasis(P[alive], basis.tag)
    if not return_coefficients:
        return out
    coeffs = {}
    for i in range(len(P)):
        if i not in alive:
            coeffs[i] = hull_coefficients(P[i], P[alive])
    return out, coeffs


def in_hull(point, basis: SimplexBasis, tol: float = 1e-7) -> bool:
    return hull_coefficients(point, basis.points, tol) is not None
