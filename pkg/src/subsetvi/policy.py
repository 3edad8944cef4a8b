"""Policies from value functions, QMDP, and Monte-Carlo evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dp import SimplexFamily
from .geometry import VectorSet
from .model import PomdpModel, belief_update

QMDP_RESIDUAL = 1e-8


class PolicyError(RuntimeError):
    """A next belief fell outside every region of a simplex family."""


def _family_value(family: SimplexFamily, key, J):
    """max_alpha alpha . J for an unnormalized next-belief mass vector J."""
    vs = family.vectors(key)
    if vs.support is not None:
        sup = list(vs.support)
        if np.abs(np.delete(J, sup)).max(initial=0.0) > 1e-12 * max(1.0, J.sum()):
            raise PolicyError(f"next belief leaves the support of simplex {key}")
        J = J[sup]
    return float((vs.values @ J).max())


def lookahead(model: PomdpModel, V, b) -> np.ndarray:
    """Q(b, a) = r(b, a) + discount * sum_z P(z|b,a) V(tau(b,a,z)) for every action.

    ``V`` is a VectorSet over the full state space or a SimplexFamily.
    Zero-probability observations contribute nothing.
    """
    b = np.asarray(b, dtype=np.float64)
    # J[a, z, s'] = sum_s b(s) P(s'|s,a) P(z|s',a) = P(z|b,a) tau(b,a,z)(s')
    J = np.einsum("azys,s->azy", model.joint, b)
    q = b @ model.reward
    lam = model.discount
    A, Z = model.num_actions, model.num_observations
    if isinstance(V, SimplexFamily):
        for a in range(A):
            acc = 0.0
            for z in range(Z):
                if J[a, z].sum() <= 0.0:
                    continue
                key = V.key_for(a, z)
                if key not in V.entries:
                    raise PolicyError(f"no value function for simplex {key}")
                acc += _family_value(V, key, J[a, z])
            q[a] += lam * acc
        return q
    vals = np.asarray(V.values if isinstance(V, VectorSet) else V)
    if isinstance(V, VectorSet) and V.support is not None:
        raise PolicyError("reduced-dimension sets must be wrapped in a family")
    proj = J @ vals.T  # (A, Z, n)
    live = J.sum(axis=2) > 0.0
    best = np.where(live, proj.max(axis=2), 0.0)
    return q + lam * best.sum(axis=1)


def improving_action(model: PomdpModel, V, b):
    """Greedy one-step lookahead action (ties to the lowest index) and its value."""
    q = lookahead(model, V, b)
    a = int(np.argmax(q))
    return a, float(q[a])


class Policy:
    kind = "abstract"

    def action(self, b) -> int:
        raise NotImplementedError


class ImprovingPolicy(Policy):
    kind = "improving"

    def __init__(self, model: PomdpModel, value):
        self.model = model
        self.value = value

    def action(self, b) -> int:
        return improving_action(self.model, self.value, b)[0]


class QmdpPolicy(Policy):
    kind = "qmdp"

    def __init__(self, Q: np.ndarray):
        self.Q = np.asarray(Q)

    def action(self, b) -> int:
        return int(np.argmax(np.asarray(b) @ self.Q))


class VectorPolicy(Policy):
    """Action of the maximizing vector at b (no lookahead)."""

    kind = "vector"

    def __init__(self, vs: VectorSet):
        self.vs = vs

    def action(self, b) -> int:
        return int(self.vs.actions[int(np.argmax(self.vs.values @ np.asarray(b)))])


def mdp_q_values(model: PomdpModel, tol: float = QMDP_RESIDUAL, max_iter: int = 100000) -> np.ndarray:
    """Q(s, a) of the fully observable MDP by value iteration to residual ``tol``."""
    T, R, lam = model.transition, model.reward, model.discount
    V = np.zeros(model.num_states)
    for _ in range(max_iter):
        Q = R + lam * np.einsum("sat,t->sa", T, V)
        V_new = Q.max(axis=1)
        if np.abs(V_new - V).max() <= tol:
            V = V_new
            break
        V = V_new
    return R + lam * np.einsum("sat,t->sa", T, V)


def qmdp_policy(model: PomdpModel) -> QmdpPolicy:
    return QmdpPolicy(mdp_q_values(model))


@dataclass(frozen=True)
class SimulationReport:
    trials: int
    horizon: int
    mean: float
    stderr: float
    seed: int
    returns: tuple = ()

    CSV_HEADER = "trials,horizon,mean,stderr,seed"

    def csv_row(self) -> str:
        return f"{self.trials},{self.horizon},{self.mean!r},{self.stderr!r},{self.seed}"

    def summary(self) -> str:
        return (f"{self.trials} trials x {self.horizon} steps (seed {self.seed}): "
                f"mean discounted return {self.mean:.6f} +/- {self.stderr:.6f} (s.e.)")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """PCG64 stream for one trial, derived from (seed, trial)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(trial)])))


def run_trial(model: PomdpModel, policy: Policy, horizon: int, rng: np.random.Generator) -> float:
    S = model.num_states
    b = rng.dirichlet(np.ones(S))
    s = int(rng.choice(S, p=b))
    total, disc = 0.0, 1.0
    for _ in range(horizon):
        a = policy.action(b)
        total += disc * model.reward[s, a]
        disc *= model.discount
        s2 = int(rng.choice(S, p=model.transition[s, a]))
        z = int(rng.choice(model.num_observations, p=model.observation[a, s2]))
        nb = belief_update(model, b, a, z)
        if nb is None:  # numerically impossible observation; keep the predicted belief
            nb = b @ model.transition[:, a, :]
        b, s = nb, s2
    return total


def simulate(model: PomdpModel, policy: Policy, trials: int = 1000, horizon: int = 100,
             seed: int = 0) -> SimulationReport:
    """Mean discounted return over independent trials from random initial beliefs."""
    returns = np.array([run_trial(model, policy, horizon, trial_rng(seed, t))
                        for t in range(trials)])
    se = float(returns.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return SimulationReport(trials, horizon, float(returns.mean()), se, int(seed), tuple(returns))
