"""Top-level value iteration algorithms and their stopping rules."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dp import (ENUM_CAP, DpUpdateStats, ResourceError, SimplexFamily, bellman_residual,
                 dp_update_phi, dp_update_space, dp_update_subset_collective,
                 dp_update_subset_collective_info, dp_update_subset_individual,
                 family_residual, phi_family, tau_family)
from .geometry import VectorSet, dedupe, union_prune
from .lp import MARGIN
from .model import (PomdpModel, history_simplex_basis, informativeness_report, minimal_basis,
                    tau_simplex_basis)

MYOPIC_DISCOUNT = 1e-9
MYOPIC_RESIDUAL = 1e-12

RESIDUAL_MET = "residual-met"
ITERATION_CAP = "iteration-cap"
SPVI_RICH = "spvi-all-information-rich"
RESOURCE_ABORT = "resource-abort"


def loose_threshold(epsilon: float, discount: float) -> float:
    """epsilon (1 - discount) / (2 discount): residual target over the whole space."""
    if discount < MYOPIC_DISCOUNT:
        return MYOPIC_RESIDUAL
    return epsilon * (1.0 - discount) / (2.0 * discount)


def strict_threshold(epsilon: float, discount: float, num_observations: int) -> float:
    """epsilon (1 - discount) / (2 discount^2 |Z|): residual target over a subset."""
    if discount < MYOPIC_DISCOUNT:
        return MYOPIC_RESIDUAL
    strict = epsilon * (1.0 - discount) / (2.0 * discount ** 2 * num_observations)
    if discount * num_observations >= 1.0:
        assert strict <= loose_threshold(epsilon, discount) * (1 + 1e-12)
    return strict


@dataclass
class SolveConfig:
    epsilon: float = 0.01
    max_iterations: int = 1000
    mode: str = "collective"          # ssVI: collective | individual
    criterion: Optional[str] = None   # loose | strict; None = algorithm default
    seed: int = 0
    enum_cap: int = ENUM_CAP
    incremental: bool = False         # prune partial cross-sums
    survivors: bool = False           # prune against the running survivor set
    margin: float = MARGIN
    minimal_bases: bool = True
    deadline: Optional[float] = None  # seconds of wall clock for the whole run
    max_expansions: Optional[int] = None
    exhaustive_expansion: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1 or self.enum_cap < 1:
            raise ValueError("caps must be positive")
        if self.mode not in ("collective", "individual"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.criterion not in (None, "loose", "strict"):
            raise ValueError(f"unknown criterion {self.criterion!r}")

    def dp_kwargs(self):
        return dict(margin=self.margin, incremental=self.incremental,
                    survivors=self.survivors, enum_cap=self.enum_cap)


@dataclass
class IterationStats:
    iteration: int
    region: str
    enumerated: int
    kept: int
    lp_count: int
    residual: float
    seconds: float


@dataclass
class SolveResult:
    value: object                      # VectorSet or SimplexFamily
    stats: list
    reason: str
    residual: float
    algorithm: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.stats)

    @property
    def converged(self) -> bool:
        return self.reason in (RESIDUAL_MET, SPVI_RICH)


def _threshold(model, cfg, default):
    kind = cfg.criterion or default
    if kind == "loose":
        return loose_threshold(cfg.epsilon, model.discount)
    return strict_threshold(cfg.epsilon, model.discount, model.num_observations)


def _count(value):
    return value.total_count() if isinstance(value, SimplexFamily) else len(value)


def _iterate(model, cfg, init, step, residual, threshold, algorithm):
    """Shared loop: step until the residual meets the threshold; return the previous iterate."""
    start = time.perf_counter()
    stats = []
    V = init
    res = np.inf
    for n in range(1, cfg.max_iterations + 1):
        try:
            V_new, st = step(V)
        except ResourceError as exc:
            return SolveResult(V, stats, RESOURCE_ABORT, res, algorithm, {"error": str(exc)})
        res, lps = residual(V_new, V)
        stats.append(IterationStats(n, st.region, st.enumerated_count, _count(V_new),
                                    st.lp_count + lps, float(res),
                                    time.perf_counter() - start))
        if res <= threshold:
            return SolveResult(V, stats, RESIDUAL_MET, float(res), algorithm,
                               {"threshold": threshold, "latest": V_new})
        V = V_new
        if cfg.deadline is not None and time.perf_counter() - start > cfg.deadline:
            break
    return SolveResult(V, stats, ITERATION_CAP, float(res), algorithm, {"threshold": threshold})


def zero_set(model) -> VectorSet:
    return VectorSet(np.zeros((1, model.num_states)))


def solve_vi(model: PomdpModel, cfg: SolveConfig = None) -> SolveResult:
    """Value iteration over the whole belief space from the zero vector."""
    cfg = cfg or SolveConfig()
    thr = _threshold(model, cfg, "loose")
    kw = cfg.dp_kwargs()
    return _iterate(model, cfg, zero_set(model),
                    lambda V: dp_update_space(model, V, **kw),
                    lambda a, b: bellman_residual(a, b, None, return_lps=True),
                    thr, "vi")


def tau_bases(model: PomdpModel, minimal: bool = True) -> list:
    """Bases of all realizable tau-simplices in (a, z) order."""
    out = []
    for a, z in model.realizable_pairs:
        b = tau_simplex_basis(model, a, z)
        if not b.empty:
            out.append(minimal_basis(b) if minimal else b)
    return out


def solve_ssvi(model: PomdpModel, cfg: SolveConfig = None) -> SolveResult:
    """Value iteration over the one-step reachable subset tau(B)."""
    cfg = cfg or SolveConfig()
    thr = _threshold(model, cfg, "strict")
    kw = cfg.dp_kwargs()
    if cfg.mode == "collective":
        bases = tau_bases(model, cfg.minimal_bases)
        return _iterate(model, cfg, zero_set(model).with_region(("union",)),
                        lambda V: dp_update_subset_collective(model, V, bases, **kw),
                        lambda a, b: bellman_residual(a, b, bases, return_lps=True),
                        thr, "ssvi")
    fam = tau_family(model)
    if cfg.minimal_bases:
        fam = SimplexFamily({k: (minimal_basis(b), v) for k, (b, v) in fam.entries.items()},
                            fam.keyed_by, fam.region)
    return _iterate(model, cfg, fam,
                    lambda F: dp_update_subset_individual(model, F, **kw),
                    lambda a, b: family_residual(a, b, return_lps=True),
                    thr, "ssvi")


def solve_infovi(model: PomdpModel, cfg: SolveConfig = None) -> SolveResult:
    """Value iteration over phi(B) with vectors on observation supports."""
    cfg = cfg or SolveConfig()
    thr = _threshold(model, cfg, "strict")
    kw = cfg.dp_kwargs()
    fam = phi_family(model)
    if not fam.entries:
        raise ValueError("model has no realizable observation supports")
    return _iterate(model, cfg, fam,
                    lambda F: dp_update_phi(model, F, **kw),
                    lambda a, b: family_residual(a, b, return_lps=True),
                    thr, "infovi")


# -- action classes ----------------------------------------------------------------

@dataclass(frozen=True)
class ActionClassification:
    information_rich: tuple
    information_poor: tuple
    z_rich: tuple = ()
    z_poor: tuple = ()

    @classmethod
    def build(cls, model: PomdpModel, rich) -> "ActionClassification":
        rich = tuple(sorted(int(a) for a in rich))
        for a in rich:
            model.check_action(a)
        poor = tuple(a for a in range(model.num_actions) if a not in rich)

        def reach(acts):
            zs = set()
            for a in acts:
                zs.update(int(z) for z in np.nonzero((model.unit_obs_prob[a] > 0).any(axis=1))[0])
            return tuple(sorted(zs))

        return cls(rich, poor, reach(rich), reach(poor))


def classify_actions_heuristic(model: PomdpModel, fraction: float = 0.5) -> ActionClassification:
    """Rich iff the mean support fraction over realizable observations is at most ``fraction``."""
    rep = informativeness_report(model)
    rich = [a for a in range(model.num_actions) if rep.mean_fraction(a) <= fraction]
    return ActionClassification.build(model, rich)


# -- SPVI ----------------------------------------------------------------------------

def _extend(h, a, z):
    return tuple(h) + ((int(a), int(z)),)


class HistorySet:
    """Ordered set of histories with cached bases; unrealizable histories are dropped."""

    def __init__(self, model: PomdpModel, histories=(), generation: int = 0, minimal=True):
        self.model = model
        self.generation = generation
        self.minimal = minimal
        self.histories = []
        self.bases = {}
        for h in histories:
            self.add(h)

    def add(self, h) -> bool:
        h = tuple((int(a), int(z)) for a, z in h)
        if h in self.bases:
            return False
        b = history_simplex_basis(self.model, h)
        if b.empty:
            return False
        self.bases[h] = minimal_basis(b) if self.minimal else b
        self.histories.append(h)
        return True

    def __len__(self):
        return len(self.histories)

    def __contains__(self, h):
        return tuple(h) in self.bases

    def basis_list(self):
        return [self.bases[h] for h in self.histories]

    def is_maximal(self, h) -> bool:
        n = len(h)
        return not any(len(g) == n + 1 and g[:n] == tuple(h) for g in self.histories)

    def copy(self, generation=None):
        out = HistorySet(self.model, (), self.generation if generation is None else generation,
                         self.minimal)
        out.histories = list(self.histories)
        out.bases = dict(self.bases)
        return out


def initial_histories(model: PomdpModel, classes: ActionClassification, minimal=True) -> HistorySet:
    hs = [((a, z),) for a in classes.information_rich for z in classes.z_rich]
    return HistorySet(model, hs, 0, minimal)


def subset_vi(model: PomdpModel, V: VectorSet, H: HistorySet, eta: float,
              cfg: SolveConfig = None, stats: list = None, start: float = None,
              notes: dict = None):
    """Monotone value iteration over tau(B, H).

    U_{j+1} = prune(dedupe(DP(U_j) with U_j)) over the history bases until
    the residual is at most ``eta``.  Returns ``(U, reason)``; every vector
    of U carries the first history where its witness was found.  A resource
    abort message is stored under ``notes["error"]``.
    """
    cfg = cfg or SolveConfig()
    stats = [] if stats is None else stats
    start = time.perf_counter() if start is None else start
    bases = H.basis_list()
    kw = cfg.dp_kwargs()
    U, _ = _assign_histories(V.with_region(("history-union",)), H, bases, cfg)
    reason = ITERATION_CAP
    for _ in range(cfg.max_iterations):
        try:
            new, _, st = dp_update_subset_collective_info(model, U, bases, **kw)
        except ResourceError as exc:
            if notes is not None:
                notes["error"] = str(exc)
            return U, RESOURCE_ABORT
        merged = dedupe(new.with_histories(None).concat(U.with_histories(None)))
        U_new, info = _assign_histories(merged, H, bases, cfg)
        res, lps = bellman_residual(U_new.with_histories(None), U.with_histories(None), bases,
                                    return_lps=True)
        stats.append(IterationStats(len(stats) + 1, "history-union", st.enumerated_count,
                                    len(U_new), st.lp_count + info.lp_count + lps, float(res),
                                    time.perf_counter() - start))
        U = U_new
        if res <= eta:
            reason = RESIDUAL_MET
            break
        if cfg.deadline is not None and time.perf_counter() - start > cfg.deadline:
            break
    return U, reason


def _assign_histories(vs: VectorSet, H: HistorySet, bases, cfg):
    kept, info = union_prune(vs, bases, cfg.margin, cfg.survivors, return_info=True)
    hist = tuple(H.histories[info.basis_index[i]] for i in range(len(kept)))
    return kept.with_histories(hist), info


def expand_subset(model: PomdpModel, V: VectorSet, H: HistorySet,
                  classes: ActionClassification, exhaustive: bool = False) -> HistorySet:
    """Extend maximal histories whose vectors prescribe information-poor actions."""
    out = H.copy(H.generation + 1)
    poor = set(classes.information_poor)
    seen = set()
    for i in range(len(V)):
        h = V.histories[i] if V.histories is not None else None
        if h is None or int(V.actions[i]) not in poor or h in seen:
            continue
        if not exhaustive and not H.is_maximal(h):
            continue
        seen.add(h)
        for a in classes.information_poor:
            for z in classes.z_poor:
                out.add(_extend(h, a, z))
    return out


def spvi_should_stop(V: VectorSet, H: HistorySet, classes: ActionClassification) -> bool:
    """True iff every vector with a maximal history prescribes an information-rich action."""
    rich = set(classes.information_rich)
    for i in range(len(V)):
        h = V.histories[i] if V.histories is not None else None
        if h is not None and H.is_maximal(h) and int(V.actions[i]) not in rich:
            return False
    return True


def spvi_history_bound(classes: ActionClassification, i: int) -> int:
    """|A_IR||Z_IR|(|A_IP||Z_IP|)^i."""
    k = len(classes.information_poor) * len(classes.z_poor)
    return len(classes.information_rich) * len(classes.z_rich) * k ** i


def solve_spvi(model: PomdpModel, cfg: SolveConfig = None,
               classes: ActionClassification = None) -> SolveResult:
    """Anytime interleaving of subset value iteration and history expansion."""
    cfg = cfg or SolveConfig()
    classes = classes or classify_actions_heuristic(model)
    if not classes.information_rich:
        raise ValueError("SPVI requires information-rich actions")
    start = time.perf_counter()
    H = initial_histories(model, classes, cfg.minimal_bases)
    if len(H) == 0:
        raise ValueError("no realizable information-rich history")
    V = VectorSet(np.full((1, model.num_states), float(model.reward.min())))
    eta = loose_threshold(cfg.epsilon, model.discount)
    stats = []
    generations = []
    notes = {}
    reason = ITERATION_CAP
    i = 0
    while True:
        V, sub_reason = subset_vi(model, V, H, eta, cfg, stats, start, notes)
        generations.append({"generation": i, "histories": list(H.histories),
                            "vectors": len(V), "value": V, "subset_reason": sub_reason})
        if sub_reason == RESOURCE_ABORT:
            reason = RESOURCE_ABORT
            break
        if spvi_should_stop(V, H, classes):
            reason = SPVI_RICH
            break
        if cfg.max_expansions is not None and i >= cfg.max_expansions:
            break
        if cfg.deadline is not None and time.perf_counter() - start > cfg.deadline:
            break
        H_next = expand_subset(model, V, H, classes, cfg.exhaustive_expansion)
        if len(H_next) == len(H):
            reason = RESIDUAL_MET  # nothing left to expand: fixed point
            break
        H = H_next
        i += 1
    res = stats[-1].residual if stats else float("nan")
    extra = {"histories": H, "generations": generations, "classes": classes, "eta": eta}
    extra.update(notes)
    return SolveResult(V, stats, reason, res, "spvi", extra)


def solve(model: PomdpModel, algo: str, cfg: SolveConfig = None, classes=None) -> SolveResult:
    algo = algo.lower()
    if algo == "vi":
        return solve_vi(model, cfg)
    if algo == "ssvi":
        return solve_ssvi(model, cfg)
    if algo == "infovi":
        return solve_infovi(model, cfg)
    if algo == "spvi":
        return solve_spvi(model, cfg, classes)
    raise ValueError(f"unknown algorithm {algo!r}")
