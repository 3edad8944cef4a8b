"""Benchmark model generators.

Layouts for the maze and office problems are canonical substitutes: they
satisfy every textual constraint on the originals (location counts,
observation strings, goal locations) and are documented here as data.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..model import PomdpModel

DIRS = ("E", "S", "W", "N")
STEP = {"E": (0, 1), "S": (1, 0), "W": (0, -1), "N": (-1, 0)}


class GeneratorError(ValueError):
    pass


# -- three-state example ------------------------------------------------------------

EXAMPLE3_A1 = (0.5, 0.4, 0.1)
EXAMPLE3_A2 = (0.45, 0.25, 0.05)


def example3(p1=EXAMPLE3_A1, p2=EXAMPLE3_A2, q=0.5, reward=None, discount=0.95) -> PomdpModel:
    """Three states, two actions, two observations.

    For action a with triple p: P(s1|s_i,a) = P(s2|s_i,a) = p_i and
    P(s3|s_i,a) = 1 - 2 p_i; both observations have probability q / 1-q
    everywhere.  Rewards default to zero.
    """
    T = np.zeros((3, 2, 3))
    for a, p in enumerate((p1, p2)):
        p = np.asarray(p, dtype=np.float64)
        if np.any(p < 0) or np.any(1 - 2 * p < 0):
            raise GeneratorError(f"invalid transition triple {tuple(p)}")
        T[:, a, 0] = p
        T[:, a, 1] = p
        T[:, a, 2] = np.round(1 - 2 * p, 12)  # keep decimal inputs exact
    O = np.zeros((2, 3, 2))
    O[:, :, 0] = q
    O[:, :, 1] = 1 - q
    R = np.zeros((3, 2)) if reward is None else np.asarray(reward, dtype=np.float64)
    return PomdpModel(T, O, R, discount, ("s1", "s2", "s3"), ("a1", "a2"), ("z1", "z2"),
                      note=f"example3 a1={tuple(p1)} a2={tuple(p2)} q={q}")


# -- grid helpers ---------------------------------------------------------------------

class Layout:
    """Cells on a grid with open edges between listed neighbours.

    ``walls`` maps (cell, direction) to a boundary letter for closed sides;
    missing entries read as ``w``.
    """

    def __init__(self, cells, open_edges=None, boundary=None):
        self.cells = list(cells)
        self.index = {c: i for i, c in enumerate(self.cells)}
        self.boundary = dict(boundary or {})
        if open_edges is None:  # all grid neighbours connected
            open_edges = set()
            for c in self.cells:
                for d in DIRS:
                    n = (c[0] + STEP[d][0], c[1] + STEP[d][1])
                    if n in self.index:
                        open_edges.add(frozenset((c, n)))
        self.open_edges = set(open_edges)

    def neighbour(self, i, d):
        c = self.cells[i]
        n = (c[0] + STEP[d][0], c[1] + STEP[d][1])
        if n in self.index and frozenset((c, n)) in self.open_edges:
            return self.index[n]
        return None

    def string(self, i):
        c = self.cells[i]
        return "".join("o" if self.neighbour(i, d) is not None else self.boundary.get((c, d), "w")
                       for d in DIRS)

    def move_dist(self, i, d, intended=0.8, stay=0.1, overshoot=0.1):
        """Next-cell distribution for a move: intended, no effect, or two steps."""
        out = np.zeros(len(self.cells))
        one = self.neighbour(i, d)
        if one is None:
            out[i] = 1.0
            return out, True
        two = self.neighbour(one, d)
        out[one] += intended
        out[i] += stay
        out[two if two is not None else one] += overshoot
        return out, False


def _one_off(a, b):
    return len(a) == len(b) and sum(x != y for x, y in zip(a, b)) == 1


# -- mazes -----------------------------------------------------------------------------

# Ten locations: a bottom corridor 1..6 with two columns rising above 3 and 4.
#   9  10
#   7   8
# 1 2 3 4 5 6
MAZE_CELLS = [(2, 0), (2, 1), (2, 2), (2, 3), (2, 4), (2, 5), (1, 2), (1, 3), (0, 2), (0, 3)]
MAZE_EDGES = {frozenset(e) for e in [
    ((2, 0), (2, 1)), ((2, 1), (2, 2)), ((2, 2), (2, 3)), ((2, 3), (2, 4)), ((2, 4), (2, 5)),
    ((2, 2), (1, 2)), ((1, 2), (0, 2)), ((2, 3), (1, 3)), ((1, 3), (0, 3)),
]}
MAZE_STRINGS = ("owww", "owow", "owoo", "wwow", "wowo", "woww")
MAZE_GOAL, MAZE_PENALTY = 8, 9  # locations 9 and 10 (0-based)


def maze_layout() -> Layout:
    return Layout(MAZE_CELLS, MAZE_EDGES)


def _moves(layout, n_extra_states=0):
    S = len(layout.cells) + n_extra_states
    T = np.zeros((S, 4, S))
    bump = np.zeros((S, 4), dtype=bool)
    for i in range(len(layout.cells)):
        for k, d in enumerate(DIRS):
            dist, blocked = layout.move_dist(i, d)
            T[i, k, :len(layout.cells)] = dist
            bump[i, k] = blocked
    for i in range(len(layout.cells), S):
        T[i, :, i] = 1.0
    return T, bump


def maze1(discount=0.95) -> PomdpModel:
    """Four moves and declare; the ideal string is observed with certainty."""
    lay = maze_layout()
    S, Z = 10, len(MAZE_STRINGS)
    Tm, _ = _moves(lay)
    T = np.zeros((S, 5, S))
    T[:, :4] = Tm
    T[:, 4] = np.eye(S)
    obs_of = [MAZE_STRINGS.index(lay.string(i)) for i in range(S)]
    O = np.zeros((5, S, Z))
    for s in range(S):
        O[:, s, obs_of[s]] = 1.0
    R = np.zeros((S, 5))
    R[MAZE_GOAL, 4] = 1.0
    R[MAZE_PENALTY, 4] = -1.0
    return PomdpModel(T, O, R, discount, tuple(f"loc{i + 1}" for i in range(S)),
                      ("east", "south", "west", "north", "declare"), MAZE_STRINGS,
                      note="maze1 canonical layout")


def maze2(discount=0.95, move_cost=2.0) -> PomdpModel:
    """Four moves, stay and declare; null observations and misread strings."""
    lay = maze_layout()
    S = 10
    names = MAZE_STRINGS + ("null",)
    Z = len(names)
    null = Z - 1
    Tm, _ = _moves(lay)
    T = np.zeros((S, 6, S))
    T[:, :4] = Tm
    T[:, 4] = np.eye(S)
    T[:, 5] = np.eye(S)
    O = np.zeros((6, S, Z))
    misread = {"owow": "owww", "woww": "wowo"}
    for s in range(S):
        ideal = lay.string(s)
        zi = names.index(ideal)
        for a in range(4):
            if ideal in misread:
                O[a, s, zi] = 0.9
                O[a, s, names.index(misread[ideal])] = 0.1
            else:
                O[a, s, zi] = 1.0
        O[4, s, null] = 0.9
        O[4, s, zi] = 0.1
        O[5, s, null] = 1.0
    R = np.zeros((S, 6))
    R[:, :4] = -move_cost
    R[MAZE_GOAL, 5] = 1.0
    R[MAZE_PENALTY, 5] = -1.0
    return PomdpModel(T, O, R, discount, tuple(f"loc{i + 1}" for i in range(S)),
                      ("east", "south", "west", "north", "stay", "declare"), names,
                      note="maze2 canonical layout")


# -- elevator --------------------------------------------------------------------------

BUTTONS = ("pickup1", "pickup2", "drop1", "drop2")
ARRIVAL = ((0.4, 0.1), (0.1, 0.4), (0.25, 0.25))  # per pattern, per floor


def elevator(patterns=3, requests=4, discount=0.95, stay_prob=0.9) -> PomdpModel:
    """Two-floor elevator with hidden arrival pattern.

    State = (pattern, request buttons, floor); buttons are the first
    ``requests`` of pickup1, pickup2, drop1, drop2.  Each step the pattern
    persists with ``stay_prob`` and otherwise moves uniformly to another.
    ``stay`` serves the current floor: its pickup and drop-off are cleared
    and a served pickup sets the drop-off for the other floor.  Then each
    unset pickup button is set with the arrival rate of the current pattern
    (high/low, low/high, equal).  Moves that leave the building are
    self-loops.  Reward is -0.25 per set request not served by the action.
    The observation is the state without the pattern.
    """
    if not (1 <= patterns <= 3 and 1 <= requests <= 4):
        raise GeneratorError("patterns must be in 1..3 and requests in 1..4")
    P, k = patterns, requests
    nb = 2 ** k
    S, A, Z = P * nb * 2, 3, nb * 2

    def sidx(p, bits, f):
        return (p * nb + bits) * 2 + f

    if P == 1:
        pat = np.ones((1, 1))
    else:
        pat = np.full((P, P), (1 - stay_prob) / (P - 1))
        np.fill_diagonal(pat, stay_prob)
    T = np.zeros((S, A, S))
    R = np.zeros((S, A))
    for p in range(P):
        for bits in range(nb):
            on = [bool(bits >> j & 1) for j in range(k)] + [False] * (4 - k)
            for f in range(2):
                s = sidx(p, bits, f)
                for a in range(A):  # 0 go.up, 1 go.down, 2 stay
                    nf = f
                    served = [False] * 4
                    new = list(on)
                    if a == 0 and f == 0:
                        nf = 1
                    elif a == 1 and f == 1:
                        nf = 0
                    elif a == 2:
                        served[f] = True          # pickup at this floor
                        served[2 + f] = True      # drop-off at this floor
                        boarded = on[f]
                        new[f] = False
                        new[2 + f] = False
                        if boarded:
                            new[2 + (1 - f)] = True
                    R[s, a] = -0.25 * sum(1 for j in range(k) if on[j] and not served[j])
                    # arrivals on unset pickup buttons
                    free = [j for j in range(min(k, 2)) if not new[j]]
                    for hits in itertools.product((False, True), repeat=len(free)):
                        pr = 1.0
                        nxt = list(new)
                        for j, h in zip(free, hits):
                            q = ARRIVAL[p][j]
                            pr *= q if h else 1 - q
                            nxt[j] = nxt[j] or h
                        nbits = sum(1 << j for j in range(k) if nxt[j])
                        for p2 in range(P):
                            T[s, a, sidx(p2, nbits, nf)] += pr * pat[p, p2]
    O = np.zeros((A, S, Z))
    for p in range(P):
        for bits in range(nb):
            for f in range(2):
                O[:, sidx(p, bits, f), bits * 2 + f] = 1.0
    snames = tuple(f"p{p + 1}_{bits:0{k}b}_f{f + 1}" for p in range(P) for bits in range(nb)
                   for f in range(2))
    znames = tuple(f"o{bits:0{k}b}_f{f + 1}" for bits in range(nb) for f in range(2))
    return PomdpModel(T, O, R, discount, snames, ("go.up", "go.down", "stay"), znames,
                      note=f"elevator patterns={P} requests={k}")


# -- office ----------------------------------------------------------------------------

# 34 locations: two ten-cell corridors joined by four connectors, plus a
# six-cell lower corridor.  Closed sides read w (wall), d (door) or b
# (board); the labels give 22 distinct look strings.
OFFICE_ROWS = ("..........", ".  .  .  .", "..........", ".  .  .  .", "......")
OFFICE_BOUNDARY = {
    ((0, 0), "N"): "d", ((0, 1), "N"): "b", ((0, 3), "N"): "d", ((0, 6), "N"): "d",
    ((0, 9), "E"): "d", ((0, 9), "N"): "d", ((1, 0), "E"): "d", ((1, 3), "E"): "b",
    ((1, 6), "W"): "d", ((1, 9), "W"): "b", ((2, 1), "N"): "d", ((2, 1), "S"): "b",
    ((2, 2), "N"): "d", ((2, 2), "S"): "d", ((2, 4), "S"): "b", ((2, 5), "N"): "d",
    ((2, 7), "S"): "b", ((2, 8), "N"): "d", ((4, 1), "S"): "d", ((4, 3), "S"): "d",
    ((4, 5), "E"): "b",
}
OFFICE_GOAL = 21  # location 22 (0-based)


def office_layout() -> Layout:
    cells = [(r, c) for r, row in enumerate(OFFICE_ROWS) for c, ch in enumerate(row) if ch == "."]
    return Layout(cells, None, OFFICE_BOUNDARY)


def _look_model(lay, strings, ideal_p, null_p, off_p, null_index):
    """Look observation rows: ideal / null / one-character-off strings.

    Mass left over from ``ideal_p + null_p + off_p`` goes to the ideal
    string, as does ``off_p`` when no other location's string is one
    character away.
    """
    n = len(lay.cells)
    rows = np.zeros((n, len(strings) + (1 if null_index is not None else 0)))
    for i in range(n):
        s = lay.string(i)
        zi = strings.index(s)
        near = [j for j, t in enumerate(strings) if _one_off(s, t)]
        rows[i, zi] += 1.0 - null_p - (off_p if near else 0.0)
        if null_index is not None:
            rows[i, null_index] += null_p
        for j in near:
            rows[i, j] += off_p / len(near)
    return rows


def office(discount=0.95) -> PomdpModel:
    """34 locations plus a terminal state; moves, look and beep."""
    lay = office_layout()
    n = len(lay.cells)
    strings = sorted({lay.string(i) for i in range(n)})
    S, A = n + 1, 6
    Z = len(strings) + 1
    null = Z - 1
    term = n
    Tm, bump = _moves(lay, 1)
    T = np.zeros((S, A, S))
    T[:, :4] = Tm
    T[:, 4] = np.eye(S)
    T[:, 5] = np.eye(S)
    T[OFFICE_GOAL, 5] = 0.0
    T[OFFICE_GOAL, 5, term] = 1.0
    O = np.zeros((A, S, Z))
    O[:, :, null] = 1.0
    O[4, :n] = _look_model(lay, strings, 0.75, 0.05, 0.05, null)
    R = np.zeros((S, A))
    R[:n, :4] = np.where(bump[:n], -2.0, 0.0)
    R[:n, 4] = -1.0
    R[:n, 5] = -10.0
    R[OFFICE_GOAL, 5] = 50.0
    return PomdpModel(T, O, R, discount, tuple(f"loc{i + 1}" for i in range(n)) + ("terminal",),
                      ("east", "south", "west", "north", "look", "beep"),
                      tuple(strings) + ("null",), note="office canonical floor plan")


# -- random and grid families -------------------------------------------------------------

def _sparse_rows(rng, shape, sparsity):
    P = rng.dirichlet(np.ones(shape[-1]), size=shape[:-1])
    if sparsity > 0:
        mask = rng.random(P.shape) < sparsity
        keep = rng.integers(0, shape[-1], size=shape[:-1])
        np.put_along_axis(mask, keep[..., None], False, axis=-1)
        P = np.where(mask, 0.0, P)
        P /= P.sum(axis=-1, keepdims=True)
    return P


def random_model(seed=0, states=3, actions=2, observations=2, sparsity=0.0,
                 discount=0.95) -> PomdpModel:
    """Dirichlet(1) rows with a fraction ``sparsity`` of entries zeroed; rewards U[-1, 1]."""
    if not 0.0 <= sparsity < 1.0:
        raise GeneratorError("sparsity must lie in [0, 1)")
    rng = np.random.Generator(np.random.PCG64(seed))
    T = _sparse_rows(rng, (states, actions, states), sparsity)
    O = _sparse_rows(rng, (actions, states, observations), sparsity)
    R = rng.uniform(-1.0, 1.0, size=(states, actions))
    return PomdpModel(T, O, R, discount,
                      note=f"random seed={seed} sizes=({states},{actions},{observations}) "
                           f"sparsity={sparsity}")


def near_discernible_grid(seed=0, rows=2, cols=3, walls=1, discount=0.95,
                          look_ideal=0.85, look_cost=0.05) -> PomdpModel:
    """Grid navigation where only ``look`` is informative.

    Seeded choices: ``walls`` interior walls (kept only if the grid stays
    connected) and the goal cell.  Moves and declare return ``null``; look
    returns the ideal E/S/W/N string with ``look_ideal`` and a string one
    character away otherwise (ideal when none exists).  Declaring at the goal
    pays 1 and restarts at a uniformly random cell; declaring elsewhere
    costs 1.  Look costs ``look_cost``; moves are free.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    lay = Layout(cells)
    inner = sorted(lay.open_edges, key=lambda e: sorted(e))
    order = rng.permutation(len(inner))
    removed = 0
    for j in order:
        if removed >= walls:
            break
        trial = lay.open_edges - {inner[j]}
        if _connected(cells, trial):
            lay.open_edges = trial
            removed += 1
    n = len(cells)
    goal = int(rng.integers(n))
    strings = sorted({lay.string(i) for i in range(n)})
    Z = len(strings) + 1
    null = Z - 1
    A = 6
    Tm, _ = _moves(lay)
    T = np.zeros((n, A, n))
    T[:, :4] = Tm
    T[:, 4] = np.eye(n)
    T[:, 5] = np.eye(n)
    T[goal, 5] = 1.0 / n
    O = np.zeros((A, n, Z))
    O[:, :, null] = 1.0
    O[4] = _look_model(lay, strings, look_ideal, 0.0, 1.0 - look_ideal, null)
    R = np.zeros((n, A))
    R[:, 4] = -look_cost
    R[:, 5] = -1.0
    R[goal, 5] = 1.0
    return PomdpModel(T, O, R, discount, tuple(f"c{r}{c}" for r, c in cells),
                      ("east", "south", "west", "north", "look", "declare"),
                      tuple(strings) + ("null",),
                      note=f"near-discernible grid seed={seed} dims={rows}x{cols} "
                           f"walls={removed} goal=c{cells[goal][0]}{cells[goal][1]}")


def _connected(cells, edges):
    adj = {c: [] for c in cells}
    for e in edges:
        a, b = tuple(e)
        adj[a].append(b)
        adj[b].append(a)
    seen, stack = {cells[0]}, [cells[0]]
    while stack:
        for n in adj[stack.pop()]:
            if n not in seen:
                seen.add(n)
                stack.append(n)
    return len(seen) == len(cells)


GENERATORS = {
    "example3": example3,
    "maze1": maze1,
    "maze2": maze2,
    "elevator": elevator,
    "office": office,
    "random": random_model,
    "grid": near_discernible_grid,
}


def generate(problem: str, **params) -> PomdpModel:
    try:
        fn = GENERATORS[problem]
    except KeyError:
        raise GeneratorError(f"unknown problem {problem!r}; choose from {sorted(GENERATORS)}") from None
    try:
        return fn(**params)
    except TypeError as exc:
        raise GeneratorError(str(exc)) from None
