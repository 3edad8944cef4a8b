"""Reader and writer for the standard ``.pomdp`` text format.

Supported: ``discount``, ``values``, ``states``/``actions``/``observations``
(counts or names), ``start`` (parsed and kept aside), and ``T:``/``O:``/``R:``
entries in single-value, row and matrix form with ``*`` wildcards and the
``uniform``/``identity`` keywords.  ``#`` starts a comment.
"""

from __future__ import annotations

import re
import warnings

import numpy as np

from ..model import PomdpModel

ROW_TOL = 1e-6
NEG_CLAMP = 1e-12
KEYWORDS = {"discount", "values", "states", "actions", "observations", "start", "T", "O", "R"}


class PomdpSyntaxError(ValueError):
    def __init__(self, msg, line=None, col=None):
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(msg + where)
        self.line, self.col = line, col


class RewardMarginalizedWarning(UserWarning):
    """R entries depended on next state or observation and were averaged out."""


_TOKEN = re.compile(r":|[^\s:]+")


def _tokenize(text):
    toks = []
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        for m in _TOKEN.finditer(line):
            toks.append((m.group(0), ln, m.start() + 1))
    return toks


class _Stream:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j][0] if j < len(self.toks) else None

    def where(self):
        if self.i < len(self.toks):
            return self.toks[self.i][1:]
        if self.toks:
            return (self.toks[-1][1], self.toks[-1][2] + len(self.toks[-1][0]))
        return (1, 1)

    def next(self, what="token"):
        if self.i >= len(self.toks):
            raise PomdpSyntaxError(f"unexpected end of input, expected {what}", *self.where())
        t = self.toks[self.i][0]
        self.i += 1
        return t

    def expect(self, tok):
        line, col = self.where()
        t = self.next(repr(tok))
        if t != tok:
            raise PomdpSyntaxError(f"expected {tok!r}, found {t!r}", line, col)

    def at_entry(self):
        t = self.peek()
        return t is None or (t in KEYWORDS and self.peek(1) == ":") or \
            (t in ("start",) and self.peek(1) in ("include", "exclude"))

    def number(self):
        line, col = self.where()
        t = self.next("number")
        try:
            return float(t)
        except ValueError:
            raise PomdpSyntaxError(f"expected a number, found {t!r}", line, col) from None

    def numbers(self, n):
        return np.array([self.number() for _ in range(n)])


def _names_or_count(st):
    line, col = st.where()
    items = []
    while not st.at_entry():
        items.append(st.next())
    if not items:
        raise PomdpSyntaxError("expected a count or a list of names", line, col)
    if len(items) == 1 and items[0].isdigit():
        n = int(items[0])
        if n < 1:
            raise PomdpSyntaxError("count must be positive", line, col)
        return n, None
    return len(items), tuple(items)


def _index_spec(st, names, n, what):
    line, col = st.where()
    t = st.next(what)
    if t == "*":
        return list(range(n))
    if names is not None and t in names:
        return [names.index(t)]
    if t.isdigit() and int(t) < n:
        return [int(t)]
    raise PomdpSyntaxError(f"unknown {what} {t!r}", line, col)


def parse_pomdp(text: str) -> PomdpModel:
    """Parse ``.pomdp`` text into a model (rewards negated for ``values: cost``)."""
    st = _Stream(_tokenize(text))
    discount = None
    sign = 1.0
    dims = {}
    names = {}
    T = O = R4 = None

    def ready():
        nonlocal T, O, R4
        for key in ("states", "actions", "observations"):
            if key not in dims:
                raise PomdpSyntaxError(f"'{key}' must be declared before transition entries",
                                       *st.where())
        if T is None:
            S, A, Z = dims["states"], dims["actions"], dims["observations"]
            T = np.zeros((A, S, S))
            O = np.zeros((A, S, Z))
            R4 = np.zeros((A, S, S, Z))

    while st.peek() is not None:
        line, col = st.where()
        key = st.next()
        if key == "start" and st.peek() in ("include", "exclude"):
            st.next()
            st.expect(":")
            while not st.at_entry():
                st.next()
            continue
        if key not in KEYWORDS:
            raise PomdpSyntaxError(f"unexpected token {key!r}", line, col)
        st.expect(":")
        if key == "discount":
            discount = st.number()
        elif key == "values":
            line, col = st.where()
            v = st.next("reward or cost")
            if v not in ("reward", "cost"):
                raise PomdpSyntaxError(f"values must be reward or cost, found {v!r}", line, col)
            sign = -1.0 if v == "cost" else 1.0
        elif key in ("states", "actions", "observations"):
            dims[key], names[key] = _names_or_count(st)
        elif key == "start":
            while not st.at_entry():
                st.next()
        elif key == "T":
            ready()
            S = dims["states"]
            acts = _index_spec(st, names.get("actions"), dims["actions"], "action")
            if st.peek() == ":":
                st.next()
                ss = _index_spec(st, names.get("states"), S, "state")
                if st.peek() == ":":
                    st.next()
                    es = _index_spec(st, names.get("states"), S, "state")
                    p = st.number()
                    for a in acts:
                        for s in ss:
                            T[a, s, es] = p
                else:
                    row = _row_or_keyword(st, S, allow_identity=False)
                    for a in acts:
                        for s in ss:
                            T[a, s, :] = row
            else:
                M = _matrix_or_keyword(st, S, S, allow_identity=True)
                for a in acts:
                    T[a] = M
        elif key == "O":
            ready()
            S, Z = dims["states"], dims["observations"]
            acts = _index_spec(st, names.get("actions"), dims["actions"], "action")
            if st.peek() == ":":
                st.next()
                es = _index_spec(st, names.get("states"), S, "state")
                if st.peek() == ":":
                    st.next()
                    zs = _index_spec(st, names.get("observations"), Z, "observation")
                    p = st.number()
                    for a in acts:
                        for s in es:
                            O[a, s, zs] = p
                else:
                    row = _row_or_keyword(st, Z, allow_identity=False)
                    for a in acts:
                        for s in es:
                            O[a, s, :] = row
            else:
                M = _matrix_or_keyword(st, S, Z, allow_identity=False)
                for a in acts:
                    O[a] = M
        else:  # R
            ready()
            S, Z = dims["states"], dims["observations"]
            acts = _index_spec(st, names.get("actions"), dims["actions"], "action")
            st.expect(":")
            ss = _index_spec(st, names.get("states"), S, "state")
            if st.peek() == ":":
                st.next()
                es = _index_spec(st, names.get("states"), S, "state")
                if st.peek() == ":":
                    st.next()
                    zs = _index_spec(st, names.get("observations"), Z, "observation")
                    v = st.number()
                    sel = np.ix_(acts, ss, es, zs)
                    R4[sel] = v
                else:
                    row = st.numbers(Z)
                    sel = np.ix_(acts, ss, es, range(Z))
                    R4[sel] = row
            else:
                M = st.numbers(S * Z).reshape(S, Z)
                sel = np.ix_(acts, ss, range(S), range(Z))
                R4[sel] = M

    if discount is None:
        raise PomdpSyntaxError("missing 'discount'")
    ready()
    T = _clean("transition", T, lambda a, s: f"T(a={a}, s={s})")
    O = _clean("observation", O, lambda a, s: f"O(a={a}, s'={s})")
    # r(s, a) = sum_{s', z} P(s'|s,a) P(z|s',a) R(a, s, s', z)
    w = np.einsum("ase,aez->asez", T, O)
    r = np.einsum("asez,asez->sa", w, R4)
    mixed = False
    for a in range(R4.shape[0]):
        for s in range(R4.shape[1]):
            vals = R4[a, s][w[a, s] > 0]
            if vals.size and vals.max() - vals.min() > 0:
                mixed = True
            elif vals.size:
                r[s, a] = vals[0]  # constant: keep the written value exactly
    if mixed:
        warnings.warn("rewards depend on next state or observation; marginalized to r(s, a)",
                      RewardMarginalizedWarning, stacklevel=2)
    return PomdpModel(T.transpose(1, 0, 2), O, sign * r, discount,
                      names.get("states"), names.get("actions"), names.get("observations"))


def _row_or_keyword(st, n, allow_identity):
    if st.peek() == "uniform":
        st.next()
        return np.full(n, 1.0 / n)
    return st.numbers(n)


def _matrix_or_keyword(st, rows, cols, allow_identity):
    t = st.peek()
    if t == "uniform":
        st.next()
        return np.full((rows, cols), 1.0 / cols)
    if t == "identity":
        line, col = st.where()
        st.next()
        if not allow_identity or rows != cols:
            raise PomdpSyntaxError("'identity' only applies to square transition matrices", line, col)
        return np.eye(rows)
    return st.numbers(rows * cols).reshape(rows, cols)


def _clean(name, P, label):
    """Clamp tiny negatives, check rows sum to 1 within ROW_TOL, renormalize small drift."""
    P = np.where((P < 0) & (P >= -NEG_CLAMP), 0.0, P)
    if P.min() < 0 or P.max() > 1 + NEG_CLAMP:
        a, s, _ = np.argwhere((P < 0) | (P > 1 + NEG_CLAMP))[0]
        raise PomdpSyntaxError(f"{name} probability out of range at {label(a, s)}")
    sums = P.sum(axis=2)
    bad = np.argwhere(np.abs(sums - 1.0) > ROW_TOL)
    if bad.size:
        rows = ", ".join(f"{label(a, s)} sums to {sums[a, s]:.9g}" for a, s in bad[:20])
        more = "" if len(bad) <= 20 else f" and {len(bad) - 20} more"
        raise PomdpSyntaxError(f"{name} rows are not stochastic: {rows}{more}")
    drift = np.abs(sums - 1.0) > 1e-9
    if drift.any():
        P = P.copy()
        P[drift] /= sums[drift][:, None]
    return np.minimum(P, 1.0)


def _fmt(x):
    return repr(float(x))


def _ident(names, i):
    return names[i] if names is not None else str(i)


def serialize_pomdp(model: PomdpModel) -> str:
    """Write a model in the text format; floats use ``repr`` so parsing is exact."""
    S, A, Z = model.num_states, model.num_actions, model.num_observations
    sn, an, on = model.state_names, model.action_names, model.observation_names
    out = []
    if model.note:
        for ln in model.note.splitlines():
            out.append(f"# {ln}")
    out.append(f"discount: {_fmt(model.discount)}")
    out.append("values: reward")
    out.append("states: " + (" ".join(sn) if sn else str(S)))
    out.append("actions: " + (" ".join(an) if an else str(A)))
    out.append("observations: " + (" ".join(on) if on else str(Z)))
    out.append("")
    for a in range(A):
        for s in range(S):
            out.append(f"T: {_ident(an, a)} : {_ident(sn, s)}")
            out.append(" ".join(_fmt(x) for x in model.transition[s, a]))
    out.append("")
    for a in range(A):
        for s in range(S):
            out.append(f"O: {_ident(an, a)} : {_ident(sn, s)}")
            out.append(" ".join(_fmt(x) for x in model.observation[a, s]))
    out.append("")
    for a in range(A):
        for s in range(S):
            r = model.reward[s, a]
            if r != 0.0:
                out.append(f"R: {_ident(an, a)} : {_ident(sn, s)} : * : * {_fmt(r)}")
    return "\n".join(out) + "\n"


def read_pomdp(path) -> PomdpModel:
    import sys
    if str(path) == "-":
        return parse_pomdp(sys.stdin.read())
    with open(path) as fh:
        return parse_pomdp(fh.read())


def write_pomdp(model: PomdpModel, path):
    import sys
    text = serialize_pomdp(model)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    with open(path, "w") as fh:
        fh.write(text)
