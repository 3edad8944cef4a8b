"""Alpha-vector set files, run-stats CSV and action-classification files.

Vector set file: a header ``dim=<n> region=<tag>``, then per vector an
attribute line ``action=<i> [support=<s,...>] [history=<a:z,...>]`` and a
line of n values, with a blank line between vectors.  A file may hold
several blocks (one per simplex of a family), each with its own header.
"""

from __future__ import annotations

import csv
import sys
from contextlib import contextmanager

import numpy as np

from ..dp import SimplexFamily, phi_family, tau_family
from ..geometry import VectorSet
from ..model import PomdpModel, minimal_basis
from ..solvers import ActionClassification, IterationStats

STATS_HEADER = ("iteration", "region", "enumerated", "kept", "lp_count", "residual", "seconds")


class FileFormatError(ValueError):
    def __init__(self, msg, path=None, line=None):
        where = "".join([f" in {path}" if path else "", f" at line {line}" if line else ""])
        super().__init__(msg + where)
        self.line = line


@contextmanager
def _open(path, mode):
    if path is None or str(path) == "-":
        yield sys.stdout if "w" in mode or "a" in mode else sys.stdin
    else:
        with open(path, mode, newline="" if "w" in mode or "a" in mode else None) as fh:
            yield fh


# -- region tags -------------------------------------------------------------------

def region_tag(region) -> str:
    kind = region[0]
    if len(region) == 1:
        return kind
    key = region[1]
    parts = list(key) if isinstance(key, tuple) else [key]
    return ":".join([kind] + [str(int(p)) for p in parts])


def parse_region(tag: str):
    parts = tag.split(":")
    if len(parts) == 1:
        return (parts[0],)
    nums = tuple(int(p) for p in parts[1:])
    return (parts[0], nums[0] if len(nums) == 1 else nums)


# -- vector sets -------------------------------------------------------------------

def _fmt(x):
    return "%.17g" % x


def format_vector_set(vs: VectorSet) -> str:
    out = [f"dim={vs.dim} region={region_tag(vs.region)}"]
    sup = None if vs.support is None else ",".join(str(s) for s in vs.support)
    for i in range(len(vs)):
        if i:
            out.append("")
        attrs = [f"action={int(vs.actions[i])}"]
        if sup is not None:
            attrs.append(f"support={sup}")
        h = vs.histories[i] if vs.histories is not None else None
        if h is not None:
            attrs.append("history=" + ",".join(f"{a}:{z}" for a, z in h))
        out.append(" ".join(attrs))
        out.append(" ".join(_fmt(x) for x in vs.values[i]))
    return "\n".join(out) + "\n"


def write_vector_sets(sets, path):
    """Write one VectorSet or a sequence of them as consecutive blocks."""
    if isinstance(sets, VectorSet):
        sets = [sets]
    text = "\n".join(format_vector_set(vs) for vs in sets)
    with _open(path, "w") as fh:
        fh.write(text)


def write_value(value, path):
    """Write a VectorSet or every block of a SimplexFamily."""
    if isinstance(value, SimplexFamily):
        write_vector_sets([value.vectors(k) for k in value.keys()], path)
    else:
        write_vector_sets(value, path)


def parse_vector_sets(text: str, path=None) -> list:
    blocks = []
    cur = None

    def finish():
        if cur is None:
            return
        dim, region, rows = cur
        sups = {r[2] for r in rows}
        if len(sups) > 1:
            raise FileFormatError("vectors of one block disagree on support", path)
        sup = sups.pop() if sups else None
        hist = None
        if any(r[3] is not None for r in rows):
            hist = tuple(r[3] for r in rows)
        vals = np.array([r[1] for r in rows]).reshape(len(rows), dim)
        blocks.append(VectorSet(vals, [r[0] for r in rows], None, hist, sup, region))

    pending = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            if pending is not None:
                raise FileFormatError("attribute line without values", path, ln)
            continue
        if line.startswith("dim="):
            if pending is not None:
                raise FileFormatError("attribute line without values", path, ln)
            finish()
            fields = dict(_kv(line, path, ln))
            try:
                dim = int(fields["dim"])
                region = parse_region(fields.get("region", "space"))
            except (KeyError, ValueError):
                raise FileFormatError(f"bad header {line!r}", path, ln) from None
            cur = (dim, region, [])
            continue
        if cur is None:
            raise FileFormatError("missing 'dim=' header", path, ln)
        if pending is None:
            fields = dict(_kv(line, path, ln))
            if "action" not in fields:
                raise FileFormatError(f"expected 'action=' line, found {line!r}", path, ln)
            try:
                act = int(fields["action"])
                sup = tuple(int(s) for s in fields["support"].split(",")) if "support" in fields else None
                hist = None
                if "history" in fields:
                    hist = tuple(tuple(int(x) for x in step.split(":"))
                                 for step in fields["history"].split(","))
                    if any(len(step) != 2 for step in hist):
                        raise ValueError
            except ValueError:
                raise FileFormatError(f"bad attribute line {line!r}", path, ln) from None
            if sup is not None and len(sup) != cur[0]:
                raise FileFormatError("support length differs from dim", path, ln)
            pending = (act, sup, hist)
        else:
            try:
                vals = [float(x) for x in line.split()]
            except ValueError:
                raise FileFormatError(f"bad value line {line!r}", path, ln) from None
            if len(vals) != cur[0]:
                raise FileFormatError(f"expected {cur[0]} values, found {len(vals)}", path, ln)
            cur[2].append((pending[0], vals, pending[1], pending[2]))
            pending = None
    if pending is not None:
        raise FileFormatError("attribute line without values at end of file", path)
    finish()
    if not blocks:
        raise FileFormatError("no vector set found", path)
    return blocks


def _kv(line, path, ln):
    for tok in line.split():
        k, sep, v = tok.partition("=")
        if not sep:
            raise FileFormatError(f"expected key=value, found {tok!r}", path, ln)
        yield k, v


def read_vector_sets(path) -> list:
    with _open(path, "r") as fh:
        return parse_vector_sets(fh.read(), None if str(path) == "-" else str(path))


def read_value(path, model: PomdpModel):
    """Read a single full-space set, or rebuild a tau/phi family from its blocks."""
    blocks = read_vector_sets(path)
    kinds = {vs.region[0] for vs in blocks}
    if len(blocks) == 1 and kinds <= {"space", "union", "history-union"}:
        vs = blocks[0]
        if vs.dim != model.num_states:
            raise FileFormatError(f"set has dim {vs.dim} but the model has {model.num_states} states")
        return vs
    if kinds == {"tau"}:
        fam = tau_family(model)
    elif kinds == {"phi"}:
        fam = phi_family(model)
    else:
        raise FileFormatError(f"cannot combine blocks with regions {sorted(kinds)}")
    sets = {vs.region[1]: vs for vs in blocks}
    if set(sets) != set(fam.keys()):
        raise FileFormatError("blocks do not match the model's simplices")
    fam = SimplexFamily({k: (minimal_basis(b), v) for k, (b, v) in fam.entries.items()},
                        fam.keyed_by, fam.region)
    return fam.replace_vectors(sets)


# -- stats CSV ----------------------------------------------------------------------

def write_stats(stats, path, append=False):
    """Write one row per IterationStats; the header is written unless appending to a non-empty file."""
    header = True
    if append and path not in (None, "-"):
        try:
            with open(path) as fh:
                header = not fh.read(1)
        except FileNotFoundError:
            pass
    with _open(path, "a" if append else "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(STATS_HEADER)
        for s in stats:
            w.writerow([s.iteration, s.region, s.enumerated, s.kept, s.lp_count,
                        repr(float(s.residual)), repr(float(s.seconds))])


def read_stats(path) -> list:
    with _open(path, "r") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != STATS_HEADER:
        raise FileFormatError("missing stats header", path, 1)
    out = []
    for ln, r in enumerate(rows[1:], start=2):
        try:
            out.append(IterationStats(int(r[0]), r[1], int(r[2]), int(r[3]), int(r[4]),
                                      float(r[5]), float(r[6])))
        except (ValueError, IndexError):
            raise FileFormatError("bad stats row", path, ln) from None
    return out


# -- action classes -----------------------------------------------------------------

def parse_classes(text: str, model: PomdpModel, path=None) -> ActionClassification:
    names = model.action_names or tuple(str(a) for a in range(model.num_actions))
    rich, seen = [], set()
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[1] not in ("rich", "poor"):
            raise FileFormatError(f"expected '<action> rich|poor', found {line!r}", path, ln)
        name, kind = parts
        if name in names:
            a = names.index(name)
        elif name.isdigit() and int(name) < model.num_actions:
            a = int(name)
        else:
            raise FileFormatError(f"unknown action {name!r}", path, ln)
        if a in seen:
            raise FileFormatError(f"action {name!r} listed twice", path, ln)
        seen.add(a)
        if kind == "rich":
            rich.append(a)
    return ActionClassification.build(model, rich)


def read_classes(path, model: PomdpModel) -> ActionClassification:
    with _open(path, "r") as fh:
        return parse_classes(fh.read(), model, str(path))


def format_classes(model: PomdpModel, classes: ActionClassification) -> str:
    names = model.action_names or tuple(str(a) for a in range(model.num_actions))
    return "".join(f"{names[a]} {'rich' if a in classes.information_rich else 'poor'}\n"
                   for a in range(model.num_actions))
