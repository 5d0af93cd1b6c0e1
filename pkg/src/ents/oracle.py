"""Plaintext reference versions of the secure protocols and of the trainer.

Everything here is exact: Python integers and Fractions, no floats.

Tie rules shared by every equivalence test:

* split position inside a node: the LAST position with the largest Gini wins;
* attribute: the LAST attribute with the largest best Gini wins;
* leaf label: the LAST label with the largest count wins;
* a node with no valid split position scores MinValue for every attribute,
  so the last attribute is chosen with threshold 2 * (its largest value in
  the node), written in doubled units as below.

Attributes are integers ``q``.  A split compares ``2*q < t`` with
``t = q[j] + q[j+1]`` taken over the node's samples sorted by that
attribute, i.e. the threshold is the midpoint (q[j] + q[j+1]) / 2.  Samples
below the threshold go to child 2j+2.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .model import Split, TreeLayer, TreeModel


# ------------------------------------------------------------ permutations

def plain_argsort_stable(x: Sequence[int]) -> list[int]:
    """Rank of every element in a stable ascending sort: [4,9,2,9,3] -> [2,3,0,4,1]."""
    order = sorted(range(len(x)), key=lambda i: (x[i], i))
    rank = [0] * len(x)
    for r, i in enumerate(order):
        rank[i] = r
    return rank


def plain_apply(pi: Sequence[int], x: Sequence) -> list:
    z = [None] * len(x)
    for i, p in enumerate(pi):
        z[p] = x[i]
    return z


def plain_unapply(pi: Sequence[int], x: Sequence) -> list:
    return [x[p] for p in pi]


def plain_compose(alpha: Sequence[int], beta: Sequence[int]) -> list[int]:
    """Applying the result equals applying alpha, then beta."""
    return [beta[a] for a in alpha]


def plain_gen_perm_by_bit(b: Sequence[int]) -> list[int]:
    return plain_argsort_stable(list(b))


# --------------------------------------------------------------- group ops

def _groups(g: Sequence[int]) -> list[range]:
    heads = [i for i, f in enumerate(g) if f] or [0]
    if heads[0] != 0:
        heads = [0] + heads
    ends = heads[1:] + [len(g)]
    return [range(s, e) for s, e in zip(heads, ends)]


def plain_group_sum(g, x) -> list[int]:
    out = [0] * len(x)
    for r in _groups(g):
        s = sum(x[i] for i in r)
        for i in r:
            out[i] = s
    return out


def plain_group_prefix_sum(g, x) -> list[int]:
    out = [0] * len(x)
    for r in _groups(g):
        acc = 0
        for i in r:
            acc += x[i]
            out[i] = acc
    return out


def plain_group_max_pair(g, x, y) -> tuple[list, list]:
    mx, my = [0] * len(x), [0] * len(x)
    for r in _groups(g):
        best = max(x[i] for i in r)
        at = max(i for i in r if x[i] == best)
        for i in r:
            mx[i], my[i] = best, y[at]
    return mx, my


def plain_group_max(g, x) -> list[int]:
    return plain_group_max_pair(g, x, x)[0]


def plain_vect_max(x, y):
    best = max(x)
    return y[max(i for i, v in enumerate(x) if v == best)]


def plain_convert_identity(d0: int, d1: int, c: int) -> int:
    """floor(d0 / 2^c) + ceil(d1 / 2^c) - floor((d0 + d1) / 2^c) on plain
    integers (the excess is always 0 or 1)."""
    return d0 // 2 ** c - (-d1 // 2 ** c) - (d0 + d1) // 2 ** c


# -------------------------------------------------------------------- gini

def plain_modified_gini(y: Sequence[int], split: int, v: int | None = None) -> Fraction:
    """Gini score when y[:split+1] goes one way and y[split+1:] the other:
    sum of squared label counts over size, added for both sides."""
    total = Fraction(0)
    for part in (y[:split + 1], y[split + 1:]):
        if part:
            c = Counter(part)
            total += Fraction(sum(k * k for k in c.values()), len(part))
    return total


# ----------------------------------------------------------------- trainer

@dataclass
class PlainDataset:
    """Integer attribute matrix (rows are samples), labels in [0, v)."""
    X: list[list[int]]
    y: list[int]
    v: int
    offsets: list[int] = field(default_factory=list)
    scale: int = 1  # original value = (q + offset) / scale

    def __post_init__(self):
        if len(self.X) != len(self.y) or not self.X:
            raise ValueError("need a non-empty table with one label per row")
        if not self.offsets:
            self.offsets = [0] * self.m
        if any(len(r) != self.m for r in self.X):
            raise ValueError("ragged attribute rows")
        if any(not 0 <= c < self.v for c in self.y):
            raise ValueError("labels must lie in [0, v)")

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def m(self) -> int:
        return len(self.X[0])

    def column(self, i: int) -> list[int]:
        return [r[i] for r in self.X]

    def threshold(self, attr: int, t: int) -> Fraction:
        """Doubled-unit threshold to original units."""
        return (Fraction(t, 2) + self.offsets[attr]) / self.scale

    def original(self, row: Sequence[int]) -> list[Fraction]:
        return [Fraction(q + o, self.scale) for q, o in zip(row, self.offsets)]

    def subset(self, idx: Sequence[int]) -> "PlainDataset":
        return PlainDataset([self.X[i] for i in idx], [self.y[i] for i in idx],
                            self.v, list(self.offsets), self.scale)


MIN = None  # stands for MinValue: below every real score


def _better_or_equal(a, b) -> bool:
    """a >= b where MIN is below everything (and equal to itself)."""
    if a is MIN:
        return b is MIN
    return b is MIN or a >= b


def best_split(ds: PlainDataset, rows: Sequence[int], attr: int):
    """(score, t) for one node and one attribute; score is MIN if no split."""
    order = sorted(rows, key=lambda i: (ds.X[i][attr], i))
    q = [ds.X[i][attr] for i in order]
    y = [ds.y[i] for i in order]
    best, t = MIN, 2 * q[-1]
    for j in range(len(order) - 1):
        if q[j] == q[j + 1]:
            continue
        s = plain_modified_gini(y, j)
        if _better_or_equal(s, best):
            best, t = s, q[j] + q[j + 1]
    return best, t


def split_scores(ds: PlainDataset, rows: Sequence[int]):
    """Every valid candidate score at a node: [(score, attr, t)]."""
    out = []
    for a in range(ds.m):
        order = sorted(rows, key=lambda i: (ds.X[i][a], i))
        q = [ds.X[i][a] for i in order]
        y = [ds.y[i] for i in order]
        for j in range(len(order) - 1):
            if q[j] != q[j + 1]:
                out.append((plain_modified_gini(y, j), a, q[j] + q[j + 1]))
    return out


def plain_node_split(ds: PlainDataset, rows: Sequence[int]) -> tuple[int, int]:
    """(attribute, doubled threshold) chosen at a node."""
    best, pick = MIN, None
    for a in range(ds.m):
        s, t = best_split(ds, rows, a)
        if _better_or_equal(s, best):
            best, pick = s, (a, t)
    return pick


def plain_majority(labels: Sequence[int], v: int) -> int:
    c = Counter(labels)
    top = max(c[l] for l in range(v))
    return max(l for l in range(v) if c[l] == top)


def plain_train_raw(ds: PlainDataset, h: int):
    """Layers as {nid: (attr, t)} dicts plus the leaf {nid: label} and the
    final node of every sample."""
    if h < 1:
        raise ValueError("height must be at least 1")
    node = [0] * ds.n
    layers = []
    for _k in range(h):
        members: dict[int, list[int]] = {}
        for i, nid in enumerate(node):
            members.setdefault(nid, []).append(i)
        layer = {nid: plain_node_split(ds, rows) for nid, rows in members.items()}
        layers.append(layer)
        for i, nid in enumerate(node):
            a, t = layer[nid]
            node[i] = 2 * nid + 1 + (1 if 2 * ds.X[i][a] < t else 0)
    members = {}
    for i, nid in enumerate(node):
        members.setdefault(nid, []).append(ds.y[i])
    leaves = {nid: plain_majority(ys, ds.v) for nid, ys in members.items()}
    return layers, leaves, node


def plain_train(ds: PlainDataset, h: int) -> TreeModel:
    layers, leaves, _ = plain_train_raw(ds, h)
    out = [TreeLayer("internal", {nid: Split(a, ds.threshold(a, t)) for nid, (a, t) in L.items()})
           for L in layers]
    out.append(TreeLayer("leaf", dict(leaves)))
    return TreeModel(out, ds.m, ds.v).validate()


def accuracy(model: TreeModel, ds: PlainDataset) -> float:
    hits = sum(model.predict(ds.original(r)) == y for r, y in zip(ds.X, ds.y))
    return hits / ds.n
