"""Group-wise aggregation over a vector split into runs by head flags.

g[i] = 1 marks the first element of a group (g[0] = 1 always).  Ties in every
max operation go to the LAST maximal element.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .rss import Party, ShareVec, concat, lt, mul_many, public, split
from .sort import SharedPermutation, apply_many, gen_perm_by_bit, unapply_many


class GroupFlags:
    """Head flags plus a cached permutation that moves the heads to the front
    (stable, so groups keep their order)."""

    def __init__(self, g: ShareVec):
        self.g = g
        self._heads_first: SharedPermutation | None = None
        self._sorted_g: ShareVec | None = None

    def __len__(self):
        return len(self.g)

    def heads_first(self, pt: Party) -> SharedPermutation:
        if self._heads_first is None:
            self._heads_first = gen_perm_by_bit(pt, self.g.rsub_const(1))
        return self._heads_first

    def last_flags(self, pt: Party) -> ShareVec:
        """1 at the last element of each group."""
        n = len(self.g)
        onehot = self.g.ring.from_ints([0] * (n - 1) + [1])
        return self.g.shifted(-1).add_public(onehot)


def group_sums(pt: Party, G: GroupFlags, xs: Sequence[ShareVec]) -> tuple[list[ShareVec], list[ShareVec]]:
    """(group totals, inclusive group prefix sums) for each vector in xs.

    With heads moved to the front, H[t] is the running total just before
    group t starts, so differences of neighbours give per-group quantities;
    one multiplication by the sorted flags masks the garbage tail, and after
    moving back a plain prefix sum spreads each head's value over its group.
    """
    n = len(G)
    alpha = G.heads_first(pt)
    P = [x.cumsum() for x in xs]
    last = np.full(n, n - 1)
    tot = [p.take(last) for p in P]
    jobs = [p.shifted(1) for p in P]
    need_g = G._sorted_g is None
    moved = apply_many(pt, [(alpha, jobs + ([G.g] if need_g else []))])[0]
    if need_g:
        G._sorted_g = moved.pop()
    gs = G._sorted_g
    gs_next = gs.shifted(-1)
    pairs = []
    for H, T in zip(moved, tot):
        Hm1, Hp1 = H.shifted(1), H.shifted(-1)
        pairs.append((gs, H - Hm1))
        pairs.append((gs, T - H.mul_const(2) + Hm1))
        pairs.append((gs_next, Hp1 - T))
    prods = mul_many(pt, pairs)
    diffs = []
    for i in range(len(xs)):
        d_pre, a, b = prods[3 * i: 3 * i + 3]
        diffs += [d_pre, a + b]
    back = unapply_many(pt, [(alpha, diffs)])[0]
    sums, prefix = [], []
    for i, p in enumerate(P):
        prefix.append(p - back[2 * i].cumsum())
        sums.append(back[2 * i + 1].cumsum())
    return sums, prefix


def group_sum(pt: Party, G: GroupFlags, x: ShareVec) -> ShareVec:
    return group_sums(pt, G, [x])[0][0]


def group_prefix_sum(pt: Party, G: GroupFlags, x: ShareVec) -> ShareVec:
    return group_sums(pt, G, [x])[1][0]


def _segmented_scan(pt: Party, g: ShareVec, x: ShareVec, ys: list[ShareVec]):
    """Inclusive running max within groups (later element wins ties), with
    payloads carried along.  log n levels of compare-and-select."""
    n = len(x)
    s = g
    d = 1
    while d < n:
        m = s.rsub_const(1)
        xl = x.shifted(d)
        sl = s.shifted(d)
        prods = mul_many(pt, [(m, xl - x), (s, sl)] + [(m, y.shifted(d) - y) for y in ys])
        D, ss, E = prods[0], prods[1], prods[2:]
        c = lt(pt, x, x + D)
        upd = mul_many(pt, [(c, D)] + [(c, e) for e in E])
        x = x + upd[0]
        ys = [y + u for y, u in zip(ys, upd[1:])]
        s = s + sl - ss
        d *= 2
    return x, ys


def group_max_pair_many(pt: Party, G: GroupFlags, xs: Sequence[ShareVec],
                        ys: Sequence[Sequence[ShareVec]]):
    """Per-group max of each xs[i] and the payloads ys[i][*] at its argmax,
    broadcast to the whole group.  All vectors share the flags in G."""
    n, k = len(G), len(xs)
    npay = len(ys[0]) if ys else 0
    g_rep = concat([G.g] * k)
    bx, bys = _segmented_scan(pt, g_rep, concat(list(xs)),
                              [concat([ys[i][j] for i in range(k)]) for j in range(npay)])
    e = concat([G.last_flags(pt)] * k)
    ends = mul_many(pt, [(e, bx)] + [(e, y) for y in bys])
    blocks = [split(v, [n] * k) for v in ends]
    totals = group_sums(pt, G, [b for v in blocks for b in v])[0]
    per = split_list(totals, k)
    maxes = per[0]
    pays = [[per[1 + j][i] for j in range(npay)] for i in range(k)]
    return maxes, pays


def split_list(items, k):
    return [items[i * k:(i + 1) * k] for i in range(len(items) // k)]


def group_max_pair(pt: Party, G: GroupFlags, x: ShareVec, y: ShareVec) -> tuple[ShareVec, ShareVec]:
    maxes, pays = group_max_pair_many(pt, G, [x], [[y]])
    return maxes[0], pays[0][0]


def group_max(pt: Party, G: GroupFlags, x: ShareVec) -> ShareVec:
    return group_max_pair_many(pt, G, [x], [])[0][0]


def vect_max_rows(pt: Party, cols: Sequence[ShareVec], payloads: Sequence[Sequence[ShareVec]]):
    """Row-wise max over columns cols[0..c-1] (each a vector of rows), with
    payload columns payloads[p][0..c-1] taken at the LAST maximal column."""
    xs = list(cols)
    pays = [list(p) for p in payloads]
    while len(xs) > 1:
        half = len(xs) // 2
        L = concat(xs[0:2 * half:2])
        Rt = concat(xs[1:2 * half:2])
        c = lt(pt, Rt, L)  # 1 iff the left one is strictly larger
        r = len(xs[0])
        pl = [(concat(p[0:2 * half:2]), concat(p[1:2 * half:2])) for p in pays]
        upd = mul_many(pt, [(c, L - Rt)] + [(c, a - b) for a, b in pl])
        newx = split(Rt + upd[0], [r] * half)
        newp = [split(b + u, [r] * half) for (a, b), u in zip(pl, upd[1:])]
        if len(xs) % 2:
            newx.append(xs[-1])
            for q, p in zip(newp, pays):
                q.append(p[-1])
        xs, pays = newx, newp
    return xs[0], [p[0] for p in pays]


def vect_max(pt: Party, x: ShareVec, y: ShareVec) -> ShareVec:
    """y at the last index where x is maximal (length-1 sharing)."""
    n = len(x)
    best, (arg,) = vect_max_rows(pt, [x[i] for i in range(n)], [[y[i] for i in range(n)]])
    return arg


def flags_from_sorted(pt: Party, v: ShareVec) -> GroupFlags:
    """g[0] = 1 and g[j] = 1 - [v[j-1] == v[j]] for a sorted vector v."""
    from .rss import eq
    n = len(v)
    e = eq(pt, v[1:], v[:-1]) if n > 1 else None
    R = v.ring
    head = public(pt, R, R.from_ints([1]))
    g = head if e is None else concat([head, e.rsub_const(1)])
    return GroupFlags(g)
