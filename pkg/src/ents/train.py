"""Layer-by-layer decision-tree training on shared data.

Every attribute gets one sorting permutation up front.  After each layer the
permutations are refined with the new branch bits, so that applying pi_i
sorts the samples by (node, attribute i).  Node ids are never sorted on
directly.

Attributes are shared as non-negative integers q (the data owner shifts each
column to start at 0).  A split of node j compares 2q < t for a threshold
t = q[r] + q[r+1] in the node's sorted order; samples with b = 1 (below)
move to node 2j+2, the rest to 2j+1.  Gini scores are computed on the large
ring after share conversion and compared on the small ring.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence


from .convert import convert_share
from .groupwise import GroupFlags, flags_from_sorted, group_max_pair_many, group_sums, vect_max_rows
from .model import Split, TreeLayer, TreeModel
from .oracle import PlainDataset
from .ring import ring
from .rss import Party, ShareVec, concat, eq, lt, mul_many, public, reciprocal, reconstruct, share, split, trunc, div_iterations
from .sort import (SharedPermutation, apply_many, compose_many, gen_perm_by_bit_many,
                   gen_perm_many, unapply_many)


def ceil_log2(x: int) -> int:
    return max(0, (x - 1).bit_length())


@dataclass(frozen=True)
class TrainConfig:
    small_width: int = 32
    large_width: int = 128
    frac_bits: int | None = None  # default 2 * ceil(log2 n)

    def __post_init__(self):
        if not 2 <= self.small_width < self.large_width:
            raise ValueError("need small ring narrower than large ring")
        if self.small_width > 64:
            raise ValueError("small ring must fit in 64 bits")

    def fbits(self, n: int) -> int:
        return self.frac_bits if self.frac_bits is not None else max(2, 2 * ceil_log2(n))


@dataclass
class SecureDataset:
    """Shared attribute columns and labels plus public shape information."""
    attrs: list[ShareVec]
    y: ShareVec
    n: int
    m: int
    v: int
    attr_bits: int  # every q < 2^attr_bits
    offsets: list[int] = field(default_factory=list)
    scale: int = 1

    def header(self) -> dict:
        return {"n": self.n, "m": self.m, "v": self.v, "attr_bits": self.attr_bits,
                "offsets": self.offsets, "scale": self.scale}

    def threshold(self, attr: int, t: int) -> Fraction:
        return (Fraction(t, 2) + self.offsets[attr]) / self.scale


def share_dataset(pt: Party, plain: PlainDataset | None, owner: int = 0,
                  cfg: TrainConfig = TrainConfig()) -> SecureDataset:
    """The owner shares its table; the public header (sizes, bit bound,
    column offsets, scale) is broadcast first."""
    R = ring(cfg.small_width)
    if pt.pid == owner:
        bits = max(1, max(max(r) for r in plain.X).bit_length())
        if min(min(r) for r in plain.X) < 0:
            raise ValueError("attributes must be shifted to be non-negative")
        if bits + 2 > cfg.small_width - 1:
            raise ValueError(f"attributes need {bits} bits, too many for a {cfg.small_width}-bit ring")
        head = {"n": plain.n, "m": plain.m, "v": plain.v, "attr_bits": bits,
                "offsets": list(plain.offsets), "scale": plain.scale}
        data = json.dumps(head).encode()
        with pt.meter.in_phase("setup"):
            pt.ep.exchange({p: (data, 8 * len(data)) for p in range(3) if p != owner}, [])
    else:
        with pt.meter.in_phase("setup"):
            head = json.loads(pt.ep.exchange({}, [owner])[owner])
    n, m = head["n"], head["m"]
    cols = None
    if pt.pid == owner:
        cols = R.from_ints([q for i in range(m) for q in plain.column(i)] + list(plain.y))
    flat = share(pt, cols, owner, R, n * (m + 1))
    parts = split(flat, [n] * (m + 1))
    return SecureDataset(parts[:m], parts[m], n, m, head["v"], head["attr_bits"],
                         head["offsets"], head["scale"])


@dataclass
class SharedLayer:
    """One trained layer, still shared.  Entries beyond the number of nodes
    repeat values of existing nodes and are dropped when opened."""
    kind: str
    nid: ShareVec
    attr: ShareVec | None = None
    threshold: ShareVec | None = None
    label: ShareVec | None = None


@dataclass
class SharedTree:
    layers: list[SharedLayer]
    m: int
    v: int
    frac_bits: int
    offsets: list[int]
    scale: int


# ------------------------------------------------------------------ steps

def label_onehots(pt: Party, y: ShareVec, v: int) -> list[ShareVec]:
    """[y == l] for every label l, one equality batch."""
    R, n = y.ring, len(y)
    consts = public(pt, R, R.from_ints([l for l in range(v) for _ in range(n)]))
    return split(eq(pt, concat([y] * v), consts), [n] * v)


def advance_spnd(spnd: ShareVec, b: ShareVec) -> ShareVec:
    """2 * nid + 1 + b, no communication."""
    if len(spnd) != len(b):
        raise ValueError("length mismatch")
    return (spnd.mul_const(2) + b).add_const(1)


def test_samples(pt: Party, attrs: Sequence[ShareVec], ind: Sequence[ShareVec],
                 spth: ShareVec) -> ShareVec:
    """b[j] = (2 * a_spat[j][j] < spth[j]) with spat given as indicator
    vectors ind[i] = [spat == i]."""
    prods = mul_many(pt, list(zip(ind, attrs)))
    x = prods[0]
    for p in prods[1:]:
        x = x + p
    return lt(pt, x.mul_const(2), spth)


def update_perms(pt: Party, perms: Sequence[SharedPermutation], b: ShareVec) -> list[SharedPermutation]:
    """Refine every permutation by one more key: the branch bits (most
    significant, since it is sorted last)."""
    for p in perms:
        if len(p) != len(b):
            raise ValueError("length mismatch")
    moved = apply_many(pt, [(p, [b]) for p in perms])
    alphas = gen_perm_by_bit_many(pt, [mv[0] for mv in moved])
    return compose_many(pt, list(zip(perms, alphas)))


def format_layer(pt: Party, k: int, G: GroupFlags, ws: Sequence[ShareVec]) -> list[ShareVec]:
    """Move group heads to the front and keep the first min(2^k, n) entries."""
    keep = min(1 << k, len(G))
    moved = apply_many(pt, [(G.heads_first(pt), list(ws))])[0]
    return [w[:keep] for w in moved]


def compute_modified_gini(pt: Party, G: GroupFlags, sorted_onehots: Sequence[Sequence[ShareVec]],
                          cfg: TrainConfig) -> list[ShareVec]:
    """Score of every split position for every attribute, on the small ring.

    sorted_onehots[i][l] is the label-l indicator in attribute i's order.
    Group sizes and per-label group totals do not depend on the attribute,
    so one set of reciprocals serves all attributes.
    """
    m, v = len(sorted_onehots), len(sorted_onehots[0])
    n = len(G)
    L = ring(cfg.large_width)
    f = cfg.fbits(n)
    B = max(1, ceil_log2(n + 1))
    F = f + B + 8
    flat = [x for row in sorted_onehots for x in row]
    totals, prefixes = group_sums(pt, G, flat)
    # prefixes of every (attribute, label), then label totals (shared by all)
    conv = convert_share(pt, concat(prefixes + totals[:v]), L.width)
    parts = split(conv, [n] * (m * v + v))
    pre = [parts[i * v:(i + 1) * v] for i in range(m)]
    tot = parts[m * v:]
    suf = [[tot[l] - pre[i][l] for l in range(v)] for i in range(m)]
    left = pre[0][0]
    for l in range(1, v):
        left = left + pre[0][l]
    size = tot[0]
    for l in range(1, v):
        size = size + tot[l]
    right = size - left
    it = div_iterations(f)
    recs = split(reciprocal(pt, concat([left, right]), B, F, it), [n, n])
    sq = mul_many(pt, [(x, x) for i in range(m) for x in pre[i] + suf[i]])
    numl, numr = [], []
    for i in range(m):
        row = sq[2 * v * i: 2 * v * (i + 1)]
        a, b = row[0], row[v]
        for l in range(1, v):
            a, b = a + row[l], b + row[v + l]
        numl.append(a)
        numr.append(b)
    prods = mul_many(pt, [(x, recs[0]) for x in numl] + [(x, recs[1]) for x in numr])
    raw = concat([prods[i] + prods[m + i] for i in range(m)])
    # keep f fractional bits, fewer if the score would not fit the small ring
    extra = max(0, f + ceil_log2(n + 1) - (cfg.small_width - 1))
    g = trunc(pt, raw, F - f + extra).downcast(cfg.small_width)
    return split(g, [n] * m)


def attribute_wise_split_selection(pt: Party, G: GroupFlags, sorted_attrs: Sequence[ShareVec],
                                   gini: Sequence[ShareVec]):
    """Mask invalid positions to MinValue, build thresholds, and take the
    per-group best (score, threshold) of every attribute."""
    R = sorted_attrs[0].ring
    n, m = len(G), len(sorted_attrs)
    minv = 1 << (R.width - 1)
    nxt = [a.shifted(-1) for a in sorted_attrs]
    same = split(eq(pt, concat(list(sorted_attrs)), concat(nxt)), [n] * m)
    e = G.last_flags(pt)
    ne = e.rsub_const(1)
    prods = mul_many(pt, [(ne, s) for s in same] + [(e, a - b) for a, b in zip(sorted_attrs, nxt)])
    valid = [ne - p for p in prods[:m]]
    thr = [a + b + d for a, b, d in zip(sorted_attrs, nxt, prods[m:])]
    masked = mul_many(pt, [(vd, gi.add_const(-minv)) for vd, gi in zip(valid, gini)])
    scores = [x.add_const(minv) for x in masked]
    best, pays = group_max_pair_many(pt, G, scores, [[t] for t in thr])
    return best, [p[0] for p in pays]


def train_internal_layer(pt: Party, k: int, spnd: ShareVec, ds: SecureDataset, onehots,
                         perms: Sequence[SharedPermutation], cfg: TrainConfig):
    """One internal layer: returns (SharedLayer, indicators of the chosen
    attribute per sample, threshold per sample), all in original order."""
    m, n = ds.m, ds.n
    R = spnd.ring
    jobs = [(perms[0], [spnd, ds.attrs[0]] + list(onehots))]
    jobs += [(perms[i], [ds.attrs[i]] + list(onehots)) for i in range(1, m)]
    moved = apply_many(pt, jobs)
    sorted_spnd = moved[0][0]
    sorted_attrs = [moved[0][1]] + [moved[i][0] for i in range(1, m)]
    sorted_oh = [moved[0][2:]] + [moved[i][1:] for i in range(1, m)]
    G = flags_from_sorted(pt, sorted_spnd)
    gini = compute_modified_gini(pt, G, sorted_oh, cfg)
    best, thr = attribute_wise_split_selection(pt, G, sorted_attrs, gini)
    # payload c is the indicator [chosen attribute == c]
    eye = [[public(pt, R, R.full(n, int(i == c))) for i in range(m)] for c in range(m)]
    _, (spth, *ind) = vect_max_rows(pt, best, [thr] + eye)
    spat = ind[0].mul_const(0)
    for c in range(1, m):
        spat = spat + ind[c].mul_const(c)
    nid, attr, t = format_layer(pt, k, G, [sorted_spnd, spat, spth])
    back = unapply_many(pt, [(perms[0], [spth] + ind)])[0]
    return SharedLayer("internal", nid, attr=attr, threshold=t), back[1:], back[0]


def train_leaf_layer(pt: Party, h: int, spnd: ShareVec, onehots, perm: SharedPermutation,
                     v: int) -> SharedLayer:
    R, n = spnd.ring, len(spnd)
    moved = apply_many(pt, [(perm, [spnd] + list(onehots))])[0]
    G = flags_from_sorted(pt, moved[0])
    counts = group_sums(pt, G, moved[1:])[0]
    labels = [public(pt, R, R.full(n, l)) for l in range(v)]
    _, (label,) = vect_max_rows(pt, counts, [labels])
    nid, lab = format_layer(pt, h, G, [moved[0], label])
    return SharedLayer("leaf", nid, label=lab)


def train_decision_tree(pt: Party, ds: SecureDataset, h: int, cfg: TrainConfig = TrainConfig(),
                        trace: list | None = None) -> SharedTree:
    """Train a depth-h tree.  ``trace``, if given, receives the shared node
    vector after every layer (for tests)."""
    if h < 1 or ds.n < 1:
        raise ValueError("need h >= 1 and at least one sample")
    if h + 1 > cfg.small_width - 2:
        raise ValueError("tree too deep for the node-id ring")
    R = ds.y.ring
    perms = gen_perm_many(pt, ds.attrs, ds.attr_bits)
    onehots = label_onehots(pt, ds.y, ds.v)
    spnd = public(pt, R, R.zeros(ds.n))
    layers = []
    for k in range(h):
        layer, ind, spth = train_internal_layer(pt, k, spnd, ds, onehots, perms, cfg)
        layers.append(layer)
        b = test_samples(pt, ds.attrs, ind, spth)
        spnd = advance_spnd(spnd, b)
        if trace is not None:
            trace.append(spnd)
        if k + 1 < h:
            perms = update_perms(pt, perms, b)
        else:
            perms = update_perms(pt, perms[:1], b)
    layers.append(train_leaf_layer(pt, h, spnd, onehots, perms[0], ds.v))
    return SharedTree(layers, ds.m, ds.v, cfg.fbits(ds.n), ds.offsets, ds.scale)


# ---------------------------------------------------------------- opening

def open_model(pt: Party, tree: SharedTree, to: int | None = 0) -> TreeModel | None:
    """Reconstruct the tree at party ``to`` (everyone if None)."""
    opened = []
    for layer in tree.layers:
        vecs = [layer.nid] + ([layer.attr, layer.threshold] if layer.kind == "internal" else [layer.label])
        sizes = [len(x) for x in vecs]
        vals = reconstruct(pt, concat(vecs), to)
        opened.append(None if vals is None else split_plain(vals, sizes))
    if opened[0] is None:
        return None
    out = []
    for layer, vals in zip(tree.layers, opened):
        entries = {}
        if layer.kind == "internal":
            for nid, a, t in zip(*vals):
                if nid not in entries:
                    entries[nid] = Split(a, (Fraction(t, 2) + tree.offsets[a]) / tree.scale)
            out.append(TreeLayer("internal", dict(sorted(entries.items()))))
        else:
            for nid, lab in zip(*vals):
                entries.setdefault(nid, lab)
            out.append(TreeLayer("leaf", dict(sorted(entries.items()))))
    return TreeModel(out, tree.m, tree.v, tree.frac_bits).validate()


def split_plain(vals, sizes):
    out, at = [], 0
    for s in sizes:
        out.append(vals[at:at + s])
        at += s
    return out


def open_vector(pt: Party, x: ShareVec) -> list[int]:
    return reconstruct(pt, x)
