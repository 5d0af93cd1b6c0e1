"""Datasets: CSV-style quantization, the benchmark tables and random
instances for equivalence tests."""
from __future__ import annotations

import math
import random
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Sequence

from .oracle import PlainDataset, split_scores, plain_train_raw


class LoadError(ValueError):
    pass


def quantize_table(rows: Sequence[Sequence], labels: Sequence, digits: int = 4,
                   max_bits: int = 29) -> tuple[PlainDataset, list]:
    """Real-valued rows to a PlainDataset of shifted integers.

    Each value is rounded to ``digits`` decimals and multiplied by 10^digits;
    every column is then shifted so that its minimum is 0.  Labels are mapped
    to 0..v-1 in sorted order; the original label values are returned too.
    """
    scale = 10 ** digits
    if not rows:
        raise LoadError("no data rows")
    m = len(rows[0])
    q = []
    for r, row in enumerate(rows):
        if len(row) != m:
            raise LoadError(f"row {r + 1}: expected {m} attributes, got {len(row)}")
        out = []
        for c, x in enumerate(row):
            try:
                d = Decimal(str(x))
            except InvalidOperation:
                raise LoadError(f"row {r + 1}, column {c + 1}: not a number: {x!r}") from None
            if not d.is_finite():
                raise LoadError(f"row {r + 1}, column {c + 1}: not finite")
            out.append(int((d * scale).to_integral_value()))
        q.append(out)
    offsets = [min(row[c] for row in q) for c in range(m)]
    X = [[row[c] - offsets[c] for c in range(m)] for row in q]
    top = max(max(r) for r in X)
    if top >= 1 << max_bits:
        raise LoadError(f"scaled attribute range {top} does not fit {max_bits} bits")
    classes = sorted(set(labels))
    idx = {c: i for i, c in enumerate(classes)}
    ds = PlainDataset(X, [idx[c] for c in labels], max(2, len(classes)), offsets, scale)
    return ds, classes


def quantize_value(x, digits: int = 4) -> Fraction:
    scale = 10 ** digits
    return Fraction(int((Decimal(str(x)) * scale).to_integral_value()), scale)


def load_csv(path, label_column: int = -1, digits: int = 4, header: bool | None = None):
    """Read a numeric CSV table.  ``header=None`` skips the first line when it
    does not parse as numbers.  Returns (dataset, original labels)."""
    import csv
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    if header is None and rows:
        try:
            [float(c) for c in rows[0]]
            header = False
        except ValueError:
            header = True
    if header:
        rows = rows[1:]
    if not rows:
        raise LoadError(f"{path}: no data rows")
    width = len(rows[0])
    if width < 2:
        raise LoadError(f"{path}: need at least one attribute and a label")
    lc = label_column % width
    attrs, labels = [], []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise LoadError(f"{path}: row {r + 1} has {len(row)} cells, expected {width}")
        cells = [c.strip() for c in row]
        try:
            labels.append(int(Decimal(cells[lc])))
        except InvalidOperation:
            raise LoadError(f"{path}: row {r + 1}: label {cells[lc]!r} is not an integer") from None
        attrs.append([c for i, c in enumerate(cells) if i != lc])
    return quantize_table(attrs, labels, digits)


def train_test_split(ds: PlainDataset, rng: random.Random, train_frac: float = 2 / 3):
    idx = list(range(ds.n))
    rng.shuffle(idx)
    cut = round(ds.n * train_frac)
    return ds.subset(sorted(idx[:cut])), ds.subset(sorted(idx[cut:]))


# ---------------------------------------------------------------- tables

def iris() -> PlainDataset:
    from sklearn.datasets import load_iris
    d = load_iris()
    return quantize_table(d.data.tolist(), d.target.tolist())[0]


def wine() -> PlainDataset:
    from sklearn.datasets import load_wine
    d = load_wine()
    return quantize_table(d.data.tolist(), d.target.tolist())[0]


def tic_tac_toe() -> PlainDataset:
    """All 958 terminal tic-tac-toe boards reachable with x moving first;
    the class says whether x has won.  Cells: x = 2, o = 1, blank = 0."""
    lines = [(0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8), (0, 4, 8), (2, 4, 6)]

    def winner(b):
        for a, c, d in lines:
            if b[a] != 0 and b[a] == b[c] == b[d]:
                return b[a]
        return 0

    seen = {}

    def play(b, turn):
        key = tuple(b)
        if key in seen:
            return
        w = winner(b)
        if w or 0 not in b:
            seen[key] = int(w == 2)
            return
        seen[key] = None
        for i in range(9):
            if b[i] == 0:
                b[i] = turn
                play(b, 3 - turn)
                b[i] = 0

    play([0] * 9, 2)
    boards = sorted(k for k, v in seen.items() if v is not None)
    return PlainDataset([list(b) for b in boards], [seen[b] for b in boards], 2)


# ---------------------------------------------------------- random cases

def gini_margin(n: int, frac_bits: int) -> Fraction:
    return Fraction(n) / 2 ** (frac_bits - 4)


def is_tie_free(ds: PlainDataset, h: int, frac_bits: int) -> bool:
    """True when at every node the best candidate split beats every other
    candidate by more than the fixed-point margin.  Nodes with no valid split
    are fine (their choice is exact)."""
    tol = gini_margin(ds.n, frac_bits)
    layers, _, _ = plain_train_raw(ds, h)
    node = [0] * ds.n
    for layer in layers:
        members: dict[int, list[int]] = {}
        for i, nid in enumerate(node):
            members.setdefault(nid, []).append(i)
        for rows in members.values():
            scores = sorted((s for s, _, _ in split_scores(ds, rows)), reverse=True)
            if len(scores) >= 2 and scores[0] - scores[1] <= tol:
                return False
        for i, nid in enumerate(node):
            a, t = layer[nid]
            node[i] = 2 * nid + 1 + (1 if 2 * ds.X[i][a] < t else 0)
    return True


def planted(rng: random.Random, n: int, m: int, v: int, h: int, max_value: int = 1000,
            noise: float = 0.1) -> PlainDataset:
    """Labels from a random depth-h tree over uniform attributes (sibling
    leaves get different labels), then a fraction ``noise`` relabelled at
    random."""
    X = [[rng.randint(0, max_value) for _ in range(m)] for _ in range(n)]
    splits: dict[int, tuple[int, int]] = {}
    leaf = []
    for x in X:
        nid = 0
        for _ in range(h):
            if nid not in splits:
                splits[nid] = (rng.randrange(m), rng.randint(max_value // 4, 3 * max_value // 4))
            a, t = splits[nid]
            nid = 2 * nid + 1 + (x[a] < t)
        leaf.append(nid)
    lab: dict[int, int] = {}
    for nid in sorted(set(leaf)):
        sib = nid - 1 if nid % 2 == 0 else nid + 1
        lab[nid] = rng.choice([c for c in range(v) if lab.get(sib) != c])
    y = [rng.randrange(v) if rng.random() < noise else lab[j] for j in leaf]
    return PlainDataset(X, y, v)


def random_tie_free(rng: random.Random, n: int, m: int, v: int, h: int, frac_bits: int | None = None,
                    max_value: int = 1000, tries: int = 5000) -> PlainDataset:
    """Rejection-sample planted datasets until one passes ``is_tie_free``."""
    f = frac_bits if frac_bits is not None else 2 * max(1, math.ceil(math.log2(n)))
    for _ in range(tries):
        ds = planted(rng, n, m, v, h, max_value)
        if is_tie_free(ds, h, f):
            return ds
    raise RuntimeError("no tie-free dataset found")


def random_case(rng: random.Random, max_n: int = 64, max_m: int = 4, max_v: int = 3, max_h: int = 3):
    """(dataset, h) with random shape.  Shapes for which no tie-free
    instance turns up quickly are redrawn."""
    while True:
        n, m = rng.randint(8, max_n), rng.randint(1, max_m)
        v, h = rng.randint(2, max_v), rng.randint(1, max_h)
        try:
            return random_tie_free(rng, n, m, v, h, max_value=rng.choice([15, 1000]), tries=300), h
        except RuntimeError:
            continue
