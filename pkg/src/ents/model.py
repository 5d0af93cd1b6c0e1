"""Opened decision trees: layers of nodes, prediction and a text format.

Internal nodes split on ``value < threshold``: a sample whose attribute is
below the threshold goes to child 2j+2, otherwise to 2j+1.  This follows the
node update 2j + 1 + b with b = (value < threshold).

Text format, UTF-8, one record per line, ``#`` starts a comment::

    ents-tree 1
    meta m=<int> v=<int> h=<int> frac_bits=<int>
    node <layer> <nid> internal <attr> <num>/<den>
    node <layer> <nid> leaf <label>

Thresholds are exact rationals in original attribute units.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

MAGIC = "ents-tree 1"


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Split:
    attr: int
    threshold: Fraction


@dataclass
class TreeLayer:
    kind: str  # "internal" or "leaf"
    entries: dict[int, Split | int] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("internal", "leaf"):
            raise ModelError(f"bad layer kind {self.kind!r}")

    def nids(self) -> list[int]:
        return sorted(self.entries)


@dataclass
class TreeModel:
    layers: list[TreeLayer]
    m: int
    v: int
    frac_bits: int = 0

    @property
    def h(self) -> int:
        return len(self.layers) - 1

    def validate(self):
        if not self.layers or self.layers[-1].kind != "leaf":
            raise ModelError("last layer must be a leaf layer")
        for k, layer in enumerate(self.layers[:-1]):
            if layer.kind != "internal":
                raise ModelError(f"layer {k} must be internal")
        for k, layer in enumerate(self.layers):
            lo, hi = (1 << k) - 1, (1 << (k + 1)) - 2
            for nid, p in layer.entries.items():
                if not lo <= nid <= hi:
                    raise ModelError(f"nid {nid} outside layer {k}")
                if layer.kind == "internal" and not (isinstance(p, Split) and 0 <= p.attr < self.m):
                    raise ModelError(f"bad split at nid {nid}")
                if layer.kind == "leaf" and not (isinstance(p, int) and 0 <= p < self.v):
                    raise ModelError(f"bad label at nid {nid}")
        return self

    # ---------------------------------------------------------- prediction

    def leaf_of(self, sample: Sequence) -> int:
        """nid of the leaf a sample ends in.

        A walk can reach a node that holds no training samples.  Then the
        walk continues as if always going to child 2j+1 down to the leaf
        layer, and lands on the largest present leaf nid not above that
        (or the smallest leaf if there is none).
        """
        nid = 0
        for layer in self.layers[:-1]:
            split = layer.entries.get(nid)
            if split is None:
                break
            nid = 2 * nid + (2 if sample[split.attr] < split.threshold else 1)
        leaves = self.layers[-1].entries
        if nid in leaves:
            return nid
        while nid < (1 << self.h) - 1:
            nid = 2 * nid + 1
        below = [j for j in leaves if j <= nid]
        return max(below) if below else min(leaves)

    def predict(self, sample: Sequence) -> int:
        return self.layers[-1].entries[self.leaf_of(sample)]

    def predict_many(self, samples: Iterable[Sequence]) -> list[int]:
        return [self.predict(s) for s in samples]

    # ------------------------------------------------------- serialization

    def dumps(self) -> str:
        out = [MAGIC, f"meta m={self.m} v={self.v} h={self.h} frac_bits={self.frac_bits}"]
        for k, layer in enumerate(self.layers):
            for nid in layer.nids():
                p = layer.entries[nid]
                if layer.kind == "internal":
                    t = p.threshold
                    out.append(f"node {k} {nid} internal {p.attr} {t.numerator}/{t.denominator}")
                else:
                    out.append(f"node {k} {nid} leaf {p}")
        return "\n".join(out) + "\n"

    @classmethod
    def loads(cls, text: str) -> "TreeModel":
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines or lines[0] != MAGIC:
            raise ModelError("not an ents tree file")
        try:
            meta = dict(kv.split("=") for kv in lines[1].split()[1:])
            m, v, h = int(meta["m"]), int(meta["v"]), int(meta["h"])
            fb = int(meta.get("frac_bits", 0))
        except (IndexError, KeyError, ValueError) as e:
            raise ModelError(f"bad meta line: {e}") from None
        layers = [TreeLayer("internal") for _ in range(h)] + [TreeLayer("leaf")]
        for no, ln in enumerate(lines[2:], start=3):
            f = ln.split()
            try:
                if f[0] != "node":
                    raise ValueError(f"unknown record {f[0]!r}")
                k, nid, kind = int(f[1]), int(f[2]), f[3]
                if layers[k].kind != kind:
                    raise ValueError(f"layer {k} is {layers[k].kind}")
                if nid in layers[k].entries:
                    raise ValueError(f"duplicate nid {nid}")
                if kind == "internal":
                    layers[k].entries[nid] = Split(int(f[4]), Fraction(f[5]))
                else:
                    layers[k].entries[nid] = int(f[4])
            except (IndexError, ValueError) as e:
                raise ModelError(f"line {no}: {e}") from None
        return cls(layers, m, v, fb).validate()

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "TreeModel":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    def describe(self) -> str:
        lines = []

        def walk(k, nid, depth):
            layer = self.layers[k]
            if nid not in layer.entries:
                return
            p = layer.entries[nid]
            pad = "  " * depth
            if layer.kind == "leaf":
                lines.append(f"{pad}[{nid}] label {p}")
                return
            lines.append(f"{pad}[{nid}] a{p.attr} < {float(p.threshold):g} -> {2 * nid + 2} else {2 * nid + 1}")
            walk(k + 1, 2 * nid + 1, depth + 1)
            walk(k + 1, 2 * nid + 2, depth + 1)

        walk(0, 0, 0)
        return "\n".join(lines)
