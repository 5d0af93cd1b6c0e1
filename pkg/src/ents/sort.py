"""Secret-shared permutations and stable radix sort by key bits.

Conventions: apply(pi, x) gives z[pi[i]] = x[i]; unapply is its inverse,
z[i] = x[pi[i]]; compose(alpha, beta) applies alpha first, then beta, so
the result is pi[i] = beta[alpha[i]].

A permutation is "prepared" once: it is pushed through a random shuffle made
of three legs, each known to one pair of parties, and the shuffled vector is
opened.  The opened vector rho = sigma(pi) is uniformly random.  Every later
apply or unapply with that permutation is a shuffle (or unshuffle) of the
data plus a local public move, three rounds in all.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .ring import Ring
from .rss import Party, Round, ShareVec, bit_decompose, concat, mul, public, split


class SharedPermutation:
    """Shares of a permutation of 0..n-1 on some ring (plus cached prep)."""

    def __init__(self, values: ShareVec):
        self.values = values
        self.sigmas: dict[int, np.ndarray] | None = None
        self.rho: np.ndarray | None = None

    def __len__(self):
        return len(self.values)

    @property
    def prepared(self) -> bool:
        return self.rho is not None


# ------------------------------------------------------------- shuffle legs

def _leg(rd: Round, j: int, sigma: np.ndarray | None, x: ShareVec, inverse: bool):
    """Parties j and j+1 permute by sigma and reshare to party j+2."""
    pt, R, n = rd.pt, x.ring, len(x)
    pid = pt.pid
    if pid == (j + 2) % 3:
        ky = rd.expect(j, R, n)
        kz = rd.expect((j + 1) % 3, R, n)
        return rd.later(lambda: ShareVec(R, rd.got(kz), rd.got(ky), pid))
    g = pt.comp_prg(j + 1)
    r, r2 = R.random(g, n), R.random(g, n)
    src = R.add(x.a, x.b) if pid == j else x.b
    moved = src[sigma] if inverse else _scatter(src, sigma)
    if pid == j:
        y = R.sub(R.add(moved, r), r2)
        rd.send((j + 2) % 3, R, y)
        return rd.later(lambda: ShareVec(R, y, r2, pid))
    y = R.sub(moved, r)
    rd.send((j + 2) % 3, R, y)
    return rd.later(lambda: ShareVec(R, r2, y, pid))


def _scatter(a, idx):
    out = np.empty_like(a)
    out[idx] = a
    return out


def _shuffle(pt: Party, jobs, inverse: bool = False) -> list[list[ShareVec]]:
    """jobs: [(perm, [vectors])]; every perm must have its sigmas drawn."""
    cur = [list(vs) for _, vs in jobs]
    order = (2, 1, 0) if inverse else (0, 1, 2)
    for j in order:
        rd = pt.round()
        slots = [[_leg(rd, j, perm.sigmas.get(j), v, inverse) for v in vs]
                 for (perm, _), vs in zip(jobs, cur)]
        rd.run()
        cur = [[s.value for s in row] for row in slots]
    return cur


def prepare(pt: Party, perms: Sequence[SharedPermutation]):
    """Shuffle-and-open for all unprepared perms, batched into four rounds."""
    todo = [p for p in perms if not p.prepared]
    todo = list({id(p): p for p in todo}.values())
    if not todo:
        return
    for p in todo:
        p.sigmas = {}
        for j in range(3):  # legs this party takes part in
            if pt.pid in (j, (j + 1) % 3):
                p.sigmas[j] = pt.comp_prg(j + 1).permutation(len(p))
    shuffled = _shuffle(pt, [(p, [p.values]) for p in todo])
    rd = pt.round()
    slots = [rd.open(s[0]) for s in shuffled]
    rd.run()
    for p, s in zip(todo, slots):
        R: Ring = p.values.ring
        rho = np.array(R.to_ints(s.value), dtype=np.int64)
        if not np.array_equal(np.sort(rho), np.arange(len(p))):
            raise ValueError("shared vector is not a permutation")
        p.rho = rho


def apply_many(pt: Party, jobs) -> list[list[ShareVec]]:
    """jobs: [(perm, [vectors])] -> permuted vectors, all in shared rounds."""
    prepare(pt, [p for p, _ in jobs])
    out = _shuffle(pt, jobs)
    return [[v.scatter(p.rho) for v in vs] for (p, _), vs in zip(jobs, out)]


def unapply_many(pt: Party, jobs) -> list[list[ShareVec]]:
    prepare(pt, [p for p, _ in jobs])
    gathered = [(p, [v.take(p.rho) for v in vs]) for p, vs in jobs]
    return _shuffle(pt, gathered, inverse=True)


def apply_perm(pt: Party, perm: SharedPermutation, x: ShareVec) -> ShareVec:
    return apply_many(pt, [(perm, [x])])[0][0]


def unapply_perm(pt: Party, perm: SharedPermutation, x: ShareVec) -> ShareVec:
    return unapply_many(pt, [(perm, [x])])[0][0]


def compose_many(pt: Party, pairs) -> list[SharedPermutation]:
    """[(alpha, beta)] -> beta after alpha, i.e. unapply(alpha, beta)."""
    out = unapply_many(pt, [(a, [b.values]) for a, b in pairs])
    return [SharedPermutation(vs[0]) for vs in out]


def compose_perms(pt: Party, alpha: SharedPermutation, beta: SharedPermutation) -> SharedPermutation:
    return compose_many(pt, [(alpha, beta)])[0]


# ------------------------------------------------------------- generation

def gen_perm_by_bit_many(pt: Party, bits: Sequence[ShareVec]) -> list[SharedPermutation]:
    """Stable sort by one key bit: zeros first.  One multiplication round."""
    ones, diffs, lens = [], [], []
    for b in bits:
        n = len(b)
        s0 = b.rsub_const(1).cumsum()
        zeros = s0.take(np.full(n, n - 1))
        s1 = zeros + b.cumsum()
        ones.append(s0.add_const(-1))
        diffs.append(s1 - s0)
        lens.append(n)
    prod = split(mul(pt, concat(list(bits)), concat(diffs)), lens)
    return [SharedPermutation(o + p) for o, p in zip(ones, prod)]


def gen_perm_by_bit(pt: Party, b: ShareVec) -> SharedPermutation:
    return gen_perm_by_bit_many(pt, [b])[0]


def gen_perm_many(pt: Party, keys: Sequence[ShareVec], nbits: int | None = None) -> list[SharedPermutation]:
    """Stable sorting permutations for several key vectors at once.  ``nbits``
    declares that keys are below 2^nbits, so only those bits are decomposed."""
    pt.count("gen_perm", len(keys))
    n = len(keys[0])
    nb = nbits or keys[0].ring.width
    R = keys[0].ring
    flat = bit_decompose(pt, concat(list(keys)), nb, R)
    per_key = [[bit[i * n:(i + 1) * n] for bit in flat] for i in range(len(keys))]
    perms = gen_perm_by_bit_many(pt, [bits[0] for bits in per_key])
    for t in range(1, nb):
        moved = apply_many(pt, [(p, [bits[t]]) for p, bits in zip(perms, per_key)])
        alphas = gen_perm_by_bit_many(pt, [m[0] for m in moved])
        perms = compose_many(pt, list(zip(perms, alphas)))
    return perms


def gen_perm(pt: Party, x: ShareVec, nbits: int | None = None) -> SharedPermutation:
    return gen_perm_many(pt, [x], nbits)[0]


def identity_perm(pt: Party, R: Ring, n: int) -> SharedPermutation:
    return SharedPermutation(public(pt, R, R.from_ints(range(n))))
