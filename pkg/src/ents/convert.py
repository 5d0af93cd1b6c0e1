"""Share conversion from Z_{2^k} to Z_{2^l} for secrets in [0, 2^(k-1)).

Both parties of a two-way split shift their part right by k-1 (one with
floor, one with ceiling).  The two shifted values add up to the overflow
count times two plus a parity bit, and that parity bit is exchanged under a
daBit mask.  The overflow is then subtracted on the large ring.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .ring import Ring, ring
from .rss import Z2, Party, ShareVec, _ceil_shr, _unmask_bit

log = logging.getLogger(__name__)


def trunc_identity_check(d0: int, d1: int, c: int, ell: int = 128) -> tuple[int, int]:
    """(d0 >> c) + (-((-d1) >> c)) on the l-bit ring, and its excess over
    floor((d0 + d1) / 2^c).  Python's >> on negative ints is the arithmetic
    shift of the two's-complement value."""
    value = ((d0 >> c) + (-((-d1) >> c))) % (1 << ell)
    return value, value - ((d0 + d1) >> c)


@dataclass(frozen=True)
class ConversionContext:
    src_width: int
    dst_width: int

    def __post_init__(self):
        if not 2 <= self.src_width < self.dst_width:
            raise ValueError("need 2 <= k < l")
        if self.src_width > 64:
            raise ValueError("source ring must fit in 64 bits")

    @property
    def src(self) -> Ring:
        return ring(self.src_width)

    @property
    def dst(self) -> Ring:
        return ring(self.dst_width)


def convert_share(pt: Party, x: ShareVec, dst_width: int) -> ShareVec:
    """Three-party conversion; one round and 4l + 4 bits per element online."""
    ctx = ConversionContext(x.ring.width, dst_width)
    S, L, k, n = ctx.src, ctx.dst, ctx.src_width, len(x)
    pt.count("convert", n)
    db = pt.take_dabits(L, n)
    rd = pt.round()
    d0 = t0 = d1 = t1 = None
    if pt.pid == 0:
        d = S.add(x.a, x.b)
        d0, t0 = L.from_small(d), L.from_small(S.shr(d, k - 1))
        b0 = S.shr(d, k - 1) ^ db.z2.a ^ db.z2.b
        rd.send(1, Z2, b0)
        rd.send(2, Z2, b0)
        kb = rd.expect(1, Z2, n)
    elif pt.pid == 1:
        d = x.b
        ct = _ceil_shr(S, d, k - 1)
        d1, t1 = L.from_small(d), L.from_small(ct)
        b1 = (ct & np.uint64(1)) ^ db.z2.b
        rd.send(0, Z2, b1)
        rd.send(2, Z2, b1)
        kb = rd.expect(0, Z2, n)
    else:
        kb = (rd.expect(0, Z2, n), rd.expect(1, Z2, n))
    sd0, st0 = rd.deal(0, L, d0, n), rd.deal(0, L, t0, n)
    sd1, st1 = rd.deal(1, L, d1, n), rd.deal(1, L, t1, n)
    rd.run()
    if pt.pid == 0:
        b = b0 ^ rd.got(kb)
    elif pt.pid == 1:
        b = b1 ^ rd.got(kb)
    else:
        b = rd.got(kb[0]) ^ rd.got(kb[1])
    bit = _unmask_bit(pt, L, b, db.zl)
    d = sd0.value + sd1.value
    truncsum = st0.value + st1.value
    return d - (truncsum - bit).mul_const(1 << (k - 1))


def downcast(x: ShareVec, width: int) -> ShareVec:
    """Z_{2^l} -> Z_{2^k} is a local reduction."""
    return x.downcast(width)


# ------------------------------------------------------------- two parties

class TwoPartyDealer:
    """Trusted dealer of two-party daBits.  Both parties build it from the
    same seed and take their own half.  Insecure: for testing only."""

    insecure = True

    def __init__(self, seed: int, width: int):
        self.gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0xDA])))
        self.R = ring(width)
        log.warning("two-party daBits come from an insecure test dealer")

    def dabits(self, n: int, party: int):
        R, g = self.R, self.gen
        r = g.integers(0, 2, size=n, dtype=np.uint64)
        s2 = g.integers(0, 2, size=n, dtype=np.uint64)
        sl = R.random(g, n)
        if party == 0:
            return s2, sl
        return r ^ s2, R.sub(R.from_small(r), sl)


def convert_share_two_party(pt: Party, x, src_width: int, dst_width: int, dealer: TwoPartyDealer):
    """Additive two-party shares on Z_{2^k} (parties 0 and 1) to Z_{2^l}.
    Party 2 does not take part and gets None."""
    ctx = ConversionContext(src_width, dst_width)
    S, L, k = ctx.src, ctx.dst, src_width
    if pt.pid == 2:
        return None
    n = x.shape[0]
    r2, rl = dealer.dabits(n, pt.pid)
    peer = 1 - pt.pid
    if pt.pid == 0:
        trunc = S.shr(x, k - 1)
    else:
        trunc = _ceil_shr(S, x, k - 1)
    mine = (trunc & np.uint64(1)) ^ r2
    pt.meter.record_round()
    pt.ep.send(peer, np.packbits(mine.astype(np.uint8), bitorder="little").tobytes(), n)
    raw = np.frombuffer(pt.ep.recv(peer), dtype=np.uint8)
    b = mine ^ np.unpackbits(raw, bitorder="little")[:n].astype(np.uint64)
    bL = L.from_small(b)
    bit = L.mul(rl, L.sub(L.full(n, 1), L.mul_const(bL, 2)))
    if pt.pid == 0:
        bit = L.add(bit, bL)
    # re-randomise the local shares with a mask both parties can draw
    m = L.random(pt.pair_prg(peer), 2 * n)
    sign = 1 if pt.pid == 0 else -1
    d = L.add(L.from_small(x), L.mul_const(m[:n], sign))
    tsum = L.add(L.from_small(trunc), L.mul_const(m[n:], sign))
    return L.sub(d, L.mul_const(L.sub(tsum, bit), 1 << (k - 1)))
