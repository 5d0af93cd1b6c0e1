"""Three-party replicated secret sharing (semi-honest, honest majority).

Party i holds components (x_i, x_{i+1}) of x = x_0 + x_1 + x_2 mod 2^w.
Component j is known to parties j and j-1, and so is the PRG key k_j; that
lets any component be filled with common randomness without talking.

Boolean sharings use the same ``ShareVec`` with XOR in place of addition;
the functions that treat a sharing as boolean say so in their name.
"""
from __future__ import annotations

import math
import secrets
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .ring import Ring, ring
from .transport import Endpoint, SessionResult, run_session

Z2 = ring(1)


class IntegrityError(RuntimeError):
    pass


class SetupError(RuntimeError):
    pass


# ----------------------------------------------------------------- shares

class ShareVec:
    """This party's two components of a shared vector."""

    __slots__ = ("ring", "a", "b", "pid")

    def __init__(self, R: Ring, a, b, pid: int):
        self.ring, self.a, self.b, self.pid = R, a, b, pid

    def __len__(self):
        return self.a.shape[0]

    def __repr__(self):
        return f"ShareVec(w={self.ring.width}, n={len(self)}, party={self.pid})"

    def __getitem__(self, idx) -> "ShareVec":
        if isinstance(idx, (int, np.integer)):
            idx = slice(idx, idx + 1) if idx != -1 else slice(-1, None)
        return ShareVec(self.ring, self.a[idx], self.b[idx], self.pid)

    def _check(self, other: "ShareVec"):
        if other.ring != self.ring:
            raise ValueError(f"ring mismatch: {self.ring} vs {other.ring}")
        if len(other) != len(self):
            raise ValueError(f"length mismatch: {len(self)} vs {len(other)}")

    def __add__(self, other: "ShareVec") -> "ShareVec":
        self._check(other)
        R = self.ring
        return ShareVec(R, R.add(self.a, other.a), R.add(self.b, other.b), self.pid)

    def __sub__(self, other: "ShareVec") -> "ShareVec":
        self._check(other)
        R = self.ring
        return ShareVec(R, R.sub(self.a, other.a), R.sub(self.b, other.b), self.pid)

    def __neg__(self) -> "ShareVec":
        return ShareVec(self.ring, self.ring.neg(self.a), self.ring.neg(self.b), self.pid)

    def mul_const(self, c: int) -> "ShareVec":
        R = self.ring
        return ShareVec(R, R.mul_const(self.a, c), R.mul_const(self.b, c), self.pid)

    def mul_public(self, v) -> "ShareVec":
        """Element-wise product with a public ring array."""
        R = self.ring
        return ShareVec(R, R.mul(self.a, v), R.mul(self.b, v), self.pid)

    def add_public(self, v) -> "ShareVec":
        """Add a public ring array (or a broadcastable constant array)."""
        R = self.ring
        a, b = self.a, self.b
        if self.pid == 0:
            a = R.add(a, v)
        elif self.pid == 2:
            b = R.add(b, v)
        return ShareVec(R, a, b, self.pid)

    def add_const(self, c: int) -> "ShareVec":
        return self.add_public(self.ring.from_int(c))

    def rsub_const(self, c: int) -> "ShareVec":
        """c - x."""
        return (-self).add_const(c)

    def cumsum(self) -> "ShareVec":
        R = self.ring
        return ShareVec(R, R.cumsum(self.a), R.cumsum(self.b), self.pid)

    def take(self, idx) -> "ShareVec":
        return ShareVec(self.ring, self.a[idx], self.b[idx], self.pid)

    def scatter(self, idx) -> "ShareVec":
        """z[idx[i]] = x[i] for a public permutation ``idx``."""
        a, b = np.empty_like(self.a), np.empty_like(self.b)
        a[idx], b[idx] = self.a, self.b
        return ShareVec(self.ring, a, b, self.pid)

    def shifted(self, k: int) -> "ShareVec":
        """z[i] = x[i-k] with zeros shifted in (k may be negative)."""
        R, n = self.ring, len(self)
        if k == 0:
            return self
        z = R.zeros(min(abs(k), n))
        if k > 0:
            return ShareVec(R, R.concat([z, self.a[: n - k]]), R.concat([z, self.b[: n - k]]), self.pid)
        k = -k
        return ShareVec(R, R.concat([self.a[k:], z]), R.concat([self.b[k:], z]), self.pid)

    def downcast(self, width: int) -> "ShareVec":
        """Local reduction to a narrower ring."""
        R, T = self.ring, ring(width)
        if width > R.width:
            raise ValueError("downcast target must be narrower")
        if R.width > 64:
            a, b = R.to_u64(self.a), R.to_u64(self.b)
        else:
            a, b = self.a, self.b
        return ShareVec(T, a & T.mask, b & T.mask, self.pid)

    # boolean view
    def xor(self, other: "ShareVec") -> "ShareVec":
        self._check(other)
        return ShareVec(self.ring, self.a ^ other.a, self.b ^ other.b, self.pid)

    def xor_public(self, v) -> "ShareVec":
        a, b = self.a, self.b
        if self.pid == 0:
            a = a ^ v
        elif self.pid == 2:
            b = b ^ v
        return ShareVec(self.ring, a, b, self.pid)

    def and_public(self, v) -> "ShareVec":
        return ShareVec(self.ring, self.a & v, self.b & v, self.pid)

    def bshl(self, s: int) -> "ShareVec":
        R = self.ring
        return ShareVec(R, R.shl(self.a, s), R.shl(self.b, s), self.pid)

    def bshr(self, s: int) -> "ShareVec":
        R = self.ring
        return ShareVec(R, R.shr(self.a, s), R.shr(self.b, s), self.pid)

    def bit(self, i: int) -> "ShareVec":
        """Boolean sharing of bit i, as a Z_2 vector."""
        R = self.ring
        return ShareVec(Z2, R.bit(self.a, i), R.bit(self.b, i), self.pid)


def concat(parts: Sequence[ShareVec]) -> ShareVec:
    R = parts[0].ring
    return ShareVec(R, R.concat([p.a for p in parts]), R.concat([p.b for p in parts]), parts[0].pid)


def split(x: ShareVec, sizes: Sequence[int]) -> list[ShareVec]:
    out, at = [], 0
    for s in sizes:
        out.append(x[at: at + s])
        at += s
    return out


def public(pt: "Party", R: Ring, values) -> ShareVec:
    """A sharing of a public vector (component 0 carries it)."""
    v = values if isinstance(values, np.ndarray) else R.from_ints(values)
    z = R.zeros(v.shape[0])
    if pt.pid == 0:
        return ShareVec(R, v.copy(), z, 0)
    if pt.pid == 2:
        return ShareVec(R, z, v.copy(), 2)
    return ShareVec(R, z, z.copy(), 1)


def component(pt: "Party", R: Ring, j: int, v, n: int) -> ShareVec:
    """Sharing whose only non-zero component is j, known to parties j and j-1."""
    z = R.zeros(n)
    if pt.pid == j:
        return ShareVec(R, v, z, pt.pid)
    if pt.pid == (j - 1) % 3:
        return ShareVec(R, z, v, pt.pid)
    return ShareVec(R, z, z.copy(), pt.pid)


# ------------------------------------------------------------ packing

def _pack(items) -> tuple[bytes, int]:
    chunks, bits = [], 0
    for R, arr in items:
        n = arr.shape[0]
        bits += R.width * n
        if R.width == 1:
            chunks.append(np.packbits(arr.astype(np.uint8), bitorder="little").tobytes())
        else:
            chunks.append(R.bits_to_bytes(arr))
    return b"".join(chunks), bits


def _unpack(data: bytes, specs):
    out, at = [], 0
    for R, n in specs:
        if R.width == 1:
            size = (n + 7) // 8
            raw = np.frombuffer(data[at: at + size], dtype=np.uint8)
            out.append(np.unpackbits(raw, bitorder="little")[:n].astype(np.uint64))
        else:
            size = n * R.nbytes
            out.append(R.bytes_to_array(data[at: at + size], n))
        at += size
    if at != len(data):
        raise IntegrityError("message length does not match the expected layout")
    return out


class _Slot:
    __slots__ = ("value", "fn")

    def __init__(self, fn=None):
        self.value = None
        self.fn = fn

    def get(self):
        return self.value


class Round:
    """Collects the sends of one protocol step; ``run`` performs the exchange.

    Helpers return slots whose ``value`` is filled in by ``run``.
    """

    def __init__(self, pt: "Party"):
        self.pt = pt
        self.out: dict[int, list] = {}
        self.inc: dict[int, list] = {}
        self.finalizers: list[_Slot] = []
        self.received: dict[int, list] = {}

    def send(self, dst: int, R: Ring, arr):
        self.out.setdefault(dst, []).append((R, arr))

    def expect(self, src: int, R: Ring, n: int) -> tuple[int, int]:
        lst = self.inc.setdefault(src, [])
        lst.append((R, n))
        return src, len(lst) - 1

    def got(self, key):
        src, i = key
        return self.received[src][i]

    def later(self, fn) -> _Slot:
        s = _Slot(fn)
        self.finalizers.append(s)
        return s

    def run(self):
        outgoing = {dst: _pack(items) for dst, items in self.out.items()}
        raw = self.pt.ep.exchange(outgoing, sorted(self.inc))
        self.received = {src: _unpack(raw[src], self.inc[src]) for src in self.inc}
        for s in self.finalizers:
            s.value = s.fn()
        return self

    # ---- common building blocks

    def deal(self, dealer: int, R: Ring, values, n: int, boolean: bool = False) -> _Slot:
        """Dealer d fills component d from key k_d, leaves d+2 at zero and
        sends component d+1 to party d+1: w bits per element."""
        pt, pid = self.pt, self.pt.pid
        z = R.zeros(n)
        if pid == dealer:
            r = R.random(pt.comp_prg(dealer), n)
            other = (values ^ r) if boolean else R.sub(values, r)
            self.send((dealer + 1) % 3, R, other)
            return self.later(lambda: ShareVec(R, r, other, pid))
        if pid == (dealer + 1) % 3:
            key = self.expect(dealer, R, n)
            return self.later(lambda: ShareVec(R, self.got(key), z, pid))
        r = R.random(pt.comp_prg(dealer), n)
        return self.later(lambda: ShareVec(R, z, r, pid))

    def reshare(self, R: Ring, z) -> _Slot:
        """Turn a 3-out-of-3 share (already zero-masked) into a replicated one."""
        pt = self.pt
        self.send(pt.prev, R, z)
        key = self.expect(pt.next, R, z.shape[0])
        return self.later(lambda: ShareVec(R, z, self.got(key), pt.pid))

    def mul(self, x: ShareVec, y: ShareVec) -> _Slot:
        x._check(y)
        R = x.ring
        z = R.add(R.add(R.mul(x.a, y.a), R.mul(x.a, y.b)), R.mul(x.b, y.a))
        z = R.add(z, self.pt.zero_share(R, len(x)))
        return self.reshare(R, z)

    def band(self, x: ShareVec, y: ShareVec) -> _Slot:
        x._check(y)
        R = x.ring
        z = (x.a & y.a) ^ (x.a & y.b) ^ (x.b & y.a) ^ self.pt.xor_zero_share(R, len(x))
        return self.reshare(R, z)

    def open(self, x: ShareVec) -> _Slot:
        """Open to everybody; each party sends its first component onward."""
        pt, R = self.pt, x.ring
        self.send(pt.next, R, x.a)
        key = self.expect(pt.prev, R, len(x))
        return self.later(lambda: R.add(R.add(x.a, x.b), self.got(key)))

    def open_bool(self, x: ShareVec) -> _Slot:
        pt, R = self.pt, x.ring
        self.send(pt.next, R, x.a)
        key = self.expect(pt.prev, R, len(x))
        return self.later(lambda: x.a ^ x.b ^ self.got(key))


# ------------------------------------------------------------------ party

@dataclass
class DaBits:
    z2: ShareVec
    zl: ShareVec

    def __len__(self):
        return len(self.z2)

    def __getitem__(self, idx):
        return DaBits(self.z2[idx], self.zl[idx])


class Party:
    """Protocol context for one party: network, correlated randomness, pools."""

    def __init__(self, ep: Endpoint, seed: int | None = None):
        self.ep = ep
        self.pid = ep.pid
        self.meter = ep.meter
        self.seed = seed
        if seed is not None:
            keys = [np.random.SeedSequence([seed, 0x6B, j]) for j in range(3)]
            self.prg_self = np.random.Generator(np.random.PCG64(keys[self.pid]))
            self.prg_next = np.random.Generator(np.random.PCG64(keys[(self.pid + 1) % 3]))
            self.local = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x10C, self.pid])))
        else:
            # own key goes to the previous party, which holds it as its "next" key
            mine = secrets.randbits(128)
            with self.meter.in_phase("setup"):
                got = ep.exchange({self.prev: (mine.to_bytes(16, "little"), 128)}, [self.next])
            theirs = int.from_bytes(got[self.next], "little")
            self.prg_self = np.random.Generator(np.random.PCG64(mine))
            self.prg_next = np.random.Generator(np.random.PCG64(theirs))
            self.local = np.random.default_rng()
        self._dabits: dict[int, list[DaBits]] = {}

    @property
    def next(self) -> int:
        return (self.pid + 1) % 3

    @property
    def prev(self) -> int:
        return (self.pid + 2) % 3

    def comp_prg(self, j: int) -> np.random.Generator:
        """Generator for component j, i.e. key k_j."""
        if j % 3 == self.pid:
            return self.prg_self
        if j % 3 == self.next:
            return self.prg_next
        raise SetupError(f"party {self.pid} does not hold key {j}")

    def pair_prg(self, peer: int) -> np.random.Generator:
        """Generator shared with ``peer`` and with nobody else."""
        return self.prg_next if peer == self.next else self.prg_self

    def zero_share(self, R: Ring, n: int):
        return R.sub(R.random(self.prg_self, n), R.random(self.prg_next, n))

    def xor_zero_share(self, R: Ring, n: int):
        return R.random(self.prg_self, n) ^ R.random(self.prg_next, n)

    def round(self) -> Round:
        return Round(self)

    def count(self, name: str, k: int = 1):
        self.meter.calls[name] += k

    # daBit pool, filled in the offline phase
    def preprocess_dabits(self, R: Ring, count: int):
        if count > 0:
            self._dabits.setdefault(R.width, []).append(gen_dabits(self, R, count))

    def take_dabits(self, R: Ring, count: int) -> DaBits:
        pool = self._dabits.setdefault(R.width, [])
        have = sum(len(d) for d in pool)
        if have < count:
            self.preprocess_dabits(R, count - have)
        merged = _merge_dabits(pool) if len(pool) > 1 else pool[0]
        out, rest = merged[:count], merged[count:]
        self._dabits[R.width] = [rest] if len(rest) else []
        return out


def _merge_dabits(pool: list[DaBits]) -> DaBits:
    return DaBits(concat([d.z2 for d in pool]), concat([d.zl for d in pool]))


def run(programs: Callable | Sequence[Callable], mode: str = "inproc", seed: int | None = 0) -> SessionResult:
    """Run party programs ``f(pt)``; one callable is used for all three."""
    if callable(programs):
        programs = [programs] * 3
    wrapped = [lambda ep, f=f: f(Party(ep, seed)) for f in programs]
    return run_session(wrapped, mode=mode)


# ------------------------------------------------------ sharing & opening

def share(pt: Party, values, dealer: int, R: Ring, n: int | None = None) -> ShareVec:
    """Dealer inputs ``values`` (ignored elsewhere); other parties pass ``n``."""
    if pt.pid == dealer:
        values = values if isinstance(values, np.ndarray) else R.from_ints(values)
        n = values.shape[0]
    if n is None:
        raise ValueError("non-dealers must pass the vector length")
    rd = pt.round()
    s = rd.deal(dealer, R, values, n)
    rd.run()
    return s.value


def reconstruct(pt: Party, x: ShareVec, to: int | None = None) -> list[int] | None:
    """Open x to everyone (``to=None``) or to one party, checking that the
    two copies of the missing component agree."""
    R = x.ring
    rd = pt.round()
    targets = range(3) if to is None else [to]
    keys = []
    for t in targets:
        # party t misses component t+2, held by t+2 (first) and t+1 (second)
        if pt.pid == (t + 2) % 3:
            rd.send(t, R, x.a)
        if pt.pid == (t + 1) % 3:
            rd.send(t, R, x.b)
        if pt.pid == t:
            keys = [rd.expect((t + 2) % 3, R, len(x)), rd.expect((t + 1) % 3, R, len(x))]
    rd.run()
    if not keys:
        return None
    c1, c2 = rd.got(keys[0]), rd.got(keys[1])
    if not np.array_equal(c1, c2):
        raise IntegrityError(f"party {pt.pid}: replicated components disagree")
    return R.to_ints(R.add(R.add(x.a, x.b), c1))


def open_values(pt: Party, x: ShareVec):
    """Open to all without the consistency check; returns a ring array."""
    rd = pt.round()
    s = rd.open(x)
    rd.run()
    return s.value


def mul(pt: Party, x: ShareVec, y: ShareVec) -> ShareVec:
    return mul_many(pt, [(x, y)])[0]


def mul_many(pt: Party, pairs) -> list[ShareVec]:
    """Several products in a single round."""
    rd = pt.round()
    slots = [rd.mul(x, y) for x, y in pairs]
    rd.run()
    return [s.value for s in slots]


def band_many(pt: Party, pairs) -> list[ShareVec]:
    rd = pt.round()
    slots = [rd.band(x, y) for x, y in pairs]
    rd.run()
    return [s.value for s in slots]


def select(pt: Party, c: ShareVec, x: ShareVec, y: ShareVec) -> ShareVec:
    """c ? x : y for a shared bit c."""
    return y + mul(pt, c, x - y)


# ------------------------------------------------------- boolean circuits

def _bool_operands(pt: Party, x: ShareVec) -> tuple[ShareVec, ShareVec]:
    """Two boolean sharings whose sum (mod 2^w) is x: party 0 inputs x_0 + x_1,
    and component 2 is already known to parties 1 and 2.  One round."""
    R, n = x.ring, len(x)
    rd = pt.round()
    e = rd.deal(0, R, R.add(x.a, x.b) if pt.pid == 0 else None, n, boolean=True)
    rd.run()
    if pt.pid == 1:
        t = component(pt, R, 2, x.b, n)
    elif pt.pid == 2:
        t = component(pt, R, 2, x.a, n)
    else:
        t = component(pt, R, 2, None, n)
    return e.value, t


def _carries(pt: Party, A: ShareVec, B: ShareVec, need_prop_last: bool = False) -> ShareVec:
    """Kogge-Stone prefix: returns G with G_i = carry out of bit i of A + B."""
    w = A.ring.width
    G = band_many(pt, [(A, B)])[0]
    P = A.xor(B)
    s = 1
    while s < w:
        last = 2 * s >= w
        if last and not need_prop_last:
            (t,) = band_many(pt, [(P, G.bshl(s))])
        else:
            t, P = band_many(pt, [(P, G.bshl(s)), (P, P.bshl(s))])
        G = G.xor(t)
        s *= 2
    return G


def bool_add(pt: Party, A: ShareVec, B: ShareVec) -> ShareVec:
    """Boolean sharing of A + B mod 2^w."""
    if A.ring.width == 1:
        return A.xor(B)
    G = _carries(pt, A, B)
    return A.xor(B).xor(G.bshl(1))


def b2a(pt: Party, bits: ShareVec, R: Ring) -> ShareVec:
    """Boolean bits (Z_2 sharing) to arithmetic sharing on R.  Two rounds:
    party 0 inputs c_0 xor c_1, then one XOR with component 2."""
    n = len(bits)
    rd = pt.round()
    t = rd.deal(0, R, R.from_small(bits.a ^ bits.b) if pt.pid == 0 else None, n)
    rd.run()
    if pt.pid == 1:
        c2 = component(pt, R, 2, R.from_small(bits.b), n)
    elif pt.pid == 2:
        c2 = component(pt, R, 2, R.from_small(bits.a), n)
    else:
        c2 = component(pt, R, 2, None, n)
    t = t.value
    return t + c2 - mul(pt, t, c2).mul_const(2)


def bit_decompose(pt: Party, x: ShareVec, nbits: int | None = None, R: Ring | None = None) -> list[ShareVec]:
    """Arithmetic sharings (on R, default x's ring) of bits 0..nbits-1 of x.

    If ``nbits`` is smaller than the ring width the caller promises that the
    higher bits are zero; only the low bits enter the adder."""
    R = R or x.ring
    nbits = nbits or x.ring.width
    xs = x.downcast(nbits) if nbits < x.ring.width else x
    A, B = _bool_operands(pt, xs)
    S = bool_add(pt, A, B)
    n = len(x)
    flat = b2a(pt, concat([S.bit(i) for i in range(nbits)]), R)
    return split(flat, [n] * nbits)


def _msb_bool(pt: Party, x: ShareVec) -> ShareVec:
    w = x.ring.width
    A, B = _bool_operands(pt, x)
    if w == 1:
        return A.xor(B).bit(0)
    G = _carries(pt, A, B)
    return A.xor(B).bit(w - 1).xor(G.bit(w - 2))


def lt_bool(pt: Party, x: ShareVec, y: ShareVec) -> ShareVec:
    """Boolean Z_2 sharing of [x < y] with both read as signed."""
    n = len(x)
    s = _msb_bool(pt, concat([x, y, x - y]))
    sa, sb, sd = split(s, [n] * 3)
    (t,) = band_many(pt, [(sa.xor(sb), sa.xor(sd))])
    return sd.xor(t)


def lt(pt: Party, x: ShareVec, y: ShareVec) -> ShareVec:
    """[x < y] (signed) as a 0/1 sharing on x's ring."""
    pt.count("lt", len(x))
    return b2a(pt, lt_bool(pt, x, y), x.ring)


def eq_bool(pt: Party, x: ShareVec, y: ShareVec) -> ShareVec:
    R, n, w = x.ring, len(x), x.ring.width
    d = x - y
    rd = pt.round()
    e = rd.deal(0, R, R.add(d.a, d.b) if pt.pid == 0 else None, n, boolean=True)
    rd.run()
    # d_0 + d_1 == -d_2 bit for bit
    if pt.pid == 1:
        t = component(pt, R, 2, R.neg(d.b), n)
    elif pt.pid == 2:
        t = component(pt, R, 2, R.neg(d.a), n)
    else:
        t = component(pt, R, 2, None, n)
    z = e.value.xor(t).xor_public(R.from_int(R.mask_int))
    width = w
    while width > 1:
        h = width // 2
        low = z.and_public(R.from_int((1 << h) - 1))
        high = z.bshr(width - h).and_public(R.from_int((1 << h) - 1))
        (m,) = band_many(pt, [(low, high)])
        if width % 2:
            m = m.xor(z.and_public(R.from_int(1 << h)))
        z, width = m, h + width % 2
    return z.bit(0)


def eq(pt: Party, x: ShareVec, y: ShareVec) -> ShareVec:
    pt.count("eq", len(x))
    return b2a(pt, eq_bool(pt, x, y), x.ring)


def eq_const(pt: Party, x: ShareVec, c: int) -> ShareVec:
    return eq(pt, x, public(pt, x.ring, x.ring.full(len(x), c)))


# --------------------------------------------------------------- daBits

def gen_dabits(pt: Party, R: Ring, count: int) -> DaBits:
    """Random bits shared on Z_2 and on R (offline phase).  Every party
    inputs a local random bit on both rings; XOR is free on Z_2 and costs a
    product on R."""
    with pt.meter.in_phase("offline"):
        mine = pt.local.integers(0, 2, size=count, dtype=np.uint64)
        rd = pt.round()
        s2 = [rd.deal(d, Z2, mine if pt.pid == d else None, count, boolean=True) for d in range(3)]
        sl = [rd.deal(d, R, R.from_small(mine) if pt.pid == d else None, count) for d in range(3)]
        rd.run()
        z2 = s2[0].value.xor(s2[1].value).xor(s2[2].value)
        b0, b1, b2 = (s.value for s in sl)
        t = b0 + b1 - mul(pt, b0, b1).mul_const(2)
        zl = t + b2 - mul(pt, t, b2).mul_const(2)
    return DaBits(z2, zl)


# ------------------------------------------------------------ truncation

def _ceil_shr(R: Ring, v, c: int):
    """ceil(v / 2^c) for unsigned ring arrays, i.e. -((-v) >> c) on integers."""
    q = R.shr(v, c)
    low = R.sub(v, R.shl(q, c))
    nz = (R.to_u64(low) != 0) if R.width <= 64 else ((low[:, 0] != 0) | (low[:, 1] != 0))
    return R.add(q, R.from_small(nz.astype(np.uint64)))


def trunc(pt: Party, x: ShareVec, c: int) -> ShareVec:
    """floor(x / 2^c) + bit with bit in {0, 1}, for signed |x| < 2^(w-2).

    Party 0 holds d0 = x_0 + x_1 and parties 1, 2 hold d1 = x_2.  Both shift
    locally (floor for d0, ceiling for d1); the wrap of d0 + d1 past 2^w is
    recovered from the same identity applied at shift w-1, whose parity bit
    is exchanged under a daBit mask.  One round, 2w + 4 bits per element.
    """
    R, n, w = x.ring, len(x), x.ring.width
    if not 0 <= c <= w - 2:
        raise ValueError("truncation shift must be in [0, w-2]")
    if c == 0:
        return x
    pt.count("trunc", n)
    db = pt.take_dabits(R, n)
    xs = x.add_const(1 << (w - 2))
    top = 1 << (w - 1 - c)
    rd = pt.round()
    v0 = v1 = None
    if pt.pid == 0:
        d0 = R.add(xs.a, xs.b)
        u0 = R.shr(d0, w - 1)
        v0 = R.sub(R.shr(d0, c), R.mul_const(u0, top))
        b0 = R.to_u64(u0) ^ db.z2.a ^ db.z2.b
        rd.send(1, Z2, b0)
        rd.send(2, Z2, b0)
        kb = rd.expect(1, Z2, n)
    elif pt.pid == 1:
        d1 = xs.b
        u1 = _ceil_shr(R, d1, w - 1)
        v1 = R.sub(_ceil_shr(R, d1, c), R.mul_const(u1, top))
        b1 = (R.to_u64(u1) & np.uint64(1)) ^ db.z2.b
        rd.send(0, Z2, b1)
        rd.send(2, Z2, b1)
        kb = rd.expect(0, Z2, n)
    else:
        kb = (rd.expect(0, Z2, n), rd.expect(1, Z2, n))
    s0 = rd.deal(0, R, v0, n)
    s1 = rd.deal(1, R, v1, n)
    rd.run()
    if pt.pid == 0:
        b = b0 ^ rd.got(kb)
    elif pt.pid == 1:
        b = b1 ^ rd.got(kb)
    else:
        b = rd.got(kb[0]) ^ rd.got(kb[1])
    e = _unmask_bit(pt, R, b, db.zl)
    out = s0.value + s1.value + e.mul_const(top)
    return out.add_const(-(1 << (w - 2 - c)))


def _unmask_bit(pt: Party, R: Ring, b, r: ShareVec) -> ShareVec:
    """b xor r for public bits b and shared bit r: b + r - 2br."""
    bR = R.from_small(b)
    coef = R.sub(R.full(len(r), 1), R.mul_const(bR, 2))
    return r.mul_public(coef).add_public(bR)


# -------------------------------------------------------------- division

def _onehot_scale(pt: Party, b: ShareVec, nbits: int, R: Ring) -> ShareVec:
    """2^(nbits-1-p) where p is the index of b's top set bit (b < 2^nbits)."""
    x = b.downcast(nbits) if nbits < b.ring.width else b
    A, B = _bool_operands(pt, x)
    y = bool_add(pt, A, B)
    s = 1
    while s < nbits:  # smear the top bit downwards: y |= y >> s
        (t,) = band_many(pt, [(y, y.bshr(s))])
        y = y.xor(y.bshr(s)).xor(t)
        s *= 2
    h = y.xor(y.bshr(1))
    n = len(b)
    bits = b2a(pt, concat([h.bit(j) for j in range(nbits)]), R)
    parts = split(bits, [n] * nbits)
    out = parts[0].mul_const(1 << (nbits - 1))
    for j in range(1, nbits):
        out = out + parts[j].mul_const(1 << (nbits - 1 - j))
    return out


def div_iterations(frac_bits: int) -> int:
    need = math.ceil(math.log2(max((frac_bits + 8) / math.log2(17), 1.0)))
    return max(math.ceil(math.log2(max(frac_bits, 2))), need)


def reciprocal(pt: Party, b: ShareVec, bound_bits: int, prec: int, iterations: int) -> ShareVec:
    """About 2^prec / b for integers 1 <= b < 2^bound_bits (b = 0 gives 0)."""
    R, B, F = b.ring, bound_bits, prec
    if F < B or 2 * F + 4 > R.width:
        raise ValueError("precision does not fit the ring")
    s = _onehot_scale(pt, b, B, R)
    x = mul(pt, b, s)  # in [2^(B-1), 2^B): x / 2^B in [1/2, 1)
    y = x.mul_const(-round(32 / 17 * 2 ** (F - B))).add_const(round(48 / 17 * 2 ** F))
    for _ in range(iterations):
        e = trunc(pt, mul(pt, x, y), B)
        y = trunc(pt, mul(pt, y, e.rsub_const(1 << (F + 1))), F)
    return trunc(pt, mul(pt, y, s), B)


def div(pt: Party, a: ShareVec, b: ShareVec, frac_bits: int, bound_bits: int,
        prec: int | None = None) -> ShareVec:
    """Fixed-point a / b: raw result ~ a * 2^f / b when a and b carry the same
    scale.  ``bound_bits`` bounds b's raw value; b's secret must be > 0."""
    f = frac_bits
    F = prec if prec is not None else f + bound_bits + 8
    rec = reciprocal(pt, b, bound_bits, F, div_iterations(f))
    return trunc(pt, mul(pt, a, rec), F - f)
