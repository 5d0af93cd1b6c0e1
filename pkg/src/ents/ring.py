"""Arithmetic over Z_{2^w} for w in 1..128.

Scalars are plain Python ints reduced on every write.  Vectors use numpy:
one uint64 per element for w <= 64, and two uint64 limbs (lo, hi) per element
for wider rings.  All protocol code goes through a ``Ring`` so it never has
to care which layout is in use.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_WIDTH = 128
_M32 = np.uint64(0xFFFFFFFF)
_M64 = (1 << 64) - 1


class RingRangeError(ValueError):
    pass


@dataclass(frozen=True)
class RingConfig:
    width: int
    frac_bits: int = 0

    def __post_init__(self):
        if not 1 <= self.width <= MAX_WIDTH:
            raise ValueError(f"ring width must be in 1..{MAX_WIDTH}, got {self.width}")
        if not 0 <= self.frac_bits < self.width:
            raise ValueError("frac_bits must be in [0, width)")

    @property
    def modulus(self) -> int:
        return 1 << self.width

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1


@dataclass(frozen=True)
class RingElement:
    value: int
    config: RingConfig

    def __post_init__(self):
        object.__setattr__(self, "value", self.value & self.config.mask)

    def signed(self) -> int:
        return to_signed(self.value, self.config.width)

    def __add__(self, other: "RingElement") -> "RingElement":
        return ring_add(self, other)

    def __mul__(self, other: "RingElement") -> "RingElement":
        return ring_mul(self, other)


def _same(a: RingElement, b: RingElement) -> RingConfig:
    if a.config.width != b.config.width:
        raise ValueError("ring mismatch")
    return a.config


def ring_add(a: RingElement, b: RingElement) -> RingElement:
    return RingElement(a.value + b.value, _same(a, b))


def ring_sub(a: RingElement, b: RingElement) -> RingElement:
    return RingElement(a.value - b.value, _same(a, b))


def ring_mul(a: RingElement, b: RingElement) -> RingElement:
    return RingElement(a.value * b.value, _same(a, b))


def ring_neg(a: RingElement) -> RingElement:
    return RingElement(-a.value, a.config)


def ring_downcast(a: RingElement, width: int) -> RingElement:
    if width > a.config.width:
        raise ValueError("downcast target must be narrower")
    return RingElement(a.value, RingConfig(width, min(a.config.frac_bits, width - 1)))


def to_signed(v: int, width: int) -> int:
    v &= (1 << width) - 1
    return v - (1 << width) if v >> (width - 1) else v


def fx_encode(r: float, frac_bits: int, width: int = 32) -> int:
    """round(r * 2^f) mod 2^w, refusing values that do not fit signed."""
    if abs(r) >= 2.0 ** (width - 1 - frac_bits):
        raise RingRangeError(f"{r} does not fit in Z_2^{width} with {frac_bits} fraction bits")
    return int(round(r * (1 << frac_bits))) & ((1 << width) - 1)


def fx_decode(v: int, frac_bits: int, width: int = 32) -> float:
    return to_signed(v, width) / float(1 << frac_bits)


def serialize_elements(values, width: int) -> bytes:
    nb = (width + 7) // 8
    mask = (1 << width) - 1
    out = bytearray(len(values).to_bytes(4, "little"))
    for v in values:
        out += (int(v) & mask).to_bytes(nb, "little")
    return bytes(out)


def deserialize_elements(data: bytes, width: int) -> list[int]:
    nb = (width + 7) // 8
    count = int.from_bytes(data[:4], "little")
    if len(data) != 4 + count * nb:
        raise ValueError("payload length does not match element count")
    return [int.from_bytes(data[4 + i * nb: 4 + (i + 1) * nb], "little") for i in range(count)]


# ---------------------------------------------------------------- vectors

class Ring:
    """Vector operations on Z_{2^w}.  Get instances through ``ring(w)``."""

    width: int
    nbytes: int

    def __init__(self, width: int):
        if not 1 <= width <= MAX_WIDTH:
            raise ValueError(f"ring width must be in 1..{MAX_WIDTH}")
        self.width = width
        self.nbytes = (width + 7) // 8
        self.mask_int = (1 << width) - 1

    def __repr__(self):
        return f"Ring({self.width})"

    def __eq__(self, other):
        return isinstance(other, Ring) and other.width == self.width

    def __hash__(self):
        return hash(("Ring", self.width))

    # helpers shared by both layouts
    def from_int(self, v: int, n: int = 1):
        return self.from_ints([v] * n)

    def concat(self, parts):
        return np.concatenate(parts, axis=0)

    def cumsum_exclusive(self, a):
        c = self.cumsum(a)
        return self.concat([self.zeros(1), c[:-1]])

    def total(self, a):
        return self.cumsum(a)[-1:]

    def bits_to_bytes(self, a) -> bytes:
        n = a.shape[0]
        if n == 0:
            return b""
        return np.ascontiguousarray(self._as_bytes(a)[:, : self.nbytes]).tobytes()

    def bytes_to_array(self, data: bytes, n: int):
        if len(data) != n * self.nbytes:
            raise ValueError("payload length does not match element count")
        raw = np.zeros((n, self._container_bytes), dtype=np.uint8)
        if n:
            raw[:, : self.nbytes] = np.frombuffer(data, dtype=np.uint8).reshape(n, self.nbytes)
        return self._from_bytes(raw)


class _SmallRing(Ring):
    _container_bytes = 8

    def __init__(self, width):
        super().__init__(width)
        self.mask = np.uint64(self.mask_int)

    def zeros(self, n):
        return np.zeros(n, dtype=np.uint64)

    def from_ints(self, values):
        return np.array([int(v) & self.mask_int for v in values], dtype=np.uint64)

    def to_ints(self, a) -> list[int]:
        return [int(v) for v in a]

    def from_small(self, a):
        return a & self.mask

    def to_u64(self, a):
        return a

    def full(self, n, v):
        return np.full(n, int(v) & self.mask_int, dtype=np.uint64)

    def random(self, gen: np.random.Generator, n):
        return gen.integers(0, 1 << 64, size=n, dtype=np.uint64) & self.mask

    def add(self, a, b):
        return (a + b) & self.mask

    def sub(self, a, b):
        return (a - b) & self.mask

    def neg(self, a):
        return (np.uint64(0) - a) & self.mask

    def mul(self, a, b):
        return (a * b) & self.mask

    def mul_const(self, a, c: int):
        return (a * np.uint64(int(c) & _M64)) & self.mask

    def add_const(self, a, c: int):
        return (a + np.uint64(int(c) & _M64)) & self.mask

    def cumsum(self, a):
        return np.cumsum(a, dtype=np.uint64) & self.mask

    def xor(self, a, b):
        return a ^ b

    def and_(self, a, b):
        return a & b

    def invert(self, a):
        return a ^ self.mask

    def shl(self, a, s: int):
        if s >= 64:
            return np.zeros_like(a)
        return (a << np.uint64(s)) & self.mask

    def shr(self, a, s: int):
        if s >= 64:
            return np.zeros_like(a)
        return a >> np.uint64(s)

    def bit(self, a, i: int):
        return (a >> np.uint64(i)) & np.uint64(1)

    def _as_bytes(self, a):
        return a.astype("<u8").view(np.uint8).reshape(-1, 8)

    def _from_bytes(self, raw):
        return raw.view("<u8").reshape(-1).astype(np.uint64)


def _mulhi64(a, b):
    """High 64 bits of the 128-bit product of two uint64 arrays."""
    al, ah = a & _M32, a >> np.uint64(32)
    bl, bh = b & _M32, b >> np.uint64(32)
    ll, lh, hl, hh = al * bl, al * bh, ah * bl, ah * bh
    mid = (ll >> np.uint64(32)) + (lh & _M32) + (hl & _M32)
    return hh + (lh >> np.uint64(32)) + (hl >> np.uint64(32)) + (mid >> np.uint64(32))


class _WideRing(Ring):
    """64 < w <= 128, stored as (n, 2) uint64 arrays of (lo, hi)."""

    _container_bytes = 16

    def __init__(self, width):
        super().__init__(width)
        self.hmask = np.uint64((1 << (width - 64)) - 1)

    def _norm(self, lo, hi):
        return np.stack([lo, hi & self.hmask], axis=-1)

    def _const(self, c: int):
        c = int(c) & self.mask_int
        return np.array([c & _M64, c >> 64], dtype=np.uint64)

    def zeros(self, n):
        return np.zeros((n, 2), dtype=np.uint64)

    def from_ints(self, values):
        vals = [int(v) & self.mask_int for v in values]
        out = np.zeros((len(vals), 2), dtype=np.uint64)
        if vals:
            out[:, 0] = [v & _M64 for v in vals]
            out[:, 1] = [v >> 64 for v in vals]
        return out

    def to_ints(self, a) -> list[int]:
        return [int(lo) | (int(hi) << 64) for lo, hi in a]

    def from_small(self, a):
        """Embed non-negative uint64 values."""
        return np.stack([a.astype(np.uint64), np.zeros_like(a, dtype=np.uint64)], axis=-1)

    def to_u64(self, a):
        return a[:, 0]

    def full(self, n, v):
        return np.tile(self._const(v), (n, 1))

    def random(self, gen, n):
        lo = gen.integers(0, 1 << 64, size=n, dtype=np.uint64)
        hi = gen.integers(0, 1 << 64, size=n, dtype=np.uint64)
        return self._norm(lo, hi)

    def add(self, a, b):
        lo = a[..., 0] + b[..., 0]
        carry = (lo < a[..., 0]).astype(np.uint64)
        return self._norm(lo, a[..., 1] + b[..., 1] + carry)

    def neg(self, a):
        lo = np.uint64(0) - a[..., 0]
        borrow = (a[..., 0] != 0).astype(np.uint64)
        return self._norm(lo, np.uint64(0) - a[..., 1] - borrow)

    def sub(self, a, b):
        lo = a[..., 0] - b[..., 0]
        borrow = (a[..., 0] < b[..., 0]).astype(np.uint64)
        return self._norm(lo, a[..., 1] - b[..., 1] - borrow)

    def mul(self, a, b):
        a0, a1, b0, b1 = a[..., 0], a[..., 1], b[..., 0], b[..., 1]
        lo = a0 * b0
        hi = _mulhi64(a0, b0) + a0 * b1 + a1 * b0
        return self._norm(lo, hi)

    def mul_const(self, a, c: int):
        return self.mul(a, self._const(c))

    def add_const(self, a, c: int):
        return self.add(a, self._const(c))

    def cumsum(self, a):
        lo, hi = a[:, 0], a[:, 1]
        c0 = np.cumsum(lo & _M32, dtype=np.uint64)
        c1 = np.cumsum(lo >> np.uint64(32), dtype=np.uint64)
        ch = np.cumsum(hi, dtype=np.uint64)
        t = (c0 >> np.uint64(32)) + (c1 & _M32)
        out_lo = (c0 & _M32) | ((t & _M32) << np.uint64(32))
        carry = (t >> np.uint64(32)) + (c1 >> np.uint64(32))
        return self._norm(out_lo, ch + carry)

    def xor(self, a, b):
        return a ^ b

    def and_(self, a, b):
        return a & b

    def invert(self, a):
        return self._norm(~a[..., 0], ~a[..., 1])

    def shl(self, a, s: int):
        lo, hi = a[..., 0], a[..., 1]
        if s == 0:
            return a.copy()
        if s >= 128:
            return np.zeros_like(a)
        if s >= 64:
            return self._norm(np.zeros_like(lo), lo << np.uint64(s - 64))
        s_ = np.uint64(s)
        return self._norm(lo << s_, (hi << s_) | (lo >> np.uint64(64 - s)))

    def shr(self, a, s: int):
        lo, hi = a[..., 0], a[..., 1]
        if s == 0:
            return a.copy()
        if s >= 128:
            return np.zeros_like(a)
        if s >= 64:
            return self._norm(hi >> np.uint64(s - 64), np.zeros_like(hi))
        s_ = np.uint64(s)
        return self._norm((lo >> s_) | (hi << np.uint64(64 - s)), hi >> s_)

    def bit(self, a, i: int):
        if i >= 64:
            return (a[..., 1] >> np.uint64(i - 64)) & np.uint64(1)
        return (a[..., 0] >> np.uint64(i)) & np.uint64(1)

    def _as_bytes(self, a):
        return np.ascontiguousarray(a.astype("<u8")).view(np.uint8).reshape(-1, 16)

    def _from_bytes(self, raw):
        return raw.view("<u8").reshape(-1, 2).astype(np.uint64)


@lru_cache(maxsize=None)
def ring(width: int) -> Ring:
    return _SmallRing(width) if width <= 64 else _WideRing(width)
