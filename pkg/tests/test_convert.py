import random

import numpy as np
import pytest

from ents.convert import (ConversionContext, TwoPartyDealer, convert_share, convert_share_two_party,
                          trunc_identity_check)
from ents.oracle import plain_convert_identity
from ents.ring import ring
from ents.rss import reconstruct, run, share
from conftest import run3


def test_identity_examples():
    assert trunc_identity_check(5, 3, 2) == (2, 0)
    assert trunc_identity_check(3, 3, 2) == (1, 0)


def test_identity_matches_plain_oracle():
    r = random.Random(0)
    for _ in range(2000):
        k = r.randint(2, 12)
        d0, d1, c = r.randrange(2 ** k), r.randrange(2 ** k), r.randrange(k)
        assert trunc_identity_check(d0, d1, c)[1] == plain_convert_identity(d0, d1, c)


def test_identity_protocol_case():
    """With c = k-1 and d0 + d1 = x + ovfl * 2^k, x < 2^(k-1), the excess bit
    is the parity of the shifted sum."""
    k = 8
    for x in range(2 ** (k - 1)):
        for d0 in range(0, 2 ** k, 7):
            d1 = (x - d0) % 2 ** k
            value, bit = trunc_identity_check(d0, d1, k - 1)
            assert bit == value & 1


def test_context_validation():
    with pytest.raises(ValueError):
        ConversionContext(64, 64)
    with pytest.raises(ValueError):
        ConversionContext(65, 128)


@pytest.mark.parametrize("k,l", [(8, 64), (8, 128), (32, 128)])
def test_convert_examples(k, l):
    xs = [7, 0, 2 ** (k - 1) - 1]

    def prog(pt):
        return reconstruct(pt, convert_share(pt, share(pt, xs, 0, ring(k), 3), l))
    assert run3(prog) == xs


def test_convert_random_k32():
    r = random.Random(1)
    xs = [r.randrange(2 ** 31) for _ in range(10 ** 4)]
    out = run3(lambda pt: reconstruct(pt, convert_share(pt, share(pt, xs, 1, ring(32), len(xs)), 128)))
    assert out == xs


def test_convert_batch_cost():
    n = 50

    def prog(pt):
        x = share(pt, list(range(n)), 0, ring(32), n)
        pt.preprocess_dabits(ring(128), n)
        r0, b0 = pt.meter.online.rounds, pt.meter.online.bits
        convert_share(pt, x, 128)
        return pt.meter.online.rounds - r0, pt.meter.online.bits - b0
    res = run(prog)
    assert all(o[0] == 1 for o in res.outputs)
    assert sum(o[1] for o in res.outputs) == (4 * 128 + 4) * n


def _two_party(xs, k, l, seed=3):
    S = ring(k)
    g = np.random.default_rng(seed)
    a = S.random(g, len(xs))
    b = S.sub(S.from_ints(xs), a)

    def prog(pt):
        dealer = TwoPartyDealer(seed, l)
        mine = a if pt.pid == 0 else b
        return convert_share_two_party(pt, mine, k, l, dealer)
    res = run(prog)
    L = ring(l)
    return L.to_ints(L.add(res.outputs[0], res.outputs[1])), res


def test_two_party_exhaustive_k8():
    xs = list(range(2 ** 7))
    got, res = _two_party(xs, 8, 64)
    assert got == xs
    assert res.outputs[2] is None
    assert res.rounds() == 1
    assert res.bits() == 2 * len(xs)


def test_two_party_boundary():
    assert _two_party([7, 2 ** 7 - 1], 8, 64)[0] == [7, 127]
