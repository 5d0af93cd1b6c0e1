
from ents.groupwise import GroupFlags, flags_from_sorted, group_max, group_max_pair, group_prefix_sum, group_sum, vect_max
from ents.oracle import (plain_group_max_pair, plain_group_prefix_sum, plain_group_sum,
                         plain_vect_max)
from ents.ring import ring
from ents.rss import reconstruct, share
from conftest import run3

R = ring(32)
G6 = [1, 0, 1, 1, 0, 0]
X6 = [4, 3, 2, 8, 9, 0]


def sh(pt, v, dealer=0):
    return share(pt, v, dealer, R, len(v))


def test_examples():
    def prog(pt):
        G = GroupFlags(sh(pt, G6))
        x = sh(pt, X6, 1)
        m, y = group_max_pair(pt, G, x, sh(pt, [10, 20, 30, 40, 50, 60], 2))
        return [reconstruct(pt, v) for v in (group_sum(pt, G, x), group_prefix_sum(pt, G, x),
                                             group_max(pt, G, x), m, y)]
    assert run3(prog) == [[7, 7, 2, 17, 17, 17], [4, 7, 2, 8, 17, 17], [4, 4, 2, 9, 9, 9],
                          [4, 4, 2, 9, 9, 9], [10, 10, 30, 50, 50, 50]]


def test_trivial_cases():
    def prog(pt):
        one = GroupFlags(sh(pt, [1, 0, 0, 0]))
        single = GroupFlags(sh(pt, [1, 1, 1]))
        return (reconstruct(pt, group_sum(pt, one, sh(pt, [1, 2, 3, 4]))),
                reconstruct(pt, group_prefix_sum(pt, one, sh(pt, [0, 0, 0, 0]))),
                reconstruct(pt, group_max(pt, single, sh(pt, [5, 1, 7]))),
                reconstruct(pt, vect_max(pt, sh(pt, [9]), sh(pt, [4]))))
    assert run3(prog) == ([10] * 4, [0] * 4, [5, 1, 7], [4])


def test_vect_max_examples():
    def prog(pt):
        return (reconstruct(pt, vect_max(pt, sh(pt, [2, 3, 1]), sh(pt, [4, 5, 6]))),
                reconstruct(pt, vect_max(pt, sh(pt, [3, 3]), sh(pt, [7, 8]))))
    assert run3(prog) == ([5], [8])


def _flags(rng, n):
    return [1] + [int(rng.random() < 0.3) for _ in range(n - 1)]


def test_random_vs_oracle(rng):
    cases = []
    for _ in range(100):
        n = rng.randint(1, 64)
        cases.append((_flags(rng, n), [rng.randrange(-50, 50) % 2 ** 32 for _ in range(n)],
                      [rng.randrange(1000) for _ in range(n)]))

    def prog(pt):
        out = []
        for g, x, y in cases:
            G = GroupFlags(sh(pt, g))
            X, Y = sh(pt, x, 1), sh(pt, y, 2)
            m, p = group_max_pair(pt, G, X, Y)
            out.append([reconstruct(pt, v) for v in (group_sum(pt, G, X), group_prefix_sum(pt, G, X), m, p,
                                                    vect_max(pt, X, Y))])
        return out
    signed = lambda v: v - 2 ** 32 if v >= 2 ** 31 else v
    for (g, x, y), (s, ps, m, p, vm) in zip(cases, run3(prog)):
        xs = [signed(v) for v in x]
        assert s == [v % 2 ** 32 for v in plain_group_sum(g, x)]
        assert ps == [v % 2 ** 32 for v in plain_group_prefix_sum(g, x)]
        em, ep = plain_group_max_pair(g, xs, y)
        assert [signed(v) for v in m] == em and p == ep
        assert vm == [plain_vect_max(xs, y)]


def test_flags_from_sorted():
    out = run3(lambda pt: reconstruct(pt, flags_from_sorted(pt, sh(pt, [3, 3, 5, 6, 6, 6])).g))
    assert out == [1, 0, 1, 1, 0, 0]


def test_group_sum_constant_rounds():
    def prog(pt, n):
        G = GroupFlags(sh(pt, [1] + [0] * (n - 1)))
        x = sh(pt, list(range(n)))
        G.heads_first(pt)
        r0 = pt.meter.online.rounds
        group_sum(pt, G, x)
        return pt.meter.online.rounds - r0
    assert run3(lambda pt: prog(pt, 8)) == run3(lambda pt: prog(pt, 64))


def test_group_max_rounds_log_n():
    def prog(pt, n):
        G = GroupFlags(sh(pt, [1] + [0] * (n - 1)))
        x = sh(pt, list(range(n)))
        G.heads_first(pt)
        r0 = pt.meter.online.rounds
        group_max(pt, G, x)
        return pt.meter.online.rounds - r0
    r8, r16, r64 = (run3(lambda pt, n=n: prog(pt, n)) for n in (8, 16, 64))
    assert r16 - r8 > 0
    assert r64 - r16 == 2 * (r16 - r8)
