

from ents.oracle import (plain_apply, plain_argsort_stable, plain_compose, plain_gen_perm_by_bit)
from ents.ring import ring
from ents.rss import reconstruct, share
from ents.sort import (SharedPermutation, apply_perm, compose_perms, gen_perm, gen_perm_by_bit,
                       identity_perm, unapply_perm)
from conftest import run3

R = ring(32)


def perm(pt, p):
    return SharedPermutation(share(pt, p, 0, R, len(p)))


def test_apply_examples():
    def prog(pt):
        x = share(pt, [4, 9, 2, 9, 3], 1, R, 5)
        return (reconstruct(pt, apply_perm(pt, perm(pt, [2, 3, 0, 4, 1]), x)),
                reconstruct(pt, apply_perm(pt, perm(pt, [3, 2, 4, 0, 1]), x)),
                reconstruct(pt, apply_perm(pt, identity_perm(pt, R, 5), x)))
    assert run3(prog) == ([2, 3, 4, 9, 9], [9, 3, 9, 4, 2], [4, 9, 2, 9, 3])


def test_unapply_examples():
    def prog(pt):
        x = share(pt, [2, 3, 4, 9, 9], 1, R, 5)
        return (reconstruct(pt, unapply_perm(pt, perm(pt, [2, 3, 0, 4, 1]), x)),
                reconstruct(pt, unapply_perm(pt, identity_perm(pt, R, 5), x)))
    assert run3(prog) == ([4, 9, 2, 9, 3], [2, 3, 4, 9, 9])


def test_round_trip_random(rng):
    cases = []
    for _ in range(100):
        n = rng.randint(1, 40)
        p = list(range(n))
        rng.shuffle(p)
        cases.append((p, [rng.getrandbits(32) for _ in range(n)]))

    def prog(pt):
        out = []
        for p, x in cases:
            P, X = perm(pt, p), share(pt, x, 2, R, len(x))
            out.append(reconstruct(pt, unapply_perm(pt, P, apply_perm(pt, P, X))))
        return out
    assert run3(prog) == [x for _, x in cases]


def test_gen_perm_by_bit():
    def prog(pt):
        return (reconstruct(pt, gen_perm_by_bit(pt, share(pt, [1, 0, 1, 0], 0, R, 4)).values),
                reconstruct(pt, gen_perm_by_bit(pt, share(pt, [0, 0, 0], 0, R, 3)).values))
    assert run3(prog) == ([2, 0, 3, 1], [0, 1, 2])


def test_gen_perm_by_bit_random(rng):
    bs = [[rng.randint(0, 1) for _ in range(rng.randint(1, 64))] for _ in range(100)]
    out = run3(lambda pt: [reconstruct(pt, gen_perm_by_bit(pt, share(pt, b, 0, R, len(b))).values) for b in bs])
    assert out == [plain_gen_perm_by_bit(b) for b in bs]


def test_compose():
    def prog(pt):
        return (reconstruct(pt, compose_perms(pt, perm(pt, [1, 2, 0]), perm(pt, [2, 0, 1])).values),
                reconstruct(pt, compose_perms(pt, identity_perm(pt, R, 3), perm(pt, [2, 0, 1])).values))
    assert run3(prog) == ([0, 1, 2], [2, 0, 1])


def test_compose_functional(rng):
    cases = []
    for _ in range(30):
        n = rng.randint(2, 30)
        a, b = list(range(n)), list(range(n))
        rng.shuffle(a)
        rng.shuffle(b)
        cases.append((a, b, [rng.randrange(1000) for _ in range(n)]))

    def prog(pt):
        out = []
        for a, b, x in cases:
            c = compose_perms(pt, perm(pt, a), perm(pt, b))
            out.append((reconstruct(pt, c.values), reconstruct(pt, apply_perm(pt, c, share(pt, x, 1, R, len(x))))))
        return out
    for (a, b, x), (c, z) in zip(cases, run3(prog)):
        assert c == plain_compose(a, b)
        assert z == plain_apply(b, plain_apply(a, x))


def test_gen_perm():
    def prog(pt):
        return (reconstruct(pt, gen_perm(pt, share(pt, [4, 9, 2, 9, 3], 0, R, 5)).values),
                reconstruct(pt, gen_perm(pt, share(pt, [1, 5, 8], 0, R, 3), 4).values))
    assert run3(prog) == ([2, 3, 0, 4, 1], [0, 1, 2])


def test_gen_perm_random_with_duplicates(rng):
    xs = [[rng.randrange(16) for _ in range(rng.randint(1, 64))] for _ in range(100)]

    def prog(pt):
        out = []
        for x in xs:
            X = share(pt, x, 0, R, len(x))
            P = gen_perm(pt, X, 4)
            out.append((reconstruct(pt, P.values), reconstruct(pt, apply_perm(pt, P, X))))
        return out
    for x, (p, s) in zip(xs, run3(prog)):
        assert p == plain_argsort_stable(x)
        assert s == sorted(x)


def test_gen_perm_rounds_affine_in_bits():
    def prog(pt, nb):
        x = share(pt, list(range(16)), 0, R, 16)
        r0 = pt.meter.online.rounds
        gen_perm(pt, x, nb)
        return pt.meter.online.rounds - r0
    counts = [run3(lambda pt, nb=nb: prog(pt, nb)) for nb in (4, 8, 16)]
    d1, d2 = counts[1] - counts[0], counts[2] - counts[1]
    assert d2 == 2 * d1 or abs(d2 - 2 * d1) <= 0.05 * d2
    assert counts[0] > 0
