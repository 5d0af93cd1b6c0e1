"""Acceptance checks.  Each test records one PASS/FAIL line; the lines are
printed at the end of the pytest run (see conftest.py) and also when this
file is run as a script.

Criterion 6 needs the Diagnosis (acute inflammations) table as a CSV with
the label in the last column, given by the ENTS_DIAGNOSIS_CSV environment
variable.  Without it that part fails.
"""
from __future__ import annotations

import os
import random
import sys
import time
from fractions import Fraction

import numpy as np

from ents.convert import TwoPartyDealer, convert_share, convert_share_two_party, trunc_identity_check
from ents.datasets import iris, load_csv, random_case, planted, tic_tac_toe, train_test_split, wine
from ents.groupwise import GroupFlags, group_max, group_max_pair, group_prefix_sum, group_sum, vect_max
from ents.oracle import (accuracy, plain_apply, plain_argsort_stable, plain_compose, plain_group_max,
                         plain_group_max_pair, plain_group_prefix_sum, plain_group_sum, plain_train,
                         plain_unapply, plain_vect_max)
from ents.ring import ring, to_signed
from ents.rss import div, reconstruct, run, share
from ents.sort import SharedPermutation, apply_perm, compose_perms, gen_perm, unapply_perm
from ents.train import open_model, share_dataset, train_decision_tree

RESULTS: list[str] = []


def record(no: int, ok: bool | None, text: str):
    tag = {True: "PASS", False: "FAIL", None: "NOT REPRODUCIBLE"}[ok]
    RESULTS.append(f"criterion {no}: {tag}: {text}")


# ------------------------------------------------------------------ 1

def test_criterion_1_conversion_cost():
    def prog(pt):
        x = share(pt, [12345], 0, ring(32), 1)
        pt.preprocess_dabits(ring(128), 1)
        r0, b0 = pt.meter.online.rounds, pt.meter.online.bits
        convert_share(pt, x, 128)
        return pt.meter.online.rounds - r0, pt.meter.online.bits - b0
    res = run(prog)
    rounds = max(o[0] for o in res.outputs)
    bits = sum(o[1] for o in res.outputs)
    ok = rounds == 1 and bits == 516
    record(1, ok, f"one element k=32 -> l=128: {bits} online bits in {rounds} round(s) (want 516 in 1)")
    assert ok


# ------------------------------------------------------------------ 2

def test_criterion_2_conversion_exhaustive():
    xs = list(range(128))
    three = run(lambda pt: reconstruct(pt, convert_share(pt, share(pt, xs, 0, ring(8), 128), 64))).outputs[0]
    S, L = ring(8), ring(64)
    g = np.random.default_rng(7)
    a = S.random(g, 128)
    b = S.sub(S.from_ints(xs), a)
    res = run(lambda pt: convert_share_two_party(pt, a if pt.pid == 0 else b, 8, 64, TwoPartyDealer(7, 64)))
    two = L.to_ints(L.add(res.outputs[0], res.outputs[1]))
    bad3 = sum(u != v for u, v in zip(three, xs))
    bad2 = sum(u != v for u, v in zip(two, xs))
    ok = bad3 == 0 and bad2 == 0
    record(2, ok, f"k=8, l=64, 128 secrets: {bad3} three-party and {bad2} two-party mismatches")
    assert ok


# ------------------------------------------------------------------ 3

def test_criterion_3_truncation_identity():
    t0 = time.perf_counter()
    count = bad = 0
    for k in range(1, 11):
        for c in range(k):
            for d0 in range(1 << k):
                for d1 in range(1 << k):
                    if trunc_identity_check(d0, d1, c)[1] not in (0, 1):
                        bad += 1
            count += 4 ** k
    ok = bad == 0
    record(3, ok, f"k<=10: {count} (d0, d1, c) triples, {bad} with bit outside {{0,1}} "
                  f"({time.perf_counter() - t0:.0f}s)")
    assert ok


# ------------------------------------------------------------------ 4

def test_criterion_4_protocol_suite():
    rng = random.Random(44)
    R = ring(32)
    cases = []
    for _ in range(100):
        n = rng.randint(1, 64)
        x = [rng.randrange(1 << 12) for _ in range(n)]
        key = [rng.randrange(16) for _ in range(n)]
        a, b = list(range(n)), list(range(n))
        rng.shuffle(a)
        rng.shuffle(b)
        g = [1] + [int(rng.random() < 0.3) for _ in range(n - 1)]
        y = [rng.randrange(1 << 12) for _ in range(n)]
        cases.append((n, x, key, a, b, g, y))

    def prog(pt):
        out = []
        for n, x, key, a, b, g, y in cases:
            sh = lambda v, d=0: share(pt, v, d, R, n)
            X, Y = sh(x, 1), sh(y, 2)
            A, B = SharedPermutation(sh(a)), SharedPermutation(sh(b))
            G = GroupFlags(sh(g))
            P = gen_perm(pt, sh(key), 4)
            mx, py = group_max_pair(pt, G, X, Y)
            out.append({
                "gen_perm": reconstruct(pt, P.values),
                "apply": reconstruct(pt, apply_perm(pt, A, X)),
                "unapply": reconstruct(pt, unapply_perm(pt, A, X)),
                "compose": reconstruct(pt, compose_perms(pt, A, B).values),
                "group_sum": reconstruct(pt, group_sum(pt, G, X)),
                "group_prefix_sum": reconstruct(pt, group_prefix_sum(pt, G, X)),
                "group_max": reconstruct(pt, group_max(pt, G, X)),
                "group_max_pair": (reconstruct(pt, mx), reconstruct(pt, py)),
                "vect_max": reconstruct(pt, vect_max(pt, X, Y))[0],
            })
        return out
    got = run(prog).outputs[0]
    mism = dict.fromkeys(got[0], 0)
    for (n, x, key, a, b, g, y), o in zip(cases, got):
        want = {
            "gen_perm": plain_argsort_stable(key),
            "apply": plain_apply(a, x),
            "unapply": plain_unapply(a, x),
            "compose": plain_compose(a, b),
            "group_sum": plain_group_sum(g, x),
            "group_prefix_sum": plain_group_prefix_sum(g, x),
            "group_max": plain_group_max(g, x),
            "group_max_pair": plain_group_max_pair(g, x, y),
            "vect_max": plain_vect_max(x, y),
        }
        for k in mism:
            w = want[k]
            mism[k] += (tuple(w) if k == "group_max_pair" else w) != o[k]
    ok = sum(mism.values()) == 0
    record(4, ok, f"{len(cases)} random instances (n<=64) per op; mismatches: "
                  + ", ".join(f"{k}={v}" for k, v in mism.items()))
    assert ok


# ------------------------------------------------------------------ 5

def test_criterion_5_tree_equivalence():
    rng = random.Random(55)
    t0 = time.perf_counter()
    same = 0
    trials = 24
    shapes = []
    for _ in range(trials):
        ds, h = random_case(rng)
        shapes.append((ds.n, ds.m, ds.v, h))
        model = run(lambda pt: open_model(pt, train_decision_tree(
            pt, share_dataset(pt, ds if pt.pid == 0 else None), h), 0)).outputs[0]
        ref = plain_train(ds, h)
        same += [l.entries for l in model.layers] == [l.entries for l in ref.layers]
    ok = same == trials
    hs = sorted({s[3] for s in shapes})
    record(5, ok, f"{same}/{trials} near-tie-free datasets (n<=64, m<=4, v<=3, h in {hs}) give the "
                  f"plain trainer's tree ({time.perf_counter() - t0:.0f}s)")
    assert ok


# ------------------------------------------------------------------ 6

def _secure_accuracy(ds, seeds, h=6):
    accs, plain = [], []
    for s in seeds:
        tr, te = train_test_split(ds, random.Random(s))
        model = run(lambda pt: open_model(pt, train_decision_tree(
            pt, share_dataset(pt, tr if pt.pid == 0 else None), h), 0), seed=s).outputs[0]
        accs.append(accuracy(model, te))
        plain.append(accuracy(plain_train(tr, h), te))
    return sum(accs) / len(accs), sum(plain) / len(plain)


def test_criterion_6_accuracy():
    seeds = range(5)
    targets = [("Iris", iris, 0.9960, 0.03), ("Wine", wine, 0.8622, 0.05),
               ("Diagnosis", None, 1.0, 0.0), ("Tic-tac-toe", tic_tac_toe, 0.8987, 0.03)]
    parts, ok = [], True
    for name, loader, want, tol in targets:
        if loader is None:
            path = os.environ.get("ENTS_DIAGNOSIS_CSV")
            if not path:
                parts.append(f"{name}: dataset not available offline")
                ok = False
                continue
            loader = lambda p=path: load_csv(p)[0]
        mean, plain = _secure_accuracy(loader(), seeds)
        good = abs(mean - want) <= tol if tol else mean == want
        ok &= good
        parts.append(f"{name} {mean:.4f} (plain {plain:.4f}, want {want}±{tol}) {'ok' if good else 'off'}")
    record(6, ok, "; ".join(parts))
    assert ok


# ------------------------------------------------------------------ 7

def test_criterion_7_round_shape():
    n, m = 256, 4
    ds = planted(random.Random(77), n, m, 2, 5)
    rows = []
    for h in range(1, 6):
        def prog(pt, h=h):
            train_decision_tree(pt, share_dataset(pt, ds if pt.pid == 0 else None), h)
        res = run(prog)
        rows.append((h, res.rounds("online") + res.rounds("offline"), res.calls("gen_perm")))
    hs = np.array([r[0] for r in rows], float)
    rs = np.array([r[1] for r in rows], float)
    slope, icept = np.polyfit(hs, rs, 1)
    resid = np.max(np.abs(rs - (slope * hs + icept)) / rs)
    perms_ok = all(r[2] == m for r in rows)
    ok = resid < 0.05 and perms_ok
    record(7, ok, f"n=256 rounds for h=1..5: {[int(r) for r in rs]}; affine fit {slope:.0f}h+{icept:.0f}, "
                  f"max residual {100 * resid:.2f}%; gen_perm calls {[r[2] for r in rows]} (m={m})")
    assert ok


# ------------------------------------------------------------------ 8

def test_criterion_8_declared():
    record(8, None, "absolute LAN/WAN training times and ratios against other frameworks are not "
                    "measured; criteria 1 and 7 check the mechanisms instead")


# ------------------------------------------------------------------ 9

def test_criterion_9_division():
    f, B = 16, 24  # f = 2 * ceil(log2 256)
    R = ring(128)
    rng = random.Random(99)
    a = [rng.randrange(1, 256 << f) for _ in range(1000)]
    b = [rng.randrange(1, 256 << f) for _ in range(1000)]
    got = run(lambda pt: reconstruct(pt, div(pt, share(pt, a, 0, R, 1000), share(pt, b, 1, R, 1000), f, B))).outputs[0]
    worst = 0.0
    for x, y, z in zip(a, b, got):
        q = Fraction(x, y)
        err = abs(Fraction(to_signed(z, 128), 1 << f) - q) / max(1, q)
        worst = max(worst, float(err))
    ok = worst <= 2 ** (-f + 2)
    record(9, ok, f"1000 random positive pairs at f=16: max relative error {worst:.3g} "
                  f"(bound {2 ** (-f + 2):.3g})")
    assert ok


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    tests.sort(key=lambda f: int(f.__name__.split("_")[2]))
    for t in tests:
        try:
            t()
        except AssertionError:
            pass
        print(RESULTS[-1], flush=True)
    sys.exit(0 if all(": PASS:" in r or "NOT REPRODUCIBLE" in r for r in RESULTS) else 1)
