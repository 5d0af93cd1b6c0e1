"""Lift shares from Z_{2^k} to Z_{2^l} and meter the online traffic.

The three-party conversion costs 4l + 4 bits in a single round for each
element, whatever k is.
"""
from ents.convert import convert_share
from ents.ring import ring
from ents.rss import reconstruct, run, share

for k, l in [(8, 64), (32, 64), (32, 128)]:
    def prog(pt, k=k, l=l):
        x = share(pt, [5, 250, 3], 0, ring(k), 3)
        pt.preprocess_dabits(ring(l), 3)
        r0, b0 = pt.meter.online.rounds, pt.meter.online.bits
        y = convert_share(pt, x, l)
        cost = pt.meter.online.rounds - r0, pt.meter.online.bits - b0
        return cost, reconstruct(pt, y)
    res = run(prog)
    rounds = max(o[0][0] for o in res.outputs)
    bits = sum(o[0][1] for o in res.outputs)
    print(f"k={k:3d} -> l={l:3d}: {bits // 3} bits per element in {rounds} round(s), "
          f"values {res.outputs[0][1]}")
