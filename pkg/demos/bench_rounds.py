"""Rounds grow linearly with height and the sort count stays at m."""
from ents.cli import run_bench

rows = run_bench([1, 2, 3, 4, 5, 6], n=256, m=4, v=2, seed=0)
print("h  rounds(total)  online MB  gen_perm calls")
for r in rows:
    print(f"{r['h']}  {r['rounds_total']:13d}  {r['bytes_online'] / 1e6:9.2f}  {r['gen_perm_calls']:14d}")
steps = [b["rounds_total"] - a["rounds_total"] for a, b in zip(rows, rows[1:])]
print("rounds per extra layer:", steps)
