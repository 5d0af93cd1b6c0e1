"""Secure against plain accuracy on the bundled tables (height 6, 2/3 split).

Needs scikit-learn for Iris and Wine.  Takes under half a minute.
"""
import random
import time

from ents.datasets import iris, tic_tac_toe, train_test_split, wine
from ents.oracle import accuracy, plain_train
from ents.rss import run
from ents.train import open_model, share_dataset, train_decision_tree

for name, load in [("iris", iris), ("wine", wine), ("tic-tac-toe", tic_tac_toe)]:
    tr, te = train_test_split(load(), random.Random(0))
    t0 = time.perf_counter()
    model = run(lambda pt: open_model(pt, train_decision_tree(
        pt, share_dataset(pt, tr if pt.pid == 0 else None), 6), 0)).outputs[0]
    secs = time.perf_counter() - t0
    print(f"{name:12s} n={tr.n:4d} secure {accuracy(model, te):.3f}  "
          f"plain {accuracy(plain_train(tr, 6), te):.3f}  ({secs:.1f}s)")
