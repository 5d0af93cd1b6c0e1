"""Train a height-1 tree on a four-row table and show what each party sees.

Party 0 owns the data.  The other two only ever hold random-looking shares;
the opened model goes to party 0.
"""
from ents.oracle import PlainDataset, plain_train
from ents.rss import run
from ents.train import open_model, share_dataset, train_decision_tree

ds = PlainDataset(X=[[1, 7], [4, 2], [6, 9], [3, 5]], y=[0, 1, 1, 0], v=2)


def prog(pt):
    sds = share_dataset(pt, ds if pt.pid == 0 else None)
    first = sds.attrs[0]
    R = first.ring
    print(f"party {pt.pid} holds for attribute 0: {R.to_ints(first.a)} and {R.to_ints(first.b)}")
    tree = train_decision_tree(pt, sds, 1)
    return open_model(pt, tree, 0)


res = run(prog)
model = res.outputs[0]
print()
print(model.describe())
ref = plain_train(ds, 1)
print("plain trainer agrees:", [l.entries for l in model.layers] == [l.entries for l in ref.layers])
print(f"online: {res.rounds('online')} rounds, {res.bytes('online')} bytes")
print(f"offline: {res.rounds('offline')} rounds, {res.bytes('offline')} bytes")
