import json
from pathlib import Path

import pytest

from ents.cli import main, run_bench
from ents.datasets import LoadError, load_csv
from ents.model import TreeModel

DATA = Path(__file__).parent / "data"


def test_load_csv_toy():
    ds, classes = load_csv(DATA / "toy.csv")
    assert (ds.n, ds.m, ds.v) == (4, 1, 2)
    assert ds.X == [[0], [10000], [20000], [30000]]
    assert ds.offsets == [10000] and ds.scale == 10000


def test_load_csv_errors(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("a,label\n")
    with pytest.raises(LoadError):
        load_csv(p)
    p.write_text("1,0\n2\n")
    with pytest.raises(LoadError, match="row 2"):
        load_csv(p)
    p.write_text("1,0\nx,1\n")
    with pytest.raises(LoadError, match="row 2, column 1"):
        load_csv(p)
    p.write_text("1e12,0\n-1e12,1\n")
    with pytest.raises(LoadError, match="does not fit"):
        load_csv(p)


def test_label_remap(tmp_path):
    p = tmp_path / "l.csv"
    p.write_text("1.5,7\n2.25,3\n3,7\n")
    ds, classes = load_csv(p)
    assert classes == [3, 7] and ds.y == [1, 0, 1]


def test_iris_shape():
    from ents.datasets import iris
    ds = iris()
    assert (ds.n, ds.m, ds.v) == (150, 4, 3)


def test_train_report(tmp_path, capsys):
    rep, model = tmp_path / "r.json", tmp_path / "m.txt"
    assert main(["train", str(DATA / "toy.csv"), "--height", "1", "--train-frac", "1",
                 "--report", str(rep), "--model-out", str(model)]) == 0
    r = json.loads(rep.read_text())
    assert r["rounds"]["online"] > 0
    assert r["accuracy"]["train"] == 1.0 == r["accuracy"]["train_plain"]
    assert len(r["parties"]) == 3
    assert TreeModel.load(model).layers[0].entries[0].threshold == 2.5


def test_seeded_reruns_identical(tmp_path):
    outs = []
    for i in range(2):
        rep = tmp_path / f"{i}.json"
        main(["train", str(DATA / "toy.csv"), "--height", "2", "--train-frac", "1", "--report", str(rep)])
        r = json.loads(rep.read_text())
        outs.append((r["model"], r["parties"]))
    assert outs[0] == outs[1]


def test_predict_command(tmp_path, capsys):
    q = tmp_path / "q.csv"
    q.write_text("a\n1\n4\n")
    assert main(["predict", str(DATA / "toy_model.txt"), str(q)]) == 0
    assert capsys.readouterr().out.split() == ["0", "1"]


def test_exit_codes(tmp_path, capsys):
    assert main(["train", str(tmp_path / "missing.csv")]) == 3
    p = tmp_path / "h.csv"
    p.write_text("a,label\n")
    assert main(["train", str(p)]) == 3
    assert main(["train", str(DATA / "toy.csv"), "--height", "40"]) == 5


def test_bench_rows():
    rows = run_bench([1, 2], 16, 2, 2, 0)
    assert [r["h"] for r in rows] == [1, 2]
    assert rows[1]["rounds_total"] > rows[0]["rounds_total"]
    assert all(r["gen_perm_calls"] == 2 for r in rows)


def test_party_processes(tmp_path):
    import socket
    import subprocess
    import sys
    ports = []
    for _ in range(3):
        s = socket.socket()
        s.bind(("127.0.0.1", 0))
        ports.append(s.getsockname()[1])
        s.close()
    addrs = ",".join(f"127.0.0.1:{p}" for p in ports)
    procs = [subprocess.Popen([sys.executable, "-m", "ents.cli", "train", str(DATA / "toy.csv"),
                               "--height", "1", "--train-frac", "1", "--party-id", str(i),
                               "--addresses", addrs, "--report", str(tmp_path / f"p{i}.json")])
             for i in range(3)]
    assert [p.wait(timeout=120) for p in procs] == [0, 0, 0]
    r0 = json.loads((tmp_path / "p0.json").read_text())
    assert "internal 0 5/2" in r0["model"]
    assert "model" not in json.loads((tmp_path / "p1.json").read_text())
