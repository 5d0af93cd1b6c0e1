"""Command line: train (three parties in one process, over loopback TCP, or
as one party of a networked run), predict with an opened model, and sweep
tree heights for round counts."""
from __future__ import annotations

import argparse
import json
import logging
import random
import sys
import time
from dataclasses import asdict, dataclass, field

from .datasets import LoadError, iris, load_csv, tic_tac_toe, train_test_split, wine, planted
from .model import TreeModel
from .oracle import PlainDataset, accuracy, plain_train
from .rss import Party, run
from .train import TrainConfig, open_model, share_dataset, train_decision_tree
from .transport import TransportError, config_digest, tcp_endpoint

log = logging.getLogger("ents")

BUILTIN = {"iris": iris, "wine": wine, "tic-tac-toe": tic_tac_toe}

EXIT_LOAD, EXIT_SESSION, EXIT_CONFIG = 3, 4, 5


@dataclass
class RunConfig:
    dataset: str
    label_col: int = -1
    height: int = 6
    ring_k: int = 32
    ring_l: int = 128
    frac_bits: int | None = None
    scale_digits: int = 4
    seed: int | None = 0
    mode: str = "inproc"
    party_id: int | None = None
    addresses: list = field(default_factory=list)
    open_to: int | None = 0
    train_frac: float = 2 / 3

    def train_config(self) -> TrainConfig:
        return TrainConfig(self.ring_k, self.ring_l, self.frac_bits)

    def check(self, n: int):
        cfg = self.train_config()
        f = cfg.fbits(n)
        need = 2 * (f + max(1, (n).bit_length()) + 8) + 4
        if need > self.ring_l:
            raise ValueError(f"f={f} leaves no division headroom on a {self.ring_l}-bit ring")
        if not 1 <= self.height <= self.ring_k - 3:
            raise ValueError("height must be in [1, k-3]")


def load_dataset(cfg: RunConfig) -> PlainDataset:
    if cfg.dataset in BUILTIN:
        return BUILTIN[cfg.dataset]()
    return load_csv(cfg.dataset, cfg.label_col, cfg.scale_digits)[0]


def split_dataset(ds: PlainDataset, cfg: RunConfig):
    if cfg.train_frac >= 1:
        return ds, None
    return train_test_split(ds, random.Random(cfg.seed), cfg.train_frac)


def _meters(meters) -> list[dict]:
    return [m.snapshot() for m in meters]


def run_train(cfg: RunConfig) -> dict:
    """Train inside this process (inproc or loopback tcp) and report."""
    ds = load_dataset(cfg)
    tr, te = split_dataset(ds, cfg)
    cfg.check(tr.n)
    tc = cfg.train_config()

    def prog(pt: Party):
        sds = share_dataset(pt, tr if pt.pid == 0 else None, 0, tc)
        tree = train_decision_tree(pt, sds, cfg.height, tc)
        return open_model(pt, tree, cfg.open_to) if cfg.open_to is not None else None

    t0 = time.perf_counter()
    res = run(prog, mode=cfg.mode, seed=cfg.seed)
    wall = time.perf_counter() - t0
    report = {
        "config": asdict(cfg),
        "n_train": tr.n, "n_test": te.n if te else 0, "m": ds.m, "v": ds.v,
        "wall_seconds": round(wall, 3),
        "rounds": {"online": res.rounds("online"), "offline": res.rounds("offline")},
        "bytes": {"online": res.bytes("online"), "offline": res.bytes("offline")},
        "parties": _meters(res.meters),
    }
    model = res.outputs[cfg.open_to] if cfg.open_to is not None else None
    if model is not None:
        ref = plain_train(tr, cfg.height)
        report["model"] = model.dumps()
        report["accuracy"] = {
            "train": accuracy(model, tr), "train_plain": accuracy(ref, tr),
            "test": accuracy(model, te) if te else None, "test_plain": accuracy(ref, te) if te else None,
        }
        report["same_tree_as_plain"] = [l.entries for l in model.layers] == [l.entries for l in ref.layers]
    return report, model


def run_party(cfg: RunConfig) -> dict:
    """This process is one party of a networked run; party 0 owns the data."""
    tc = cfg.train_config()
    addrs = [_parse_addr(a) for a in cfg.addresses]
    if len(addrs) != 3:
        raise ValueError("--addresses needs three host:port entries")
    tr = None
    if cfg.party_id == 0:
        tr, _ = split_dataset(load_dataset(cfg), cfg)
        cfg.check(tr.n)
    digest = config_digest((cfg.height, cfg.ring_k, cfg.ring_l, cfg.frac_bits, cfg.seed, cfg.open_to))
    ep = tcp_endpoint(cfg.party_id, addrs, digest)
    try:
        pt = Party(ep, cfg.seed)
        t0 = time.perf_counter()
        sds = share_dataset(pt, tr, 0, tc)
        tree = train_decision_tree(pt, sds, cfg.height, tc)
        model = open_model(pt, tree, cfg.open_to) if cfg.open_to is not None else None
        wall = time.perf_counter() - t0
    finally:
        ep.link.close()
    report = {"config": asdict(cfg), "party": cfg.party_id, "wall_seconds": round(wall, 3),
              "meter": ep.meter.snapshot()}
    if model is not None:
        report["model"] = model.dumps()
    return report, model


def run_bench(heights, n: int, m: int, v: int, seed: int, mode: str = "inproc") -> list[dict]:
    """Metered rounds and bytes for each height on one synthetic dataset."""
    ds = planted(random.Random(seed), n, m, v, max(heights))
    rows = []
    for h in heights:
        def prog(pt, h=h):
            sds = share_dataset(pt, ds if pt.pid == 0 else None)
            train_decision_tree(pt, sds, h)
        t0 = time.perf_counter()
        res = run(prog, mode=mode, seed=seed)
        rows.append({"h": h, "n": n, "m": m,
                     "rounds_online": res.rounds("online"), "rounds_offline": res.rounds("offline"),
                     "rounds_total": res.rounds("online") + res.rounds("offline"),
                     "bytes_online": res.bytes("online"), "bytes_offline": res.bytes("offline"),
                     "gen_perm_calls": res.calls("gen_perm"),
                     "seconds": round(time.perf_counter() - t0, 3)})
    return rows


def _parse_addr(s: str):
    host, _, port = s.rpartition(":")
    return host or "127.0.0.1", int(port)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--ring-k", type=int, default=32, help="small ring width (default 32)")
    p.add_argument("--ring-l", type=int, default=128, help="large ring width (default 128)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the correlated randomness and the split; -1 for fresh keys")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ents", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("train", help="train a tree on shared data")
    t.add_argument("dataset", help="CSV path or one of: " + ", ".join(BUILTIN))
    t.add_argument("--label-col", type=int, default=-1)
    t.add_argument("--height", type=int, default=6)
    t.add_argument("--frac-bits", type=int, default=None)
    t.add_argument("--scale-digits", type=int, default=4)
    t.add_argument("--mode", choices=["inproc", "tcp"], default="inproc")
    t.add_argument("--party-id", type=int, choices=[0, 1, 2], default=None,
                   help="run only this party (needs --addresses)")
    t.add_argument("--addresses", default="", help="host:port of parties 0,1,2, comma separated")
    t.add_argument("--open-to", default="0", help="party that receives the model, or 'none'")
    t.add_argument("--train-frac", type=float, default=2 / 3)
    t.add_argument("--report", help="write the JSON report here (default stdout)")
    t.add_argument("--model-out", help="write the opened model here")
    _common(t)

    p = sub.add_parser("predict", help="predict with an opened model")
    p.add_argument("model")
    p.add_argument("data", help="CSV of attribute rows (a label column is ignored if --label-col is set)")
    p.add_argument("--label-col", type=int, default=None)
    p.add_argument("--scale-digits", type=int, default=4)

    b = sub.add_parser("bench", help="round and byte counts across heights")
    b.add_argument("--heights", default="1,2,3,4,5")
    b.add_argument("-n", type=int, default=256)
    b.add_argument("-m", type=int, default=4)
    b.add_argument("--labels", type=int, default=2)
    b.add_argument("--mode", choices=["inproc", "tcp"], default="inproc")
    b.add_argument("--seed", type=int, default=0)
    return ap


def _write(obj, path):
    text = json.dumps(obj, indent=2, default=str)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _predict(args) -> int:
    import csv
    from .datasets import quantize_value
    model = TreeModel.load(args.model)
    with open(args.data, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    for i, row in enumerate(rows):
        cells = [c for j, c in enumerate(row) if args.label_col is None or j != args.label_col % len(row)]
        try:
            x = [quantize_value(c, args.scale_digits) for c in cells]
        except Exception:
            if i == 0:
                continue  # header
            raise LoadError(f"row {i + 1}: non-numeric cell")
        print(model.predict(x))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.cmd == "predict":
            return _predict(args)
        if args.cmd == "bench":
            hs = [int(h) for h in args.heights.split(",")]
            rows = run_bench(hs, args.n, args.m, args.labels, args.seed, args.mode)
            cols = list(rows[0])
            print("\t".join(cols))
            for r in rows:
                print("\t".join(str(r[c]) for c in cols))
            return 0
        cfg = RunConfig(
            dataset=args.dataset, label_col=args.label_col, height=args.height,
            ring_k=args.ring_k, ring_l=args.ring_l, frac_bits=args.frac_bits,
            scale_digits=args.scale_digits, seed=None if args.seed < 0 else args.seed,
            mode=args.mode, party_id=args.party_id,
            addresses=[a for a in args.addresses.split(",") if a],
            open_to=None if args.open_to.lower() == "none" else int(args.open_to),
            train_frac=args.train_frac)
        report, model = run_party(cfg) if cfg.party_id is not None else run_train(cfg)
        if model is not None and args.model_out:
            model.save(args.model_out)
        _write(report, args.report)
        return 0
    except (LoadError, FileNotFoundError) as e:
        print(f"ents: load error: {e}", file=sys.stderr)
        return EXIT_LOAD
    except TransportError as e:
        print(f"ents: session error: {e}", file=sys.stderr)
        return EXIT_SESSION
    except ValueError as e:
        print(f"ents: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
