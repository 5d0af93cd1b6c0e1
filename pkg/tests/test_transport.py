import pytest

from ents.rss import run, share, reconstruct
from ents.ring import ring
from ents.transport import Envelope, TransportError, run_session


def test_send_recv_and_meter():
    def p0(ep):
        ep.send(1, b"abcd")
        ep.send(1, b"efgh")
    def p1(ep):
        return ep.recv(0), ep.recv(0)
    res = run_session([p0, p1, lambda ep: None])
    assert res.outputs[1] == (b"abcd", b"efgh")
    assert res.meters[0].online.bytes_to[1] == 8
    assert res.meters[0].online.bits == 64
    assert res.meters[1].online.bytes == 0


def test_exchange_counts_rounds_and_bits():
    def prog(ep):
        peers = [p for p in range(3) if p != ep.pid]
        got = ep.exchange({p: (bytes([ep.pid]), 3) for p in peers}, peers)
        return sorted(got.items())
    res = run_session([prog] * 3)
    assert res.outputs[0] == [(1, b"\x01"), (2, b"\x02")]
    assert all(m.online.rounds == 1 for m in res.meters)
    assert all(m.online.bits == 6 and m.online.bytes == 2 for m in res.meters)  # symmetric


def test_envelope_round_trip():
    e = Envelope(1, 2, 7, b"xyz")
    assert Envelope.decode(e.encode()) == e
    with pytest.raises(TransportError):
        Envelope.decode(e.encode()[:-1])


def test_errors_propagate():
    def bad(ep):
        raise RuntimeError("boom")
    def waits(ep):
        ep.recv(0)
    with pytest.raises(RuntimeError, match="boom"):
        run_session([bad, waits, waits], timeout=5)


def test_bad_destination():
    def prog(ep):
        if ep.pid == 0:
            ep.send(0, b"")
    with pytest.raises(TransportError):
        run_session([prog] * 3)


def test_tcp_matches_inproc():
    R = ring(32)

    def prog(pt):
        x = share(pt, [3, 1, 4, 1, 5], 0, R, 5)
        from ents.rss import mul, lt
        return reconstruct(pt, lt(pt, mul(pt, x, x), x.add_const(7)))

    a = run(prog, mode="inproc", seed=5)
    b = run(prog, mode="tcp", seed=5)
    assert a.outputs == b.outputs
    assert [m.snapshot() for m in a.meters] == [m.snapshot() for m in b.meters]
