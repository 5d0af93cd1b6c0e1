"""Point-to-point channels between the three parties, with metering.

Every protocol step goes through ``Endpoint.exchange``: a party hands over
the messages it sends in this step and names the peers it expects to hear
from.  All three parties call ``exchange`` for every step, so each step is
one communication round for everybody.  Only payload bits are metered; the
envelope framing is not.
"""
from __future__ import annotations

import hashlib
import logging
import queue
import socket
import struct
import threading
import time
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

log = logging.getLogger(__name__)

N_PARTIES = 3
HEADER = struct.Struct("<BBQI")  # from, to, seq, payload length


def next_party(i: int) -> int:
    return (i + 1) % N_PARTIES


def prev_party(i: int) -> int:
    return (i + 2) % N_PARTIES


class TransportError(RuntimeError):
    pass


class SessionAborted(TransportError):
    pass


@dataclass
class Envelope:
    src: int
    dst: int
    seq: int
    payload: bytes

    def encode(self) -> bytes:
        return HEADER.pack(self.src, self.dst, self.seq, len(self.payload)) + self.payload

    @classmethod
    def decode(cls, data: bytes) -> "Envelope":
        src, dst, seq, n = HEADER.unpack_from(data)
        payload = data[HEADER.size:]
        if len(payload) != n:
            raise TransportError("truncated envelope")
        return cls(src, dst, seq, payload)


@dataclass
class PhaseStats:
    bits_to: Counter = field(default_factory=Counter)
    bytes_to: Counter = field(default_factory=Counter)
    messages: int = 0
    rounds: int = 0

    @property
    def bits(self) -> int:
        return sum(self.bits_to.values())

    @property
    def bytes(self) -> int:
        return sum(self.bytes_to.values())


class CommMeter:
    """Per-party counters, split by phase ("online", "offline", and "setup"
    once used)."""

    def __init__(self):
        self.phases: dict[str, PhaseStats] = {"online": PhaseStats(), "offline": PhaseStats()}
        self.phase = "online"
        self.calls: Counter = Counter()

    @property
    def online(self) -> PhaseStats:
        return self.phases["online"]

    @property
    def offline(self) -> PhaseStats:
        return self.phases["offline"]

    @contextmanager
    def in_phase(self, name: str):
        old = self.phase
        self.phases.setdefault(name, PhaseStats())
        self.phase = name
        try:
            yield
        finally:
            self.phase = old

    def record_send(self, peer: int, nbytes: int, nbits: int):
        st = self.phases[self.phase]
        st.bytes_to[peer] += nbytes
        st.bits_to[peer] += nbits
        st.messages += 1

    def record_round(self):
        self.phases[self.phase].rounds += 1

    def snapshot(self) -> dict:
        return {
            name: {"bits": st.bits, "bytes": st.bytes, "messages": st.messages, "rounds": st.rounds}
            for name, st in self.phases.items()
        } | {"calls": dict(self.calls)}


# ------------------------------------------------------------------ links

class _Link:
    """One directed pair of FIFO queues, plus a way to push bytes out."""

    def send(self, env: Envelope):
        raise NotImplementedError

    def recv(self, src: int) -> Envelope:
        raise NotImplementedError

    def close(self):
        pass


class _InprocHub:
    def __init__(self):
        self.queues = {(s, d): queue.Queue() for s in range(N_PARTIES) for d in range(N_PARTIES) if s != d}
        self.abort = threading.Event()


class _InprocLink(_Link):
    def __init__(self, hub: _InprocHub, me: int, timeout: float):
        self.hub, self.me, self.timeout = hub, me, timeout

    def send(self, env):
        self.hub.queues[(self.me, env.dst)].put(env)

    def recv(self, src):
        q = self.hub.queues[(src, self.me)]
        waited = 0.0
        while True:
            if self.hub.abort.is_set():
                raise SessionAborted("another party failed")
            try:
                return q.get(timeout=0.05)
            except queue.Empty:
                waited += 0.05
                if waited > self.timeout:
                    raise TransportError(f"party {self.me}: timed out waiting for party {src}")

    def close(self):
        self.hub.abort.set()


def _read_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(min(1 << 20, n - len(buf)))
        if not chunk:
            raise TransportError("peer disconnected")
        buf += chunk
    return bytes(buf)


class _TcpLink(_Link):
    """Sockets to both peers; a reader thread per peer drains into a queue."""

    def __init__(self, me: int, socks: dict[int, socket.socket], timeout: float):
        self.me, self.socks, self.timeout = me, socks, timeout
        self.inbox = {p: queue.Queue() for p in socks}
        self.locks = {p: threading.Lock() for p in socks}
        self.readers = []
        for p, s in socks.items():
            t = threading.Thread(target=self._reader, args=(p, s), daemon=True)
            t.start()
            self.readers.append(t)

    def _reader(self, peer, sock):
        try:
            while True:
                head = _read_exact(sock, HEADER.size)
                n = HEADER.unpack(head)[3]
                self.inbox[peer].put(Envelope.decode(head + _read_exact(sock, n)))
        except (OSError, TransportError) as e:
            self.inbox[peer].put(e)

    def send(self, env):
        with self.locks[env.dst]:
            self.socks[env.dst].sendall(env.encode())

    def recv(self, src):
        try:
            item = self.inbox[src].get(timeout=self.timeout)
        except queue.Empty:
            raise TransportError(f"party {self.me}: timed out waiting for party {src}") from None
        if isinstance(item, Exception):
            raise TransportError(f"party {self.me}: link to party {src} failed: {item}")
        return item

    def close(self):
        for s in self.socks.values():
            try:
                s.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            s.close()


# --------------------------------------------------------------- endpoint

class Endpoint:
    """A party's view of the network."""

    def __init__(self, pid: int, link: _Link):
        self.pid = pid
        self.link = link
        self.meter = CommMeter()
        self._seq_out = Counter()
        self._seq_in = Counter()

    @property
    def next(self) -> int:
        return next_party(self.pid)

    @property
    def prev(self) -> int:
        return prev_party(self.pid)

    def send(self, dst: int, payload: bytes, bits: int | None = None):
        if dst == self.pid or not 0 <= dst < N_PARTIES:
            raise TransportError(f"bad destination {dst}")
        env = Envelope(self.pid, dst, self._seq_out[dst], payload)
        self._seq_out[dst] += 1
        self.meter.record_send(dst, len(payload), 8 * len(payload) if bits is None else bits)
        self.link.send(env)

    def recv(self, src: int) -> bytes:
        env = self.link.recv(src)
        if env.src != src or env.dst != self.pid or env.seq != self._seq_in[src]:
            raise TransportError(
                f"party {self.pid}: out-of-order message from {env.src} (seq {env.seq}, "
                f"expected {self._seq_in[src]})")
        self._seq_in[src] += 1
        return env.payload

    def exchange(self, outgoing: dict[int, tuple[bytes, int]], incoming: Sequence[int]) -> dict[int, bytes]:
        """One communication round: send everything, then wait for ``incoming``."""
        self.meter.record_round()
        for dst, (payload, bits) in outgoing.items():
            self.send(dst, payload, bits)
        return {src: self.recv(src) for src in incoming}


# ---------------------------------------------------------------- sessions

@dataclass
class SessionResult:
    outputs: list[Any]
    meters: list[CommMeter]

    def rounds(self, phase: str = "online") -> int:
        return max(m.phases[phase].rounds for m in self.meters if phase in m.phases)

    def bits(self, phase: str = "online") -> int:
        return sum(m.phases[phase].bits for m in self.meters if phase in m.phases)

    def bytes(self, phase: str = "online") -> int:
        return sum(m.phases[phase].bytes for m in self.meters if phase in m.phases)

    def calls(self, name: str) -> int:
        return max(m.calls[name] for m in self.meters)


def config_digest(obj: Any) -> bytes:
    return hashlib.sha256(repr(obj).encode()).digest()


def _handshake(sock: socket.socket, me: int, digest: bytes) -> int:
    sock.sendall(bytes([me]) + digest)
    data = _read_exact(sock, 1 + len(digest))
    if data[1:] != digest:
        raise TransportError("configuration digest mismatch with peer")
    return data[0]


def connect_tcp(me: int, addresses: Sequence[tuple[str, int]], digest: bytes = b"\0" * 32,
                listener: socket.socket | None = None, timeout: float = 60.0) -> dict[int, socket.socket]:
    """Party ``me`` accepts from higher ids and dials lower ids."""
    if listener is None:
        listener = socket.create_server(tuple(addresses[me]))
    socks = {}
    for peer in range(me):
        deadline = time.monotonic() + timeout
        while True:
            try:
                s = socket.create_connection(tuple(addresses[peer]), timeout=timeout)
                break
            except OSError:
                if time.monotonic() > deadline:
                    raise TransportError(f"party {me}: cannot reach party {peer}")
                time.sleep(0.05)
        if _handshake(s, me, digest) != peer:
            raise TransportError("unexpected peer id in handshake")
        socks[peer] = s
    listener.settimeout(timeout)
    for _ in range(me + 1, N_PARTIES):
        s, _addr = listener.accept()
        s.settimeout(None)
        peer = _handshake(s, me, digest)
        if peer in socks or peer <= me:
            raise TransportError(f"unexpected connection from party {peer}")
        socks[peer] = s
    listener.close()
    for s in socks.values():
        s.settimeout(None)
        s.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    return socks


def tcp_endpoint(me: int, addresses, digest: bytes = b"\0" * 32, listener=None,
                 timeout: float = 600.0) -> Endpoint:
    return Endpoint(me, _TcpLink(me, connect_tcp(me, addresses, digest, listener), timeout))


def run_session(programs: Sequence[Callable[[Endpoint], Any]], mode: str = "inproc",
                digest: bytes = b"\0" * 32, timeout: float = 600.0) -> SessionResult:
    """Run three party programs concurrently and collect outputs and meters."""
    if len(programs) != N_PARTIES:
        raise ValueError("need exactly three programs")
    if mode == "inproc":
        hub = _InprocHub()
        endpoints = [Endpoint(i, _InprocLink(hub, i, timeout)) for i in range(N_PARTIES)]
        makers = [lambda e=e: e for e in endpoints]
    elif mode == "tcp":
        listeners = [socket.create_server(("127.0.0.1", 0)) for _ in range(N_PARTIES)]
        addrs = [ls.getsockname()[:2] for ls in listeners]
        makers = [lambda i=i: tcp_endpoint(i, addrs, digest, listeners[i], timeout) for i in range(N_PARTIES)]
    else:
        raise ValueError(f"unknown transport mode {mode!r}")

    outputs: list[Any] = [None] * N_PARTIES
    endpoints: list[Endpoint | None] = [None] * N_PARTIES
    errors: list[BaseException | None] = [None] * N_PARTIES

    def body(i):
        try:
            endpoints[i] = makers[i]()
            outputs[i] = programs[i](endpoints[i])
        except BaseException as e:  # re-raised in the caller below
            errors[i] = e
            if endpoints[i] is not None:
                endpoints[i].link.close()

    threads = [threading.Thread(target=body, args=(i,), name=f"party-{i}") for i in range(N_PARTIES)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if mode == "tcp":
        for ep in endpoints:
            if ep is not None:
                ep.link.close()
    first = next((e for e in errors if e is not None and not isinstance(e, SessionAborted)), None)
    first = first or next((e for e in errors if e is not None), None)
    if first is not None:
        raise first
    return SessionResult(outputs, [ep.meter for ep in endpoints])
