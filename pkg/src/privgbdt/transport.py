"""Two-party channels: framing, traffic/round accounting, link shaping.

Frame format (both in-process and TCP): 4-byte big-endian payload length,
1-byte tag, payload bytes.  Tags are registered in ``TAGS`` so traffic
reports can break bytes down per protocol family.
"""

from __future__ import annotations

import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass, field

MAX_FRAME = 64 * 1024 * 1024

# tag registry: one byte per message family, grouped by subsystem
TAGS = {
    0x01: "ctl",
    0x10: "ot",
    0x11: "mul",
    0x12: "and",
    0x13: "greater",
    0x14: "mux",
    0x15: "open",
    0x16: "argmax",
    0x17: "div",
    0x18: "sigmoid",
    0x19: "trunc",
    0x30: "psi_share",
    0x31: "psi_opprf",
    0x40: "sync_share",
    0x41: "sync_opprf",
    0x50: "he_a2h",
    0x51: "he_h2a",
    0x60: "gbdt",
}
TAG_BY_NAME = {v: k for k, v in TAGS.items()}


class ProtocolError(RuntimeError):
    pass


@dataclass
class LinkShape:
    """Bandwidth/latency emulation; zero values mean unshaped."""

    bandwidth_bps: float = 0.0
    latency_ms: float = 0.0

    def __post_init__(self):
        if self.bandwidth_bps < 0 or self.latency_ms < 0:
            raise ValueError("link shape parameters must be non-negative")


@dataclass
class TrafficReport:
    bytes_by_tag: dict = field(default_factory=dict)
    total_bytes: int = 0
    frames: int = 0
    rounds: int = 0

    def add(self, tag: int, n: int):
        name = TAGS.get(tag, "tag%02x" % tag)
        self.bytes_by_tag[name] = self.bytes_by_tag.get(name, 0) + n
        self.total_bytes += n
        self.frames += 1

    def snapshot(self) -> dict:
        return {
            "bytes_by_tag": dict(sorted(self.bytes_by_tag.items())),
            "total_bytes": self.total_bytes,
            "frames": self.frames,
            "rounds": self.rounds,
        }


class Channel:
    """One endpoint of a reliable FIFO duplex link."""

    def __init__(self, send_fn, recv_fn, shape: LinkShape | None = None):
        self._send_fn = send_fn
        self._recv_fn = recv_fn
        self._shape = shape
        self.report = TrafficReport()
        self._sent_since_recv = False
        self._bw_free_at = 0.0

    def _shaped_delay(self, nbytes: int):
        if self._shape is None:
            return None
        now = time.monotonic()
        start = max(now, self._bw_free_at)
        tx = 0.0
        if self._shape.bandwidth_bps > 0:
            tx = nbytes * 8.0 / self._shape.bandwidth_bps
        self._bw_free_at = start + tx
        return start + tx + self._shape.latency_ms / 1000.0

    def send(self, tag: int, payload: bytes):
        if len(payload) > MAX_FRAME:
            raise ProtocolError("frame too large: %d" % len(payload))
        frame = struct.pack(">IB", len(payload), tag) + payload
        self.report.add(tag, len(frame))
        self._sent_since_recv = True
        self._send_fn(frame, self._shaped_delay(len(frame)))

    def recv(self, expect_tag: int | None = None) -> bytes:
        if self._sent_since_recv:
            self.report.rounds += 1
            self._sent_since_recv = False
        frame = self._recv_fn()
        (length, tag) = struct.unpack(">IB", frame[:5])
        payload = frame[5:]
        if len(payload) != length:
            raise ProtocolError("frame length mismatch")
        if expect_tag is not None and tag != expect_tag:
            raise ProtocolError(
                "expected tag %02x got %02x" % (expect_tag, tag)
            )
        return payload


def inproc_channel(shape: LinkShape | None = None) -> tuple[Channel, Channel]:
    """Paired channels for two parties in one process."""

    q01: queue.Queue = queue.Queue()
    q10: queue.Queue = queue.Queue()
    abort = threading.Event()

    def mk(qs, qr):
        def send_fn(frame, deliver_at):
            qs.put((frame, deliver_at))

        def recv_fn():
            while True:
                try:
                    frame, deliver_at = qr.get(timeout=0.2)
                    break
                except queue.Empty:
                    if abort.is_set():
                        raise ProtocolError("peer aborted") from None
            if deliver_at is not None:
                wait = deliver_at - time.monotonic()
                if wait > 0:
                    time.sleep(wait)
            return frame

        chan = Channel(send_fn, recv_fn, shape)
        chan.abort = abort
        return chan

    return mk(q01, q10), mk(q10, q01)


class _SocketReader(threading.Thread):
    def __init__(self, sock):
        super().__init__(daemon=True)
        self.sock = sock
        self.frames: queue.Queue = queue.Queue()
        self.start()

    def _read_exact(self, n):
        buf = b""
        while len(buf) < n:
            chunk = self.sock.recv(n - len(buf))
            if not chunk:
                raise ProtocolError("peer closed connection")
            buf += chunk
        return buf

    def run(self):
        try:
            while True:
                hdr = self._read_exact(5)
                (length, _tag) = struct.unpack(">IB", hdr)
                body = self._read_exact(length) if length else b""
                self.frames.put(hdr + body)
        except Exception as exc:  # surfaced on next recv
            self.frames.put(exc)


def tcp_channel(
    host: str,
    port: int,
    listen: bool,
    shape: LinkShape | None = None,
    timeout: float = 30.0,
) -> Channel:
    """Connect or accept one peer; full-duplex via a reader thread."""
    if listen:
        srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        srv.bind((host, port))
        srv.listen(1)
        srv.settimeout(timeout)
        sock, _ = srv.accept()
        srv.close()
    else:
        deadline = time.monotonic() + timeout
        while True:
            try:
                sock = socket.create_connection((host, port), timeout=timeout)
                break
            except OSError:
                if time.monotonic() > deadline:
                    raise
                time.sleep(0.05)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    reader = _SocketReader(sock)

    def send_fn(frame, deliver_at):
        if deliver_at is not None:
            wait = deliver_at - time.monotonic()
            if wait > 0:
                time.sleep(wait)
        sock.sendall(frame)

    def recv_fn():
        item = reader.frames.get()
        if isinstance(item, Exception):
            raise item
        return item

    return Channel(send_fn, recv_fn, None)


def shape_channel(chan: Channel, shape: LinkShape) -> Channel:
    """Attach in-process link shaping to an existing channel."""
    chan._shape = shape if (shape.bandwidth_bps or shape.latency_ms) else None
    return chan


def run_local_pair(fn0, fn1, shape: LinkShape | None = None):
    """Run two party callables on paired channels; returns their results.

    Each callable receives its Channel.  Exceptions from either thread are
    re-raised in the caller.
    """
    c0, c1 = inproc_channel(shape)
    results: list = [None, None]
    errors: list = [None, None]

    def wrap(i, fn, chan):
        def runner():
            try:
                results[i] = fn(chan)
            except BaseException as exc:  # noqa: BLE001 - propagated below
                errors[i] = exc
                if hasattr(chan, "abort"):
                    chan.abort.set()

        return runner

    t1 = threading.Thread(target=wrap(1, fn1, c1), daemon=True)
    t1.start()
    try:
        wrap(0, fn0, c0)()
    finally:
        t1.join()
    for err in errors:
        if err is not None:
            raise err
    return results[0], results[1], (c0.report, c1.report)
