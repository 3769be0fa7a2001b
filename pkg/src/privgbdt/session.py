"""Per-party protocol session: channel + dealer + private randomness.

A session also keeps the instrumented reveal log: every plaintext value a
protocol opens is recorded here, which the anonymity checks inspect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dealer import Dealer
from .transport import TAG_BY_NAME, Channel

U64 = np.uint64


@dataclass
class Counters:
    ot_calls: int = 0
    and_words: int = 0
    mul_elems: int = 0

    def snapshot(self):
        return {"ot_calls": self.ot_calls, "and_words": self.and_words, "mul_elems": self.mul_elems}


@dataclass
class Session:
    party: int
    chan: Channel
    dealer: Dealer
    rng: np.random.Generator
    reveal_log: list = field(default_factory=list)
    counters: Counters = field(default_factory=Counters)

    @classmethod
    def create(cls, party: int, chan: Channel, seed: int, budget: int | None = None):
        rng = np.random.Generator(np.random.Philox(key=(seed << 1) ^ party ^ 0xA5))
        return cls(party, chan, Dealer(seed, party, budget), rng)

    # -- raw array framing ------------------------------------------------
    def send_u64(self, tag_name: str, arr: np.ndarray):
        self.chan.send(TAG_BY_NAME[tag_name], np.ascontiguousarray(arr, dtype=U64).tobytes())

    def recv_u64(self, tag_name: str, shape) -> np.ndarray:
        payload = self.chan.recv(TAG_BY_NAME[tag_name])
        return np.frombuffer(payload, dtype=U64).reshape(shape).copy()

    def send_bytes(self, tag_name: str, data: bytes):
        self.chan.send(TAG_BY_NAME[tag_name], data)

    def recv_bytes(self, tag_name: str) -> bytes:
        return self.chan.recv(TAG_BY_NAME[tag_name])

    def exchange_u64(self, tag_name: str, arr: np.ndarray, shape=None) -> np.ndarray:
        """Both parties send then receive (party 0 sends first)."""
        shape = arr.shape if shape is None else shape
        if self.party == 0:
            self.send_u64(tag_name, arr)
            return self.recv_u64(tag_name, shape)
        other = self.recv_u64(tag_name, shape)
        self.send_u64(tag_name, arr)
        return other

    # -- reveals -----------------------------------------------------------
    def log_reveal(self, kind: str, value):
        self.reveal_log.append((kind, value))

    def open_ring(self, share: np.ndarray, kind: str, to: int | None = None):
        """Open an additive sharing to one party (or both when to is None)."""
        share = np.atleast_1d(np.asarray(share, dtype=U64))
        if to is None:
            other = self.exchange_u64("open", share)
            val = share + other
            self.log_reveal(kind, val.copy())
            return val
        if self.party == to:
            other = self.recv_u64("open", share.shape)
            val = share + other
            self.log_reveal(kind, val.copy())
            return val
        self.send_u64("open", share)
        return None

    def open_bits(self, share: np.ndarray, kind: str, to: int | None = None):
        share = np.atleast_1d(np.asarray(share, dtype=U64))
        if to is None:
            other = self.exchange_u64("open", share)
            val = share ^ other
            self.log_reveal(kind, val.copy())
            return val
        if self.party == to:
            other = self.recv_u64("open", share.shape)
            val = share ^ other
            self.log_reveal(kind, val.copy())
            return val
        self.send_u64("open", share)
        return None
