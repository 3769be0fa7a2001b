"""Trusted-dealer correlated randomness.

Both parties construct a :class:`Dealer` from the same seed and consume
correlations in identical protocol order, so the two instances stay in
lockstep without any shared state.  This stands in for offline preprocessing:
each instance can derive the full correlation but the protocol code only ever
reads its own party's half.  Research artifact, not a secure offline phase.
"""

from __future__ import annotations

import hashlib

import numpy as np

U64 = np.uint64


class DealerExhausted(RuntimeError):
    pass


def _child_seed(seed: int, label: str) -> np.random.Generator:
    h = hashlib.blake2b(label.encode(), key=seed.to_bytes(16, "little"), digest_size=16)
    return np.random.Generator(np.random.Philox(key=int.from_bytes(h.digest(), "little")))


class Dealer:
    """Deterministic per-party view of the trusted dealer."""

    def __init__(self, seed: int, party: int, budget: int | None = None):
        self.party = party
        self.seed = seed
        self.budget = budget
        self.consumed = 0
        self._streams: dict[str, np.random.Generator] = {}

    def _rng(self, family: str) -> np.random.Generator:
        if family not in self._streams:
            self._streams[family] = _child_seed(self.seed, family)
        return self._streams[family]

    def _spend(self, n: int):
        self.consumed += n
        if self.budget is not None and self.consumed > self.budget:
            raise DealerExhausted("dealer correlation budget exceeded")

    def triples(self, k: int):
        """k arithmetic Beaver triples over Z_{2^64}; returns this party's half."""
        self._spend(k)
        rng = self._rng("mul")
        a0, a1, b0, b1, c0 = (
            rng.integers(0, 1 << 64, k, dtype=U64) for _ in range(5)
        )
        c1 = (a0 + a1) * (b0 + b1) - c0
        if self.party == 0:
            return a0, b0, c0
        return a1, b1, c1

    def bool_triples(self, k: int):
        """k boolean triples, bitwise over uint64 words."""
        self._spend(k)
        rng = self._rng("and")
        a0, a1, b0, b1, c0 = (
            rng.integers(0, 1 << 64, k, dtype=U64) for _ in range(5)
        )
        c1 = ((a0 ^ a1) & (b0 ^ b1)) ^ c0
        if self.party == 0:
            return a0, b0, c0
        return a1, b1, c1

    def random_ot(self, k: int, n: int, words: int, sender_party: int):
        """k parallel 1-of-n random OTs with ``words``-word messages.

        Sender half: mask array (k, n, words).  Receiver half: choices d (k,)
        and pads (k, words).
        """
        self._spend(k)
        rng = self._rng("ot")
        masks = rng.integers(0, 1 << 64, (k, n, words), dtype=U64)
        d = rng.integers(0, n, k, dtype=np.int64)
        if self.party == sender_party:
            return masks
        return d, masks[np.arange(k), d, :]

    def opprf_key(self, instance: str) -> bytes:
        """PRF key for one batched OPPRF instance (sender side)."""
        h = hashlib.blake2b(
            instance.encode(), key=self.seed.to_bytes(16, "little"), digest_size=32
        )
        return h.digest()

    def opprf_eval(self, instance: str, data: bytes, nbytes: int) -> bytes:
        """Receiver-side oracle access F_k(data); dealer-mode stand-in."""
        key = self.opprf_key(instance)
        return hashlib.blake2b(data, key=key, digest_size=nbytes).digest()
