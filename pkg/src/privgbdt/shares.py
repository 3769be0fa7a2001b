"""Fixed-point encoding and (2,2) additive / XOR secret sharing over Z_{2^64}.

All operations here are local (no interaction).  Arithmetic shares live in
numpy uint64 arrays with native wrap-around; boolean shares are bit-strings
packed one field per uint64 element (``nbits`` fields per element, 1 for
plain indicator vectors, up to 64 for batched words).
"""

from __future__ import annotations

import dataclasses

import numpy as np

U64 = np.uint64
RING_BITS = 64


class EncodingRangeError(ValueError):
    """Magnitude does not fit the fixed-point range."""


@dataclasses.dataclass(frozen=True)
class FixedParams:
    """Share-ring bit width and fixed-point precision."""

    ell: int = 64
    f: int = 20

    def __post_init__(self):
        if not 0 < self.f < self.ell:
            raise ValueError("need 0 < f < ell")
        if self.ell != 64:
            raise ValueError("only the 64-bit ring is implemented")


DEFAULT_PARAMS = FixedParams()


@dataclasses.dataclass
class FixedShare:
    """One party's additive share of a fixed-point vector."""

    value: np.ndarray  # uint64
    party: int
    params: FixedParams = DEFAULT_PARAMS

    def __len__(self):
        return self.value.size

    def copy(self) -> "FixedShare":
        return FixedShare(self.value.copy(), self.party, self.params)


@dataclasses.dataclass
class BoolShare:
    """One party's XOR share of a vector of ``nbits``-bit strings."""

    bits: np.ndarray  # uint64, one field per element
    party: int
    nbits: int = 1

    def __len__(self):
        return self.bits.size

    def copy(self) -> "BoolShare":
        return BoolShare(self.bits.copy(), self.party, self.nbits)


def encode_fixed(x, params: FixedParams = DEFAULT_PARAMS) -> np.ndarray:
    """Map reals to round(x * 2^f) in two's complement inside Z_{2^64}."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    scaled = np.rint(x * float(1 << params.f))
    if np.any(np.abs(scaled) >= float(1 << (params.ell - 1))):
        raise EncodingRangeError("value exceeds fixed-point range")
    return scaled.astype(np.int64).astype(U64)


def decode_fixed(v: np.ndarray, params: FixedParams = DEFAULT_PARAMS) -> np.ndarray:
    """Inverse of encode_fixed (center-lift then unscale)."""
    return np.asarray(v, dtype=U64).astype(np.int64) / float(1 << params.f)


def share_arith(x, rng: np.random.Generator, params: FixedParams = DEFAULT_PARAMS):
    x = np.atleast_1d(np.asarray(x, dtype=U64))
    r = rng.integers(0, 1 << 64, size=x.shape, dtype=U64)
    return (
        FixedShare(x - r, 0, params),
        FixedShare(r.copy(), 1, params),
    )


def reconstruct_arith(s0: FixedShare, s1: FixedShare) -> np.ndarray:
    return s0.value + s1.value


def share_bool(bits, rng: np.random.Generator, nbits: int = 1):
    bits = np.atleast_1d(np.asarray(bits, dtype=U64))
    mask = U64((1 << nbits) - 1) if nbits < 64 else U64(0xFFFFFFFFFFFFFFFF)
    r = rng.integers(0, 1 << 64, size=bits.shape, dtype=U64) & mask
    return BoolShare(bits ^ r, 0, nbits), BoolShare(r.copy(), 1, nbits)


def reconstruct_bool(s0: BoolShare, s1: BoolShare) -> np.ndarray:
    return s0.bits ^ s1.bits


def add(a: FixedShare, b: FixedShare) -> FixedShare:
    if len(a) != len(b):
        raise ValueError("length mismatch")
    return FixedShare(a.value + b.value, a.party, a.params)


def sub(a: FixedShare, b: FixedShare) -> FixedShare:
    if len(a) != len(b):
        raise ValueError("length mismatch")
    return FixedShare(a.value - b.value, a.party, a.params)


def neg(a: FixedShare) -> FixedShare:
    return FixedShare(U64(0) - a.value, a.party, a.params)


def scale_public(a: FixedShare, k: int) -> FixedShare:
    """Multiply by a public integer constant."""
    return FixedShare(a.value * U64(k % (1 << 64)), a.party, a.params)


def add_public(a: FixedShare, v) -> FixedShare:
    """Add a public ring vector; only party 0 offsets its share."""
    if a.party == 0:
        return FixedShare(a.value + np.asarray(v, dtype=U64), a.party, a.params)
    return a.copy()


def local_linear(shares: list[FixedShare], coeffs: list[int]) -> FixedShare:
    """Sum of coeff_i * share_i over the ring."""
    if len(shares) != len(coeffs):
        raise ValueError("length mismatch")
    acc = np.zeros(len(shares[0]), dtype=U64)
    for s, c in zip(shares, coeffs):
        if len(s) != len(shares[0]):
            raise ValueError("length mismatch")
        acc = acc + s.value * U64(c % (1 << 64))
    return FixedShare(acc, shares[0].party, shares[0].params)


def xor(a: BoolShare, b: BoolShare) -> BoolShare:
    if len(a) != len(b):
        raise ValueError("length mismatch")
    return BoolShare(a.bits ^ b.bits, a.party, max(a.nbits, b.nbits))


def bool_not(a: BoolShare) -> BoolShare:
    """Party 0 flips its bits; party 1 keeps its share."""
    mask = U64((1 << a.nbits) - 1) if a.nbits < 64 else U64(0xFFFFFFFFFFFFFFFF)
    if a.party == 0:
        return BoolShare(a.bits ^ mask, a.party, a.nbits)
    return a.copy()


def truncate_share(s: FixedShare, f: int | None = None) -> FixedShare:
    """Local probabilistic truncation after a fixed-point product.

    Each party arithmetic-shifts its own share; the reconstruction is within
    one ulp of the exact shift except with probability ~|x|/2^64.
    """
    f = s.params.f if f is None else f
    v = s.value.astype(np.int64) >> np.int64(f)
    return FixedShare(v.astype(U64), s.party, s.params)
