"""Low-level numeric kernels with optional numba acceleration.

Every kernel has a pure-numpy implementation; if numba is importable and the
environment variable ``PRIVGBDT_NUMBA`` is not ``0``, a compiled version is
used instead.  ``privgbdt micro`` benchmarks both paths.
"""

import os

import numpy as np

U64 = np.uint64
_ONE = U64(1)

USE_NUMBA = os.environ.get("PRIVGBDT_NUMBA", "1") != "0"
if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

__all__ = [
    "USE_NUMBA",
    "limb_add",
    "limb_sub",
    "limb_neg",
    "limb_shift_accumulate",
    "cuckoo_insert",
]


# ---------------------------------------------------------------------------
# two-limb arithmetic: values in Z_{2^(64+hbits)} stored as (lo, hi) uint64
# planes, hi truncated to hbits bits.
# ---------------------------------------------------------------------------

def _limb_add_np(lo1, hi1, lo2, hi2, himask):
    lo = lo1 + lo2
    carry = (lo < lo1).astype(U64)
    return lo, (hi1 + hi2 + carry) & himask


def _limb_sub_np(lo1, hi1, lo2, hi2, himask):
    lo = lo1 - lo2
    borrow = (lo1 < lo2).astype(U64)
    return lo, (hi1 - hi2 - borrow) & himask


def _limb_neg_np(lo, hi, himask):
    nlo = (~lo) + _ONE
    carry = (nlo == 0).astype(U64)
    return nlo, ((~hi) + carry) & himask


def _limb_shift_accumulate_np(lo, hi, conv, shift, himask):
    """Accumulate ``conv * 2^shift`` (conv signed int64) into (lo, hi)."""
    v = conv.astype(np.int64)
    if shift == 0:
        add_lo = v.astype(U64)
        add_hi = (v >> np.int64(63)).astype(U64)  # sign extension
    elif shift < 64:
        add_lo = v.astype(U64) << U64(shift)
        add_hi = (v >> np.int64(64 - shift)).astype(U64)
    else:
        add_lo = np.zeros_like(lo)
        add_hi = v.astype(U64) << U64(shift - 64)
    return _limb_add_np(lo, hi, add_lo, add_hi & himask, himask)


if USE_NUMBA:

    @njit(cache=True)
    def _limb_add_nb(lo1, hi1, lo2, hi2, himask):  # pragma: no cover - jit
        n = lo1.size
        lo = np.empty(n, dtype=np.uint64)
        hi = np.empty(n, dtype=np.uint64)
        for i in range(n):
            s = lo1[i] + lo2[i]
            c = np.uint64(1) if s < lo1[i] else np.uint64(0)
            lo[i] = s
            hi[i] = (hi1[i] + hi2[i] + c) & himask
        return lo, hi

    @njit(cache=True)
    def _limb_sub_nb(lo1, hi1, lo2, hi2, himask):  # pragma: no cover - jit
        n = lo1.size
        lo = np.empty(n, dtype=np.uint64)
        hi = np.empty(n, dtype=np.uint64)
        for i in range(n):
            d = lo1[i] - lo2[i]
            b = np.uint64(1) if lo1[i] < lo2[i] else np.uint64(0)
            lo[i] = d
            hi[i] = (hi1[i] - hi2[i] - b) & himask
        return lo, hi

    @njit(cache=True)
    def _limb_neg_nb(lo, hi, himask):  # pragma: no cover - jit
        n = lo.size
        olo = np.empty(n, dtype=np.uint64)
        ohi = np.empty(n, dtype=np.uint64)
        for i in range(n):
            nl = ~lo[i] + np.uint64(1)
            c = np.uint64(1) if nl == np.uint64(0) else np.uint64(0)
            olo[i] = nl
            ohi[i] = (~hi[i] + c) & himask
        return olo, ohi

    @njit(cache=True)
    def _limb_shift_accumulate_nb(lo, hi, conv, shift, himask):  # pragma: no cover
        n = lo.size
        olo = np.empty(n, dtype=np.uint64)
        ohi = np.empty(n, dtype=np.uint64)
        for i in range(n):
            v = conv[i]
            if shift == 0:
                alo = np.uint64(v)
                ahi = np.uint64(v >> 63)
            elif shift < 64:
                alo = np.uint64(v) << np.uint64(shift)
                ahi = np.uint64(v >> (64 - shift))
            else:
                alo = np.uint64(0)
                ahi = np.uint64(v) << np.uint64(shift - 64)
            s = lo[i] + alo
            c = np.uint64(1) if s < lo[i] else np.uint64(0)
            olo[i] = s
            ohi[i] = (hi[i] + (ahi & himask) + c) & himask
        return olo, ohi


def limb_add(lo1, hi1, lo2, hi2, himask):
    if USE_NUMBA and lo1.ndim == 1:
        return _limb_add_nb(lo1, hi1, lo2, hi2, U64(himask))
    return _limb_add_np(lo1, hi1, lo2, hi2, U64(himask))


def limb_sub(lo1, hi1, lo2, hi2, himask):
    if USE_NUMBA and lo1.ndim == 1:
        return _limb_sub_nb(lo1, hi1, lo2, hi2, U64(himask))
    return _limb_sub_np(lo1, hi1, lo2, hi2, U64(himask))


def limb_neg(lo, hi, himask):
    if USE_NUMBA and lo.ndim == 1:
        return _limb_neg_nb(lo, hi, U64(himask))
    return _limb_neg_np(lo, hi, U64(himask))


def limb_shift_accumulate(lo, hi, conv, shift, himask):
    if USE_NUMBA and lo.ndim == 1:
        return _limb_shift_accumulate_nb(lo, hi, conv, int(shift), U64(himask))
    return _limb_shift_accumulate_np(lo, hi, conv, int(shift), U64(himask))


# ---------------------------------------------------------------------------
# cuckoo hashing insertion loop
# ---------------------------------------------------------------------------

def _cuckoo_insert_np(buckets, origins, candidates, order, max_evictions):
    """Insert items 0..n-1 into `buckets` (int64, -1 = empty).

    candidates[i, j] is the j-th candidate bucket of item i; `order` supplies
    the eviction-choice randomness.  Returns -1 on success or the index of the
    item that could not be placed.
    """
    e = candidates.shape[1]
    for item in range(candidates.shape[0]):
        cur = item
        hidx = 0
        for step in range(max_evictions):
            placed = False
            for j in range(e):
                b = candidates[cur, (hidx + j) % e]
                if buckets[b] < 0:
                    buckets[b] = cur
                    origins[b] = (hidx + j) % e
                    placed = True
                    break
            if placed:
                break
            j = int(order[(item + step) % order.shape[0]]) % e
            b = candidates[cur, (hidx + j) % e]
            evicted = buckets[b]
            ev_h = origins[b]
            buckets[b] = cur
            origins[b] = (hidx + j) % e
            cur = evicted
            hidx = (ev_h + 1) % e
        else:
            return cur
    return -1


if USE_NUMBA:
    _cuckoo_insert_nb = njit(cache=True)(_cuckoo_insert_np)


def cuckoo_insert(buckets, origins, candidates, order, max_evictions):
    if USE_NUMBA:
        return _cuckoo_insert_nb(buckets, origins, candidates, order, int(max_evictions))
    return _cuckoo_insert_np(buckets, origins, candidates, order, int(max_evictions))
