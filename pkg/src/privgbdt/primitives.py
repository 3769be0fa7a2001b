"""Interactive two-party functionalities over a dealer backend.

Everything is vectorized: one call processes a batch of independent element
instances in O(1) communication rounds per protocol step.  All oblivious
transfers are derandomized from dealer random-OT correlations, so a
transcript consists of uniform masks and shifts only.
"""

from __future__ import annotations

import numpy as np

from .session import Session
from .shares import BoolShare, FixedShare, DEFAULT_PARAMS

U64 = np.uint64
FULL = U64(0xFFFFFFFFFFFFFFFF)


# ---------------------------------------------------------------------------
# bit-vector helpers: bits arrays hold one 0/1 value per element
# ---------------------------------------------------------------------------

def _pack_words(bits: np.ndarray) -> np.ndarray:
    by = np.packbits(bits.astype(np.uint8), bitorder="little")
    pad = (-by.size) % 8
    if pad:
        by = np.concatenate([by, np.zeros(pad, dtype=np.uint8)])
    return by.view(U64)

def _unpack_words(words: np.ndarray, k: int) -> np.ndarray:
    by = words.view(np.uint8)
    return np.unpackbits(by, count=k, bitorder="little").astype(U64)


def const_bits(session: Session, value: int, k: int) -> BoolShare:
    bits = np.full(k, U64(value & 1)) if session.party == 0 else np.zeros(k, dtype=U64)
    return BoolShare(bits, session.party, 1)


# ---------------------------------------------------------------------------
# oblivious transfer
# ---------------------------------------------------------------------------

def f_ot_send(session: Session, messages: np.ndarray, msg_bits: int, tag: str = "ot"):
    """Sender side of k parallel 1-of-n OTs; messages shape (k, n, words)."""
    k, n, words = messages.shape
    session.counters.ot_calls += k
    masks = session.dealer.random_ot(k, n, words, sender_party=session.party)
    shifts = np.frombuffer(session.recv_bytes(tag), dtype=np.int64)
    idx = (np.arange(n)[None, :] - shifts[:, None]) % n
    rolled = masks[np.arange(k)[:, None], idx, :]
    cipher = messages ^ rolled
    if words == 1 and msg_bits < 64:
        mask = U64((1 << msg_bits) - 1)
        flat = (cipher[:, :, 0] & mask).reshape(-1)
        if msg_bits <= 8:
            out = np.zeros((flat.size, msg_bits), dtype=np.uint8)
            for b in range(msg_bits):
                out[:, b] = (flat >> U64(b)) & U64(1)
            session.send_bytes(tag, np.packbits(out.reshape(-1), bitorder="little").tobytes())
            return
    session.send_bytes(tag, cipher.tobytes())


def f_ot_recv(
    session: Session, choices: np.ndarray, n: int, words: int, msg_bits: int, tag: str = "ot"
) -> np.ndarray:
    """Receiver side; returns chosen messages, shape (k, words)."""
    k = choices.size
    session.counters.ot_calls += k
    d, pads = session.dealer.random_ot(k, n, words, sender_party=1 - session.party)
    shifts = (choices.astype(np.int64) - d) % n
    session.send_bytes(tag, shifts.astype(np.int64).tobytes())
    payload = session.recv_bytes(tag)
    if words == 1 and msg_bits < 64 and msg_bits <= 8:
        raw = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), bitorder="little")
        flat = raw[: k * n * msg_bits].reshape(k * n, msg_bits)
        vals = np.zeros(k * n, dtype=U64)
        for b in range(msg_bits):
            vals |= flat[:, b].astype(U64) << U64(b)
        cipher = vals.reshape(k, n, 1)
    else:
        cipher = np.frombuffer(payload, dtype=U64).reshape(k, n, words)
    chosen = cipher[np.arange(k), choices.astype(np.int64), :]
    out = chosen ^ pads
    if msg_bits < 64:
        out = out & U64((1 << msg_bits) - 1) if words == 1 else out
    return out


# ---------------------------------------------------------------------------
# boolean AND / OR on packed words
# ---------------------------------------------------------------------------

def f_and_words(session: Session, x: np.ndarray, y: np.ndarray, tag: str = "and") -> np.ndarray:
    """Bitwise AND of two XOR-shared word vectors (Beaver boolean triples)."""
    k = x.size
    session.counters.and_words += k
    a, b, c = session.dealer.bool_triples(k)
    de = np.concatenate([x ^ a, y ^ b])
    other = session.exchange_u64(tag, de)
    d = de[:k] ^ other[:k]
    e = de[k:] ^ other[k:]
    z = (d & b) ^ (e & a) ^ c
    if session.party == 0:
        z ^= d & e
    return z


def f_and(session: Session, x: BoolShare, y: BoolShare, tag: str = "and") -> BoolShare:
    if len(x) != len(y):
        raise ValueError("length mismatch")
    return BoolShare(f_and_words(session, x.bits, y.bits, tag), x.party, max(x.nbits, y.nbits))


def f_and_bits(session: Session, x: np.ndarray, y: np.ndarray, tag: str = "and") -> np.ndarray:
    """AND of one-bit-per-element vectors, packed 64 elements per triple."""
    k = x.size
    z = f_and_words(session, _pack_words(x), _pack_words(y), tag)
    return _unpack_words(z, k)


def f_or(session: Session, x: BoolShare, y: BoolShare) -> BoolShare:
    nx = x.bits.copy()
    ny = y.bits.copy()
    mask = U64((1 << x.nbits) - 1) if x.nbits < 64 else FULL
    if session.party == 0:
        nx ^= mask
        ny ^= mask
    z = f_and_words(session, nx, ny)
    if session.party == 0:
        z ^= mask
    return BoolShare(z, x.party, x.nbits)


# ---------------------------------------------------------------------------
# millionaire block comparison (shared machinery for greater / truncation)
# ---------------------------------------------------------------------------

_BLOCK = 4  # radix-16 digit comparison


def _digits(values: np.ndarray, width: int) -> np.ndarray:
    """4-bit digits, most significant first, shape (k, nb)."""
    nb = (width + _BLOCK - 1) // _BLOCK
    shifts = np.arange(nb - 1, -1, -1, dtype=np.uint64) * U64(_BLOCK)
    return ((values[:, None] >> shifts[None, :]) & U64(0xF)).astype(np.uint8)


def _leaf_compare(session: Session, digits: np.ndarray, tag: str):
    """Per-digit (gt, eq) XOR shares: P0 holds digit a, P1 digit b, outputs
    shares of 1{a > b} and 1{a == b}."""
    k, nb = digits.shape
    flat = digits.reshape(-1)
    if session.party == 0:
        rg = session.rng.integers(0, 2, flat.size, dtype=U64)
        re = session.rng.integers(0, 2, flat.size, dtype=U64)
        t = np.arange(16, dtype=np.uint8)[None, :]
        gt = (flat[:, None] > t).astype(U64) ^ rg[:, None]
        eq = (flat[:, None] == t).astype(U64) ^ re[:, None]
        msgs = (gt | (eq << U64(1)))[:, :, None]
        f_ot_send(session, msgs, 2, tag)
        return rg.reshape(k, nb), re.reshape(k, nb)
    got = f_ot_recv(session, flat, 16, 1, 2, tag)[:, 0]
    gt = got & U64(1)
    eq = (got >> U64(1)) & U64(1)
    return gt.reshape(k, nb), eq.reshape(k, nb)


def _combine_tree(session: Session, gt: np.ndarray, eq: np.ndarray, tag: str) -> np.ndarray:
    """Fold per-digit comparison shares into a single gt bit per element."""
    while gt.shape[1] > 1:
        nb = gt.shape[1]
        if nb % 2:  # carry the least significant digit to the next level
            odd_gt, odd_eq = gt[:, -1:], eq[:, -1:]
            gt, eq = gt[:, :-1], eq[:, :-1]
        else:
            odd_gt = odd_eq = None
        hi_gt, hi_eq = gt[:, 0::2], eq[:, 0::2]
        lo_gt, lo_eq = gt[:, 1::2], eq[:, 1::2]
        lhs = np.concatenate([hi_eq.reshape(-1), hi_eq.reshape(-1)])
        rhs = np.concatenate([lo_gt.reshape(-1), lo_eq.reshape(-1)])
        out = f_and_bits(session, lhs, rhs, tag)
        half = hi_gt.size
        gt = hi_gt ^ out[:half].reshape(hi_gt.shape)
        eq = out[half:].reshape(hi_eq.shape)
        if odd_gt is not None:
            gt = np.concatenate([gt, odd_gt], axis=1)
            eq = np.concatenate([eq, odd_eq], axis=1)
    return gt[:, 0]


def millionaire_carry(
    session: Session, own: np.ndarray, width: int, tag: str = "greater"
) -> np.ndarray:
    """Shares of the carry bit 1{a + b >= 2^width} for private a (P0), b (P1)."""
    mask = U64((1 << width) - 1)
    vals = own & mask
    if session.party == 1:
        vals = mask - vals  # carry  <=>  a > 2^width-1-b
    digits = _digits(vals, width)
    gt, eq = _leaf_compare(session, digits, tag)
    return _combine_tree(session, gt, eq, tag)


def _msb_shares(session: Session, local: np.ndarray, tag: str = "greater") -> np.ndarray:
    """XOR shares of the top bit of the reconstructed sum of ``local`` shares."""
    carry = millionaire_carry(session, local & U64((1 << 63) - 1), 63, tag)
    return carry ^ (local >> U64(63))


def f_greater(
    session: Session,
    x: FixedShare,
    y: FixedShare | np.ndarray | int,
    tag: str = "greater",
) -> BoolShare:
    """1{x > y} under signed two's-complement interpretation."""
    if isinstance(y, FixedShare):
        d = x.value - y.value
    else:
        yv = np.asarray(y, dtype=U64)
        d = x.value - yv if session.party == 0 else x.value.copy()
    if session.party == 0:
        d = d - U64(1)
    msb = _msb_shares(session, d, tag)
    if session.party == 0:
        msb ^= U64(1)
    return BoolShare(msb, session.party, 1)


def f_greater_two_thresholds(
    session: Session, x: FixedShare, hi_thresh: int, lo_thresh: int, shared_low_bits: int,
    tag: str = "sigmoid",
):
    """(1{x > hi}, 1{x <= lo}) with the low-digit comparisons computed once.

    Requires hi + 1 = -(lo - 1) modulo 2^shared_low_bits so the two millionaire
    inputs agree on their low digits (both reduce to x - 1).
    """
    d_hi = x.value - (U64(hi_thresh) + U64(1) if session.party == 0 else U64(0))
    d_lo = x.value + (U64(lo_thresh) - U64(1) if session.party == 0 else U64(0))
    mask63 = U64((1 << 63) - 1)
    a_hi = d_hi & mask63
    a_lo = d_lo & mask63
    if session.party == 1:
        a_hi = mask63 - a_hi
        a_lo = mask63 - a_lo
    nb_shared = shared_low_bits // _BLOCK
    dg_hi = _digits(a_hi, 63)
    dg_lo = _digits(a_lo, 63)
    nb = dg_hi.shape[1]
    assert np.array_equal(dg_hi[:, nb - nb_shared:], dg_lo[:, nb - nb_shared:])
    uniq = np.concatenate([dg_hi[:, : nb - nb_shared], dg_lo[:, : nb - nb_shared],
                           dg_hi[:, nb - nb_shared:]], axis=1)
    gt, eq = _leaf_compare(session, uniq, tag)
    nu = nb - nb_shared
    gt_hi = np.concatenate([gt[:, :nu], gt[:, 2 * nu:]], axis=1)
    eq_hi = np.concatenate([eq[:, :nu], eq[:, 2 * nu:]], axis=1)
    gt_lo = np.concatenate([gt[:, nu: 2 * nu], gt[:, 2 * nu:]], axis=1)
    eq_lo = np.concatenate([eq[:, nu: 2 * nu], eq[:, 2 * nu:]], axis=1)
    c_hi = _combine_tree(session, gt_hi, eq_hi, tag)
    c_lo = _combine_tree(session, gt_lo, eq_lo, tag)
    msb_hi = c_hi ^ (d_hi >> U64(63))
    msb_lo = c_lo ^ (d_lo >> U64(63))
    if session.party == 0:
        msb_hi ^= U64(1)  # gt_hi = NOT msb
    b_gt = BoolShare(msb_hi, session.party, 1)
    b_le = BoolShare(msb_lo, session.party, 1)
    return b_gt, b_le


def f_equal(session: Session, x: FixedShare, y: FixedShare) -> BoolShare:
    gx = f_greater(session, x, y)
    gy = f_greater(session, y, x)
    nx, ny = gx.bits.copy(), gy.bits.copy()
    if session.party == 0:
        nx ^= U64(1)
        ny ^= U64(1)
    return BoolShare(f_and_bits(session, nx, ny), session.party, 1)


def f_equal_strings(session: Session, own: np.ndarray, nbits: int, tag: str = "psi_share") -> BoolShare:
    """Equality of private bit-strings (one per party) as shared bits.

    The XOR difference is already shared for free: each party's share is its
    own string.  AND-reduce the negated difference bits.
    """
    bits = own.copy()
    if session.party == 0:
        bits ^= U64((1 << nbits) - 1) if nbits < 64 else FULL
    width = nbits
    while width > 1:
        half = (width + 1) // 2
        lo = bits & U64((1 << half) - 1)
        hi = bits >> U64(half)
        if width % 2 and session.party == 0:
            hi |= U64((1 << half) - (1 << (width - half)))  # pad with shared 1s
        bits = f_and_words(session, hi, lo, tag) & U64((1 << half) - 1)
        width = half
    return BoolShare(bits & U64(1), session.party, 1)


# ---------------------------------------------------------------------------
# faithful truncation and fixed-point multiplication
# ---------------------------------------------------------------------------

def trunc_faithful(session: Session, z: FixedShare, f: int | None = None) -> FixedShare:
    """Truncate a 2f-scaled product share by f bits, correct within 1 ulp.

    Local arithmetic shifts are patched by an exact carry computation, so no
    probabilistic wrap error remains (requires |value| < 2^62).
    """
    f = z.params.f if f is None else f
    local = (z.value.astype(np.int64) >> np.int64(f)).astype(U64)
    b_own = (z.value >> U64(63)) & U64(1)
    c63 = millionaire_carry(session, z.value & U64((1 << 63) - 1), 63, "trunc")
    k = z.value.size
    # u = b0 & b1, v = ~b0 & ~b1 via one OT (2-bit messages)
    if session.party == 0:
        r = session.rng.integers(0, 4, k, dtype=U64)
        t = np.arange(2, dtype=U64)[None, :]
        m = ((b_own[:, None] & t) | (((U64(1) - b_own[:, None]) & (U64(1) - t)) << U64(1))) ^ r[:, None]
        f_ot_send(session, m[:, :, None], 2, "trunc")
        uv = r
    else:
        uv = f_ot_recv(session, b_own, 2, 1, 2, "trunc")[:, 0]
    u = uv & U64(1)
    v = (uv >> U64(1)) & U64(1)
    nc = c63 ^ U64(1) if session.party == 0 else c63
    ands = f_and_bits(session, np.concatenate([u, v]), np.concatenate([nc, c63]), "trunc")
    a1, a2 = ands[:k], ands[k:]
    step = U64((1 << (64 - f)) % (1 << 64))
    corr = mux_public(session, a1, step, "trunc").value - mux_public(session, a2, step, "trunc").value
    return FixedShare(local + corr, z.party, z.params)


def f_mul(
    session: Session,
    x: FixedShare,
    y: FixedShare,
    fixed_point: bool = True,
    tag: str = "mul",
) -> FixedShare:
    """Beaver multiplication; fixed_point applies faithful truncation."""
    if len(x) != len(y):
        raise ValueError("length mismatch")
    k = len(x)
    session.counters.mul_elems += k
    a, b, c = session.dealer.triples(k)
    de = np.concatenate([x.value - a, y.value - b])
    other = session.exchange_u64(tag, de)
    d = de[:k] + other[:k]
    e = de[k:] + other[k:]
    z = c + d * b + e * a
    if session.party == 0:
        z = z + d * e
    out = FixedShare(z, x.party, x.params)
    if fixed_point:
        out = trunc_faithful(session, out)
    return out


# ---------------------------------------------------------------------------
# multiplexer
# ---------------------------------------------------------------------------

def f_mux(session: Session, x: BoolShare, y: FixedShare, tag: str = "mux") -> FixedShare:
    """z = y if x else 0; two OTs per element."""
    if len(x) != len(y):
        raise ValueError("length mismatch")
    k = len(x)
    xb = x.bits & U64(1)
    r = session.rng.integers(0, 1 << 64, k, dtype=U64)
    t = np.arange(2, dtype=U64)[None, :]
    msgs = ((xb[:, None] ^ t) * y.value[:, None] - r[:, None])[:, :, None]
    if session.party == 0:
        f_ot_send(session, msgs, 64, tag)
        got = f_ot_recv(session, xb, 2, 1, 64, tag)[:, 0]
    else:
        got = f_ot_recv(session, xb, 2, 1, 64, tag)[:, 0]
        f_ot_send(session, msgs, 64, tag)
    return FixedShare(r + got, y.party, y.params)


def f_mux_pair(
    session: Session, x: BoolShare, y1: FixedShare, y2: FixedShare, tag: str = "mux"
):
    """Mux two ring vectors under one choice bit with packed OT messages."""
    k = len(x)
    xb = x.bits & U64(1)
    r = session.rng.integers(0, 1 << 64, (k, 2), dtype=U64)
    t = np.arange(2, dtype=U64)[None, :, None]
    pair = np.stack([y1.value, y2.value], axis=1)[:, None, :]
    msgs = (xb[:, None, None] ^ t) * pair - r[:, None, :]
    if session.party == 0:
        f_ot_send(session, msgs, 64, tag)
        got = f_ot_recv(session, xb, 2, 2, 64, tag)
    else:
        got = f_ot_recv(session, xb, 2, 2, 64, tag)
        f_ot_send(session, msgs, 64, tag)
    z = r + got
    return (
        FixedShare(z[:, 0], y1.party, y1.params),
        FixedShare(z[:, 1], y2.party, y2.params),
    )


def mux_public(session: Session, x_bits: np.ndarray, y_pub, tag: str = "mux") -> FixedShare:
    """x * y for a public ring value y; one OT per element."""
    k = x_bits.size
    xb = x_bits & U64(1)
    y = np.broadcast_to(np.asarray(y_pub, dtype=U64), (k,))
    if session.party == 0:
        r = session.rng.integers(0, 1 << 64, k, dtype=U64)
        t = np.arange(2, dtype=U64)[None, :]
        msgs = ((xb[:, None] ^ t) * y[:, None] - r[:, None])[:, :, None]
        f_ot_send(session, msgs, 64, tag)
        return FixedShare(r, 0, DEFAULT_PARAMS)
    got = f_ot_recv(session, xb, 2, 1, 64, tag)[:, 0]
    return FixedShare(got, 1, DEFAULT_PARAMS)


def b2a(session: Session, x: BoolShare, tag: str = "mux") -> FixedShare:
    """Boolean share to arithmetic share of the same bit."""
    return mux_public(session, x.bits, U64(1), tag)


# ---------------------------------------------------------------------------
# argmax
# ---------------------------------------------------------------------------

def f_argmax(session: Session, v: FixedShare, tag: str = "argmax") -> FixedShare:
    """Shared index of the maximum; ties break toward the lowest index."""
    if len(v) == 0:
        raise ValueError("empty vector")
    vals = v.value.copy()
    idx = (
        np.arange(len(v), dtype=U64)
        if session.party == 0
        else np.zeros(len(v), dtype=U64)
    )
    params = v.params
    while vals.size > 1:
        m = vals.size // 2
        a_v, b_v = vals[: 2 * m : 2], vals[1 : 2 * m : 2]
        a_i, b_i = idx[: 2 * m : 2], idx[1 : 2 * m : 2]
        rest_v, rest_i = vals[2 * m :], idx[2 * m :]
        # take a unless b strictly greater (first-max tie-break)
        gt_b = f_greater(session, FixedShare(b_v, session.party, params),
                         FixedShare(a_v, session.party, params), tag)
        take_a = BoolShare(gt_b.bits ^ (U64(1) if session.party == 0 else U64(0)),
                           session.party, 1)
        dv, di = f_mux_pair(
            session, take_a,
            FixedShare(a_v - b_v, session.party, params),
            FixedShare(a_i - b_i, session.party, params), tag,
        )
        vals = np.concatenate([dv.value + b_v, rest_v])
        idx = np.concatenate([di.value + b_i, rest_i])
    return FixedShare(idx, session.party, params)


# ---------------------------------------------------------------------------
# division (Goldschmidt with oblivious power-of-two normalization)
# ---------------------------------------------------------------------------

GOLDSCHMIDT_ITERS = 5


def f_div(
    session: Session,
    x: FixedShare,
    y: FixedShare,
    y_min: float = 2.0 ** -10,
    y_max: float = 2.0 ** 10,
    tag: str = "div",
) -> FixedShare:
    """x / y for y > 0 within the public magnitude window [y_min, y_max].

    The power-of-two normalizer is selected obliviously (one comparison per
    candidate exponent), so nothing about y's magnitude is revealed.
    """
    f = x.params.f
    k = len(x)
    import math

    k_lo = math.floor(math.log2(y_min))
    k_hi = math.ceil(math.log2(y_max))
    # g_e = 1{y >= 2^e}; one-hot window o_e = g_e ^ g_{e+1}
    gbits = []
    for e in range(k_lo + 1, k_hi + 1):
        thr = U64(round(2.0 ** e * (1 << f)) - 1)
        gbits.append(f_greater(session, y, thr, tag).bits)
    one = U64(1) if session.party == 0 else U64(0)
    gbits = [np.full(k, one)] + gbits + [np.zeros(k, dtype=U64)]
    m = np.zeros(k, dtype=U64)
    for j, e in enumerate(range(k_lo, k_hi + 1)):
        o = gbits[j] ^ gbits[j + 1]
        scale = U64(round(2.0 ** (-e - 1) * (1 << f)))  # y*scale lands in [0.5, 1)
        m = m + mux_public(session, o, scale, tag).value
    m = FixedShare(m, session.party, x.params)
    v = f_mul(session, y, m, tag=tag)  # in [0.5, 1)
    # w0 = 2.9142 - 2v (affine initial approximation)
    w = FixedShare(
        (U64(round(2.9142 * (1 << f))) if session.party == 0 else U64(0)) - U64(2) * v.value,
        session.party, x.params,
    )
    two = U64(2 << f)
    for _ in range(GOLDSCHMIDT_ITERS):
        vw = f_mul(session, v, w, tag=tag)
        corr = FixedShare((two if session.party == 0 else U64(0)) - vw.value, session.party, x.params)
        w = f_mul(session, w, corr, tag=tag)
    # apply the power-of-two normalizer last so its truncation lands at the
    # final scale (keeps small quotients at the representation floor)
    xw = f_mul(session, x, w, tag=tag)
    return f_mul(session, xw, m, tag=tag)
