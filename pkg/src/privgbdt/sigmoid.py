"""Secure sigmoid via a clipped Fourier sine series.

Two variants are provided.  The default order-3 series is fit by least
squares on a dense grid over the clip window and reaches max/mean error
0.0148/0.0022 against the exact sigmoid; the order-8 baseline uses classic
integral Fourier coefficients (max error 0.022).  Inside the window each
party evaluates sin/cos on its own share and the cross terms are combined by
the angle-addition identity, costing 2J secure multiplications; the two clip
comparisons reuse their low-digit comparison results.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .primitives import (
    f_and_bits,
    f_greater,
    f_greater_two_thresholds,
    f_mul,
    f_mux,
    mux_public,
)
from .session import Session
from .shares import BoolShare, FixedShare, DEFAULT_PARAMS

U64 = np.uint64

# order-3 coefficients, least-squares fit of sigmoid(x)-1/2 on [-5.6, 5.6]
# against sin(2*pi*j*x/16)
COEFFS_DEFAULT = (0.5352260069488296, -0.03360148755581189, 0.05367361423235735)

# order-8 integral-derived coefficients on the period-32 window
COEFFS_ORDER8 = (
    0.6172949043536652,
    -0.03419900212613369,
    0.16937885022445773,
    -0.046033384789861936,
    0.08167127961221887,
    -0.04334750592274587,
    0.0507073237098218,
    -0.03696433732433722,
)


@dataclasses.dataclass(frozen=True)
class SigmoidParams:
    """Clip bound, series order, scale exponent, and comparison reuse width."""

    mu: float = 5.6
    J: int = 3
    L: int = 3
    a0: float = 0.5
    coeffs: tuple = COEFFS_DEFAULT
    delta: int = 4
    period_shift: int = 1  # period = 2^(L + period_shift)

    @property
    def period(self) -> float:
        return float(1 << (self.L + self.period_shift))

    def clip_encoding(self, f: int) -> int:
        """Clip threshold as a ring encoding, rounded up to a multiple of
        2^(f-delta) so both comparisons share their f-delta low bits."""
        step = 1 << (f - self.delta)
        return ((round(self.mu * (1 << f)) + step - 1) // step) * step

    def series(self, x: np.ndarray) -> np.ndarray:
        """Plaintext reference of the unclipped series."""
        x = np.asarray(x, dtype=np.float64)
        out = np.full_like(x, self.a0)
        for j, a in enumerate(self.coeffs, start=1):
            out = out + a * np.sin(2.0 * np.pi * j * x / self.period)
        return out

    def reference(self, x: np.ndarray) -> np.ndarray:
        """Plaintext reference including clipping (the training oracle uses it)."""
        x = np.asarray(x, dtype=np.float64)
        clip = self.clip_encoding(DEFAULT_PARAMS.f) / float(1 << DEFAULT_PARAMS.f)
        out = self.series(x)
        return np.where(x > clip, 1.0, np.where(x <= -clip, 0.0, out))


SQUIRREL_PARAMS = SigmoidParams(J=8, coeffs=COEFFS_ORDER8, period_shift=2)


def _local_trig(x_share: np.ndarray, params: SigmoidParams, f: int):
    """sin/cos of this party's share angle for every series term.

    Arguments are reduced modulo the encoded period before the float
    conversion, so full-range uint64 shares lose no precision.
    """
    period_bits = params.L + params.period_shift + f
    t = (x_share & U64((1 << period_bits) - 1)).astype(np.float64)
    theta = 2.0 * np.pi * t / float(1 << period_bits)
    sines = [np.sin(j * theta) for j in range(1, params.J + 1)]
    cosines = [np.cos(j * theta) for j in range(1, params.J + 1)]
    return sines, cosines


def f_sigmoid(
    session: Session,
    x: FixedShare,
    params: SigmoidParams = SigmoidParams(),
) -> FixedShare:
    """Shares of sigmoid(x): clipped outside +-mu, Fourier series inside."""
    f = x.params.f
    k = len(x)
    clip = params.clip_encoding(f)

    if params.period_shift == 1 and params.delta > 0:
        b_gt, b_le = f_greater_two_thresholds(
            session, x, clip, clip, shared_low_bits=f - params.delta
        )
    else:
        b_gt = f_greater(session, x, U64(clip), tag="sigmoid")
        neg = FixedShare(U64(0) - x.value, x.party, x.params)
        b_le = f_greater(session, neg, U64(clip - 1), tag="sigmoid")

    sines, cosines = _local_trig(x.value, params, f)
    scale = float(1 << f)
    if session.party == 0:
        left = np.concatenate([np.rint(s * scale) for s in sines]
                              + [np.rint(c * scale) for c in cosines])
        right = np.zeros(2 * params.J * k)
    else:
        left = np.zeros(2 * params.J * k)
        right = np.concatenate(
            [np.rint(a * c * scale) for a, c in zip(params.coeffs, cosines)]
            + [np.rint(a * s * scale) for a, s in zip(params.coeffs, sines)]
        )
    lhs = FixedShare(left.astype(np.int64).astype(U64), x.party, x.params)
    rhs = FixedShare(right.astype(np.int64).astype(U64), x.party, x.params)
    prods = f_mul(session, lhs, rhs, tag="sigmoid")
    series = np.zeros(k, dtype=U64)
    for j in range(2 * params.J):
        series = series + prods.value[j * k : (j + 1) * k]
    if session.party == 0:
        series = series + U64(round(params.a0 * scale))

    not_gt = b_gt.bits ^ (U64(1) if session.party == 0 else U64(0))
    not_le = b_le.bits ^ (U64(1) if session.party == 0 else U64(0))
    in_range = BoolShare(f_and_bits(session, not_gt, not_le, "sigmoid"), x.party, 1)
    inner = f_mux(session, in_range, FixedShare(series, x.party, x.params), tag="sigmoid")
    high = mux_public(session, b_gt.bits, U64(1 << f), tag="sigmoid")
    return FixedShare(inner.value + high.value, x.party, x.params)
