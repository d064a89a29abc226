"""Exact fixed-point arithmetic for fractional parts of n * sqrt(r).

Floating point drifts by about n ulps when a fractional orbit is walked
to n ~= 1e8, which is fatal for membership thresholds.  Everything here
is integer arithmetic on 96 fractional bits: sqrt(r) is computed as
isqrt(r << 192), and the orbit value (n * step) mod 2**96 is exact.  The
only approximation left is that step encodes sqrt(r) to 96 bits, so the
computed fractional part is within n * 2**-96 of the true one; below
n = 2**40 that error is at least 2**16 times smaller than the guard
band used when comparing against a threshold.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt

FRAC_BITS = 96
GUARD_BITS = 40

MOD = 1 << FRAC_BITS
MASK = MOD - 1
GUARD = 1 << (FRAC_BITS - GUARD_BITS)

# thresholds this close to 0 or 1 would let the guard band wrap the
# modulus; reject them up front
_THRESHOLD_MARGIN = Fraction(1, 1 << (GUARD_BITS - 1))


def is_square_free(r: int) -> bool:
    if r < 1:
        return False
    d = 2
    while d * d <= r:
        if r % (d * d) == 0:
            return False
        while r % d == 0:
            r //= d
        d += 1
    return True


def sqrt_fixed(radicand: int) -> int:
    """floor(sqrt(radicand) * 2**96), exact."""
    if radicand < 2:
        raise ValueError("radicand must be an integer >= 2")
    if not is_square_free(radicand):
        raise ValueError(f"radicand {radicand} is not square-free")
    return isqrt(radicand << (2 * FRAC_BITS))


def frac_step(radicand: int) -> int:
    """Fractional part of sqrt(radicand) in fixed point; the additive
    step of the orbit n -> frac(n * sqrt(radicand))."""
    return sqrt_fixed(radicand) & MASK


def threshold_fixed(p: Fraction) -> int:
    """floor(p * 2**96) for a rational threshold p.

    p must stay 2**-39 away from both 0 and 1 so that the comparison
    guard band cannot wrap around the modulus.
    """
    if not (_THRESHOLD_MARGIN < p < 1 - _THRESHOLD_MARGIN):
        raise ValueError(f"threshold {p} too close to 0 or 1 for guarded comparison")
    return (p.numerator << FRAC_BITS) // p.denominator


def iterated_sqrt_fixed(p: Fraction, times: int) -> int:
    """Fixed-point value of p ** (2**-times): apply isqrt `times` times.

    Each square root keeps 96 fractional bits, so the accumulated error
    stays within a few ulps, far below the guard band.
    """
    if not 0 < p < 1:
        raise ValueError("base must be strictly between 0 and 1")
    if times < 1:
        raise ValueError("need at least one square root")
    v = (p.numerator << FRAC_BITS) // p.denominator
    for _ in range(times):
        v = isqrt(v << FRAC_BITS)
    return v


def orbit_value(step: int, n: int) -> int:
    """(n * step) mod 2**96: the fixed-point fractional part at index n."""
    return (n * step) & MASK


def orbit_chunk_mask(step: int, thr_eff: int, start: int, length: int) -> int:
    """Membership bitmask of {n : orbit value < thr_eff} on [start, start+length).

    Walks the orbit by exact modular addition, which agrees bit for bit
    with orbit_value at every index.
    """
    x = (start * step) & MASK
    bits = bytearray((length + 7) // 8)
    for i in range(length):
        if x < thr_eff:
            bits[i >> 3] |= 1 << (i & 7)
        x += step
        if x >= MOD:
            x -= MOD
    return int.from_bytes(bytes(bits), "little")


def orbit_band_count(step: int, thr: int, start: int, length: int) -> int:
    """Number of indices in [start, start+length) whose orbit value lies
    in the guard band [thr - GUARD, thr + GUARD)."""
    lo = thr - GUARD
    hi = thr + GUARD
    x = (start * step) & MASK
    hits = 0
    for _ in range(length):
        if lo <= x < hi:
            hits += 1
        x += step
        if x >= MOD:
            x -= MOD
    return hits
