"""Portable counter-based pseudo-random generator (SplitMix64).

Reproducibility across platforms and languages matters more here than raw
throughput: synthetic domain transforms and benchmark datasets must be
regenerable bit-for-bit from a seed alone.  SplitMix64 fits because it is a
tiny, fully specified 64-bit mixing function with a counter-based stream:

    output(i) = mix64(seed + (i + 1) * 0x9E3779B97F4A7C15)

where ``mix64`` is

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

with all arithmetic modulo 2**64.  Uniform doubles take the top 53 bits;
normals come from the Box-Muller transform on consecutive uniform pairs.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = 2.0 ** -53


def _mix(z):
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def raw(seed, count, offset=0):
    """Words ``offset .. offset+count-1`` of the stream as uint64."""
    idx = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    return _mix(np.uint64(seed) + idx * _GOLDEN)


def fold(seed, key):
    """Derive a child seed from (seed, key); used to give independent
    streams to e.g. each atom of a dictionary."""
    z = np.asarray([np.uint64(seed)])
    k = np.asarray([np.uint64(key)])
    return int(_mix(z ^ _mix(k + _GOLDEN))[0])


def uniform(seed, count, offset=0):
    """``count`` doubles in [0, 1)."""
    return (raw(seed, count, offset) >> np.uint64(11)).astype(np.float64) * _U53


def normal(seed, count, offset=0):
    """``count`` standard normal doubles via Box-Muller.

    Consumes ``2 * ceil(count / 2)`` uniform words starting at ``offset``;
    use `fold` for disjoint streams rather than manual offset bookkeeping.
    """
    pairs = (count + 1) // 2
    words = raw(seed, 2 * pairs, offset)
    # u1 in (0, 1] keeps the log finite
    u1 = ((words[:pairs] >> np.uint64(11)).astype(np.float64) + 1.0) * _U53
    u2 = (words[pairs:] >> np.uint64(11)).astype(np.float64) * _U53
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    out = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
    return out[:count]
