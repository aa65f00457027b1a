"""Portable seeded random streams and a Poisson sampler.

The generator is xoshiro256** (Blackman & Vigna) seeded through splitmix64,
so a given seed produces the same stream on any platform or in any language
that implements the same published recurrences. Uniform doubles take the top
53 bits of each output.

Poisson variates use sequential-search inversion for small rates and
Hörmann's transformed rejection with squeeze (PTRS) for rates >= 10; both are
exact samplers.
"""

from __future__ import annotations

import math

import numba
import numpy as np

__all__ = ["Xoshiro256", "POISSON_INVERSION_LIMIT"]

POISSON_INVERSION_LIMIT = 10.0

_U64 = np.uint64
_MASK_SHIFT = _U64(11)
_TWO_M53 = 1.0 / 9007199254740992.0


@numba.njit(cache=True)
def _splitmix64(x):
    x = x + _U64(0x9E3779B97F4A7C15)
    z = x
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return x, z ^ (z >> _U64(31))


@numba.njit(cache=True)
def _seed_state(seed):
    s = np.empty(4, dtype=np.uint64)
    x = seed
    for i in range(4):
        x, s[i] = _splitmix64(x)
    return s


@numba.njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << _U64(k)) | (x >> _U64(64 - k))


@numba.njit(cache=True)
def _next(s):
    result = _rotl(s[1] * _U64(5), 7) * _U64(9)
    t = s[1] << _U64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@numba.njit(cache=True)
def _uniform(s):
    return float(_next(s) >> _MASK_SHIFT) * _TWO_M53


@numba.njit(cache=True)
def _fill_uniform(s, out):
    for i in range(out.size):
        out[i] = _uniform(s)


@numba.njit(cache=True)
def _fill_normal(s, out):
    # Box-Muller; both outputs of each pair are used in order.
    n = out.size
    i = 0
    while i < n:
        u1 = 1.0 - _uniform(s)  # (0, 1]
        u2 = _uniform(s)
        rad = math.sqrt(-2.0 * math.log(u1))
        out[i] = rad * math.cos(2.0 * math.pi * u2)
        if i + 1 < n:
            out[i + 1] = rad * math.sin(2.0 * math.pi * u2)
        i += 2


@numba.njit(cache=True)
def _poisson_inversion(s, lam):
    u = _uniform(s)
    k = 0
    p = math.exp(-lam)
    cdf = p
    while u > cdf:
        k += 1
        p *= lam / k
        cdf += p
        if p == 0.0 and cdf < u:
            # Floating-point tail exhausted; u lies in the rounding gap.
            break
    return k


@numba.njit(cache=True)
def _poisson_ptrs(s, lam):
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = _uniform(s) - 0.5
        v = _uniform(s)
        us = 0.5 - abs(u)
        if us == 0.0:
            continue
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        if v == 0.0:
            return int(k)
        if (math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= -lam + k * loglam - math.lgamma(k + 1.0)):
            return int(k)


@numba.njit(cache=True)
def _poisson_one(s, lam):
    if lam <= 0.0:
        return 0
    if lam < 10.0:
        return _poisson_inversion(s, lam)
    return _poisson_ptrs(s, lam)


@numba.njit(cache=True)
def _fill_poisson(s, lam, out):
    for i in range(out.size):
        out[i] = _poisson_one(s, lam[i])


class Xoshiro256:
    """Seeded xoshiro256** stream.

    >>> rng = Xoshiro256(7)
    >>> x = rng.random(3)
    >>> bool(((0 <= x) & (x < 1)).all())
    True
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self._state = _seed_state(_U64(self.seed & 0xFFFFFFFFFFFFFFFF))

    @property
    def state(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self._state)

    def next_uint64(self) -> int:
        return int(_next(self._state))

    def random(self, size=None):
        """Uniform doubles on ``[0, 1)``."""
        if size is None:
            return float(_uniform(self._state))
        out = np.empty(size, dtype=np.float64)
        _fill_uniform(self._state, out.reshape(-1))
        return out

    def uniform(self, low=0.0, high=1.0, size=None):
        return low + (high - low) * self.random(size)

    def integers(self, low: int, high: int) -> int:
        """Integer in ``[low, high)``."""
        if high <= low:
            raise ValueError("empty integer range")
        return low + int(self.random() * (high - low))

    def normal(self, loc=0.0, scale=1.0, size=None):
        n = 1 if size is None else int(np.prod(size))
        out = np.empty(n, dtype=np.float64)
        _fill_normal(self._state, out)
        out = loc + scale * out
        return float(out[0]) if size is None else out.reshape(size)

    def poisson(self, lam, size=None):
        """Poisson variates with rate ``lam`` (scalar or array, broadcast to ``size``)."""
        lam_arr = np.asarray(lam, dtype=np.float64)
        if size is not None:
            lam_arr = np.broadcast_to(lam_arr, size)
        if not np.all(np.isfinite(lam_arr)) or np.any(lam_arr < 0):
            raise ValueError("poisson rates must be finite and >= 0")
        flat = np.ascontiguousarray(lam_arr).reshape(-1)
        out = np.empty(flat.size, dtype=np.int64)
        _fill_poisson(self._state, flat, out)
        if lam_arr.ndim == 0:
            return int(out[0])
        return out.reshape(lam_arr.shape)
