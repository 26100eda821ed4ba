"""Counter-based space-time noise fields.

The dynamics consume an i.i.d. field xi_t(i) indexed by integer time and
site. Values must be random-access: the same (seed, t, i) always yields
the same number no matter which window, batch, or evaluation order asked
for it, because the dual-representation and decomposition identities
re-read the very noise a simulation consumed.

Generation is a stateless 64-bit hash of the index (a SplitMix64-style
finalizer applied to key + index * golden-ratio increment), vectorized
with numpy's wrapping uint64 arithmetic. One site owns a stride of two
64-bit words regardless of family, so families are interchangeable
without re-keying.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import HarnessLabError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

FAMILIES = ("gaussian", "centered-uniform", "centered-two-point")

_U64_GOLDEN = np.uint64(_GOLDEN)
_U64_M1 = np.uint64(_M1)
_U64_M2 = np.uint64(_M2)
_TWO = np.uint64(2)
_ONE = np.uint64(1)
_SH30 = np.uint64(30)
_SH27 = np.uint64(27)
_SH31 = np.uint64(31)
_SH11 = np.uint64(11)
_SH63 = np.uint64(63)
# maps the top 53 bits of a word into (0, 1)
_INV53 = 2.0 ** -53


def mix64_int(x: int) -> int:
    """SplitMix64 finalizer on a python integer (mod 2^64)."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * _M1) & _MASK64
    x = ((x ^ (x >> 27)) * _M2) & _MASK64
    return x ^ (x >> 31)


def _mix64(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> _SH30)) * _U64_M1
    x = (x ^ (x >> _SH27)) * _U64_M2
    return x ^ (x >> _SH31)


def derive_seed(master: int, *indices: int) -> int:
    """Deterministic 64-bit child seed from a master seed and index path."""
    s = mix64_int(master)
    for ix in indices:
        s = mix64_int(s ^ mix64_int((ix & _MASK64) * _GOLDEN + 0x1D8E4E27C47D124F))
    return s


def _stream_tag(stream: str) -> int:
    tag = 0xCBF29CE484222325
    for ch in stream.encode():
        tag = ((tag ^ ch) * 0x100000001B3) & _MASK64
    return tag


@dataclass(frozen=True)
class NoiseSpec:
    """Family and variance of the dynamical noise, without a seed."""

    family: str = "gaussian"
    sigma_xi_sq: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise HarnessLabError(
                f"unknown noise family {self.family!r}; choose from {FAMILIES}"
            )
        if self.sigma_xi_sq < 0.0:
            raise HarnessLabError("noise variance must be nonnegative")

    def realize(self, seed: int, stream: str = "xi") -> "NoiseRealization":
        return NoiseRealization(
            seed=seed,
            sigma_xi_sq=self.sigma_xi_sq,
            distribution=self.family,
            stream=stream,
        )


@dataclass(frozen=True)
class NoiseRealization:
    """Seeded random-access noise field over (time, site).

    xi(t, i) is mean 0 with variance sigma_xi_sq under the chosen family,
    identical across repeated access, and independent of how neighbours
    are read. stream separates independent uses of one seed (dynamics,
    initial conditions) without coordination.
    """

    seed: int
    sigma_xi_sq: float
    distribution: str = "gaussian"
    stream: str = "xi"

    def __post_init__(self):
        if self.distribution not in FAMILIES:
            raise HarnessLabError(
                f"unknown noise family {self.distribution!r}; choose from {FAMILIES}"
            )
        if self.sigma_xi_sq < 0.0:
            raise HarnessLabError("noise variance must be nonnegative")

    @cached_property
    def key(self) -> int:
        return mix64_int(mix64_int(self.seed) ^ _stream_tag(self.stream))

    @cached_property
    def _sigma(self) -> float:
        return float(np.sqrt(self.sigma_xi_sq))

    def _base(self, t: int) -> int:
        return mix64_int(self.key ^ mix64_int((t & _MASK64) * _GOLDEN + 0x94D049BB133111EB))

    def row(self, t: int, lo: int, hi: int) -> np.ndarray:
        """Values xi(t, i) for lo <= i < hi as a float64 array."""
        if hi <= lo:
            return np.zeros(0)
        if self.sigma_xi_sq == 0.0:
            return np.zeros(hi - lo)
        bases = np.array([self._base(t)], dtype=np.uint64)
        return _rows(bases, lo, hi, self.distribution, self._sigma)[0]

    def xi(self, t: int, i: int) -> float:
        return float(self.row(t, i, i + 1)[0])


def batch_rows(
    noises: Sequence[NoiseRealization], t: int, lo: int, hi: int
) -> np.ndarray:
    """Stacked rows for many realizations at one time, shape (len, hi-lo).

    Bitwise identical to stacking each realization's row(t, lo, hi); the
    batch exists because per-replica python overhead dominates otherwise.
    """
    first = noises[0]
    if hi <= lo:
        return np.zeros((len(noises), 0))
    if first.sigma_xi_sq == 0.0:
        return np.zeros((len(noises), hi - lo))
    bases = np.array([n._base(t) for n in noises], dtype=np.uint64)
    return _rows(bases, lo, hi, first.distribution, first._sigma)


def _uniform01(words: np.ndarray) -> np.ndarray:
    return ((words >> _SH11).astype(np.float64) + 0.5) * _INV53


def _rows(bases: np.ndarray, lo: int, hi: int, family: str, sigma: float) -> np.ndarray:
    """Rows for all bases at sites [lo, hi); bases is a uint64 (R,) array.

    Gaussians are produced two sites at a time (cosine and sine of one
    polar draw), anchored on even-site pairs so values stay a pure
    function of (key, t, site).
    """
    col = bases[:, np.newaxis]
    if family == "gaussian":
        p_lo, p_hi = lo >> 1, ((hi - 1) >> 1) + 1
        idx = (np.arange(p_lo, p_hi, dtype=np.int64) << 1).astype(np.uint64)[np.newaxis, :]
        with np.errstate(over="ignore"):
            w1 = _mix64(col + idx * _U64_GOLDEN)
            w2 = _mix64(col + (idx + _ONE) * _U64_GOLDEN)
        radius = _uniform01(w1)
        np.log(radius, out=radius)
        radius *= -2.0
        np.sqrt(radius, out=radius)
        radius *= sigma
        angle = _uniform01(w2)
        angle *= 2.0 * np.pi
        out = np.empty((len(bases), 2 * (p_hi - p_lo)))
        out[:, 0::2] = radius * np.cos(angle)
        np.sin(angle, out=angle)
        angle *= radius
        out[:, 1::2] = angle
        start = lo - 2 * p_lo
        return out[:, start : start + (hi - lo)]
    idx = (np.arange(lo, hi, dtype=np.int64).astype(np.uint64)) * _TWO
    with np.errstate(over="ignore"):
        w1 = _mix64(col + idx[np.newaxis, :] * _U64_GOLDEN)
    if family == "centered-uniform":
        u = _uniform01(w1)
        # spread to match the requested variance
        return (2.0 * u - 1.0) * (sigma * np.sqrt(3.0))
    # centered-two-point
    sign = (w1 >> _SH63).astype(np.float64)
    return (1.0 - 2.0 * sign) * sigma
