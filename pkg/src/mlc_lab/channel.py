"""Complex AWGN channel, symbol repetition and sum combining.

SNR convention throughout the package: ``gamma = A**2 / sigma2`` where
``sigma2`` is the total variance of the circularly-symmetric complex noise
(``sigma2 / 2`` per real component).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constellation import LabeledConstellation


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based Philox generator for the stream keyed by ``(seed, *stream)``.

    Distinct stream keys give statistically independent generators, so
    parallel workers never share randomness.
    """
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ChannelParams:
    noise_variance: float
    seed: int = 0

    def __post_init__(self):
        if not self.noise_variance > 0:
            raise ValueError(f"noise variance must be positive, got {self.noise_variance}")

    @property
    def component_variance(self) -> float:
        return self.noise_variance / 2

    def rng(self, *stream: int) -> np.random.Generator:
        return make_rng(self.seed, *stream)


@dataclass(frozen=True)
class RepetitionScheme:
    """Send ``x / sqrt(M)`` in ``M`` slots; energy per information symbol is unchanged."""

    M: int = 1

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"repetition factor must be a positive integer, got {self.M}")

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.M)


def complex_noise(rng: np.random.Generator, shape, noise_variance: float) -> np.ndarray:
    """Draw CN(0, noise_variance) samples."""
    sd = math.sqrt(noise_variance / 2)
    out = rng.standard_normal(shape + (2,) if isinstance(shape, tuple) else (shape, 2))
    return sd * (out[..., 0] + 1j * out[..., 1])


def transmit(x, p: ChannelParams, rng: np.random.Generator | None = None):
    """Return ``x + n`` with ``n ~ CN(0, sigma2)``; ``x`` may be a scalar or array."""
    rng = p.rng() if rng is None else rng
    x_arr = np.asarray(x, dtype=complex)
    y = x_arr + complex_noise(rng, x_arr.shape, p.noise_variance)
    return complex(y) if y.ndim == 0 else y


def transmit_repeated(x, r: RepetitionScheme, p: ChannelParams, rng: np.random.Generator | None = None):
    """Send each symbol ``M`` times at amplitude ``x / sqrt(M)``.

    The slot axis is appended last: a scalar gives shape ``(M,)``, an array
    of shape ``s`` gives ``s + (M,)``. Noise is i.i.d. across slots.
    """
    rng = p.rng() if rng is None else rng
    x_arr = np.asarray(x, dtype=complex)
    slots = np.repeat((x_arr * r.scale)[..., None], r.M, axis=-1)
    return slots + complex_noise(rng, slots.shape, p.noise_variance)


def combine(slots, axis: int = -1):
    """Sum the repeated slots (signal ``sqrt(M) x``, noise variance ``M sigma2``)."""
    slots = np.asarray(slots, dtype=complex)
    if slots.ndim == 0 or slots.shape[axis] == 0:
        raise ValueError("cannot combine an empty slot vector")
    y = slots.sum(axis=axis)
    return complex(y) if y.ndim == 0 else y


def snr_of(c: LabeledConstellation, p: ChannelParams) -> float:
    return c.amplitude**2 / p.noise_variance


def to_db(gamma):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(gamma)


def from_db(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)
