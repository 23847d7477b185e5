"""Exact low/high-level LLRs for the partitioned QPSK alphabet.

Sign convention: a positive LLR favours bit 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import RepetitionScheme, combine


@dataclass(frozen=True)
class LlrPair:
    llr_low: float
    llr_high: float


def llr_low(y, A: float, sigma2: float):
    """ln of (v_low=0 likelihood) / (v_low=1 likelihood), summed over each antipodal pair.

    Expanding the squared distances leaves only cross terms, so
    ``ln cosh(2 A Re y / sigma2) - ln cosh(2 A Im y / sigma2)``; each
    ``ln cosh`` is evaluated overflow-free.
    """
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    y = np.asarray(y, dtype=complex)
    k = 2.0 * A / sigma2
    out = _log_cosh(k * y.real) - _log_cosh(k * y.imag)
    return float(out) if out.ndim == 0 else out


def _log_cosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - np.log(2.0)


def llr_high(y, llr_low_value, A: float, sigma2: float):
    """High-level LLR, choosing the real or imaginary pair by the sign of the low-level LLR.

    A low-level LLR of exactly zero selects the imaginary pair.
    """
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    y = np.asarray(y, dtype=complex)
    k = 4.0 * A / sigma2
    out = np.where(np.asarray(llr_low_value) > 0, k * y.real, k * y.imag)
    return float(out) if out.ndim == 0 else out


def demap(y, A: float, sigma2: float) -> tuple[np.ndarray, np.ndarray]:
    """Both LLR arrays for channel outputs ``y``."""
    lo = np.atleast_1d(llr_low(y, A, sigma2))
    return lo, np.atleast_1d(llr_high(y, lo, A, sigma2))


def demap_frame(ys, scheme: RepetitionScheme, A: float, sigma2: float) -> list[LlrPair]:
    """Combine each group of ``M`` consecutive slots, then demap.

    ``A`` is the unrepeated amplitude and ``sigma2`` the per-slot noise
    variance; after combining the signal amplitude is ``sqrt(M) A`` and the
    noise variance ``M sigma2``.
    """
    lo, hi = demap_combined(ys, scheme, A, sigma2)
    return [LlrPair(float(a), float(b)) for a, b in zip(lo, hi)]


def demap_combined(ys, scheme: RepetitionScheme, A: float, sigma2: float):
    """Array form of :func:`demap_frame`; ``ys`` may carry leading batch axes."""
    ys = np.asarray(ys, dtype=complex)
    M = scheme.M
    if ys.shape[-1] % M:
        raise ValueError(f"frame length {ys.shape[-1]} is not a multiple of M={M}")
    slots = ys.reshape(ys.shape[:-1] + (ys.shape[-1] // M, M))
    y = combine(slots, axis=-1) if M > 1 else slots[..., 0]
    y = np.asarray(y)
    amp = M * A * scheme.scale
    noise = M * sigma2
    lo = llr_low(y, amp, noise)
    return np.asarray(lo), np.asarray(llr_high(y, lo, amp, noise))
