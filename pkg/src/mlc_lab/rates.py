"""Repetition achievable-rate line and its comparison with the MI curve.

Repeating the low level ``M`` times divides both SNR and rate by ``M``, so
every repeated operating point sits on the ray through the origin and the
anchor ``(gamma1, R1)``. Where the MI curve is convex that ray runs above
it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mi import MiCurve


@dataclass(frozen=True)
class RateLine:
    gamma1: float
    rate1: float

    def __post_init__(self):
        if not self.gamma1 > 0:
            raise ValueError(f"anchor SNR must be positive, got {self.gamma1}")
        if not self.rate1 > 0:
            raise ValueError(f"anchor rate must be positive, got {self.rate1}")

    @property
    def slope(self) -> float:
        return self.rate1 / self.gamma1

    def rate_at(self, gamma):
        return self.slope * np.asarray(gamma, dtype=float) if np.ndim(gamma) else self.slope * gamma

    def rate_for_repetition(self, M: int) -> float:
        """Rate at ``gamma1 / M``; exactly ``rate1 / M``."""
        return self.rate1 / M


@dataclass(frozen=True)
class GainPoint:
    M: int
    gamma_m: float
    ar: float
    mi_at_gamma_m: float
    gain_db: float | None

    @property
    def gamma_m_db(self) -> float:
        return 10.0 * math.log10(self.gamma_m)


def line_from_mi(gamma1: float, mi_curve: MiCurve) -> RateLine:
    """Anchor the line on the MI curve itself: ``R1 = I(gamma1)``."""
    if not mi_curve.contains(gamma1):
        raise ValueError(
            f"gamma1={gamma1} outside the curve's range "
            f"[{mi_curve.gammas[0]}, {mi_curve.gammas[-1]}]"
        )
    return RateLine(float(gamma1), mi_curve.value_at(gamma1))


def line_from_operating_point(gamma1: float, rate1: float) -> RateLine:
    """Anchor the line on a simulated operating point, e.g. a code's SNR at target BER."""
    return RateLine(float(gamma1), float(rate1))


def ar_points(line: RateLine, Ms, curve: MiCurve) -> list[GainPoint]:
    """Repeated operating points and their SNR gain over the MI curve.

    ``gain_db`` compares the SNR the MI curve needs to reach the repeated
    rate with the SNR the repetition actually uses. It is None when that
    rate is below the curve's range.
    """
    out = []
    for M in Ms:
        if int(M) != M or M < 1:
            raise ValueError(f"repetition factor must be a positive integer, got {M}")
        M = int(M)
        gamma_m = line.gamma1 / M
        ar = line.rate_for_repetition(M)
        mi = curve.value_at(gamma_m) if curve.contains(gamma_m) else float("nan")
        if M == 1:
            gain = 0.0
        else:
            g_star = curve.inverse(ar)
            gain = None if g_star is None or g_star <= 0 else 10.0 * math.log10(g_star / gamma_m)
        out.append(GainPoint(M, gamma_m, ar, mi, gain))
    return out


def crossover(line: RateLine, curve: MiCurve, tolerance: float = 1e-9,
              upto: float | None = None) -> list[tuple[float, float]]:
    """Sub-intervals of the curve's sampled range where the line exceeds the curve.

    Evaluated on the curve's own sample grid; each interval runs from the
    first to the last sample of a run where ``slope*gamma - I(gamma) > tolerance``.
    ``upto`` restricts the search to ``gamma <= upto`` (repetition only
    reaches SNRs below the anchor).
    """
    g, v = curve.gammas, curve.values
    if upto is not None:
        keep = g <= upto
        g, v = g[keep], v[keep]
    above = line.slope * g - v > tolerance
    intervals = []
    start = None
    for i, flag in enumerate(above):
        if flag and start is None:
            start = i
        if not flag and start is not None:
            intervals.append((float(g[start]), float(g[i - 1])))
            start = None
    if start is not None:
        intervals.append((float(g[start]), float(g[-1])))
    return intervals
