"""Per-level mutual information of set-partitioned QPSK.

Two independent routes to the low-level MI are provided:

* :func:`mi_low_quadrature` integrates the MI definition over the complex
  plane with tensor-product Gauss-Hermite quadrature, working directly with
  the ``(A, sigma2)`` conditional densities.
* :func:`mi_low_expectation` draws unit-variance complex noise and averages
  the closed four-term expectation written in terms of ``sqrt(gamma)``.

All values are in bits.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import logsumexp

from .channel import make_rng
from .constellation import LabeledConstellation, Level, LevelSubset, qpsk

LOG2E = 1.0 / math.log(2.0)


class NumericalError(ArithmeticError):
    """A quadrature produced a non-finite value."""


class Backend(enum.Enum):
    QUADRATURE = "quad"
    MONTE_CARLO = "mc"


class CurveLevel(enum.Enum):
    LOW = "low"
    HIGH = "high"
    TOTAL = "total"


@dataclass(frozen=True)
class MiPoint:
    gamma: float
    value: float
    backend: Backend = Backend.QUADRATURE
    stderr: float = 0.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Hermite rule per axis, doubled until the estimate moves less than ``tol``."""

    nodes: int = 64
    tol: float = 1e-5
    max_nodes: int = 512
    refine: bool = True


@dataclass(frozen=True)
class ConvexityReport:
    gamma_a: float
    gamma_b: float
    is_convex: bool
    max_chord_violation: float


@dataclass(frozen=True)
class MiCurve:
    """MI sampled on a strictly increasing SNR grid.

    Evaluation and inversion go through a monotone piecewise-cubic
    interpolant, so no spurious wiggles are introduced between samples.
    """

    level: CurveLevel
    points: tuple[MiPoint, ...]

    def __post_init__(self):
        g = self.gammas
        if len(g) < 2:
            raise ValueError("a curve needs at least two points")
        if np.any(np.diff(g) <= 0):
            raise ValueError("curve SNR grid must be strictly increasing")

    @property
    def gammas(self) -> np.ndarray:
        return np.array([p.gamma for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    @cached_property
    def _interp(self) -> PchipInterpolator:
        return PchipInterpolator(self.gammas, self.values, extrapolate=False)

    def contains(self, gamma: float) -> bool:
        return self.gammas[0] <= gamma <= self.gammas[-1]

    def value_at(self, gamma):
        g = np.asarray(gamma, dtype=float)
        if np.any((g < self.gammas[0]) | (g > self.gammas[-1])):
            raise ValueError(
                f"gamma outside sampled range [{self.gammas[0]}, {self.gammas[-1]}]"
            )
        out = self._interp(g)
        return float(out) if out.ndim == 0 else out

    def inverse(self, rate: float, tol: float = 1e-9) -> float | None:
        """SNR at which the curve first reaches ``rate``; None if never reached."""
        g, v = self.gammas, self.values
        if rate < v[0] or rate > v.max():
            return None
        if rate == v[0]:
            return float(g[0])
        i = int(np.argmax(v >= rate))
        lo, hi = float(g[i - 1]), float(g[i])
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if self._interp(mid) < rate:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def conditional_density(y, subset: LevelSubset, c: LabeledConstellation, sigma2: float):
    """Density of ``y`` given the partition path of ``subset``.

    Uniform mixture of CN(q, sigma2) over the subset members, with density
    ``exp(-|y - q|^2 / sigma2) / (pi sigma2)`` per component.
    """
    pts = c.subset_points(subset)
    y = np.asarray(y, dtype=complex)
    d2 = np.abs(y[..., None] - pts) ** 2
    out = np.exp(-d2 / sigma2).mean(axis=-1) / (math.pi * sigma2)
    return float(out) if out.ndim == 0 else out


def _hermite_grid(nodes: int):
    t, w = np.polynomial.hermite.hermgauss(nodes)
    u, v = np.meshgrid(t, t, indexing="ij")
    return (u + 1j * v).ravel(), (np.outer(w, w) / math.pi).ravel()


def _group_mi_fixed(groups, sigma2: float, nodes: int) -> float:
    """I(G; Y) for a uniform group label G, each group a uniform set of points."""
    z, w = _hermite_grid(nodes)
    noise = math.sqrt(sigma2) * z
    n_groups = len(groups)
    penalty = 0.0
    for gi, pts in enumerate(groups):
        for q in pts:
            y = q + noise
            # log of each group's mixture density; the Gaussian prefactor cancels in the ratio
            log_groups = np.stack([
                logsumexp(-np.abs(y[:, None] - np.asarray(g)) ** 2 / sigma2, axis=1) - math.log(len(g))
                for g in groups
            ])
            log_ratio = logsumexp(log_groups, axis=0) - log_groups[gi]
            penalty += np.dot(w, log_ratio) / len(pts)
    value = math.log2(n_groups) - penalty * LOG2E / n_groups
    if not np.isfinite(value):
        raise NumericalError(
            f"non-finite MI (sigma2={sigma2}, nodes={nodes}, groups={groups})"
        )
    return value


def group_mi(groups, sigma2: float, grid: QuadratureSpec | None = None) -> float:
    grid = grid or QuadratureSpec()
    nodes = grid.nodes
    value = _group_mi_fixed(groups, sigma2, nodes)
    if not grid.refine:
        return value
    while True:
        if nodes * 2 > grid.max_nodes:
            warnings.warn(
                f"Gauss-Hermite rule not converged to {grid.tol} at {nodes} nodes "
                f"(sigma2={sigma2})",
                RuntimeWarning,
                stacklevel=3,
            )
            return value
        nodes *= 2
        finer = _group_mi_fixed(groups, sigma2, nodes)
        if abs(finer - value) < grid.tol:
            return finer
        value = finer


def _clip_bits(value: float, upper: float) -> float:
    return min(max(value, 0.0), upper)


def _sigma2(gamma: float, c: LabeledConstellation) -> float:
    return c.amplitude**2 / gamma


def _check_gamma(gamma: float):
    if not (gamma >= 0 and np.isfinite(gamma)):
        raise ValueError(f"gamma must be finite and non-negative, got {gamma}")


def mi_low_quadrature(gamma: float, grid: QuadratureSpec | None = None,
                      constellation: LabeledConstellation | None = None) -> MiPoint:
    """I(V_low; Y) at linear SNR ``gamma`` by 2-D Gauss-Hermite quadrature."""
    _check_gamma(gamma)
    if gamma == 0:
        return MiPoint(0.0, 0.0, Backend.QUADRATURE)
    c = constellation or qpsk(1.0)
    groups = [c.subset_points(s) for s in c.low_subsets()]
    value = group_mi(groups, _sigma2(gamma, c), grid)
    return MiPoint(float(gamma), _clip_bits(value, 1.0), Backend.QUADRATURE)


def _log_f(w: np.ndarray, a: complex) -> np.ndarray:
    return -np.abs(w - a) ** 2


def _log1p_ratio(w, num, den) -> np.ndarray:
    """log(1 + (f(w,n1)+f(w,n2)) / (f(w,d1)+f(w,d2))) without underflow."""
    log_num = np.logaddexp(_log_f(w, num[0]), _log_f(w, num[1]))
    log_den = np.logaddexp(_log_f(w, den[0]), _log_f(w, den[1]))
    return np.logaddexp(log_den, log_num) - log_den


def low_level_expectation_terms(gamma: float) -> list[tuple[tuple[complex, complex], tuple[complex, complex]]]:
    """Numerator and denominator offsets of the four expectation terms.

    Each term corresponds to one transmitted point; the offsets are the
    other points of the alphabet relative to it, in units of the noise
    deviation.
    """
    s = math.sqrt(gamma)
    return [
        ((-s + 1j * s, -s - 1j * s), (0, -2 * s)),        # sent +A
        ((s + 1j * s, s - 1j * s), (2 * s, 0)),           # sent -A
        ((s - 1j * s, -s - 1j * s), (0, -2j * s)),        # sent +jA
        ((s + 1j * s, -s + 1j * s), (2j * s, 0)),         # sent -jA
    ]


def mi_low_expectation(gamma: float, samples: int = 1_000_000, seed: int = 0,
                       chunk: int = 250_000) -> MiPoint:
    """Monte-Carlo low-level MI from the closed expectation over W ~ CN(0, 1).

    Every draw of ``W`` is shared by the four terms, so the per-draw value
    ``1 - sum(terms) / 4`` is averaged and its standard error reported.
    """
    _check_gamma(gamma)
    if samples < 10_000:
        raise ValueError(f"need at least 1e4 samples, got {samples}")
    rng = make_rng(seed, 0x4D49)
    terms = low_level_expectation_terms(gamma)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        z = rng.standard_normal((n, 2)) * math.sqrt(0.5)
        w = z[:, 0] + 1j * z[:, 1]
        acc = np.zeros(n)
        for num, den in terms:
            acc += _log1p_ratio(w, num, den)
        per_draw = 1.0 - 0.25 * acc * LOG2E
        total += per_draw.sum()
        total_sq += np.dot(per_draw, per_draw)
        done += n
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return MiPoint(float(gamma), float(mean), Backend.MONTE_CARLO, math.sqrt(var / (samples - 1)))


def mi_high(gamma: float, grid: QuadratureSpec | None = None,
            constellation: LabeledConstellation | None = None) -> MiPoint:
    """I(V_high; Y | V_low): binary MI of each antipodal pair, averaged over v_low."""
    _check_gamma(gamma)
    if gamma == 0:
        return MiPoint(0.0, 0.0, Backend.QUADRATURE)
    c = constellation or qpsk(1.0)
    sigma2 = _sigma2(gamma, c)
    vals = []
    for v_low in (0, 1):
        groups = [c.subset_points(s) for s in c.high_subsets(v_low)]
        vals.append(group_mi(groups, sigma2, grid))
    return MiPoint(float(gamma), _clip_bits(float(np.mean(vals)), 1.0), Backend.QUADRATURE)


def mi_total_qpsk(gamma: float, grid: QuadratureSpec | None = None,
                  constellation: LabeledConstellation | None = None) -> MiPoint:
    """Symmetric-input MI of the whole 4-ary alphabet."""
    _check_gamma(gamma)
    if gamma == 0:
        return MiPoint(0.0, 0.0, Backend.QUADRATURE)
    c = constellation or qpsk(1.0)
    groups = [[p] for p in c.points]
    value = group_mi(groups, _sigma2(gamma, c), grid)
    return MiPoint(float(gamma), _clip_bits(value, math.log2(c.size)), Backend.QUADRATURE)


_LEVEL_FUNCS = {
    CurveLevel.LOW: mi_low_quadrature,
    CurveLevel.HIGH: mi_high,
    CurveLevel.TOTAL: mi_total_qpsk,
}


def mi_curve(gammas, level: CurveLevel = CurveLevel.LOW, backend: Backend = Backend.QUADRATURE,
             grid: QuadratureSpec | None = None, samples: int = 1_000_000,
             seed: int = 0) -> MiCurve:
    """Sample one level's MI on ``gammas``.

    The Monte-Carlo backend exists only for the low level; each SNR point
    gets its own random stream derived from ``seed`` and the point index.
    """
    gammas = [float(g) for g in gammas]
    if backend is Backend.MONTE_CARLO:
        if level is not CurveLevel.LOW:
            raise ValueError("the Monte-Carlo backend covers the low level only")
        pts = [mi_low_expectation(g, samples, seed=_point_seed(seed, i))
               for i, g in enumerate(gammas)]
    else:
        fn = _LEVEL_FUNCS[level]
        pts = [fn(g, grid) for g in gammas]
    return MiCurve(level, tuple(pts))


def _point_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class MiRow:
    gamma: float
    mi_low: float
    mi_high: float
    mi_total: float
    backend: Backend
    stderr: float


def mi_table(gammas, backend: Backend = Backend.QUADRATURE, grid: QuadratureSpec | None = None,
             samples: int = 1_000_000, seed: int = 0) -> list[MiRow]:
    """All three levels per SNR; ``backend`` selects the low-level route.

    High-level and total MI always come from quadrature, and ``stderr``
    refers to the low-level value.
    """
    low = mi_curve(gammas, CurveLevel.LOW, backend, grid, samples, seed)
    rows = []
    for p in low.points:
        rows.append(MiRow(p.gamma, p.value, mi_high(p.gamma, grid).value,
                          mi_total_qpsk(p.gamma, grid).value, p.backend, p.stderr))
    return rows


def is_convex_on(curve: MiCurve, gamma_a: float, gamma_b: float,
                 strict_margin: float = 1e-6) -> ConvexityReport:
    """Chord test on ``[gamma_a, gamma_b]``.

    Every interior sample must lie strictly below the chord joining the
    curve values at the interval ends. ``max_chord_violation`` is the
    largest ``f(x) - chord(x)`` (positive means above the chord); the curve
    counts as convex when it is below ``-strict_margin``.
    """
    if not gamma_b > gamma_a:
        raise ValueError(f"need gamma_b > gamma_a, got [{gamma_a}, {gamma_b}]")
    g, v = curve.gammas, curve.values
    inside = (g >= gamma_a) & (g <= gamma_b)
    if inside.sum() < 3:
        raise ValueError(
            f"need at least 3 samples in [{gamma_a}, {gamma_b}], found {int(inside.sum())}"
        )
    fa, fb = curve.value_at(gamma_a), curve.value_at(gamma_b)
    interior = (g > gamma_a) & (g < gamma_b)
    chord = fa + (fb - fa) * (g[interior] - gamma_a) / (gamma_b - gamma_a)
    violation = float(np.max(v[interior] - chord))
    return ConvexityReport(float(gamma_a), float(gamma_b), violation < -strict_margin, violation)


__all__ = [
    "Backend", "ConvexityReport", "CurveLevel", "Level", "MiCurve", "MiPoint", "MiRow",
    "NumericalError", "QuadratureSpec", "conditional_density", "group_mi", "is_convex_on",
    "mi_curve", "mi_high", "mi_low_expectation", "mi_low_quadrature", "mi_table",
    "mi_total_qpsk",
]
