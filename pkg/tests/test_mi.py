import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from mlc_lab.constellation import Level, qpsk
from mlc_lab.mi import (Backend, CurveLevel, MiCurve, MiPoint, QuadratureSpec, conditional_density,
                        is_convex_on, mi_curve, mi_high, mi_low_expectation, mi_low_quadrature,
                        mi_total_qpsk)

GRID = [0.1, 0.25, 0.5, 1.0, 1.5, 2.1, 4.0]

# I(V_low; Y) at gamma=2.10 from scipy dblquad over [-L, L]^2 (L = A + 12 sigma,
# epsabs=epsrel=1e-11) applied to the MI definition with hand-written densities;
# independent of the Gauss-Hermite path.
MI_LOW_2P10 = 0.553032168
MI_LOW_1P00 = 0.250436717


def _density_oracle(y, pts, sigma2):
    return sum(math.exp(-abs(y - p) ** 2 / sigma2) for p in pts) / len(pts) / (math.pi * sigma2)


def test_density_at_q1_example():
    c = qpsk(1)
    lo0, lo1 = c.low_subsets()
    d0 = conditional_density(1.0, lo0, c, 1.0)
    d1 = conditional_density(1.0, lo1, c, 1.0)
    assert d0 == pytest.approx((1 + math.exp(-4)) / (2 * math.pi), rel=1e-14)
    assert d0 > d1


def test_density_rotation_symmetry(rng):
    c = qpsk(1.2)
    lo0, lo1 = c.low_subsets()
    y = rng.normal(size=50) + 1j * rng.normal(size=50)
    assert np.allclose(conditional_density(y, lo0, c, 0.8), conditional_density(1j * y, lo1, c, 0.8))


@pytest.mark.parametrize("sigma2", [0.3, 1.0])
def test_density_integrates_to_one(sigma2):
    c = qpsk(1)
    s = c.low_subsets()[0]
    L = 1 + 10 * math.sqrt(sigma2)
    val, _ = dblquad(lambda yi, yr: conditional_density(yr + 1j * yi, s, c, sigma2),
                     -L, L, -L, L, epsabs=1e-10, epsrel=1e-10)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_quadrature_against_dblquad():
    assert mi_low_quadrature(2.10).value == pytest.approx(MI_LOW_2P10, abs=1e-6)
    assert mi_low_quadrature(1.0).value == pytest.approx(MI_LOW_1P00, abs=1e-6)


def test_dblquad_oracle_value_small_case():
    # spot-check the oracle construction itself at a cheap point
    g = 1.0
    A, s2 = 1.0, 1 / g
    P0, P1 = [A, -A], [1j * A, -1j * A]

    def f(yi, yr):
        y = yr + 1j * yi
        a, b = _density_oracle(y, P0, s2), _density_oracle(y, P1, s2)
        return sum(p * math.log2((a + b) / p) for p in (a, b) if p > 0)

    L = A + 12
    val, _ = dblquad(f, -L, L, -L, L, epsabs=1e-9, epsrel=1e-9)
    assert 1 - 0.5 * val == pytest.approx(MI_LOW_1P00, abs=1e-7)


def test_quadrature_limits():
    assert mi_low_quadrature(0).value == pytest.approx(0, abs=1e-3)
    assert mi_low_quadrature(100).value == pytest.approx(1, abs=1e-3)


def test_quadrature_converges_under_node_doubling():
    coarse = mi_low_quadrature(2.1, QuadratureSpec(nodes=64, refine=False)).value
    fine = mi_low_quadrature(2.1, QuadratureSpec(nodes=256, refine=False)).value
    assert abs(coarse - fine) < 1e-5


def test_expectation_zero_snr_exact():
    p = mi_low_expectation(0.0, 10_000, seed=1)
    assert p.value == pytest.approx(0.0, abs=1e-12)
    assert p.backend is Backend.MONTE_CARLO


def test_expectation_needs_enough_samples():
    with pytest.raises(ValueError):
        mi_low_expectation(1.0, 100)


def test_expectation_matches_quadrature_at_2p1():
    mc = mi_low_expectation(2.10, 10**6, seed=7)
    assert abs(mc.value - MI_LOW_2P10) <= max(3 * mc.stderr, 1e-3)


def test_expectation_seed_consistency():
    a = mi_low_expectation(1.5, 200_000, seed=1)
    b = mi_low_expectation(1.5, 200_000, seed=2)
    assert a.value != b.value
    assert abs(a.value - b.value) < 3 * math.hypot(a.stderr, b.stderr)


def test_expectation_is_reproducible():
    assert mi_low_expectation(0.5, 20_000, seed=3) == mi_low_expectation(0.5, 20_000, seed=3)


def test_high_and_total_limits():
    assert mi_high(0).value == 0
    assert mi_high(200).value == pytest.approx(1, abs=1e-6)
    assert mi_total_qpsk(0).value == 0
    assert mi_total_qpsk(200).value == pytest.approx(2, abs=1e-6)


@pytest.mark.parametrize("gamma", GRID)
def test_chain_rule(gamma):
    total = mi_total_qpsk(gamma).value
    assert mi_low_quadrature(gamma).value + mi_high(gamma).value == pytest.approx(total, abs=2e-3)


@pytest.mark.parametrize("gamma", GRID)
def test_low_level_is_weaker(gamma):
    lo, hi = mi_low_quadrature(gamma).value, mi_high(gamma).value
    assert -1e-3 <= lo <= hi + 1e-3


@pytest.mark.parametrize("gamma", [0.25, 1.0, 2.1])
def test_rotation_symmetry(gamma):
    rotated = qpsk(1).rotated(math.pi / 2)
    assert mi_low_quadrature(gamma, constellation=rotated).value == pytest.approx(
        mi_low_quadrature(gamma).value, abs=1e-3)


def test_curves_monotone_and_bounded():
    g = np.round(np.arange(0, 61) * 0.1, 12)
    for level, top in ((CurveLevel.LOW, 1), (CurveLevel.HIGH, 1), (CurveLevel.TOTAL, 2)):
        v = mi_curve(g, level).values
        assert np.all(np.diff(v) >= -1e-4)
        assert v.min() >= 0 and v.max() <= top


def test_curve_rejects_unsorted_grid():
    with pytest.raises(ValueError):
        MiCurve(CurveLevel.LOW, (MiPoint(1.0, 0.2), MiPoint(0.5, 0.1)))


def test_curve_inverse_roundtrip():
    curve = mi_curve(np.round(np.arange(0, 61) * 0.1, 12))
    for r in (0.05, 0.3, 0.7):
        g = curve.inverse(r)
        assert curve.value_at(g) == pytest.approx(r, abs=1e-8)
    assert curve.inverse(1.5) is None


def _curve(g, v):
    return MiCurve(CurveLevel.LOW, tuple(MiPoint(float(a), float(b)) for a, b in zip(g, v)))


def test_convexity_low_level_region():
    curve = mi_curve(np.round(np.arange(0, 31) * 0.05, 12))
    rep = is_convex_on(curve, 0, 1.5)
    assert rep.is_convex and rep.max_chord_violation < 0


def test_convexity_linear_curve_is_boundary():
    g = np.linspace(0, 1, 11)
    rep = is_convex_on(_curve(g, 0.3 * g), 0, 1)
    assert not rep.is_convex
    assert rep.max_chord_violation == pytest.approx(0, abs=1e-12)


def test_convexity_square():
    g = np.linspace(0, 1, 11)
    assert is_convex_on(_curve(g, g**2), 0, 1).is_convex


def test_convexity_concave_curve_fails():
    g = np.linspace(0, 1, 11)
    rep = is_convex_on(_curve(g, np.sqrt(g)), 0, 1)
    assert not rep.is_convex and rep.max_chord_violation > 0


def test_convexity_needs_samples():
    g = np.linspace(0, 1, 11)
    with pytest.raises(ValueError):
        is_convex_on(_curve(g, g**2), 0.41, 0.55)
    with pytest.raises(ValueError):
        is_convex_on(_curve(g, g**2), 0.5, 0.5)


def test_level_subset_sizes():
    c = qpsk(1)
    assert all(len(s.members) == 2 for s in c.low_subsets())
    assert all(len(s.members) == 1 for v in (0, 1) for s in c.high_subsets(v))
    assert c.subset(Level.LOW, 1).bits == (1,)
