import math

import numpy as np
import pytest

from mlc_lab.channel import (ChannelParams, RepetitionScheme, combine, make_rng, snr_of, to_db,
                             transmit, transmit_repeated)
from mlc_lab.constellation import qpsk
from mlc_lab.demod import llr_low

N = 10**6


def test_noiseless_limit():
    p = ChannelParams(1e-30, seed=1)
    assert transmit(1 + 2j, p) == pytest.approx(1 + 2j, abs=1e-12)


def test_noise_mean_and_variance():
    sigma2 = 0.7
    p = ChannelParams(sigma2, seed=3)
    x = 0.3 - 0.2j
    n = transmit(np.full(N, x), p) - x
    tol = 4 * math.sqrt(sigma2 / 2) / math.sqrt(N)
    assert abs(n.real.mean()) < tol and abs(n.imag.mean()) < tol
    y0 = transmit(np.zeros(N), p)
    assert np.mean(np.abs(y0) ** 2) == pytest.approx(sigma2, rel=0.01)
    # split equally between components
    assert y0.real.var() == pytest.approx(sigma2 / 2, rel=0.01)
    assert y0.imag.var() == pytest.approx(sigma2 / 2, rel=0.01)


def test_same_seed_same_stream():
    p = ChannelParams(1.0, seed=99)
    assert np.array_equal(transmit(np.zeros(16), p), transmit(np.zeros(16), p))
    a = make_rng(5, 0).standard_normal(8)
    b = make_rng(5, 1).standard_normal(8)
    assert not np.array_equal(a, b)


def test_invalid_noise_variance():
    with pytest.raises(ValueError):
        ChannelParams(0.0)


def test_repetition_scheme_energy():
    for M in range(1, 33):
        r = RepetitionScheme(M)
        assert r.scale**2 * M == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(ValueError):
        RepetitionScheme(0)


def test_repeated_slot_amplitude():
    p = ChannelParams(1e-30, seed=0)
    slots = transmit_repeated(2.0, RepetitionScheme(4), p)
    assert slots.shape == (4,)
    assert np.allclose(np.abs(slots), 1.0)


def test_m1_repetition_matches_transmit_in_law():
    p = ChannelParams(0.5, seed=4)
    y = transmit_repeated(np.ones(N), RepetitionScheme(1), p)[:, 0]
    assert np.mean(np.abs(y - 1) ** 2) == pytest.approx(0.5, rel=0.01)


def test_slot_noise_uncorrelated():
    p = ChannelParams(1.0, seed=8)
    slots = transmit_repeated(np.zeros(200_000), RepetitionScheme(4), p)
    c = np.mean(slots[:, 0] * np.conj(slots[:, 1]))
    assert abs(c) < 4 * 1.0 / math.sqrt(200_000)


def test_combine_examples():
    assert combine([3 - 1j]) == 3 - 1j
    M = 8
    x = 1j
    assert combine([x / math.sqrt(M)] * M) == pytest.approx(math.sqrt(M) * x)
    with pytest.raises(ValueError):
        combine([])


def test_combined_snr_preserved():
    # post-combining SNR at M=4 equals the unrepeated SNR at equal energy
    sigma2, frames = 0.5, 100_000
    p = ChannelParams(sigma2, seed=21)
    y1 = transmit(np.ones(frames), p, p.rng(1))
    y4 = combine(transmit_repeated(np.ones(frames), RepetitionScheme(4), p, p.rng(2)))

    def snr(y):
        s = y.mean()
        return abs(s) ** 2 / np.mean(np.abs(y - s) ** 2)

    assert snr(y4) == pytest.approx(snr(y1), rel=0.02)


@pytest.mark.parametrize("M", [2, 4, 8])
def test_uncoded_low_level_ber_after_combining(M):
    gamma1, frames = 1.0, 400_000
    rng = np.random.default_rng(M)
    c = qpsk(1)
    vh = rng.integers(0, 2, frames)
    vl = rng.integers(0, 2, frames)
    from mlc_lab.constellation import map_bits_array

    x = map_bits_array(c, vh, vl)
    sigma2 = 1 / gamma1
    y1 = transmit(x, ChannelParams(sigma2), make_rng(1, M))
    yM = combine(transmit_repeated(x, RepetitionScheme(M), ChannelParams(sigma2), make_rng(2, M)))
    b1 = np.mean((llr_low(y1, 1, sigma2) <= 0) != vl)
    bM = np.mean((llr_low(yM, math.sqrt(M), M * sigma2) <= 0) != vl)
    se = math.sqrt(b1 * (1 - b1) / frames + bM * (1 - bM) / frames)
    assert abs(b1 - bM) < 3 * se


def test_snr_of():
    assert snr_of(qpsk(1), ChannelParams(1.0)) == 1.0
    g = snr_of(qpsk(1), ChannelParams(1 / 2.10))
    assert g == pytest.approx(2.10)
    assert round(float(to_db(g)), 2) == 3.22
