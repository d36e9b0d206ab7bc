import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saliqa import DegenerateMapError, ParameterError
from saliqa.quality import (
    SsimParams,
    ew_psnr,
    ew_ssim,
    ms_ssim,
    mse,
    psnr,
    ssim,
)
from oracles import ssim_map_bruteforce


class TestMsePsnr:
    def test_mse_cases(self, rng):
        a = rng.random((4, 4, 3))
        assert mse(a, a) == 0.0
        assert mse(np.zeros((3, 3)), np.ones((3, 3))) == 1.0
        b = np.full((4, 4), 100 / 255)
        c = np.full((4, 4), 101 / 255)
        assert mse(b, c) == pytest.approx((1 / 255) ** 2, rel=1e-9)

    def test_identical_capped(self, rng):
        a = rng.random((5, 5))
        score = psnr(a, a)
        assert score.capped and score.value == 100.0
        assert psnr(a, a, cap_db=60).value == 60.0

    def test_one_level(self):
        a = np.full((8, 8), 10 / 255)
        b = np.full((8, 8), 11 / 255)
        score = psnr(a, b)
        assert not score.capped
        assert score.value == pytest.approx(20 * math.log10(255), abs=1e-9)
        assert score.value == pytest.approx(48.1308, abs=1e-4)

    def test_halving_error(self):
        a = np.full((4, 4), 0.5)
        gain = psnr(a, a + 0.05).value - psnr(a, a + 0.1).value
        assert gain == pytest.approx(20 * math.log10(2), abs=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ParameterError):
            psnr(np.zeros((2, 2)), np.zeros((2, 3)))
        with pytest.raises(ParameterError):
            mse(np.zeros((2, 2, 3)), np.zeros((2, 2, 1)))

    @settings(max_examples=40)
    @given(st.floats(1e-4, 0.4), st.floats(1e-4, 0.4))
    def test_strictly_decreasing(self, e1, e2):
        if abs(e1 - e2) < 1e-9:
            return
        a = np.full((3, 3), 0.5)
        lo, hi = sorted((e1, e2))
        assert psnr(a, a + lo).value > psnr(a, a + hi).value


class TestEwPsnr:
    def test_uniform_saliency(self, rng):
        a, b = rng.random((6, 7, 3)), rng.random((6, 7, 3))
        assert ew_psnr(a, b, np.full((6, 7), 0.4)).value == pytest.approx(psnr(a, b).value, abs=1e-9)

    def test_saliency_on_clean_region(self, rng):
        a = rng.random((4, 4))
        b = a.copy()
        b[:, 2:] = 1 - b[:, 2:]
        sal = np.zeros((4, 4))
        sal[:, :2] = 1.0
        score = ew_psnr(a, b, sal)
        assert score.capped and score.value == 100.0

    def test_two_pixel_example(self):
        ref = np.array([[0.5, 0.5]])
        dist = np.array([[0.6, 0.8]])
        score = ew_psnr(ref, dist, np.array([[3.0, 1.0]]))
        assert score.value == pytest.approx(10 * math.log10(1 / 0.03), abs=1e-9)
        assert score.value == pytest.approx(15.2288, abs=1e-4)

    def test_resizes_saliency(self, rng):
        a, b = rng.random((8, 8)), rng.random((8, 8))
        assert ew_psnr(a, b, np.ones((2, 2))).value == pytest.approx(psnr(a, b).value, abs=1e-9)

    def test_zero_saliency(self):
        with pytest.raises(DegenerateMapError):
            ew_psnr(np.zeros((2, 2)), np.ones((2, 2)), np.zeros((2, 2)))

    def test_weight_transfer_monotone(self, rng):
        for _ in range(50):
            a, b = rng.random((5, 5)), rng.random((5, 5))
            err = (a - b) ** 2
            hi, lo = np.unravel_index(err.argmax(), err.shape), np.unravel_index(err.argmin(), err.shape)
            base = rng.random((5, 5)) + 0.1
            toward_hi, toward_lo = base.copy(), base.copy()
            toward_hi[hi] += 2.0
            toward_lo[lo] += 2.0
            assert ew_psnr(a, b, toward_hi).value <= ew_psnr(a, b, toward_lo).value


class TestSsim:
    def test_identical(self, rng):
        a = rng.random((16, 16))
        mean, smap = ssim(a, a)
        assert mean == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(smap, 1.0, atol=1e-12)
        assert smap.shape == (16, 16)

    def test_against_bruteforce(self, rng):
        for _ in range(5):
            a, b = rng.random((16, 16)), rng.random((16, 16))
            mean, smap = ssim(a, b)
            oracle = ssim_map_bruteforce(a, b)
            np.testing.assert_allclose(smap, oracle, atol=1e-8)
            assert mean == pytest.approx(oracle.mean(), abs=1e-8)

    def test_custom_params_against_bruteforce(self, rng):
        params = SsimParams(window_size=7, window_sigma=1.0, k1=0.02, k2=0.05, dynamic_range=1.0)
        a, b = rng.random((12, 10)), rng.random((12, 10))
        np.testing.assert_allclose(
            ssim(a, b, params)[1],
            ssim_map_bruteforce(a, b, window=7, sigma=1.0, k1=0.02, k2=0.05),
            atol=1e-8,
        )

    def test_symmetric_and_bounded(self, rng):
        for _ in range(20):
            a, b = rng.random((14, 14)), rng.random((14, 14)) ** 3
            m1, _ = ssim(a, b)
            m2, _ = ssim(b, a)
            assert m1 == pytest.approx(m2, abs=1e-14)
            assert -1 <= m1 <= 1

    def test_anticorrelated_is_negative(self):
        x = np.tile([0.0, 1.0], (12, 6))
        assert ssim(x, 1 - x)[0] < 0

    def test_too_small(self):
        with pytest.raises(ParameterError):
            ssim(np.zeros((8, 16)), np.zeros((8, 16)))

    def test_needs_grayscale(self):
        with pytest.raises(ParameterError):
            ssim(np.zeros((16, 16, 3)), np.zeros((16, 16, 3)))

    def test_bad_params(self):
        with pytest.raises(ParameterError):
            SsimParams(window_size=4)
        with pytest.raises(ParameterError):
            SsimParams(k1=0)

    def test_deterministic(self, rng):
        a, b = rng.random((20, 20)), rng.random((20, 20))
        assert ssim(a, b)[0] == ssim(a, b)[0]


class TestEwSsim:
    def test_uniform(self, rng):
        a, b = rng.random((16, 16)), rng.random((16, 16))
        assert ew_ssim(a, b, np.full((16, 16), 2.0)) == pytest.approx(ssim(a, b)[0], abs=1e-9)

    def test_identical(self, rng):
        a = rng.random((16, 16))
        assert ew_ssim(a, a, rng.random((16, 16))) == pytest.approx(1.0, abs=1e-12)

    def test_half_plane(self, rng):
        a, b = rng.random((16, 16)), rng.random((16, 16))
        sal = np.zeros((16, 16))
        sal[:, :8] = 1.0
        oracle = ssim_map_bruteforce(a, b)[:, :8].mean()
        assert ew_ssim(a, b, sal) == pytest.approx(oracle, abs=1e-8)

    def test_zero_saliency(self, rng):
        a = rng.random((16, 16))
        with pytest.raises(DegenerateMapError):
            ew_ssim(a, a, np.zeros((16, 16)))


class TestMsSsim:
    def test_identical(self, rng):
        a = rng.random((176, 180))
        assert ms_ssim(a, a) == pytest.approx(1.0, abs=1e-12)

    def test_bounded(self, rng):
        a = rng.random((180, 180))
        b = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)
        val = ms_ssim(a, b)
        assert 0 <= val <= 1

    def test_single_scale_is_ssim(self, rng):
        a = rng.random((20, 24))
        b = np.clip(a + rng.normal(0, 0.05, a.shape), 0, 1)
        assert ms_ssim(a, b, weights=[1.0]) == pytest.approx(ssim(a, b)[0], abs=1e-9)

    def test_two_scales_by_hand(self, rng):
        a = rng.random((24, 24))
        b = np.clip(a + rng.normal(0, 0.2, a.shape), 0, 1)
        from saliqa.quality import _ssim_terms

        p = SsimParams()
        _, cs1 = _ssim_terms(a, b, p)
        pool = lambda x: x.reshape(12, 2, 12, 2).mean(axis=(1, 3))  # noqa: E731
        lum2, cs2 = _ssim_terms(pool(a), pool(b), p)
        expected = cs1.mean() ** 0.4 * (lum2 * cs2).mean() ** 0.6
        assert ms_ssim(a, b, weights=[0.4, 0.6]) == pytest.approx(expected, rel=1e-12)

    def test_too_small_lists_minimum(self):
        with pytest.raises(ParameterError, match="176x176"):
            ms_ssim(np.zeros((100, 100)), np.zeros((100, 100)))
