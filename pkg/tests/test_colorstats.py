"""Histogram statistics: construction, entropy, smoothness, corpus pooling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from nqprobe.colorstats import (HUE_BINS, corpus_summary, histogram_entropy,
                                histogram_set, hue_histogram, rgb_histograms,
                                smoothness_penalty, summarize)


def solid(r, g, b, h=8, w=8):
    img = np.zeros((h, w, 3), np.uint8)
    img[:, :, 0], img[:, :, 1], img[:, :, 2] = r, g, b
    return img


def ramp_image():
    """Each level 0..255 appears exactly once per channel."""
    levels = np.arange(256, dtype=np.uint8).reshape(16, 16)
    return np.stack([levels, levels.T, levels[::-1]], axis=2)


class TestRgbHistograms:
    def test_constant_value(self):
        h = rgb_histograms(solid(7, 7, 7))
        assert np.all(h[:, 7] == 1.0)
        assert h.sum() == pytest.approx(3.0)

    def test_uniform_ramp(self):
        h = rgb_histograms(ramp_image())
        assert np.allclose(h, 1.0 / 256)

    def test_two_tone(self):
        img = np.zeros((4, 4, 3), np.uint8)
        img[:2] = 255
        h = rgb_histograms(img)
        assert np.allclose(h[:, 0], 0.5)
        assert np.allclose(h[:, 255], 0.5)

    def test_fractional_floored(self):
        img = np.full((4, 4, 3), 7.9)
        h = rgb_histograms(img)
        assert np.all(h[:, 7] == 1.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            rgb_histograms(np.zeros((0, 3, 3), np.uint8))


class TestHueHistogram:
    @pytest.mark.parametrize("rgb,degrees", [((255, 0, 0), 0.0),
                                             ((0, 255, 0), 120.0),
                                             ((0, 0, 255), 240.0)])
    def test_primaries(self, rgb, degrees):
        hue, excluded = hue_histogram(solid(*rgb))
        assert excluded == 0.0
        expected_bin = int(degrees / 360.0 * HUE_BINS)
        assert hue.argmax() == expected_bin
        assert hue[expected_bin] == 1.0

    def test_gray_fully_excluded(self):
        hue, excluded = hue_histogram(solid(128, 128, 128))
        assert excluded == 1.0
        assert np.all(hue == 0.0)

    def test_saturation_floor(self):
        # saturation = (130-120)/130 = 0.077: kept at floor 0.05, dropped at 0.1
        img = solid(130, 120, 120)
        _, excluded_low = hue_histogram(img, saturation_floor=0.05)
        _, excluded_high = hue_histogram(img, saturation_floor=0.10)
        assert excluded_low == 0.0
        assert excluded_high == 1.0

    def test_histogram_set_bundle(self):
        hs = histogram_set(solid(255, 0, 0, 4, 6))
        assert hs.pixel_count == 24
        assert hs.rgb.shape == (3, 256)
        assert hs.hue.shape == (HUE_BINS,)


class TestEntropy:
    def test_uniform_is_exactly_eight_bits(self):
        assert histogram_entropy(np.full(256, 1.0 / 256)) == 8.0

    def test_point_mass_zero_bits(self):
        h = np.zeros(256)
        h[12] = 1.0
        assert histogram_entropy(h) == 0.0

    def test_two_equal_masses_one_bit(self):
        h = np.zeros(8)
        h[1] = h[5] = 0.5
        assert histogram_entropy(h) == 1.0

    def test_all_zero_histogram(self):
        assert histogram_entropy(np.zeros(64)) == 0.0

    def test_negative_mass_rejected(self):
        with pytest.raises(ValueError):
            histogram_entropy(np.array([0.5, -0.5, 1.0]))

    @settings(max_examples=30, deadline=None)
    @given(hnp.arrays(np.float64, st.integers(2, 64),
                      elements=st.floats(0.0, 1.0)))
    def test_entropy_bounds(self, raw):
        total = raw.sum()
        if total == 0:
            return
        h = raw / total
        e = histogram_entropy(h)
        assert -1e-9 <= e <= np.log2(h.size) + 1e-9


class TestSmoothness:
    def test_uniform_is_zero(self):
        assert smoothness_penalty(np.full(256, 1.0 / 256)) == 0.0

    def test_interior_point_mass(self):
        h = np.zeros(16)
        h[8] = 1.0
        assert smoothness_penalty(h) == pytest.approx(np.sqrt(2.0))

    def test_edge_point_mass(self):
        h = np.zeros(16)
        h[0] = 1.0
        assert smoothness_penalty(h) == 1.0

    def test_needs_two_bins(self):
        with pytest.raises(ValueError):
            smoothness_penalty(np.array([1.0]))

    @settings(max_examples=30, deadline=None)
    @given(hnp.arrays(np.float64, st.integers(2, 64),
                      elements=st.floats(0.0, 1.0)))
    def test_reversal_invariance(self, h):
        assert smoothness_penalty(h) == pytest.approx(smoothness_penalty(h[::-1]))


class TestPermutationInvariance:
    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_pixel_shuffle_preserves_statistics(self, seed):
        rng = np.random.default_rng(seed)
        img = rng.integers(0, 256, (12, 9, 3)).astype(np.uint8)
        flat = img.reshape(-1, 3)
        shuffled = flat[rng.permutation(flat.shape[0])].reshape(img.shape)
        a, b = summarize(img), summarize(shuffled)
        assert np.allclose(a.as_vector(), b.as_vector())


class TestCorpus:
    def test_identical_images_zero_std(self):
        img = solid(10, 200, 30)
        summary = corpus_summary([img, img, img])
        assert np.allclose(summary.std.as_vector(), 0.0)
        assert np.allclose(summary.pooled.rgb, rgb_histograms(img))

    def test_pooled_copies_equal_single(self):
        rng = np.random.default_rng(5)
        img = rng.integers(0, 256, (16, 16, 3)).astype(np.uint8)
        summary = corpus_summary([img] * 4)
        hs = histogram_set(img)
        assert np.allclose(summary.pooled.rgb, hs.rgb)
        assert np.allclose(summary.pooled.hue, hs.hue)

    def test_mixed_corpus_entropy_between_extremes(self):
        pooled = corpus_summary([ramp_image(), solid(3, 3, 3, 16, 16)])
        e = histogram_entropy(pooled.pooled.rgb[0])
        assert 0.0 < e < 8.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            corpus_summary([])

    def test_weighted_pooling_by_pixel_count(self):
        # 256 pixels of value 0 vs 64 pixels of value 255: pooled mass 0.8/0.2
        big = solid(0, 0, 0, 16, 16)
        small = solid(255, 255, 255, 8, 8)
        summary = corpus_summary([big, small])
        assert summary.pooled.rgb[0][0] == pytest.approx(0.8)
        assert summary.pooled.rgb[0][255] == pytest.approx(0.2)
