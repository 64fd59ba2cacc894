"""Bias oracles: exact summation, Fourier series, Monte Carlo, clipped variant.

Frozen expected values were computed with the exact CDF summation before the
main build: B(0.25; 0.10) = -0.243790334674, clipped bias at level 0 with
sigma = 25.6 is +10.212273029257.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nqprobe.bias import (DistributionSpec, bias_profile, exact_bias_clipped,
                          exact_bias_unclipped, first_harmonic_amplitude,
                          fourier_bias, frac, monte_carlo_bias,
                          nonuniformity_score, predicted_delta_mean,
                          run_verification)

B_QUARTER = -0.24379033467425576  # exact_bias_unclipped(0.25, 0.10)
CLIP_BLACK = 10.212273029257483  # exact_bias_clipped(0, 25.6)


class TestExactBias:
    @pytest.mark.parametrize("sigma", [0.05, 0.1, 0.5, 1.0])
    def test_zero_at_grid_and_half_grid(self, sigma):
        assert exact_bias_unclipped(0.0, sigma) == pytest.approx(0.0, abs=1e-13)
        assert exact_bias_unclipped(0.5, sigma) == pytest.approx(0.0, abs=1e-13)

    def test_frozen_quarter_point(self):
        b = exact_bias_unclipped(0.25, 0.10)
        assert b == pytest.approx(B_QUARTER, abs=1e-12)
        assert b < 0
        assert 0.24 < -b < 0.25

    def test_vectorized_matches_scalar(self):
        xs = np.linspace(0, 1, 17, endpoint=False)
        vec = exact_bias_unclipped(xs, 0.2)
        assert np.allclose(vec, [exact_bias_unclipped(float(x), 0.2) for x in xs],
                           atol=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(x=st.floats(0.001, 0.999), sigma=st.floats(0.05, 1.0))
    def test_odd_symmetry(self, x, sigma):
        assert abs(exact_bias_unclipped(x, sigma)
                   + exact_bias_unclipped(1.0 - x, sigma)) < 1e-12

    @pytest.mark.parametrize("x", [0.1, 0.2, 0.25, 0.3, 0.4])
    def test_sawtooth_limit(self, x):
        assert abs(exact_bias_unclipped(x, 1e-4) - (round(x) - x)) < 1e-3

    def test_large_sigma_decay(self):
        xs = np.linspace(0, 1, 64, endpoint=False)
        assert np.max(np.abs(exact_bias_unclipped(xs, 1.0))) < 1e-4

    def test_invalid_sigma(self):
        with pytest.raises(ValueError):
            exact_bias_unclipped(0.25, 0.0)
        with pytest.raises(ValueError):
            exact_bias_unclipped(0.25, -1.0)


class TestFourierBias:
    def test_first_harmonic_value(self):
        got = fourier_bias(0.25, 0.10, order=1)
        c = first_harmonic_amplitude(0.10)
        assert c == pytest.approx(0.26129062801237474, abs=1e-14)
        # the series' first harmonic is -C(sigma) sin(2 pi x)
        assert got == pytest.approx(-c, abs=1e-14)

    def test_zero_at_origin(self):
        for order in (1, 10, 50):
            assert fourier_bias(0.0, 0.3, order) == 0.0

    def test_agrees_with_exact_summation(self):
        xs = np.linspace(0, 1, 64, endpoint=False)
        for sigma in (0.05, 0.1, 0.2, 0.5):
            gap = np.abs(fourier_bias(xs, sigma, 50) - exact_bias_unclipped(xs, sigma))
            assert gap.max() < 1e-8

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            fourier_bias(0.25, 0.1, order=0)


class TestClippedBias:
    def test_interior_matches_unclipped(self):
        assert abs(exact_bias_clipped(128, 25.6)
                   - exact_bias_unclipped(0.0, 25.6)) < 1e-6

    def test_black_boundary(self):
        b = exact_bias_clipped(0, 25.6)
        assert b == pytest.approx(CLIP_BLACK, abs=1e-12)
        assert b == pytest.approx(25.6 / math.sqrt(2 * math.pi), abs=0.05)

    def test_white_mirror(self):
        assert exact_bias_clipped(255, 25.6) == pytest.approx(-CLIP_BLACK, abs=1e-10)

    def test_consistency_far_from_boundaries(self):
        for sigma in (0.5, 2.0, 10.0):
            levels = np.arange(256, dtype=float)
            safe = np.minimum(levels, 255 - levels) > 6 * sigma
            assert np.any(safe)
            gap = np.abs(exact_bias_clipped(levels[safe], sigma)
                         - exact_bias_unclipped(frac(levels[safe]), sigma))
            assert gap.max() < 1e-6

    def test_domain_check(self):
        with pytest.raises(ValueError):
            exact_bias_clipped(-1.0, 1.0)
        with pytest.raises(ValueError):
            exact_bias_clipped(256.0, 1.0)


class TestMonteCarlo:
    def test_against_exact_unclipped(self):
        est, se = monte_carlo_bias(0.25, 0.10, 400_000, seed=11)
        assert abs(est - B_QUARTER) < 4 * se

    def test_symmetric_point(self):
        est, se = monte_carlo_bias(0.5, 1.0, 200_000, seed=5)
        assert abs(est) < 4 * se

    def test_against_exact_clipped(self):
        est, se = monte_carlo_bias(0.0, 25.6, 400_000, seed=17, clip=True)
        assert abs(est - CLIP_BLACK) < 4 * se

    def test_sample_floor(self):
        with pytest.raises(ValueError):
            monte_carlo_bias(0.25, 0.1, 999, seed=0)


class TestDistributionLevel:
    def test_uniform_fractional_cancels(self):
        dist = DistributionSpec.uniform_fractional(256)
        assert abs(predicted_delta_mean(dist, 0.10)) < 1e-10

    def test_point_mass_quarter(self):
        dist = DistributionSpec.point(100.25)
        assert predicted_delta_mean(dist, 0.10) == pytest.approx(-B_QUARTER, abs=1e-12)

    def test_point_mass_black_clipped(self):
        dist = DistributionSpec.point(0.0)
        assert predicted_delta_mean(dist, 25.6, clip=True) == pytest.approx(
            -CLIP_BLACK, abs=1e-10)

    def test_nonuniformity_uniform_is_zero(self):
        dist = DistributionSpec.uniform_fractional(256)
        assert nonuniformity_score(dist, 0.10) < 1e-12

    def test_nonuniformity_point_masses(self):
        dist = DistributionSpec.point(0.25)
        assert nonuniformity_score(dist, 0.10) == pytest.approx(0.2612906280, abs=1e-9)
        assert nonuniformity_score(dist, 0.50) == pytest.approx(0.0022892476, abs=1e-9)

    def test_distribution_validation(self):
        with pytest.raises(ValueError):
            DistributionSpec(values=np.array([1.0, 2.0]), mass=np.array([0.6, 0.5]))
        with pytest.raises(ValueError):
            DistributionSpec(values=np.array([1.0, 2.0]), mass=np.array([1.5, -0.5]))


class TestProfileAndVerification:
    def test_profile_shapes_and_csv(self):
        prof = bias_profile(0.10, grid=16, order=50, mc_samples=5000, seed=3)
        assert prof.x_grid.size == prof.exact.size == prof.fourier.size == 16
        lines = prof.to_csv().strip().splitlines()
        assert lines[0] == "x,exact,fourier,mc_estimate,mc_stderr"
        assert len(lines) == 17
        d = prof.to_dict()
        assert len(d["mc_estimate"]) == 16

    def test_quick_verification_suite_passes(self):
        checks = run_verification(mc_samples=20_000, seed=9, grid=16)
        failed = [c for c in checks if not c.passed]
        assert not failed, failed
