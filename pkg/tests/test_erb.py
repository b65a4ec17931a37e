"""ERB filterbank construction, compression, and gain interpolation."""

import numpy as np
import pytest

from erbdf.config import StftConfig
from erbdf.erb import (
    ErbFilterbank,
    apply_gains,
    build_filterbank,
    compress,
    hz_to_erb_rate,
    interpolate_gains,
)

CFG = StftConfig()
FB = build_filterbank(CFG, 32)


class TestBuildFilterbank:
    def test_default_geometry(self):
        assert FB.weights.shape == (32, 481)
        assert FB.band_edges[0] == 0
        assert FB.band_edges[-1] == 481
        assert np.all(np.diff(FB.band_edges) >= 1)

    def test_erb_spacing_narrow_low_wide_top(self):
        widths = np.diff(FB.band_edges)
        # Evaluated from the ERB-rate spacing: the lowest bands collapse to
        # the 1-bin floor, the top band is the widest by far.
        assert widths[0] <= 2
        assert widths[1] <= 2
        assert widths[-1] == widths.max()
        assert widths[-1] > 40

    def test_rows_sum_to_one(self):
        assert np.allclose(FB.weights.sum(axis=1), 1.0, atol=1e-6)

    def test_every_bin_covered(self):
        assert np.all(FB.weights.sum(axis=0) > 0)

    def test_degenerate_one_band_per_bin(self):
        cfg = StftConfig(window_len=240, hop_len=120, fft_len=240)
        fb = build_filterbank(cfg, cfg.n_bins)
        assert np.array_equal(fb.weights, np.eye(cfg.n_bins))

    def test_band_count_bounds(self):
        with pytest.raises(ValueError, match="n_bands"):
            build_filterbank(CFG, 1)
        with pytest.raises(ValueError, match="n_bands"):
            build_filterbank(CFG, 482)

    def test_rectangular_variant(self):
        fb = build_filterbank(CFG, 32, shape="rectangular")
        assert np.allclose(fb.weights.sum(axis=1), 1.0)
        width = fb.band_edges[-1] - fb.band_edges[-2]
        top = fb.weights[-1, fb.band_edges[-2]:fb.band_edges[-1]]
        assert np.allclose(top, 1.0 / width)

    def test_triangular_profile_peaks_mid_band(self):
        b = 31  # widest band
        lo, hi = FB.band_edges[b], FB.band_edges[b + 1]
        row = FB.weights[b, lo:hi]
        assert row[0] < row.max()
        assert np.argmax(row) not in (0, len(row) - 1)

    def test_erb_rate_formula(self):
        import math

        assert hz_to_erb_rate(0.0) == 0.0
        expected = 9.265 * math.log(1.0 + 1000.0 / (24.7 * 9.16))
        assert hz_to_erb_rate(1000.0) == pytest.approx(expected, rel=1e-12)


class TestCompress:
    def test_zero_frame_hits_floor(self):
        out = compress(np.zeros(481, dtype=complex), FB)
        assert np.allclose(out, -100.0, atol=1e-9)

    def test_flat_unit_power_zero_db(self):
        out = compress(np.ones(481, dtype=complex), FB)
        assert np.allclose(out, 0.0, atol=1e-6)

    def test_single_tone_band_support(self):
        frame = np.zeros(481, dtype=complex)
        m = 200
        frame[m] = 10.0
        out = compress(frame, FB)
        touched = FB.weights[:, m] > 0
        assert np.all(out[touched] > -90)
        assert np.allclose(out[~touched], -100.0, atol=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="bins"):
            compress(np.zeros(100, dtype=complex), FB)


class TestInterpolateGains:
    def test_unity_gains_exact(self):
        out = interpolate_gains(np.ones(32), FB)
        assert np.all(out == 1.0)

    def test_zero_gains(self):
        assert np.all(interpolate_gains(np.zeros(32), FB) == 0.0)

    def test_indicator_band_support(self):
        for b in (0, 15, 31):
            g = np.zeros(32)
            g[b] = 1.0
            out = interpolate_gains(g, FB)
            support = FB.weights[b] > 0
            assert np.all(out[support] > 0)
            assert np.all(out[~support] == 0)
            assert np.all((out >= 0) & (out <= 1))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="band gains"):
            interpolate_gains(np.ones(16), FB)


class TestApplyGains:
    def test_unity_bit_exact(self):
        rng = np.random.default_rng(1)
        bins = rng.standard_normal(481) + 1j * rng.standard_normal(481)
        out = apply_gains(bins, np.ones(481))
        assert np.array_equal(out, bins)

    def test_zero_gains(self):
        bins = np.ones(481, dtype=complex)
        assert np.all(apply_gains(bins, np.zeros(481)) == 0)

    def test_half_gain_quarters_energy(self):
        rng = np.random.default_rng(2)
        bins = rng.standard_normal(481) + 1j * rng.standard_normal(481)
        out = apply_gains(bins, np.full(481, 0.5))
        e_in = np.sum(np.abs(bins) ** 2)
        e_out = np.sum(np.abs(out) ** 2)
        assert e_out == pytest.approx(0.25 * e_in, rel=1e-12)

    def test_bad_gains_rejected(self):
        bins = np.ones(481, dtype=complex)
        with pytest.raises(ValueError, match="finite"):
            apply_gains(bins, np.full(481, -0.1))
        with pytest.raises(ValueError, match="finite"):
            apply_gains(bins, np.full(481, np.nan))


class TestProperties:
    def test_constant_gain_round_trip(self):
        for g in (0.0, 0.25, 1.0):
            bin_gains = interpolate_gains(np.full(32, g), FB)
            # re-aggregate with the row weights: rows sum to 1
            back = FB.weights @ bin_gains
            assert np.allclose(back, g, atol=1e-12)

    def test_monotonicity_in_band_gain(self):
        rng = np.random.default_rng(3)
        base = rng.uniform(0, 1, size=32)
        ref = interpolate_gains(base, FB)
        for b in range(32):
            bumped = base.copy()
            bumped[b] = min(1.0, bumped[b] + 0.3)
            out = interpolate_gains(bumped, FB)
            assert np.all(out >= ref - 1e-12)

    def test_phase_preserved(self):
        rng = np.random.default_rng(4)
        bins = rng.standard_normal(481) + 1j * rng.standard_normal(481)
        gains = rng.uniform(0.1, 1.0, size=481)
        out = apply_gains(bins, gains)
        assert np.allclose(np.angle(out), np.angle(bins), atol=1e-12)

    def test_energy_bound(self):
        rng = np.random.default_rng(5)
        bins = rng.standard_normal(481) + 1j * rng.standard_normal(481)
        gains = rng.uniform(0.0, 0.9, size=481)
        out = apply_gains(bins, gains)
        assert np.linalg.norm(out) <= gains.max() * np.linalg.norm(bins) + 1e-12
