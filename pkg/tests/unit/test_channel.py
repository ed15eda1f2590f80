"""
Unit tests for the channel model.
"""

import numpy as np
import pytest

from lora_sync.channel import (
    add_awgn,
    derive_offsets,
    max_samples,
    preamble_start_sample,
    preamble_timing,
    sample_received,
    split_offset,
    trial_rng,
    true_timing,
)
from lora_sync.exceptions import OutOfRangeError
from lora_sync.models import ImpairmentConfig, ModemParams, PreambleSpec
from lora_sync.waveform import build_frame, eval_frame_chips, modulate_symbol


@pytest.mark.unit
class TestDeriveOffsets:
    """Test cases for CFO/SFO derivation."""

    def test_sf10_40ppm(self):
        offsets = derive_offsets(40e-6, ModemParams(sf=10))
        assert offsets.delta_fc == pytest.approx(34720.0)
        assert offsets.l_cfo == 142
        assert offsets.lambda_cfo == pytest.approx(0.2131, abs=1e-3)
        assert offsets.fs_prime == pytest.approx(250e3 * (1 + 40e-6))
        assert offsets.in_range

    def test_out_of_range_cfo_is_flagged(self):
        offsets = derive_offsets(90e-6, ModemParams(sf=7))
        assert not offsets.in_range

    def test_explicit_cfo_override(self):
        params = ModemParams(sf=7)
        offsets = derive_offsets(40e-6, params, cfo_hz=0.25 * params.bin_hz)
        assert offsets.l_cfo == 0
        assert offsets.lambda_cfo == pytest.approx(0.25)

    @pytest.mark.parametrize(
        "value,expected",
        [(142.213, (142, 0.213)), (3.5, (4, -0.5)), (-0.2, (0, -0.2)), (2.49, (2, 0.49))],
    )
    def test_split_offset(self, value, expected):
        integer, fraction = split_offset(value)
        assert integer == expected[0]
        assert fraction == pytest.approx(expected[1])


@pytest.mark.unit
class TestSampleReceived:
    """Test cases for impaired sampling."""

    def setup_method(self):
        self.params = ModemParams(sf=7)
        self.frame = build_frame(PreambleSpec(), [11, 22], self.params)

    def test_no_impairments_reproduces_frame(self):
        stream = sample_received(self.frame, ImpairmentConfig(), 256)
        np.testing.assert_allclose(stream[:128], modulate_symbol(0, self.params), atol=1e-12)

    def test_integer_timing_offset(self):
        impairments = ImpairmentConfig(tau=3 / self.params.bw)
        stream = sample_received(self.frame, impairments, 256)
        expected = eval_frame_chips(self.frame, np.arange(256) + 3.0)
        np.testing.assert_allclose(stream, expected, atol=1e-9)

    def test_carrier_offset_rotation(self):
        cfo = 0.25 * self.params.bin_hz
        impairments = ImpairmentConfig(cfo_hz=cfo)
        clean = sample_received(self.frame, ImpairmentConfig(), 512)
        rotated = sample_received(self.frame, impairments, 512)
        k = np.arange(512)
        np.testing.assert_allclose(rotated, clean * np.exp(2j * np.pi * cfo / self.params.fs * k), atol=1e-9)

    def test_max_samples_stays_inside_frame(self):
        impairments = ImpairmentConfig(gamma=40e-6, tau=17.3 / self.params.bw)
        count = max_samples(self.frame, impairments)
        assert len(sample_received(self.frame, impairments, count)) == count
        with pytest.raises(OutOfRangeError):
            sample_received(self.frame, impairments, count + 2)

    def test_true_timing(self):
        impairments = ImpairmentConfig(tau=5.5 / self.params.bw)
        assert true_timing(impairments, self.params, 1000) == pytest.approx(5.5)

        skewed = ImpairmentConfig(gamma=40e-6, tau=5.5 / self.params.bw)
        expected = 5.5 + 1000 / (1 + 40e-6) - 1000
        assert true_timing(skewed, self.params, 1000) == pytest.approx(expected)

    def test_preamble_timing_is_fixed_at_the_first_chip(self):
        impairments = ImpairmentConfig(gamma=40e-6, tau=5.5 / self.params.bw)
        start = preamble_start_sample(impairments, self.params)
        assert start == pytest.approx(-5.5 * (1 + 40e-6))
        assert preamble_timing(impairments, self.params) == pytest.approx(5.5 * (1 + 40e-6))
        assert preamble_timing(ImpairmentConfig(tau=5.5 / self.params.bw), self.params) == (
            pytest.approx(5.5)
        )


@pytest.mark.unit
class TestNoise:
    """Test cases for AWGN and random streams."""

    def test_infinite_snr_is_identity(self):
        buffer = np.exp(1j * np.arange(10))
        rng = trial_rng(0, 1)
        np.testing.assert_array_equal(add_awgn(buffer, None, rng), buffer)
        np.testing.assert_array_equal(add_awgn(buffer, float("inf"), rng), buffer)

    @pytest.mark.parametrize("osr", [1, 4])
    def test_noise_variance(self, osr):
        rng = trial_rng(7, 0)
        noise = add_awgn(np.zeros(200_000, dtype=complex), 0.0, rng, osr)
        assert np.var(noise) == pytest.approx(osr, rel=0.02)

    def test_snr_scales_variance(self):
        noise = add_awgn(np.zeros(200_000, dtype=complex), 10.0, trial_rng(3))
        assert np.var(noise) == pytest.approx(0.1, rel=0.02)

    def test_trial_rng_is_deterministic(self):
        first = trial_rng(1, 2, 3).standard_normal(5)
        again = trial_rng(1, 2, 3).standard_normal(5)
        other = trial_rng(1, 2, 4).standard_normal(5)
        np.testing.assert_array_equal(first, again)
        assert not np.array_equal(first, other)
