"""
Unit tests for chirp synthesis and frame construction.
"""

import numpy as np
import pytest

from lora_sync.exceptions import DomainError, OutOfRangeError
from lora_sync.models import ChirpKind, ModemParams, PreambleSpec
from lora_sync.waveform import build_frame, eval_frame, eval_frame_chips, modulate_symbol


@pytest.mark.unit
class TestModulateSymbol:
    """Test cases for single-symbol chirps."""

    def setup_method(self):
        self.params = ModemParams(sf=7)

    def test_length_and_unit_magnitude(self):
        buffer = modulate_symbol(42, self.params)
        assert len(buffer) == 128
        np.testing.assert_allclose(np.abs(buffer), 1.0, atol=1e-12)

    def test_oversampled_length(self):
        params = ModemParams(sf=7, fs=4 * 250e3)
        assert len(modulate_symbol(3, params)) == 512

    def test_down_chirp_is_conjugate(self):
        up = modulate_symbol(0, self.params)
        down = modulate_symbol(0, self.params, ChirpKind.DOWN)
        np.testing.assert_allclose(down, np.conj(up))

    def test_base_chirp_starts_at_unit_phase(self):
        assert modulate_symbol(0, self.params)[0] == pytest.approx(1.0)

    @pytest.mark.parametrize("symbol", [-1, 128, 1000])
    def test_symbol_out_of_range(self, symbol):
        with pytest.raises(DomainError):
            modulate_symbol(symbol, self.params)

    def test_returned_buffer_is_writable_copy(self):
        buffer = modulate_symbol(5, self.params)
        buffer[0] = 0
        assert modulate_symbol(5, self.params)[0] != 0


@pytest.mark.unit
class TestBuildFrame:
    """Test cases for frame layout."""

    def setup_method(self):
        self.params = ModemParams(sf=7)
        self.preamble = PreambleSpec()

    def test_segment_layout(self):
        frame = build_frame(self.preamble, [1, 2, 3], self.params)
        kinds = [segment.kind for segment in frame.segments]
        symbols = [segment.symbol for segment in frame.segments]

        assert len(frame.segments) == 8 + 2 + 2 + 1 + 3
        assert kinds[:10] == [ChirpKind.UP] * 10
        assert kinds[10:13] == [ChirpKind.DOWN] * 3
        assert symbols[8:10] == [8, 16]
        assert symbols[-3:] == [1, 2, 3]

    def test_quarter_down_chirp_duration(self):
        frame = build_frame(self.preamble, [], self.params)
        assert frame.segments[-1].duration == pytest.approx(0.25 * self.params.symbol_duration)

    def test_total_duration(self):
        frame = build_frame(self.preamble, [7] * 5, self.params)
        assert frame.duration == pytest.approx((12.25 + 5) * self.params.symbol_duration)
        assert frame.length_chips == (12.25 + 5) * 128

    def test_invalid_sync_word(self):
        with pytest.raises(DomainError):
            build_frame(PreambleSpec(sync_words=(8, 200)), [], self.params)

    def test_invalid_payload_symbol(self):
        with pytest.raises(DomainError):
            build_frame(self.preamble, [128], self.params)


@pytest.mark.unit
class TestEvalFrame:
    """Test cases for evaluating frames at arbitrary instants."""

    def setup_method(self):
        self.params = ModemParams(sf=7)
        self.frame = build_frame(PreambleSpec(), [5, 99], self.params)

    def test_nominal_grid_matches_modulated_symbols(self):
        payload_start = int(12.25 * 128)
        chips = payload_start + 128 + np.arange(128)
        np.testing.assert_allclose(
            eval_frame_chips(self.frame, chips), modulate_symbol(99, self.params), atol=1e-12
        )

    def test_time_grid_matches_chip_grid(self):
        k = np.arange(0, int(self.frame.length_chips))
        by_time = eval_frame(self.frame, k / self.params.fs)
        np.testing.assert_allclose(by_time, eval_frame_chips(self.frame, k), atol=1e-9)

    def test_down_chirp_region(self):
        chips = 10 * 128 + np.arange(128)
        np.testing.assert_allclose(
            eval_frame_chips(self.frame, chips),
            modulate_symbol(0, self.params, ChirpKind.DOWN),
            atol=1e-12,
        )

    @pytest.mark.parametrize("t", [-1e-9, 1.0])
    def test_out_of_range(self, t):
        with pytest.raises(OutOfRangeError):
            eval_frame(self.frame, [t])

    def test_last_instant_inside_frame(self):
        value = eval_frame_chips(self.frame, [self.frame.length_chips - 0.5])
        assert abs(value[0]) == pytest.approx(1.0)
