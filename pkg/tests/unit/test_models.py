"""
Unit tests for the data models.
"""

import math

import pytest
from pydantic import ValidationError

from lora_sync.models import (
    ExperimentConfig,
    ImpairmentConfig,
    ModemParams,
    OffsetEstimate,
    PreambleSpec,
    RctslConstants,
    ResultRow,
    ResultTable,
    SfoMode,
)


@pytest.mark.unit
class TestModemParams:
    """Test cases for modem parameters."""

    def test_defaults(self):
        params = ModemParams()
        assert params.sf == 12
        assert params.fs == params.bw == 250e3
        assert params.n == 4096
        assert params.osr == 1
        assert params.bin_hz == pytest.approx(61.03515625)

    def test_oversampling(self):
        params = ModemParams(sf=7, bw=125e3, fs=500e3)
        assert params.osr == 4
        assert params.samples_per_symbol == 512
        assert params.symbol_duration == pytest.approx(128 / 125e3)

    @pytest.mark.parametrize("kwargs", [{"sf": 4}, {"sf": 13}, {"fs": 300e3}, {"bw": -1}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            ModemParams(**kwargs)

    def test_frozen(self):
        with pytest.raises(ValidationError):
            ModemParams().sf = 7


@pytest.mark.unit
class TestPreambleSpec:
    """Test cases for the preamble layout."""

    def test_defaults(self):
        preamble = PreambleSpec()
        assert preamble.full_down_chirps == 2
        assert preamble.length_symbols == 12.25

    @pytest.mark.parametrize("kwargs", [{"n_down": 2.3}, {"n_down": 1.75}, {"n_up": 1}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            PreambleSpec(**kwargs)


@pytest.mark.unit
class TestOffsets:
    """Test cases for impairments and estimates."""

    def test_from_ppm(self):
        impairments = ImpairmentConfig.from_ppm(40, tau=1e-3)
        params = ModemParams()
        assert impairments.gamma == pytest.approx(40e-6)
        assert impairments.carrier_offset(params) == pytest.approx(34720.0)
        assert impairments.sto_chips(params) == pytest.approx(250.0)
        assert impairments.noiseless

    def test_sfo_can_be_disabled(self):
        impairments = ImpairmentConfig(gamma=40e-6, sfo=False)
        assert impairments.receive_rate(ModemParams()) == 250e3

    def test_gamma_bound(self):
        with pytest.raises(ValidationError):
            ImpairmentConfig(gamma=2e-3)

    def test_estimate_properties(self):
        estimate = OffsetEstimate(l_cfo=3, lambda_cfo=0.25, l_sto=10, lambda_sto=-0.5)
        assert estimate.cfo_bins == 3.25
        assert estimate.sto_chips == 9.5
        assert estimate.cfo_hz(ModemParams(sf=7)) == pytest.approx(3.25 * 250e3 / 128)

    def test_fraction_bounds(self):
        with pytest.raises(ValidationError):
            OffsetEstimate(lambda_cfo=0.6)

    def test_rctsl_constants(self):
        constants = RctslConstants.for_bins(1024)
        assert constants.u == pytest.approx(65536 / (math.pi**5 + 32 * math.pi))
        assert constants.v == pytest.approx(constants.u * math.pi**2 / 4)


@pytest.mark.unit
class TestExperimentConfig:
    """Test cases for experiment configuration."""

    def test_modes(self):
        full = ExperimentConfig(snr_grid=[0.0], sfo_mode=SfoMode.FULL)
        assert full.sync_config().compensate_preamble_sfo
        assert full.sync_config().passes_max == 2
        assert full.tracks_payload

        payload = ExperimentConfig(snr_grid=[0.0], sfo_mode=SfoMode.PAYLOAD)
        assert not payload.sync_config().compensate_preamble_sfo
        assert payload.sync_config().passes_max == 1
        assert payload.tracks_payload

        none = ExperimentConfig(snr_grid=[0.0], sfo_mode="none")
        assert not none.tracks_payload
        assert none.channel_gamma == pytest.approx(32e-6)

        ideal = ExperimentConfig(snr_grid=[0.0], sfo_mode=SfoMode.IDEAL)
        assert ideal.channel_gamma == 0.0

    def test_snr_grid_required(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(snr_grid=[])

    def test_nested_dicts(self):
        config = ExperimentConfig(snr_grid=[-12], params={"sf": 9, "fs": 1e6}, preamble={"n_up": 10})
        assert config.params.osr == 4
        assert config.sync_config().n_up == 10


@pytest.mark.unit
class TestResultRow:
    """Test cases for published column names."""

    def test_lowercase_columns(self):
        row = ResultRow(
            snr_db=0,
            rmse_l_cfo=1,
            rmse_lambda_cfo=0,
            rmse_l_sto=2,
            rmse_lambda_sto=0,
            ser=0,
            frames=1,
            symbols=8,
        )
        assert row.rmse_l_sto == 2
        assert list(row.model_dump()) == list(ResultTable.COLUMNS)
