"""
Monte Carlo acceptance runs for the SFO compensation modes.

These sweep hundreds to thousands of SF10/SF12 frames and are deselected
by default; run them with ``pytest -m slow``.
"""

import math

import numpy as np
import pytest

from lora_sync.models import ExperimentConfig, ModemParams, SfoMode
from lora_sync.simulator import MonteCarloSimulator, trial_errors

WORKERS = 4


def sf12_config(mode, snr_grid, frames, seed=2024):
    return ExperimentConfig(
        params=ModemParams(sf=12),
        gamma_ppm=32.0,
        snr_grid=snr_grid,
        n_frames=frames,
        payload_len=8,
        sfo_mode=mode,
        seed=seed,
        workers=WORKERS,
    )


def ser_at(mode, snr_db, frames):
    return MonteCarloSimulator(sf12_config(mode, [snr_db], frames)).run_point(snr_db).ser


def threshold_snr(table, target=1e-2):
    """SNR at which the SER curve falls through ``target``, interpolated in log SER."""
    rows = table.rows
    for low, high in zip(rows, rows[1:]):
        if low.ser >= target > high.ser:
            if high.ser == 0.0:
                return high.snr_db
            t = math.log(low.ser / target) / math.log(low.ser / high.ser)
            return low.snr_db + t * (high.snr_db - low.snr_db)
    raise AssertionError(f"SER never crosses {target}: {[row.ser for row in rows]}")


@pytest.mark.slow
@pytest.mark.integration
class TestSymbolErrorRate:
    """SER of an 8-symbol SF12 payload at 32 ppm."""

    @pytest.mark.parametrize("mode", [SfoMode.PAYLOAD, SfoMode.FULL, SfoMode.IDEAL])
    def test_error_free_at_high_snr(self, mode):
        assert ser_at(mode, 30.0, 100) == 0.0

    @pytest.mark.parametrize("snr_db", [-15.0, 0.0, 10.0])
    def test_uncompensated_drift_floor(self, snr_db):
        """Without tracking, the second half of the payload drifts past half a chip."""
        assert 0.42 <= ser_at(SfoMode.NONE, snr_db, 1000) <= 0.50

    def test_threshold_snr(self):
        grid = [-25.0 + 0.5 * i for i in range(13)]
        thresholds = {
            mode: threshold_snr(MonteCarloSimulator(sf12_config(mode, grid, 400)).run_sweep())
            for mode in (SfoMode.PAYLOAD, SfoMode.FULL, SfoMode.IDEAL)
        }
        assert thresholds[SfoMode.FULL] - thresholds[SfoMode.IDEAL] <= 2.0
        assert thresholds[SfoMode.FULL] <= thresholds[SfoMode.PAYLOAD] + 0.25

    def test_ser_falls_with_snr(self):
        assert ser_at(SfoMode.FULL, -24.0, 100) > ser_at(SfoMode.FULL, -18.0, 100)


@pytest.mark.slow
@pytest.mark.integration
class TestEstimatorRmse:
    """Estimator accuracy at 40 ppm against the timing at the preamble start."""

    def config(self, mode, sf=10, frames=1000):
        return ExperimentConfig(
            params=ModemParams(sf=sf),
            gamma_ppm=40.0,
            snr_grid=[0.0],
            n_frames=frames,
            payload_len=0,
            sfo_mode=mode,
            theta=0.0,
            seed=7,
            workers=WORKERS,
        )

    @pytest.mark.parametrize("snr_db", [-10.0, 0.0])
    def test_two_pass_accuracy(self, snr_db):
        row = MonteCarloSimulator(self.config(SfoMode.FULL)).run_point(snr_db)
        assert row.rmse_l_cfo < 0.05
        assert row.rmse_lambda_cfo < 0.05
        assert row.rmse_lambda_sto < 0.0625

    def test_uncompensated_timing_floor(self):
        full = MonteCarloSimulator(self.config(SfoMode.FULL)).run_point(0.0)
        none = MonteCarloSimulator(self.config(SfoMode.NONE)).run_point(0.0)
        # The first pass reports the timing of the up-chirp centre, 4.5 symbols in.
        assert none.rmse_l_sto >= 0.3
        assert 0.15 < none.rmse_lambda_sto < 0.25
        assert none.rmse_lambda_sto > 3 * full.rmse_lambda_sto
        assert none.rmse_l_cfo < 0.05

    def test_uncompensated_sf12_timing_is_a_guess(self):
        row = MonteCarloSimulator(self.config(SfoMode.NONE, sf=12, frames=500)).run_point(0.0)
        assert row.rmse_lambda_sto == pytest.approx(1 / math.sqrt(12), abs=0.05)

    def test_rmse_falls_with_snr(self):
        simulator = MonteCarloSimulator(self.config(SfoMode.FULL, frames=200))
        low = simulator.run_point(-20.0)
        high = simulator.run_point(0.0)
        assert high.rmse_lambda_cfo < low.rmse_lambda_cfo


@pytest.mark.slow
@pytest.mark.integration
class TestSecondPass:
    """Fractional timing of the first and second pass at SF12, 32 ppm."""

    def test_second_pass_improves_fractional_timing(self):
        config = sf12_config(SfoMode.FULL, [-20.0], 500)
        simulator = MonteCarloSimulator(config)
        records = [simulator.run_trial(-20.0, index) for index in range(config.n_frames)]
        assert all(record.passes_run == 2 for record in records)

        n = config.params.n
        final = [trial_errors(record, n)["lambda_sto"] for record in records]
        first = [
            trial_errors(record.model_copy(update={"estimate": record.first_pass}), n)[
                "lambda_sto"
            ]
            for record in records
        ]
        rmse_first = float(np.sqrt(np.mean(np.square(first))))
        rmse_final = float(np.sqrt(np.mean(np.square(final))))
        assert rmse_final < rmse_first
        assert rmse_first > 0.1
