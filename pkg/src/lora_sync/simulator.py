"""
Monte Carlo harness for synchronization RMSE and symbol error rate.

This module contains the MonteCarloSimulator class that draws random
frames, passes them through the channel and the receiver, and aggregates
per-SNR statistics. Every trial draws from its own generator keyed on
(seed, SNR, trial index), so results do not depend on execution order or
on the number of workers.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .channel import (
    add_awgn,
    derive_offsets,
    max_samples,
    preamble_timing,
    sample_received,
    split_offset,
    trial_rng,
)
from .estimators import gamma_fold, wrap_fraction
from .models import (
    ExperimentConfig,
    ImpairmentConfig,
    OffsetEstimate,
    ResultRow,
    ResultTable,
    TrialRecord,
)
from .synchronizer import demodulate_payload, synchronize
from .waveform import build_frame

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int], None]


def _snr_key(snr_db: float) -> int:
    return int(round(snr_db * 1000)) & 0xFFFFFFFF


class MonteCarloSimulator:
    """
    Runs an ExperimentConfig trial by trial.

    Each trial draws a payload and a timing offset uniform over one symbol,
    applies the oscillator offset and noise, synchronizes, and records the
    truth next to the estimates.
    """

    def __init__(self, config: ExperimentConfig):
        """
        Initialize the simulator.

        Args:
            config: Experiment configuration
        """
        self.config = config
        self.sync_config = config.sync_config()

    def impaired_stream(
        self, snr_db: float, trial_index: int
    ) -> Tuple[np.ndarray, ImpairmentConfig, List[int]]:
        """Received stream of one trial with the impairments and payload used."""
        config = self.config
        params = config.params
        rng = trial_rng(config.seed, _snr_key(snr_db), trial_index)

        payload = rng.integers(0, params.n, size=config.payload_len).tolist()
        tau_chips = rng.uniform(0.0, params.n)
        impairments = ImpairmentConfig(
            gamma=config.channel_gamma,
            tau=tau_chips / params.bw,
            snr_db=snr_db,
            seed=config.seed,
        )

        frame = build_frame(config.preamble, payload, params)
        stream = sample_received(frame, impairments, max_samples(frame, impairments))
        stream = add_awgn(stream, snr_db, rng, params.osr)
        return stream, impairments, payload

    def true_offsets(self, impairments: ImpairmentConfig) -> OffsetEstimate:
        """Ground truth, with the STO taken at the start of the preamble."""
        params = self.config.params
        offsets = derive_offsets(impairments.gamma, params, impairments.cfo_hz)
        l_sto, lambda_sto = split_offset(preamble_timing(impairments, params))
        return OffsetEstimate(
            l_cfo=offsets.l_cfo,
            lambda_cfo=offsets.lambda_cfo,
            l_sto=l_sto % params.n,
            lambda_sto=lambda_sto,
            gamma_hat=impairments.gamma,
        )

    def run_trial(self, snr_db: float, trial_index: int) -> TrialRecord:
        """Simulate and synchronize a single frame."""
        config = self.config
        stream, impairments, payload = self.impaired_stream(snr_db, trial_index)
        result = synchronize(stream, self.sync_config, config.params)
        decisions = demodulate_payload(
            result, config.payload_len, config.params, track=config.tracks_payload
        )
        return TrialRecord(
            snr_db=snr_db,
            trial_index=trial_index,
            truth=self.true_offsets(impairments),
            estimate=result.estimate,
            first_pass=result.first_pass,
            passes_run=result.passes_run,
            payload=payload,
            decisions=decisions,
            flags=result.flags,
        )

    def run_point(
        self, snr_db: float, progress: Optional[ProgressCallback] = None
    ) -> ResultRow:
        """All trials at one SNR, aggregated into a row."""
        trials = range(self.config.n_frames)
        if self.config.workers > 1:
            with ProcessPoolExecutor(max_workers=self.config.workers) as pool:
                jobs = [(self.config, snr_db, index) for index in trials]
                records = []
                for record in pool.map(_run_trial_job, jobs, chunksize=8):
                    records.append(record)
                    if progress:
                        progress(1)
        else:
            records = []
            for index in trials:
                records.append(self.run_trial(snr_db, index))
                if progress:
                    progress(1)

        row = aggregate(snr_db, records, self.config.params.n)
        logger.info("SNR %.1f dB: SER %.4g over %d symbols", snr_db, row.ser, row.symbols)
        return row

    def run_sweep(self, progress: Optional[ProgressCallback] = None) -> ResultTable:
        """Rows for every SNR point, in grid order."""
        return ResultTable(
            rows=[self.run_point(snr, progress) for snr in self.config.snr_grid]
        )


def _run_trial_job(job: Tuple[ExperimentConfig, float, int]) -> TrialRecord:
    config, snr_db, trial_index = job
    return MonteCarloSimulator(config).run_trial(snr_db, trial_index)


def run_trial(config: ExperimentConfig, snr_db: float, trial_index: int) -> TrialRecord:
    """Simulate one frame of ``config`` at ``snr_db``."""
    return MonteCarloSimulator(config).run_trial(snr_db, trial_index)


def run_sweep(
    config: ExperimentConfig, progress: Optional[ProgressCallback] = None
) -> ResultTable:
    """Simulate every SNR point of ``config``."""
    return MonteCarloSimulator(config).run_sweep(progress)


def trial_errors(record: TrialRecord, n: int) -> Dict[str, float]:
    """Signed estimation errors of one trial."""
    estimate, truth = record.estimate, record.truth
    return {
        "l_cfo": float(estimate.l_cfo - truth.l_cfo),
        "lambda_cfo": wrap_fraction(estimate.lambda_cfo - truth.lambda_cfo),
        "l_sto": float(gamma_fold((estimate.l_sto - truth.l_sto) % n, n)),
        "lambda_sto": wrap_fraction(estimate.lambda_sto - truth.lambda_sto),
    }


def aggregate(snr_db: float, records: Sequence[TrialRecord], n: int) -> ResultRow:
    """Reduce trial records, taken in trial order, to RMSE values and a symbol error rate."""
    records = sorted(records, key=lambda record: record.trial_index)
    if not records:
        return ResultRow(
            snr_db=snr_db,
            rmse_l_cfo=0.0,
            rmse_lambda_cfo=0.0,
            rmse_l_sto=0.0,
            rmse_lambda_sto=0.0,
            ser=0.0,
            frames=0,
            symbols=0,
        )

    errors = [trial_errors(record, n) for record in records]

    def rmse(key: str) -> float:
        values = np.array([error[key] for error in errors])
        return float(np.sqrt(np.mean(values**2)))

    symbols = sum(len(record.payload) for record in records)
    symbol_errors = sum(record.symbol_errors for record in records)
    return ResultRow(
        snr_db=snr_db,
        rmse_l_cfo=rmse("l_cfo"),
        rmse_lambda_cfo=rmse("lambda_cfo"),
        rmse_l_sto=rmse("l_sto"),
        rmse_lambda_sto=rmse("lambda_sto"),
        ser=symbol_errors / symbols if symbols else 0.0,
        frames=len(records),
        symbols=symbols,
    )


def wilson_interval(errors: int, trials: int, z: float = 1.96) -> Tuple[float, float]:
    """Wilson score interval for an error rate of ``errors`` in ``trials``."""
    if trials <= 0:
        return 0.0, 1.0
    rate = errors / trials
    denominator = 1.0 + z**2 / trials
    centre = (rate + z**2 / (2 * trials)) / denominator
    half = z * math.sqrt(rate * (1 - rate) / trials + z**2 / (4 * trials**2)) / denominator
    return max(0.0, centre - half), min(1.0, centre + half)
