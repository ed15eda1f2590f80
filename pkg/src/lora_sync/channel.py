"""
Channel model: oscillator offsets, timing offset and white noise.

A single oscillator offset gamma skews both the carrier (CFO = gamma * fc)
and the receiver sample clock (fs' = fs * (1 + gamma)). Receiver sample k
sees the transmitted frame at chip k / (osr * (1 + gamma)) + tau * B.
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from .models import DerivedOffsets, FrameDescriptor, ImpairmentConfig, ModemParams
from .waveform import eval_frame_chips

logger = logging.getLogger(__name__)


def split_offset(value: float) -> Tuple[int, float]:
    """Split a bin or chip offset into (integer, fraction in [-0.5, 0.5))."""
    integer = math.floor(value + 0.5)
    return int(integer), value - integer


def derive_offsets(
    gamma: float, params: ModemParams, cfo_hz: Optional[float] = None
) -> DerivedOffsets:
    """
    CFO and receiver sample rate implied by an oscillator offset.

    Args:
        gamma: Relative oscillator offset (ppm * 1e-6)
        params: Modem parameters
        cfo_hz: Explicit CFO overriding gamma * fc

    Returns:
        DerivedOffsets; ``in_range`` is False when |CFO| exceeds B/4, which
        the integer estimator cannot resolve
    """
    delta_fc = gamma * params.fc if cfo_hz is None else cfo_hz
    l_cfo, lambda_cfo = split_offset(delta_fc / params.bin_hz)
    in_range = abs(delta_fc) <= params.bw / 4
    if not in_range:
        logger.warning(
            "CFO of %.1f Hz exceeds B/4 = %.1f Hz; integer CFO is ambiguous",
            delta_fc,
            params.bw / 4,
        )
    return DerivedOffsets(
        delta_fc=delta_fc,
        fs_prime=params.fs * (1.0 + gamma),
        l_cfo=l_cfo,
        lambda_cfo=lambda_cfo,
        in_range=in_range,
    )


def _chip_positions(
    impairments: ImpairmentConfig, params: ModemParams, samples: np.ndarray
) -> np.ndarray:
    skew = 1.0 + impairments.gamma if impairments.sfo else 1.0
    return samples / (params.osr * skew) + impairments.sto_chips(params)


def true_timing(
    impairments: ImpairmentConfig, params: ModemParams, sample: float
) -> float:
    """Transmitted chip at receiver ``sample`` minus its nominal chip, in chips."""
    chip = _chip_positions(impairments, params, np.asarray([sample], dtype=np.float64))
    return float(chip[0] - sample / params.osr)


def preamble_start_sample(impairments: ImpairmentConfig, params: ModemParams) -> float:
    """Receiver sample at which the frame's first chip arrives (zero or negative)."""
    skew = 1.0 + impairments.gamma if impairments.sfo else 1.0
    return -impairments.sto_chips(params) * params.osr * skew


def preamble_timing(impairments: ImpairmentConfig, params: ModemParams) -> float:
    """Timing offset in chips at the start of the preamble."""
    return true_timing(impairments, params, preamble_start_sample(impairments, params))


def sample_received(
    frame: FrameDescriptor, impairments: ImpairmentConfig, n_samples: int
) -> np.ndarray:
    """
    Noiseless receiver samples of a frame under CFO, STO and SFO.

    Raises:
        OutOfRangeError: If the requested span runs past the end of the frame
    """
    params = frame.params
    samples = np.arange(n_samples, dtype=np.float64)
    chips = _chip_positions(impairments, params, samples)
    signal = eval_frame_chips(frame, chips)

    cycles_per_sample = impairments.carrier_offset(params) / impairments.receive_rate(params)
    rotation = np.exp(2j * np.pi * np.mod(cycles_per_sample * samples, 1.0))
    return signal * rotation


def max_samples(frame: FrameDescriptor, impairments: ImpairmentConfig) -> int:
    """Largest receiver sample count that stays inside the frame."""
    params = frame.params
    skew = 1.0 + impairments.gamma if impairments.sfo else 1.0
    span = (frame.length_chips - impairments.sto_chips(params)) * params.osr * skew
    return max(int(math.ceil(span)) - 1, 0)


def add_awgn(
    buffer: np.ndarray,
    snr_db: Optional[float],
    rng: np.random.Generator,
    osr: int = 1,
) -> np.ndarray:
    """
    Add circular complex Gaussian noise for a unit-power signal.

    The noise variance is osr * 10^(-SNR/10) so the SNR holds within the
    signal bandwidth. ``None`` or an infinite SNR returns an unchanged copy.
    """
    buffer = np.asarray(buffer, dtype=np.complex128)
    if snr_db is None or math.isinf(snr_db):
        return buffer.copy()
    sigma = math.sqrt(osr * 10.0 ** (-snr_db / 10.0) / 2.0)
    noise = rng.standard_normal(buffer.shape) + 1j * rng.standard_normal(buffer.shape)
    return buffer + sigma * noise


def trial_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator keyed on the experiment seed and trial coordinates."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *keys])))
