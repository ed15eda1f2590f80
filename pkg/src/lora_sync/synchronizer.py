"""
Two-pass CFO/STO/SFO synchronization of a received LoRa frame.

Each pass runs the same estimation chain over the preamble:

1. coarse integer timing on the receive grid, used to place the
   preamble windows within about one chip of the chirp boundaries;
2. fractional CFO from consecutive up-chirps, then compensation;
3. fractional STO from the zero-padded power spectrum, then resampling;
4. integer CFO and STO from the up/down-chirp peaks, then compensation
   and sample realignment;
5. SFO from the total CFO.

The second pass repeats the chain on the raw stream with the first pass's
SFO estimate removing the SFO-induced phase from the preamble windows.
The payload start is extrapolated from the estimate's timing reference, and
each payload window is then realigned by the drift at its centre.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .demod import (
    DechirpedSpectrum,
    accumulate_power,
    dechirp,
    detect_symbol,
    spectrum,
    symbol_windows,
)
from .estimators import (
    consensus_symbols,
    degenerate,
    est_frac_cfo,
    est_frac_sto,
    est_int_cfo_sto,
    est_sfo_from_cfo,
    gamma_fold,
)
from .exceptions import DomainError, InsufficientDataError
from .models import (
    ChirpKind,
    CompensationPlan,
    ModemParams,
    OffsetEstimate,
    SampleAction,
    SyncConfig,
    SyncResult,
)

logger = logging.getLogger(__name__)

FRACTIONAL_DELAY_TAPS = 16


@dataclass
class PassResult:
    """Estimates and the compensated stream produced by one pass."""

    estimate: OffsetEstimate
    aligned_stream: np.ndarray
    aligned_start: int
    reference_sample: float
    flags: List[str] = field(default_factory=list)


def sfo_phase(
    n: Iterable[int],
    gamma_hat: float,
    params: ModemParams,
    direction: ChirpKind = ChirpKind.UP,
) -> np.ndarray:
    """
    Phase error (radians) an SFO of ``gamma_hat`` adds to preamble sample n.

    n counts samples from the start of the preamble; the symbol index is
    n // (N * osr) and the in-symbol index n mod (N * osr). Every term carries
    the in-symbol index, so the phase is zero at each window start and each
    window is brought back to the timing of the preamble start. Down-chirps
    see the negated phase.
    """
    n = np.asarray(n, dtype=np.int64)
    width = params.samples_per_symbol
    bw, chips = params.bw, params.n
    fs = params.fs
    fs_prime = fs * (1.0 + gamma_hat)
    n_bar = (n % width).astype(np.float64)
    symbol = (n // width).astype(np.float64)

    quadratic = bw**2 / (2.0 * chips) * (-gamma_hat * (2.0 + gamma_hat)) / fs_prime**2
    linear = symbol * bw * (fs - fs_prime) / fs_prime**2 - bw / 2.0 * (fs - fs_prime) / (
        fs * fs_prime
    )
    phase = 2.0 * np.pi * (quadratic * n_bar**2 + linear * n_bar)
    return phase if direction == ChirpKind.UP else -phase


def sfo_symbol_phase(
    n: Iterable[int],
    gamma_hat: float,
    params: ModemParams,
    direction: ChirpKind = ChirpKind.UP,
) -> np.ndarray:
    """
    Per-symbol constant phase psi_l of an SFO-impaired preamble, in radians.

    Symbol l starts l*N*gamma/(1+gamma) chips early, which adds a constant
    phase growing linearly with l; uncompensated it reads as a CFO of about
    N*gamma/2 bins.
    """
    n = np.asarray(n, dtype=np.int64)
    symbol = (n // params.samples_per_symbol).astype(np.float64)
    lead = -symbol * params.n * gamma_hat / (1.0 + gamma_hat)
    phase = 2.0 * np.pi * (lead**2 / (2.0 * params.n) - lead / 2.0)
    return phase if direction == ChirpKind.UP else -phase


def compensate_cfo(stream: np.ndarray, cfo_bins: float, params: ModemParams) -> np.ndarray:
    """Remove a CFO of ``cfo_bins`` bins by counter-rotating every sample."""
    k = np.arange(len(stream), dtype=np.float64)
    cycles = np.mod(cfo_bins / (params.n * params.osr) * k, 1.0)
    return np.asarray(stream) * np.exp(-2j * np.pi * cycles)


def fractional_delay_taps(delay: float, length: int = FRACTIONAL_DELAY_TAPS) -> np.ndarray:
    """Hamming-windowed sinc delaying by ``length // 2 + delay`` samples."""
    centre = length // 2
    x = np.arange(length, dtype=np.float64) - delay
    taps = np.sinc(x - centre) * (0.54 - 0.46 * np.cos(2.0 * np.pi * (x + 0.5) / length))
    return taps / taps.sum()


def resample_frac_sto(stream: np.ndarray, lambda_sto: float, params: ModemParams) -> np.ndarray:
    """
    Delay a stream by ``lambda_sto`` chips (lambda_sto * osr samples).

    The whole-sample part is a shift; the remainder goes through a 16-tap
    windowed-sinc filter whose group delay is removed. Length is preserved.
    """
    stream = np.asarray(stream, dtype=np.complex128)
    delay = lambda_sto * params.osr
    whole = math.floor(delay + 0.5)
    frac = delay - whole
    if abs(frac) < 1e-12:
        out = stream.copy()
    else:
        taps = fractional_delay_taps(frac)
        centre = FRACTIONAL_DELAY_TAPS // 2
        out = np.convolve(stream, taps)[centre : centre + len(stream)]
    if whole > 0:
        out = np.concatenate([np.zeros(whole, dtype=out.dtype), out[:-whole]])
    elif whole < 0:
        out = np.concatenate([out[-whole:], np.zeros(-whole, dtype=out.dtype)])
    return out


def _preamble_windows(
    stream: np.ndarray,
    params: ModemParams,
    origin: int,
    indices: Sequence[int],
    gamma_hat: float,
    direction: ChirpKind,
    symbol_phase: bool,
) -> List[np.ndarray]:
    width = params.samples_per_symbol
    windows = []
    for j in indices:
        window = symbol_windows(stream, params, origin + j * width, 1)[0]
        if gamma_hat != 0.0:
            # Fine window j holds frame symbol j + 1; n counts from the preamble start.
            n = (j + 1) * width + np.arange(width)
            phase = sfo_phase(n, gamma_hat, params, direction)
            if symbol_phase:
                phase = phase + sfo_symbol_phase(n, gamma_hat, params, direction)
            window = window * np.exp(-1j * phase)
        windows.append(window)
    return windows


def _spectra(
    windows: Sequence[np.ndarray],
    params: ModemParams,
    direction: ChirpKind = ChirpKind.UP,
    zero_pad: int = 0,
) -> List[DechirpedSpectrum]:
    return [spectrum(dechirp(w, params, direction), params, zero_pad) for w in windows]


def _realign(stream: np.ndarray, start: int) -> np.ndarray:
    if start >= 0:
        return stream[start:]
    return np.concatenate([np.zeros(-start, dtype=stream.dtype), stream])


def sync_pass(
    stream: np.ndarray,
    gamma_prior: float,
    config: SyncConfig,
    params: ModemParams,
) -> PassResult:
    """
    Run one estimation pass over the preamble.

    Args:
        stream: Received samples starting inside the first preamble up-chirp
        gamma_prior: SFO removed from the preamble windows before estimating
        config: Receiver configuration
        params: Modem parameters

    Returns:
        PassResult whose aligned stream is CFO-compensated, resampled and
        starts on the second preamble up-chirp boundary

    Raises:
        InsufficientDataError: If the stream cannot hold the preamble windows
    """
    stream = np.asarray(stream, dtype=np.complex128)
    n, osr, width = params.n, params.osr, params.samples_per_symbol
    n_up = config.n_up
    full_down = config.preamble.full_down_chirps
    symbol_phase = config.compensate_symbol_phase
    flags: List[str] = []

    if len(stream) < (n_up + 3) * width:
        raise InsufficientDataError(
            f"Stream of {len(stream)} samples is shorter than the "
            f"{(n_up + 3) * width} the preamble needs"
        )

    up_indices = range(0, n_up - 1)

    def windows(source: np.ndarray, origin: int, indices: Sequence[int], kind: ChirpKind):
        return _preamble_windows(source, params, origin, indices, gamma_prior, kind, symbol_phase)

    # Coarse integer timing on the receive grid.
    coarse_cfo = est_frac_cfo(_spectra(windows(stream, 0, up_indices, ChirpKind.UP), params))
    coarse = compensate_cfo(stream, coarse_cfo, params)
    s_up, s_down = consensus_symbols(
        _spectra(windows(coarse, 0, up_indices, ChirpKind.UP), params),
        _spectra(windows(coarse, 0, [n_up + 2], ChirpKind.DOWN), params, ChirpKind.DOWN),
    )
    _, coarse_sto = est_int_cfo_sto(s_up, s_down, n)

    # Window j of the fine grid holds frame symbol j + 1.
    origin = (n - coarse_sto) * osr
    down_indices = range(n_up + 1, n_up + 1 + full_down)
    if origin + down_indices[-1] * width + width > len(stream):
        raise InsufficientDataError("Stream ends inside the preamble down-chirps")

    up_spectra = _spectra(windows(stream, origin, up_indices, ChirpKind.UP), params)
    if degenerate(up_spectra):
        flags.append("degenerate_spectrum")
        logger.warning("Preamble spectra are all zero; estimates default to 0")
    lambda_cfo = est_frac_cfo(up_spectra)
    work = compensate_cfo(stream, lambda_cfo, params)

    padded = _spectra(windows(work, origin, up_indices, ChirpKind.UP), params, zero_pad=n)
    lambda_sto = est_frac_sto(accumulate_power(padded))
    work = resample_frac_sto(work, lambda_sto, params)

    s_up, s_down = consensus_symbols(
        _spectra(windows(work, origin, up_indices, ChirpKind.UP), params),
        _spectra(windows(work, origin, down_indices, ChirpKind.DOWN), params, ChirpKind.DOWN),
    )
    l_cfo, residual = est_int_cfo_sto(s_up, s_down, n)
    shift = gamma_fold(residual, n)
    work = compensate_cfo(work, l_cfo, params)

    aligned_start = origin - shift * osr
    # Sample whose timing the estimate describes: the preamble start once the
    # drift is compensated, otherwise the centre of the up-chirp windows.
    if gamma_prior != 0.0:
        reference = float(origin - width)
    else:
        reference = origin + (n_up - 1) / 2.0 * width

    estimate = OffsetEstimate(
        l_cfo=l_cfo,
        lambda_cfo=lambda_cfo,
        l_sto=(coarse_sto + shift) % n,
        lambda_sto=lambda_sto,
        gamma_hat=est_sfo_from_cfo(l_cfo, lambda_cfo, params),
    )
    logger.debug(
        "Pass (gamma_prior=%.3g): CFO %d%+.4f bins, STO %d%+.4f chips, gamma %.3f ppm",
        gamma_prior,
        estimate.l_cfo,
        estimate.lambda_cfo,
        estimate.l_sto,
        estimate.lambda_sto,
        estimate.gamma_hat * 1e6,
    )
    return PassResult(
        estimate=estimate,
        aligned_stream=_realign(work, aligned_start),
        aligned_start=aligned_start,
        reference_sample=reference,
        flags=flags,
    )


def synchronize(stream: np.ndarray, config: SyncConfig, params: ModemParams) -> SyncResult:
    """
    Estimate and compensate CFO, STO and SFO over the preamble.

    The second pass runs only when preamble SFO compensation is enabled,
    ``passes_max`` allows it and |gamma_hat| * N exceeds ``theta``.
    """
    first = sync_pass(stream, 0.0, config, params)
    final, passes = first, 1
    drift_bins = abs(first.estimate.gamma_hat) * params.n
    if config.compensate_preamble_sfo and config.passes_max >= 2:
        if drift_bins > config.theta:
            final = sync_pass(stream, first.estimate.gamma_hat, config, params)
            passes = 2
        else:
            logger.debug("Skipping second pass: drift %.4f bins <= %.4f", drift_bins, config.theta)

    width = params.samples_per_symbol
    # Aligned index 0 is the boundary of preamble symbol 1.
    nominal = int(round((config.preamble.length_symbols - 1) * width))
    gamma_hat = final.estimate.gamma_hat
    drift = gamma_hat * (final.aligned_start + nominal - final.reference_sample)
    payload_start = max(nominal + math.floor(drift + 0.5), 0)

    return SyncResult(
        passes_run=passes,
        estimate=final.estimate,
        first_pass=first.estimate,
        reference_sample=final.reference_sample,
        aligned_start=final.aligned_start,
        payload_start=payload_start,
        payload_drift=drift,
        preamble_sfo_compensated=passes == 2,
        flags=list(final.flags),
        aligned_stream=final.aligned_stream,
    )


def payload_sfo_track(
    stream: np.ndarray,
    gamma_hat: float,
    params: ModemParams,
    initial_offset: float = 0.0,
    block: int = 1,
) -> np.ndarray:
    """
    Follow a constant clock drift by dropping or duplicating samples.

    Output sample j is input sample j + floor(initial_offset + gamma_hat*j + 1/2):
    a positive gamma_hat drops a sample each time the accumulated drift
    crosses half a sample, a negative one repeats a sample. With ``block`` > 1
    the corrections only land on block boundaries and each block takes the
    drift at its centre. Positions past either end of the input read as zero;
    the length is preserved.
    """
    if block < 1:
        raise DomainError(f"Block length must be positive, got {block}")
    stream = np.asarray(stream)
    j = np.arange(len(stream))
    at = j if block == 1 else (j // block + 0.5) * block
    index = j + np.floor(initial_offset + gamma_hat * at + 0.5).astype(np.int64)
    valid = (index >= 0) & (index < len(stream))
    out = np.zeros_like(stream)
    out[valid] = stream[index[valid]]
    return out


def compensation_period(gamma_hat: float, params: ModemParams) -> Optional[CompensationPlan]:
    """
    Samples between payload corrections, fs / (2 * B * |gamma_hat|).

    Returns None when there is no drift to compensate.
    """
    if gamma_hat == 0:
        return None
    action = SampleAction.DROP if gamma_hat > 0 else SampleAction.DUPLICATE
    return CompensationPlan(
        period_samples=params.fs / (2.0 * params.bw * abs(gamma_hat)), action=action
    )


def max_budget_before_error(gamma: float, sf: int) -> Optional[int]:
    """
    Payload symbols before accumulated drift reaches half a chip.

    floor(1 / (2 * |gamma| * 2^SF)); None when gamma is 0 (unbounded).
    """
    if gamma == 0:
        return None
    return math.floor(1.0 / (2.0 * abs(gamma) * (1 << sf)) + 1e-9)


def _fractional_window(
    stream: np.ndarray, start: int, lag: float, params: ModemParams
) -> np.ndarray:
    """One symbol window read ``lag`` samples after ``start``, zero-padded at the ends."""
    width = params.samples_per_symbol
    margin = FRACTIONAL_DELAY_TAPS
    lo, hi = start - margin, start + width + margin
    chunk = np.zeros(hi - lo, dtype=np.complex128)
    first, last = max(lo, 0), min(hi, len(stream))
    if last > first:
        chunk[first - lo : last - lo] = stream[first:last]
    if lag != 0.0:
        chunk = resample_frac_sto(chunk, -lag / params.osr, params)
    return chunk[margin : margin + width]


def payload_windows(
    result: SyncResult, n_symbols: int, params: ModemParams, track: bool = True
) -> np.ndarray:
    """
    Payload symbol windows realigned to the estimated drift.

    With ``track`` each window is placed by the drift at its own centre: the
    whole samples are dropped or repeated at symbol boundaries by
    payload_sfo_track and the remainder is interpolated. Without it the
    alignment of the first symbol's centre is held for the whole payload.
    """
    width = params.samples_per_symbol
    gamma_hat = result.estimate.gamma_hat
    offset = result.payload_drift - math.floor(result.payload_drift + 0.5)
    rate = gamma_hat
    if not track:
        offset, rate = offset + gamma_hat * width / 2.0, 0.0

    segment = payload_sfo_track(
        result.aligned_stream[result.payload_start :], rate, params, offset, block=width
    )
    lags = offset + rate * (np.arange(n_symbols) + 0.5) * width
    windows = np.zeros((n_symbols, width), dtype=np.complex128)
    for m, lag in enumerate(lags):
        windows[m] = _fractional_window(segment, m * width, lag - math.floor(lag + 0.5), params)
    return windows


def demodulate_payload(
    result: SyncResult, n_symbols: int, params: ModemParams, track: bool = True
) -> List[int]:
    """Hard decisions for the payload of a synchronized stream."""
    if n_symbols == 0:
        return []
    windows = payload_windows(result, n_symbols, params, track)
    return [detect_symbol(spectrum(dechirp(w, params), params)) for w in windows]
