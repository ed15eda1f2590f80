"""
Dechirping, DFT and hard symbol decisions.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft

from .exceptions import DomainError
from .models import ChirpKind, ModemParams
from .waveform import base_chirp

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DechirpedSpectrum:
    """
    DFT of one dechirped symbol window, optionally zero-padded.

    For oversampled windows ``bins`` holds the non-negative frequencies of
    the long DFT and ``alias`` the band one chirp bandwidth below them, where
    the part of the chirp past its frequency fold lands. Both carry the same
    symbol and are combined in power only.
    """

    bins: np.ndarray
    n: int
    zero_pad: int = 0
    alias: Optional[np.ndarray] = None

    @property
    def n_dft(self) -> int:
        return self.n + self.zero_pad

    @property
    def power(self) -> np.ndarray:
        power = np.abs(self.bins) ** 2
        if self.alias is not None:
            power = power + np.abs(self.alias) ** 2
        return power

    def cuts(self) -> Tuple[np.ndarray, ...]:
        """Complex bin arrays that share one phase reference."""
        return (self.bins,) if self.alias is None else (self.bins, self.alias)


@dataclass(frozen=True)
class PowerSpectrum:
    """Non-coherent sum of squared spectra."""

    power: np.ndarray
    n: int

    @property
    def n_dft(self) -> int:
        return len(self.power)


def dechirp(
    buffer: np.ndarray, params: ModemParams, direction: ChirpKind = ChirpKind.UP
) -> np.ndarray:
    """
    Multiply a symbol window by the conjugate of the base chirp.

    ``direction`` names the chirp being removed: UP multiplies by conj(x_0),
    DOWN by x_0.

    Raises:
        DomainError: If the buffer is not exactly one symbol long
    """
    buffer = np.asarray(buffer)
    expected = params.samples_per_symbol
    if buffer.shape[-1] != expected:
        raise DomainError(f"Symbol window has {buffer.shape[-1]} samples, expected {expected}")
    reference = base_chirp(params, ChirpKind.DOWN if direction == ChirpKind.UP else ChirpKind.UP)
    return buffer * reference


def spectrum(
    dechirped: np.ndarray, params: ModemParams, zero_pad: int = 0
) -> DechirpedSpectrum:
    """
    DFT of a dechirped window.

    An oversampled window is transformed at its full length of
    (N + zero_pad) * osr bins. The tone of symbol s sits at bin s before the
    chirp folds and at bin s - N after it, so the first N + zero_pad bins and
    the N + zero_pad bins one bandwidth below them are kept and their powers
    are added bin by bin.
    """
    if zero_pad < 0:
        raise DomainError("zero_pad must be non-negative")
    dechirped = np.asarray(dechirped)
    n = params.n
    n_dft = n + zero_pad
    if len(dechirped) == params.samples_per_symbol and params.osr > 1:
        full = fft.fft(dechirped, n=n_dft * params.osr)
        return DechirpedSpectrum(
            bins=full[:n_dft], n=n, zero_pad=zero_pad, alias=full[-n_dft:]
        )
    if len(dechirped) != n:
        raise DomainError(f"Dechirped window has {len(dechirped)} samples, expected {n}")
    return DechirpedSpectrum(bins=fft.fft(dechirped, n=n_dft), n=n, zero_pad=zero_pad)


def detect_symbol(spec: DechirpedSpectrum) -> int:
    """Index of the strongest bin; ties resolve to the lowest index."""
    if spec.zero_pad:
        raise DomainError("Symbol decisions need an unpadded spectrum")
    return int(np.argmax(spec.power))


def accumulate_power(spectra: Sequence[DechirpedSpectrum]) -> PowerSpectrum:
    """Sum |Y|^2 over spectra that share one DFT length."""
    if not spectra:
        raise DomainError("Cannot accumulate an empty list of spectra")
    lengths = {spec.n_dft for spec in spectra}
    if len(lengths) != 1:
        raise DomainError(f"Spectra have mixed DFT lengths {sorted(lengths)}")
    total = np.zeros(lengths.pop(), dtype=np.float64)
    for spec in spectra:
        total += spec.power
    return PowerSpectrum(power=total, n=spectra[0].n)


def symbol_windows(
    stream: np.ndarray, params: ModemParams, start: int, count: int
) -> np.ndarray:
    """
    Cut ``count`` consecutive symbol windows starting at sample ``start``.

    Samples past the end of the stream read as zero.
    """
    width = params.samples_per_symbol
    end = start + count * width
    if start < 0:
        raise DomainError(f"Window start {start} precedes the stream")
    chunk = np.asarray(stream[start:end], dtype=np.complex128)
    if len(chunk) < count * width:
        chunk = np.pad(chunk, (0, count * width - len(chunk)))
    return chunk.reshape(count, width)


def demodulate(
    stream: np.ndarray, params: ModemParams, count: int, start: int = 0
) -> List[int]:
    """Hard decisions for ``count`` up-chirp symbols on an aligned stream."""
    windows = symbol_windows(stream, params, start, count)
    return [detect_symbol(spectrum(dechirp(w, params), params)) for w in windows]
