"""
Offset estimators working on dechirped preamble spectra.

Fractional CFO comes from the phase progression between consecutive
up-chirps, fractional STO from interpolating the peak of a zero-padded power
spectrum, and the integer parts from the up/down-chirp peak positions.
"""

import logging
import math
from typing import Sequence, Tuple

import numpy as np

from .demod import DechirpedSpectrum, PowerSpectrum, accumulate_power
from .exceptions import DomainError
from .models import ModemParams, RctslConstants

logger = logging.getLogger(__name__)

# Bins either side of the peak used by the phase-difference estimator.
CFO_NEIGHBOURS = 2


def wrap_fraction(value: float) -> float:
    """Wrap into [-0.5, 0.5)."""
    wrapped = (value + 0.5) % 1.0 - 0.5
    return -0.5 if wrapped >= 0.5 else wrapped


def gamma_fold(k: int, n: int) -> int:
    """Map a bin index in [0, N) to a signed offset in [-N/2, N/2)."""
    if not 0 <= k < n:
        raise DomainError(f"Bin {k} outside [0, {n})")
    return k if k < n // 2 else k - n


def est_frac_cfo(spectra: Sequence[DechirpedSpectrum]) -> float:
    """
    Fractional CFO from consecutive dechirped up-chirps.

    Accumulates Y_l[i+p] * conj(Y_{l-1}[i+p]) for p in [-2, 2] around the peak
    i of each window, over both bands of an oversampled spectrum, and returns
    the angle of the sum in cycles. All-zero input yields 0.
    """
    if len(spectra) < 2:
        raise DomainError("Fractional CFO needs at least two spectra")
    n = spectra[0].n_dft
    offsets = np.arange(-CFO_NEIGHBOURS, CFO_NEIGHBOURS + 1)
    total = 0j
    for previous, current in zip(spectra[:-1], spectra[1:]):
        peak = int(np.argmax(current.power))
        idx = (peak + offsets) % n
        for now, before in zip(current.cuts(), previous.cuts()):
            total += np.sum(now[idx] * np.conj(before[idx]))
    if total == 0:
        return 0.0
    return wrap_fraction(np.angle(total) / (2.0 * np.pi))


def est_frac_sto(power: PowerSpectrum) -> float:
    """
    Fractional STO from a 2x zero-padded power spectrum.

    Interpolates the peak with the RCTSL weights and returns the fractional
    part of the tone position, in original bins, wrapped to [-0.5, 0.5).
    """
    p = power.power
    n_dft = len(p)
    if n_dft != 2 * power.n:
        raise DomainError(f"Expected a {2 * power.n}-point spectrum, got {n_dft}")
    peak = int(np.argmax(p))
    before, centre, after = p[(peak - 1) % n_dft], p[peak], p[(peak + 1) % n_dft]
    constants = RctslConstants.for_bins(power.n)
    denominator = constants.u * (after + before) + constants.v * centre
    if denominator == 0:
        return 0.0
    offset = power.n / (2.0 * math.pi) * (after - before) / denominator
    return wrap_fraction(peak / 2.0 + offset)


def est_int_cfo_sto(s_up: int, s_down: int, n: int) -> Tuple[int, int]:
    """
    Solve the up/down peak positions for integer CFO and STO.

    s_up = L_CFO + L_STO and s_down = L_CFO - L_STO (mod N), with
    L_CFO in [-N/4, N/4).
    """
    if not (0 <= s_up < n and 0 <= s_down < n):
        raise DomainError(f"Peak positions must lie in [0, {n})")
    l_cfo = int(gamma_fold((s_up + s_down) % n, n) / 2)
    l_sto = (s_up - l_cfo) % n
    return l_cfo, l_sto


def consensus_symbol(spectra: Sequence[DechirpedSpectrum]) -> int:
    """Peak of the summed power of several windows."""
    return int(np.argmax(accumulate_power(spectra).power))


def consensus_symbols(
    spectra_up: Sequence[DechirpedSpectrum], spectra_down: Sequence[DechirpedSpectrum]
) -> Tuple[int, int]:
    """
    Up- and down-chirp symbols from the summed power of each direction.

    Raises:
        DomainError: If either direction has no spectra
    """
    if not spectra_up or not spectra_down:
        raise DomainError("Consensus needs at least one up and one down spectrum")
    return consensus_symbol(spectra_up), consensus_symbol(spectra_down)


def est_sfo_from_cfo(l_cfo: int, lambda_cfo: float, params: ModemParams) -> float:
    """Relative oscillator offset implied by the estimated CFO."""
    return (l_cfo + lambda_cfo) * params.bw / (params.n * params.fc)


def degenerate(spectra: Sequence[DechirpedSpectrum]) -> bool:
    """True when every bin of every spectrum is zero."""
    return all(not np.any(spec.power) for spec in spectra)
