"""
Chirp synthesis and frame construction.

Chirps are generated directly from the continuous-time phase law, so a frame
can be evaluated at arbitrary instants (the channel samples it on a skewed
time grid) and a symbol buffer is exactly the frame evaluated on the nominal
grid.
"""

import logging
from functools import lru_cache
from typing import Iterable, Sequence, Tuple

import numpy as np

from .exceptions import DomainError, OutOfRangeError
from .models import ChirpKind, FrameDescriptor, ModemParams, PreambleSpec, Segment

logger = logging.getLogger(__name__)


def chirp_phase(chips: np.ndarray, symbol: np.ndarray, n: int) -> np.ndarray:
    """
    Phase of an up-chirp in cycles.

    Args:
        chips: Time since the start of the chirp, in chips (t * B)
        symbol: Symbol value(s), broadcastable against ``chips``
        n: Chips per symbol

    Returns:
        Phase in cycles, c^2/2N + (s/N - 1/2) c - c once the frequency folds
    """
    chips = np.asarray(chips, dtype=np.float64)
    symbol = np.asarray(symbol, dtype=np.float64)
    fold = chips >= (n - symbol)
    return chips * chips / (2.0 * n) + (symbol / n - 0.5) * chips - fold * chips


def _check_symbol(symbol: int, n: int) -> None:
    if not 0 <= symbol < n:
        raise DomainError(f"Symbol {symbol} outside [0, {n})")


def modulate_symbol(
    symbol: int, params: ModemParams, kind: ChirpKind = ChirpKind.UP
) -> np.ndarray:
    """
    Sampled chirp for one symbol at the nominal rate fs.

    Args:
        symbol: Symbol value in [0, 2^SF)
        params: Modem parameters
        kind: Up-chirp, or its complex conjugate

    Returns:
        Complex buffer of N * osr unit-magnitude samples

    Raises:
        DomainError: If the symbol is out of range
    """
    _check_symbol(symbol, params.n)
    return _modulate(symbol, params.sf, params.osr, kind == ChirpKind.DOWN).copy()


@lru_cache(maxsize=64)
def _modulate(symbol: int, sf: int, osr: int, down: bool) -> np.ndarray:
    n = 1 << sf
    chips = np.arange(n * osr, dtype=np.float64) / osr
    cycles = np.mod(chirp_phase(chips, symbol, n), 1.0)
    buffer = np.exp(2j * np.pi * cycles)
    if down:
        buffer = np.conj(buffer)
    buffer.setflags(write=False)
    return buffer


def base_chirp(params: ModemParams, kind: ChirpKind = ChirpKind.UP) -> np.ndarray:
    """Read-only x_0 (or its conjugate) for dechirping."""
    return _modulate(0, params.sf, params.osr, kind == ChirpKind.DOWN)


def build_frame(
    preamble: PreambleSpec, payload: Sequence[int], params: ModemParams
) -> FrameDescriptor:
    """
    Lay out preamble and payload as contiguous chirp segments.

    The frame is n_up up-chirps of value 0, the two sync-word up-chirps,
    floor(n_down) full down-chirps, a truncated down-chirp for the fractional
    remainder, then one up-chirp per payload symbol.

    Raises:
        DomainError: If a sync word or payload symbol is out of range
    """
    n = params.n
    for word in preamble.sync_words:
        _check_symbol(word, n)
    for symbol in payload:
        _check_symbol(int(symbol), n)

    pieces = [(ChirpKind.UP, 0, 1.0)] * preamble.n_up
    pieces += [(ChirpKind.UP, word, 1.0) for word in preamble.sync_words]
    pieces += [(ChirpKind.DOWN, 0, 1.0)] * preamble.full_down_chirps
    remainder = preamble.n_down - preamble.full_down_chirps
    if remainder > 0:
        pieces.append((ChirpKind.DOWN, 0, remainder))
    pieces += [(ChirpKind.UP, int(symbol), 1.0) for symbol in payload]

    segments = []
    start_symbols = 0.0
    for kind, symbol, length in pieces:
        segments.append(
            Segment(
                start_time=start_symbols * params.symbol_duration,
                duration=length * params.symbol_duration,
                kind=kind,
                symbol=symbol,
            )
        )
        start_symbols += length

    logger.debug("Built frame of %d segments (%.2f symbols)", len(segments), start_symbols)
    return FrameDescriptor(
        params=params,
        preamble=preamble,
        payload=[int(s) for s in payload],
        segments=segments,
    )


def _segment_table(frame: FrameDescriptor) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    bw = frame.params.bw
    starts = np.array([round(s.start_time * bw * 4) / 4 for s in frame.segments])
    symbols = np.array([s.symbol for s in frame.segments], dtype=np.float64)
    signs = np.array([1.0 if s.kind == ChirpKind.UP else -1.0 for s in frame.segments])
    return starts, symbols, signs


def eval_frame_chips(frame: FrameDescriptor, chips: Iterable[float]) -> np.ndarray:
    """
    Evaluate the frame at instants given in chips since the frame start.

    Raises:
        OutOfRangeError: If any instant falls outside [0, frame length)
    """
    chips = np.atleast_1d(np.asarray(chips, dtype=np.float64))
    length = frame.length_chips
    if chips.size and (chips.min() < 0 or chips.max() >= length):
        raise OutOfRangeError(
            f"Frame spans [0, {length}) chips, requested "
            f"[{chips.min()}, {chips.max()}]"
        )

    starts, symbols, signs = _segment_table(frame)
    index = np.searchsorted(starts, chips, side="right") - 1
    local = chips - starts[index]
    cycles = np.mod(signs[index] * chirp_phase(local, symbols[index], frame.params.n), 1.0)
    return np.exp(2j * np.pi * cycles)


def eval_frame(frame: FrameDescriptor, t: Iterable[float]) -> np.ndarray:
    """Evaluate the frame at instants given in seconds since the frame start."""
    t = np.asarray(t, dtype=np.float64)
    return eval_frame_chips(frame, t * frame.params.bw)
