"""
Data models for the LoRa synchronization toolkit.

This module defines Pydantic models for modem parameters, frame layout,
channel impairments, receiver configuration and experiment results.
Parameter objects are frozen so they hash and can be shared across workers.
"""

import math
from enum import Enum
from typing import Any, ClassVar, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ChirpKind(str, Enum):
    """Direction of a chirp."""
    UP = "up"
    DOWN = "down"


class SfoMode(str, Enum):
    """How much SFO handling the receiver performs."""
    NONE = "none"
    PAYLOAD = "payload"
    FULL = "full"
    IDEAL = "ideal"


class OutputFormat(str, Enum):
    """Result file formats."""
    CSV = "csv"
    JSON = "json"


class SampleAction(str, Enum):
    """What the payload tracker does once per compensation period."""
    DROP = "drop"
    DUPLICATE = "duplicate"


class ModemParams(BaseModel):
    """Physical-layer parameters shared by transmitter and receiver."""

    model_config = ConfigDict(frozen=True)

    sf: int = Field(default=12, ge=5, le=12)
    bw: float = Field(default=250e3, gt=0)
    fc: float = Field(default=868e6, gt=0)
    fs: float = Field(default=250e3, gt=0)

    @model_validator(mode="before")
    @classmethod
    def default_sample_rate(cls, data: Any) -> Any:
        """Sample at the bandwidth unless a rate is given."""
        if isinstance(data, dict) and data.get("fs") is None:
            data = {**data, "fs": data.get("bw", 250e3)}
        return data

    @model_validator(mode="after")
    def check_oversampling(self) -> "ModemParams":
        """The sample rate must be a positive integer multiple of the bandwidth."""
        ratio = self.fs / self.bw
        if round(ratio) < 1 or abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ValueError(
                f"fs/bw must be a positive integer, got {self.fs}/{self.bw}"
            )
        return self

    @property
    def n(self) -> int:
        """Number of chips (and DFT bins) per symbol."""
        return 1 << self.sf

    @property
    def osr(self) -> int:
        """Oversampling ratio fs/B."""
        return int(round(self.fs / self.bw))

    @property
    def samples_per_symbol(self) -> int:
        return self.n * self.osr

    @property
    def symbol_duration(self) -> float:
        return self.n / self.bw

    @property
    def bin_hz(self) -> float:
        return self.bw / self.n


class PreambleSpec(BaseModel):
    """Preamble layout: up-chirps, two sync words, fractional down-chirps."""

    model_config = ConfigDict(frozen=True)

    n_up: int = Field(default=8, ge=2, le=65535)
    sync_words: Tuple[int, int] = (8, 16)
    n_down: float = Field(default=2.25, ge=2.0)

    @field_validator("n_down")
    @classmethod
    def validate_n_down(cls, v: float) -> float:
        """Down-chirp count must be a whole number of quarter symbols."""
        if abs(v * 4 - round(v * 4)) > 1e-12:
            raise ValueError("n_down must be a multiple of 0.25")
        return v

    @field_validator("sync_words")
    @classmethod
    def validate_sync_words(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if any(word < 0 for word in v):
            raise ValueError("Sync words must be non-negative")
        return v

    @property
    def full_down_chirps(self) -> int:
        return int(math.floor(self.n_down))

    @property
    def length_symbols(self) -> float:
        """Preamble length in symbols; the payload starts here."""
        return self.n_up + 2 + self.n_down


class Segment(BaseModel):
    """One chirp (or a truncated head of one) inside a frame."""

    model_config = ConfigDict(frozen=True)

    start_time: float = Field(..., ge=0)
    duration: float = Field(..., gt=0)
    kind: ChirpKind
    symbol: int = Field(..., ge=0)


class FrameDescriptor(BaseModel):
    """An ordered, contiguous sequence of chirp segments."""

    params: ModemParams
    preamble: PreambleSpec
    payload: List[int] = Field(default_factory=list)
    segments: List[Segment] = Field(..., min_length=1)

    @model_validator(mode="after")
    def check_contiguous(self) -> "FrameDescriptor":
        """Segments must start at 0 and follow each other without gaps."""
        expected = 0.0
        tolerance = 1e-9 * self.params.symbol_duration
        for segment in self.segments:
            if abs(segment.start_time - expected) > tolerance:
                raise ValueError(
                    f"Segment at {segment.start_time} s does not follow {expected} s"
                )
            expected = segment.start_time + segment.duration
        return self

    @property
    def duration(self) -> float:
        last = self.segments[-1]
        return last.start_time + last.duration

    @property
    def length_chips(self) -> float:
        """Frame length in chips, snapped to the quarter-chip grid."""
        return round(self.duration * self.params.bw * 4) / 4


class ImpairmentConfig(BaseModel):
    """Channel impairments applied to one transmitted frame."""

    gamma: float = Field(default=0.0, gt=-1e-3, lt=1e-3)
    tau: float = Field(default=0.0, ge=0.0)
    snr_db: Optional[float] = None
    seed: int = Field(default=0, ge=0, lt=2**64)
    cfo_hz: Optional[float] = None
    sfo: bool = True

    @classmethod
    def from_ppm(cls, ppm: float, **kwargs: Any) -> "ImpairmentConfig":
        """Build an impairment set from an oscillator offset in ppm."""
        return cls(gamma=ppm * 1e-6, **kwargs)

    @property
    def noiseless(self) -> bool:
        return self.snr_db is None or math.isinf(self.snr_db)

    def carrier_offset(self, params: ModemParams) -> float:
        """Carrier frequency offset in Hz."""
        if self.cfo_hz is not None:
            return self.cfo_hz
        return self.gamma * params.fc

    def receive_rate(self, params: ModemParams) -> float:
        """Receiver sample rate fs' seen from the transmitter's clock."""
        return params.fs * (1.0 + self.gamma) if self.sfo else params.fs

    def sto_chips(self, params: ModemParams) -> float:
        """Timing offset expressed in chips."""
        return self.tau * params.bw


class DerivedOffsets(BaseModel):
    """CFO and SFO implied by an oscillator offset."""

    model_config = ConfigDict(frozen=True)

    delta_fc: float
    fs_prime: float
    l_cfo: int
    lambda_cfo: float
    in_range: bool = True

    @property
    def cfo_bins(self) -> float:
        return self.l_cfo + self.lambda_cfo


class OffsetEstimate(BaseModel):
    """Integer and fractional parts of the CFO and STO, plus the SFO."""

    l_cfo: int = 0
    lambda_cfo: float = Field(default=0.0, ge=-0.5, le=0.5)
    l_sto: int = Field(default=0, ge=0)
    lambda_sto: float = Field(default=0.0, ge=-0.5, le=0.5)
    gamma_hat: float = 0.0

    @property
    def cfo_bins(self) -> float:
        return self.l_cfo + self.lambda_cfo

    @property
    def sto_chips(self) -> float:
        return self.l_sto + self.lambda_sto

    def cfo_hz(self, params: ModemParams) -> float:
        return self.cfo_bins * params.bin_hz


class RctslConstants(BaseModel):
    """Weights of the fractional-peak interpolator for an N-bin spectrum."""

    model_config = ConfigDict(frozen=True)

    u: float
    v: float

    @classmethod
    def for_bins(cls, n: int) -> "RctslConstants":
        u = 64.0 * n / (math.pi**5 + 32.0 * math.pi)
        return cls(u=u, v=u * math.pi**2 / 4.0)


class CompensationPlan(BaseModel):
    """How often the payload tracker adjusts the sample stream."""

    model_config = ConfigDict(frozen=True)

    period_samples: float = Field(..., gt=0)
    action: SampleAction


class SyncConfig(BaseModel):
    """Receiver configuration."""

    model_config = ConfigDict(frozen=True)

    passes_max: int = Field(default=2, ge=1, le=2)
    theta: float = Field(default=0.05, ge=0.0)
    preamble: PreambleSpec = Field(default_factory=PreambleSpec)
    compensate_preamble_sfo: bool = True
    compensate_symbol_phase: bool = True

    @property
    def n_up(self) -> int:
        return self.preamble.n_up


class SyncResult(BaseModel):
    """Outcome of synchronizing one stream."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    passes_run: int = Field(..., ge=1, le=2)
    estimate: OffsetEstimate
    first_pass: OffsetEstimate
    reference_sample: float
    aligned_start: int
    payload_start: int = Field(..., ge=0)
    payload_drift: float = 0.0
    preamble_sfo_compensated: bool = False
    flags: List[str] = Field(default_factory=list)
    aligned_stream: np.ndarray = Field(exclude=True, repr=False)

    @property
    def aligned_stream_offset(self) -> int:
        """Payload start as an index into the received stream."""
        return self.aligned_start + self.payload_start


class ExperimentConfig(BaseModel):
    """One Monte Carlo experiment: a modem setup swept over SNR."""

    name: Optional[str] = None
    params: ModemParams = Field(default_factory=ModemParams)
    preamble: PreambleSpec = Field(default_factory=PreambleSpec)
    gamma_ppm: float = Field(default=32.0, ge=-200.0, le=200.0)
    snr_grid: List[float] = Field(..., min_length=1)
    n_frames: int = Field(default=100, ge=1)
    payload_len: int = Field(default=8, ge=0, le=255)
    sfo_mode: SfoMode = SfoMode.FULL
    passes_max: int = Field(default=2, ge=1, le=2)
    theta: float = Field(default=0.05, ge=0.0)
    seed: int = Field(default=0, ge=0)
    workers: int = Field(default=1, ge=1, le=8)

    @field_validator("snr_grid")
    @classmethod
    def validate_snr_grid(cls, v: List[float]) -> List[float]:
        if any(math.isnan(snr) for snr in v):
            raise ValueError("SNR grid must not contain NaN")
        return v

    @property
    def channel_gamma(self) -> float:
        """Oscillator offset applied by the channel."""
        if self.sfo_mode == SfoMode.IDEAL:
            return 0.0
        return self.gamma_ppm * 1e-6

    @property
    def tracks_payload(self) -> bool:
        return self.sfo_mode in (SfoMode.PAYLOAD, SfoMode.FULL, SfoMode.IDEAL)

    def sync_config(self) -> SyncConfig:
        """Receiver configuration implied by the SFO mode."""
        preamble_sfo = self.sfo_mode in (SfoMode.FULL, SfoMode.IDEAL)
        return SyncConfig(
            passes_max=self.passes_max if preamble_sfo else 1,
            theta=self.theta,
            preamble=self.preamble,
            compensate_preamble_sfo=preamble_sfo,
        )


class TrialRecord(BaseModel):
    """Truth and estimates for a single simulated frame."""

    snr_db: float
    trial_index: int = Field(..., ge=0)
    truth: OffsetEstimate
    estimate: OffsetEstimate
    first_pass: OffsetEstimate
    passes_run: int = Field(..., ge=1, le=2)
    payload: List[int] = Field(default_factory=list)
    decisions: List[int] = Field(default_factory=list)
    flags: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_payload_lengths(self) -> "TrialRecord":
        if len(self.payload) != len(self.decisions):
            raise ValueError("Payload and decisions must have equal length")
        return self

    @property
    def symbol_errors(self) -> int:
        return sum(1 for sent, got in zip(self.payload, self.decisions) if sent != got)


class ResultRow(BaseModel):
    """Aggregated statistics for one SNR point."""

    snr_db: float
    rmse_l_cfo: float = Field(..., ge=0)
    rmse_lambda_cfo: float = Field(..., ge=0)
    rmse_l_sto: float = Field(..., ge=0)
    rmse_lambda_sto: float = Field(..., ge=0)
    ser: float = Field(..., ge=0, le=1)
    frames: int = Field(..., ge=0)
    symbols: int = Field(..., ge=0)


class ResultTable(BaseModel):
    """Rows of a sweep, one per SNR point, in grid order."""

    COLUMNS: ClassVar[Tuple[str, ...]] = (
        "snr_db",
        "rmse_l_cfo",
        "rmse_lambda_cfo",
        "rmse_l_sto",
        "rmse_lambda_sto",
        "ser",
        "frames",
        "symbols",
    )

    rows: List[ResultRow] = Field(default_factory=list)

    def as_records(self) -> List[Dict[str, Any]]:
        """Rows as dictionaries keyed by the published column names."""
        return [row.model_dump() for row in self.rows]


class ValidationResult(BaseModel):
    """Result of validating an experiment configuration."""

    is_valid: bool
    errors: List[str] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)
    suggestions: List[str] = Field(default_factory=list)


class CliArgs(BaseModel):
    """A parsed command line: the subcommand, its option values and, for sweeps, the experiment."""

    mode: str
    options: Dict[str, Any] = Field(default_factory=dict)
    experiment: Optional[ExperimentConfig] = None
