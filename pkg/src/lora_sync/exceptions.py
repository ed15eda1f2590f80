"""
Exception hierarchy for the LoRa synchronization toolkit.

Library code raises these; the CLI maps them onto exit codes.
"""


class LoraSyncError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(LoraSyncError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class OutOfRangeError(DomainError):
    """A frame was evaluated outside the time span it covers."""


class InsufficientDataError(LoraSyncError):
    """A stream is too short to hold the preamble the receiver needs."""


class MalformedFileError(LoraSyncError, OSError):
    """An IQ or result file does not have the expected layout."""
