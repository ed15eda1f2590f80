"""
Result tables and raw IQ streams on disk.

Results are written as CSV (fixed column order, '.' decimal separator) or
JSON (a list of row objects). IQ streams are interleaved little-endian
float32 I/Q pairs with no header ("cf32").
"""

import csv
import json
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .exceptions import DomainError, MalformedFileError
from .models import OutputFormat, ResultRow, ResultTable

logger = logging.getLogger(__name__)

IQ_DTYPE = np.dtype("<f4")


def _format_for(path: Path, fmt: Optional[OutputFormat]) -> OutputFormat:
    if fmt is not None:
        return OutputFormat(fmt)
    return OutputFormat.JSON if path.suffix.lower() == ".json" else OutputFormat.CSV


def write_results(
    table: ResultTable, path: Union[str, Path], fmt: Optional[OutputFormat] = None
) -> Path:
    """
    Write a result table.

    Args:
        table: Rows to write
        path: Destination file; parent directories are created
        fmt: CSV or JSON; inferred from the suffix when omitted

    Returns:
        The path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = table.as_records()

    if _format_for(path, fmt) == OutputFormat.JSON:
        path.write_text(json.dumps(records, indent=2), encoding="utf-8")
    else:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(
                f, fieldnames=list(ResultTable.COLUMNS), lineterminator="\n"
            )
            writer.writeheader()
            for record in records:
                writer.writerow({column: record[column] for column in ResultTable.COLUMNS})

    logger.info("Wrote %d result rows to %s", len(records), path)
    return path


def read_results(path: Union[str, Path], fmt: Optional[OutputFormat] = None) -> ResultTable:
    """
    Read a table written by write_results.

    Raises:
        MalformedFileError: If the file does not hold result rows
    """
    path = Path(path)
    try:
        if _format_for(path, fmt) == OutputFormat.JSON:
            records = json.loads(path.read_text(encoding="utf-8"))
        else:
            with open(path, newline="", encoding="utf-8") as f:
                reader = csv.DictReader(f)
                if tuple(reader.fieldnames or ()) != ResultTable.COLUMNS:
                    raise MalformedFileError(f"Unexpected CSV header in {path}")
                records = list(reader)
        return ResultTable(rows=[ResultRow.model_validate(record) for record in records])
    except (ValueError, TypeError) as e:
        raise MalformedFileError(f"Cannot parse results in {path}: {e}") from e


def write_iq(stream: np.ndarray, path: Union[str, Path]) -> Path:
    """Write a complex stream as interleaved little-endian float32."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stream = np.asarray(stream, dtype=np.complex64)
    interleaved = np.empty(2 * len(stream), dtype=IQ_DTYPE)
    interleaved[0::2] = stream.real
    interleaved[1::2] = stream.imag
    interleaved.tofile(path)
    logger.debug("Wrote %d IQ samples to %s", len(stream), path)
    return path


def read_iq(path: Union[str, Path]) -> np.ndarray:
    """
    Read an interleaved little-endian float32 IQ file.

    Raises:
        FileNotFoundError: If the file does not exist
        MalformedFileError: If the byte count is not a whole number of I/Q pairs
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"IQ file not found: {path}")
    size = path.stat().st_size
    if size % (2 * IQ_DTYPE.itemsize):
        raise MalformedFileError(
            f"{path} holds {size} bytes, not a whole number of float32 I/Q pairs"
        )
    interleaved = np.fromfile(path, dtype=IQ_DTYPE)
    stream = np.empty(len(interleaved) // 2, dtype=np.complex64)
    stream.real = interleaved[0::2]
    stream.imag = interleaved[1::2]
    return stream


def iq_io(
    path: Union[str, Path], direction: str, stream: Optional[np.ndarray] = None
) -> Optional[np.ndarray]:
    """Read (``direction='read'``) or write (``'write'``) a cf32 stream."""
    if direction == "read":
        return read_iq(path)
    if direction == "write":
        if stream is None:
            raise DomainError("Writing an IQ file needs a stream")
        write_iq(stream, path)
        return None
    raise DomainError(f"Unknown IQ direction {direction!r}")
