"""Campaign metadata: the CSV inventory of WAV files and their start times.

Only files listed in the CSV are ever processed; anything else sitting in the
audio directory is ignored.
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import List, Optional

from .errors import MetadataSchemaError, TimestampFormatError

REQUIRED_COLUMNS = ("filename", "start_date")
VALID_BIT_DEPTHS = (8, 16, 24, 32)

# fromisoformat on 3.10 only accepts 3- or 6-digit fractions
_FRACTION = re.compile(r"(T\d{2}:\d{2}:\d{2})\.(\d+)")


@dataclass(frozen=True)
class AudioFileDescriptor:
    """One audio file of the campaign.

    ``sample_rate``, ``bit_depth``, ``n_samples`` and ``n_channels`` are left
    as ``None`` by :func:`parse_metadata`; they are filled from the WAV header
    at decode time (see :meth:`with_header`).
    """

    name: str
    start_instant: datetime
    sample_rate: Optional[float] = None
    bit_depth: Optional[int] = None
    n_samples: Optional[int] = None
    n_channels: Optional[int] = None

    def __post_init__(self):
        if self.start_instant.tzinfo is None:
            raise TimestampFormatError(f"{self.name}: start instant must be timezone-aware")
        if self.sample_rate is not None and not self.sample_rate > 0:
            raise MetadataSchemaError(f"{self.name}: sample_rate must be positive")
        if self.bit_depth is not None and self.bit_depth not in VALID_BIT_DEPTHS:
            raise MetadataSchemaError(f"{self.name}: unsupported bit depth {self.bit_depth}")
        if self.n_channels is not None and self.n_channels < 1:
            raise MetadataSchemaError(f"{self.name}: n_channels must be >= 1")
        if self.n_samples is not None and self.n_samples < 0:
            raise MetadataSchemaError(f"{self.name}: n_samples must be >= 0")

    def with_header(self, sample_rate, bit_depth, n_samples, n_channels):
        return AudioFileDescriptor(
            self.name, self.start_instant, float(sample_rate), int(bit_depth),
            int(n_samples), int(n_channels),
        )


def parse_timestamp(text: str) -> datetime:
    """Parse a zoned ISO-8601 string into an aware UTC ``datetime``.

    Accepts a trailing ``Z`` or a numeric offset; offsets are normalized to UTC.
    Naive timestamps are rejected rather than guessed.
    """
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"

    def _pad(m):
        frac = m.group(2)[:6].ljust(6, "0")
        return f"{m.group(1)}.{frac}"

    s = _FRACTION.sub(_pad, s, count=1)
    try:
        dt = datetime.fromisoformat(s)
    except ValueError as exc:
        raise TimestampFormatError(f"not an ISO-8601 timestamp: {text!r}") from exc
    if dt.tzinfo is None or dt.utcoffset() is None:
        raise TimestampFormatError(f"timestamp has no timezone designator: {text!r}")
    return dt.astimezone(timezone.utc)


def format_iso8601(instant: datetime) -> str:
    """Format an aware instant as a UTC ISO-8601 string ending in ``Z``.

    Fractional seconds are written only when present (microsecond precision,
    trailing zeros trimmed to millisecond groups).
    """
    if instant.tzinfo is None:
        raise TimestampFormatError("cannot format a naive datetime")
    utc = instant.astimezone(timezone.utc)
    base = utc.strftime("%Y-%m-%dT%H:%M:%S")
    us = utc.microsecond
    if us == 0:
        return base + "Z"
    if us % 1000 == 0:
        return f"{base}.{us // 1000:03d}Z"
    return f"{base}.{us:06d}Z"


def offset_instant(start: datetime, seconds: float) -> datetime:
    return start + timedelta(seconds=seconds)


def parse_metadata(csv_text: str) -> List[AudioFileDescriptor]:
    """Parse the campaign CSV into descriptors, preserving row order.

    Extra columns are ignored. Raises :class:`MetadataSchemaError` when a
    required column is missing or a filename appears twice, and
    :class:`TimestampFormatError` (naming the data row) for a bad start date.
    """
    reader = csv.reader(io.StringIO(csv_text), skipinitialspace=True)
    header = next(reader, None)
    if header is None:
        raise MetadataSchemaError("metadata CSV is empty (no header row)")
    header = [h.strip() for h in header]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise MetadataSchemaError(f"metadata CSV lacks required column(s): {', '.join(missing)}")
    i_name = header.index("filename")
    i_date = header.index("start_date")

    descriptors = []
    seen = set()
    for row_number, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) <= max(i_name, i_date):
            raise MetadataSchemaError(f"row {row_number}: expected at least {max(i_name, i_date) + 1} fields")
        name = row[i_name].strip()
        if not name:
            raise MetadataSchemaError(f"row {row_number}: empty filename")
        if name in seen:
            raise MetadataSchemaError(f"row {row_number}: duplicate filename {name!r}")
        seen.add(name)
        try:
            start = parse_timestamp(row[i_date])
        except TimestampFormatError as exc:
            raise TimestampFormatError(f"row {row_number} ({name}): {exc}") from exc
        descriptors.append(AudioFileDescriptor(name, start))
    return descriptors


def read_metadata(path) -> List[AudioFileDescriptor]:
    with open(path, encoding="utf-8-sig", newline="") as fh:
        return parse_metadata(fh.read())
