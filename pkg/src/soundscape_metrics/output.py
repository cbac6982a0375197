"""Record types and their NDJSON / wide-CSV serializations.

Floats are written with Python's shortest round-trip ``repr``. Non-finite
levels (log of zero power) become ``null`` and are listed in ``quality``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from datetime import datetime
from typing import List, Optional, Sequence

import numpy as np

from .metadata import format_iso8601

SCHEMA_VERSION = 1
TOL_UNITS = "dB re 1 uPa^2"
SPL_UNITS = "dB re 1 uPa"
PSD_UNITS = "uPa^2/Hz"


@dataclass
class MetricRecord:
    file: str
    segment_index: int
    timestamp: datetime
    spl_db: float
    welch: np.ndarray
    tol: Optional[np.ndarray] = None
    n_frames: int = 0


@dataclass
class FileHeader:
    """Per-file context line: frequency axis, window parameters, TOL bands."""

    file: str
    start: datetime
    sample_rate: float
    bit_depth: int
    n_channels: int
    n_samples: int
    sensitivity_db: float
    segment_duration: float
    segment_size: int
    whole_file: bool
    n_segments: int
    samples_dropped: int
    window_kind: str
    window_size: int
    window_overlap: int
    nfft: int
    tol_band_indices: Optional[Sequence[int]] = None
    tol_band_centers: Optional[Sequence[float]] = None
    tol_nominal_centers: Optional[Sequence[float]] = None

    @property
    def n_bins(self):
        return self.nfft // 2 + 1

    @property
    def frequency_step(self):
        return self.sample_rate / self.nfft


def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _float_list(values):
    return [_finite_or_none(v) for v in np.asarray(values, dtype=np.float64).tolist()]


def record_quality(record: MetricRecord) -> List[str]:
    flags = []
    if not math.isfinite(record.spl_db):
        flags.append("spl_nonfinite")
    if record.tol is not None and not np.all(np.isfinite(record.tol)):
        flags.append("tol_nonfinite")
    if not np.all(np.isfinite(record.welch)):
        flags.append("welch_nonfinite")
    return flags


def record_to_dict(record: MetricRecord) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "type": "segment",
        "file": record.file,
        "segment_index": int(record.segment_index),
        "timestamp": format_iso8601(record.timestamp),
        "n_frames": int(record.n_frames),
        "spl_db": _finite_or_none(record.spl_db),
        "welch": _float_list(record.welch),
        "tol": None if record.tol is None else _float_list(record.tol),
        "quality": record_quality(record),
    }


def header_to_dict(h: FileHeader) -> dict:
    tol = None
    if h.tol_band_centers is not None:
        tol = {
            "units": TOL_UNITS,
            "band_indices": [int(i) for i in h.tol_band_indices],
            "band_centers": [float(c) for c in h.tol_band_centers],
            "nominal_centers": [float(c) for c in h.tol_nominal_centers],
        }
    return {
        "schema": SCHEMA_VERSION,
        "type": "file",
        "file": h.file,
        "start": format_iso8601(h.start),
        "sample_rate": float(h.sample_rate),
        "bit_depth": h.bit_depth,
        "n_channels": h.n_channels,
        "n_samples": h.n_samples,
        "sensitivity_db": float(h.sensitivity_db),
        "segment_duration": float(h.segment_duration),
        "segment_size": h.segment_size,
        "whole_file": h.whole_file,
        "n_segments": h.n_segments,
        "samples_dropped": h.samples_dropped,
        "window_kind": h.window_kind,
        "window_size": h.window_size,
        "window_overlap": h.window_overlap,
        "nfft": h.nfft,
        "n_bins": h.n_bins,
        "frequency_step": h.frequency_step,
        "psd_units": PSD_UNITS,
        "spl_units": SPL_UNITS,
        "tol": tol,
    }


def _dumps(obj) -> str:
    return json.dumps(obj, allow_nan=False, separators=(", ", ": "))


def emit_record(record: MetricRecord, sink):
    """Write ``record`` to ``sink`` as a single NDJSON line."""
    sink.write(_dumps(record_to_dict(record)) + "\n")


def emit_header(header: FileHeader, sink):
    sink.write(_dumps(header_to_dict(header)) + "\n")


def csv_columns(header: FileHeader) -> List[str]:
    cols = ["file", "segment_index", "timestamp", "n_frames", "spl_db", "quality"]
    cols += [f"welch_{k}" for k in range(header.n_bins)]
    if header.tol_nominal_centers is not None:
        cols += [f"tol_{c:g}Hz" for c in header.tol_nominal_centers]
    return cols


def _csv_cell(v):
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def csv_row(record: MetricRecord) -> str:
    d = record_to_dict(record)
    cells = [d["file"], d["segment_index"], d["timestamp"], d["n_frames"],
             d["spl_db"], ";".join(d["quality"])]
    cells += d["welch"]
    if d["tol"] is not None:
        cells += d["tol"]
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow([_csv_cell(c) for c in cells])
    return buf.getvalue()


def csv_header_line(columns: Sequence[str]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(columns)
    return buf.getvalue()


class RecordSink:
    """Format-specific writer for one file's output (header plus records).

    In CSV mode the column header is not written here: the run-level writer
    emits it whenever the column layout changes between files.
    """

    def __init__(self, stream, fmt: str = "ndjson"):
        if fmt not in ("ndjson", "csv"):
            raise ValueError(f"unknown output format {fmt!r}")
        self.stream = stream
        self.fmt = fmt

    def header(self, header: FileHeader):
        if self.fmt == "ndjson":
            emit_header(header, self.stream)

    def record(self, record: MetricRecord):
        if self.fmt == "ndjson":
            emit_record(record, self.stream)
        else:
            self.stream.write(csv_row(record))
