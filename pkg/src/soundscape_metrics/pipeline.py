"""Corpus-level orchestration: config, per-file analysis, ordered parallel output.

Each file listed in the metadata CSV is an independent job. Jobs run on a
bounded process pool; every job writes its lines to a private part file and
the parent concatenates the parts strictly in CSV order, so the output bytes
do not depend on the number of workers.
"""
from __future__ import annotations

import logging
import os
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .audio_io import CalibratedSignal, WavReader, calibrate_samples, sensitivity_factor
from .errors import (ConfigError, CorruptFileError, EmptySegmentError,
                     TolConfigError, UnsupportedFormatError)
from .metadata import AudioFileDescriptor, offset_instant, read_metadata
from .metrics import (TolBandSet, band_powers, check_tol_preconditions, spl,
                      tol_bands, tol_from_band_power, warn_low_frequency_accuracy)
from .output import FileHeader, MetricRecord, RecordSink, csv_columns, csv_header_line
from .segmentation import (SegmentationConfig, WindowKind, apply_window, count_frames,
                           frame_segment, iter_frame_blocks, make_window, split_segments)
from .spectral import WelchAccumulator, frame_psds

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_INCOMPLETE = 2


@dataclass(frozen=True)
class PipelineConfig:
    metadata_path: Optional[str] = None
    audio_dir: Optional[str] = None
    output_path: Optional[str] = None
    sensitivity_db: float = 0.0
    segment_duration: Optional[float] = None
    window_size: Optional[int] = None
    window_overlap: int = 0
    nfft: Optional[int] = None
    window_kind: str = WindowKind.HAMMING_PERIODIC.value
    tol_enabled: bool = False
    tol_low_freq: float = 1.0
    tol_high_freq: Optional[float] = None
    worker_count: int = 1
    output_format: str = "ndjson"

    def segmentation(self) -> SegmentationConfig:
        if self.segment_duration is None:
            raise ConfigError("segment_duration is required")
        if self.window_size is None:
            raise ConfigError("window_size is required")
        try:
            kind = WindowKind(self.window_kind)
        except ValueError:
            raise ConfigError(f"unknown window_kind {self.window_kind!r}") from None
        return SegmentationConfig(self.segment_duration, self.window_size,
                                  self.window_overlap, self.nfft, kind)

    def validate(self) -> "PipelineConfig":
        """Check everything that does not depend on a particular file."""
        for name in ("metadata_path", "audio_dir", "output_path"):
            if not getattr(self, name):
                raise ConfigError(f"{name} is required")
        self.segmentation()
        sensitivity_factor(self.sensitivity_db)
        if self.worker_count < 1:
            raise ConfigError(f"worker_count must be >= 1, got {self.worker_count}")
        if self.output_format not in ("ndjson", "csv"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if self.tol_enabled:
            if self.tol_low_freq < 1.0:
                raise TolConfigError(
                    f"Incorrect lowFreq ({self.tol_low_freq:g}) for TOL, it should be higher than 1.0."
                )
            if self.tol_high_freq is not None and self.tol_high_freq <= self.tol_low_freq:
                raise TolConfigError("Incorrect lowFreq,highFreq for TOL, lowFreq is higher than highFreq.")
        return self


@dataclass
class SpectralResult:
    welch: np.ndarray
    spl_db: float
    tol: Optional[np.ndarray]
    n_frames: int


@dataclass
class FileOutcome:
    name: str
    status: str  # "processed" or "skipped"
    reason: str = ""
    segments_emitted: int = 0
    samples_dropped: int = 0
    csv_columns: Optional[Tuple[str, ...]] = None
    part_path: Optional[str] = None


@dataclass
class RunSummary:
    files_in_csv: int = 0
    files_processed: int = 0
    files_skipped: int = 0
    segments_emitted: int = 0
    samples_dropped: int = 0
    skipped: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        if self.segments_emitted == 0 or self.files_skipped:
            return EXIT_INCOMPLETE
        return EXIT_OK


def analyse_frame_blocks(blocks: Iterable[np.ndarray], sample_rate: float,
                         config: SegmentationConfig, window: np.ndarray,
                         bands: Optional[TolBandSet] = None) -> SpectralResult:
    """Welch PSD, SPL and optional TOL from un-windowed, calibrated frame blocks.

    Frames are reduced left to right in arrival order, so any block split of
    the same frames gives bit-identical results.
    """
    psd_acc = WelchAccumulator()
    band_acc = WelchAccumulator()
    for frames in blocks:
        if frames.shape[0] == 0:
            continue
        psds = frame_psds(apply_window(frames, window), config.nfft, sample_rate, window)
        psd_acc.add(psds)
        if bands is not None:
            band_acc.add(band_powers(psds, bands))
    welch_values = psd_acc.mean()
    tol_values = tol_from_band_power(band_acc.mean()).values if bands is not None else None
    return SpectralResult(welch_values, spl(welch_values), tol_values, psd_acc.count)


def analyse_segment(samples, sample_rate: float, config: SegmentationConfig,
                    bands: Optional[TolBandSet] = None) -> SpectralResult:
    window = make_window(config.window_kind, config.window_size)
    frames = frame_segment(samples, config.window_size, config.window_overlap)
    if frames.shape[0] == 0:
        raise EmptySegmentError(
            f"segment of {len(samples)} samples holds no {config.window_size}-sample frame"
        )
    return analyse_frame_blocks([frames], sample_rate, config, window, bands)


def analyse_signal(signal: CalibratedSignal, config: SegmentationConfig,
                   bands: Optional[TolBandSet] = None) -> List[Tuple[int, SpectralResult]]:
    """In-memory analysis of a calibrated signal, one result per segment.

    When a segment would be no longer than a window, the whole signal is
    treated as segment 0.
    """
    fs = signal.sample_rate
    if config.whole_file(fs):
        segments = [(0, signal.samples)]
    else:
        segments = split_segments(signal, config.segment_duration)
    out = []
    for index, samples in segments:
        if len(samples) < config.window_size:
            continue
        out.append((index, analyse_segment(samples, fs, config, bands)))
    return out


def _file_header(desc: AudioFileDescriptor, cfg: PipelineConfig, seg: SegmentationConfig,
                 bands: Optional[TolBandSet]) -> FileHeader:
    fs = desc.sample_rate
    size = seg.segment_size(fs)
    whole = seg.whole_file(fs)
    if whole:
        m = count_frames(desc.n_samples, seg.window_size, seg.window_overlap)
        n_segments = 1 if m else 0
        # only the trailing partial frame is discarded
        used = (m - 1) * seg.hop + seg.window_size if m else 0
    else:
        n_segments = desc.n_samples // size
        used = n_segments * size
    return FileHeader(
        file=desc.name, start=desc.start_instant, sample_rate=fs, bit_depth=desc.bit_depth,
        n_channels=desc.n_channels, n_samples=desc.n_samples,
        sensitivity_db=cfg.sensitivity_db, segment_duration=seg.segment_duration,
        segment_size=size, whole_file=whole, n_segments=n_segments,
        samples_dropped=desc.n_samples - used, window_kind=seg.window_kind.value,
        window_size=seg.window_size, window_overlap=seg.window_overlap, nfft=seg.nfft,
        tol_band_indices=None if bands is None else bands.band_indices.tolist(),
        tol_band_centers=None if bands is None else bands.band_centers.tolist(),
        tol_nominal_centers=None if bands is None else bands.nominal_centers,
    )


def process_file(desc: AudioFileDescriptor, cfg: PipelineConfig, stream) -> FileOutcome:
    """Analyse one WAV file and write its header and records to ``stream``.

    Decode and TOL-precondition failures are returned as a skipped outcome;
    nothing is written for a skipped file.
    """
    path = Path(cfg.audio_dir) / desc.name
    seg = cfg.segmentation()
    if not path.is_file():
        log.error("%s: listed in metadata but not found in %s", desc.name, cfg.audio_dir)
        return FileOutcome(desc.name, "skipped", "missing")
    try:
        reader = WavReader(path)
    except (UnsupportedFormatError, CorruptFileError, OSError) as exc:
        log.error("%s: cannot decode: %s", desc.name, exc)
        return FileOutcome(desc.name, "skipped", f"{type(exc).__name__}: {exc}")

    with reader:
        info = reader.info
        desc = desc.with_header(info.sample_rate, info.bit_depth, info.n_frames, info.n_channels)
        fs = desc.sample_rate
        try:
            seg.segment_size(fs)
            bands = None
            if cfg.tol_enabled:
                whole = seg.whole_file(fs)
                length = desc.n_samples if whole else seg.segment_size(fs)
                high = cfg.tol_high_freq if cfg.tol_high_freq is not None else fs / 2
                check_tol_preconditions(fs, seg.nfft, cfg.tol_low_freq, high, signal_length=length)
                bands = tol_bands(fs, seg.nfft, cfg.tol_low_freq, high)
                warn_low_frequency_accuracy(seg.segment_duration, cfg.tol_low_freq)
        except ConfigError as exc:
            log.error("%s: %s", desc.name, exc)
            return FileOutcome(desc.name, "skipped", f"{type(exc).__name__}: {exc}")

        header = _file_header(desc, cfg, seg, bands)
        sink = RecordSink(stream, cfg.output_format)
        sink.header(header)
        window = make_window(seg.window_kind, seg.window_size)
        emitted = 0
        try:
            for index, result in _iter_file_results(reader, cfg, seg, window, bands, header):
                sink.record(MetricRecord(
                    file=desc.name, segment_index=index,
                    timestamp=offset_instant(desc.start_instant, index * seg.segment_duration),
                    spl_db=result.spl_db, welch=result.welch, tol=result.tol,
                    n_frames=result.n_frames,
                ))
                emitted += 1
        except CorruptFileError as exc:
            log.error("%s: %s", desc.name, exc)
            return FileOutcome(desc.name, "skipped", f"{type(exc).__name__}: {exc}")

    return FileOutcome(desc.name, "processed", segments_emitted=emitted,
                       samples_dropped=header.samples_dropped,
                       csv_columns=tuple(csv_columns(header)))


def _iter_file_results(reader, cfg, seg, window, bands, header):
    fs = header.sample_rate
    if header.whole_file:
        if header.n_segments == 0:
            return
        blocks = (calibrate_samples(b, cfg.sensitivity_db)
                  for b in iter_frame_blocks(reader, seg.window_size, seg.window_overlap))
        yield 0, analyse_frame_blocks(blocks, fs, seg, window, bands)
        return
    size = header.segment_size
    for index in range(header.n_segments):
        samples = calibrate_samples(reader.read(index * size, size), cfg.sensitivity_db)
        frames = frame_segment(samples, seg.window_size, seg.window_overlap)
        yield index, analyse_frame_blocks([frames], fs, seg, window, bands)


def _run_job(args) -> FileOutcome:
    desc, cfg, part_path = args
    with open(part_path, "w", encoding="utf-8", newline="") as fh:
        outcome = process_file(desc, cfg, fh)
    outcome.part_path = part_path
    return outcome


def _iter_outcomes(jobs, workers: int):
    """Yield job outcomes in submission order, at most ``2 * workers`` in flight."""
    if workers == 1:
        for job in jobs:
            yield _run_job(job)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        pending = []
        for job in jobs:
            pending.append(pool.submit(_run_job, job))
            if len(pending) >= 2 * workers:
                yield pending.pop(0).result()
        for fut in pending:
            yield fut.result()


def run(config: PipelineConfig) -> RunSummary:
    """Process every file of the metadata CSV and write the metric records.

    Raises on fatal problems (bad config, unreadable metadata, unwritable
    output). Per-file problems are logged, skipped and counted.
    """
    config.validate()
    descriptors = read_metadata(config.metadata_path)
    summary = RunSummary(files_in_csv=len(descriptors))
    out_dir = os.path.dirname(os.path.abspath(config.output_path))

    with open(config.output_path, "w", encoding="utf-8", newline="") as out, \
            tempfile.TemporaryDirectory(prefix=".soundscape-parts-", dir=out_dir) as tmp:
        jobs = [(d, config, os.path.join(tmp, f"{i:08d}.part")) for i, d in enumerate(descriptors)]
        current_columns = None
        for outcome in _iter_outcomes(jobs, min(config.worker_count, max(len(jobs), 1))):
            if outcome.status == "skipped":
                summary.files_skipped += 1
                summary.skipped.append((outcome.name, outcome.reason))
            else:
                summary.files_processed += 1
                summary.segments_emitted += outcome.segments_emitted
                summary.samples_dropped += outcome.samples_dropped
                if (config.output_format == "csv" and outcome.segments_emitted
                        and outcome.csv_columns != current_columns):
                    out.write(csv_header_line(outcome.csv_columns))
                    current_columns = outcome.csv_columns
                with open(outcome.part_path, encoding="utf-8", newline="") as part:
                    shutil.copyfileobj(part, out)
            os.remove(outcome.part_path)
    log.info("%d/%d files processed, %d skipped, %d segments written",
             summary.files_processed, summary.files_in_csv, summary.files_skipped,
             summary.segments_emitted)
    return summary


_BOOL = {"true": True, "yes": True, "on": True, "1": True,
         "false": False, "no": False, "off": False, "0": False}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into typed :class:`PipelineConfig` fields.

    Blank lines and ``#`` comments are ignored; ``none`` clears an optional
    value. Unknown keys are an error.
    """
    types = {f.name: f.type for f in fields(PipelineConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        raw = raw.strip("\"'")
        if key not in types:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw, types[key], lineno)
    return values


def _coerce(key, raw, type_name, lineno):
    if raw.lower() == "none" and "Optional" in type_name:
        return None
    try:
        if "bool" in type_name:
            return _BOOL[raw.lower()]
        if "int" in type_name:
            return int(raw)
        if "float" in type_name:
            return float(raw)
    except (KeyError, ValueError):
        raise ConfigError(f"config line {lineno}: bad value {raw!r} for {key}") from None
    return raw


def load_config(path) -> PipelineConfig:
    """Read a config file; relative paths resolve against the file's directory."""
    path = Path(path)
    values = parse_config_text(path.read_text(encoding="utf-8"))
    for key in ("metadata_path", "audio_dir", "output_path"):
        if values.get(key):
            p = Path(values[key]).expanduser()
            values[key] = str(p if p.is_absolute() else path.parent / p)
    return PipelineConfig(**values)


def merge_config(base: PipelineConfig, **overrides) -> PipelineConfig:
    return replace(base, **{k: v for k, v in overrides.items() if v is not None})
