"""Standardized underwater soundscape metrics: Welch PSD, third-octave levels, SPL."""
from .audio_io import CalibratedSignal, RawAudio, WavReader, calibrate, read_wav, write_wav
from .errors import (ConfigError, CorruptFileError, EmptySegmentError, MetadataSchemaError,
                     ShapeError, SoundscapeError, TimestampFormatError, TolConfigError,
                     UnsupportedFormatError)
from .metadata import AudioFileDescriptor, format_iso8601, parse_metadata, parse_timestamp
from .metrics import TolBandSet, TolVector, spl, tol, tol_bands
from .output import MetricRecord, emit_record
from .pipeline import PipelineConfig, RunSummary, analyse_signal, load_config, run
from .segmentation import (FrameSet, SegmentationConfig, WindowKind, apply_window,
                           frame_segment, make_window, noise_power_bandwidth, split_segments)
from .spectral import PsdVector, Spectrum, WelchVector, one_sided_dft, power_spectrum, psd, welch

__version__ = "0.1.0"

__all__ = [
    "AudioFileDescriptor", "CalibratedSignal", "ConfigError", "CorruptFileError",
    "EmptySegmentError", "FrameSet", "MetadataSchemaError", "MetricRecord", "PipelineConfig",
    "PsdVector", "RawAudio", "RunSummary", "SegmentationConfig", "ShapeError",
    "SoundscapeError", "Spectrum", "TimestampFormatError", "TolBandSet", "TolConfigError",
    "TolVector", "UnsupportedFormatError", "WavReader", "WelchVector", "WindowKind",
    "analyse_signal", "apply_window", "calibrate", "emit_record", "format_iso8601",
    "frame_segment", "load_config", "make_window", "noise_power_bandwidth", "one_sided_dft",
    "parse_metadata", "parse_timestamp", "power_spectrum", "psd", "read_wav", "run", "spl",
    "split_segments", "tol", "tol_bands", "welch", "write_wav",
]
