"""Exception hierarchy shared by every stage of the pipeline."""


class SoundscapeError(Exception):
    """Base class for all errors raised by soundscape_metrics."""


class ConfigError(SoundscapeError, ValueError):
    """Invalid processing parameter (window size, sensitivity, ...)."""


class MetadataSchemaError(SoundscapeError, ValueError):
    """Metadata CSV is missing required columns or repeats a filename."""


class TimestampFormatError(SoundscapeError, ValueError):
    """A timestamp is not ISO-8601 or carries no timezone."""


class UnsupportedFormatError(SoundscapeError):
    """WAV file uses an encoding we do not decode (e.g. ADPCM)."""


class CorruptFileError(SoundscapeError):
    """WAV file is malformed or its data chunk is truncated."""


class ShapeError(SoundscapeError, ValueError):
    """Array dimensions do not agree."""


class EmptySegmentError(SoundscapeError, ValueError):
    """A segment produced no analysis frames to average."""


class TolConfigError(ConfigError):
    """Third-octave level preconditions are not met."""
