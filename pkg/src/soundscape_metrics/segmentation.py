"""Two-level segmentation: integration segments, then analysis frames.

Truncated material is always dropped, never zero-padded: the trailing
remainder of a file that does not fill a segment, and the trailing partial
frame of a segment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Tuple

import numpy as np

from .errors import ConfigError, ShapeError


class WindowKind(str, Enum):
    HAMMING_PERIODIC = "hamming_periodic"
    RECTANGULAR = "rectangular"


@dataclass(frozen=True)
class SegmentationConfig:
    """Segment/frame geometry.

    ``window_overlap`` is in samples; the fractional overlap of the textbook
    formulation is ``window_overlap / window_size``.
    """

    segment_duration: float
    window_size: int
    window_overlap: int = 0
    nfft: int = None
    window_kind: WindowKind = WindowKind.HAMMING_PERIODIC

    def __post_init__(self):
        if self.nfft is None:
            object.__setattr__(self, "nfft", self.window_size)
        object.__setattr__(self, "window_kind", WindowKind(self.window_kind))
        if not (math.isfinite(self.segment_duration) and self.segment_duration > 0):
            raise ConfigError(f"segment_duration must be positive, got {self.segment_duration}")
        if self.window_size < 1:
            raise ConfigError(f"window_size must be >= 1, got {self.window_size}")
        if not 0 <= self.window_overlap < self.window_size:
            raise ConfigError(
                f"window_overlap must satisfy 0 <= overlap < window_size, got {self.window_overlap}"
            )
        if self.nfft < self.window_size:
            raise ConfigError(f"nfft ({self.nfft}) must be >= window_size ({self.window_size})")

    @property
    def hop(self) -> int:
        return self.window_size - self.window_overlap

    def segment_size(self, sample_rate: float) -> int:
        return segment_size(self.segment_duration, sample_rate)

    def whole_file(self, sample_rate: float) -> bool:
        """True when segments are no longer than a window: the file is one segment."""
        return self.segment_size(sample_rate) <= self.window_size


@dataclass(frozen=True)
class FrameSet:
    frames: np.ndarray
    window: np.ndarray
    segment_index: int
    config: SegmentationConfig

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


def segment_size(segment_duration: float, sample_rate: float) -> int:
    """``floor(duration * fs)``, the sample length of one integration segment."""
    size = int(math.floor(segment_duration * sample_rate))
    if size <= 0:
        raise ConfigError(
            f"segment of {segment_duration} s at {sample_rate} Hz contains no samples"
        )
    return size


def split_segments(signal, segment_duration: float) -> List[Tuple[int, np.ndarray]]:
    """Cut a calibrated signal into contiguous, non-overlapping segments.

    The trailing partial segment is discarded. Returned arrays are views.
    """
    size = segment_size(segment_duration, signal.sample_rate)
    x = signal.samples
    n = len(x) // size
    return [(s, x[s * size:(s + 1) * size]) for s in range(n)]


def count_frames(length: int, window_size: int, overlap: int) -> int:
    """Number of complete frames: ``floor((L - overlap) / hop)``, or 0 if L < N."""
    if length < window_size:
        return 0
    return (length - overlap) // (window_size - overlap)


def frame_segment(segment, window_size: int, overlap: int) -> np.ndarray:
    """Return an M x N matrix of frames starting at multiples of the hop.

    A segment shorter than one window yields an empty (0 x N) matrix.
    """
    if window_size < 1:
        raise ConfigError(f"window_size must be >= 1, got {window_size}")
    if not 0 <= overlap < window_size:
        raise ConfigError(f"overlap must satisfy 0 <= overlap < window_size, got {overlap}")
    x = np.asarray(segment, dtype=np.float64)
    hop = window_size - overlap
    m = count_frames(len(x), window_size, overlap)
    if m == 0:
        return np.empty((0, window_size))
    view = np.lib.stride_tricks.sliding_window_view(x, window_size)[::hop]
    return np.array(view[:m])


def make_window(kind, size: int) -> np.ndarray:
    """Periodic Hamming, ``0.54 - 0.46 cos(2 pi n / N)``, or a rectangular window."""
    if size < 1:
        raise ConfigError(f"window size must be >= 1, got {size}")
    kind = WindowKind(kind)
    if kind is WindowKind.RECTANGULAR:
        return np.ones(size)
    n = np.arange(size)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / size)


def apply_window(frames, window) -> np.ndarray:
    frames = np.asarray(frames, dtype=np.float64)
    window = np.asarray(window, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[1] != window.shape[0]:
        raise ShapeError(
            f"window of length {window.shape[0]} does not match frames of shape {frames.shape}"
        )
    return frames * window


def coherent_gain(window) -> float:
    """Mean of the window, the amplitude-reduction factor alpha."""
    return float(np.mean(window))


def noise_power_bandwidth(window) -> float:
    """Noise power bandwidth in bins, ``N * sum(w**2) / sum(w)**2``.

    Equivalent to ``(1/N) * sum((w / alpha)**2)`` with alpha the coherent gain;
    about 1.36 for a Hamming window, exactly 1 for a rectangular one.
    """
    w = np.asarray(window, dtype=np.float64)
    total = w.sum()
    if not np.any(w) or total == 0.0:
        raise ConfigError("noise power bandwidth undefined for a zero-sum window")
    return float(len(w) * np.dot(w, w) / (total * total))


def make_frameset(segment, segment_index: int, config: SegmentationConfig) -> FrameSet:
    window = make_window(config.window_kind, config.window_size)
    frames = frame_segment(segment, config.window_size, config.window_overlap)
    return FrameSet(apply_window(frames, window), window, segment_index, config)


def iter_frame_blocks(reader, window_size: int, overlap: int,
                      block_frames: int = 256) -> Iterator[np.ndarray]:
    """Stream the complete frames of a whole file in blocks of ``block_frames``.

    ``reader`` needs ``info.n_frames`` and ``read(start, count)``. Frames match
    ``frame_segment(full_signal, ...)`` exactly, without loading the file.
    """
    total = count_frames(reader.info.n_frames, window_size, overlap)
    hop = window_size - overlap
    for first in range(0, total, block_frames):
        m = min(block_frames, total - first)
        start = first * hop
        span = (m - 1) * hop + window_size
        yield frame_segment(reader.read(start, span), window_size, overlap)[:m]
