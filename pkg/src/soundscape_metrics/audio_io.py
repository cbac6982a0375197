"""RIFF/WAVE decoding and scalar hydrophone calibration.

Integer PCM is mapped to floats in [-1, 1) by dividing by 2**(bits - 1), the
same full-scale convention as ``audioread(..., 'double')``. The calibration
constant therefore refers to digital full scale, not to raw integer counts.
"""
from __future__ import annotations

import logging
import math
import os
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, CorruptFileError, UnsupportedFormatError
from .metadata import AudioFileDescriptor

log = logging.getLogger(__name__)

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True)
class WavInfo:
    format_code: int
    sample_rate: float
    bit_depth: int
    n_channels: int
    n_frames: int
    data_offset: int

    @property
    def block_align(self):
        return self.n_channels * (self.bit_depth // 8)


@dataclass
class RawAudio:
    """Decoded first channel of a WAV file, normalized to digital full scale."""

    samples: np.ndarray
    sample_rate: float
    channel_count: int
    bit_depth: int


@dataclass
class CalibratedSignal:
    """Pressure waveform in µPa after applying the hydrophone sensitivity."""

    samples: np.ndarray
    sample_rate: float
    source: Optional[AudioFileDescriptor] = None


def _parse_header(fh, path) -> WavInfo:
    fh.seek(0, os.SEEK_END)
    file_size = fh.tell()
    fh.seek(0)
    riff = fh.read(12)
    if len(riff) < 12 or riff[:4] != b"RIFF" or riff[8:12] != b"WAVE":
        raise CorruptFileError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    while True:
        head = fh.read(8)
        if len(head) < 8:
            break
        chunk_id, size = struct.unpack("<4sI", head)
        start = fh.tell()
        if chunk_id == b"fmt ":
            body = fh.read(size)
            if len(body) < 16:
                raise CorruptFileError(f"{path}: fmt chunk too short ({len(body)} bytes)")
            code, channels, rate, _, _, bits = struct.unpack("<HHIIHH", body[:16])
            if code == WAVE_FORMAT_EXTENSIBLE:
                if len(body) < 26:
                    raise CorruptFileError(f"{path}: truncated WAVE_FORMAT_EXTENSIBLE fmt chunk")
                # first two bytes of the SubFormat GUID carry the actual format code
                code = struct.unpack("<H", body[24:26])[0]
            fmt = (code, channels, rate, bits)
        elif chunk_id == b"data":
            if fmt is None:
                raise CorruptFileError(f"{path}: data chunk precedes fmt chunk")
            code, channels, rate, bits = fmt
            _check_format(path, code, bits, channels, rate)
            available = file_size - start
            if size > available:
                raise CorruptFileError(
                    f"{path}: truncated data chunk, expected {size} bytes, found {available}"
                )
            block = channels * (bits // 8)
            if size % block:
                raise CorruptFileError(
                    f"{path}: data chunk size {size} is not a multiple of the {block}-byte frame"
                )
            return WavInfo(code, float(rate), bits, channels, size // block, start)
        fh.seek(start + size + (size & 1))
    if fmt is None:
        raise CorruptFileError(f"{path}: missing fmt chunk")
    raise CorruptFileError(f"{path}: missing data chunk")


def _check_format(path, code, bits, channels, rate):
    if code == WAVE_FORMAT_PCM:
        if bits not in (8, 16, 24, 32):
            raise UnsupportedFormatError(f"{path}: {bits}-bit integer PCM is not supported")
    elif code == WAVE_FORMAT_IEEE_FLOAT:
        if bits != 32:
            raise UnsupportedFormatError(f"{path}: only 32-bit IEEE float is supported, got {bits}-bit")
    else:
        raise UnsupportedFormatError(f"{path}: WAV format code {code:#06x} is not PCM or IEEE float")
    if channels < 1:
        raise CorruptFileError(f"{path}: zero channels declared")
    if rate <= 0:
        raise CorruptFileError(f"{path}: sample rate must be positive")


def _decode(raw: bytes, info: WavInfo) -> np.ndarray:
    """Decode interleaved bytes to float64 frames x channels."""
    bits = info.bit_depth
    if info.format_code == WAVE_FORMAT_IEEE_FLOAT:
        data = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    elif bits == 8:
        data = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    elif bits == 24:
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        ints = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
        data = ints.astype(np.float64) / float(1 << 23)
    else:
        dtype = "<i2" if bits == 16 else "<i4"
        data = np.frombuffer(raw, dtype=dtype).astype(np.float64) / float(1 << (bits - 1))
    return data.reshape(-1, info.n_channels)


class WavReader:
    """Random-access reader returning channel 1 of a WAV file as floats.

    Only the requested frames are read from disk, so long recordings can be
    processed in segment-sized chunks.
    """

    def __init__(self, path):
        self.path = os.fspath(path)
        self._fh = open(self.path, "rb")
        try:
            self.info = _parse_header(self._fh, self.path)
        except BaseException:
            self._fh.close()
            raise
        if self.info.n_channels > 1:
            log.warning("%s: %d channels, only channel 1 is analysed",
                        self.path, self.info.n_channels)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        self._fh.close()

    def read(self, start: int = 0, count: Optional[int] = None) -> np.ndarray:
        """Return frames ``[start, start + count)`` of channel 1."""
        n = self.info.n_frames
        if count is None:
            count = n - start
        if start < 0 or count < 0 or start + count > n:
            raise ValueError(f"frame range [{start}, {start + count}) outside [0, {n})")
        block = self.info.block_align
        self._fh.seek(self.info.data_offset + start * block)
        raw = self._fh.read(count * block)
        if len(raw) != count * block:
            raise CorruptFileError(
                f"{self.path}: expected {count * block} bytes, read {len(raw)}"
            )
        return _decode(raw, self.info)[:, 0].copy()


def read_wav(path) -> RawAudio:
    """Decode a whole WAV file (channel 1 only) to a :class:`RawAudio`."""
    with WavReader(path) as reader:
        samples = reader.read()
        info = reader.info
    return RawAudio(samples, info.sample_rate, info.n_channels, info.bit_depth)


def sensitivity_factor(sensitivity_db: float) -> float:
    if not math.isfinite(sensitivity_db):
        raise ConfigError(f"sensitivity must be finite, got {sensitivity_db!r}")
    return 10.0 ** (sensitivity_db / 20.0)


def calibrate_samples(samples, sensitivity_db: float) -> np.ndarray:
    """Divide ``samples`` by 10**(S/20), S in dB re 1 V/µPa."""
    return np.asarray(samples, dtype=np.float64) / sensitivity_factor(sensitivity_db)


def calibrate(raw: RawAudio, sensitivity_db: float,
              source: Optional[AudioFileDescriptor] = None) -> CalibratedSignal:
    return CalibratedSignal(calibrate_samples(raw.samples, sensitivity_db), raw.sample_rate, source)


def write_wav(path, samples, sample_rate: int, bit_depth: int = 16, n_channels: int = 1,
              float_format: bool = False):
    """Write a PCM or float WAV. Used to build fixtures and synthetic corpora.

    ``samples`` is either 1-D (replicated across channels) or frames x
    channels, in full-scale units; integer formats are clipped and rounded.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = np.repeat(x[:, None], n_channels, axis=1)
    n_channels = x.shape[1]
    if float_format:
        code = WAVE_FORMAT_IEEE_FLOAT
        if bit_depth != 32:
            raise ValueError("float WAVs are written as 32-bit")
        payload = x.astype("<f4").tobytes()
    else:
        code = WAVE_FORMAT_PCM
        full = float(1 << (bit_depth - 1))
        ints = np.clip(np.round(x * full), -full, full - 1).astype(np.int64)
        if bit_depth == 8:
            payload = (ints + 128).astype(np.uint8).tobytes()
        elif bit_depth == 24:
            u = (ints & 0xFFFFFF).astype(np.uint32)
            payload = np.stack([u & 0xFF, (u >> 8) & 0xFF, (u >> 16) & 0xFF], axis=-1).astype(np.uint8).tobytes()
        else:
            payload = ints.astype("<i2" if bit_depth == 16 else "<i4").tobytes()
    block = n_channels * bit_depth // 8
    fmt = struct.pack("<HHIIHH", code, n_channels, int(sample_rate),
                      int(sample_rate) * block, block, bit_depth)
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", 4 + 8 + len(fmt) + 8 + len(payload) + (len(payload) & 1)) + b"WAVE")
        fh.write(b"fmt " + struct.pack("<I", len(fmt)) + fmt)
        fh.write(b"data" + struct.pack("<I", len(payload)) + payload)
        if len(payload) & 1:
            fh.write(b"\x00")
