"""One-sided power spectra, density-normalized PSD and Welch averaging.

The PSD normalization is ``|X|**2 / (fs * sum(w**2))`` with non-DC,
non-Nyquist bins doubled. Written as ``P / (B * df)`` with the 1/N**2-scaled
power ``P``, noise bandwidth ``B`` and ``df = fs / nfft``, the window's
coherent gain cancels exactly, so the window is applied un-normalized.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, EmptySegmentError, ShapeError


def spectrum_size(nfft: int) -> int:
    """Number of one-sided bins: nfft//2 + 1 (covers both even and odd nfft)."""
    return nfft // 2 + 1


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    nfft: int
    sample_rate: Optional[float] = None


@dataclass(frozen=True)
class PsdVector:
    values: np.ndarray
    frequency_step: float

    def frequencies(self) -> np.ndarray:
        return np.arange(self.values.shape[-1]) * self.frequency_step


@dataclass(frozen=True)
class WelchVector:
    values: np.ndarray
    n_frames_averaged: int


def one_sided_dft(frame, nfft: int, sample_rate: Optional[float] = None) -> Spectrum:
    """DFT of ``frame`` zero-padded to ``nfft``, non-negative frequencies only.

    ``frame`` may be a single frame or an M x N matrix of frames (one DFT per
    row).
    """
    x = np.asarray(frame, dtype=np.float64)
    if nfft < x.shape[-1]:
        raise ConfigError(f"nfft ({nfft}) is shorter than the frame ({x.shape[-1]})")
    return Spectrum(np.fft.rfft(x, n=nfft, axis=-1), nfft, sample_rate)


def power_spectrum(spec: Spectrum) -> np.ndarray:
    """``|X|**2`` with every bin doubled except DC and (even nfft) Nyquist."""
    p = np.abs(spec.values) ** 2
    k = p.shape[-1]
    stop = k - 1 if spec.nfft % 2 == 0 else k
    p[..., 1:stop] *= 2.0
    return p


def psd_norm_factor(sample_rate: float, window) -> float:
    w = np.asarray(window, dtype=np.float64)
    energy = float(np.dot(w, w))
    if energy == 0.0:
        raise ConfigError("PSD normalization undefined for an all-zero window")
    return 1.0 / (sample_rate * energy)


def psd(power, sample_rate: float, window, nfft: Optional[int] = None) -> PsdVector:
    """Density-normalize a one-sided power spectrum to µPa²/Hz.

    ``nfft`` only sets the frequency step of the result; when omitted it is
    inferred as the window length (no zero padding).
    """
    power = np.asarray(power, dtype=np.float64)
    factor = psd_norm_factor(sample_rate, window)
    if nfft is None:
        nfft = len(window)
    return PsdVector(power * factor, sample_rate / nfft)


class WelchAccumulator:
    """Running left-to-right sum of PSD rows.

    Rows are added one at a time in arrival order, so feeding the same rows in
    blocks of any size yields bit-identical means.
    """

    def __init__(self):
        self._sum = None
        self.count = 0

    def add(self, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        for row in rows:
            if self._sum is None:
                self._sum = row.copy()
            elif row.shape != self._sum.shape:
                raise ShapeError(f"PSD row of length {row.shape[0]} does not match {self._sum.shape[0]}")
            else:
                self._sum += row
            self.count += 1

    def mean(self) -> np.ndarray:
        if self.count == 0:
            raise EmptySegmentError("no frames to average")
        return self._sum / self.count


def welch(psds) -> WelchVector:
    """Arithmetic mean of the M PSD rows of one segment, in linear units."""
    psds = np.asarray(psds, dtype=np.float64)
    if psds.ndim != 2:
        raise ShapeError(f"expected an M x K matrix, got shape {psds.shape}")
    acc = WelchAccumulator()
    acc.add(psds)
    return WelchVector(acc.mean(), acc.count)


def frame_psds(windowed_frames, nfft: int, sample_rate: float, window) -> np.ndarray:
    """M x K matrix of per-frame PSDs for already-windowed frames."""
    spec = one_sided_dft(windowed_frames, nfft, sample_rate)
    return psd(power_spectrum(spec), sample_rate, window, nfft).values
