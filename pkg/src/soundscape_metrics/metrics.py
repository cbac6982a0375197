"""Third-octave levels and broadband SPL from density-normalized PSDs.

Levels are in dB re 1 µPa² (p_ref = 1 µPa, so no further division). Band
centres are the base-ten exact values 10**(i/10); edges sit a factor
10**0.05 either side.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, TolConfigError
from .spectral import WelchVector, spectrum_size

log = logging.getLogger(__name__)

N_CANDIDATE_BANDS = 60
TOC_SCALING = 10.0 ** 0.05
LOW_FREQ_LIMIT = 1.0

# preferred (nominal) labels for one decade of base-ten third-octave centres
_NOMINAL_DECADE = (1.0, 1.25, 1.6, 2.0, 2.5, 3.15, 4.0, 5.0, 6.3, 8.0)


def nominal_center(i: int) -> float:
    """Rounded label for band ``i``, e.g. 100.0 for i=20, 630.0 for i=28."""
    decade, step = divmod(i, 10)
    return _NOMINAL_DECADE[step] * 10.0 ** decade


@dataclass(frozen=True)
class TolBandSet:
    band_indices: np.ndarray
    band_centers: np.ndarray
    band_bounds: np.ndarray
    bin_ranges: np.ndarray
    sample_rate: float
    nfft: int

    def __len__(self):
        return len(self.band_indices)

    @property
    def nominal_centers(self):
        return [nominal_center(int(i)) for i in self.band_indices]


@dataclass(frozen=True)
class TolVector:
    values: np.ndarray


def check_tol_preconditions(sample_rate: float, nfft: int, low_freq: float, high_freq: float,
                            signal_length: int = None):
    """Raise :class:`TolConfigError` if TOL cannot be computed on 1 Hz bins."""
    if signal_length is not None and signal_length < sample_rate:
        raise TolConfigError(
            "Signal incompatible with TOL computation, it should be longer than a second."
        )
    if nfft != round(sample_rate):
        raise TolConfigError(
            f"Incorrect window for TOL (nfft={nfft}), it should be of size sampleRate ({sample_rate:g})."
        )
    if low_freq < LOW_FREQ_LIMIT:
        raise TolConfigError(
            f"Incorrect lowFreq ({low_freq:g}) for TOL, it should be higher than 1.0."
        )
    if high_freq > sample_rate / 2:
        raise TolConfigError(
            f"Incorrect highFreq ({high_freq:g}) for TOL, it should be lower than sampleRate/2."
        )
    if low_freq >= high_freq:
        raise TolConfigError(
            f"Incorrect lowFreq,highFreq ({low_freq:g}, {high_freq:g}) for TOL, "
            "lowFreq is higher than highFreq."
        )


def tol_bands(sample_rate: float, nfft: int, low_freq: float = LOW_FREQ_LIMIT,
              high_freq: float = None) -> TolBandSet:
    """Select the third-octave bands usable at this sample rate and range.

    A candidate band i (0..59) is kept when its upper edge lies strictly below
    Nyquist, its upper edge is >= ``low_freq`` and its lower edge is below
    ``high_freq``. Each band maps to the half-open PSD bin range
    ``[floor(lower * nfft / fs), floor(upper * nfft / fs))``.
    """
    if high_freq is None:
        high_freq = sample_rate / 2
    check_tol_preconditions(sample_rate, nfft, low_freq, high_freq)

    idx = np.arange(N_CANDIDATE_BANDS)
    centers = 10.0 ** (idx / 10.0)
    lower = centers / TOC_SCALING
    upper = centers * TOC_SCALING
    keep = (upper < sample_rate / 2) & (low_freq <= upper) & (lower < high_freq)

    lower, upper = lower[keep], upper[keep]
    scale = nfft / sample_rate
    bins = np.stack([np.floor(lower * scale), np.floor(upper * scale)], axis=1).astype(np.int64)
    return TolBandSet(
        band_indices=idx[keep],
        band_centers=centers[keep],
        band_bounds=np.stack([lower, upper], axis=1),
        bin_ranges=bins,
        sample_rate=float(sample_rate),
        nfft=int(nfft),
    )


def warn_low_frequency_accuracy(segment_duration: float, low_freq: float):
    if segment_duration < 30.0 and low_freq < 25.0:
        log.warning(
            "third-octave bands below 25 Hz with %.3g s segments: low-frequency "
            "TOL needs about 30 s of signal to be accurate", segment_duration,
        )


def band_powers(psd_frames, bands: TolBandSet) -> np.ndarray:
    """M x B matrix of per-frame summed PSD over each band's bins."""
    p = np.atleast_2d(np.asarray(psd_frames, dtype=np.float64))
    if p.shape[1] != spectrum_size(bands.nfft):
        raise ShapeError(
            f"PSD rows have {p.shape[1]} bins, bands expect {spectrum_size(bands.nfft)}"
        )
    out = np.empty((p.shape[0], len(bands)))
    for j, (lo, hi) in enumerate(bands.bin_ranges):
        out[:, j] = p[:, lo:hi].sum(axis=1)
    return out


def to_db(power):
    """10*log10 with exact zeros mapped to -inf and no runtime warning."""
    power = np.asarray(power, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(power)


def tol_from_band_power(mean_band_power) -> TolVector:
    return TolVector(to_db(mean_band_power))


def tol(psd_frames, bands: TolBandSet) -> TolVector:
    """Third-octave levels of one segment.

    Band power is summed per frame, averaged linearly over the M frames, then
    converted to dB.
    """
    q = band_powers(psd_frames, bands)
    if q.shape[0] == 0:
        raise ShapeError("tol needs at least one frame")
    acc = q[0].copy()
    for row in q[1:]:
        acc += row
    return tol_from_band_power(acc / q.shape[0])


def spl(welch_vector) -> float:
    """Broadband SPL: ``10 log10(sum(welch))`` in dB re 1 µPa."""
    values = welch_vector.values if isinstance(welch_vector, WelchVector) else welch_vector
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ShapeError("spl of an empty Welch vector")
    total = float(np.sum(values))
    return -math.inf if total == 0.0 else 10.0 * math.log10(total)
