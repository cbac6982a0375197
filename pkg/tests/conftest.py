import numpy as np
import pytest

from soundscape_metrics.audio_io import write_wav

ACCEPTANCE_LINES = []


def naive_dft(x, nfft):
    """Direct O(N * nfft) DFT sum over non-negative bins, x zero-padded to nfft."""
    x = np.asarray(x, dtype=np.float64)
    n = np.arange(len(x))
    k = np.arange(nfft // 2 + 1)
    # reduce k*n mod nfft before scaling so the phase stays exact for large products
    phase = -2.0 * np.pi * ((k[:, None] * n[None, :]) % nfft) / nfft
    return (np.cos(phase) + 1j * np.sin(phase)) @ x


@pytest.fixture
def rng():
    return np.random.default_rng(20100101)


@pytest.fixture
def make_corpus(tmp_path):
    """Build an audio dir + metadata CSV from {name: (samples, fs)}."""

    def _make(files, start="2010-01-01T00:00:00Z", bit_depth=16, extra_rows=()):
        audio = tmp_path / "audio"
        audio.mkdir(exist_ok=True)
        rows = ["filename,start_date"]
        for name, (samples, fs) in files.items():
            write_wav(audio / name, samples, fs, bit_depth=bit_depth)
            rows.append(f"{name},{start}")
        rows.extend(extra_rows)
        meta = tmp_path / "metadata.csv"
        meta.write_text("\n".join(rows) + "\n")
        return meta, audio

    return _make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
