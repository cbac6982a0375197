import numpy as np
import pytest
from hypothesis import given, strategies as st

from soundscape_metrics.audio_io import CalibratedSignal, write_wav, WavReader
from soundscape_metrics.errors import ConfigError, ShapeError
from soundscape_metrics.segmentation import (SegmentationConfig, apply_window, coherent_gain,
                                             count_frames, frame_segment, iter_frame_blocks,
                                             make_frameset, make_window, noise_power_bandwidth,
                                             split_segments)


def brute_force_starts(length, n, overlap):
    """Enumerate frame starts by walking the hop while the frame still fits."""
    hop = n - overlap
    starts, s = [], 0
    while s + n <= length:
        starts.append(s)
        s += hop
    return starts


def test_split_paper_example():
    sig = CalibratedSignal(np.arange(3587.0), 1500.0)
    segs = split_segments(sig, 1.0)
    assert [i for i, _ in segs] == [0, 1]
    assert all(len(s) == 1500 for _, s in segs)
    np.testing.assert_array_equal(segs[1][1], np.arange(1500.0, 3000.0))
    assert 3587 - sum(len(s) for _, s in segs) == 587


def test_split_exact_multiple_and_too_short():
    assert len(split_segments(CalibratedSignal(np.zeros(3000), 1500.0), 1.0)) == 2
    assert split_segments(CalibratedSignal(np.zeros(1499), 1500.0), 1.0) == []


def test_split_floors_fractional_size():
    # 0.3337 s at 1500 Hz -> floor(500.55) = 500 samples
    segs = split_segments(CalibratedSignal(np.zeros(1500), 1500.0), 0.3337)
    assert [len(s) for _, s in segs] == [500, 500, 500]


def test_zero_size_segment():
    with pytest.raises(ConfigError):
        split_segments(CalibratedSignal(np.zeros(10), 1500.0), 1e-4)


@pytest.mark.parametrize("length,n,overlap,starts", [
    (1500, 500, 0, [0, 500, 1000]),
    (1500, 600, 300, [0, 300, 600, 900]),
    (10, 4, 2, [0, 2, 4, 6]),
])
def test_frame_examples(length, n, overlap, starts):
    x = np.arange(float(length))
    frames = frame_segment(x, n, overlap)
    assert frames.shape == (len(starts), n)
    assert frames[:, 0].tolist() == starts
    assert starts == brute_force_starts(length, n, overlap)


def test_window_longer_than_segment_gives_no_frames():
    assert frame_segment(np.zeros(3), 4, 0).shape == (0, 4)


@pytest.mark.parametrize("overlap", [-1, 4])
def test_bad_overlap(overlap):
    with pytest.raises(ConfigError):
        frame_segment(np.zeros(10), 4, overlap)


@given(st.integers(0, 400), st.integers(1, 64), st.data())
def test_frames_match_enumeration(length, n, data):
    overlap = data.draw(st.integers(0, n - 1))
    x = np.arange(float(length))
    frames = frame_segment(x, n, overlap)
    starts = brute_force_starts(length, n, overlap)
    assert frames.shape[0] == len(starts) == count_frames(length, n, overlap)
    for row, s in zip(frames, starts):
        np.testing.assert_array_equal(row, x[s:s + n])
    m, hop = len(starts), n - overlap
    if length >= n:
        assert m * hop + overlap <= length < (m + 1) * hop + overlap


@given(st.integers(1, 40), st.integers(1, 20))
def test_zero_overlap_reconstruction(n, reps):
    x = np.random.default_rng(n).normal(size=n * reps)
    np.testing.assert_array_equal(frame_segment(x, n, 0).ravel(), x)


def test_window_examples():
    np.testing.assert_allclose(make_window("hamming_periodic", 4), [0.08, 0.54, 1.0, 0.54], atol=1e-15)
    assert make_window("rectangular", 3).tolist() == [1.0, 1.0, 1.0]
    np.testing.assert_allclose(make_window("hamming_periodic", 1), [0.08], atol=1e-15)
    with pytest.raises(ConfigError):
        make_window("hamming_periodic", 0)


@given(st.integers(2, 2048))
def test_periodic_hamming_symmetry(n):
    w = make_window("hamming_periodic", n)
    np.testing.assert_allclose(w[1:], w[1:][::-1], rtol=0, atol=1e-15)


def test_apply_window_examples():
    assert apply_window([[1, 1, 1, 1]], make_window("rectangular", 4)).tolist() == [[1, 1, 1, 1]]
    ham = make_window("hamming_periodic", 4)
    np.testing.assert_allclose(apply_window([[1, 1, 1, 1]], ham), [[0.08, 0.54, 1.0, 0.54]], atol=1e-15)
    np.testing.assert_allclose(apply_window([[2, 0, -2, 0]], ham), [[0.16, 0, -2.0, 0]], atol=1e-15)
    with pytest.raises(ShapeError):
        apply_window([[1, 2, 3]], ham)


def test_noise_power_bandwidth():
    for n in (1, 7, 1500):
        assert noise_power_bandwidth(make_window("rectangular", n)) == 1.0
    assert noise_power_bandwidth([1.0, 0.0]) == 2.0
    assert abs(noise_power_bandwidth(make_window("hamming_periodic", 1500)) - 1.3628) < 1e-3
    with pytest.raises(ConfigError):
        noise_power_bandwidth([0.0, 0.0])


def test_npb_matches_alpha_form():
    w = make_window("hamming_periodic", 512)
    alpha = coherent_gain(w)
    np.testing.assert_allclose(noise_power_bandwidth(w), np.mean((w / alpha) ** 2), rtol=1e-12)


@given(st.integers(1, 300), st.floats(1e-6, 1e6) | st.floats(-1e6, -1e-6))
def test_npb_scale_invariant(n, c):
    w = make_window("hamming_periodic", n)
    np.testing.assert_allclose(noise_power_bandwidth(c * w), noise_power_bandwidth(w), rtol=1e-12)


def test_config_invariants():
    cfg = SegmentationConfig(1.0, 600, 300)
    assert cfg.hop == 300 and cfg.nfft == 600
    with pytest.raises(ConfigError):
        SegmentationConfig(1.0, 600, 600)
    with pytest.raises(ConfigError):
        SegmentationConfig(1.0, 600, nfft=599)
    with pytest.raises(ConfigError):
        SegmentationConfig(0.0, 600)
    assert SegmentationConfig(1.0, 1500).whole_file(1500.0)
    assert not SegmentationConfig(1.0, 1499).whole_file(1500.0)


def test_frameset():
    fs = make_frameset(np.ones(10), 3, SegmentationConfig(1.0, 4, 2, window_kind="rectangular"))
    assert fs.n_frames == 4 and fs.segment_index == 3
    assert fs.frames.shape == (4, 4)


@pytest.mark.parametrize("block", [1, 3, 256])
def test_streamed_frames_equal_in_memory(tmp_path, rng, block):
    x = rng.integers(-32768, 32768, size=2049) / 32768
    write_wav(tmp_path / "a.wav", x, 1000)
    with WavReader(tmp_path / "a.wav") as r:
        streamed = np.vstack(list(iter_frame_blocks(r, 100, 37, block)))
    np.testing.assert_array_equal(streamed, frame_segment(x, 100, 37))
