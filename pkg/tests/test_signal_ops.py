import numpy as np
import pytest

from unisep.signal_ops import (
    ChunkFeature,
    Waveform,
    measure_snr_db,
    overlap_add,
    rms_power,
    segment,
    snr_gain,
)


class TestWaveform:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Waveform(np.array([]), 8000)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Waveform(np.array([1.0, np.nan]), 8000)

    def test_duration(self):
        assert Waveform(np.zeros(4000), 8000).duration == 0.5


class TestRmsPower:
    def test_zero_signal(self):
        assert rms_power(Waveform(np.zeros(3), 8000)) == 0.0

    def test_unit_square(self):
        assert rms_power(np.array([1.0, -1.0, 1.0, -1.0])) == 1.0

    def test_hand_computed(self):
        assert rms_power(np.array([3.0, 4.0])) == pytest.approx(np.sqrt(12.5))


class TestSnrGain:
    def test_equal_powers_zero_db(self):
        assert snr_gain(1.0, 1.0, 0.0) == pytest.approx(1.0)

    def test_twenty_db(self):
        assert snr_gain(1.0, 1.0, 20.0) == pytest.approx(0.1)

    def test_six_db(self):
        assert snr_gain(2.0, 1.0, 20.0 * np.log10(2.0)) == pytest.approx(1.0)

    def test_zero_noise_rejected(self):
        with pytest.raises(ValueError, match="degenerate noise"):
            snr_gain(1.0, 0.0, 10.0)

    def test_gain_reproduces_target(self):
        rng = np.random.default_rng(0)
        signal = rng.standard_normal(1000)
        noise = rng.standard_normal(1000) * 0.3
        for target in (-3.0, 0.0, 7.5, 15.0):
            g = snr_gain(rms_power(signal), rms_power(noise), target)
            assert measure_snr_db(signal, g * noise) == pytest.approx(target, abs=1e-9)


class TestSegment:
    def test_window_count_t10_k4(self):
        out = segment(np.arange(20.0).reshape(10, 2), 4)
        assert out.data.shape == (4, 4, 2)
        assert out.pad_frames == 0

    def test_single_chunk(self):
        out = segment(np.ones((4, 3)), 4)
        assert out.data.shape == (1, 4, 3)
        assert out.pad_frames == 0

    def test_padding_t11_k4(self):
        out = segment(np.ones((11, 2)), 4)
        assert out.data.shape == (5, 4, 2)
        assert out.pad_frames == 1

    def test_odd_chunk_rejected(self):
        with pytest.raises(ValueError):
            segment(np.ones((10, 2)), 5)

    def test_short_input_padded(self):
        out = segment(np.ones((3, 2)), 8)
        assert out.data.shape == (1, 8, 2)
        assert out.pad_frames == 5

    def test_positions_copy_input(self):
        rng = np.random.default_rng(1)
        frames = rng.standard_normal((13, 3))
        out = segment(frames, 6)
        hop = 3
        for c in range(out.data.shape[0]):
            for k in range(6):
                src = c * hop + k
                expected = frames[src] if src < 13 else np.zeros(3)
                np.testing.assert_array_equal(out.data[c, k], expected)

    def test_pad_frames_below_chunk_len(self):
        rng = np.random.default_rng(2)
        for n_frames in range(1, 40):
            k = int(rng.choice([2, 4, 6, 8]))
            out = segment(np.ones((n_frames, 2)), k)
            assert 0 <= out.pad_frames < k


class TestOverlapAdd:
    def test_round_trip_random(self):
        rng = np.random.default_rng(3)
        frames = rng.standard_normal((10, 8))
        restored = overlap_add(segment(frames, 4), 4, 10)
        np.testing.assert_allclose(restored, frames, rtol=1e-6)

    def test_single_chunk_identity(self):
        rng = np.random.default_rng(4)
        frames = rng.standard_normal((4, 5))
        restored = overlap_add(segment(frames, 4), 4, 4)
        np.testing.assert_allclose(restored, frames, rtol=1e-6)

    def test_round_trip_with_padding(self):
        rng = np.random.default_rng(5)
        frames = rng.standard_normal((11, 4))
        restored = overlap_add(segment(frames, 4), 4, 11)
        np.testing.assert_allclose(restored, frames, rtol=1e-6)

    def test_round_trip_many_shapes(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            n_frames = int(rng.integers(1, 60))
            chunk_len = int(rng.choice([2, 4, 8, 10]))
            hidden = int(rng.integers(1, 6))
            frames = rng.standard_normal((n_frames, hidden))
            restored = overlap_add(segment(frames, chunk_len), chunk_len, n_frames)
            np.testing.assert_allclose(restored, frames, rtol=1e-6, atol=1e-12)

    def test_shape_mismatch_rejected(self):
        chunks = segment(np.ones((10, 2)), 4)
        with pytest.raises(ValueError):
            overlap_add(chunks, 4, 9)
        with pytest.raises(ValueError):
            overlap_add(chunks, 6, 10)

    def test_chunk_feature_validation(self):
        with pytest.raises(ValueError):
            ChunkFeature(np.ones((2, 4)), 0)
        with pytest.raises(ValueError):
            ChunkFeature(np.ones((2, 4, 3)), 4)
