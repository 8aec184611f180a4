"""Waveform container and frame/chunk array primitives shared by all modules.

Feature arrays follow two layouts: frame features of shape (frames, hidden)
and chunk features of shape (chunks, chunk_len, hidden) produced by 50%%
overlapped segmentation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Waveform:
    """A finite 1-D signal plus its sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ValueError("waveform must be a non-empty 1-D array")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains non-finite samples")
        if self.sample_rate < 1:
            raise ValueError("sample_rate must be a positive integer")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass
class ChunkFeature:
    """Segmented feature array (chunks, chunk_len, hidden) plus the number of
    zero frames appended before segmentation."""

    data: np.ndarray
    pad_frames: int = 0

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 3:
            raise ValueError("chunk feature must have shape (chunks, chunk_len, hidden)")
        if not 0 <= self.pad_frames < self.data.shape[1]:
            raise ValueError("pad_frames must satisfy 0 <= pad_frames < chunk_len")


def _as_samples(wave) -> np.ndarray:
    if isinstance(wave, Waveform):
        return wave.samples
    return np.asarray(wave, dtype=np.float64)


def rms_power(wave) -> float:
    """Root-mean-square amplitude of a waveform (0 for an all-zero signal)."""
    samples = _as_samples(wave)
    if samples.size < 1:
        raise ValueError("empty signal")
    return float(np.sqrt(np.mean(np.square(samples))))


def snr_gain(signal_power: float, noise_power: float, target_snr_db: float) -> float:
    """Gain g so that 20*log10(signal_power / (g * noise_power)) == target_snr_db.

    Powers are RMS amplitudes, hence the 20 dB/decade convention.
    """
    if noise_power <= 0.0:
        raise ValueError("degenerate noise: noise power must be > 0")
    if signal_power <= 0.0:
        raise ValueError("signal power must be > 0")
    return signal_power / (noise_power * 10.0 ** (target_snr_db / 20.0))


def measure_snr_db(signal, noise) -> float:
    """SNR in dB between two signals measured by their RMS ratio."""
    return 20.0 * np.log10(rms_power(signal) / rms_power(noise))


def num_chunks(n_frames: int, chunk_len: int) -> int:
    hop = chunk_len // 2
    return int(np.ceil(max(n_frames - chunk_len, 0) / hop)) + 1


def segment(frames: np.ndarray, chunk_len: int) -> ChunkFeature:
    """Split (frames, hidden) into 50% overlapped chunks, zero-padding the end.

    Chunk c, position k holds input frame c*chunk_len/2 + k; padded positions
    are zero.
    """
    if chunk_len < 2 or chunk_len % 2 != 0:
        raise ValueError("chunk_len must be an even integer >= 2")
    frames = np.asarray(frames)
    if frames.ndim != 2:
        raise ValueError("expected a (frames, hidden) array")
    n_frames, hidden = frames.shape
    hop = chunk_len // 2
    n_chunks = num_chunks(n_frames, chunk_len)
    span = (n_chunks - 1) * hop + chunk_len
    pad_frames = span - n_frames
    padded = np.concatenate([frames, np.zeros((pad_frames, hidden), dtype=frames.dtype)])
    chunks = np.stack([padded[c * hop : c * hop + chunk_len] for c in range(n_chunks)])
    return ChunkFeature(chunks, pad_frames)


def overlap_add(chunks: ChunkFeature, chunk_len: int, n_frames: int) -> np.ndarray:
    """Invert segment(): sum chunks at hop chunk_len/2, divide by per-frame
    overlap counts, and drop the end padding."""
    data = chunks.data
    if data.shape[1] != chunk_len:
        raise ValueError(
            f"chunk_len mismatch: chunks built with {data.shape[1]}, got {chunk_len}"
        )
    n_chunks, _, hidden = data.shape
    hop = chunk_len // 2
    span = (n_chunks - 1) * hop + chunk_len
    if span - chunks.pad_frames != n_frames:
        raise ValueError(
            f"inconsistent shapes: {n_chunks} chunks of {chunk_len} cover {span} frames "
            f"minus {chunks.pad_frames} padding, expected {n_frames}"
        )
    acc = np.zeros((span, hidden), dtype=np.float64)
    counts = np.zeros(span, dtype=np.float64)
    for c in range(n_chunks):
        acc[c * hop : c * hop + chunk_len] += data[c]
        counts[c * hop : c * hop + chunk_len] += 1.0
    acc /= counts[:, None]
    return acc[:n_frames].astype(data.dtype, copy=False)
