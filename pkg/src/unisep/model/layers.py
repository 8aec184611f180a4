"""Encoder/decoder, global layer norm, and tensor chunking used by the model."""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

GLN_EPS = 1e-8


class Encoder(nn.Module):
    """1-D convolution + ReLU mapping (batch, samples) -> (batch, frames, hidden)."""

    def __init__(self, hidden: int, kernel_size: int, stride: int):
        super().__init__()
        self.kernel_size = kernel_size
        self.stride = stride
        self.conv = nn.Conv1d(1, hidden, kernel_size, stride=stride)

    def forward(self, wave: torch.Tensor) -> torch.Tensor:
        if wave.shape[-1] < self.kernel_size:
            raise ValueError(
                f"input of {wave.shape[-1]} samples is shorter than the encoder "
                f"kernel ({self.kernel_size})"
            )
        frames = F.relu(self.conv(wave.unsqueeze(1)))  # (B, H, T)
        return frames.transpose(1, 2)


class Decoder(nn.Module):
    """Transposed convolution mapping (batch, frames, hidden) -> (batch, samples).

    Bias-free so an all-zero masked feature decodes to digital silence.
    """

    def __init__(self, hidden: int, kernel_size: int, stride: int):
        super().__init__()
        self.deconv = nn.ConvTranspose1d(hidden, 1, kernel_size, stride=stride, bias=False)

    def forward(self, frames: torch.Tensor, n_samples: int) -> torch.Tensor:
        wave = self.deconv(frames.transpose(1, 2)).squeeze(1)
        if wave.shape[-1] >= n_samples:
            return wave[..., :n_samples]
        return F.pad(wave, (0, n_samples - wave.shape[-1]))


class GlobalLayerNorm(nn.Module):
    """Normalize over all (frame, channel) positions, then per-channel affine."""

    def __init__(self, hidden: int, eps: float = GLN_EPS):
        super().__init__()
        self.eps = eps
        self.weight = nn.Parameter(torch.ones(hidden))
        self.bias = nn.Parameter(torch.zeros(hidden))

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        # frames: (B, T, H); statistics pooled over T and H per batch item
        mean = frames.mean(dim=(-2, -1), keepdim=True)
        var = frames.var(dim=(-2, -1), unbiased=False, keepdim=True)
        normalized = (frames - mean) / torch.sqrt(var + self.eps)
        return normalized * self.weight + self.bias


def segment_tensor(frames: torch.Tensor, chunk_len: int) -> tuple[torch.Tensor, int]:
    """(B, T, H) -> (B, C, K, H) with 50% overlap and zero end-padding.

    Mirrors signal_ops.segment; returns (chunks, pad_frames).
    """
    if chunk_len < 2 or chunk_len % 2 != 0:
        raise ValueError("chunk_len must be an even integer >= 2")
    batch, n_frames, hidden = frames.shape
    hop = chunk_len // 2
    n_chunks = -(-max(n_frames - chunk_len, 0) // hop) + 1
    span = (n_chunks - 1) * hop + chunk_len
    pad_frames = span - n_frames
    padded = F.pad(frames, (0, 0, 0, pad_frames))
    chunks = padded.unfold(1, chunk_len, hop)  # (B, C, H, K)
    return chunks.permute(0, 1, 3, 2).contiguous(), pad_frames


def overlap_add_tensor(chunks: torch.Tensor, pad_frames: int) -> torch.Tensor:
    """(B, C, K, H) -> (B, T, H): sum at hop K/2, divide by overlap counts,
    drop padding."""
    batch, n_chunks, chunk_len, hidden = chunks.shape
    hop = chunk_len // 2
    span = (n_chunks - 1) * hop + chunk_len
    # fold over a (span, 1) output treating K as the kernel height
    cols = chunks.permute(0, 3, 2, 1).reshape(batch, hidden * chunk_len, n_chunks)
    summed = F.fold(
        cols, output_size=(span, 1), kernel_size=(chunk_len, 1), stride=(hop, 1)
    )  # (B, H, span, 1)
    ones = torch.ones(1, 1 * chunk_len, n_chunks, dtype=chunks.dtype, device=chunks.device)
    counts = F.fold(
        ones, output_size=(span, 1), kernel_size=(chunk_len, 1), stride=(hop, 1)
    )
    frames = (summed / counts).squeeze(-1).transpose(1, 2)  # (B, span, H)
    return frames[:, : span - pad_frames]
