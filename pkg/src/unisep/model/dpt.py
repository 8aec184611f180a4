"""Dual-path transformer block: intra-chunk then inter-chunk sequence modeling.

Each path is a pre-norm transformer layer whose feed-forward sublayer uses a
bidirectional LSTM in place of the first linear map. Pre-norm residuals make
the blocks identity-initializable (zero the output projections), which the
tests exploit.
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F


class TransformerLayer(nn.Module):
    """Self-attention sublayer + recurrent feed-forward sublayer, pre-norm."""

    def __init__(self, hidden: int, n_heads: int, ff_dim: int):
        super().__init__()
        self.attn_norm = nn.LayerNorm(hidden)
        self.attn = nn.MultiheadAttention(hidden, n_heads, batch_first=True)
        self.ff_norm = nn.LayerNorm(hidden)
        self.rnn = nn.LSTM(hidden, ff_dim, batch_first=True, bidirectional=True)
        self.ff_out = nn.Linear(2 * ff_dim, hidden)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # x: (batch, sequence, hidden)
        normed = self.attn_norm(x)
        attended, _ = self.attn(normed, normed, normed, need_weights=False)
        x = x + attended
        recurrent, _ = self.rnn(self.ff_norm(x))
        return x + self.ff_out(F.relu(recurrent))


class DptBlock(nn.Module):
    """Sequence modeling along the intra-chunk axis (batched over chunks),
    then along the inter-chunk axis (batched over positions)."""

    def __init__(self, hidden: int, n_heads: int, ff_dim: int):
        super().__init__()
        self.intra = TransformerLayer(hidden, n_heads, ff_dim)
        self.inter = TransformerLayer(hidden, n_heads, ff_dim)

    def intra_pass(self, chunks: torch.Tensor) -> torch.Tensor:
        batch, n_chunks, chunk_len, hidden = chunks.shape
        x = chunks.reshape(batch * n_chunks, chunk_len, hidden)
        x = self.intra(x)
        return x.reshape(batch, n_chunks, chunk_len, hidden)

    def inter_pass(self, chunks: torch.Tensor) -> torch.Tensor:
        batch, n_chunks, chunk_len, hidden = chunks.shape
        x = chunks.transpose(1, 2).reshape(batch * chunk_len, n_chunks, hidden)
        x = self.inter(x)
        return x.reshape(batch, chunk_len, n_chunks, hidden).transpose(1, 2)

    def forward(self, chunks: torch.Tensor) -> torch.Tensor:
        # chunks: (batch, n_chunks, chunk_len, hidden)
        return self.inter_pass(self.intra_pass(chunks))


def zero_block_outputs(block: DptBlock) -> None:
    """Turn a block into the identity by zeroing its output projections."""
    for layer in (block.intra, block.inter):
        nn.init.zeros_(layer.attn.out_proj.weight)
        nn.init.zeros_(layer.attn.out_proj.bias)
        nn.init.zeros_(layer.ff_out.weight)
        nn.init.zeros_(layer.ff_out.bias)
