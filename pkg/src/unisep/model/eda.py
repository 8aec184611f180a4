"""Attractor generation for speaker counting and internal separation.

Chunk features are aggregated per chunk by learned weighted averaging,
shuffled along the chunk axis, and run through an LSTM encoder. An LSTM
decoder initialized with the encoder's final states emits one attractor per
step from zero inputs; a linear+sigmoid classifier scores each attractor's
existence probability.
"""

from __future__ import annotations

import torch
import torch.nn as nn


class ChunkAggregator(nn.Module):
    """Per-chunk weighted average over intra-chunk frames.

    A learned linear map scores each frame; softmax over the chunk gives the
    weights, so zero-initialized weights reduce to the plain mean.
    """

    def __init__(self, hidden: int):
        super().__init__()
        self.score = nn.Linear(hidden, 1)

    def forward(self, chunks: torch.Tensor) -> torch.Tensor:
        # chunks: (B, C, K, H) -> (B, C, H)
        weights = torch.softmax(self.score(chunks), dim=2)
        return (weights * chunks).sum(dim=2)


def shuffle_chunks(sequence: torch.Tensor, seed: int) -> tuple[torch.Tensor, torch.Tensor]:
    """Permute the chunk axis (dim -2) with a seeded uniform permutation.

    Returns (shuffled, permutation). The same seed always yields the same
    permutation.
    """
    n_chunks = sequence.shape[-2]
    generator = torch.Generator().manual_seed(seed & 0x7FFFFFFFFFFFFFFF)
    perm = torch.randperm(n_chunks, generator=generator)
    return sequence.index_select(-2, perm.to(sequence.device)), perm


class EdaModule(nn.Module):
    def __init__(self, hidden: int):
        super().__init__()
        self.aggregator = ChunkAggregator(hidden)
        self.encoder = nn.LSTM(hidden, hidden, batch_first=True)
        self.decoder_cell = nn.LSTMCell(hidden, hidden)
        self.classifier = nn.Linear(hidden, 1)

    def encode_sequence(self, sequence: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """LSTM recursion over (B, C, H) from zero states; returns final (h, c)."""
        if sequence.shape[1] < 1:
            raise ValueError("chunk sequence must contain at least one chunk")
        _, (h, c) = self.encoder(sequence)
        return h[0], c[0]

    def generate(
        self, h: torch.Tensor, c: torch.Tensor, n_attractors: int
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Emit attractors and existence probabilities from decoder states.

        The decoder input is the zero vector at every step, so attractor i is
        independent of how many further attractors are generated.
        """
        zeros = h.new_zeros(h.shape)
        attractors, probs = [], []
        for _ in range(n_attractors):
            h, c = self.decoder_cell(zeros, (h, c))
            attractors.append(h)
            probs.append(torch.sigmoid(self.classifier(h)).squeeze(-1))
        return torch.stack(attractors, dim=1), torch.stack(probs, dim=1)

    def forward(
        self, chunks: torch.Tensor, n_attractors: int, shuffle_seed: int | None = None
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """(B, C, K, H) -> attractors (B, n, H) and probabilities (B, n)."""
        aggregated = self.aggregator(chunks)
        if shuffle_seed is not None:
            aggregated, _ = shuffle_chunks(aggregated, shuffle_seed)
        h, c = self.encode_sequence(aggregated)
        return self.generate(h, c, n_attractors)


def count_from_probs(probs, n_max: int, threshold: float = 0.5) -> int:
    """Speaker count rule: first index whose probability falls below the
    threshold, capped at n_max."""
    for i, p in enumerate(probs):
        if float(p) < threshold:
            return min(i, n_max)
    return min(len(probs), n_max)


def apply_attractors(chunks: torch.Tensor, attractors: torch.Tensor) -> torch.Tensor:
    """Point-wise multiply (B, C, K, H) features by each (B, n, H) attractor,
    giving per-speaker features (B, n, C, K, H)."""
    return chunks.unsqueeze(1) * attractors[:, :, None, None, :]
