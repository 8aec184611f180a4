"""Target speaker extraction: enrollment embedding, attention-based speaker
selection over the internal separation outputs, and FiLM-conditioned output
refinement."""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

from .dpt import DptBlock
from .layers import GlobalLayerNorm, segment_tensor


class SelectionMlp(nn.Module):
    """linear -> ReLU -> linear -> ReLU -> linear with a common hidden width."""

    def __init__(self, in_dim: int, hidden: int, out_dim: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden),
            nn.ReLU(),
            nn.Linear(hidden, hidden),
            nn.ReLU(),
            nn.Linear(hidden, out_dim),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class AuxiliaryNet(nn.Module):
    """Enrollment feature extractor: gLN -> segmentation -> DPT blocks.

    Same layout as the mixture feature extractor but with its own (fewer)
    blocks; the waveform encoder is shared and lives in the parent network.
    """

    def __init__(self, hidden: int, n_heads: int, ff_dim: int, n_blocks: int):
        super().__init__()
        self.norm = GlobalLayerNorm(hidden)
        self.blocks = nn.ModuleList(
            DptBlock(hidden, n_heads, ff_dim) for _ in range(n_blocks)
        )

    def forward(self, enc_frames: torch.Tensor, chunk_len: int) -> torch.Tensor:
        chunks, _ = segment_tensor(self.norm(enc_frames), chunk_len)
        for block in self.blocks:
            chunks = block(chunks)
        return chunks


class SpeakerSelector(nn.Module):
    """Attention over internal speaker features driven by the enrollment.

    Per speaker n and position (c, k):
        score_n[c,k] = w . tanh(P_tv tv_n[c,k] + P_ti ti_n + P_aux aux + b)
    with softmax over speakers; the output is the attention-weighted sum of
    the speaker features.
    """

    def __init__(self, hidden: int, selection_hidden: int):
        super().__init__()
        self.mlp_tv = SelectionMlp(hidden, selection_hidden, selection_hidden)
        self.mlp_ti = SelectionMlp(hidden, selection_hidden, selection_hidden)
        self.mlp_aux = SelectionMlp(hidden, selection_hidden, selection_hidden)
        self.proj_tv = nn.Linear(selection_hidden, selection_hidden, bias=False)
        self.proj_ti = nn.Linear(selection_hidden, selection_hidden, bias=False)
        self.proj_aux = nn.Linear(selection_hidden, selection_hidden, bias=False)
        self.bias = nn.Parameter(torch.zeros(selection_hidden))
        self.score = nn.Linear(selection_hidden, 1, bias=False)

    def forward(
        self, speaker_feats: torch.Tensor, enroll_chunks: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """speaker_feats (B, S, C, K, H), enroll_chunks (B, C', K, H) ->
        (target (B, C, K, H), attention (B, S, C, K))."""
        if speaker_feats.shape[1] < 1:
            raise ValueError("speaker selection needs at least one speaker feature")
        time_varying = self.mlp_tv(speaker_feats)                       # (B,S,C,K,H')
        time_invariant = self.mlp_ti(speaker_feats).mean(dim=(2, 3))    # (B,S,H')
        enroll_embed = self.mlp_aux(enroll_chunks).mean(dim=(1, 2))     # (B,H')
        pre = (
            self.proj_tv(time_varying)
            + self.proj_ti(time_invariant)[:, :, None, None, :]
            + self.proj_aux(enroll_embed)[:, None, None, None, :]
            + self.bias
        )
        logits = self.score(torch.tanh(pre)).squeeze(-1)                # (B,S,C,K)
        attention = torch.softmax(logits, dim=1)
        target = (attention.unsqueeze(-1) * speaker_feats).sum(dim=1)
        return target, attention


class ConditionalBlock(nn.Module):
    """FiLM module (linear -> PReLU -> scale/shift -> linear) + DPT block.

    The FiLM projections are zero-initialized (scale 1, shift 0) and the
    surrounding linears start as the identity, so the module begins as a
    pass-through of the selected feature and only learns deviations; this
    matters because the downstream mask estimator is frozen when this module
    trains.
    """

    def __init__(self, hidden: int, n_heads: int, ff_dim: int):
        super().__init__()
        self.pre = nn.Linear(hidden, hidden)
        self.act = nn.PReLU(init=1.0)
        self.film_scale = nn.Linear(hidden, hidden)
        self.film_shift = nn.Linear(hidden, hidden)
        self.post = nn.Linear(hidden, hidden)
        self.dpt = DptBlock(hidden, n_heads, ff_dim)
        with torch.no_grad():
            nn.init.eye_(self.pre.weight)
            nn.init.zeros_(self.pre.bias)
            nn.init.eye_(self.post.weight)
            nn.init.zeros_(self.post.bias)
            nn.init.zeros_(self.film_scale.weight)
            nn.init.ones_(self.film_scale.bias)
            nn.init.zeros_(self.film_shift.weight)
            nn.init.zeros_(self.film_shift.bias)

    def forward(self, feats: torch.Tensor, condition: torch.Tensor) -> torch.Tensor:
        # feats: (B, C, K, H); condition: (B, H)
        x = self.act(self.pre(feats))
        scale = self.film_scale(condition)[:, None, None, :]
        shift = self.film_shift(condition)[:, None, None, :]
        x = self.post(scale * x + shift)
        return self.dpt(x)


class OutputRefiner(nn.Module):
    """Conditional DPT blocks applied to the selected target feature, with the
    condition vector taken as the enrollment chunks averaged over both chunk
    axes."""

    def __init__(self, hidden: int, n_heads: int, ff_dim: int, n_blocks: int):
        super().__init__()
        self.blocks = nn.ModuleList(
            ConditionalBlock(hidden, n_heads, ff_dim) for _ in range(n_blocks)
        )

    def forward(self, target: torch.Tensor, enroll_chunks: torch.Tensor) -> torch.Tensor:
        condition = enroll_chunks.mean(dim=(1, 2))  # (B, H)
        for block in self.blocks:
            target = block(target, condition)
        return target
