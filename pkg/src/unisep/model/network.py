"""The full multi-task enhancement network.

Signal path (separation): encoder -> gLN -> segmentation -> feature DPT blocks
-> attractor generation -> per-speaker feature masking -> shared separation
DPT block -> mask estimation -> masking -> decoder.

For extraction, the target selection and refinement modules sit between the
internal separation outputs and the mask estimator; bypassing them reproduces
the separation path exactly.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import ModelConfig
from .dpt import DptBlock
from .eda import EdaModule, apply_attractors, count_from_probs
from .layers import Decoder, Encoder, GlobalLayerNorm, overlap_add_tensor, segment_tensor
from .tse import AuxiliaryNet, OutputRefiner, SpeakerSelector


@dataclass
class AttractorSet:
    """Generated attractors with their existence probabilities and the
    threshold-rule speaker count."""

    attractors: np.ndarray               # (n_generated, hidden)
    probabilities: list[float]
    n_est: int


@dataclass
class SeparationResult:
    signals: list[np.ndarray]
    attractor_set: AttractorSet


@dataclass
class ExtractionResult:
    signal: np.ndarray
    attention: np.ndarray                # (n_internal, n_chunks, chunk_len)
    attractor_set: AttractorSet


class MaskEstimator(nn.Module):
    """DPT block(s) -> PReLU -> position-wise linear -> overlap-add -> ReLU."""

    def __init__(self, hidden: int, n_heads: int, ff_dim: int, n_blocks: int):
        super().__init__()
        self.blocks = nn.ModuleList(
            DptBlock(hidden, n_heads, ff_dim) for _ in range(n_blocks)
        )
        self.act = nn.PReLU()
        self.proj = nn.Linear(hidden, hidden)

    def forward(self, chunks: torch.Tensor, pad_frames: int) -> torch.Tensor:
        for block in self.blocks:
            chunks = block(chunks)
        chunks = self.proj(self.act(chunks))
        return F.relu(overlap_add_tensor(chunks, pad_frames))


class UniSepNet(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        hidden, heads, ff = config.hidden, config.n_heads, config.ff_dim
        self.encoder = Encoder(hidden, config.kernel_size, config.stride)
        self.input_norm = GlobalLayerNorm(hidden)
        self.feature_blocks = nn.ModuleList(
            DptBlock(hidden, heads, ff) for _ in range(config.n_feature_blocks)
        )
        self.eda = EdaModule(hidden)
        self.separation_blocks = nn.ModuleList(
            DptBlock(hidden, heads, ff) for _ in range(config.n_sep_blocks)
        )
        self.mask_estimator = MaskEstimator(hidden, heads, ff, config.n_mask_blocks)
        self.decoder = Decoder(hidden, config.kernel_size, config.stride)
        # extraction-only modules (inserted between internal separation and
        # mask estimation; untouched by the separation path)
        self.auxiliary = AuxiliaryNet(hidden, heads, ff, config.n_aux_blocks)
        self.selector = SpeakerSelector(hidden, config.selection_hidden)
        self.refiner = OutputRefiner(hidden, heads, ff, config.n_refine_blocks)

    # ------------------------------------------------------------------ #
    # torch-level forward pieces                                          #
    # ------------------------------------------------------------------ #

    def tse_modules(self) -> list[nn.Module]:
        return [self.auxiliary, self.selector, self.refiner]

    def tse_parameters(self):
        for module in self.tse_modules():
            yield from module.parameters()

    def embed_mixture(self, wave: torch.Tensor):
        """(B, L) -> encoder frames (B, T, H) and feature chunks (B, C, K, H)."""
        enc = self.encoder(wave)
        chunks, pad_frames = segment_tensor(self.input_norm(enc), self.config.chunk_len)
        for block in self.feature_blocks:
            chunks = block(chunks)
        return enc, chunks, pad_frames

    def separate_features(
        self, feats: torch.Tensor, attractors: torch.Tensor
    ) -> torch.Tensor:
        """Apply attractors and the shared separation block(s): (B, C, K, H)
        with (B, S, H) attractors -> (B, S, C, K, H)."""
        z = apply_attractors(feats, attractors)
        batch, n_spk, n_chunks, chunk_len, hidden = z.shape
        z = z.reshape(batch * n_spk, n_chunks, chunk_len, hidden)
        for block in self.separation_blocks:
            z = block(z)
        return z.reshape(batch, n_spk, n_chunks, chunk_len, hidden)

    def masks_and_decode(
        self, speaker_feats: torch.Tensor, enc: torch.Tensor, pad_frames: int, n_samples: int
    ) -> torch.Tensor:
        """(B, S, C, K, H) speaker features -> (B, S, L) waveforms."""
        batch, n_spk, n_chunks, chunk_len, hidden = speaker_feats.shape
        flat = speaker_feats.reshape(batch * n_spk, n_chunks, chunk_len, hidden)
        masks = self.mask_estimator(flat, pad_frames)             # (B*S, T, H)
        masks = masks.reshape(batch, n_spk, -1, hidden)
        masked = masks * enc.unsqueeze(1)
        flat = masked.reshape(batch * n_spk, -1, hidden)
        waves = self.decoder(flat, n_samples)
        return waves.reshape(batch, n_spk, n_samples)

    def forward_separation(
        self, wave: torch.Tensor, n_oracle: int, shuffle_seed: int | None
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Oracle-count separation used in training.

        Generates n_oracle + 1 attractors (the extra probability feeds the
        counting loss) and returns (signals (B, N, L), probs (B, N+1)).
        """
        if not 1 <= n_oracle <= self.config.n_max:
            raise ValueError(
                f"oracle speaker count {n_oracle} outside [1, {self.config.n_max}]"
            )
        enc, feats, pad_frames = self.embed_mixture(wave)
        attractors, probs = self.eda(feats, n_oracle + 1, shuffle_seed)
        speaker_feats = self.separate_features(feats, attractors[:, :n_oracle])
        signals = self.masks_and_decode(speaker_feats, enc, pad_frames, wave.shape[-1])
        return signals, probs

    def forward_extraction(
        self,
        wave: torch.Tensor,
        enrollment: torch.Tensor,
        n_internal: int,
        shuffle_seed: int | None,
        frozen_front: bool = False,
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Extraction forward: returns (signal (B, L), attention, probs).

        frozen_front runs everything up to the internal separation outputs
        without autograd, as in the second training stage.
        """
        if n_internal < 1:
            raise ValueError("extraction needs at least one internal speaker")
        ctx = torch.no_grad() if frozen_front else contextlib.nullcontext()
        with ctx:
            enc, feats, pad_frames = self.embed_mixture(wave)
            attractors, probs = self.eda(feats, n_internal, shuffle_seed)
            speaker_feats = self.separate_features(feats, attractors)
            enroll_enc = self.encoder(enrollment)
        if frozen_front:
            enc, speaker_feats, enroll_enc = (
                enc.detach(), speaker_feats.detach(), enroll_enc.detach(),
            )
        enroll_chunks = self.auxiliary(enroll_enc, self.config.chunk_len)
        target, attention = self.selector(speaker_feats, enroll_chunks)
        target = self.refiner(target, enroll_chunks)
        signals = self.masks_and_decode(
            target.unsqueeze(1), enc, pad_frames, wave.shape[-1]
        )
        return signals[:, 0], attention, probs

    # ------------------------------------------------------------------ #
    # numpy-facing inference                                              #
    # ------------------------------------------------------------------ #

    def _inference_seed(self, shuffle_seed: int) -> int | None:
        return shuffle_seed if self.config.shuffle_inference else None

    def _prepare(self, wave_np) -> torch.Tensor:
        wave = np.asarray(wave_np, dtype=np.float64)
        if wave.ndim != 1:
            raise ValueError("expected a 1-D waveform")
        dtype = next(self.parameters()).dtype
        return torch.as_tensor(wave).to(dtype).unsqueeze(0)

    def _count(self, wave: torch.Tensor, shuffle_seed: int | None):
        """Shared inference front: attractors for n_max candidates."""
        enc, feats, pad_frames = self.embed_mixture(wave)
        attractors, probs = self.eda(feats, self.config.n_max, shuffle_seed)
        n_est = count_from_probs(
            probs[0].tolist(), self.config.n_max, self.config.stop_threshold
        )
        return enc, feats, pad_frames, attractors, probs, n_est

    def _attractor_set(self, attractors, probs, n_est) -> AttractorSet:
        return AttractorSet(
            attractors=attractors[0].detach().cpu().numpy(),
            probabilities=[float(p) for p in probs[0]],
            n_est=n_est,
        )

    @torch.no_grad()
    def separate(
        self, wave_np, oracle_n: int | None = None, shuffle_seed: int = 0
    ) -> SeparationResult:
        """Separate a mixture into per-speaker signals.

        oracle_n forces the attractor count; otherwise the threshold rule on
        the existence probabilities determines it (possibly zero).
        """
        wave = self._prepare(wave_np)
        enc, feats, pad_frames, attractors, probs, n_est = self._count(
            wave, self._inference_seed(shuffle_seed)
        )
        if oracle_n is not None and not 1 <= oracle_n <= self.config.n_max:
            raise ValueError(
                f"oracle speaker count {oracle_n} outside [1, {self.config.n_max}]"
            )
        n_used = oracle_n if oracle_n is not None else n_est
        signals: list[np.ndarray] = []
        if n_used > 0:
            speaker_feats = self.separate_features(feats, attractors[:, :n_used])
            waves = self.masks_and_decode(speaker_feats, enc, pad_frames, wave.shape[-1])
            signals = [waves[0, i].cpu().numpy().astype(np.float64) for i in range(n_used)]
        return SeparationResult(signals, self._attractor_set(attractors, probs, n_est))

    @torch.no_grad()
    def extract(
        self,
        wave_np,
        enrollment_np,
        oracle_n: int | None = None,
        shuffle_seed: int = 0,
    ) -> ExtractionResult:
        """Extract the enrolled speaker from a mixture.

        The internal speaker count follows the threshold rule (forced to at
        least one so there is always a candidate) unless oracle_n is given.
        """
        wave = self._prepare(wave_np)
        enroll = self._prepare(enrollment_np)
        seed = self._inference_seed(shuffle_seed)
        _, _, _, attractors, probs, n_est = self._count(wave, seed)
        n_internal = oracle_n if oracle_n is not None else max(n_est, 1)
        signal, attention, _ = self.forward_extraction(wave, enroll, n_internal, seed)
        return ExtractionResult(
            signal=signal[0].cpu().numpy().astype(np.float64),
            attention=attention[0].cpu().numpy().astype(np.float64),
            attractor_set=self._attractor_set(attractors, probs, n_est),
        )
