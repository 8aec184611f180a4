"""Model hyperparameters. Defaults follow the reference 8 kHz configuration."""

from __future__ import annotations

from dataclasses import dataclass, asdict


@dataclass
class ModelConfig:
    sample_rate: int = 8000
    hidden: int = 64              # feature channels H
    chunk_len: int = 100          # intra-chunk frames K (even)
    kernel_ms: float = 2.0
    stride_ms: float = 1.0
    n_feature_blocks: int = 4
    n_sep_blocks: int = 1
    n_mask_blocks: int = 1
    n_refine_blocks: int = 2
    n_aux_blocks: int = 2
    n_heads: int = 4
    ff_dim: int = 0               # 0 => 4 * hidden
    selection_hidden: int = 512   # attention/MLP width H'
    n_max: int = 5
    stop_threshold: float = 0.5
    shuffle_inference: bool = True

    def __post_init__(self):
        if self.ff_dim == 0:
            self.ff_dim = 4 * self.hidden
        if self.chunk_len < 2 or self.chunk_len % 2 != 0:
            raise ValueError("chunk_len must be an even integer >= 2")
        if self.kernel_ms < self.stride_ms:
            raise ValueError("encoder kernel must be at least as long as the stride")
        if self.hidden % self.n_heads != 0:
            raise ValueError("hidden must be divisible by n_heads")
        if min(
            self.hidden,
            self.n_feature_blocks,
            self.n_sep_blocks,
            self.n_mask_blocks,
            self.n_refine_blocks,
            self.n_aux_blocks,
            self.selection_hidden,
            self.n_max,
        ) < 1:
            raise ValueError("all size parameters must be positive")

    @property
    def kernel_size(self) -> int:
        return int(round(self.kernel_ms * self.sample_rate / 1000.0))

    @property
    def stride(self) -> int:
        return int(round(self.stride_ms * self.sample_rate / 1000.0))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**data)
