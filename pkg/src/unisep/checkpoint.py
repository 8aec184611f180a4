"""Versioned checkpoint container: named parameter arrays plus configs."""

from __future__ import annotations

import os
from dataclasses import dataclass

import torch

from .model import ModelConfig, UniSepNet

FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


@dataclass
class Checkpoint:
    model_config: ModelConfig
    state_dict: dict
    stage: int = 0
    step: int = 0
    epoch: int = 0
    train_config: dict | None = None
    rng_state: torch.Tensor | None = None

    def build_model(self) -> UniSepNet:
        model = UniSepNet(self.model_config)
        model.load_state_dict(self.state_dict)
        model.eval()
        return model


def save_checkpoint(ckpt: Checkpoint, path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    payload = {
        "format_version": FORMAT_VERSION,
        "model_config": ckpt.model_config.to_dict(),
        "state_dict": ckpt.state_dict,
        "stage": ckpt.stage,
        "step": ckpt.step,
        "epoch": ckpt.epoch,
        "train_config": ckpt.train_config,
        "rng_state": ckpt.rng_state,
    }
    torch.save(payload, path)


def load_checkpoint(path: str) -> Checkpoint:
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as err:
        raise CheckpointError(f"unreadable checkpoint {path!r}: {err}") from err
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise CheckpointError(f"{path!r} is not a checkpoint file")
    version = payload["format_version"]
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint format version {version} unsupported (expected {FORMAT_VERSION})"
        )
    return Checkpoint(
        model_config=ModelConfig.from_dict(payload["model_config"]),
        state_dict=payload["state_dict"],
        stage=payload.get("stage", 0),
        step=payload.get("step", 0),
        epoch=payload.get("epoch", 0),
        train_config=payload.get("train_config"),
        rng_state=payload.get("rng_state"),
    )
