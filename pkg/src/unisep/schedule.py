"""Learning-rate schedule: linear warmup, then epoch-based exponential decay."""

from __future__ import annotations


def lr_at(step: int, epoch: int, peak_lr: float, warmup_steps: int, decay: float) -> float:
    """Learning rate at a (step, epoch) point.

    Ramps linearly from 0 to peak_lr over warmup_steps, then multiplies by
    decay once every two epochs.
    """
    if step < 0:
        raise ValueError("step must be nonnegative")
    if warmup_steps > 0 and step < warmup_steps:
        return peak_lr * step / warmup_steps
    return peak_lr * decay ** (epoch // 2)
