"""Signal losses: SI-SNR, permutation-invariant loss, and the counting BCE.

All functions accept torch tensors (numpy arrays are converted, preserving
dtype) and return tensors so they can sit on the training path; `.item()`
them for metric use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from scipy.optimize import linear_sum_assignment

SI_SNR_EPS = 1e-8
BCE_PROB_CLAMP = 1e-7


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(np.asarray(x))


def si_snr(ref, est, eps: float = SI_SNR_EPS) -> torch.Tensor:
    """Scale-invariant SNR in dB along the last axis (broadcasts elsewhere).

    The estimate is projected onto the reference; the relative eps floor caps
    the result at +/- 10*log10(1/eps) so perfect and orthogonal estimates stay
    finite.
    """
    ref, est = torch.broadcast_tensors(_as_tensor(ref), _as_tensor(est))
    ref_energy = (ref * ref).sum(dim=-1, keepdim=True)
    if torch.any(ref_energy == 0):
        raise ValueError("all-zero reference")
    dot = (est * ref).sum(dim=-1, keepdim=True)
    s_target = dot / ref_energy * ref
    residual = est - s_target
    target_energy = (s_target * s_target).sum(dim=-1)
    residual_energy = (residual * residual).sum(dim=-1)
    # s_target and residual are orthogonal, so their energies sum to the
    # estimate energy; flooring both sides with eps * total keeps the ratio
    # scale-invariant.
    total = target_energy + residual_energy
    tiny = torch.finfo(ref.dtype).tiny
    ratio = (target_energy + eps * total + tiny) / (residual_energy + eps * total + tiny)
    return 10.0 * torch.log10(ratio)


def pairwise_neg_si_snr(refs, ests) -> torch.Tensor:
    """Matrix of -si_snr(refs[i], ests[j]) with shape (n_refs, n_ests)."""
    refs = _as_tensor(refs)
    ests = _as_tensor(ests)
    return -si_snr(refs.unsqueeze(1), ests.unsqueeze(0))


@dataclass
class LossBreakdown:
    """Loss components for one batch item; tensors while on the graph."""

    total: torch.Tensor
    pit: torch.Tensor
    eda: torch.Tensor
    permutation: list[int]
    tse: torch.Tensor | None = None


def min_cost_assignment(cost: np.ndarray) -> tuple[list[int], float]:
    """Optimal column-per-row assignment minimizing the summed cost.

    Returns (assignment, total) where assignment[i] is the column matched to
    row i. Requires a square matrix.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError("cost matrix must be square")
    rows, cols = linear_sum_assignment(cost)
    assignment = [0] * cost.shape[0]
    for r, c in zip(rows, cols):
        assignment[r] = int(c)
    return assignment, float(cost[rows, cols].sum())


def pit_loss(refs, ests) -> tuple[torch.Tensor, list[int]]:
    """Permutation-invariant mean negative SI-SNR over the best speaker pairing.

    Returns (loss, permutation) where permutation[i] is the estimate index
    assigned to reference i.
    """
    refs = _as_tensor(refs)
    ests = _as_tensor(ests)
    if refs.shape[0] != ests.shape[0]:
        raise ValueError(
            f"reference/estimate count mismatch: {refs.shape[0]} vs {ests.shape[0]}"
        )
    cost = pairwise_neg_si_snr(refs, ests)
    perm, _ = min_cost_assignment(cost.detach().cpu().double().numpy())
    rows = torch.arange(refs.shape[0])
    cols = torch.as_tensor(perm)
    loss = cost[rows, cols].mean()
    return loss, perm


def eda_bce_loss(probs, n_speakers: int) -> torch.Tensor:
    """Mean binary cross-entropy of n+1 existence probabilities against the
    label vector of n ones followed by a zero."""
    probs = _as_tensor(probs)
    if probs.shape[-1] != n_speakers + 1:
        raise ValueError(
            f"expected {n_speakers + 1} probabilities, got {probs.shape[-1]}"
        )
    probs = probs.clamp(BCE_PROB_CLAMP, 1.0 - BCE_PROB_CLAMP)
    labels = torch.ones_like(probs)
    labels[..., -1] = 0.0
    bce = -(labels * torch.log(probs) + (1.0 - labels) * torch.log(1.0 - probs))
    return bce.mean()


def stage1_loss(refs, ests, probs, n_speakers: int) -> LossBreakdown:
    """Separation-stage loss: PIT term plus the counting BCE term."""
    pit, perm = pit_loss(refs, ests)
    eda = eda_bce_loss(probs, n_speakers)
    return LossBreakdown(total=pit + eda, pit=pit, eda=eda, permutation=perm)


def stage2_loss(ref_target, est_target) -> torch.Tensor:
    """Extraction-stage loss: negative SI-SNR of the single target pair."""
    return -si_snr(_as_tensor(ref_target), _as_tensor(est_target))
