"""Estimate-to-reference assignment when the estimated speaker count differs
from the true count.

The optimal injective assignment (maximizing the summed score) covers the
min(N, N_est) side. Overestimation drops the unmatched estimates;
underestimation pairs each leftover reference with whichever estimate scores
highest against it, duplication allowed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .metrics import sdr_db, si_snr_db


@dataclass
class AssignmentResult:
    pairs: list[tuple[int, int]]        # (ref_index, est_index), estimates distinct
    duplicated: list[tuple[int, int]]   # (ref_index, est_index), reuse allowed
    mode: str                           # "exact" | "over" | "under"

    def all_pairs(self) -> list[tuple[int, int, bool]]:
        out = [(r, e, False) for r, e in self.pairs]
        out += [(r, e, True) for r, e in self.duplicated]
        return sorted(out)


def best_assignment(score: np.ndarray) -> list[tuple[int, int]]:
    """Max-total-score injective assignment on the smaller side of a
    (n_refs, n_ests) score matrix."""
    score = np.asarray(score, dtype=np.float64)
    rows, cols = linear_sum_assignment(-score)
    return sorted(zip(rows.tolist(), cols.tolist()))


def assign_from_matrix(score: np.ndarray) -> AssignmentResult:
    """Assignment protocol on a precomputed (n_refs, n_ests) score matrix."""
    score = np.asarray(score, dtype=np.float64)
    n_refs, n_ests = score.shape
    if n_ests < 1:
        raise ValueError("no outputs to assign")
    pairs = best_assignment(score)
    matched = {r for r, _ in pairs}
    duplicated = [
        (r, int(np.argmax(score[r]))) for r in range(n_refs) if r not in matched
    ]
    if n_ests > n_refs:
        mode = "over"
    elif n_ests < n_refs:
        mode = "under"
    else:
        mode = "exact"
    return AssignmentResult(pairs=pairs, duplicated=duplicated, mode=mode)


def score_matrix(refs, ests, metric: str = "sdr") -> np.ndarray:
    scorer = {"sdr": sdr_db, "si_snr": si_snr_db}[metric]
    return np.array([[scorer(ref, est) for est in ests] for ref in refs])


def assign_outputs(refs, ests, metric: str = "sdr") -> AssignmentResult:
    """Assign estimated signals to references by the configured metric."""
    if len(ests) < 1:
        raise ValueError("no outputs to assign")
    if len(refs) < 1:
        raise ValueError("no references to assign")
    return assign_from_matrix(score_matrix(refs, ests, metric))
