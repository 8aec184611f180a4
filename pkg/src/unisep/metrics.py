"""Evaluation metrics: SI-SNR (scalar wrapper) and projection-based SDR."""

from __future__ import annotations

import numpy as np
import torch
from scipy.linalg import toeplitz
from scipy.signal import fftconvolve

from .losses import si_snr
from .signal_ops import Waveform

SDR_TAPS = 512
SDR_EPS = 1e-8


def _samples(x) -> np.ndarray:
    if isinstance(x, Waveform):
        return x.samples
    return np.asarray(x, dtype=np.float64)


def si_snr_db(ref, est) -> float:
    """Scale-invariant SNR in dB between two equal-length signals."""
    ref, est = _samples(ref), _samples(est)
    if ref.shape != est.shape:
        raise ValueError("length mismatch")
    return float(si_snr(torch.as_tensor(ref), torch.as_tensor(est)))


def sdr_db(ref, est, n_taps: int = SDR_TAPS, eps: float = SDR_EPS) -> float:
    """Signal-to-distortion ratio in dB.

    The target subspace is the span of the reference delayed by 0..n_taps-1
    samples; the best FIR projection of the estimate onto it is the exact
    least squares over the signal support (Toeplitz autocorrelation Gram,
    corrected for the truncation at the signal end).
    """
    ref, est = _samples(ref), _samples(est)
    if ref.shape != est.shape:
        raise ValueError("length mismatch")
    n = ref.size
    if not np.any(ref):
        raise ValueError("degenerate zero reference")
    n_taps = min(n_taps, n)

    autocorr = fftconvolve(ref, ref[::-1])[n - 1 : n - 1 + n_taps]
    crosscorr = fftconvolve(est, ref[::-1])[n - 1 : n - 1 + n_taps]
    gram = toeplitz(autocorr)
    # exact least squares over the first n samples: remove the tail terms the
    # zero-padded autocorrelation counts beyond the signal end
    tails = np.zeros((n_taps, n_taps))
    for k in range(1, n_taps):
        tails[k, :k] = ref[n - k : n]
    gram -= tails @ tails.T
    gram[np.diag_indices_from(gram)] += 1e-12 * autocorr[0]
    taps = np.linalg.solve(gram, crosscorr)

    target = fftconvolve(ref, taps)[:n]
    residual = est - target
    target_energy = float(np.sum(target**2))
    residual_energy = float(np.sum(residual**2))
    total = target_energy + residual_energy
    tiny = np.finfo(np.float64).tiny
    ratio = (target_energy + eps * total + tiny) / (residual_energy + eps * total + tiny)
    return float(10.0 * np.log10(ratio))
