"""Multi-task speech enhancement toolkit.

One model covers denoising, dereverberation, speaker counting, separation, and
enrollment-driven target speaker extraction, together with the simulation,
training, and evaluation machinery around it.
"""

__version__ = "0.1.0"

from .signal_ops import ChunkFeature, Waveform, overlap_add, rms_power, segment, snr_gain

__all__ = [
    "Waveform",
    "ChunkFeature",
    "rms_power",
    "snr_gain",
    "segment",
    "overlap_add",
    "__version__",
]
