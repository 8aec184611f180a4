"""WAV file I/O. All audio is stored as uncompressed 32-bit float WAV."""

from __future__ import annotations

import os

import numpy as np
from scipy.io import wavfile

from .signal_ops import Waveform

_INT_SCALES = {np.dtype(np.int16): 2.0**15, np.dtype(np.int32): 2.0**31}


def write_wav(path, wave: Waveform) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    wavfile.write(path, wave.sample_rate, wave.samples.astype(np.float32))


def read_wav(path) -> Waveform:
    sample_rate, data = wavfile.read(path)
    if data.ndim == 2:
        # keep the first channel; the toolkit is monaural throughout
        data = data[:, 0]
    if data.dtype in _INT_SCALES:
        data = data.astype(np.float64) / _INT_SCALES[data.dtype]
    elif data.dtype == np.uint8:
        data = (data.astype(np.float64) - 128.0) / 128.0
    return Waveform(np.asarray(data, dtype=np.float64), int(sample_rate))
