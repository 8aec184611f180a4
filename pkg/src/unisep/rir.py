"""Room impulse response synthesis (shoebox image-source method).

Early reflections come from the image-source sum; the late tail is seeded
exponentially decaying noise matched to the requested decay time, a standard
hybrid that keeps desk-scale generation fast. The early-reference RIR is the
full RIR windowed to the 50 ms after the direct-path peak.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .seeding import derive_seed
from .signal_ops import Waveform

SPEED_OF_SOUND = 343.0
RT60_RANGE = (0.150, 0.650)
EARLY_WINDOW_SECONDS = 0.050
# image-source horizon; beyond it the stochastic tail takes over
ISM_SECONDS = 0.080


@dataclass
class RoomSpec:
    """Shoebox room geometry for one source/microphone pair.

    rt60 == 0 selects anechoic mode (identity impulse response, so references
    equal the dry sources exactly); otherwise rt60 must lie in RT60_RANGE.
    """

    dimensions: tuple[float, float, float]
    rt60: float
    source: tuple[float, float, float]
    mic: tuple[float, float, float]
    seed: int
    sample_rate: int = 8000

    def __post_init__(self):
        if any(d <= 0 for d in self.dimensions):
            raise ValueError("room dimensions must be positive")
        if self.rt60 != 0.0 and not (RT60_RANGE[0] <= self.rt60 <= RT60_RANGE[1]):
            raise ValueError(
                f"rt60 must be 0 (anechoic) or within {RT60_RANGE}, got {self.rt60}"
            )

    def _check_inside(self, point, name: str):
        for coord, dim in zip(point, self.dimensions):
            if not (0.0 < coord < dim):
                raise ValueError(f"{name} position {point} lies outside the room")

    def validate_geometry(self):
        self._check_inside(self.source, "source")
        self._check_inside(self.mic, "mic")


def _sabine_reflection_coefficient(dimensions, rt60: float) -> float:
    lx, ly, lz = dimensions
    volume = lx * ly * lz
    surface = 2.0 * (lx * ly + lx * lz + ly * lz)
    absorption = 0.161 * volume / (surface * rt60)
    absorption = min(absorption, 0.9999)
    return float(np.sqrt(1.0 - absorption))


def simulate_rir(room: RoomSpec) -> tuple[Waveform, Waveform]:
    """Synthesize (full_rir, early_rir) for the room.

    Image pulses are placed at the nearest sample; the direct-path tap is
    normalized to 1. early_rir is zero outside [peak, peak + 50 ms).
    """
    room.validate_geometry()
    fs = room.sample_rate

    if room.rt60 == 0.0:
        impulse = Waveform(np.array([1.0]), fs)
        return impulse, Waveform(impulse.samples.copy(), fs)

    src = np.asarray(room.source, dtype=np.float64)
    mic = np.asarray(room.mic, dtype=np.float64)
    dims = np.asarray(room.dimensions, dtype=np.float64)
    beta = _sabine_reflection_coefficient(room.dimensions, room.rt60)

    direct_dist = float(np.linalg.norm(src - mic))
    direct_delay = direct_dist / SPEED_OF_SOUND
    ism_limit = direct_delay + ISM_SECONDS
    total_seconds = direct_delay + room.rt60 + EARLY_WINDOW_SECONDS
    n_samples = int(np.ceil(total_seconds * fs)) + 1
    rir = np.zeros(n_samples)

    # image lattice large enough to cover the image-source horizon
    max_dist = SPEED_OF_SOUND * ism_limit
    orders = [int(np.ceil(max_dist / (2.0 * d))) + 1 for d in dims]
    ranges = [range(-o, o + 1) for o in orders]
    for mx, my, mz in product(*ranges):
        for px, py, pz in product((0, 1), repeat=3):
            image = np.array(
                [
                    (1 - 2 * px) * src[0] + 2 * mx * dims[0],
                    (1 - 2 * py) * src[1] + 2 * my * dims[1],
                    (1 - 2 * pz) * src[2] + 2 * mz * dims[2],
                ]
            )
            dist = float(np.linalg.norm(image - mic))
            delay = dist / SPEED_OF_SOUND
            if delay > ism_limit:
                continue
            n_reflections = (
                abs(2 * mx - px) + abs(2 * my - py) + abs(2 * mz - pz)
            )
            # amplitude relative to the direct tap (1/distance spreading)
            amp = (beta**n_reflections) * (direct_dist / max(dist, 1e-6))
            rir[int(round(delay * fs))] += amp

    # stochastic late tail continuing the -60 dB / rt60 decay
    cutoff = int(round(ism_limit * fs))
    decay_rate = 3.0 / room.rt60  # log10 amplitude decay per second
    times = np.arange(cutoff, n_samples) / fs
    envelope = 10.0 ** (-decay_rate * (times - direct_delay))
    window = rir[max(cutoff - int(0.01 * fs), 0) : cutoff]
    local_rms = float(np.sqrt(np.mean(window**2))) if window.size else 0.0
    junction = 10.0 ** (-decay_rate * (cutoff / fs - direct_delay))
    scale = local_rms / junction if junction > 0 and local_rms > 0 else 1.0
    rng = np.random.default_rng(derive_seed(room.seed, "rir-tail"))
    rir[cutoff:] += scale * envelope * rng.standard_normal(n_samples - cutoff)

    early = np.zeros_like(rir)
    peak = int(np.argmax(np.abs(rir)))
    end = min(peak + int(round(EARLY_WINDOW_SECONDS * fs)), n_samples)
    early[peak:end] = rir[peak:end]
    return Waveform(rir, fs), Waveform(early, fs)
