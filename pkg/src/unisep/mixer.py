"""Noisy-reverberant mixture assembly.

Each dry source is convolved with its room's full RIR; the mixture is the sum
of the reverberant sources plus gain-scaled noise. References are the dry
sources convolved with the early (first 50 ms) RIRs. All signals are truncated
to the shortest source ("min" style).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rir import RoomSpec, simulate_rir
from .signal_ops import Waveform, rms_power, snr_gain

N_MAX_DEFAULT = 5


@dataclass
class MixtureExample:
    mixture: Waveform
    references: list[Waveform]
    dry_sources: list[Waveform]
    noise: Waveform | None
    enrollments: list[Waveform]
    speaker_ids: list[str]
    snr_db: float | None
    rooms: list[RoomSpec]
    noise_gain: float
    seed: int = 0

    @property
    def n_speakers(self) -> int:
        return len(self.references)


def _convolve_trunc(dry: np.ndarray, rir: np.ndarray, length: int) -> np.ndarray:
    return np.convolve(dry, rir)[:length]


def make_example(
    dry_sources: list[Waveform],
    noise: Waveform | None,
    rooms: list[RoomSpec],
    target_snr_db: float | None,
    seed: int,
    enrollments: list[Waveform] | None = None,
    speaker_ids: list[str] | None = None,
    n_max: int = N_MAX_DEFAULT,
) -> MixtureExample:
    """Build one mixture with per-speaker early-reverberant references.

    The noise gain is chosen so the SNR against the lowest-RMS reverberant
    source equals target_snr_db. noise=None (or target_snr_db=None) yields a
    noise-free mixture.
    """
    n = len(dry_sources)
    if n < 1:
        raise ValueError("at least one dry source is required")
    if n > n_max:
        raise ValueError(f"{n} sources exceed the supported maximum of {n_max}")
    if len(rooms) != n:
        raise ValueError("one RoomSpec per dry source is required")
    sample_rate = dry_sources[0].sample_rate
    for wave in dry_sources:
        if wave.sample_rate != sample_rate:
            raise ValueError("sample-rate mismatch among dry sources")
    if noise is not None and noise.sample_rate != sample_rate:
        raise ValueError("sample-rate mismatch between sources and noise")

    length = min(len(w) for w in dry_sources)
    reverberant, references = [], []
    for dry, room in zip(dry_sources, rooms):
        full_rir, early_rir = simulate_rir(room)
        reverberant.append(_convolve_trunc(dry.samples[:length], full_rir.samples, length))
        references.append(_convolve_trunc(dry.samples[:length], early_rir.samples, length))

    mixture = np.sum(reverberant, axis=0)
    noise_gain = 0.0
    if noise is not None and target_snr_db is not None:
        noise_samples = noise.samples
        if noise_samples.size < length:
            reps = int(np.ceil(length / noise_samples.size))
            noise_samples = np.tile(noise_samples, reps)
        noise_samples = noise_samples[:length]
        weakest = min(reverberant, key=rms_power)
        noise_gain = snr_gain(rms_power(weakest), rms_power(noise_samples), target_snr_db)
        mixture = mixture + noise_gain * noise_samples
        noise = Waveform(noise_samples, sample_rate)

    return MixtureExample(
        mixture=Waveform(mixture, sample_rate),
        references=[Waveform(r, sample_rate) for r in references],
        dry_sources=[Waveform(d.samples[:length], sample_rate) for d in dry_sources],
        noise=noise,
        enrollments=list(enrollments or []),
        speaker_ids=list(speaker_ids or [f"speaker{i}" for i in range(n)]),
        snr_db=target_snr_db if noise is not None else None,
        rooms=list(rooms),
        noise_gain=noise_gain,
        seed=seed,
    )


def remeasure_snr_db(example: MixtureExample) -> float:
    """Recompute the noise SNR against the lowest-RMS reverberant source."""
    if example.noise is None or example.noise_gain == 0.0:
        raise ValueError("example has no noise component")
    length = len(example.mixture)
    reverberant = []
    for dry, room in zip(example.dry_sources, example.rooms):
        full_rir, _ = simulate_rir(room)
        reverberant.append(_convolve_trunc(dry.samples[:length], full_rir.samples, length))
    weakest = min(reverberant, key=rms_power)
    scaled_noise = example.noise_gain * example.noise.samples[:length]
    return 20.0 * np.log10(rms_power(weakest) / rms_power(scaled_noise))
