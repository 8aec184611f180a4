"""Clean-speech corpora and enrollment sampling.

The built-in synthetic corpus generates speech-like utterances (glottal pulse
train plus aspiration noise through per-speaker formant resonators) so the
whole pipeline runs self-contained; any directory of per-speaker WAV files can
be swapped in.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.signal import lfilter

from .audio_io import read_wav
from .seeding import derive_seed
from .signal_ops import Waveform


class SyntheticCorpus:
    """Deterministic speaker-discriminative clean corpus.

    Speakers differ in fundamental frequency and formant layout; utterances of
    one speaker differ in prosody (syllable envelope, f0 contour). Everything
    is a pure function of (corpus seed, speaker id, utterance id).
    """

    def __init__(
        self,
        n_speakers: int = 8,
        utterances_per_speaker: int = 3,
        utterance_seconds: float = 1.0,
        sample_rate: int = 8000,
        seed: int = 0,
    ):
        if n_speakers < 1 or utterances_per_speaker < 1:
            raise ValueError("corpus needs at least one speaker and one utterance")
        self.n_speakers = n_speakers
        self.utterances_per_speaker = utterances_per_speaker
        self.utterance_seconds = utterance_seconds
        self.sample_rate = sample_rate
        self.seed = seed

    def speakers(self) -> list[str]:
        return [f"spk{i:03d}" for i in range(self.n_speakers)]

    def utterances(self, speaker_id: str) -> list[str]:
        if speaker_id not in self.speakers():
            raise KeyError(f"unknown speaker {speaker_id!r}")
        return [f"utt{i:02d}" for i in range(self.utterances_per_speaker)]

    def _speaker_profile(self, speaker_id: str) -> dict:
        rng = np.random.default_rng(derive_seed(self.seed, "speaker", speaker_id))
        return {
            "f0": rng.uniform(85.0, 240.0),
            "formants": [
                rng.uniform(300.0, 900.0),
                rng.uniform(1000.0, 2100.0),
                rng.uniform(2300.0, 3500.0),
            ],
            "bandwidths": rng.uniform(60.0, 130.0, size=3),
            "breathiness": rng.uniform(0.02, 0.12),
        }

    def load(self, speaker_id: str, utterance_id: str) -> Waveform:
        if utterance_id not in self.utterances(speaker_id):
            raise KeyError(f"unknown utterance {utterance_id!r} for {speaker_id!r}")
        profile = self._speaker_profile(speaker_id)
        rng = np.random.default_rng(
            derive_seed(self.seed, "utterance", speaker_id, utterance_id)
        )
        fs = self.sample_rate
        n = int(round(self.utterance_seconds * fs))
        t = np.arange(n) / fs

        # Voiced excitation: impulse train at a slowly drifting f0.
        contour = profile["f0"] * (1.0 + 0.08 * np.sin(2 * np.pi * rng.uniform(0.7, 2.0) * t + rng.uniform(0, 2 * np.pi)))
        phase = np.cumsum(contour) / fs
        pulses = np.zeros(n)
        pulse_positions = np.nonzero(np.diff(np.floor(phase)) > 0)[0]
        pulses[pulse_positions] = 1.0
        excitation = pulses + profile["breathiness"] * rng.standard_normal(n)

        # Per-speaker vocal tract: cascaded two-pole resonators.
        out = excitation
        for freq, bw in zip(profile["formants"], profile["bandwidths"]):
            r = np.exp(-np.pi * bw / fs)
            a = [1.0, -2.0 * r * np.cos(2 * np.pi * freq / fs), r * r]
            out = lfilter([1.0 - r], a, out)

        # Syllabic amplitude envelope, never fully silent.
        syllable_rate = rng.uniform(2.0, 5.0)
        envelope = 0.25 + 0.75 * np.clip(
            np.sin(2 * np.pi * syllable_rate * t + rng.uniform(0, 2 * np.pi)), 0.0, None
        )
        out = out * envelope
        out = out / (np.sqrt(np.mean(out**2)) + 1e-12) * 0.08
        return Waveform(out, fs)


class DirectoryCorpus:
    """User-supplied corpus laid out as <root>/<speaker_id>/<utterance>.wav."""

    def __init__(self, root: str):
        if not os.path.isdir(root):
            raise FileNotFoundError(f"corpus root {root!r} is not a directory")
        self.root = root

    def speakers(self) -> list[str]:
        return sorted(
            d for d in os.listdir(self.root) if os.path.isdir(os.path.join(self.root, d))
        )

    def utterances(self, speaker_id: str) -> list[str]:
        spk_dir = os.path.join(self.root, speaker_id)
        if not os.path.isdir(spk_dir):
            raise KeyError(f"unknown speaker {speaker_id!r}")
        return sorted(
            os.path.splitext(f)[0] for f in os.listdir(spk_dir) if f.endswith(".wav")
        )

    def load(self, speaker_id: str, utterance_id: str) -> Waveform:
        return read_wav(os.path.join(self.root, speaker_id, utterance_id + ".wav"))


def pick_enrollment_id(corpus, speaker_id: str, exclude_utterance_id: str | None, seed: int) -> str:
    """Pick an utterance id of the speaker, uniformly among those different
    from the excluded one."""
    utts = list(corpus.utterances(speaker_id))
    candidates = [u for u in utts if u != exclude_utterance_id]
    if not candidates:
        raise ValueError(f"no enrollment available for speaker {speaker_id!r}")
    rng = np.random.default_rng(
        derive_seed(seed, "enrollment", speaker_id, exclude_utterance_id)
    )
    return candidates[int(rng.integers(len(candidates)))]


def pick_enrollment(corpus, speaker_id: str, exclude_utterance_id: str | None, seed: int) -> Waveform:
    """Load an enrollment utterance different from the excluded recording."""
    return corpus.load(
        speaker_id, pick_enrollment_id(corpus, speaker_id, exclude_utterance_id, seed)
    )


def synthetic_noise(n_samples: int, sample_rate: int, seed: int) -> Waveform:
    """Seeded ambient-like noise: white noise shaped by a gentle lowpass."""
    rng = np.random.default_rng(derive_seed(seed, "noise"))
    white = rng.standard_normal(n_samples)
    shaped = lfilter([1.0], [1.0, -0.9], white)
    shaped = shaped / (np.sqrt(np.mean(shaped**2)) + 1e-12) * 0.1
    return Waveform(shaped, sample_rate)
