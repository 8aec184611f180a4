"""Dataset synthesis driver: rooms, speakers, mixing, audio files, manifest."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .audio_io import write_wav
from .corpus import SyntheticCorpus, pick_enrollment_id, synthetic_noise
from .manifest import Manifest, ManifestEntry, write_manifest
from .mixer import make_example
from .rir import RoomSpec
from .seeding import derive_seed


@dataclass
class SimulateConfig:
    out_dir: str = "data"
    split: str = "train"
    n_examples: int = 8
    speaker_counts: list[int] = field(default_factory=lambda: [2])
    snr_range: tuple[float, float] | None = (0.0, 15.0)
    rt60_range: tuple[float, float] | None = (0.150, 0.650)  # None => anechoic
    room_x_range: tuple[float, float] = (4.0, 8.0)
    room_y_range: tuple[float, float] = (3.0, 6.0)
    room_z_range: tuple[float, float] = (2.5, 3.5)
    sample_rate: int = 8000
    seed: int = 0
    corpus_speakers: int = 8
    corpus_utterances: int = 3
    utterance_seconds: float = 1.0


def _random_position(rng, dims, margin: float = 0.3):
    return tuple(float(rng.uniform(margin, d - margin)) for d in dims)


def simulate_example(cfg: SimulateConfig, corpus, index: int):
    """Build one example deterministically from (cfg.seed, cfg.split, index)."""
    rng = np.random.default_rng(derive_seed(cfg.seed, cfg.split, index))
    n = cfg.speaker_counts[index % len(cfg.speaker_counts)]
    speakers = list(rng.choice(corpus.speakers(), size=n, replace=False))

    utt_ids, dry_sources, enrollments, enrollment_ids = [], [], [], []
    for spk in speakers:
        utts = corpus.utterances(spk)
        utt = utts[int(rng.integers(len(utts)))]
        utt_ids.append(utt)
        dry_sources.append(corpus.load(spk, utt))
        enr_id = pick_enrollment_id(
            corpus, spk, utt, derive_seed(cfg.seed, cfg.split, index, "enroll", spk)
        )
        enrollment_ids.append(enr_id)
        enrollments.append(corpus.load(spk, enr_id))

    dims = (
        float(rng.uniform(*cfg.room_x_range)),
        float(rng.uniform(*cfg.room_y_range)),
        float(rng.uniform(*cfg.room_z_range)),
    )
    rt60 = float(rng.uniform(*cfg.rt60_range)) if cfg.rt60_range else 0.0
    mic = _random_position(rng, dims)
    rooms = [
        RoomSpec(
            dimensions=dims,
            rt60=rt60,
            source=_random_position(rng, dims),
            mic=mic,
            seed=derive_seed(cfg.seed, cfg.split, index, "room", i),
            sample_rate=cfg.sample_rate,
        )
        for i in range(n)
    ]

    snr_db = float(rng.uniform(*cfg.snr_range)) if cfg.snr_range else None
    noise = None
    if snr_db is not None:
        max_len = max(len(w) for w in dry_sources)
        noise = synthetic_noise(
            max_len, cfg.sample_rate, derive_seed(cfg.seed, cfg.split, index, "noise")
        )

    example = make_example(
        dry_sources=dry_sources,
        noise=noise,
        rooms=rooms,
        target_snr_db=snr_db,
        seed=derive_seed(cfg.seed, cfg.split, index),
        enrollments=enrollments,
        speaker_ids=speakers,
    )
    return example, utt_ids, enrollment_ids


def simulate_dataset(cfg: SimulateConfig, corpus=None) -> str:
    """Generate the dataset under out_dir/split; returns the manifest path."""
    if corpus is None:
        corpus = SyntheticCorpus(
            n_speakers=cfg.corpus_speakers,
            utterances_per_speaker=cfg.corpus_utterances,
            utterance_seconds=cfg.utterance_seconds,
            sample_rate=cfg.sample_rate,
            seed=derive_seed(cfg.seed, "corpus"),
        )
    if max(cfg.speaker_counts) > cfg.corpus_speakers:
        raise ValueError("speaker_counts exceed the corpus speaker pool")

    split_dir = os.path.join(cfg.out_dir, cfg.split)
    os.makedirs(split_dir, exist_ok=True)
    entries = []
    for index in range(cfg.n_examples):
        example, utt_ids, enrollment_ids = simulate_example(cfg, corpus, index)
        ex_id = f"ex{index:05d}"
        ex_dir = os.path.join(split_dir, ex_id)

        mixture_rel = os.path.join(ex_id, "mixture.wav")
        write_wav(os.path.join(split_dir, mixture_rel), example.mixture)
        ref_rels, enr_rels = [], []
        for i, (ref, enr) in enumerate(zip(example.references, example.enrollments)):
            ref_rel = os.path.join(ex_id, f"ref_{i:02d}.wav")
            enr_rel = os.path.join(ex_id, f"enroll_{i:02d}.wav")
            write_wav(os.path.join(split_dir, ref_rel), ref)
            write_wav(os.path.join(split_dir, enr_rel), enr)
            ref_rels.append(ref_rel)
            enr_rels.append(enr_rel)

        room = example.rooms[0]
        entries.append(
            ManifestEntry(
                example_id=ex_id,
                n_speakers=example.n_speakers,
                mixture_path=mixture_rel,
                reference_paths=ref_rels,
                enrollment_paths=enr_rels,
                speaker_ids=example.speaker_ids,
                snr_db=example.snr_db,
                seed=example.seed,
                room={
                    "dimensions": list(room.dimensions),
                    "rt60": room.rt60,
                    "mic": list(room.mic),
                    "sources": [list(r.source) for r in example.rooms],
                    "noise_gain": example.noise_gain,
                    "utterances": utt_ids,
                    "enrollment_utterances": enrollment_ids,
                },
            )
        )

    manifest_path = os.path.join(split_dir, "manifest.jsonl")
    write_manifest(Manifest(split=cfg.split, entries=entries), manifest_path)
    return manifest_path
