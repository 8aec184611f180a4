"""Two-stage training: separation + counting first, then extraction only.

Stage 1 optimizes the permutation-invariant SI-SNR loss plus the counting BCE
with the attractor count teacher-forced to each example's true speaker count.
Stage 2 freezes everything, freshly initializes the extraction modules, and
optimizes the target SI-SNR loss alone. Batches always hold examples with the
same speaker count.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict

import numpy as np
import torch

from .audio_io import read_wav
from .checkpoint import Checkpoint
from .losses import eda_bce_loss, pit_loss, stage2_loss
from .manifest import load_manifest, resolve_path
from .model import ModelConfig, UniSepNet
from .schedule import lr_at
from .seeding import derive_seed

TSE_PREFIXES = ("auxiliary.", "selector.", "refiner.")


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    stage: int = 1
    manifests: list[str] = field(default_factory=list)
    peak_lr: float = 4e-4
    warmup_steps: int = 20000
    decay: float = 0.98             # applied once per two epochs
    epochs: int = 175
    batch_size: int = 4
    segment_seconds: float = 4.0
    seed: int = 0
    n_max: int = 5
    grad_clip: float = 5.0
    n_sampling: str = "proportional"  # or "uniform"
    max_steps: int = 0                # 0 => no cap
    log_path: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: list[dict]


class ManifestDataset:
    """Examples pooled from one or more manifests, loaded lazily and cached."""

    def __init__(self, manifest_paths: list[str]):
        if not manifest_paths:
            raise ValueError("at least one manifest is required")
        self.records = []
        for path in manifest_paths:
            manifest = load_manifest(path)
            for entry in manifest.entries:
                self.records.append((path, entry))
        if not self.records:
            raise ValueError("manifests contain no examples")
        self._cache: dict[int, dict] = {}

    def __len__(self) -> int:
        return len(self.records)

    def groups_by_count(self) -> dict[int, list[int]]:
        groups: dict[int, list[int]] = {}
        for i, (_, entry) in enumerate(self.records):
            groups.setdefault(entry.n_speakers, []).append(i)
        return groups

    def load(self, index: int) -> dict:
        if index in self._cache:
            return self._cache[index]
        manifest_path, entry = self.records[index]
        mixture = read_wav(resolve_path(manifest_path, entry.mixture_path))
        references = [
            read_wav(resolve_path(manifest_path, p)).samples for p in entry.reference_paths
        ]
        enrollments = [
            read_wav(resolve_path(manifest_path, p)).samples for p in entry.enrollment_paths
        ]
        item = {
            "example_id": entry.example_id,
            "n_speakers": entry.n_speakers,
            "sample_rate": mixture.sample_rate,
            "mixture": mixture.samples,
            "references": references,
            "enrollments": enrollments,
            "speaker_ids": entry.speaker_ids,
        }
        self._cache[index] = item
        return item


def _epoch_batches(groups: dict[int, list[int]], cfg: TrainConfig, epoch: int) -> list[list[int]]:
    rng = np.random.default_rng(derive_seed(cfg.seed, "batches", epoch))
    pools: dict[int, list[list[int]]] = {}
    for n, idxs in groups.items():
        order = [idxs[j] for j in rng.permutation(len(idxs))]
        pools[n] = [order[i : i + cfg.batch_size] for i in range(0, len(order), cfg.batch_size)]
    batches: list[list[int]] = []
    if cfg.n_sampling == "uniform":
        while any(pools.values()):
            counts = [n for n in pools if pools[n]]
            n = counts[int(rng.integers(len(counts)))]
            batches.append(pools[n].pop())
    else:
        for n in sorted(pools):
            batches.extend(pools[n])
        rng.shuffle(batches)
    return batches


def _crop(samples: np.ndarray, start: int, length: int) -> tuple[np.ndarray, int]:
    """Crop-and-pad to a fixed length; returns (segment, valid_length)."""
    segment = samples[start : start + length]
    valid = segment.size
    if valid < length:
        segment = np.concatenate([segment, np.zeros(length - valid)])
    return segment, valid


def _batch_tensors(dataset, batch, cfg: TrainConfig, epoch: int, segment_len: int):
    mixtures, refs, valids, items = [], [], [], []
    for index in batch:
        item = dataset.load(index)
        rng = np.random.default_rng(derive_seed(cfg.seed, "crop", epoch, index))
        total = item["mixture"].size
        start = int(rng.integers(max(total - segment_len, 0) + 1))
        mix, valid = _crop(item["mixture"], start, segment_len)
        mixtures.append(mix)
        refs.append([_crop(r, start, segment_len)[0] for r in item["references"]])
        valids.append(valid)
        items.append(item)
    mixture_t = torch.as_tensor(np.stack(mixtures), dtype=torch.float32)
    refs_t = torch.as_tensor(np.stack([np.stack(r) for r in refs]), dtype=torch.float32)
    return mixture_t, refs_t, valids, items


def _append_log(log_path: str | None, record: dict) -> None:
    if not log_path:
        return
    os.makedirs(os.path.dirname(os.path.abspath(log_path)), exist_ok=True)
    with open(log_path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def _check_finite(loss: torch.Tensor, step: int) -> None:
    if not torch.isfinite(loss):
        raise TrainingDiverged(f"non-finite loss at step {step}")


def train_stage1(
    cfg: TrainConfig, model_cfg: ModelConfig, init: Checkpoint | None = None
) -> TrainResult:
    """Train encoder, feature extractor, internal separation, mask estimator,
    and decoder; extraction modules stay at their initialization.

    Passing a checkpoint as init continues from its weights (e.g. fine-tuning
    a model trained on anechoic data with noisy-reverberant data).
    """
    dataset = ManifestDataset(cfg.manifests)
    groups = dataset.groups_by_count()
    if max(groups) > cfg.n_max:
        raise ValueError(f"dataset contains {max(groups)}-speaker examples, cap is {cfg.n_max}")
    torch.manual_seed(derive_seed(cfg.seed, "model-init"))
    if init is not None:
        model_cfg = init.model_config
        model = UniSepNet(model_cfg)
        model.load_state_dict(init.state_dict)
    else:
        model = UniSepNet(model_cfg)
    model.train()
    trainable = [p for name, p in model.named_parameters() if not name.startswith(TSE_PREFIXES)]
    optimizer = torch.optim.Adam(trainable, lr=cfg.peak_lr)
    segment_len = int(round(cfg.segment_seconds * model_cfg.sample_rate))

    history: list[dict] = []
    step = 0
    done = False
    for epoch in range(cfg.epochs):
        if done:
            break
        for batch in _epoch_batches(groups, cfg, epoch):
            step += 1
            mixture, refs, valids, items = _batch_tensors(dataset, batch, cfg, epoch, segment_len)
            n_speakers = items[0]["n_speakers"]
            lr = lr_at(step, epoch, cfg.peak_lr, cfg.warmup_steps, cfg.decay)
            for group in optimizer.param_groups:
                group["lr"] = lr

            signals, probs = model.forward_separation(
                mixture, n_speakers, derive_seed(cfg.seed, "shuffle", step)
            )
            pit_terms, eda_terms = [], []
            for i, valid in enumerate(valids):
                pit, _ = pit_loss(refs[i, :, :valid], signals[i, :, :valid])
                pit_terms.append(pit)
                eda_terms.append(eda_bce_loss(probs[i], n_speakers))
            pit_mean = torch.stack(pit_terms).mean()
            eda_mean = torch.stack(eda_terms).mean()
            loss = pit_mean + eda_mean
            _check_finite(loss, step)

            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(trainable, cfg.grad_clip)
            optimizer.step()

            record = {
                "stage": 1,
                "step": step,
                "epoch": epoch,
                "lr": lr,
                "loss": float(loss.detach()),
                "pit": float(pit_mean.detach()),
                "eda": float(eda_mean.detach()),
            }
            history.append(record)
            _append_log(cfg.log_path, record)
            if cfg.max_steps and step >= cfg.max_steps:
                done = True
                break

    model.eval()
    ckpt = Checkpoint(
        model_config=model_cfg,
        state_dict={k: v.detach().clone() for k, v in model.state_dict().items()},
        stage=1,
        step=step,
        epoch=min(epoch, cfg.epochs - 1) if cfg.epochs else 0,
        train_config=cfg.to_dict(),
        rng_state=torch.get_rng_state(),
    )
    return TrainResult(ckpt, history)


def train_stage2(cfg: TrainConfig, init: Checkpoint) -> TrainResult:
    """Insert and train the extraction modules only; every other parameter is
    loaded from the checkpoint and frozen.

    A stage-1 checkpoint gets freshly initialized (seeded) extraction modules;
    a stage-2 checkpoint resumes its extraction modules as they are.
    """
    dataset = ManifestDataset(cfg.manifests)
    groups = dataset.groups_by_count()
    model_cfg = init.model_config
    torch.manual_seed(derive_seed(cfg.seed, "tse-init"))
    model = UniSepNet(model_cfg)  # fresh, seeded extraction modules
    if init.stage >= 2:
        state = init.state_dict
    else:
        state = {k: v for k, v in init.state_dict.items() if not k.startswith(TSE_PREFIXES)}
    missing, unexpected = model.load_state_dict(state, strict=False)
    if unexpected or any(not k.startswith(TSE_PREFIXES) for k in missing):
        raise ValueError("stage-1 checkpoint does not match the model layout")
    for name, param in model.named_parameters():
        param.requires_grad_(name.startswith(TSE_PREFIXES))
    model.train()
    tse_params = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(tse_params, lr=cfg.peak_lr)
    segment_len = int(round(cfg.segment_seconds * model_cfg.sample_rate))

    history: list[dict] = []
    step = 0
    done = False
    for epoch in range(cfg.epochs):
        if done:
            break
        for batch in _epoch_batches(groups, cfg, epoch):
            step += 1
            mixture, refs, valids, items = _batch_tensors(dataset, batch, cfg, epoch, segment_len)
            n_speakers = items[0]["n_speakers"]
            lr = lr_at(step, epoch, cfg.peak_lr, cfg.warmup_steps, cfg.decay)
            for group in optimizer.param_groups:
                group["lr"] = lr

            targets, enrollments = [], []
            for pos, (index, item) in enumerate(zip(batch, items)):
                if not item["enrollments"]:
                    raise ValueError(
                        f"example {item['example_id']} has no enrollment utterances"
                    )
                rng = np.random.default_rng(derive_seed(cfg.seed, "target", epoch, index))
                targets.append(int(rng.integers(item["n_speakers"])))
                enrollments.append(item["enrollments"][targets[-1]])
            enroll_len = max(e.size for e in enrollments)
            enroll_t = torch.as_tensor(
                np.stack([_crop(e, 0, enroll_len)[0] for e in enrollments]),
                dtype=torch.float32,
            )

            estimate, _, _ = model.forward_extraction(
                mixture,
                enroll_t,
                n_speakers,
                derive_seed(cfg.seed, "shuffle", step),
                frozen_front=True,
            )
            terms = []
            for i, valid in enumerate(valids):
                terms.append(stage2_loss(refs[i, targets[i], :valid], estimate[i, :valid]))
            loss = torch.stack(terms).mean()
            _check_finite(loss, step)

            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(tse_params, cfg.grad_clip)
            optimizer.step()

            record = {
                "stage": 2,
                "step": step,
                "epoch": epoch,
                "lr": lr,
                "loss": float(loss.detach()),
                "tse": float(loss.detach()),
            }
            history.append(record)
            _append_log(cfg.log_path, record)
            if cfg.max_steps and step >= cfg.max_steps:
                done = True
                break

    model.eval()
    ckpt = Checkpoint(
        model_config=model_cfg,
        state_dict={k: v.detach().clone() for k, v in model.state_dict().items()},
        stage=2,
        step=step,
        epoch=min(epoch, cfg.epochs - 1) if cfg.epochs else 0,
        train_config=cfg.to_dict(),
        rng_state=torch.get_rng_state(),
    )
    return TrainResult(ckpt, history)
