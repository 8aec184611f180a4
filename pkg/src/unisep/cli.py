"""Command-line interface.

Subcommands compose the library: `simulate` builds datasets, `train` runs one
training stage, `separate`/`extract` run inference on single mixtures, and
`evaluate` scores a manifest and renders report figures. Each command reads an
optional JSON config; flags override config keys; the resolved config is
persisted next to the outputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .audio_io import read_wav, write_wav
from .checkpoint import load_checkpoint, save_checkpoint
from .model import ModelConfig
from .plots import render_report_figures
from .report import evaluate, write_report
from .seeding import derive_seed
from .signal_ops import Waveform
from .simulate import SimulateConfig, simulate_dataset
from .train import TrainConfig, train_stage1, train_stage2


class CliError(RuntimeError):
    pass


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as err:
        raise CliError(f"config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise CliError(f"malformed config {path}: {err}") from err
    if not isinstance(data, dict):
        raise CliError(f"config {path} must hold a JSON object")
    return data


def _build(cls, data: dict, section: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise CliError(f"unknown keys in config section {section!r}: {', '.join(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as err:
        raise CliError(f"invalid config section {section!r}: {err}") from err


KNOWN_SECTIONS = {"simulate", "model", "train"}


def _check_sections(config: dict, path: str | None) -> None:
    unknown = sorted(set(config) - KNOWN_SECTIONS)
    if unknown:
        raise CliError(f"unknown top-level config keys in {path}: {', '.join(unknown)}")


def _persist_resolved(out_dir: str, resolved: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "resolved_config.json"), "w", encoding="utf-8") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_simulate(args) -> int:
    config = _load_config_file(args.config)
    _check_sections(config, args.config)
    section = dict(config.get("simulate", {}))
    if args.out:
        section["out_dir"] = args.out
    if args.seed is not None:
        section["seed"] = args.seed
    cfg = _build(SimulateConfig, section, "simulate")
    _persist_resolved(cfg.out_dir, {"simulate": dataclasses.asdict(cfg)})
    manifest_path = simulate_dataset(cfg)
    print(f"wrote manifest {manifest_path}")
    return 0


def cmd_train(args) -> int:
    config = _load_config_file(args.config)
    _check_sections(config, args.config)
    model_cfg = _build(ModelConfig, dict(config.get("model", {})), "model")
    section = dict(config.get("train", {}))
    if args.stage is not None:
        section["stage"] = args.stage
    if args.seed is not None:
        section["seed"] = args.seed
    train_cfg = _build(TrainConfig, section, "train")
    out_dir = args.out or "runs"
    if not train_cfg.log_path:
        train_cfg.log_path = os.path.join(out_dir, f"train_stage{train_cfg.stage}.jsonl")
    _persist_resolved(
        out_dir, {"model": model_cfg.to_dict(), "train": train_cfg.to_dict()}
    )

    if train_cfg.stage == 1:
        result = train_stage1(train_cfg, model_cfg)
    elif train_cfg.stage == 2:
        if not args.init:
            raise CliError("--init stage-1 checkpoint is required for stage 2")
        result = train_stage2(train_cfg, load_checkpoint(args.init))
    else:
        raise CliError(f"unknown training stage {train_cfg.stage}")

    ckpt_path = os.path.join(out_dir, f"checkpoint_stage{train_cfg.stage}.pt")
    save_checkpoint(result.checkpoint, ckpt_path)
    final = result.history[-1]["loss"] if result.history else float("nan")
    print(f"stage {train_cfg.stage}: {result.checkpoint.step} steps, final loss {final:.3f}")
    print(f"wrote checkpoint {ckpt_path}")
    return 0


def _load_model(ckpt_path: str):
    ckpt = load_checkpoint(ckpt_path)
    return ckpt, ckpt.build_model()


def cmd_separate(args) -> int:
    _, model = _load_model(args.ckpt)
    mixture = read_wav(args.mixture)
    if mixture.sample_rate != model.config.sample_rate:
        raise CliError(
            f"mixture sample rate {mixture.sample_rate} != model rate "
            f"{model.config.sample_rate}"
        )
    seed = derive_seed(args.seed or 0, "separate", os.path.basename(args.mixture))
    result = model.separate(mixture.samples, oracle_n=args.oracle_n, shuffle_seed=seed)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    attractors = result.attractor_set
    for i, signal in enumerate(result.signals):
        write_wav(
            os.path.join(out_dir, f"speaker_{i:02d}.wav"),
            Waveform(signal, model.config.sample_rate),
        )
    with open(os.path.join(out_dir, "counting.json"), "w", encoding="utf-8") as fh:
        json.dump(
            {"n_est": attractors.n_est, "probabilities": attractors.probabilities},
            fh,
            indent=2,
        )
        fh.write("\n")
    probs = ", ".join(f"{p:.3f}" for p in attractors.probabilities)
    print(f"estimated speakers: {attractors.n_est} (probabilities: {probs})")
    print(f"wrote {len(result.signals)} signals to {out_dir}")
    return 0


def cmd_extract(args) -> int:
    _, model = _load_model(args.ckpt)
    mixture = read_wav(args.mixture)
    enrollment = read_wav(args.enrollment)
    if mixture.sample_rate != enrollment.sample_rate:
        raise CliError("mixture and enrollment sample rates differ")
    seed = derive_seed(args.seed or 0, "extract", os.path.basename(args.mixture))
    result = model.extract(
        mixture.samples, enrollment.samples, oracle_n=args.oracle_n, shuffle_seed=seed
    )
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    write_wav(
        os.path.join(out_dir, "target.wav"), Waveform(result.signal, model.config.sample_rate)
    )
    attention_means = result.attention.mean(axis=(1, 2)).tolist()
    with open(os.path.join(out_dir, "attention_summary.json"), "w", encoding="utf-8") as fh:
        json.dump(
            {
                "n_est": result.attractor_set.n_est,
                "probabilities": result.attractor_set.probabilities,
                "mean_attention_per_speaker": attention_means,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    weights = ", ".join(f"{w:.3f}" for w in attention_means)
    print(f"wrote target.wav to {out_dir} (mean attention per speaker: {weights})")
    return 0


def cmd_evaluate(args) -> int:
    _, model = _load_model(args.ckpt)
    report = evaluate(
        model,
        args.manifest,
        task=args.task,
        oracle_n=args.oracle_n,
        seed=args.seed or 0,
    )
    out_dir = args.out or "eval"
    paths = write_report(report, out_dir)
    figures = render_report_figures(report, out_dir)
    _persist_resolved(
        out_dir,
        {
            "evaluate": {
                "ckpt": args.ckpt,
                "manifest": args.manifest,
                "task": args.task,
                "oracle_n": args.oracle_n,
                "seed": args.seed or 0,
            }
        },
    )
    for key, agg in report.aggregates.items():
        print(
            f"{key}: si_snri {agg['si_snri']:.2f} dB, sdri {agg['sdri']:.2f} dB, "
            f"counting {100 * agg['counting_accuracy']:.0f}%"
        )
    print(f"wrote report to {paths['rows']} and figures to {figures['confusion']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unisep",
        description="Multi-task speech enhancement: simulate, train, separate, extract, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a dataset and manifest")
    p.add_argument("--config", help="JSON config with a 'simulate' section")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--seed", type=int, help="root seed (overrides config)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="run one training stage")
    p.add_argument("--config", help="JSON config with 'model' and 'train' sections")
    p.add_argument("--stage", type=int, choices=(1, 2), help="training stage")
    p.add_argument("--init", help="stage-1 checkpoint (required for stage 2)")
    p.add_argument("--out", help="output directory for checkpoint and logs")
    p.add_argument("--seed", type=int, help="training seed (overrides config)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("separate", help="separate a mixture into speakers")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--mixture", required=True)
    p.add_argument("--oracle-n", type=int, default=None, help="force the speaker count")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("extract", help="extract the enrolled speaker")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--mixture", required=True)
    p.add_argument("--enrollment", required=True)
    p.add_argument("--oracle-n", type=int, default=None)
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="score a manifest and render figures")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--task", choices=("ss", "tse"), default="ss")
    p.add_argument("--oracle-n", action="store_true", help="use the true speaker count")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as err:  # one-line diagnostic, nonzero exit
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
