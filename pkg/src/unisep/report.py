"""Per-example evaluation, aggregation, and report emission.

The report is a CSV of one row per (example, reference) pair plus a JSON
summary, with the speaker-counting confusion matrix written both as counts
and as row percentages. Optional quality columns (nb_pesq, wer) are reserved
so external tools can join their own measurements.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from .assign import assign_outputs
from .metrics import sdr_db, si_snr_db
from .seeding import derive_seed
from .train import ManifestDataset

ROW_FIELDS = [
    "example_id", "task", "n_speakers", "n_est", "ref_index", "est_index",
    "duplicated", "si_snr_mix", "si_snr_out", "si_snri",
    "sdr_mix", "sdr_out", "sdri", "nb_pesq", "wer",
]


@dataclass
class EvalRow:
    example_id: str
    task: str
    n_speakers: int
    n_est: int
    ref_index: int
    est_index: int
    duplicated: bool
    si_snr_mix: float
    si_snr_out: float
    si_snri: float
    sdr_mix: float
    sdr_out: float
    sdri: float
    nb_pesq: float | None = None
    wer: float | None = None


@dataclass
class EvalReport:
    task: str
    oracle_n: bool
    rows: list[EvalRow]
    confusion: np.ndarray          # counts, shape (n_max, n_max + 1); row i is N=i+1
    aggregates: dict[str, dict]

    def confusion_percent(self) -> np.ndarray:
        counts = self.confusion.astype(np.float64)
        sums = counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            percent = np.where(sums > 0, 100.0 * counts / sums, 0.0)
        return percent


def counting_confusion(count_pairs: list[tuple[int, int]], n_max: int) -> np.ndarray:
    """Accumulate (true N, estimated N) pairs into a counts matrix with rows
    N=1..n_max and columns N_est=0..n_max."""
    counts = np.zeros((n_max, n_max + 1), dtype=np.int64)
    for n_true, n_est in count_pairs:
        if not 1 <= n_true <= n_max:
            raise ValueError(f"true speaker count {n_true} outside [1, {n_max}]")
        counts[n_true - 1, min(max(n_est, 0), n_max)] += 1
    return counts


def _aggregate(rows: list[EvalRow], count_pairs: list[tuple[int, int]]) -> dict[str, dict]:
    by_key: dict[tuple[str, int], list[EvalRow]] = {}
    for row in rows:
        by_key.setdefault((row.task, row.n_speakers), []).append(row)
    counting: dict[int, list[bool]] = {}
    for n_true, n_est in count_pairs:
        counting.setdefault(n_true, []).append(n_true == n_est)
    aggregates = {}
    for (task, n), group in sorted(by_key.items()):
        correct = counting.get(n, [])
        aggregates[f"{task}/{n}mix"] = {
            "task": task,
            "n_speakers": n,
            "n_rows": len(group),
            "si_snr": float(np.mean([r.si_snr_out for r in group])),
            "si_snri": float(np.mean([r.si_snri for r in group])),
            "sdr": float(np.mean([r.sdr_out for r in group])),
            "sdri": float(np.mean([r.sdri for r in group])),
            "counting_accuracy": float(np.mean(correct)) if correct else float("nan"),
        }
    return aggregates


def evaluate(
    model,
    manifest_path: str,
    task: str = "ss",
    oracle_n: bool = False,
    seed: int = 0,
    assignment_metric: str = "sdr",
) -> EvalReport:
    """Run inference over a manifest and score every reference speaker.

    task "ss": separate, assign estimates to references per the protocol.
    task "tse": extract each speaker with its enrollment; one row per target.
    oracle_n forces the true attractor count; counting is still recorded for
    the confusion matrix.
    """
    if task not in ("ss", "tse"):
        raise ValueError(f"unknown task {task!r}")
    dataset = ManifestDataset([manifest_path])
    n_max = model.config.n_max
    rows: list[EvalRow] = []
    count_pairs: list[tuple[int, int]] = []

    for index in range(len(dataset)):
        item = dataset.load(index)
        n = item["n_speakers"]
        mixture = item["mixture"]
        refs = item["references"]
        shuffle_seed = derive_seed(seed, "eval", item["example_id"])

        def metrics_row(ref_index, est_index, duplicated, est, n_est):
            ref = refs[ref_index]
            si_mix = si_snr_db(ref, mixture)
            si_out = si_snr_db(ref, est)
            sdr_mix = sdr_db(ref, mixture)
            sdr_out = sdr_db(ref, est)
            return EvalRow(
                example_id=item["example_id"], task=task, n_speakers=n, n_est=n_est,
                ref_index=ref_index, est_index=est_index, duplicated=duplicated,
                si_snr_mix=si_mix, si_snr_out=si_out, si_snri=si_out - si_mix,
                sdr_mix=sdr_mix, sdr_out=sdr_out, sdri=sdr_out - sdr_mix,
            )

        if task == "ss":
            result = model.separate(
                mixture, oracle_n=n if oracle_n else None, shuffle_seed=shuffle_seed
            )
            n_est = result.attractor_set.n_est
            ests = result.signals
            if not ests:
                # counting said zero speakers; force a single output so the
                # protocol still yields N rows (n_est stays 0 in the report)
                ests = model.separate(mixture, oracle_n=1, shuffle_seed=shuffle_seed).signals
            assignment = assign_outputs(refs, ests, metric=assignment_metric)
            for ref_index, est_index, duplicated in assignment.all_pairs():
                rows.append(metrics_row(ref_index, est_index, duplicated, ests[est_index], n_est))
        else:
            if len(item["enrollments"]) < n:
                raise ValueError(
                    f"example {item['example_id']} lacks enrollment utterances for tse"
                )
            n_est = None
            for target in range(n):
                result = model.extract(
                    mixture,
                    item["enrollments"][target],
                    oracle_n=n if oracle_n else None,
                    shuffle_seed=shuffle_seed,
                )
                n_est = result.attractor_set.n_est
                rows.append(metrics_row(target, target, False, result.signal, n_est))
        count_pairs.append((n, n_est))

    return EvalReport(
        task=task,
        oracle_n=oracle_n,
        rows=rows,
        confusion=counting_confusion(count_pairs, n_max),
        aggregates=_aggregate(rows, count_pairs),
    )


def write_report(report: EvalReport, out_dir: str) -> dict[str, str]:
    """Write rows.csv, summary.json, and the confusion matrices; returns the
    emitted paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "rows": os.path.join(out_dir, "rows.csv"),
        "summary": os.path.join(out_dir, "summary.json"),
        "confusion_counts": os.path.join(out_dir, "confusion_counts.csv"),
        "confusion_percent": os.path.join(out_dir, "confusion_percent.csv"),
    }
    with open(paths["rows"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=ROW_FIELDS)
        writer.writeheader()
        for row in report.rows:
            record = asdict(row)
            record = {k: ("" if record[k] is None else record[k]) for k in ROW_FIELDS}
            writer.writerow(record)
    with open(paths["summary"], "w", encoding="utf-8") as fh:
        json.dump(
            {
                "task": report.task,
                "oracle_n": report.oracle_n,
                "n_rows": len(report.rows),
                "aggregates": report.aggregates,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    n_max = report.confusion.shape[0]
    header = ["n_true"] + [f"n_est_{j}" for j in range(n_max + 1)]
    for key, matrix in (
        ("confusion_counts", report.confusion),
        ("confusion_percent", report.confusion_percent()),
    ):
        with open(paths[key], "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(n_max):
                writer.writerow([i + 1] + [f"{v:g}" for v in matrix[i]])
    return paths
