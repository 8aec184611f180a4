"""Dataset manifests: one JSON record per line, one record per example.

Audio paths are stored relative to the manifest's directory; the environment
variable UNISEP_DATA_ROOT overrides the resolution root when set.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict

MANIFEST_VERSION = 1
DATA_ROOT_ENV = "UNISEP_DATA_ROOT"


class ManifestError(ValueError):
    pass


@dataclass
class ManifestEntry:
    example_id: str
    n_speakers: int
    mixture_path: str
    reference_paths: list[str]
    enrollment_paths: list[str]
    speaker_ids: list[str]
    snr_db: float | None
    seed: int
    room: dict = field(default_factory=dict)


@dataclass
class Manifest:
    split: str
    entries: list[ManifestEntry] = field(default_factory=list)


def write_manifest(manifest: Manifest, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        header = {"manifest_version": MANIFEST_VERSION, "split": manifest.split}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for entry in manifest.entries:
            fh.write(json.dumps(asdict(entry), sort_keys=True) + "\n")


def load_manifest(path: str) -> Manifest:
    entries: list[ManifestEntry] = []
    split = ""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise ManifestError(f"{path}:{lineno}: malformed record: {err}") from err
            if lineno == 1:
                if record.get("manifest_version") != MANIFEST_VERSION:
                    raise ManifestError(
                        f"{path}:{lineno}: unsupported manifest version "
                        f"{record.get('manifest_version')!r}"
                    )
                split = record.get("split", "")
                continue
            try:
                entries.append(ManifestEntry(**record))
            except TypeError as err:
                raise ManifestError(f"{path}:{lineno}: malformed record: {err}") from err
    return Manifest(split=split, entries=entries)


def resolve_path(manifest_path: str, relative: str) -> str:
    """Resolve a manifest-relative audio path, honoring UNISEP_DATA_ROOT."""
    root = os.environ.get(DATA_ROOT_ENV) or os.path.dirname(os.path.abspath(manifest_path))
    return os.path.join(root, relative)
