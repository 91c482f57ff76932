"""Reproducibility manifests for the file-writing commands.

A manifest freezes everything a rerun needs: the command, the fully
resolved configuration, the master seed, the package version, and one
sha256 digest per delimited output.  Replaying a manifest re-executes the
recorded configuration and compares fresh digests with the recorded ones,
so byte-identical reproduction is checkable without keeping the original
files.  Rendered images are listed but not digested: their bytes are not
part of the numeric contract.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import DomainError

MANIFEST_SUFFIX = ".manifest.json"

try:
    from importlib.metadata import version as _dist_version

    VERSION = _dist_version("bridgelab")
except Exception:  # pragma: no cover - metadata missing outside an install
    VERSION = "0+unknown"

_REQUIRED_FIELDS = ("command", "config", "master_seed", "version", "created_utc", "outputs")
_OPTIONAL_FIELDS = {"artifacts": list, "notes": list}


@dataclass(frozen=True)
class RunManifest:
    """Snapshot of one file-writing run.

    ``outputs`` maps file names (relative to the manifest location) to
    sha256 digests of their bytes; ``artifacts`` lists files written but
    not digested (rendered images).  The timestamp lives only here, never
    in the outputs themselves, so reruns stay byte-identical.
    """

    command: str
    config: dict
    master_seed: int | None
    version: str
    created_utc: str
    outputs: dict[str, str]
    artifacts: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunManifest":
        missing = [name for name in _REQUIRED_FIELDS if name not in raw]
        if missing:
            raise DomainError(f"manifest is missing fields {missing!r}")
        kwargs = {name: raw[name] for name in _REQUIRED_FIELDS}
        for name, factory in _OPTIONAL_FIELDS.items():
            kwargs[name] = raw.get(name, factory())
        return cls(**kwargs)


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_manifest(
    command: str,
    config: dict,
    master_seed: int | None,
    outputs,
    artifacts=(),
    notes=(),
) -> RunManifest:
    """Digest the written outputs and assemble the manifest record."""
    digests = {Path(p).name: file_digest(p) for p in outputs}
    return RunManifest(
        command=command,
        config=dict(config),
        master_seed=master_seed,
        version=VERSION,
        created_utc=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        outputs=digests,
        artifacts=[Path(p).name for p in artifacts],
        notes=list(notes),
    )


def manifest_path_for(out_path: Path) -> Path:
    out_path = Path(out_path)
    return out_path.with_name(out_path.stem + MANIFEST_SUFFIX)


def write_manifest(run: RunManifest, path: Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(run.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_manifest(path: Path) -> RunManifest:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DomainError(f"manifest {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise DomainError(f"manifest {path} must hold a JSON object")
    return RunManifest.from_dict(raw)


def compare_outputs(run: RunManifest, directory: Path) -> dict[str, str]:
    """Digest fresh files against the record; returns name -> status.

    Status is 'ok', 'mismatch', or 'missing'.
    """
    directory = Path(directory)
    status = {}
    for name, recorded in sorted(run.outputs.items()):
        candidate = directory / name
        if not candidate.is_file():
            status[name] = "missing"
        elif file_digest(candidate) == recorded:
            status[name] = "ok"
        else:
            status[name] = "mismatch"
    return status
