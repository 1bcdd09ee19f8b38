"""Run manifests: the reproducibility record of every CLI command.

A manifest captures the subcommand, software version, master seed, the
fully resolved configuration, checksums of any input files, and
checksums of every output file.  Re-running the same command from the
manifest must reproduce every listed output byte for byte.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["RunManifest", "sha256_file", "write_manifest", "load_manifest"]


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    command: str
    version: str
    seed: int
    config: dict
    outputs: dict[str, str] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def record_output(self, path, base_dir) -> None:
        name = str(Path(path).relative_to(base_dir))
        self.outputs[name] = sha256_file(path)


def _jsonable(value):
    if isinstance(value, dt.date):
        return value.isoformat()
    return value


def write_manifest(manifest: RunManifest, path) -> None:
    payload = {
        "command": manifest.command,
        "version": manifest.version,
        "seed": manifest.seed,
        "config": {k: _jsonable(v) for k, v in sorted(manifest.config.items())},
        "inputs": manifest.inputs,
        "outputs": manifest.outputs,
        "extra": manifest.extra,
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> RunManifest:
    with open(path, encoding="ascii") as fh:
        payload = json.load(fh)
    for key in ("command", "version", "seed", "config", "outputs"):
        if key not in payload:
            raise ValueError(f"{path}: manifest missing field {key!r}")
    return RunManifest(command=payload["command"],
                       version=payload["version"],
                       seed=payload["seed"],
                       config=payload["config"],
                       outputs=payload["outputs"],
                       inputs=payload.get("inputs", {}),
                       extra=payload.get("extra", {}))
