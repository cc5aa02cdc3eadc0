"""Atomic artifact writing and machine-readable run manifests."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

__all__ = ["atomic_write_text", "atomic_write_bytes", "sha256_file", "write_manifest"]


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Write via a temporary file in the same directory plus rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    output_path: str | Path,
    version: str,
    resolved_config: dict,
    inputs: dict[str, str] | None = None,
    wall_time_s: float = 0.0,
) -> Path:
    """Write ``<output>.manifest.json`` describing how the output was made."""
    output_path = Path(output_path)
    manifest = {
        "tool": "phonon-qed",
        "version": version,
        "config": resolved_config,
        "inputs": inputs or {},
        "output": {output_path.name: sha256_file(output_path)},
        "wall_time_s": round(wall_time_s, 6),
    }
    manifest_path = output_path.with_name(output_path.name + ".manifest.json")
    atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path
