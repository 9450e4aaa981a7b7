"""Run manifests: every artifact records what produced it.

Manifests hold file basenames, content digests, seeds, and parameters, but
never absolute paths or wall-clock times, so re-running a command with the
same inputs yields byte-identical manifests.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

RUN_FORMAT = "roadrisk-run"
RUN_FORMAT_VERSION = 1


def file_digest(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def describe_file(path) -> dict:
    path = Path(path)
    return {"file": path.name, "sha256": file_digest(path)}


def write_run_manifest(path, *, command: str, seed: int | None,
                       inputs: dict | None = None,
                       parameters: dict | None = None,
                       outputs: list | None = None) -> Path:
    """Write the manifest; outputs is a list of paths digested in place."""
    from . import __version__

    path = Path(path)
    doc = {
        "format": RUN_FORMAT,
        "format_version": RUN_FORMAT_VERSION,
        "package_version": __version__,
        "command": command,
        "seed": seed,
        "inputs": inputs or {},
        "parameters": parameters or {},
        "outputs": [describe_file(p) for p in (outputs or [])],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
