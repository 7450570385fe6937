"""Stage manifests: what ran, with which config, on which bytes.

Manifests carry content digests instead of timestamps so re-running a
stage on identical inputs rewrites identical bytes.
"""

import hashlib
import json
from pathlib import Path

from .errors import FormatError


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def write_manifest(path, stage, config_hash, inputs, outputs):
    """inputs/outputs map logical names to paths; digests are recorded."""
    payload = {
        "stage": stage,
        "config_hash": config_hash,
        "inputs": {name: file_digest(p) for name, p in sorted(inputs.items())},
        "outputs": {name: file_digest(p) for name, p in sorted(outputs.items())},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def read_manifest(path):
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read manifest {path}: {exc}") from exc
    for key in ("stage", "config_hash", "inputs", "outputs"):
        if key not in payload:
            raise FormatError(f"manifest {path} missing field {key!r}")
    return payload
