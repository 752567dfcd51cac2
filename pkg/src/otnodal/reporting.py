"""CSV result tables and JSON run manifests shared by the CLI subcommands."""

from __future__ import annotations

import hashlib
import json
import platform
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def write_csv(path, columns, rows) -> None:
    """Write rows (dicts) with a fixed column order and stable float format."""
    path = Path(path)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n")


def file_digest(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def config_digest(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, default=str).encode()
    ).hexdigest()


@dataclass
class RunManifest:
    """Reproducibility record for one CLI run.

    Identical manifests (ignoring the timestamp) come from identical
    configs and seeds and therefore yield byte-identical CSV bodies.
    """

    subcommand: str
    config: dict
    seed: int
    artifact_version: str
    input_digests: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )
    python: str = field(default_factory=platform.python_version)

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, default=str) + "\n")
