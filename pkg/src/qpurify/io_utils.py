"""CSV and run-manifest output with reproducible formatting.

Numbers are written with 17 significant digits and a '.' decimal separator
so that re-running a command with the same configuration reproduces the
output files byte for byte; every run also writes a manifest recording the
configuration echo and a content hash of each file it produced.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

from . import __version__


def format_number(x) -> str:
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_number(v) if not isinstance(v, str) else v
                              for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


class ManifestWriter:
    """Collects outputs of one CLI run and writes the manifest JSON."""

    def __init__(self, command: str, config: dict, out_dir):
        self.command = command
        self.config = config
        self.out_dir = Path(out_dir)
        self.outputs = []
        self.extra = {}
        self._t0 = time.perf_counter()

    def add(self, path) -> Path:
        path = Path(path)
        self.outputs.append(path)
        return path

    def write(self) -> Path:
        manifest = {
            "command": self.command,
            "tool_version": __version__,
            "config": self.config,
            "master_seed": self.config.get("seed"),
            "outputs": [
                {
                    "path": str(p.relative_to(self.out_dir)) if p.is_relative_to(self.out_dir) else str(p),
                    "sha256": sha256_file(p),
                    "bytes": p.stat().st_size,
                }
                for p in self.outputs
            ],
            "wall_seconds": round(time.perf_counter() - self._t0, 3),
        }
        manifest.update(self.extra)
        path = self.out_dir / f"manifest_{self.command.replace('-', '_')}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        return path
