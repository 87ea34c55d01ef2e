"""Run manifests.

A manifest records what produced a set of output files: content hashes of
the scenario inputs, the parameters and flags in effect, solver metadata and
the package version. Its id is a hash over everything except the timestamp,
so identical runs share an id and every output file header can cite it.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

MANIFEST_FORMAT = "iamod-manifest v1"


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    stage: str
    inputs: dict  # logical name -> sha256 of the file contents
    params: dict
    solver: dict = field(default_factory=dict)
    version: str = ""
    timestamp: Optional[str] = None

    def __post_init__(self):
        if not self.version:
            from iamod import __version__

            self.version = __version__

    def _identity(self) -> dict:
        return {"stage": self.stage, "inputs": self.inputs, "params": self.params,
                "solver": self.solver, "version": self.version}

    @property
    def id(self) -> str:
        blob = json.dumps(self._identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        d = {"format": MANIFEST_FORMAT, "id": self.id, **self._identity()}
        if self.timestamp is not None:
            d["timestamp"] = self.timestamp
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def write(self, directory, name: str) -> str:
        path = os.path.join(directory, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())
        return path


def make_manifest(stage: str, input_files: dict, params: dict, solver: Optional[dict] = None,
                  timestamp: bool = True) -> RunManifest:
    """``input_files`` maps logical names to paths; each is hashed."""
    hashes = {k: file_sha256(p) for k, p in sorted(input_files.items())}
    ts = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds") if timestamp else None
    return RunManifest(stage, hashes, dict(params), dict(solver or {}), timestamp=ts)
