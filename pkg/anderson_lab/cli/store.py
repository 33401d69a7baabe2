"""Run directories, CSV outputs and the run index of an output directory.

Every command writes into its own directory `<out>/<command>-<config hash[:12]>-s<seed>/`, next to
a `manifest.json` that lists the files of the run. Runs with another config or seed never touch
that directory, and re-running the same command rewrites the same files.
"""
from __future__ import annotations

import csv
import dataclasses
import datetime
import json
from dataclasses import dataclass, field
from logging import getLogger as get_logger
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

import numpy as np
import pydantic
import scipy
from filelock import FileLock

import anderson_lab

logger = get_logger(__name__)

SCHEMA_VERSION = 1
"""Version of the CSV schemas. Bump it when a column is renamed or changes meaning."""

MANIFEST_FILENAME = "manifest.json"
INDEX_FILENAME = "runs.csv"
INDEX_COLUMNS = ("run_id", "command", "config_hash", "seed", "started", "finished", "directory")


def run_id(config_hash: str, seed: int) -> str:
    return f"{config_hash[:12]}-s{seed}"


def module_versions() -> dict[str, str]:
    return {
        "anderson_lab": anderson_lab.__version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
    }


def _now() -> str:
    return datetime.datetime.now().isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seeds: dict[str, int]
    config: dict[str, dict[str, str]] = field(default_factory=dict)
    """The canonical config the hash was computed from."""
    schema_version: int = SCHEMA_VERSION
    started: str = field(default_factory=_now)
    finished: Optional[str] = None
    versions: dict[str, str] = field(default_factory=module_versions)
    files: list[str] = field(default_factory=list)
    """Output files, relative to the run directory."""

    @property
    def run_id(self) -> str:
        return run_id(self.config_hash, self.seeds["seed"])

    @property
    def directory_name(self) -> str:
        return f"{self.command}-{self.run_id}"

    def to_json(self) -> str:
        return json.dumps({**dataclasses.asdict(self), "run_id": self.run_id}, indent=2) + "\n"

    @classmethod
    def read(cls, path: Path | str) -> RunManifest:
        values = json.loads(Path(path).read_text())
        values.pop("run_id", None)
        return cls(**values)


class RunDirectory:
    """The output directory of one run."""

    def __init__(self, out: Path | str, manifest: RunManifest):
        self.out = Path(out)
        self.manifest = manifest
        self.path = self.out / manifest.directory_name

    @property
    def run_id(self) -> str:
        return self.manifest.run_id

    def file(self, name: str) -> Path:
        """Path of an output file of this run, which is recorded in the manifest."""
        if not self.path.exists():
            logger.info(f"Writing the outputs of run {self.run_id} to {self.path}")
            self.path.mkdir(parents=True, exist_ok=True)
        if name not in self.manifest.files:
            self.manifest.files.append(name)
        return self.path / name

    def write_csv(self, name: str, rows: Iterable[Mapping[str, Any]]) -> Path:
        """Writes `rows` with `schema_version` and `run_id` in front of every row."""
        rows = [
            {"schema_version": SCHEMA_VERSION, "run_id": self.run_id, **row} for row in rows
        ]
        columns: list[str] = []
        for row in rows:
            columns += [column for column in row if column not in columns]
        path = self.file(name)
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=columns, restval="")
            writer.writeheader()
            writer.writerows(_csv_row(row) for row in rows)
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self.file(name)
        path.write_text(text)
        return path

    def finish(self) -> RunDirectory:
        """Writes the manifest and adds (or refreshes) the run in the index of the output dir."""
        self.manifest.finished = _now()
        self.path.mkdir(parents=True, exist_ok=True)
        (self.path / MANIFEST_FILENAME).write_text(self.manifest.to_json())
        update_index(self.out, self.manifest)
        return self


def _csv_row(row: Mapping[str, Any]) -> dict[str, Any]:
    # repr keeps every digit of the floats, so that reruns are byte-identical.
    return {
        key: repr(float(value)) if isinstance(value, (float, np.floating)) else value
        for key, value in row.items()
    }


def read_index(out: Path | str) -> list[dict[str, str]]:
    path = Path(out) / INDEX_FILENAME
    if not path.exists():
        return []
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def update_index(out: Path | str, manifest: RunManifest) -> None:
    out = Path(out)
    path = out / INDEX_FILENAME
    entry = {
        "run_id": manifest.run_id,
        "command": manifest.command,
        "config_hash": manifest.config_hash,
        "seed": str(manifest.seeds["seed"]),
        "started": manifest.started,
        "finished": manifest.finished or "",
        "directory": manifest.directory_name,
    }
    with FileLock(out / (INDEX_FILENAME + ".lock")):
        rows = [
            row
            for row in read_index(out)
            if (row["command"], row["run_id"]) != (manifest.command, manifest.run_id)
        ]
        rows.append(entry)
        temp_path = path.with_suffix(".tmp")
        with open(temp_path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=INDEX_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
        temp_path.replace(path)


def read_manifests(out: Path | str) -> list[RunManifest]:
    """The manifests of every run under `out`, in directory-name order."""
    return [
        RunManifest.read(path) for path in sorted(Path(out).glob(f"*/{MANIFEST_FILENAME}"))
    ]
