"""The constant registry: a plain-text `key = value` file with the variational constants.

The `gns` command writes it and the experiments read the Lyapunov exponent 𝔏_d from it. The file
starts with a provenance block of `# key: value` comment lines:

    # written: 2026-01-01T00:00:00
    # grid_1: dim=1 halfwidth=16 spacing=0.03125
    g_1 = 0.5773...
    l_1 = 0.6552...
"""
from __future__ import annotations

import datetime
import math
import textwrap
from dataclasses import dataclass, field
from logging import getLogger as get_logger
from pathlib import Path
from typing import Any, Mapping

from filelock import FileLock

logger = get_logger(__name__)

REGISTRY_FILENAME = "constants.txt"


@dataclass
class RegistryContents:
    values: dict[str, float] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)

    def render(self) -> str:
        lines = [f"# {key}: {value}" for key, value in self.provenance.items()]
        lines += [f"{key} = {value!r}" for key, value in sorted(self.values.items())]
        return "\n".join(lines) + "\n"


def parse_constants(text: str) -> RegistryContents:
    contents = RegistryContents()
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line.lstrip("#").partition(":")
            contents.provenance[key.strip()] = value.strip()
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"Line {line_number} of the constant registry is not `key = value`.")
        contents.values[key.strip()] = float(value)
    return contents


def read_constants(path: Path | str) -> RegistryContents:
    return parse_constants(Path(path).read_text())


def write_constants(
    path: Path | str, values: Mapping[str, float], provenance: Mapping[str, Any] | None = None
) -> RegistryContents:
    """Adds `values` to the registry at `path` (creating it if needed) and returns its contents.

    Entries already in the file are kept unless `values` replaces them. The file is locked while
    it is rewritten, so concurrent runs don't lose each other's entries.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with FileLock(path.with_suffix(".lock")):
        contents = read_constants(path) if path.exists() else RegistryContents()
        for key, value in values.items():
            if not math.isfinite(value):
                raise ValueError(f"Refusing to register a non-finite value {key}={value}.")
            contents.values[key] = float(value)
        contents.provenance.update({key: str(value) for key, value in (provenance or {}).items()})
        contents.provenance["written"] = datetime.datetime.now().isoformat(timespec="seconds")
        temp_path = path.with_suffix(".tmp")
        temp_path.write_text(contents.render())
        temp_path.replace(path)
    logger.info(f"Wrote {len(values)} constants to {path}")
    return contents


def lyapunov_reference(dim: int, path: Path | str) -> float:
    """𝔏_d from the registry at `path`."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(
            textwrap.dedent(
                f"""\
                There is no constant registry at {path}.
                Run `anderson-lab gns --dims {dim}` with the same output directory first.
                """
            )
        )
    values = read_constants(path).values
    key = f"l_{dim}"
    if key not in values:
        raise KeyError(
            f"The constant registry at {path} has no entry {key!r} (it has {sorted(values)}). "
            f"Run `anderson-lab gns --dims {dim}` first."
        )
    return values[key]
