"""Experiment configurations shipped with the package."""
from __future__ import annotations

from pathlib import Path

CONFIG_DIR = Path(__file__).parent


def shipped_configs() -> dict[str, Path]:
    """The `.ini` files of this directory, by name (without the suffix)."""
    return {path.stem: path for path in sorted(CONFIG_DIR.glob("*.ini"))}


def config_path(name: str) -> Path:
    configs = shipped_configs()
    if name not in configs:
        raise FileNotFoundError(
            f"There is no shipped config {name!r} (choose from {list(configs)})."
        )
    return configs[name]
