"""Environment variables and machine resources that this package cares about."""
from __future__ import annotations

import os
from logging import getLogger as get_logger
from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = get_logger(__name__)


class LabEnvVariables(BaseSettings):
    """Environment variables read by the lab (all prefixed with `ANDERSON_LAB_`).

    The field names are upper-case so that they match the names of the environment variables.
    """

    model_config = SettingsConfigDict(env_prefix="ANDERSON_LAB_", frozen=True)

    OUT: Optional[Path] = None
    """Output directory. When set, overrides the `--out` flag of the command-line."""

    WORKERS: Optional[int] = Field(default=None, ge=1)
    """Default number of worker processes (when `--workers` isn't passed)."""

    MAX_MEMORY_GB: float = Field(default=4.0, gt=0)
    """Memory cap for the large arrays (white noise, operator matrices), in GiB."""


def get_env_variables() -> LabEnvVariables:
    # NOTE: Not cached, so that changes to `os.environ` (e.g. in tests) are picked up.
    return LabEnvVariables()


def num_workers_to_use() -> int:
    if "SLURM_CPUS_PER_TASK" in os.environ:
        return int(os.environ["SLURM_CPUS_PER_TASK"])
    if "SLURM_CPUS_ON_NODE" in os.environ:
        return int(os.environ["SLURM_CPUS_ON_NODE"])
    if hasattr(os, "sched_getaffinity"):
        return len(os.sched_getaffinity(0))
    return os.cpu_count() or 1


def default_workers() -> int:
    env_workers = get_env_variables().WORKERS
    return env_workers if env_workers is not None else num_workers_to_use()


def memory_cap_bytes() -> float:
    return get_env_variables().MAX_MEMORY_GB * 2**30


def resolve_output_dir(cli_out: Path | str | None, default: Path | str = "results") -> Path:
    """The `ANDERSON_LAB_OUT` environment variable wins over the `--out` flag."""
    env_out = get_env_variables().OUT
    if env_out is not None:
        if cli_out is not None and Path(cli_out) != env_out:
            logger.info(f"ANDERSON_LAB_OUT={env_out} overrides --out={cli_out}")
        return env_out
    return Path(cli_out) if cli_out is not None else Path(default)
