from __future__ import annotations

from pathlib import Path

import pydantic
import pytest

from .settings import (
    default_workers,
    get_env_variables,
    memory_cap_bytes,
    num_workers_to_use,
    resolve_output_dir,
)


def test_defaults(monkeypatch: pytest.MonkeyPatch):
    env = get_env_variables()
    assert env.OUT is None
    assert env.WORKERS is None
    assert memory_cap_bytes() == 4 * 2**30
    assert default_workers() == num_workers_to_use()
    monkeypatch.setenv("SLURM_CPUS_PER_TASK", "3")
    assert default_workers() == 3


def test_env_variables_are_read(monkeypatch: pytest.MonkeyPatch, tmp_path: Path):
    monkeypatch.setenv("ANDERSON_LAB_OUT", str(tmp_path))
    monkeypatch.setenv("ANDERSON_LAB_WORKERS", "3")
    monkeypatch.setenv("ANDERSON_LAB_MAX_MEMORY_GB", "0.5")
    assert get_env_variables().OUT == tmp_path
    assert default_workers() == 3
    assert memory_cap_bytes() == 2**29
    monkeypatch.setenv("SLURM_CPUS_PER_TASK", "7")
    assert default_workers() == 3


def test_invalid_worker_count(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.setenv("ANDERSON_LAB_WORKERS", "0")
    with pytest.raises(pydantic.ValidationError):
        get_env_variables()


def test_env_out_overrides_cli_flag(monkeypatch: pytest.MonkeyPatch, tmp_path: Path):
    assert resolve_output_dir("somewhere") == Path("somewhere")
    assert resolve_output_dir(None) == Path("results")
    monkeypatch.setenv("ANDERSON_LAB_OUT", str(tmp_path))
    assert resolve_output_dir("somewhere") == tmp_path


def test_slurm_cpus_win(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.setenv("SLURM_CPUS_PER_TASK", "7")
    assert num_workers_to_use() == 7
    monkeypatch.delenv("SLURM_CPUS_PER_TASK")
    monkeypatch.setenv("SLURM_CPUS_ON_NODE", "5")
    assert num_workers_to_use() == 5
