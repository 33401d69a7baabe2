"""INI experiment configurations, validated into the parameter objects of the lab.

A config has the sections `[noise]`, `[schedule]`, `[grid]`, `[solver]` and `[mc]`, plus the
optional `[variational]` and `[annealed]`. Every section is optional; the commands only read the
sections they need. For example:

    [noise]
    kernel_family = triangular
    dim = 1
    radius = 8
    eps = 0.5

    [schedule]
    gamma_regular = 0.2
    gamma_singular = 0.4

    [grid]
    log_t_grid = 2, 3, 4, 5, 6
"""
from __future__ import annotations

import configparser
import dataclasses
import math
import textwrap
from dataclasses import dataclass
from logging import getLogger as get_logger
from pathlib import Path
from typing import Any, Literal, Optional, TypeVar

from pydantic import Field
from pydantic.dataclasses import dataclass as pydantic_dataclass

from anderson_lab.errors import ConfigurationError
from anderson_lab.experiments import EpsSchedule, PowerSchedule, SweepSettings
from anderson_lab.feynman_kac import PathConfig, required_radius
from anderson_lab.noise import CovarianceSpec
from anderson_lab.utils import stable_hash
from anderson_lab.variational import FlowConfig, GridSpec

logger = get_logger(__name__)

SECTIONS = ("noise", "schedule", "grid", "solver", "mc", "variational", "annealed")

T = TypeVar("T")


@pydantic_dataclass(frozen=True)
class FieldSettings:
    """Where and how the field is sampled by `sample`, `eigs` and `fk`."""

    radius: Optional[float] = Field(default=None, gt=0)
    """Half-width r of the sampled box Q_r (by default, large enough for the paths of `fk`)."""

    eps: float = Field(default=1.0, gt=0, le=1)

    spacing: Optional[float] = Field(default=None, gt=0)
    """Lattice spacing Δx. Defaults to ερ/8."""

    sigma: float = Field(default=1.0, ge=0)
    """Multiplier σ of the potential. `sigma = 0` gives the free operator ½Δ."""

    method: Literal["direct", "fft"] = "direct"

    replicas: int = Field(default=1, ge=1)

    def resolved_spacing(self, spec: CovarianceSpec) -> float:
        if self.spacing is not None:
            return self.spacing
        return self.eps * spec.support_radius / 8

    def resolved_radius(self, spec: CovarianceSpec, t: float | None = None) -> float:
        if self.radius is not None:
            return self.radius
        if t is None:
            raise ConfigurationError("[noise] needs a `radius` (half-width of the sampled box).")
        return required_radius(t, spec.dim) + 2 * self.resolved_spacing(spec)


@pydantic_dataclass(frozen=True)
class AnnealedSettings:
    slow_prefactor: float = Field(default=1.0, gt=0)
    slow_exponent: float = Field(default=0.5, gt=0)
    fast_prefactor: float = Field(default=0.5, gt=0)
    fast_exponent: float = Field(default=2.0, gt=0)
    t_grid: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0)
    powers: tuple[int, ...] = (1, 2, 3)

    @property
    def slow(self) -> PowerSchedule:
        return PowerSchedule(prefactor=self.slow_prefactor, exponent=self.slow_exponent)

    @property
    def fast(self) -> PowerSchedule:
        return PowerSchedule(prefactor=self.fast_prefactor, exponent=self.fast_exponent)


@pydantic_dataclass(frozen=True)
class VariationalSettings:
    dims: tuple[int, ...] = (1,)

    halfwidth: Optional[float] = Field(default=None, gt=0)
    """Half-width of the flow grid (the default grid of each dimension when unset)."""

    spacing: Optional[float] = Field(default=None, gt=0)

    def grid(self, dim: int) -> Optional[GridSpec]:
        if self.halfwidth is None and self.spacing is None:
            return None
        default = GridSpec.default(dim)
        return GridSpec(
            dim=dim,
            halfwidth=self.halfwidth or default.halfwidth,
            spacing=self.spacing or default.spacing,
        )


def _split_list(value: str) -> list[str]:
    return [item.strip() for item in value.replace(";", ",").split(",") if item.strip()]


def as_bool(value: str | bool) -> bool:
    if isinstance(value, bool):
        return value
    try:
        return configparser.ConfigParser.BOOLEAN_STATES[value.strip().lower()]
    except KeyError:
        raise ConfigurationError(f"Not a boolean: {value!r}") from None


def _field_names(cls: type) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def canonicalize(parser: configparser.ConfigParser) -> dict[str, dict[str, str]]:
    """Lower-case section and key names, values with their whitespace collapsed."""
    return {
        section.lower(): {
            key.lower(): " ".join(value.split()) for key, value in parser.items(section)
        }
        for section in parser.sections()
    }


@dataclass(frozen=True)
class LabConfig:
    sections: dict[str, dict[str, str]]
    path: Optional[Path] = None

    @classmethod
    def from_text(cls, text: str, path: Path | None = None) -> LabConfig:
        parser = configparser.ConfigParser(
            interpolation=None, inline_comment_prefixes=("#", ";"), default_section="__defaults"
        )
        try:
            parser.read_string(text, source=str(path or "<config>"))
        except configparser.Error as err:
            raise ConfigurationError(f"Could not parse the config {path or ''}: {err}") from err
        sections = canonicalize(parser)
        unknown = sorted(set(sections) - set(SECTIONS))
        if unknown:
            raise ConfigurationError(
                f"Unknown config section(s) {unknown}; expected some of {list(SECTIONS)}."
            )
        return cls(sections=sections, path=path)

    @classmethod
    def read(cls, path: Path | str) -> LabConfig:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"There is no config file at {path}.")
        lab_config = cls.from_text(path.read_text(), path=path)
        logger.debug(f"Read the config at {path} (hash {lab_config.get_hash()})")
        return lab_config

    def get_hash(self) -> str:
        """md5 of the canonical config: comments, whitespace and key case don't change it."""
        return stable_hash(self.sections)

    def section(self, name: str) -> dict[str, str]:
        return dict(self.sections.get(name, {}))

    def has(self, section: str, key: str | None = None) -> bool:
        if key is None:
            return section in self.sections
        return key in self.sections.get(section, {})

    def _build(self, cls: type[T], section: str, values: dict[str, Any]) -> T:
        unknown = sorted(set(values) - _field_names(cls))
        if unknown:
            raise ConfigurationError(
                textwrap.dedent(
                    f"""\
                    Unknown key(s) {unknown} in [{section}] of {self.path or 'the config'}.
                    Expected some of {sorted(_field_names(cls))}.
                    """
                )
            )
        return cls(**values)

    def seed(self, cli_seed: int | None = None) -> int:
        """The `--seed` flag, then `[mc] seed`, then 0."""
        if cli_seed is not None:
            return cli_seed
        return int(self.section("mc").get("seed", 0))

    def covariance_spec(self) -> CovarianceSpec:
        noise = self.section("noise")
        keys = _field_names(CovarianceSpec)
        return self._build(
            CovarianceSpec, "noise", {k: v for k, v in noise.items() if k in keys}
        )

    def field_settings(self) -> FieldSettings:
        noise = self.section("noise")
        keys = _field_names(CovarianceSpec)
        return self._build(
            FieldSettings, "noise", {k: v for k, v in noise.items() if k not in keys}
        )

    def discrimination_gammas(self) -> Optional[tuple[float, float]]:
        """(γ_reg, γ_sing) when `[schedule]` sets up the two-arm experiment."""
        schedule = self.section("schedule")
        if "gamma_regular" in schedule and "gamma_singular" in schedule:
            return float(schedule["gamma_regular"]), float(schedule["gamma_singular"])
        if "gamma_regular" in schedule or "gamma_singular" in schedule:
            raise ConfigurationError(
                "[schedule] needs both `gamma_regular` and `gamma_singular` (or neither)."
            )
        return None

    def schedule_options(self, spec: CovarianceSpec) -> dict[str, Any]:
        """Hölder exponent and unsupported-regime flag of the schedule(s)."""
        schedule = self.section("schedule")
        return {
            "holder_h": float(schedule.get("holder_h", spec.holder_h)),
            "allow_unsupported": as_bool(schedule.get("allow_unsupported", "false")),
        }

    def schedule(self, spec: CovarianceSpec) -> EpsSchedule:
        schedule = self.section("schedule")
        if not schedule:
            raise ConfigurationError("The config has no [schedule] section.")
        for key in ("gamma_regular", "gamma_singular"):
            schedule.pop(key, None)
        values = {**schedule, **self.schedule_options(spec)}
        values.setdefault("dim", spec.dim)
        if "kind" not in values:
            if "gamma" not in values:
                raise ConfigurationError("[schedule] needs a `kind` or a `gamma`.")
            schedule_ = EpsSchedule.from_gamma(
                int(values.pop("dim")),
                float(values.pop("gamma")),
                holder_h=float(values.pop("holder_h")),
                allow_unsupported=values.pop("allow_unsupported"),
            )
            if values:
                raise ConfigurationError(f"Unexpected [schedule] key(s) {sorted(values)}.")
            return schedule_
        return self._build(EpsSchedule, "schedule", values)

    def t_grid(self) -> tuple[float, ...]:
        grid = self.section("grid")
        if "t_grid" in grid and "log_t_grid" in grid:
            raise ConfigurationError("[grid] sets both `t_grid` and `log_t_grid`.")
        if "log_t_grid" in grid:
            return tuple(math.exp(float(v)) for v in _split_list(grid["log_t_grid"]))
        if "t_grid" in grid:
            return tuple(float(v) for v in _split_list(grid["t_grid"]))
        raise ConfigurationError("[grid] needs a `t_grid` or a `log_t_grid`.")

    def sweep_settings(self, seed: int, workers: int) -> SweepSettings:
        grid = self.section("grid")
        grid.pop("t_grid", None)
        grid.pop("log_t_grid", None)
        solver = self.section("solver")
        solver.pop("richardson", None)
        mc = self.section("mc")
        values = {
            **grid,
            **solver,
            **{k: v for k, v in mc.items() if k in ("replicas", "common_noise")},
        }
        if "sigma" in self.section("noise"):
            values["sigma"] = self.section("noise")["sigma"]
        return self._build(
            SweepSettings,
            "grid/solver/mc",
            {**values, "t_grid": self.t_grid(), "seed": seed, "workers": workers},
        )

    def n_boot(self, default: int = 1000) -> int:
        return int(self.section("mc").get("n_boot", default))

    def path_config(self, seed: int, workers: int, default_t: float | None = None) -> PathConfig:
        mc = self.section("mc")
        keys = _field_names(PathConfig) - {"seed", "workers"}
        values: dict[str, Any] = {k: v for k, v in mc.items() if k in keys}
        if default_t is not None:
            values.setdefault("t", default_t)
        if "t" not in values or "dt" not in values:
            raise ConfigurationError("[mc] needs a time horizon `t` and a time step `dt`.")
        return self._build(PathConfig, "mc", {**values, "seed": seed, "workers": workers})

    def solver_options(self) -> dict[str, Any]:
        solver = self.section("solver")
        unknown = sorted(set(solver) - {"k", "tol", "method", "richardson"})
        if unknown:
            raise ConfigurationError(f"Unknown key(s) {unknown} in [solver].")
        return {
            "k": int(solver.get("k", 4)),
            "tol": float(solver.get("tol", 1e-8)),
            "method": solver.get("method", "auto"),
            "richardson": as_bool(solver.get("richardson", "false")),
        }

    def annealed_settings(self) -> AnnealedSettings:
        values: dict[str, Any] = self.section("annealed")
        if "t_grid" in values:
            values["t_grid"] = tuple(float(v) for v in _split_list(values["t_grid"]))
        if "powers" in values:
            values["powers"] = tuple(int(v) for v in _split_list(values["powers"]))
        return self._build(AnnealedSettings, "annealed", values)

    def variational_settings(self, dims: list[int] | None = None) -> VariationalSettings:
        keys = _field_names(VariationalSettings)
        values: dict[str, Any] = {
            k: v for k, v in self.section("variational").items() if k in keys
        }
        if dims:
            values["dims"] = tuple(dims)
        elif "dims" in values:
            values["dims"] = tuple(int(v) for v in _split_list(values["dims"]))
        return self._build(VariationalSettings, "variational", values)

    def flow_config(self, seed: int, workers: int) -> FlowConfig:
        keys = _field_names(VariationalSettings)
        values = {k: v for k, v in self.section("variational").items() if k not in keys}
        return self._build(FlowConfig, "variational", {**values, "seed": seed, "workers": workers})
