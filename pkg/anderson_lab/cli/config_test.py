from __future__ import annotations

import math
import textwrap

import pytest

from anderson_lab.configs import config_path, shipped_configs
from anderson_lab.errors import ConfigurationError
from anderson_lab.experiments import Phase, ScheduleKind
from anderson_lab.noise import KernelFamily

from .config import LabConfig, as_bool

SWEEP_CONFIG = """\
[noise]
kernel_family = cosine_bump
dim = 1
sigma = 2.0

[schedule]
gamma = 0.4

[grid]
log_t_grid = 2, 3, 4
box_exponent = 0.5

[solver]
k = 3
method = dense

[mc]
replicas = 5
common_noise = true
n_boot = 50
seed = 9
"""


def config(text: str) -> LabConfig:
    return LabConfig.from_text(textwrap.dedent(text))


def test_hash_ignores_comments_whitespace_and_case():
    reformatted = """\
    # A comment.
    [NOISE]
    Kernel_Family   =   cosine_bump   ; inline comment
    dim=1
    sigma = 2.0

    [schedule]
    gamma = 0.4
    [grid]
    log_t_grid = 2,   3, 4
    box_exponent = 0.5
    [solver]
    k = 3
    method = dense
    [mc]
    replicas = 5
    common_noise = true
    n_boot = 50
    seed = 9
    """
    assert config(reformatted).get_hash() == config(SWEEP_CONFIG).get_hash()


def test_hash_changes_with_the_values():
    changed = SWEEP_CONFIG.replace("gamma = 0.4", "gamma = 0.41")
    assert config(SWEEP_CONFIG).get_hash() != config(changed).get_hash()


def test_sweep_config():
    lab_config = config(SWEEP_CONFIG)
    spec = lab_config.covariance_spec()
    assert spec.kernel_family is KernelFamily.cosine_bump
    assert spec.dim == 1
    schedule = lab_config.schedule(spec)
    assert schedule.kind is ScheduleKind.singular
    assert schedule.phase is Phase.singular
    assert lab_config.discrimination_gammas() is None
    assert lab_config.seed() == 9
    assert lab_config.seed(3) == 3
    settings = lab_config.sweep_settings(seed=lab_config.seed(), workers=2)
    assert settings.t_grid == pytest.approx((math.e**2, math.e**3, math.e**4))
    assert settings.replicas == 5
    assert settings.k == 3
    assert settings.method == "dense"
    assert settings.box_exponent == 0.5
    assert settings.common_noise
    assert settings.sigma == 2.0
    assert settings.seed == 9 and settings.workers == 2
    assert lab_config.n_boot() == 50


def test_constant_schedule():
    lab_config = config(
        """\
        [schedule]
        kind = constant
        eps0 = 0.5
        """
    )
    schedule = lab_config.schedule(lab_config.covariance_spec())
    assert schedule(100.0) == 0.5


def test_discrimination_gammas():
    lab_config = config(
        """\
        [schedule]
        gamma_regular = 0.2
        gamma_singular = 0.4
        allow_unsupported = yes
        """
    )
    assert lab_config.discrimination_gammas() == (0.2, 0.4)
    options = lab_config.schedule_options(lab_config.covariance_spec())
    assert options == {"holder_h": 1.0, "allow_unsupported": True}
    with pytest.raises(ConfigurationError, match="both"):
        config("[schedule]\ngamma_regular = 0.2\n").discrimination_gammas()


def test_path_config():
    lab_config = config(
        """\
        [mc]
        t = 1.0
        dt = 0.0625
        paths = 200
        trace = true
        """
    )
    cfg = lab_config.path_config(seed=4, workers=1)
    assert (cfg.t, cfg.dt, cfg.paths, cfg.seed) == (1.0, 0.0625, 200, 4)
    with pytest.raises(ConfigurationError, match="time horizon"):
        config("[mc]\npaths = 200\n").path_config(seed=0, workers=1)
    assert config("[mc]\ndt = 0.1\n").path_config(0, 1, default_t=2.0).t == 2.0


def test_annealed_and_variational_settings():
    lab_config = config(
        """\
        [annealed]
        t_grid = 0.5, 1
        powers = 1, 2

        [variational]
        dims = 1, 2
        halfwidth = 8
        starts = 2
        """
    )
    annealed = lab_config.annealed_settings()
    assert annealed.t_grid == (0.5, 1.0)
    assert annealed.powers == (1, 2)
    assert annealed.slow(4.0) == 0.5
    variational = lab_config.variational_settings()
    assert variational.dims == (1, 2)
    assert lab_config.variational_settings(dims=[3]).dims == (3,)
    grid = variational.grid(1)
    assert grid is not None and grid.halfwidth == 8.0
    assert lab_config.flow_config(seed=1, workers=1).starts == 2


@pytest.mark.parametrize(
    "text, error, match",
    [
        ("[nois]\ndim = 1\n", ConfigurationError, "Unknown config section"),
        ("[noise]\ndimension = 1\n", ConfigurationError, "Unknown key"),
        ("[noise]\ndim = 4\n", ValueError, "less than or equal to 3"),
        ("[noise]\nkernel_family = gaussian\n", ValueError, "kernel_family"),
        ("[noise\ndim = 1\n", ConfigurationError, "Could not parse"),
    ],
)
def test_invalid_configs(text: str, error: type[Exception], match: str):
    with pytest.raises(error, match=match):
        lab_config = config(text)
        lab_config.covariance_spec()
        lab_config.field_settings()


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError, match="no config file"):
        LabConfig.read(tmp_path / "missing.ini")


def test_as_bool():
    assert as_bool("Yes") and as_bool("1") and as_bool(True)
    assert not as_bool("off")
    with pytest.raises(ConfigurationError):
        as_bool("maybe")


@pytest.mark.parametrize("name", sorted(shipped_configs()))
def test_shipped_configs_parse(name: str):
    lab_config = LabConfig.read(config_path(name))
    spec = lab_config.covariance_spec()
    if lab_config.has("noise"):
        lab_config.field_settings()
    if lab_config.discrimination_gammas() is not None:
        settings = lab_config.sweep_settings(seed=lab_config.seed(), workers=1)
        assert settings.replicas == 20
        assert len(settings.t_grid) == 5
    if lab_config.has("annealed"):
        lab_config.annealed_settings()
        lab_config.path_config(seed=0, workers=1, default_t=2.0)
    if lab_config.has("variational"):
        lab_config.flow_config(seed=0, workers=1)
        assert lab_config.variational_settings().dims == (1, 2)
    assert spec.dim == 1
