"""The subcommands of `anderson-lab`: each one reads a config, runs one module and writes a run."""
from __future__ import annotations

import functools
import math
from logging import INFO
from logging import getLogger as get_logger
from pathlib import Path
from typing import Any

from tqdm import tqdm

from anderson_lab.errors import ConfigurationError
from anderson_lab.experiments import (
    Phase,
    ScalingModel,
    annealed_sweep,
    concentration_summary,
    fit_scaling,
    phase_discrimination,
    run_sweep,
)
from anderson_lab.experiments.fitting import MIN_GRID_POINTS, MIN_REPLICAS
from anderson_lab.feynman_kac import dirichlet_total_mass, total_mass, trace_check
from anderson_lab.hamiltonian import assemble, richardson_top_eigenvalue, top_eigenpairs
from anderson_lab.lattice import dirichlet_eigenvalues
from anderson_lab.noise import (
    CovarianceSpec,
    FieldSample,
    build_kernel,
    max_field_statistic,
    sample_field,
    write_field_dump,
)
from anderson_lab.registry import (
    REGISTRY_FILENAME,
    RegistryContents,
    lyapunov_reference,
    write_constants,
)
from anderson_lab.settings import default_workers, resolve_output_dir
from anderson_lab.utils import parallel_map
from anderson_lab.variational import variational_constants

from .config import FieldSettings, LabConfig, as_bool
from .store import RunDirectory, RunManifest, read_index, read_manifests

logger = get_logger(__name__)


def start_run(
    command: str, config: Path | str, seed: int | None, out: Path | str | None
) -> tuple[LabConfig, RunDirectory]:
    lab_config = LabConfig.read(config)
    manifest = RunManifest(
        command=command,
        config_hash=lab_config.get_hash(),
        seeds={"seed": lab_config.seed(seed)},
        config=lab_config.sections,
    )
    return lab_config, RunDirectory(resolve_output_dir(out), manifest)


def _workers(workers: int | None) -> int:
    return workers if workers is not None else default_workers()


def _field(
    spec: CovarianceSpec,
    settings: FieldSettings,
    r: float,
    seed: int,
    replica: int,
) -> FieldSample:
    spacing = settings.resolved_spacing(spec)
    if settings.sigma == 0:
        # The free operator: no need to sample anything.
        return FieldSample.constant(
            spec, r, spacing, c=0.0, eps=settings.eps, sigma=0.0, seed=seed
        )
    return sample_field(
        spec,
        r,
        settings.eps,
        spacing,
        seed,
        sigma=settings.sigma,
        replica=replica,
        method=settings.method,
    )


def cmd_sample(
    config: Path, seed: int | None = None, workers: int | None = None, out: Path | None = None
) -> RunDirectory:
    """Samples the field replicas of `[noise]`, dumps them and writes their summary statistics."""
    lab_config, run = start_run("sample", config, seed, out)
    spec = lab_config.covariance_spec()
    settings = lab_config.field_settings()
    run_seed = run.manifest.seeds["seed"]
    r = settings.resolved_radius(spec)
    spacing = settings.resolved_spacing(spec)
    kernel = build_kernel(spec, spacing, settings.eps)
    samples = parallel_map(
        functools.partial(_sample_task, spec, settings, r, run_seed),
        [(replica,) for replica in range(settings.replicas)],
        workers=_workers(workers),
    )
    rows = []
    for replica, sample in enumerate(samples):
        write_field_dump(sample, run.file(f"field-{replica}.bin"))
        row: dict[str, Any] = {
            "replica": replica,
            "dim": spec.dim,
            "radius": r,
            "spacing": spacing,
            "eps": settings.eps,
            "sites": sample.values.size,
            "mean": float(sample.values.mean()),
            "variance": float(sample.values.var()),
            "lattice_variance": kernel.r0,
            "min": float(sample.values.min()),
            "max": float(sample.values.max()),
        }
        if r >= math.e:
            row["normalized_max"] = max_field_statistic(sample).normalized
        rows.append(row)
    run.write_csv("field_stats.csv", rows)
    return run.finish()


def _sample_task(spec, settings, r, seed, replica):
    return _field(spec, settings, r, seed, replica)


def _eigs_task(spec, settings, r, seed, solver, replica):
    sample = _field(spec, settings, r, seed, replica)
    op = assemble(sample)
    spectral = top_eigenpairs(op, solver["k"], solver["tol"], solver["method"], seed=seed)
    richardson = None
    if solver["richardson"]:
        richardson = richardson_top_eigenvalue(op, spectral.k, solver["tol"], solver["method"])
    return spectral, richardson, sample.spacing


def cmd_eigs(
    config: Path, seed: int | None = None, workers: int | None = None, out: Path | None = None
) -> RunDirectory:
    """Top eigenpairs of ½Δ + σξ_ε on the sampled box, one block of rows per replica.

    With `sigma = 0` the rows also carry the continuum Dirichlet eigenvalues -π² Σ n_i² / (8r²).
    """
    lab_config, run = start_run("eigs", config, seed, out)
    spec = lab_config.covariance_spec()
    settings = lab_config.field_settings()
    solver = lab_config.solver_options()
    run_seed = run.manifest.seeds["seed"]
    r = settings.resolved_radius(spec)
    replicas = 1 if settings.sigma == 0 else settings.replicas
    results = parallel_map(
        functools.partial(_eigs_task, spec, settings, r, run_seed, solver),
        [(replica,) for replica in range(replicas)],
        workers=_workers(workers),
    )
    rows = []
    lines = [f"Top eigenvalues on Q_{r:g}, d={spec.dim}, eps={settings.eps:g}"]
    for replica, (spectral, richardson, spacing) in enumerate(results):
        lengths = spectral.localization_lengths(spacing, spec.dim)
        continuum = dirichlet_eigenvalues(spec.dim, r, spectral.k)
        for i, value in enumerate(spectral.eigenvalues):
            row: dict[str, Any] = {
                "replica": replica,
                "index": i + 1,
                "eigenvalue": float(value),
                "residual": float(spectral.residuals[i]),
                "participation_ratio": float(spectral.participation_ratios[i]),
                "localization_length": float(lengths[i]),
                "method": spectral.method,
            }
            if settings.sigma == 0:
                row["continuum_free"] = float(continuum[i])
            if richardson is not None and i < len(richardson.extrapolated):
                row["richardson"] = float(richardson.extrapolated[i])
                row["richardson_error"] = float(richardson.error[i])
            rows.append(row)
        lines.append(f"replica {replica}: Lambda_1 = {spectral.eigenvalues[0]:.10g}")
    if settings.sigma == 0:
        reference = -spec.dim * math.pi**2 / (8 * r**2)
        lines.append(f"free operator: -d pi^2 / (8 r^2) = {reference:.10g}")
    run.write_csv("eigenvalues.csv", rows)
    run.write_text("report.txt", "\n".join(lines) + "\n")
    return run.finish()


def cmd_fk(
    config: Path, seed: int | None = None, workers: int | None = None, out: Path | None = None
) -> RunDirectory:
    """Feynman-Kac total mass U(t) (free and killed on the sampled box) for each replica.

    `[mc] trace = true` also runs the trace check on the operator of the sampled box.
    """
    lab_config, run = start_run("fk", config, seed, out)
    spec = lab_config.covariance_spec()
    settings = lab_config.field_settings()
    run_seed = run.manifest.seeds["seed"]
    cfg = lab_config.path_config(run_seed, _workers(workers))
    with_trace = as_bool(lab_config.section("mc").get("trace", "false"))
    r = settings.resolved_radius(spec, cfg.t)
    rows = []
    trace_rows = []
    replicas = tqdm(
        range(settings.replicas), desc="fk", unit="replica", disable=not logger.isEnabledFor(INFO)
    )
    for replica in replicas:
        sample = _field(spec, settings, r, run_seed, replica)
        free = total_mass(sample, settings.sigma, cfg)
        killed = dirichlet_total_mass(sample, settings.sigma, sample.box, cfg)
        rows.append(
            {
                "replica": replica,
                "t": cfg.t,
                "dt": cfg.step,
                "paths": cfg.paths,
                "radius": r,
                "log_mass": free.log_mean,
                "std_error": free.std_error,
                "ess": free.ess,
                "exit_fraction": free.exit_fraction,
                "log_killed_mass": killed.log_mean,
                "killed_std_error": killed.std_error,
                "killed_exit_fraction": killed.exit_fraction,
            }
        )
        if with_trace:
            solver = lab_config.solver_options()
            op = assemble(sample)
            spectral = top_eigenpairs(op, solver["k"], solver["tol"], solver["method"])
            report = trace_check(op, spectral, cfg.t, cfg)
            trace_rows.append(
                {
                    "replica": replica,
                    "t": report.t,
                    "k": report.k,
                    "log_spectral_sum": report.log_spectral_sum,
                    "log_mc_estimate": report.log_mc_estimate,
                    "mc_std_error": report.mc_std_error,
                    "truncation_ratio": report.truncation_ratio,
                    "relative_discrepancy": report.relative_discrepancy,
                    "consistent": report.consistent(),
                }
            )
    run.write_csv("total_mass.csv", rows)
    if with_trace:
        run.write_csv("trace.csv", trace_rows)
    return run.finish()


def cmd_gns(
    config: Path,
    seed: int | None = None,
    workers: int | None = None,
    out: Path | None = None,
    dims: list[int] | None = None,
) -> RunDirectory:
    """Variational constants 𝔾_d, 𝔏_d, 𝔰 by the three routes, added to the constant registry."""
    lab_config, run = start_run("gns", config, seed, out)
    settings = lab_config.variational_settings(dims)
    run_seed = run.manifest.seeds["seed"]
    flow = lab_config.flow_config(run_seed, _workers(workers))
    values: dict[str, float] = {}
    provenance: dict[str, str] = {"run_id": run.run_id}
    rows = []
    for dim in settings.dims:
        result = variational_constants(dim, settings.grid(dim), flow)
        values.update(result.to_registry())
        grid = result.grid
        provenance[f"grid_{dim}"] = (
            f"dim={dim} halfwidth={grid.halfwidth:g} spacing={grid.spacing:g}"
        )
        for route, l_d in result.routes.items():
            rows.append(
                {
                    "dim": dim,
                    "route": route,
                    "l_d": l_d,
                    "g_d": result.g_d,
                    "route_discrepancy": result.route_discrepancy,
                    "residual": result.residual,
                    "spread": result.spread,
                }
            )
    run.write_csv("constants.csv", rows)
    run.write_text(REGISTRY_FILENAME, RegistryContents(values, provenance).render())
    write_constants(run.out / REGISTRY_FILENAME, values, provenance)
    return run.finish()


def _singular_reference(out: Path, dim: int) -> float | None:
    try:
        return lyapunov_reference(dim, out / REGISTRY_FILENAME)
    except (FileNotFoundError, KeyError) as err:
        logger.warning(f"No Lyapunov exponent to compare with: {err}")
        return None


def cmd_sweep(
    config: Path, seed: int | None = None, workers: int | None = None, out: Path | None = None
) -> RunDirectory:
    """The experiments: phase discrimination, the annealed sweep, or a plain sweep and fit.

    `[schedule]` with both `gamma_regular` and `gamma_singular` runs the phase discrimination. An
    `[annealed]` section runs the annealed sweep. Otherwise the single schedule of `[schedule]` is
    swept and the top eigenvalue is fitted with the law of its phase.
    """
    lab_config, run = start_run("sweep", config, seed, out)
    spec = lab_config.covariance_spec()
    run_seed = run.manifest.seeds["seed"]
    gammas = lab_config.discrimination_gammas()
    if gammas is not None:
        _discrimination(lab_config, run, spec, gammas, run_seed, _workers(workers))
    elif lab_config.has("annealed"):
        _annealed(lab_config, run, spec, run_seed, _workers(workers))
    else:
        _plain_sweep(lab_config, run, spec, run_seed, _workers(workers))
    return run.finish()


def _discrimination(
    lab_config: LabConfig,
    run: RunDirectory,
    spec: CovarianceSpec,
    gammas: tuple[float, float],
    seed: int,
    workers: int,
) -> None:
    settings = lab_config.sweep_settings(seed, workers)
    options = lab_config.schedule_options(spec)
    report = phase_discrimination(
        spec,
        *gammas,
        settings,
        holder_h=options["holder_h"],
        allow_unsupported=options["allow_unsupported"],
        n_boot=lab_config.n_boot(),
    )
    run.write_csv(
        "records.csv",
        [{"arm": arm, **row} for arm, result in report.results.items() for row in result.rows()],
    )
    run.write_csv(
        "discrimination.csv",
        [
            {
                "data": arm,
                "slope_regular_normalizer": report.matrix[i, 0],
                "slope_singular_normalizer": report.matrix[i, 1],
                "p_value": report.p_value,
                "n_boot": report.n_boot,
            }
            for i, arm in enumerate(("regular", "singular"))
        ],
    )
    run.write_csv(
        "concentration.csv",
        [
            {"summary": key, **row}
            for key, summary in report.summaries.items()
            for row in summary.rows()
        ],
    )
    text = report.to_text()
    reference = _singular_reference(run.out, spec.dim)
    if reference is not None:
        text += f"Lyapunov exponent from the constant registry: L_{spec.dim} = {reference:.8g}\n"
    run.write_text("report.txt", text)


def _annealed(
    lab_config: LabConfig, run: RunDirectory, spec: CovarianceSpec, seed: int, workers: int
) -> None:
    settings = lab_config.annealed_settings()
    cfg = lab_config.path_config(seed, workers, default_t=max(settings.t_grid))
    report = annealed_sweep(
        spec,
        settings.slow,
        settings.fast,
        cfg,
        t_grid=settings.t_grid,
        powers=settings.powers,
        sigma=lab_config.field_settings().sigma,
    )
    run.write_csv("annealed.csv", report.rows())
    run.write_text("report.txt", report.to_text())


def _plain_sweep(
    lab_config: LabConfig, run: RunDirectory, spec: CovarianceSpec, seed: int, workers: int
) -> None:
    schedule = lab_config.schedule(spec)
    settings = lab_config.sweep_settings(seed, workers)
    result = run_sweep(spec, schedule, settings)
    if not result.records:
        raise ConfigurationError(
            f"Not a single t of the grid fits in the memory cap (first t: {settings.t_grid[0]})."
        )
    run.write_csv("records.csv", result.rows())
    summary = concentration_summary(result.records, "phase_statistic")
    run.write_csv("concentration.csv", summary.rows())

    lines = [f"Sweep of {schedule.describe()}, d={spec.dim}"]
    if result.truncated:
        lines.append(f"Truncated at t={result.truncated_at:.6g} (memory cap).")
    lines += [
        f"t={t:.6g}: median={m:.6g}, iqr={q:.3g}"
        for t, m, q in zip(summary.t, summary.median, summary.iqr)
    ]
    model = ScalingModel.regular if schedule.phase is Phase.regular else ScalingModel.singular
    if model is ScalingModel.regular:
        reference: float | None = math.sqrt(2 * spec.dim * spec.r0)
    else:
        reference = _singular_reference(run.out, spec.dim)
    if reference is not None:
        lines.append(f"{model.value} reference prefactor: {reference:.8g}")
    if len(result.t_values) < MIN_GRID_POINTS or settings.replicas < MIN_REPLICAS:
        lines.append(
            f"Scaling fit skipped: it needs {MIN_GRID_POINTS} values of t and {MIN_REPLICAS} "
            f"replicas, the sweep has {len(result.t_values)} and {settings.replicas}."
        )
    else:
        fit = fit_scaling(result.records, model, n_boot=lab_config.n_boot(), seed=seed)
        run.write_csv(
            "fit.csv",
            [
                {
                    "model": fit.model.value,
                    "dim": fit.dim,
                    "prefactor": fit.prefactor,
                    "prefactor_low": fit.prefactor_ci[0],
                    "prefactor_high": fit.prefactor_ci[1],
                    "exponent": fit.exponent,
                    "exponent_low": fit.exponent_ci[0],
                    "exponent_high": fit.exponent_ci[1],
                    "limit_exponent": fit.limit_exponent,
                    "reference_prefactor": reference,
                    "n_points": fit.n_points,
                    "n_records": fit.n_records,
                }
            ],
        )
        lines.append(
            f"{model.value} fit: prefactor {fit.prefactor:.6g} "
            f"[{fit.prefactor_ci[0]:.6g}, {fit.prefactor_ci[1]:.6g}], exponent {fit.exponent:.4g} "
            f"[{fit.exponent_ci[0]:.4g}, {fit.exponent_ci[1]:.4g}] "
            f"(limit {fit.limit_exponent:.4g})"
        )
    run.write_text("report.txt", "\n".join(lines) + "\n")


def cmd_report(out: Path | None = None) -> str:
    """Summary of every run under the output directory, from the manifests and `runs.csv`."""
    out_dir = resolve_output_dir(out)
    manifests = {manifest.directory_name: manifest for manifest in read_manifests(out_dir)}
    index = read_index(out_dir)
    lines = [f"{len(manifests)} run(s) under {out_dir}"]
    for manifest in manifests.values():
        lines.append(
            f"{manifest.command:<7} {manifest.run_id}  started {manifest.started}  "
            f"finished {manifest.finished or '-'}  {len(manifest.files)} file(s)"
        )
    missing = [row["directory"] for row in index if row["directory"] not in manifests]
    for directory in missing:
        lines.append(f"indexed but missing: {directory}")
    unindexed = sorted(set(manifests) - {row["directory"] for row in index})
    for directory in unindexed:
        lines.append(f"not in {out_dir / 'runs.csv'}: {directory}")
    return "\n".join(lines) + "\n"
