"""Experiment orchestration and persistence.

A run resolves a config (file values, CLI overrides, presets), validates it
before any allocation, fans replications out in fixed-size chunks, and writes
CSV outputs plus a JSON manifest with content hashes.  Chunk boundaries
depend only on the config, never on the worker count, so re-running with a
different ``--threads`` value produces byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from . import __version__
from .analytics import run_identity_suite
from .kernels import (
    DEFAULT_TAIL_MASS,
    KernelSpec,
    discarded_tail_mass,
    kernel_cell_integrals,
    light_cone_margin,
    riesz_l2_tail_fraction,
    truncation_half_width,
)
from .noise import (
    GridSpec,
    LevyMeasureSpec,
    color_increments,
    sample_gaussian_increments,
    sample_white_increments,
)
from .solver import SolutionField, cumulative_centered_profile, solve_mild_batch
from .stats import (
    EmpiricalMeasure,
    Ensemble,
    estimate_sigma,
    fit_beta,
    geometric_theta_grid,
    iid_asclt_oracle,
    ks_to_standard_normal,
    log_average_measure,
    wasserstein_1_normal,
    weighted_ks,
)

EXPERIMENTS = (
    "identities",
    "variance-scan",
    "clt",
    "asclt",
    "oracle-iid",
    "simulate",
)

# replication ids for ASCLT panel paths; pilot replications stay far below
PANEL_REPLICATION_BASE = 10_000_000

# cap on doubles per chunk array; keeps worker memory near 100 MB
MAX_CHUNK_CELLS = 4_000_000

THREADS_ENV_VAR = "HAM_ASCLT_THREADS"

DEFAULTS = {
    "grid": {"t_max": 1.0, "dt": 0.05, "dx": 0.05},
    "kernel": {"family": "exponential", "scale": 1.0},
    "measure": {
        "variant": "two_point",
        "intensity": 4.0,
        "magnitude": 1.0,
        "up_probability": 0.5,
    },
    "t": 1.0,
    "radii": (8.0, 16.0, 32.0, 64.0),
    "replications": 2000,
    "seed": 1,
    "asclt": {
        "horizon": 200.0,
        "checkpoints": (20.0, 80.0, 200.0),
        "panel_seeds": 20,
        "pilot_replications": 400,
        "points_per_decade": 64,
    },
    "oracle": {"law": "rademacher", "length": 100_000, "panel_seeds": 20},
}


class ConfigError(ValueError):
    """Configuration rejected before any computation."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    grid: GridSpec
    kernel: KernelSpec
    measure: LevyMeasureSpec
    t: float
    radii: tuple[float, ...]
    replications: int
    seed: int
    threads: int
    out_dir: str
    kernel_half_cells: int
    margin: float
    asclt_horizon: float
    asclt_checkpoints: tuple[float, ...]
    panel_seeds: int
    pilot_replications: int
    points_per_decade: int
    oracle_law: str
    oracle_length: int

    def resolved(self) -> dict:
        """Full config as plain data; threads and out dir excluded from the
        digest payload because they cannot change results."""
        return {
            "experiment": self.experiment,
            "grid": self.grid.describe(),
            "kernel": self.kernel.describe(),
            "measure": self.measure.describe(),
            "t": self.t,
            "radii": list(self.radii),
            "replications": self.replications,
            "seed": self.seed,
            "kernel_half_cells": self.kernel_half_cells,
            "margin": self.margin,
            "asclt": {
                "horizon": self.asclt_horizon,
                "checkpoints": list(self.asclt_checkpoints),
                "panel_seeds": self.panel_seeds,
                "pilot_replications": self.pilot_replications,
                "points_per_decade": self.points_per_decade,
            },
            "oracle": {"law": self.oracle_law, "length": self.oracle_length},
        }

    def digest(self) -> str:
        payload = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def kernel_cells(self) -> np.ndarray:
        return kernel_cell_integrals(self.kernel, self.grid.dx, self.kernel_half_cells)


def _take(raw: dict, allowed: tuple[str, ...], where: str) -> dict:
    unknown = set(raw) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(sorted(unknown))}")
    return raw


def _build_kernel(raw: dict) -> KernelSpec:
    raw = _take(raw, ("family", "scale", "alpha"), "kernel")
    family = raw.get("family", DEFAULTS["kernel"]["family"])
    try:
        if family == "riesz":
            return KernelSpec.riesz(alpha=float(raw.get("alpha", 0.5)))
        return KernelSpec(family=family, scale=float(raw.get("scale", 1.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_measure(raw: dict) -> LevyMeasureSpec:
    raw = _take(
        raw,
        ("variant", "intensity", "magnitude", "up_probability", "jump_std", "jumps"),
        "measure",
    )
    variant = raw.get("variant", "two_point")
    try:
        if variant == "two_point":
            base = DEFAULTS["measure"]
            return LevyMeasureSpec.two_point(
                intensity=float(raw.get("intensity", base["intensity"])),
                magnitude=float(raw.get("magnitude", base["magnitude"])),
                up_probability=float(raw.get("up_probability", base["up_probability"])),
            )
        if variant == "gaussian_jumps":
            return LevyMeasureSpec.gaussian_jumps(
                intensity=float(raw["intensity"]), jump_std=float(raw["jump_std"])
            )
        if variant == "gaussian_driver":
            return LevyMeasureSpec.gaussian_driver()
        if variant == "deterministic":
            return LevyMeasureSpec.deterministic(
                [tuple(jump) for jump in raw.get("jumps", [])]
            )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad measure config: {exc}") from exc
    raise ConfigError(f"unknown measure variant {variant!r}")


def build_config(raw: dict) -> ExperimentConfig:
    """Resolve raw config data against presets and validate everything."""
    raw = _take(
        dict(raw),
        (
            "experiment", "grid", "kernel", "measure", "t", "radii",
            "replications", "seed", "threads", "out", "asclt", "oracle",
        ),
        "config",
    )
    experiment = raw.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; choose one of {', '.join(EXPERIMENTS)}"
        )
    kernel = _build_kernel(dict(raw.get("kernel", {})))
    measure = _build_measure(dict(raw.get("measure", {})))

    grid_raw = _take(
        dict(raw.get("grid", {})), ("t_max", "dt", "dx", "half_width"), "grid"
    )
    t_max = float(grid_raw.get("t_max", DEFAULTS["grid"]["t_max"]))
    dt = float(grid_raw.get("dt", DEFAULTS["grid"]["dt"]))
    dx = float(grid_raw.get("dx", DEFAULTS["grid"]["dx"]))

    t = float(raw.get("t", min(DEFAULTS["t"], t_max)))
    radii = tuple(float(r) for r in raw.get("radii", DEFAULTS["radii"]))
    if not radii or any(r <= 0 for r in radii) or any(
        b <= a for a, b in zip(radii, radii[1:])
    ):
        raise ConfigError("radii must be positive and strictly increasing")

    asclt_raw = _take(
        dict(raw.get("asclt", {})),
        ("horizon", "checkpoints", "panel_seeds", "pilot_replications",
         "points_per_decade"),
        "asclt",
    )
    asclt_defaults = DEFAULTS["asclt"]
    horizon = float(asclt_raw.get("horizon", asclt_defaults["horizon"]))
    checkpoints = tuple(
        float(c) for c in asclt_raw.get("checkpoints", asclt_defaults["checkpoints"])
    )
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ConfigError("asclt checkpoints must be strictly increasing")
    if checkpoints and (checkpoints[0] <= math.e or checkpoints[-1] > horizon):
        raise ConfigError("asclt checkpoints must lie in (e, horizon]")
    panel_seeds = int(asclt_raw.get("panel_seeds", asclt_defaults["panel_seeds"]))
    pilot = int(asclt_raw.get("pilot_replications", asclt_defaults["pilot_replications"]))
    ppd = int(asclt_raw.get("points_per_decade", asclt_defaults["points_per_decade"]))

    oracle_raw = _take(
        dict(raw.get("oracle", {})), ("law", "length", "panel_seeds"), "oracle"
    )
    oracle_law = str(oracle_raw.get("law", DEFAULTS["oracle"]["law"]))
    oracle_length = int(oracle_raw.get("length", DEFAULTS["oracle"]["length"]))
    if "panel_seeds" in oracle_raw:
        panel_seeds = int(oracle_raw["panel_seeds"])

    margin = light_cone_margin(kernel)
    if experiment == "asclt":
        reach = horizon
    elif experiment in ("variance-scan", "clt", "simulate"):
        reach = max(radii)
    else:
        reach = 0.0

    if "half_width" in grid_raw:
        half_width = float(grid_raw["half_width"])
        if half_width + 1e-9 < reach + t_max + margin:
            raise ConfigError(
                f"domain half-width {half_width} cannot hold radius {reach} "
                f"plus horizon {t_max} plus kernel margin {margin:.6g}"
            )
    else:
        half_width = math.ceil((reach + t_max + margin) / dx - 1e-9) * dx
    try:
        grid = GridSpec(t_max=t_max, dt=dt, dx=dx, half_width=half_width)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not 0.0 <= t <= t_max or abs(t / dt - round(t / dt)) > 1e-9:
        raise ConfigError(f"observation time {t} must be a grid time within [0, {t_max}]")

    if kernel.is_riesz:
        kernel_half_cells = grid.n_points - 1
    else:
        kernel_half_cells = int(
            math.ceil(truncation_half_width(kernel, DEFAULT_TAIL_MASS) / dx - 1e-9)
        )

    replications = int(raw.get("replications", DEFAULTS["replications"]))
    seed = int(raw.get("seed", DEFAULTS["seed"]))
    if seed < 0:
        raise ConfigError("seed must be nonnegative")
    if experiment in ("variance-scan", "clt") and replications < 30:
        raise ConfigError("variance estimation needs at least 30 replications")
    if experiment == "clt" and replications < 100:
        raise ConfigError("the KS statistic needs at least 100 replications")
    if experiment == "asclt" and pilot < 30:
        raise ConfigError("the sigma pilot needs at least 30 replications")
    if experiment == "variance-scan":
        if len(radii) < 3 or radii[-1] / radii[0] < 8.0:
            raise ConfigError("variance-scan radii must span a factor of 8 or more")

    threads = raw.get("threads")
    if threads is None:
        threads = os.environ.get(THREADS_ENV_VAR)
    threads = int(threads) if threads is not None else (os.cpu_count() or 1)
    if threads < 1:
        raise ConfigError("thread count must be at least 1")

    return ExperimentConfig(
        experiment=experiment,
        grid=grid,
        kernel=kernel,
        measure=measure,
        t=t,
        radii=radii,
        replications=replications,
        seed=seed,
        threads=threads,
        out_dir=str(raw.get("out", "runs/latest")),
        kernel_half_cells=kernel_half_cells,
        margin=margin,
        asclt_horizon=horizon,
        asclt_checkpoints=checkpoints,
        panel_seeds=panel_seeds,
        pilot_replications=pilot,
        points_per_decade=ppd,
        oracle_law=oracle_law,
        oracle_length=oracle_length,
    )


def _profile_chunk(task) -> tuple[int, np.ndarray]:
    """Solve one fixed chunk of replications and read profiles at t.

    Runs in worker processes; the chunk contents depend only on the task,
    so assembly order and worker count cannot change the result.
    """
    grid, measure, kernel, cells, seed, start, stop, rep_base, t, radii, margin = task
    stack = np.empty((stop - start, grid.n_steps, grid.n_points))
    for row, rep in enumerate(range(start, stop)):
        if measure.variant == "gaussian_driver":
            inc = sample_gaussian_increments(grid, seed, rep_base + rep)
        else:
            inc = sample_white_increments(grid, measure, seed, rep_base + rep)
        stack[row] = color_increments(inc, cells, kernel).colored
    fields = solve_mild_batch(stack, grid)
    out = np.empty((stop - start, len(radii)))
    for row in range(stop - start):
        field = SolutionField(
            values=fields[row], grid=grid, margin=margin, provenance={}
        )
        out[row] = cumulative_centered_profile(field, t, radii).f_values
    return start, out


def ensemble_f_matrix(
    config: ExperimentConfig,
    replications: int,
    radii,
    rep_base: int = 0,
) -> np.ndarray:
    """Spatial averages for a block of replications, chunked and assembled."""
    radii = tuple(float(r) for r in radii)
    grid = config.grid
    cells = config.kernel_cells()
    chunk = max(1, min(replications, MAX_CHUNK_CELLS // (grid.n_steps * grid.n_points)))
    tasks = [
        (grid, config.measure, config.kernel, cells, config.seed,
         start, min(start + chunk, replications), rep_base, config.t, radii,
         config.margin)
        for start in range(0, replications, chunk)
    ]
    out = np.empty((replications, len(radii)))
    if config.threads <= 1 or len(tasks) == 1:
        results = map(_profile_chunk, tasks)
    else:
        with ProcessPoolExecutor(max_workers=config.threads) as executor:
            results = list(executor.map(_profile_chunk, tasks))
    for start, block in results:
        out[start : start + block.shape[0]] = block
    return out


@dataclass(frozen=True)
class RunManifest:
    experiment: str
    config: dict
    config_digest: str
    seed: int
    version: str
    started_at: str
    finished_at: str
    out_dir: str
    files: dict
    kernel_tail_mass: float | None
    warnings: tuple[str, ...]
    results: dict

    def to_json(self) -> str:
        payload = {
            "experiment": self.experiment,
            "config": self.config,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "version": self.version,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "out_dir": self.out_dir,
            "files": self.files,
            "kernel_tail_mass": self.kernel_tail_mass,
            "warnings": list(self.warnings),
            "results": self.results,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            experiment=data["experiment"],
            config=data["config"],
            config_digest=data["config_digest"],
            seed=data["seed"],
            version=data["version"],
            started_at=data["started_at"],
            finished_at=data["finished_at"],
            out_dir=data["out_dir"],
            files=data["files"],
            kernel_tail_mass=data["kernel_tail_mass"],
            warnings=tuple(data["warnings"]),
            results=data["results"],
        )


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _run_identities(config: ExperimentConfig, out: Path):
    reports = run_identity_suite()
    rows = [
        (r.name, _fmt(r.lhs), _fmt(r.rhs), _fmt(r.abs_err), _fmt(r.rel_err),
         str(r.passed).lower(), str(r.quadrature_ok).lower(), r.details)
        for r in reports
    ]
    files = [_write_csv(
        out / "identities.csv",
        ["name", "lhs", "rhs", "abs_err", "rel_err", "passed", "quadrature_ok",
         "details"],
        rows,
    )]
    failed = [r.name for r in reports if not r.passed]
    flagged = [r.name for r in reports if not r.quadrature_ok]
    warnings = []
    if failed:
        warnings.append(f"failed identities: {', '.join(failed)}")
    if flagged:
        warnings.append(f"quadrature warnings: {', '.join(flagged)}")
    results = {"checks": len(reports), "failed": len(failed)}
    return files, warnings, results


def _ensemble_files(config, out, f_matrix, radii):
    ens = Ensemble(t=config.t, radii=tuple(radii), f_matrix=f_matrix, seed=config.seed)
    table = estimate_sigma(ens)
    normed = ens.normalized(table)
    ensemble_rows = [
        (rep, _fmt(r), _fmt(f_matrix[rep, j]), _fmt(normed[rep, j]))
        for rep in range(ens.replications)
        for j, r in enumerate(radii)
    ]
    files = [
        _write_csv(out / "ensemble.csv", ["replication", "R", "F", "F_tilde"],
                   ensemble_rows),
        _write_csv(out / "sigma.csv", ["R", "sigma_hat", "M"],
                   [(_fmt(r), _fmt(s), table.replications)
                    for r, s in zip(table.radii, table.sigma_hat)]),
    ]
    return ens, table, normed, files


def _run_variance_scan(config: ExperimentConfig, out: Path):
    f_matrix = ensemble_f_matrix(config, config.replications, config.radii)
    _, table, _, files = _ensemble_files(config, out, f_matrix, config.radii)
    fit = fit_beta(table)
    files.append(_write_csv(
        out / "scaling.csv",
        ["beta_hat", "intercept", "stderr"],
        [(_fmt(fit.beta_hat), _fmt(fit.intercept), _fmt(fit.stderr))],
    ))
    results = {
        "beta_hat": fit.beta_hat,
        "intercept": fit.intercept,
        "stderr": fit.stderr,
    }
    return files, [], results


def _run_clt(config: ExperimentConfig, out: Path):
    f_matrix = ensemble_f_matrix(config, config.replications, config.radii)
    _, table, normed, files = _ensemble_files(config, out, f_matrix, config.radii)
    clt_rows = []
    results = {}
    for j, r in enumerate(config.radii):
        ks = ks_to_standard_normal(normed[:, j])
        w1 = wasserstein_1_normal(
            EmpiricalMeasure(normed[:, j], np.ones(normed.shape[0]))
        )
        clt_rows.append((_fmt(r), _fmt(ks), _fmt(w1), config.replications))
        results[f"ks_R{r:g}"] = ks
    files.append(_write_csv(
        out / "clt.csv", ["R", "ks_to_normal", "wasserstein_1", "M"], clt_rows
    ))
    return files, [], results


def _asclt_theta_grid(config: ExperimentConfig) -> np.ndarray:
    base = geometric_theta_grid(config.asclt_horizon, config.points_per_decade)
    return np.union1d(base, np.asarray(config.asclt_checkpoints))


def _run_asclt(config: ExperimentConfig, out: Path):
    thetas = _asclt_theta_grid(config)
    pilot_f = ensemble_f_matrix(config, config.pilot_replications, thetas)
    pilot = Ensemble(
        t=config.t, radii=tuple(thetas), f_matrix=pilot_f, seed=config.seed
    )
    table = estimate_sigma(pilot)
    sigma = np.asarray(table.sigma_hat)
    files = [_write_csv(
        out / "sigma.csv", ["R", "sigma_hat", "M"],
        [(_fmt(r), _fmt(s), table.replications)
         for r, s in zip(table.radii, table.sigma_hat)],
    )]
    panel_f = ensemble_f_matrix(
        config, config.panel_seeds, thetas, rep_base=PANEL_REPLICATION_BASE
    )
    panel = panel_f / sigma
    rows = []
    ks_by_checkpoint = {c: [] for c in config.asclt_checkpoints}
    for i in range(config.panel_seeds):
        for horizon in config.asclt_checkpoints:
            keep = thetas <= horizon * (1.0 + 1e-12)
            measure = log_average_measure(
                zip(thetas[keep], panel[i, keep]), mode="continuous"
            )
            ks = weighted_ks(measure)
            rows.append((i, _fmt(horizon), "continuous", _fmt(ks)))
            ks_by_checkpoint[horizon].append(ks)
    files.append(_write_csv(
        out / "asclt.csv", ["seed", "T_or_N", "mode", "weighted_ks"], rows
    ))
    results = {
        f"median_ks_T{c:g}": float(np.median(ks_by_checkpoint[c]))
        for c in config.asclt_checkpoints
    }
    final = np.asarray(ks_by_checkpoint[config.asclt_checkpoints[-1]])
    results["final_below_030"] = float(np.mean(final < 0.30))
    return files, [], results


def _run_oracle(config: ExperimentConfig, out: Path):
    rows = []
    warnings = []
    finals = []
    for i in range(config.panel_seeds):
        run = iid_asclt_oracle(config.oracle_law, config.oracle_length, config.seed + i)
        if run.below_asymptotic and not warnings:
            warnings.append(
                f"path length {config.oracle_length} is below the asymptotic "
                "threshold; log averaging is unreliable"
            )
        for n_i, ks in run.checkpoints:
            rows.append((config.seed + i, n_i, "discrete", _fmt(ks)))
        finals.append(run.checkpoints[-1][1])
    files = [_write_csv(
        out / "asclt.csv", ["seed", "T_or_N", "mode", "weighted_ks"], rows
    )]
    finals = np.asarray(finals)
    results = {
        "law": config.oracle_law,
        "median_final_ks": float(np.median(finals)),
        "final_below_015": float(np.mean(finals < 0.15)),
    }
    return files, warnings, results


def _run_simulate(config: ExperimentConfig, out: Path):
    grid = config.grid
    if config.measure.variant == "gaussian_driver":
        inc = sample_gaussian_increments(grid, config.seed, 0)
    else:
        inc = sample_white_increments(grid, config.measure, config.seed, 0)
    colored = color_increments(inc, config.kernel_cells(), config.kernel)
    field_values = solve_mild_batch(colored.colored[None], grid)[0]
    field = SolutionField(field_values, grid, config.margin, provenance={})

    slice_path = _write_csv(
        out / "final_slice.csv", ["x", "u"],
        [(_fmt(x), _fmt(u)) for x, u in zip(grid.x_points, field_values[-1])],
    )
    bin_path = out / "field.bin"
    field_values.astype("<f8").tofile(bin_path)
    sidecar = out / "field.json"
    sidecar.write_text(json.dumps({
        "grid": grid.describe(),
        "kernel": config.kernel.describe(),
        "measure": config.measure.describe(),
        "seed": config.seed,
        "shape": list(field_values.shape),
        "dtype": "<f8",
        "layout": "row-major, one row per time step",
    }, indent=2, sort_keys=True), encoding="utf-8")
    results = {
        "final_mean": float(np.mean(field_values[-1])),
        "safe_radius": field.safe_radius,
    }
    return [slice_path, bin_path, sidecar], [], results


_RUNNERS = {
    "identities": _run_identities,
    "variance-scan": _run_variance_scan,
    "clt": _run_clt,
    "asclt": _run_asclt,
    "oracle-iid": _run_oracle,
    "simulate": _run_simulate,
}


def _kernel_tail_metric(config: ExperimentConfig) -> float:
    if config.kernel.is_riesz:
        return riesz_l2_tail_fraction(
            config.kernel, config.grid.dx, config.kernel_half_cells
        )
    return discarded_tail_mass(
        config.kernel, (config.kernel_half_cells + 0.5) * config.grid.dx
    )


def run_experiment(config: ExperimentConfig) -> RunManifest:
    """Execute one experiment and persist outputs plus a hashed manifest."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    files, warnings, results = _RUNNERS[config.experiment](config, out)
    finished = datetime.now(timezone.utc).isoformat()
    manifest = RunManifest(
        experiment=config.experiment,
        config=config.resolved(),
        config_digest=config.digest(),
        seed=config.seed,
        version=__version__,
        started_at=started,
        finished_at=finished,
        out_dir=str(out),
        files={p.name: _sha256(p) for p in files},
        kernel_tail_mass=_kernel_tail_metric(config),
        warnings=tuple(warnings),
        results=results,
    )
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    if not path.exists():
        raise FileNotFoundError(f"plot data needs {path}, which is absent")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)


def emit_plot_data(manifest: RunManifest) -> list[Path]:
    """Derive tidy plotting CSVs from a completed run's outputs."""
    if not manifest.files:
        raise ValueError("manifest lists no output files to plot")
    out = Path(manifest.out_dir)
    if manifest.experiment == "variance-scan":
        _, sigma_rows = _read_csv(out / "sigma.csv")
        _, scaling_rows = _read_csv(out / "scaling.csv")
        beta, intercept = float(scaling_rows[0][0]), float(scaling_rows[0][1])
        rows = []
        for r, s, _m in sigma_rows:
            log_r = math.log(float(r))
            rows.append((
                r, _fmt(log_r), _fmt(2.0 * math.log(float(s))),
                _fmt(intercept + beta * log_r),
            ))
        return [_write_csv(
            out / "scaling_plot.csv",
            ["R", "log_R", "log_sigma_sq", "fit_log_sigma_sq"],
            rows,
        )]
    if manifest.experiment == "clt":
        header, ens_rows = _read_csv(out / "ensemble.csv")
        r_col, f_tilde_col = header.index("R"), header.index("F_tilde")
        radii = sorted({float(row[r_col]) for row in ens_rows})
        target = radii[-1]
        samples = np.sort([
            float(row[f_tilde_col]) for row in ens_rows
            if float(row[r_col]) == target
        ])
        n = samples.size
        probs = (np.arange(1, n + 1) - 0.5) / n
        rows = [
            (_fmt(p), _fmt(s), _fmt(q))
            for p, s, q in zip(probs, samples, ndtri(probs))
        ]
        return [_write_csv(
            out / "qq_plot.csv",
            ["probability", "sample_quantile", "normal_quantile"],
            rows,
        )]
    if manifest.experiment in ("asclt", "oracle-iid"):
        _, rows_in = _read_csv(out / "asclt.csv")
        by_horizon: dict[str, list[float]] = {}
        for seed, horizon, _mode, ks in rows_in:
            by_horizon.setdefault(horizon, []).append(float(ks))
        medians = {h: float(np.median(v)) for h, v in by_horizon.items()}
        rows = [
            (seed, horizon, ks, _fmt(medians[horizon]))
            for seed, horizon, _mode, ks in rows_in
        ]
        return [_write_csv(
            out / "asclt_decay.csv",
            ["seed", "horizon", "weighted_ks", "median_ks"],
            rows,
        )]
    raise ValueError(f"experiment {manifest.experiment!r} has no plot-data mapping")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ham-asclt",
        description="Simulation lab for spatial averages of the hyperbolic "
        "Anderson model under Levy colored noise.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--reps", type=int, help="replication count override")
        p.add_argument("--threads", type=int, help="worker process count")
        p.add_argument("--out", type=Path, help="output directory")
    plot = sub.add_parser("plot-data", help="emit plot-ready CSVs from a manifest")
    plot.add_argument("--manifest", type=Path, required=True)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "plot-data":
            manifest = RunManifest.load(args.manifest)
            for path in emit_plot_data(manifest):
                print(path)
            return 0
        raw = {}
        if args.config is not None:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        raw["experiment"] = args.command
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.reps is not None:
            raw["replications"] = args.reps
        if args.threads is not None:
            raw["threads"] = args.threads
        if args.out is not None:
            raw["out"] = str(args.out)
        config = build_config(raw)
        manifest = run_experiment(config)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{config.experiment}: wrote {len(manifest.files)} files to {manifest.out_dir}")
    for key, value in sorted(manifest.results.items()):
        if isinstance(value, float):
            print(f"  {key} = {value:.6g}")
        else:
            print(f"  {key} = {value}")
    if manifest.warnings:
        for warning in manifest.warnings:
            print(f"  warning: {warning}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
