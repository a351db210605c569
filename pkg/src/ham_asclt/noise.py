"""Compensated Lévy (and Gaussian) noise increments on a space-time grid.

White increments live on cells ``[m dt, (m+1) dt] x [x_j - dx/2, x_j + dx/2]``
centred on the spatial grid points.  Stochastic variants are finite-activity
compound Poisson: a Poisson number of jumps per cell with i.i.d. sizes, minus
the exact analytic compensator, so every cell has mean zero and variance
``m2 dt dx``.  Coloring convolves each time row with the kernel's cell
integrals, which is the discrete form of testing the white noise against
``phi * kappa``.

Reproducibility contract: the stream for (master seed, replication, row) is a
Philox generator keyed by exactly that triple, so any scheduling of
replications or rows across workers reproduces identical arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.signal import convolve, fftconvolve

from .kernels import KernelSpec

#: Expected jumps per cell above which sampling refuses to run.
MAX_MEAN_JUMPS_PER_CELL = 1e9

#: Kernels at most this long are convolved by direct summation.
DIRECT_CONVOLUTION_MAX_LEN = 33


def _near_integer(value: float, what: str) -> int:
    n = round(value)
    if abs(value - n) > 1e-9 * max(1.0, abs(value)):
        raise ValueError(f"{what} = {value} is not an integer multiple")
    return int(n)


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid on ``[0, t_max] x [-half_width, half_width]``.

    ``t_max/dt``, ``half_width/dx`` must be integers and ``dt <= dx`` so one
    time step never outruns one cell of the light cone.
    """

    t_max: float
    dt: float
    dx: float
    half_width: float

    def __post_init__(self) -> None:
        for name in ("t_max", "dt", "dx", "half_width"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        _near_integer(self.t_max / self.dt, "t_max/dt")
        _near_integer(self.half_width / self.dx, "half_width/dx")
        if self.dt > self.dx * (1.0 + 1e-12):
            raise ValueError(
                f"dt = {self.dt} must not exceed dx = {self.dx} (light-cone resolution)"
            )

    @property
    def n_steps(self) -> int:
        return _near_integer(self.t_max / self.dt, "t_max/dt")

    @property
    def n_points(self) -> int:
        return 2 * _near_integer(self.half_width / self.dx, "half_width/dx") + 1

    @property
    def center_index(self) -> int:
        return _near_integer(self.half_width / self.dx, "half_width/dx")

    @cached_property
    def x_points(self) -> np.ndarray:
        pts = -self.half_width + self.dx * np.arange(self.n_points)
        pts.flags.writeable = False
        return pts

    def describe(self) -> dict:
        return {
            "t_max": self.t_max,
            "dt": self.dt,
            "dx": self.dx,
            "half_width": self.half_width,
        }


_STOCHASTIC_VARIANTS = ("two_point", "gaussian_jumps", "gaussian_driver")


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Jump-size measure of the driving noise.

    ``two_point``: rate ``intensity``, jumps ``+magnitude`` with probability
    ``up_probability`` else ``-magnitude``.  ``gaussian_jumps``: rate
    ``intensity``, centred normal sizes with std ``jump_std``.
    ``deterministic``: explicitly placed jumps ``(time_index, space_index,
    size)``, for oracle tests, never compensated.  ``gaussian_driver`` marks
    the space-time white-noise driver (not a jump measure; unit ``m2``).
    """

    variant: str
    intensity: float = 0.0
    magnitude: float = 0.0
    up_probability: float = 0.5
    jump_std: float = 0.0
    jumps: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self) -> None:
        if self.variant == "two_point":
            if not self.intensity > 0.0:
                raise ValueError(f"intensity must be positive, got {self.intensity}")
            if not self.magnitude > 0.0:
                raise ValueError(f"magnitude must be positive, got {self.magnitude}")
            if not 0.0 <= self.up_probability <= 1.0:
                raise ValueError(f"up_probability must lie in [0,1], got {self.up_probability}")
        elif self.variant == "gaussian_jumps":
            if not self.intensity > 0.0:
                raise ValueError(f"intensity must be positive, got {self.intensity}")
            if not self.jump_std > 0.0:
                raise ValueError(f"jump_std must be positive, got {self.jump_std}")
        elif self.variant == "deterministic":
            for entry in self.jumps:
                if len(entry) != 3:
                    raise ValueError(f"jump entries are (time, space, size), got {entry!r}")
        elif self.variant != "gaussian_driver":
            raise ValueError(f"unknown measure variant {self.variant!r}")

    @classmethod
    def two_point(
        cls, intensity: float, magnitude: float, up_probability: float = 0.5
    ) -> "LevyMeasureSpec":
        return cls("two_point", intensity=intensity, magnitude=magnitude,
                   up_probability=up_probability)

    @classmethod
    def gaussian_jumps(cls, intensity: float, jump_std: float) -> "LevyMeasureSpec":
        return cls("gaussian_jumps", intensity=intensity, jump_std=jump_std)

    @classmethod
    def deterministic(cls, jumps) -> "LevyMeasureSpec":
        return cls("deterministic", jumps=tuple(tuple(j) for j in jumps))

    @classmethod
    def gaussian_driver(cls) -> "LevyMeasureSpec":
        return cls("gaussian_driver")

    @property
    def mean_jump(self) -> float:
        """E[z] under the jump-size law (not rate-weighted)."""
        if self.variant == "two_point":
            return self.magnitude * (2.0 * self.up_probability - 1.0)
        if self.variant in ("gaussian_jumps", "gaussian_driver"):
            return 0.0
        raise ValueError("deterministic variant has no jump-size law")

    def describe(self) -> dict:
        if self.variant == "two_point":
            return {
                "variant": self.variant,
                "intensity": self.intensity,
                "magnitude": self.magnitude,
                "up_probability": self.up_probability,
            }
        if self.variant == "gaussian_jumps":
            return {"variant": self.variant, "intensity": self.intensity,
                    "jump_std": self.jump_std}
        if self.variant == "deterministic":
            return {"variant": self.variant, "jumps": [list(j) for j in self.jumps]}
        return {"variant": self.variant}


def second_moment(spec: LevyMeasureSpec) -> float:
    """``m2 = int z^2 nu(dz)``; the Gaussian driver counts as unit m2."""
    if spec.variant == "two_point":
        return spec.intensity * spec.magnitude**2
    if spec.variant == "gaussian_jumps":
        return spec.intensity * spec.jump_std**2
    if spec.variant == "gaussian_driver":
        return 1.0
    raise ValueError("deterministic variant has no second moment")


@dataclass(eq=False)
class NoiseIncrements:
    """White (and optionally colored) increments plus their provenance."""

    white: np.ndarray
    grid: GridSpec
    measure: LevyMeasureSpec
    seed: int
    replication: int = 0
    colored: np.ndarray | None = None
    kernel: KernelSpec | None = None

    def __post_init__(self) -> None:
        expected = (self.grid.n_steps, self.grid.n_points)
        if self.white.shape != expected:
            raise ValueError(f"white array shape {self.white.shape} != grid {expected}")
        self.white.flags.writeable = False
        if self.colored is not None:
            if self.colored.shape != expected:
                raise ValueError(f"colored array shape {self.colored.shape} != grid {expected}")
            self.colored.flags.writeable = False


def stream(seed: int, replication: int, row: int) -> np.random.Generator:
    """Independent Philox stream keyed by (master seed, replication, row)."""
    if seed < 0 or replication < 0 or row < 0:
        raise ValueError("seed, replication and row must be nonnegative")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replication, row))
    return np.random.Generator(np.random.Philox(ss))


def sample_white_increments(
    grid: GridSpec, spec: LevyMeasureSpec, seed: int, replication: int = 0
) -> NoiseIncrements:
    """Draw one replication of compensated white increments.

    Each cell receives a Poisson number of jumps at rate
    ``intensity dt dx``; the summed sizes minus the analytic compensator
    ``intensity E[z] dt dx`` give a centred increment.  The deterministic
    variant places its listed jumps verbatim.
    """
    n_t, n_x = grid.n_steps, grid.n_points
    white = np.zeros((n_t, n_x))
    if spec.variant == "deterministic":
        for m, j, z in spec.jumps:
            if not (0 <= m < n_t and 0 <= j < n_x):
                raise ValueError(f"jump at ({m},{j}) falls outside the {n_t}x{n_x} grid")
            white[m, j] += z
        return NoiseIncrements(white, grid, spec, seed, replication)
    if spec.variant == "gaussian_driver":
        raise ValueError("use sample_gaussian_increments for the Gaussian driver")

    cell = grid.dt * grid.dx
    mean_count = spec.intensity * cell
    if mean_count > MAX_MEAN_JUMPS_PER_CELL:
        raise ValueError(
            f"expected jumps per cell {mean_count:g} exceeds {MAX_MEAN_JUMPS_PER_CELL:g}"
        )
    compensation = spec.intensity * spec.mean_jump * cell
    for m in range(n_t):
        rng = stream(seed, replication, m)
        counts = rng.poisson(mean_count, n_x)
        row = np.zeros(n_x)
        hit = np.flatnonzero(counts)
        if hit.size:
            if spec.variant == "two_point":
                ups = rng.binomial(counts[hit], spec.up_probability)
                row[hit] = spec.magnitude * (2.0 * ups - counts[hit])
            else:
                row[hit] = spec.jump_std * np.sqrt(counts[hit]) * rng.standard_normal(hit.size)
        white[m] = row - compensation
    return NoiseIncrements(white, grid, spec, seed, replication)


def sample_gaussian_increments(
    grid: GridSpec, seed: int, replication: int = 0
) -> NoiseIncrements:
    """Space-time white-noise increments: i.i.d. N(0, dt dx) cells."""
    n_t, n_x = grid.n_steps, grid.n_points
    white = np.empty((n_t, n_x))
    scale = math.sqrt(grid.dt * grid.dx)
    for m in range(n_t):
        white[m] = scale * stream(seed, replication, m).standard_normal(n_x)
    return NoiseIncrements(white, grid, LevyMeasureSpec.gaussian_driver(), seed, replication)


def _validate_kernel_cells(cells: np.ndarray, n_x: int) -> np.ndarray:
    cells = np.asarray(cells, dtype=float)
    if cells.ndim != 1 or cells.size % 2 == 0:
        raise ValueError("kernel cells must be a 1-D odd-length sequence")
    if not np.all(np.isfinite(cells)):
        raise ValueError("kernel cells must be finite")
    if not np.array_equal(cells, cells[::-1]):
        raise ValueError("kernel cells must be symmetric")
    half = cells.size // 2
    if half >= n_x:
        raise ValueError(
            f"kernel half-width {half} cells reaches beyond the grid row ({n_x} points)"
        )
    return cells


def color_increments(
    white: NoiseIncrements, kernel_cells, kernel: KernelSpec | None = None
) -> NoiseIncrements:
    """Convolve each time row with the kernel cell integrals.

    ``colored(m, j) = sum_k cells(k - j) white(m, k)`` with zero padding
    outside the strip; callers size the strip so the padding never reaches
    the light cone of reported outputs.  Direct summation for short kernels,
    FFT otherwise; the choice depends only on the kernel length, keeping
    results reproducible for a given configuration.
    """
    cells = _validate_kernel_cells(kernel_cells, white.grid.n_points)
    if cells.size <= DIRECT_CONVOLUTION_MAX_LEN:
        colored = convolve(white.white, cells[None, :], mode="same", method="direct")
    else:
        colored = fftconvolve(white.white, cells[None, :], mode="same", axes=1)
    return NoiseIncrements(
        white=np.asarray(white.white),
        grid=white.grid,
        measure=white.measure,
        seed=white.seed,
        replication=white.replication,
        colored=colored,
        kernel=kernel,
    )


def save_increments(inc: NoiseIncrements, base: str | Path) -> list[Path]:
    """Dump increments as little-endian float64 row-major binaries + sidecar."""
    base = Path(base)
    base.parent.mkdir(parents=True, exist_ok=True)
    written = []
    sidecar = {
        "grid": inc.grid.describe(),
        "measure": inc.measure.describe(),
        "kernel": inc.kernel.describe() if inc.kernel else None,
        "seed": inc.seed,
        "replication": inc.replication,
        "shape": list(inc.white.shape),
        "dtype": "<f8",
        "layout": "row-major",
        "arrays": ["white"] + (["colored"] if inc.colored is not None else []),
    }
    path = base.with_suffix(".white.bin")
    inc.white.astype("<f8").tofile(path)
    written.append(path)
    if inc.colored is not None:
        path = base.with_suffix(".colored.bin")
        inc.colored.astype("<f8").tofile(path)
        written.append(path)
    meta = base.with_suffix(".json")
    meta.write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    written.append(meta)
    return written


def load_increments(base: str | Path) -> NoiseIncrements:
    """Rebuild NoiseIncrements from a dump written by save_increments."""
    base = Path(base)
    meta = json.loads(base.with_suffix(".json").read_text())
    grid = GridSpec(**meta["grid"])
    m = dict(meta["measure"])
    if m["variant"] == "deterministic":
        measure = LevyMeasureSpec.deterministic(m["jumps"])
    else:
        measure = LevyMeasureSpec(**m)
    kernel = KernelSpec(**meta["kernel"]) if meta["kernel"] else None
    shape = tuple(meta["shape"])
    white = np.fromfile(base.with_suffix(".white.bin"), dtype="<f8").reshape(shape)
    colored = None
    if "colored" in meta["arrays"]:
        colored = np.fromfile(base.with_suffix(".colored.bin"), dtype="<f8").reshape(shape)
    return NoiseIncrements(
        white=white, grid=grid, measure=measure, seed=meta["seed"],
        replication=meta["replication"], colored=colored, kernel=kernel,
    )
