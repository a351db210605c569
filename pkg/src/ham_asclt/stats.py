"""Ensemble statistics: variance scaling, CLT distance, and log-averaged
(almost-sure CLT) diagnostics.

Log-averaged empirical measures put weight proportional to 1/theta (or 1/k)
on the path values; after normalization every measure here has total weight
one, so distances to the standard normal are directly comparable across
horizons.  Ensemble moments use compensated summation so results do not
depend on reduction order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .noise import stream
from .solver import RadialProfile

MIN_REPLICATIONS = 30
MIN_SCALING_RADII = 3
MIN_SCALING_SPAN = 8.0
MIN_KS_SAMPLES = 100
ASYMPTOTIC_PATH_LENGTH = 1000


@dataclass(frozen=True)
class Ensemble:
    """Spatial averages for M independent replications at one time."""

    t: float
    radii: tuple[float, ...]
    f_matrix: np.ndarray  # shape (M, len(radii))
    seed: int

    def __post_init__(self) -> None:
        if self.f_matrix.ndim != 2 or self.f_matrix.shape[1] != len(self.radii):
            raise ValueError(
                f"f_matrix shape {self.f_matrix.shape} does not match "
                f"{len(self.radii)} radii"
            )
        self.f_matrix.flags.writeable = False

    @classmethod
    def from_profiles(cls, profiles: list[RadialProfile], seed: int) -> "Ensemble":
        if not profiles:
            raise ValueError("cannot build an ensemble from zero profiles")
        first = profiles[0]
        for p in profiles[1:]:
            if p.radii != first.radii or p.t != first.t:
                raise ValueError("all profiles must share the same time and radii")
        matrix = np.array([p.f_values for p in profiles])
        return cls(t=first.t, radii=first.radii, f_matrix=matrix, seed=seed)

    @property
    def replications(self) -> int:
        return self.f_matrix.shape[0]

    def normalized(self, table: "SigmaTable") -> np.ndarray:
        """F values divided by the per-radius standard deviation estimate."""
        if table.radii != self.radii:
            raise ValueError("sigma table radii do not match the ensemble")
        return self.f_matrix / np.asarray(table.sigma_hat)


@dataclass(frozen=True)
class SigmaTable:
    radii: tuple[float, ...]
    sigma_hat: tuple[float, ...]
    replications: int

    def __post_init__(self) -> None:
        if len(self.sigma_hat) != len(self.radii):
            raise ValueError("one sigma per radius required")
        if any(s <= 0.0 or not math.isfinite(s) for s in self.sigma_hat):
            raise ValueError("degenerate ensemble: nonpositive sigma estimate")


@dataclass(frozen=True)
class ScalingFit:
    beta_hat: float
    intercept: float
    stderr: float


@dataclass(eq=False)
class EmpiricalMeasure:
    """Weighted atoms, normalized to total weight one on construction."""

    locations: np.ndarray
    weights: np.ndarray
    total_weight: float = field(init=False)

    def __post_init__(self) -> None:
        self.locations = np.asarray(self.locations, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.locations.shape != self.weights.shape or self.locations.ndim != 1:
            raise ValueError("locations and weights must be matching 1-D arrays")
        if self.locations.size == 0:
            raise ValueError("measure needs at least one atom")
        if np.any(self.weights < 0.0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and nonnegative")
        total = math.fsum(self.weights)
        if total <= 0.0:
            raise ValueError("weights sum to zero")
        self.weights = self.weights / total
        self.total_weight = math.fsum(self.weights)
        if abs(self.total_weight - 1.0) > 1e-9:
            raise ValueError(f"normalization failed: total weight {self.total_weight}")
        self.locations.flags.writeable = False
        self.weights.flags.writeable = False


def estimate_sigma(ensemble: Ensemble) -> SigmaTable:
    """Unbiased per-radius standard deviation of the spatial averages."""
    m = ensemble.replications
    if m < MIN_REPLICATIONS:
        raise ValueError(f"need at least {MIN_REPLICATIONS} replications, got {m}")
    sigmas = []
    for col in ensemble.f_matrix.T:
        mean = math.fsum(col) / m
        var = math.fsum((x - mean) ** 2 for x in col) / (m - 1)
        sigmas.append(math.sqrt(var))
    return SigmaTable(radii=ensemble.radii, sigma_hat=tuple(sigmas), replications=m)


def fit_beta(table: SigmaTable) -> ScalingFit:
    """Least-squares slope of log variance against log radius.

    Requires at least three radii spanning a factor of eight so the slope is
    identified by more than a local pair.
    """
    n = len(table.radii)
    if n < MIN_SCALING_RADII:
        raise ValueError(f"need at least {MIN_SCALING_RADII} radii, got {n}")
    span = max(table.radii) / min(table.radii)
    if span < MIN_SCALING_SPAN:
        raise ValueError(f"radii span factor {span:g} is below {MIN_SCALING_SPAN:g}")
    x = [math.log(r) for r in table.radii]
    y = [2.0 * math.log(s) for s in table.sigma_hat]
    x_mean = math.fsum(x) / n
    y_mean = math.fsum(y) / n
    sxx = math.fsum((xi - x_mean) ** 2 for xi in x)
    sxy = math.fsum((xi - x_mean) * (yi - y_mean) for xi, yi in zip(x, y))
    slope = sxy / sxx
    intercept = y_mean - slope * x_mean
    residuals = [yi - (intercept + slope * xi) for xi, yi in zip(x, y)]
    ssr = math.fsum(r * r for r in residuals)
    stderr = math.sqrt(ssr / (n - 2) / sxx) if n > 2 else float("nan")
    return ScalingFit(beta_hat=slope, intercept=intercept, stderr=stderr)


def ks_to_standard_normal(samples) -> float:
    """Two-sided Kolmogorov-Smirnov statistic against N(0, 1)."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < MIN_KS_SAMPLES:
        raise ValueError(f"need at least {MIN_KS_SAMPLES} samples, got {n}")
    cdf = ndtr(x)
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - cdf), np.max(cdf - (grid - 1.0 / n))))


def _continuous_log_weights(thetas: np.ndarray) -> np.ndarray:
    """Trapezoid weights for the 1/theta log average, before normalization."""
    gaps = np.diff(thetas)
    w = np.zeros_like(thetas)
    w[:-1] += 0.5 * gaps
    w[1:] += 0.5 * gaps
    return w / thetas


def log_average_measure(points, mode: str) -> EmpiricalMeasure:
    """Log-averaged empirical measure of a path.

    Continuous mode integrates delta_{value(theta)} dtheta/theta over
    [1, T] by the trapezoid rule; discrete mode weights index k by 1/k.
    Both are then normalized exactly, which absorbs the trapezoid (or
    harmonic-sum) error in the nominal 1/log T factor.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (theta, value) pairs")
    thetas, values = pts[:, 0], pts[:, 1]
    if np.any(np.diff(thetas) <= 0.0):
        raise ValueError("thetas must be strictly increasing")
    if mode == "continuous":
        if thetas.size < 2 or abs(thetas[0] - 1.0) > 1e-9:
            raise ValueError("continuous grid must start at theta = 1")
        if thetas[-1] <= math.e:
            raise ValueError("horizon T must exceed e for a meaningful log average")
        weights = _continuous_log_weights(thetas)
    elif mode == "discrete":
        ks = thetas.astype(int)
        if np.any(ks != thetas) or not np.array_equal(ks, np.arange(1, ks.size + 1)):
            raise ValueError("discrete mode expects indices 1..N")
        if ks.size < 3:
            raise ValueError("discrete mode needs N >= 3")
        weights = 1.0 / ks
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return EmpiricalMeasure(locations=values, weights=weights)


def weighted_ks(measure: EmpiricalMeasure) -> float:
    """Sup distance between the measure's CDF and the standard normal CDF.

    Atoms at equal locations are merged first, so the statistic depends only
    on the measure, not on how its atoms were listed.
    """
    order = np.argsort(measure.locations, kind="stable")
    locs = measure.locations[order]
    wts = measure.weights[order]
    boundaries = np.flatnonzero(np.diff(locs)) + 1
    starts = np.concatenate(([0], boundaries))
    merged_locs = locs[starts]
    merged_wts = np.add.reduceat(wts, starts)
    cum = np.cumsum(merged_wts)
    cdf = ndtr(merged_locs)
    below = np.concatenate(([0.0], cum[:-1]))
    return float(max(np.max(np.abs(cum - cdf)), np.max(np.abs(below - cdf))))


def _normal_cdf_antideriv(x: np.ndarray | float) -> np.ndarray | float:
    return x * ndtr(x) + np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)


def wasserstein_1_normal(measure: EmpiricalMeasure) -> float:
    """L1 distance between CDFs, via the exact normal antiderivative.

    On each interval between atoms the empirical CDF is constant, so the
    integrand |W - Phi(x)| splits at the crossing point Phi^{-1}(W).
    """
    order = np.argsort(measure.locations, kind="stable")
    locs = measure.locations[order]
    wts = measure.weights[order]
    cum = np.cumsum(wts)
    a = _normal_cdf_antideriv
    # tails: CDF is 0 left of the first atom and 1 right of the last
    total = float(a(locs[0])) + float(a(locs[-1]) - locs[-1])
    for left, right, w in zip(locs[:-1], locs[1:], cum[:-1]):
        if w <= 0.0:
            total += float(a(right) - a(left)) - w * (right - left)
            continue
        if w >= 1.0:
            total += w * (right - left) - float(a(right) - a(left))
            continue
        cross = min(max(float(ndtri(w)), left), right)
        # W >= Phi before the crossing, Phi >= W after
        total += w * (cross - left) - float(a(cross) - a(left))
        total += float(a(right) - a(cross)) - w * (right - cross)
    return total


@dataclass(frozen=True)
class TestFunction:
    """Bounded Lipschitz test function with its constants."""

    name: str
    fn: object
    lipschitz: float
    bound: float


def _clamped_identity(x):
    return np.clip(x, -3.0, 3.0)


TEST_FUNCTIONS = {
    "clamped_identity": TestFunction("clamped_identity", _clamped_identity, 1.0, 3.0),
    "tanh": TestFunction("tanh", np.tanh, 1.0, 1.0),
    "cosine": TestFunction("cosine", np.cos, 1.0, 1.0),
}


def lipschitz_test_function(name: str) -> TestFunction:
    try:
        return TEST_FUNCTIONS[name]
    except KeyError:
        known = ", ".join(sorted(TEST_FUNCTIONS))
        raise ValueError(f"unknown test function {name!r}; choose one of {known}") from None


def lipschitz_log_average(points, g_name: str, centers) -> float:
    """Log-averaged, centered test-function statistic L_T.

    ``centers`` carries the per-theta means of g over an independent pilot
    ensemble; subtracting them leaves the fluctuation whose second moment
    should decay like 1/log T.
    """
    g = lipschitz_test_function(g_name)
    pts = np.asarray(list(points), dtype=float)
    ctr = np.asarray(list(centers), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or ctr.shape != pts.shape:
        raise ValueError("points and centers must be matching (theta, value) pair lists")
    if not np.array_equal(pts[:, 0], ctr[:, 0]):
        raise ValueError("centers were computed on a different theta grid")
    thetas = pts[:, 0]
    if np.any(np.diff(thetas) <= 0.0) or abs(thetas[0] - 1.0) > 1e-9:
        raise ValueError("theta grid must be increasing and start at 1")
    weights = _continuous_log_weights(thetas)
    diffs = np.asarray(g.fn(pts[:, 1]), dtype=float) - ctr[:, 1]
    return math.fsum(weights * diffs) / math.fsum(weights)


@dataclass(frozen=True)
class OracleRun:
    law: str
    seed: int
    checkpoints: tuple[tuple[int, float], ...]
    below_asymptotic: bool


_IID_LAWS = ("rademacher", "uniform", "gaussian")


def _iid_draws(law: str, n: int, rng: np.random.Generator) -> np.ndarray:
    if law == "rademacher":
        return 2.0 * rng.integers(0, 2, n) - 1.0
    if law == "uniform":
        half = math.sqrt(3.0)
        return rng.uniform(-half, half, n)
    if law == "gaussian":
        return rng.standard_normal(n)
    known = ", ".join(_IID_LAWS)
    raise ValueError(f"unknown law {law!r}; centered unit-variance laws: {known}")


def iid_asclt_oracle(law: str, n: int, seed: int) -> OracleRun:
    """Classical almost-sure CLT check on one i.i.d. partial-sum path.

    Returns the weighted KS distance of the discretely log-averaged measure
    of S_k/sqrt(k) at geometric checkpoints.  Horizons below 10^3 are still
    evaluated but flagged: log N is too small for the averaging to bite.
    """
    if n < 3:
        raise ValueError("need n >= 3 to form a log average")
    rng = stream(seed, 0, 0)
    sums = np.cumsum(_iid_draws(law, n, rng))
    values = sums / np.sqrt(np.arange(1, n + 1))
    checkpoints = sorted(
        {10**k for k in range(3, 10) if 10**k <= n} | {n}
    )
    results = []
    for n_i in checkpoints:
        measure = log_average_measure(
            zip(range(1, n_i + 1), values[:n_i]), mode="discrete"
        )
        results.append((n_i, weighted_ks(measure)))
    return OracleRun(
        law=law,
        seed=seed,
        checkpoints=tuple(results),
        below_asymptotic=n < ASYMPTOTIC_PATH_LENGTH,
    )


def sample_log_ou_path(
    thetas, corr_exponent: float, seed: int, replication: int = 0
) -> np.ndarray:
    """Stationary unit-variance path with corr(H_theta, H_w) = (theta/w)^c.

    An AR(1) recursion in log theta realizes the correlation exactly, which
    makes the path a clean input for the Lipschitz log-average decay check.
    """
    thetas = np.asarray(thetas, dtype=float)
    if np.any(thetas <= 0.0) or np.any(np.diff(thetas) <= 0.0):
        raise ValueError("thetas must be positive and strictly increasing")
    if corr_exponent <= 0.0:
        raise ValueError("correlation exponent must be positive")
    rng = stream(seed, replication, 0)
    shocks = rng.standard_normal(thetas.size)
    path = np.empty(thetas.size)
    path[0] = shocks[0]
    rho = (thetas[:-1] / thetas[1:]) ** corr_exponent
    scale = np.sqrt(1.0 - rho * rho)
    for i in range(1, thetas.size):
        path[i] = rho[i - 1] * path[i - 1] + scale[i - 1] * shocks[i]
    return path


def geometric_theta_grid(t_final: float, points_per_decade: int = 64) -> np.ndarray:
    """Geometric grid on [1, T] used by the continuous log averages."""
    if t_final <= 1.0:
        raise ValueError("horizon must exceed 1")
    decades = math.log10(t_final)
    count = max(int(math.ceil(decades * points_per_decade)), 2)
    grid = np.geomspace(1.0, t_final, count + 1)
    grid[0], grid[-1] = 1.0, t_final
    return grid
