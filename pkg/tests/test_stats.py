"""Statistics oracles: exact regression recovery, hand-computed measure
weights, closed-form normal distances, and Monte Carlo checks with seeded
generators."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ndtr, ndtri

from ham_asclt.solver import RadialProfile
from ham_asclt.stats import (
    EmpiricalMeasure,
    Ensemble,
    ScalingFit,
    SigmaTable,
    estimate_sigma,
    fit_beta,
    geometric_theta_grid,
    iid_asclt_oracle,
    ks_to_standard_normal,
    lipschitz_log_average,
    log_average_measure,
    sample_log_ou_path,
    lipschitz_test_function,
    wasserstein_1_normal,
    weighted_ks,
)

RADII = (1.0, 2.0, 4.0, 8.0, 16.0)


def gaussian_ensemble(scales, m=3000, seed=0):
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((m, len(scales))) * np.asarray(scales)
    return Ensemble(t=1.0, radii=RADII[: len(scales)], f_matrix=matrix, seed=seed)


class TestEnsemble:
    def test_from_profiles_stacks_rows(self):
        profiles = [
            RadialProfile(t=1.0, radii=(1.0, 2.0), f_values=(float(i), 2.0 * i))
            for i in range(3)
        ]
        ens = Ensemble.from_profiles(profiles, seed=5)
        assert ens.replications == 3
        assert np.array_equal(ens.f_matrix[:, 0], [0.0, 1.0, 2.0])

    def test_mismatched_profiles_rejected(self):
        a = RadialProfile(t=1.0, radii=(1.0, 2.0), f_values=(0.0, 0.0))
        b = RadialProfile(t=1.0, radii=(1.0, 3.0), f_values=(0.0, 0.0))
        c = RadialProfile(t=0.5, radii=(1.0, 2.0), f_values=(0.0, 0.0))
        with pytest.raises(ValueError):
            Ensemble.from_profiles([a, b], seed=0)
        with pytest.raises(ValueError):
            Ensemble.from_profiles([a, c], seed=0)
        with pytest.raises(ValueError):
            Ensemble.from_profiles([], seed=0)

    def test_matrix_is_read_only(self):
        ens = gaussian_ensemble([1.0, 2.0], m=40)
        with pytest.raises(ValueError):
            ens.f_matrix[0, 0] = 1.0

    def test_normalized_divides_by_sigma(self):
        matrix = np.array([[2.0, 8.0], [4.0, 16.0], [-2.0, -8.0]] * 10)
        ens = Ensemble(t=1.0, radii=(1.0, 8.0), f_matrix=matrix, seed=0)
        table = SigmaTable(radii=(1.0, 8.0), sigma_hat=(2.0, 8.0), replications=30)
        normed = ens.normalized(table)
        assert np.array_equal(normed[:, 0] * 2.0, matrix[:, 0])
        assert np.array_equal(normed[:, 1] * 8.0, matrix[:, 1])
        other = SigmaTable(radii=(1.0, 4.0), sigma_hat=(1.0, 1.0), replications=30)
        with pytest.raises(ValueError):
            ens.normalized(other)


class TestEstimateSigma:
    def test_matches_numpy_sample_std(self):
        ens = gaussian_ensemble([1.0, 2.0, 4.0], m=500)
        table = estimate_sigma(ens)
        for j, s in enumerate(table.sigma_hat):
            assert s == pytest.approx(np.std(ens.f_matrix[:, j], ddof=1), rel=1e-12)

    def test_order_independent(self):
        ens = gaussian_ensemble([1.0], m=200, seed=3)
        shuffled = ens.f_matrix[np.random.default_rng(9).permutation(200)]
        table_a = estimate_sigma(ens)
        table_b = estimate_sigma(
            Ensemble(t=1.0, radii=(1.0,), f_matrix=shuffled, seed=3)
        )
        assert table_a.sigma_hat == table_b.sigma_hat

    def test_sqrt_r_scaling_recovered(self):
        # F_R ~ N(0, R): sigma(4)/sigma(1) should be 2 within Monte Carlo error
        ens = gaussian_ensemble([1.0, math.sqrt(2.0), 2.0], m=4000, seed=1)
        table = estimate_sigma(ens)
        assert table.sigma_hat[2] / table.sigma_hat[0] == pytest.approx(2.0, rel=0.1)

    def test_identical_replications_rejected(self):
        matrix = np.ones((50, 2))
        ens = Ensemble(t=1.0, radii=(1.0, 2.0), f_matrix=matrix, seed=0)
        with pytest.raises(ValueError, match="degenerate"):
            estimate_sigma(ens)

    def test_too_few_replications_rejected(self):
        ens = gaussian_ensemble([1.0], m=2)
        with pytest.raises(ValueError, match="at least 30"):
            estimate_sigma(ens)


class TestFitBeta:
    def test_exact_linear_variance(self):
        sigma = tuple(math.sqrt(3.0 * r) for r in RADII)
        fit = fit_beta(SigmaTable(radii=RADII, sigma_hat=sigma, replications=100))
        assert fit.beta_hat == pytest.approx(1.0, abs=1e-12)
        assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
        assert fit.stderr == pytest.approx(0.0, abs=1e-12)

    def test_exact_power_law(self):
        sigma = tuple(r**0.75 for r in RADII)
        fit = fit_beta(SigmaTable(radii=RADII, sigma_hat=sigma, replications=100))
        assert fit.beta_hat == pytest.approx(1.5, abs=1e-12)

    def test_noisy_power_law_within_stderr(self):
        rng = np.random.default_rng(12)
        sigma = tuple(
            math.sqrt(r**1.5 * (1.0 + 0.02 * rng.standard_normal())) for r in RADII
        )
        fit = fit_beta(SigmaTable(radii=RADII, sigma_hat=sigma, replications=100))
        assert fit.stderr > 0.0
        assert abs(fit.beta_hat - 1.5) < 4.0 * fit.stderr

    def test_too_few_radii(self):
        table = SigmaTable(radii=(1.0, 16.0), sigma_hat=(1.0, 4.0), replications=100)
        with pytest.raises(ValueError, match="radii"):
            fit_beta(table)

    def test_narrow_span_rejected(self):
        table = SigmaTable(
            radii=(1.0, 2.0, 4.0), sigma_hat=(1.0, 1.4, 2.0), replications=100
        )
        with pytest.raises(ValueError, match="span"):
            fit_beta(table)

    def test_degenerate_sigma_rejected_at_table(self):
        with pytest.raises(ValueError):
            SigmaTable(radii=(1.0, 2.0), sigma_hat=(1.0, 0.0), replications=100)
        with pytest.raises(ValueError):
            SigmaTable(radii=(1.0, 2.0), sigma_hat=(1.0,), replications=100)


class TestKsToNormal:
    def test_perfect_quantiles(self):
        n = 1000
        samples = ndtri((np.arange(1, n + 1) - 0.5) / n)
        assert ks_to_standard_normal(samples) <= 0.5 / n + 1e-12

    def test_point_mass_at_median(self):
        assert ks_to_standard_normal(np.zeros(100)) == pytest.approx(0.5)

    def test_seeded_normal_sample_is_close(self):
        draws = np.random.default_rng(2024).standard_normal(10_000)
        assert ks_to_standard_normal(draws) < 0.02

    def test_shifted_sample_is_far(self):
        draws = np.random.default_rng(5).standard_normal(1000) + 2.0
        assert ks_to_standard_normal(draws) > 0.5

    def test_too_few_samples(self):
        with pytest.raises(ValueError, match="samples"):
            ks_to_standard_normal(np.zeros(99))


class TestLogAverageMeasure:
    def test_constant_path_is_point_mass(self):
        thetas = geometric_theta_grid(50.0)
        measure = log_average_measure([(t, 0.7) for t in thetas], mode="continuous")
        assert np.all(measure.locations == 0.7)
        assert measure.total_weight == pytest.approx(1.0, abs=1e-9)

    def test_discrete_three_point_weights(self):
        measure = log_average_measure(
            [(1, 5.0), (2, 6.0), (3, 7.0)], mode="discrete"
        )
        h3 = 1.0 + 0.5 + 1.0 / 3.0
        assert measure.weights == pytest.approx([1.0 / h3, 0.5 / h3, (1.0 / 3.0) / h3])

    def test_continuous_weights_follow_one_over_theta(self):
        thetas = geometric_theta_grid(math.e**2, points_per_decade=200)
        measure = log_average_measure(
            [(t, float(t)) for t in thetas], mode="continuous"
        )
        # interior weights approximate dtheta/theta, constant on a log grid
        interior = measure.weights[1:-1]
        assert np.max(interior) / np.min(interior) == pytest.approx(1.0, rel=1e-3)

    def test_refinement_stability(self):
        def path(th):
            return np.sin(3.0 * np.log(th))

        ks_vals = []
        for ppd in (512, 1024):
            thetas = geometric_theta_grid(math.e**3, points_per_decade=ppd)
            measure = log_average_measure(
                zip(thetas, path(thetas)), mode="continuous"
            )
            ks_vals.append(weighted_ks(measure))
        assert abs(ks_vals[0] - ks_vals[1]) < 1e-3

    def test_input_validation(self):
        with pytest.raises(ValueError, match="increasing"):
            log_average_measure([(1.0, 0.0), (3.0, 0.0), (2.0, 0.0)], "continuous")
        with pytest.raises(ValueError, match="start at theta = 1"):
            log_average_measure([(2.0, 0.0), (4.0, 0.0)], "continuous")
        with pytest.raises(ValueError, match="exceed e"):
            log_average_measure([(1.0, 0.0), (2.0, 0.0)], "continuous")
        with pytest.raises(ValueError, match="indices"):
            log_average_measure([(1, 0.0), (3, 0.0), (4, 0.0)], "discrete")
        with pytest.raises(ValueError, match="N >= 3"):
            log_average_measure([(1, 0.0), (2, 0.0)], "discrete")
        with pytest.raises(ValueError, match="mode"):
            log_average_measure([(1.0, 0.0), (4.0, 0.0)], "weekly")


class TestEmpiricalMeasure:
    def test_normalization_and_guards(self):
        m = EmpiricalMeasure(locations=np.array([0.0, 1.0]), weights=np.array([3.0, 1.0]))
        assert m.weights == pytest.approx([0.75, 0.25])
        with pytest.raises(ValueError):
            EmpiricalMeasure(np.array([0.0]), np.array([-1.0]))
        with pytest.raises(ValueError):
            EmpiricalMeasure(np.array([0.0]), np.array([0.0]))
        with pytest.raises(ValueError):
            EmpiricalMeasure(np.array([]), np.array([]))


class TestWeightedKs:
    def test_point_mass_at_zero(self):
        m = EmpiricalMeasure(np.array([0.0]), np.array([1.0]))
        assert weighted_ks(m) == pytest.approx(0.5)

    def test_equal_weight_quantiles(self):
        n = 1000
        locs = ndtri((np.arange(1, n + 1) - 0.5) / n)
        m = EmpiricalMeasure(locs, np.ones(n))
        assert weighted_ks(m) <= 0.5 / n + 1e-12

    def test_matches_unweighted_ks(self):
        draws = np.random.default_rng(7).standard_normal(500)
        m = EmpiricalMeasure(draws, np.ones(500))
        assert weighted_ks(m) == pytest.approx(ks_to_standard_normal(draws), abs=1e-12)

    def test_reorder_and_merge_invariance(self):
        rng = np.random.default_rng(11)
        locs = rng.standard_normal(64)
        wts = rng.uniform(0.1, 1.0, 64)
        base = weighted_ks(EmpiricalMeasure(locs, wts))
        perm = rng.permutation(64)
        assert weighted_ks(EmpiricalMeasure(locs[perm], wts[perm])) == pytest.approx(
            base, abs=1e-12
        )
        split = weighted_ks(
            EmpiricalMeasure(
                np.concatenate([locs, locs]),
                np.concatenate([0.25 * wts, 0.75 * wts]),
            )
        )
        assert split == pytest.approx(base, abs=1e-12)


class TestWassersteinNormal:
    def test_point_mass_at_zero(self):
        m = EmpiricalMeasure(np.array([0.0]), np.array([1.0]))
        assert wasserstein_1_normal(m) == pytest.approx(math.sqrt(2.0 / math.pi))

    def test_point_mass_at_one_matches_mean_deviation(self):
        # E|Z - 1| for standard normal Z
        m = EmpiricalMeasure(np.array([1.0]), np.array([1.0]))
        phi1 = math.exp(-0.5) / math.sqrt(2.0 * math.pi)
        expected = 2.0 * phi1 + (2.0 * ndtr(1.0) - 1.0)
        assert wasserstein_1_normal(m) == pytest.approx(expected, abs=1e-12)

    def test_matches_quadrature_on_small_measure(self):
        locs = np.array([-1.5, 0.2, 1.0])
        wts = np.array([0.2, 0.5, 0.3])
        m = EmpiricalMeasure(locs, wts)

        def gap(x):
            return abs(np.sum(wts[locs <= x]) - ndtr(x))

        oracle, _ = quad(gap, -9.0, 9.0, points=list(locs), limit=200)
        assert wasserstein_1_normal(m) == pytest.approx(oracle, abs=1e-7)

    def test_quantile_measure_is_close_to_normal(self):
        n = 2000
        locs = ndtri((np.arange(1, n + 1) - 0.5) / n)
        m = EmpiricalMeasure(locs, np.ones(n))
        assert wasserstein_1_normal(m) < 0.01


class TestIidOracle:
    def test_short_path_flagged(self):
        run = iid_asclt_oracle("rademacher", 10, seed=0)
        assert run.below_asymptotic
        assert [n for n, _ in run.checkpoints] == [10]

    def test_checkpoints_are_geometric(self):
        run = iid_asclt_oracle("uniform", 25_000, seed=0)
        assert not run.below_asymptotic
        assert [n for n, _ in run.checkpoints] == [1000, 10_000, 25_000]

    def test_median_ks_falls_across_checkpoints(self):
        rows = np.array([
            [ks for _, ks in iid_asclt_oracle("rademacher", 100_000, s).checkpoints]
            for s in range(20)
        ])
        assert np.all((0.0 <= rows) & (rows <= 1.0))
        medians = np.median(rows, axis=0)
        assert np.all(np.diff(medians) <= 0.0)

    def test_reproducible(self):
        a = iid_asclt_oracle("gaussian", 5000, seed=9)
        b = iid_asclt_oracle("gaussian", 5000, seed=9)
        assert a.checkpoints == b.checkpoints
        c = iid_asclt_oracle("gaussian", 5000, seed=10)
        assert a.checkpoints != c.checkpoints

    def test_unknown_law_rejected(self):
        with pytest.raises(ValueError, match="unit-variance"):
            iid_asclt_oracle("cauchy", 5000, seed=0)
        with pytest.raises(ValueError):
            iid_asclt_oracle("gaussian", 2, seed=0)

    def test_law_moments(self):
        from ham_asclt.stats import _iid_draws
        from ham_asclt.noise import stream

        for law in ("rademacher", "uniform", "gaussian"):
            draws = _iid_draws(law, 200_000, stream(1, 0, 0))
            assert abs(np.mean(draws)) < 0.01
            assert np.var(draws) == pytest.approx(1.0, rel=0.02)


class TestTestFunctions:
    def test_catalog_entries(self):
        g = lipschitz_test_function("clamped_identity")
        assert g.fn(np.array([-5.0, 0.5, 5.0])) == pytest.approx([-3.0, 0.5, 3.0])
        assert lipschitz_test_function("tanh").bound == 1.0
        assert lipschitz_test_function("cosine").lipschitz == 1.0
        with pytest.raises(ValueError, match="unknown test function"):
            lipschitz_test_function("relu")


class TestLipschitzLogAverage:
    def grid(self, horizon=math.e**2):
        return geometric_theta_grid(horizon)

    def test_centered_path_gives_zero(self):
        thetas = self.grid()
        values = np.sin(thetas)
        g = lipschitz_test_function("tanh")
        exact_centers = zip(thetas, g.fn(values))
        assert lipschitz_log_average(zip(thetas, values), "tanh", exact_centers) == 0.0

    def test_constant_offset_passes_through(self):
        thetas = self.grid()
        values = np.full(thetas.size, 0.5)
        centers = zip(thetas, values - 0.25)  # g is identity on [-3, 3]
        out = lipschitz_log_average(zip(thetas, values), "clamped_identity", centers)
        assert out == 0.25

    def test_mismatched_grids_rejected(self):
        thetas = self.grid()
        other = thetas * 1.001
        other[0] = 1.0
        with pytest.raises(ValueError, match="different theta grid"):
            lipschitz_log_average(
                zip(thetas, np.zeros(thetas.size)),
                "tanh",
                zip(other, np.zeros(thetas.size)),
            )
        with pytest.raises(ValueError):
            lipschitz_log_average(
                zip(thetas, np.zeros(thetas.size)),
                "tanh",
                zip(thetas[:-1], np.zeros(thetas.size - 1)),
            )

    def test_ou_decay_obeys_lemma_bound(self):
        # corr (theta/w)^(1/2) puts the second moment under (2C/beta)/log T
        paths = 60
        for horizon in (math.e**2, math.e**4):
            thetas = geometric_theta_grid(horizon)
            zeros = np.zeros(thetas.size)
            sq = []
            for rep in range(paths):
                h = sample_log_ou_path(thetas, 0.5, seed=77, replication=rep)
                val = lipschitz_log_average(
                    zip(thetas, h), "clamped_identity", zip(thetas, zeros)
                )
                sq.append(val * val)
            scaled = np.mean(sq) * math.log(horizon)
            assert scaled < 4.0


class TestLogOuPath:
    def test_unit_variance_and_correlation(self):
        thetas = np.geomspace(1.0, 20.0, 12)
        paths = np.array([
            sample_log_ou_path(thetas, 0.5, seed=3, replication=r) for r in range(4000)
        ])
        var = np.var(paths, axis=0)
        assert np.allclose(var, 1.0, atol=0.1)
        i, j = 2, 9
        sample_corr = np.mean(paths[:, i] * paths[:, j])
        assert sample_corr == pytest.approx((thetas[i] / thetas[j]) ** 0.5, abs=0.06)

    def test_reproducible_and_distinct(self):
        thetas = np.geomspace(1.0, 10.0, 8)
        a = sample_log_ou_path(thetas, 0.5, seed=1)
        b = sample_log_ou_path(thetas, 0.5, seed=1)
        c = sample_log_ou_path(thetas, 0.5, seed=1, replication=1)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_validation(self):
        with pytest.raises(ValueError):
            sample_log_ou_path([2.0, 1.0], 0.5, seed=0)
        with pytest.raises(ValueError):
            sample_log_ou_path([1.0, 2.0], 0.0, seed=0)


class TestThetaGrid:
    def test_endpoints_and_density(self):
        grid = geometric_theta_grid(100.0)
        assert grid[0] == 1.0
        assert grid[-1] == 100.0
        assert np.all(np.diff(grid) > 0.0)
        assert grid.size == pytest.approx(2 * 64, abs=2)
        with pytest.raises(ValueError):
            geometric_theta_grid(1.0)


class TestSyntheticPipeline:
    def test_gaussian_power_law_end_to_end(self):
        # F_R ~ N(0, R^1.4) should give beta close to 1.4 and normal columns
        beta = 1.4
        scales = [r ** (beta / 2.0) for r in RADII]
        ens = gaussian_ensemble(scales, m=3000, seed=21)
        table = estimate_sigma(ens)
        fit = fit_beta(table)
        assert fit.beta_hat == pytest.approx(beta, abs=0.1)
        normed = ens.normalized(table)
        assert ks_to_standard_normal(normed[:, -1]) < 0.03

    def test_scaling_fit_is_plain_data(self):
        fit = ScalingFit(beta_hat=1.0, intercept=0.0, stderr=0.1)
        assert fit.beta_hat == 1.0
