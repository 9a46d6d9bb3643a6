"""Generative weight model tests: fitting, sampling, chi-square radius,
ellipsoid tangency bounds, and persistence."""

import json

import numpy as np
import pytest
import scipy.optimize
import scipy.stats

from climbgen.dynamics import integration_call_count
from climbgen.errors import (
    DegenerateModelError,
    DegenerateNodeError,
    DomainError,
    ModelFileError,
)
from climbgen.generative import (
    GenerativeClimbModel,
    WeightDistribution,
    bound_profiles,
    bound_trajectories,
    bound_weights,
    confidence_radius,
    fit_weight_distribution,
    load_model,
    sample_thrust,
    sample_weights,
    save_model,
)
from climbgen.learning import FpcaBasis, default_grid, trapezoid_weights


def make_model(grid=None, mean_level=85000.0, variances=(9e6, 4e6, 1e6),
               mu=(0.0, 0.0, 0.0), type_code="NBJT"):
    grid = default_grid() if grid is None else grid
    length = grid[-1] - grid[0]
    u = (grid - grid[0]) / length
    modes = np.stack([
        np.sqrt(2.0 / length) * np.cos((i + 1) * np.pi * u) for i in range(len(variances))
    ])
    basis = FpcaBasis(
        grid=grid,
        mean=mean_level - 1.5 * (grid - grid[0]),
        modes=modes,
        explained_variance=np.array([0.6, 0.3, 0.1])[: len(variances)],
    )
    weights = WeightDistribution(mu=np.array(mu, float), var=np.array(variances, float))
    return GenerativeClimbModel(type_code=type_code, basis=basis, weights=weights,
                                interval_fl=(150.0, 325.0), n_flights_fit=100)


class TestFitWeightDistribution:
    def test_all_equal_weights_degenerate(self):
        with pytest.raises(DegenerateModelError):
            fit_weight_distribution([np.array([1.0, 2.0])] * 12)

    def test_sampling_recovery_within_five_percent(self):
        rng = np.random.default_rng(0)
        draws = rng.standard_normal((100_000, 2)) * np.sqrt([4.0, 1.0])
        dist = fit_weight_distribution(list(draws))
        assert dist.var == pytest.approx([4.0, 1.0], rel=0.05)
        assert dist.mu == pytest.approx([0.0, 0.0], abs=0.05)

    def test_too_few_vectors(self):
        with pytest.raises(DomainError):
            fit_weight_distribution([np.zeros(2)] * 9)

    def test_unbiased_variance(self):
        vectors = [np.array([v]) for v in (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)]
        dist = fit_weight_distribution(vectors)
        assert dist.var[0] == pytest.approx(np.var(np.arange(1.0, 11.0), ddof=1))

    def test_projected_training_weights_centered(self):
        # projections of the training set onto its own basis average to zero
        # (the mean function is already subtracted)
        from climbgen.learning import ThrustProfile, fit_fpca, project_weights

        grid = default_grid()
        rng = np.random.default_rng(31)
        profiles = [
            ThrustProfile(grid, 88000.0 + 3000.0 * rng.standard_normal(grid.size))
            for _ in range(24)
        ]
        basis = fit_fpca(profiles, n_max=4)
        dist = fit_weight_distribution([project_weights(basis, p) for p in profiles])
        assert np.all(np.abs(dist.mu) < 1e-9 * np.sqrt(dist.var))


class TestSampleThrust:
    def test_fixed_seed_is_deterministic(self):
        model = make_model()
        a = sample_thrust(model, 10, seed=123)
        b = sample_thrust(model, 10, seed=123)
        for pa, pb in zip(a, b):
            assert np.array_equal(pa.values, pb.values)

    def test_vanishing_variance_collapses_to_mean(self):
        model = make_model(variances=(1e-20, 1e-20, 1e-20))
        recon = model.mean_profile().values
        for profile in sample_thrust(model, 5, seed=7):
            assert profile.values == pytest.approx(recon, abs=1e-3)

    def test_monte_carlo_mean_converges(self):
        model = make_model(mu=(500.0, -200.0, 100.0))
        n = 100_000
        values = np.stack([p.values for p in sample_thrust(model, n, seed=42)])
        recon = model.basis.reconstruct(model.weights.mu)
        pointwise_sd = np.sqrt(
            np.sum(model.weights.var[:, None] * model.basis.modes**2, axis=0)
        )
        se = pointwise_sd / np.sqrt(n)
        assert np.all(np.abs(values.mean(axis=0) - recon) < 3.0 * se + 1e-9)

    def test_empirical_covariance_nearly_diagonal(self):
        model = make_model()
        w = sample_weights(model, 100_000, seed=3)
        corr = np.corrcoef(w.T)
        off = corr - np.diag(np.diag(corr))
        assert np.max(np.abs(off)) < 0.02


class TestConfidenceRadius:
    def test_one_dof_is_squared_normal_quantile(self):
        assert confidence_radius(1, 0.95) == pytest.approx(3.8415, abs=1e-4)
        assert confidence_radius(1, 0.95) == pytest.approx(1.959963984540054**2, rel=1e-10)

    def test_two_dof_closed_form(self):
        assert confidence_radius(2, 0.95) == pytest.approx(5.9915, abs=1e-4)
        assert confidence_radius(2, 0.95) == pytest.approx(-2.0 * np.log(0.05), rel=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 10, 30])
    @pytest.mark.parametrize("level", [0.5, 0.9, 0.95, 0.99])
    def test_matches_scipy(self, n, level):
        assert confidence_radius(n, level) == pytest.approx(
            scipy.stats.chi2.ppf(level, n), rel=1e-9
        )

    def test_tiny_level_gives_tiny_radius(self):
        assert confidence_radius(2, 1e-10) < 1e-8

    def test_rejects_bad_inputs(self):
        with pytest.raises(DomainError):
            confidence_radius(0, 0.95)
        with pytest.raises(DomainError):
            confidence_radius(2, 1.0)


class TestBoundWeights:
    def test_univariate_reduction(self):
        grid = default_grid()
        length = grid[-1] - grid[0]
        mode = np.full(grid.size, 1.0 / np.sqrt(length))
        basis = FpcaBasis(grid=grid, mean=np.full(grid.size, 8e4), modes=mode[None, :],
                          explained_variance=np.array([1.0]))
        model = GenerativeClimbModel("X", basis, WeightDistribution(np.array([5.0]), np.array([4.0])),
                                     (150.0, 325.0), 50)
        lo, up = bound_weights(model, 10, level=0.95)
        sigma = 2.0
        z = np.sqrt(confidence_radius(1, 0.95))
        assert up[0] == pytest.approx(5.0 + z * sigma, rel=1e-9)
        assert lo[0] == pytest.approx(5.0 - z * sigma, rel=1e-9)
        assert z == pytest.approx(1.959963984540054, rel=1e-9)

    def test_points_on_ellipsoid_surface(self):
        model = make_model(mu=(100.0, -50.0, 20.0))
        radius = confidence_radius(3, 0.95)
        for k in (0, 17, 50, 99):
            for w in bound_weights(model, k, 0.95):
                q = np.sum((w - model.weights.mu) ** 2 / model.weights.var)
                assert q == pytest.approx(radius, rel=1e-9)

    def test_matches_constrained_optimization(self):
        # independent numerical oracle: maximize a.w over the ellipsoid with
        # SLSQP from a perturbed interior start
        rng = np.random.default_rng(17)
        for trial in range(10):
            n = int(rng.integers(1, 6))
            var = rng.uniform(0.5, 50.0, n)
            mu = rng.normal(0.0, 10.0, n)
            grid = default_grid()
            length = grid[-1] - grid[0]
            u = (grid - grid[0]) / length
            modes = np.stack([np.sqrt(2.0 / length) * np.cos((i + 1) * np.pi * u)
                              for i in range(n)])
            basis = FpcaBasis(grid=grid, mean=np.zeros(grid.size), modes=modes,
                              explained_variance=np.linspace(0.5, 0.1, n) / np.sum(np.linspace(0.5, 0.1, n)))
            model = GenerativeClimbModel("X", basis, WeightDistribution(mu, var),
                                         (150.0, 325.0), 50)
            k = int(rng.integers(0, grid.size))
            a = modes[:, k]
            radius = confidence_radius(n, 0.95)

            # well-conditioned parametrization: w = mu + sqrt(radius var) u,
            # maximize over the unit ball ||u|| <= 1, multi-start
            coeff = a * np.sqrt(radius * var)

            def neg_obj(u):
                return -float(coeff @ u)

            def constraint(u):
                return 1.0 - float(u @ u)

            best = -np.inf
            for _ in range(5):
                x0 = rng.normal(0.0, 0.3, n)
                x0 /= max(1.0, 2.0 * np.linalg.norm(x0))
                res = scipy.optimize.minimize(
                    neg_obj, x0, method="SLSQP",
                    constraints=[{"type": "ineq", "fun": constraint}],
                    options={"maxiter": 500, "ftol": 1e-14},
                )
                if res.success:
                    best = max(best, -res.fun)
            assert np.isfinite(best)
            numeric_max = float(a @ mu) + best
            _, w_up = bound_weights(model, k, 0.95)
            assert float(a @ w_up) == pytest.approx(numeric_max, rel=1e-6)

    def test_degenerate_node(self):
        grid = default_grid()
        length = grid[-1] - grid[0]
        u = (grid - grid[0]) / length
        mode = np.sqrt(2.0 / length) * np.sin(np.pi * u)   # vanishes at both ends
        norm = np.sqrt(np.sum(trapezoid_weights(grid) * mode**2))
        basis = FpcaBasis(grid=grid, mean=np.zeros(grid.size), modes=(mode / norm)[None, :],
                          explained_variance=np.array([1.0]))
        model = GenerativeClimbModel("X", basis, WeightDistribution(np.zeros(1), np.ones(1)),
                                     (150.0, 325.0), 50)
        with pytest.raises(DegenerateNodeError):
            bound_weights(model, 0, 0.95)

    def test_bad_node_index(self):
        model = make_model()
        with pytest.raises(DomainError):
            bound_weights(model, 100, 0.95)


class TestBoundProfiles:
    def test_collapse_at_tiny_level(self):
        model = make_model(mu=(300.0, 100.0, -50.0))
        lower, upper = bound_profiles(model, level=1e-12)
        recon = model.mean_profile().values
        assert lower.values == pytest.approx(recon, abs=0.05)
        assert upper.values == pytest.approx(recon, abs=0.05)

    def test_pointwise_ordering(self):
        model = make_model(mu=(300.0, 100.0, -50.0))
        lower, upper = bound_profiles(model, level=0.95)
        recon = model.mean_profile().values
        assert np.all(lower.values <= recon + 1e-9)
        assert np.all(upper.values >= recon - 1e-9)

    def test_dominates_sampled_percentiles(self):
        model = make_model()
        lower, upper = bound_profiles(model, level=0.95)
        values = np.stack([p.values for p in sample_thrust(model, 100_000, seed=11)])
        hi = np.percentile(values, 97.5, axis=0)
        lo = np.percentile(values, 2.5, axis=0)
        assert np.all(upper.values >= hi - 1e-6)
        assert np.all(lower.values <= lo + 1e-6)

    def test_matches_rejection_sampled_surface_extremes(self):
        # max of the node value over a dense sample of ellipsoid-surface points
        model = make_model(mu=(500.0, -100.0, 50.0))
        _, upper = bound_profiles(model, level=0.95)
        rng = np.random.default_rng(23)
        direction = rng.standard_normal((1_000_000, 3))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = np.sqrt(confidence_radius(3, 0.95))
        w_surface = model.weights.mu + radius * direction * np.sqrt(model.weights.var)
        for k in (0, 33, 99):
            node_values = model.basis.mean[k] + w_surface @ model.basis.modes[:, k]
            assert upper.values[k] >= node_values.max()
            assert upper.values[k] == pytest.approx(node_values.max(), rel=1e-3)


class TestBoundTrajectories:
    def test_ordering_and_cost(self, nbjt):
        model = make_model(mean_level=100000.0, variances=(4e6, 2e6, 1e6))
        grid = model.basis.grid
        before = integration_call_count()
        slow, fast = bound_trajectories(model, nbjt, nbjt.nominal_mass,
                                        float(grid[0]), float(grid[-1]), 0.95)
        assert integration_call_count() == before + 2
        assert np.all(fast.t <= slow.t + 1e-9)
        from climbgen.dynamics import integrate_climb
        mean_traj = integrate_climb(nbjt, nbjt.nominal_mass, model.mean_profile(),
                                    float(grid[0]), float(grid[-1]))
        assert fast.t[-1] <= mean_traj.t[-1] <= slow.t[-1]

    def test_nesting_in_level(self, nbjt):
        model = make_model(mean_level=100000.0, variances=(4e6, 2e6, 1e6))
        grid = model.basis.grid
        slow95, fast95 = bound_trajectories(model, nbjt, nbjt.nominal_mass,
                                            float(grid[0]), float(grid[-1]), 0.95)
        slow50, fast50 = bound_trajectories(model, nbjt, nbjt.nominal_mass,
                                            float(grid[0]), float(grid[-1]), 0.50)
        assert fast95.t[-1] <= fast50.t[-1]
        assert slow50.t[-1] <= slow95.t[-1]


class TestPersistence:
    def test_round_trip_preserves_bounds(self, tmp_path):
        model = make_model(mu=(120.0, -40.0, 10.0))
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        lo_a, up_a = bound_profiles(model)
        lo_b, up_b = bound_profiles(loaded)
        assert np.array_equal(lo_a.values, lo_b.values)
        assert np.array_equal(up_a.values, up_b.values)
        assert loaded.n_flights_fit == model.n_flights_fit
        assert loaded.interval_fl == model.interval_fl

    def test_save_load_save_byte_identical(self, tmp_path):
        model = make_model()
        first = tmp_path / "a.json"
        second = tmp_path / "b.json"
        save_model(model, first)
        save_model(load_model(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_truncated_file_is_corruption(self, tmp_path):
        model = make_model()
        path = tmp_path / "model.json"
        save_model(model, path)
        path.write_text(path.read_text()[: 200])
        with pytest.raises(ModelFileError):
            load_model(path)

    def test_unknown_schema_version_refused(self, tmp_path):
        model = make_model()
        path = tmp_path / "model.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        doc["schema_version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelFileError, match="version"):
            load_model(path)

    def test_unknown_keys_refused(self, tmp_path):
        model = make_model()
        path = tmp_path / "model.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        doc["extra"] = 1
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelFileError):
            load_model(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelFileError):
            load_model(tmp_path / "nope.json")
