"""Arrival-time metrics, KL divergence, coverage, and report tests."""

import hashlib
import json

import numpy as np
import pytest

from climbgen import generative, pipeline
from climbgen.dynamics import ClimbTrajectory
from climbgen.errors import DataError
from climbgen.evaluation import (
    ArrivalSample,
    arrival_times,
    coverage,
    kde_density,
    kl_divergence,
    mae,
    run_report,
    silverman_bandwidth,
)
from climbgen.pipeline import Trajectory


def make_traj(flight_id, t, alt_ft):
    t = np.asarray(t, float)
    alt_ft = np.asarray(alt_ft, float)
    return Trajectory(flight_id=flight_id, type_code="NBJT", t_s=t, alt_ft=alt_ft,
                      rocd_fpm=pipeline.derive_rocd(t, alt_ft))


def constant_rate_traj(flight_id, alt0, alt1, rate_fpm, dt=5.0):
    rate_fps = rate_fpm / 60.0
    n = int((alt1 - alt0) / (rate_fps * dt)) + 1
    t = np.arange(n) * dt
    return make_traj(flight_id, t, alt0 + t * rate_fps)


class TestArrivalTimes:
    def test_constant_climb_hand_value(self):
        traj = constant_rate_traj("A", 14000.0, 33500.0, 2540.0)
        sample = arrival_times(traj)
        assert sample is not None
        # 10000 ft above the FL150 reference at 2540 ft/min
        assert sample.t_fl250 == pytest.approx(10000.0 / 2540.0 * 60.0, abs=1e-6)
        assert sample.t_fl325 == pytest.approx(17500.0 / 2540.0 * 60.0, abs=1e-6)

    def test_blip_exactly_at_level_uses_own_timestamp(self):
        traj = make_traj("B", [0.0, 100.0, 200.0, 300.0],
                         [15000.0, 20000.0, 25000.0, 33000.0])
        sample = arrival_times(traj)
        assert sample.t_fl250 == pytest.approx(200.0)

    def test_non_spanning_trajectory_excluded(self):
        traj = make_traj("C", [0.0, 100.0, 200.0], [16000.0, 20000.0, 24000.0])
        assert arrival_times(traj) is None

    def test_clipped_start_extrapolates_reference(self):
        # filtered trajectories start just above FL150; the reference
        # crossing is extrapolated from the first segment
        traj = constant_rate_traj("D", 15100.0, 33000.0, 2000.0)
        sample = arrival_times(traj)
        assert sample is not None
        assert sample.t_fl250 == pytest.approx((25000.0 - 15000.0) / 2000.0 * 60.0, abs=1e-6)

    def test_model_trajectory_accepted(self, small_world, catalog, nbjt):
        model, _, _, _ = small_world
        from climbgen.dynamics import integrate_climb

        grid = model.basis.grid
        traj = integrate_climb(nbjt, nbjt.nominal_mass, model.mean_profile(),
                               float(grid[0]), float(grid[-1]))
        sample = arrival_times(traj)
        assert sample is not None
        assert 0.0 < sample.t_fl250 < sample.t_fl325

    def test_ordering_enforced(self):
        with pytest.raises(Exception):
            ArrivalSample(flight_id="X", t_fl250=100.0, t_fl325=50.0)


class TestMae:
    def test_zero_when_equal(self):
        assert mae(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0

    def test_hand_value(self):
        assert mae(140.0, np.array([100.0, 200.0])) == pytest.approx(50.0)

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            mae(1.0, np.array([]))


class TestKlDivergence:
    def test_identical_samples_zero(self):
        rng = np.random.default_rng(0)
        s = rng.normal(0.0, 1.0, 500)
        assert kl_divergence(s, s.copy()) == pytest.approx(0.0, abs=1e-9)

    def test_unit_shift_gaussians_near_half(self):
        rng = np.random.default_rng(1)
        p = rng.normal(0.0, 1.0, 10_000)
        q = rng.normal(1.0, 1.0, 10_000)
        assert kl_divergence(p, q) == pytest.approx(0.5, rel=0.10)

    def test_asymmetry(self):
        rng = np.random.default_rng(2)
        p = rng.exponential(1.0, 5_000)
        q = rng.normal(1.0, 1.0, 5_000)
        assert kl_divergence(p, q) != pytest.approx(kl_divergence(q, p), rel=0.01)

    def test_too_few_points(self):
        with pytest.raises(DataError):
            kl_divergence(np.arange(10.0), np.arange(30.0))

    def test_degenerate_sample(self):
        with pytest.raises(DataError):
            kl_divergence(np.full(30, 5.0), np.arange(30.0))

    def test_kde_integrates_to_one(self):
        rng = np.random.default_rng(3)
        s = rng.normal(10.0, 3.0, 400)
        bw = silverman_bandwidth(s)
        grid = np.linspace(s.min() - 5 * bw, s.max() + 5 * bw, 2048)
        density = kde_density(s, grid, bw)
        assert np.trapezoid(density, grid) == pytest.approx(1.0, abs=1e-3)


class TestCoverage:
    @pytest.fixture()
    def bands(self):
        h = np.linspace(4572.0, 9906.0, 200)
        fast = ClimbTrajectory(t=(h - h[0]) / 12.0, h=h, rocd=np.full(h.size, 12.0))
        slow = ClimbTrajectory(t=(h - h[0]) / 6.0, h=h, rocd=np.full(h.size, 6.0))
        return slow, fast

    def test_trajectory_inside_counts_fully(self, bands):
        slow, fast = bands
        # 8 m/s constant climb sits between the 6 and 12 m/s envelopes
        traj = constant_rate_traj("A", 14500.0, 33500.0, 8.0 / 0.3048 * 60.0)
        assert coverage([traj], slow, fast) == pytest.approx(100.0)

    def test_trajectory_outside_counts_zero(self, bands):
        slow, fast = bands
        traj = constant_rate_traj("B", 14500.0, 33500.0, 3.0 / 0.3048 * 60.0)
        assert coverage([traj], slow, fast) == pytest.approx(0.0, abs=10.0)

    def test_huge_bands_give_full_coverage(self, small_world):
        # the limiting case of level -> 1: bands far wider than any flight
        _, split_data, _, _ = small_world
        h = np.linspace(4572.0, 9906.0, 200)
        fast = ClimbTrajectory(t=(h - h[0]) / 100.0, h=h, rocd=np.full(h.size, 100.0))
        slow = ClimbTrajectory(t=(h - h[0]) / 0.01, h=h, rocd=np.full(h.size, 0.01))
        assert coverage(split_data.test, slow, fast) == pytest.approx(100.0)

    def test_tiny_level_far_below_nominal(self, small_world, nbjt):
        model, split_data, _, _ = small_world
        grid = model.basis.grid
        slow, fast = generative.bound_trajectories(
            model, nbjt, nbjt.nominal_mass, float(grid[0]), float(grid[-1]),
            level=0.05,
        )
        assert coverage(split_data.test, slow, fast) < 90.0

    def test_monotone_in_level(self, small_world, nbjt):
        model, split_data, _, _ = small_world
        grid = model.basis.grid
        values = []
        for level in (0.2, 0.5, 0.8, 0.95):
            slow, fast = generative.bound_trajectories(
                model, nbjt, nbjt.nominal_mass, float(grid[0]), float(grid[-1]), level,
            )
            values.append(coverage(split_data.test, slow, fast))
        assert values == sorted(values)

    def test_no_blips_rejected(self, bands):
        slow, fast = bands
        with pytest.raises(DataError):
            coverage([], slow, fast)


class TestRunReport:
    def test_report_and_determinism(self, small_world, catalog, tmp_path):
        model, split_data, _, _ = small_world
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        reports_a = run_report({"NBJT": model}, split_data, catalog, out_a, seed=6)
        reports_b = run_report({"NBJT": model}, split_data, catalog, out_b, seed=6)
        assert len(reports_a) == 1
        assert (out_a / "metrics_report.csv").read_bytes() == (out_b / "metrics_report.csv").read_bytes()
        assert (out_a / "metrics_report.json").read_bytes() == (out_b / "metrics_report.json").read_bytes()
        assert (out_a / "profiles_NBJT.csv").read_bytes() == (out_b / "profiles_NBJT.csv").read_bytes()
        assert (out_a / "kde_NBJT.csv").read_bytes() == (out_b / "kde_NBJT.csv").read_bytes()
        row = reports_a[0]
        assert row.type_code == "NBJT"
        assert row.n_f == model.n_flights_fit
        assert 0.0 <= row.coverage_pct <= 100.0
        doc = json.loads((out_a / "metrics_report.json").read_text())
        assert doc[0]["type_code"] == "NBJT"

    def test_missing_model_skipped_with_warning(self, small_world, catalog, tmp_path, caplog):
        _, split_data, _, _ = small_world
        import logging

        with caplog.at_level(logging.WARNING, logger="climbgen.evaluation"):
            reports = run_report({}, split_data, catalog, tmp_path / "out", seed=0)
        assert reports == []
        assert "no fitted model" in " ".join(r.message for r in caplog.records)
        assert (tmp_path / "out" / "metrics_report.csv").exists()

    def test_empty_test_set_succeeds_with_empty_table(self, small_world, catalog, tmp_path):
        model, _, _, _ = small_world
        empty = pipeline.DatasetSplit(train=[], test=[], seed=0)
        reports = run_report({"NBJT": model}, empty, catalog, tmp_path / "out", seed=0)
        assert reports == []
        text = (tmp_path / "out" / "metrics_report.csv").read_text()
        assert text.splitlines()[0].startswith("type_code")
        assert len(text.splitlines()) == 1

    def test_models_read_only(self, small_world, catalog, tmp_path):
        model, split_data, _, _ = small_world
        model_path = tmp_path / "model.json"
        generative.save_model(model, model_path)
        digest_before = hashlib.sha256(model_path.read_bytes()).hexdigest()
        run_report({"NBJT": generative.load_model(model_path)}, split_data, catalog,
                   tmp_path / "out", seed=1)
        assert hashlib.sha256(model_path.read_bytes()).hexdigest() == digest_before
