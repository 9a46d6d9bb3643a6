"""Arrival-time metrics, distribution distance, confidence-bound coverage,
and the per-type evaluation report.

All arrival times are zero-referenced at the flight's upward crossing of
the reference flight level (FL150 by default), so observed, predicted,
and sampled climbs share a common origin.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .atmosphere import FT
from .dynamics import ClimbTrajectory, integrate_climb
from .errors import DataError, DomainError, InfeasibleClimbError
from .generative import GenerativeClimbModel, bound_trajectories, sample_thrust
from .learning import ThrustProfile
from .performance import AircraftPerformance, min_level_thrust, nominal_thrust
from .pipeline import DatasetSplit, Trajectory, fnum

logger = logging.getLogger(__name__)

REF_FL = 150.0
REPORT_FLS = (250.0, 325.0)
EXTRAP_TOL_FT = 500.0   # how far beyond the data a boundary crossing may be extrapolated
KDE_GRID_SIZE = 1024
DENSITY_FLOOR = 1e-12
MIN_KL_SAMPLES = 20


@dataclass(frozen=True)
class ArrivalSample:
    """Zero-referenced arrival times (s) at the two report flight levels."""

    flight_id: str
    t_fl250: float
    t_fl325: float

    def __post_init__(self):
        if not self.t_fl250 < self.t_fl325:
            raise DomainError(
                f"{self.flight_id}: FL250 arrival {self.t_fl250} not before "
                f"FL325 arrival {self.t_fl325}"
            )


@dataclass(frozen=True)
class MetricsReport:
    """One evaluation row per aircraft type."""

    type_code: str
    n_f: int
    mae_fl250_model: float
    mae_fl250_nominal: float
    mae_fl325_model: float
    mae_fl325_nominal: float
    kl_fl250: float
    kl_fl325: float
    coverage_pct: float

    def __post_init__(self):
        values = (self.mae_fl250_model, self.mae_fl250_nominal,
                  self.mae_fl325_model, self.mae_fl325_nominal,
                  self.kl_fl250, self.kl_fl325)
        if any(v < 0.0 for v in values) or not 0.0 <= self.coverage_pct <= 100.0:
            raise DomainError(f"{self.type_code}: metrics out of range")


def _time_alt_arrays(traj: Trajectory | ClimbTrajectory) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(traj, ClimbTrajectory):
        return traj.t, traj.h / FT
    return traj.t_s, traj.alt_ft


def _crossing_time(t: np.ndarray, alt_ft: np.ndarray, target_ft: float) -> float | None:
    """Time of the first upward crossing of ``target_ft``.

    Falls back to a short linear extrapolation from the boundary segment
    when the data start just above / end just below the target (clipped
    trajectories); returns None when the target is out of reach.
    """
    exact = np.flatnonzero(alt_ft == target_ft)
    if exact.size:
        return float(t[exact[0]])
    below = alt_ft[:-1] <= target_ft
    above = alt_ft[1:] >= target_ft
    idx = np.flatnonzero(below & above)
    if idx.size:
        i = int(idx[0])
        frac = (target_ft - alt_ft[i]) / (alt_ft[i + 1] - alt_ft[i])
        return float(t[i] + frac * (t[i + 1] - t[i]))
    if alt_ft[0] > target_ft >= alt_ft[0] - EXTRAP_TOL_FT and alt_ft[1] > alt_ft[0]:
        slope = (t[1] - t[0]) / (alt_ft[1] - alt_ft[0])
        return float(t[0] - slope * (alt_ft[0] - target_ft))
    if alt_ft[-1] < target_ft <= alt_ft[-1] + EXTRAP_TOL_FT and alt_ft[-1] > alt_ft[-2]:
        slope = (t[-1] - t[-2]) / (alt_ft[-1] - alt_ft[-2])
        return float(t[-1] + slope * (target_ft - alt_ft[-1]))
    return None


def arrival_times(
    traj: Trajectory | ClimbTrajectory,
    fls: tuple[float, float] = REPORT_FLS,
    ref_fl: float = REF_FL,
) -> ArrivalSample | None:
    """Arrival times at the report flight levels, zero-referenced at the
    reference crossing; None when the trajectory does not span them."""
    t, alt = _time_alt_arrays(traj)
    if t.size < 2:
        return None
    t0 = _crossing_time(t, alt, ref_fl * 100.0)
    if t0 is None:
        return None
    times = []
    for fl in fls:
        tq = _crossing_time(t, alt, fl * 100.0)
        if tq is None:
            return None
        times.append(tq - t0)
    flight_id = traj.flight_id if isinstance(traj, Trajectory) else "model"
    return ArrivalSample(flight_id=flight_id, t_fl250=times[0], t_fl325=times[1])


def mae(predicted: float | np.ndarray, observed: np.ndarray) -> float:
    """Mean absolute error between predictions and observations (s)."""
    obs = np.asarray(observed, dtype=float)
    if obs.size == 0:
        raise DataError("mae: empty observation set")
    pred = np.broadcast_to(np.asarray(predicted, dtype=float), obs.shape)
    return float(np.mean(np.abs(pred - obs)))


def silverman_bandwidth(sample: np.ndarray) -> float:
    """Silverman's rule-of-thumb bandwidth for a Gaussian KDE."""
    s = np.asarray(sample, dtype=float)
    std = float(np.std(s, ddof=1))
    q75, q25 = np.percentile(s, [75.0, 25.0])
    iqr = float(q75 - q25)
    scale = min(std, iqr / 1.34) if iqr > 0.0 else std
    if scale <= 0.0:
        raise DataError("degenerate (zero-variance) sample")
    return 0.9 * scale * s.size ** (-0.2)


def kde_density(sample: np.ndarray, grid: np.ndarray, bandwidth: float) -> np.ndarray:
    """Gaussian kernel density of a sample evaluated on a grid."""
    z = (grid[:, None] - sample[None, :]) / bandwidth
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (sample.size * bandwidth * np.sqrt(2.0 * np.pi))
    return dens


def kl_divergence(sample_p: np.ndarray, sample_q: np.ndarray) -> float:
    """KL(P || Q) in nats between kernel density estimates of two samples.

    Both densities use Silverman bandwidths, share an evaluation grid
    spanning both samples plus three bandwidths, and are floored at 1e-12
    before integrating by the trapezoidal rule.
    """
    p = np.asarray(sample_p, dtype=float)
    q = np.asarray(sample_q, dtype=float)
    if p.size < MIN_KL_SAMPLES or q.size < MIN_KL_SAMPLES:
        raise DataError(f"kl_divergence: need at least {MIN_KL_SAMPLES} points per sample")
    bw_p = silverman_bandwidth(p)
    bw_q = silverman_bandwidth(q)
    pad = 3.0 * max(bw_p, bw_q)
    lo = min(p.min(), q.min()) - pad
    hi = max(p.max(), q.max()) + pad
    grid = np.linspace(lo, hi, KDE_GRID_SIZE)
    dens_p = np.maximum(kde_density(p, grid, bw_p), DENSITY_FLOOR)
    dens_q = np.maximum(kde_density(q, grid, bw_q), DENSITY_FLOOR)
    kl = float(np.trapezoid(dens_p * np.log(dens_p / dens_q), grid))
    return max(kl, 0.0)   # quadrature truncation can dip epsilon-negative


def coverage(
    test_trajectories: list[Trajectory],
    slow: ClimbTrajectory,
    fast: ClimbTrajectory,
    fl_low: float = 150.0,
    fl_high: float = 325.0,
    ref_fl: float = REF_FL,
) -> float:
    """Percentage of in-interval test blips whose zero-referenced time lies
    within [fast.t(alt), slow.t(alt)]."""
    low_ft, high_ft = fl_low * 100.0, fl_high * 100.0
    inside = 0
    total = 0
    for tr in test_trajectories:
        t0 = _crossing_time(tr.t_s, tr.alt_ft, ref_fl * 100.0)
        if t0 is None:
            logger.warning("coverage: flight %s has no FL%.0f crossing; skipped",
                           tr.flight_id, ref_fl)
            continue
        mask = (tr.alt_ft >= low_ft) & (tr.alt_ft <= high_ft)
        if not np.any(mask):
            continue
        alt_m = tr.alt_ft[mask] * FT
        tau = tr.t_s[mask] - t0
        t_fast = fast.time_at(alt_m)
        t_slow = slow.time_at(alt_m)
        eps = 1e-9
        inside += int(np.count_nonzero((tau >= t_fast - eps) & (tau <= t_slow + eps)))
        total += int(np.count_nonzero(mask))
    if total == 0:
        raise DataError("coverage: no test blips inside the interval")
    return 100.0 * inside / total


def _format_row(report: MetricsReport) -> str:
    return ",".join(
        [
            report.type_code,
            str(report.n_f),
            f"{report.mae_fl250_model:.4f}",
            f"{report.mae_fl250_nominal:.4f}",
            f"{report.mae_fl325_model:.4f}",
            f"{report.mae_fl325_nominal:.4f}",
            f"{report.kl_fl250:.6f}",
            f"{report.kl_fl325:.6f}",
            f"{report.coverage_pct:.4f}",
        ]
    )


REPORT_HEADER = (
    "type_code,n_f,mae_fl250_model_s,mae_fl250_nominal_s,"
    "mae_fl325_model_s,mae_fl325_nominal_s,kl_fl250_nats,kl_fl325_nats,coverage_pct"
)


def evaluate_type(
    model: GenerativeClimbModel,
    perf: AircraftPerformance,
    test_trajectories: list[Trajectory],
    seed: int,
    level: float = 0.95,
) -> tuple[MetricsReport, dict]:
    """Metrics for one aircraft type plus plot-ready artifacts."""
    grid = model.basis.grid
    h0, h1 = float(grid[0]), float(grid[-1])
    mass = perf.nominal_mass

    mean_traj = integrate_climb(perf, mass, model.mean_profile(), h0, h1)
    nominal_profile = ThrustProfile(grid.copy(), nominal_thrust(perf, grid))
    nominal_traj = integrate_climb(perf, mass, nominal_profile, h0, h1)
    slow, fast = bound_trajectories(model, perf, mass, h0, h1, level)

    observed = []
    for tr in test_trajectories:
        sample = arrival_times(tr)
        if sample is None:
            logger.warning("flight %s does not span the report levels; excluded", tr.flight_id)
            continue
        observed.append(sample)
    if not observed:
        raise DataError(f"{model.type_code}: no test flight spans the report levels")
    obs250 = np.array([s.t_fl250 for s in observed])
    obs325 = np.array([s.t_fl325 for s in observed])

    pred_model = arrival_times(mean_traj)
    pred_nominal = arrival_times(nominal_traj)
    if pred_model is None or pred_nominal is None:
        raise DataError(f"{model.type_code}: model trajectories do not span the report levels")

    profiles = sample_thrust(model, len(observed), seed)
    gen250, gen325 = [], []
    sampled_trajs = []
    for profile in profiles:
        traj = integrate_climb(perf, mass, profile, h0, h1)
        sampled_trajs.append(traj)
        sample = arrival_times(traj)
        if sample is not None:
            gen250.append(sample.t_fl250)
            gen325.append(sample.t_fl325)
    gen250 = np.array(gen250)
    gen325 = np.array(gen325)

    kl250 = kl_divergence(obs250, gen250)
    kl325 = kl_divergence(obs325, gen325)
    cov = coverage(test_trajectories, slow, fast,
                   fl_low=model.interval_fl[0], fl_high=model.interval_fl[1])

    report = MetricsReport(
        type_code=model.type_code,
        n_f=model.n_flights_fit,
        mae_fl250_model=mae(pred_model.t_fl250, obs250),
        mae_fl250_nominal=mae(pred_nominal.t_fl250, obs250),
        mae_fl325_model=mae(pred_model.t_fl325, obs325),
        mae_fl325_nominal=mae(pred_nominal.t_fl325, obs325),
        kl_fl250=kl250,
        kl_fl325=kl325,
        coverage_pct=cov,
    )
    artifacts = {
        "mean_traj": mean_traj,
        "nominal_traj": nominal_traj,
        "slow": slow,
        "fast": fast,
        "profiles": profiles,
        "sampled_trajs": sampled_trajs,
        "observed": observed,
        "generated": (gen250, gen325),
        "nominal_profile": nominal_profile,
    }
    return report, artifacts


def run_report(
    models: dict[str, GenerativeClimbModel],
    split_data: DatasetSplit,
    catalog: dict[str, AircraftPerformance],
    out_dir: str | Path,
    seed: int = 0,
    level: float = 0.95,
) -> list[MetricsReport]:
    """Evaluate every test-set type with a fitted model; emit the metrics
    table (CSV + JSON twin) and plot-ready CSV artifacts under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    by_type: dict[str, list[Trajectory]] = {}
    for tr in split_data.test:
        by_type.setdefault(tr.type_code, []).append(tr)

    reports = []
    for index, type_code in enumerate(sorted(by_type)):
        if type_code not in models:
            logger.warning("no fitted model for type %s; row skipped", type_code)
            continue
        if type_code not in catalog:
            logger.warning("no performance record for type %s; row skipped", type_code)
            continue
        try:
            report, artifacts = evaluate_type(
                models[type_code],
                catalog[type_code],
                by_type[type_code],
                seed=seed + index,
                level=level,
            )
        except InfeasibleClimbError as exc:
            logger.warning("type %s: bound climb unbounded (%s); row skipped",
                           type_code, exc)
            continue
        reports.append(report)
        _write_type_artifacts(out, models[type_code], catalog[type_code], artifacts)

    reports.sort(key=lambda r: (-r.n_f, r.type_code))
    lines = [REPORT_HEADER] + [_format_row(r) for r in reports]
    (out / "metrics_report.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "metrics_report.json").write_text(
        json.dumps([r.__dict__ for r in reports], sort_keys=True, indent=1) + "\n",
        encoding="utf-8",
    )
    if not reports:
        logger.warning("run_report: empty test set or no evaluable types")
    return reports


def _write_type_artifacts(
    out: Path,
    model: GenerativeClimbModel,
    perf: AircraftPerformance,
    artifacts: dict,
) -> None:
    from .generative import bound_profiles

    code = model.type_code
    grid = model.basis.grid
    mean_recon = model.mean_profile().values
    lo_profile, up_profile = bound_profiles(model)
    rows = ["h_m,mean_N,lower_N,upper_N,nominal_N,min_level_N"]
    min_level = min_level_thrust(perf, grid)
    nominal = artifacts["nominal_profile"].values
    for j in range(grid.size):
        rows.append(
            f"{fnum(grid[j])},{fnum(mean_recon[j])},{fnum(lo_profile.values[j])},"
            f"{fnum(up_profile.values[j])},{fnum(nominal[j])},{fnum(min_level[j])}"
        )
    (out / f"profiles_{code}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    rows = ["sample_id,h_m,thrust_N"]
    for s, profile in enumerate(artifacts["profiles"]):
        for j in range(grid.size):
            rows.append(f"{s},{fnum(grid[j])},{fnum(profile.values[j])}")
    (out / f"sampled_thrust_{code}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    rows = ["series,h_m,t_s"]
    for name in ("mean_traj", "nominal_traj", "slow", "fast"):
        traj = artifacts[name]
        for h, t in zip(traj.h, traj.t):
            rows.append(f"{name},{fnum(h)},{fnum(t)}")
    for s, traj in enumerate(artifacts["sampled_trajs"]):
        for h, t in zip(traj.h[::10], traj.t[::10]):
            rows.append(f"sample_{s},{fnum(h)},{fnum(t)}")
    (out / f"trajectories_model_{code}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    rows = ["flight_id,t_s,alt_ft"]
    for sample in artifacts["observed"]:
        rows.append(f"{sample.flight_id},{fnum(sample.t_fl250)},25000.0")
        rows.append(f"{sample.flight_id},{fnum(sample.t_fl325)},32500.0")
    (out / f"arrivals_test_{code}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    gen250, gen325 = artifacts["generated"]
    obs250 = np.array([s.t_fl250 for s in artifacts["observed"]])
    obs325 = np.array([s.t_fl325 for s in artifacts["observed"]])
    rows = ["fl,t_s,density_test,density_generated"]
    for fl, obs, gen in ((250, obs250, gen250), (325, obs325, gen325)):
        bw_p = silverman_bandwidth(obs)
        bw_q = silverman_bandwidth(gen)
        pad = 3.0 * max(bw_p, bw_q)
        xs = np.linspace(min(obs.min(), gen.min()) - pad, max(obs.max(), gen.max()) + pad, 256)
        dp = kde_density(obs, xs, bw_p)
        dq = kde_density(gen, xs, bw_q)
        for x, a, b in zip(xs, dp, dq):
            rows.append(f"{fl},{fnum(x)},{fnum(a)},{fnum(b)}")
    (out / f"kde_{code}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
