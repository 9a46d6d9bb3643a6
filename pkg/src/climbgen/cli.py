"""Command-line pipeline: simulate, prepare, fit, sample, bounds, predict,
evaluate.

All outputs land under the directory given by --out.  Exit codes: 0 on
success, 2 on validation errors (bad arguments, files, or schemas), 3 on
data errors (well-formed inputs that cannot support the operation).  Set
``CLIMBGEN_LOG`` to a level name (DEBUG, INFO, ...) to control logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluation, generative, learning, performance, pipeline
from .pipeline import fnum
from .errors import ClimbgenError, DataError, ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DATA = 3


def _parse_interval(text: str) -> tuple[float, float]:
    try:
        low, high = text.upper().split(":")
        fl_low = float(low.removeprefix("FL"))
        fl_high = float(high.removeprefix("FL"))
    except (ValueError, AttributeError):
        raise ValidationError(f"interval must look like FL150:FL325, got {text!r}") from None
    if not fl_low < fl_high:
        raise ValidationError(f"interval must be increasing, got {text!r}")
    return fl_low, fl_high


def _add_common(parser: argparse.ArgumentParser, *, perf: bool = False,
                interval: bool = False, seed: bool = False, level: bool = False) -> None:
    parser.add_argument("--out", required=True, help="output directory")
    if perf:
        parser.add_argument("--perf-file", default=None,
                            help="aircraft performance JSON (default: shipped catalog)")
    if interval:
        parser.add_argument("--interval", default="FL150:FL325",
                            help="modeled flight-level interval, e.g. FL150:FL325")
    if seed:
        parser.add_argument("--seed", type=int, default=0, help="random seed")
    if level:
        parser.add_argument("--level", type=float, default=0.95, help="confidence level")


def _load_catalog(args) -> dict[str, performance.AircraftPerformance]:
    path = args.perf_file or performance.default_catalog_path()
    return performance.load_performance(path)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate(args) -> int:
    out = _out_dir(args)
    catalog = _load_catalog(args)
    scenario = pipeline.load_scenario(args.scenario)
    counts = pipeline.simulate_fleet(
        catalog, scenario, args.seed, out / "blips.csv", out / "truth.json"
    )
    total = sum(counts.values())
    print(f"simulated {total} flights ({', '.join(f'{k}: {v}' for k, v in sorted(counts.items()))})")
    print(f"wrote {out / 'blips.csv'} and {out / 'truth.json'}")
    return EXIT_OK


def _cmd_prepare(args) -> int:
    out = _out_dir(args)
    fl_low, fl_high = _parse_interval(args.interval)
    trajectories = pipeline.ingest(args.csv)
    filtered = pipeline.filter_climbs(trajectories, fl_low, fl_high, args.rocd_min)
    if not filtered:
        raise DataError("no flights survive the climb filter")
    split_data = pipeline.split(filtered, seed=args.seed)
    pipeline.write_trajectories_csv(split_data.train, out / "train.csv")
    pipeline.write_trajectories_csv(split_data.test, out / "test.csv")
    summary = {
        "ingested": len(trajectories),
        "filtered": len(filtered),
        "train": len(split_data.train),
        "test": len(split_data.test),
        "seed": args.seed,
        "interval_fl": [fl_low, fl_high],
        "rocd_min_fpm": args.rocd_min,
    }
    (out / "prepare_summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    print(f"kept {len(filtered)}/{len(trajectories)} flights -> "
          f"{len(split_data.train)} train / {len(split_data.test)} test")
    return EXIT_OK


def _cmd_fit(args) -> int:
    out = _out_dir(args)
    catalog = _load_catalog(args)
    fl_low, fl_high = _parse_interval(args.interval)
    grid = learning.default_grid(fl_low, fl_high)
    trajectories = pipeline.ingest(args.train)

    by_type: dict[str, list[pipeline.Trajectory]] = {}
    for tr in trajectories:
        by_type.setdefault(tr.type_code, []).append(tr)

    fitted = 0
    for type_code in sorted(by_type):
        if type_code not in catalog:
            logger.warning("type %s missing from the performance catalog; skipped", type_code)
            continue
        perf = catalog[type_code]
        profiles = []
        for tr in by_type[type_code]:
            try:
                profiles.append(learning.profile_from_flight(perf, tr, grid))
            except ClimbgenError as exc:
                logger.warning("%s", exc)
        if len(profiles) < learning.MIN_FIT_PROFILES:
            logger.warning("type %s: only %d usable flights; skipped", type_code, len(profiles))
            continue
        basis = learning.fit_fpca(profiles, n_max=args.max_modes)
        weights = [learning.project_weights(basis, p) for p in profiles]
        model = generative.GenerativeClimbModel(
            type_code=type_code,
            basis=basis,
            weights=generative.fit_weight_distribution(weights),
            interval_fl=(fl_low, fl_high),
            n_flights_fit=len(profiles),
        )
        generative.save_model(model, out / f"model_{type_code}.json")
        fitted += 1
        print(f"fitted {type_code}: {len(profiles)} flights, "
              f"{basis.n_modes} modes, ev={np.round(basis.explained_variance, 4).tolist()}")
    if fitted == 0:
        raise DataError("no type had enough usable flights to fit")
    return EXIT_OK


def _cmd_sample(args) -> int:
    out = _out_dir(args)
    model = generative.load_model(args.model)
    profiles = generative.sample_thrust(model, args.count, args.seed)
    rows = ["sample_id,h_m,thrust_N"]
    for s, profile in enumerate(profiles):
        for h, v in zip(profile.grid, profile.values):
            rows.append(f"{s},{fnum(h)},{fnum(v)}")
    path = out / f"samples_{model.type_code}.csv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"wrote {args.count} sampled profiles to {path}")
    return EXIT_OK


def _cmd_bounds(args) -> int:
    out = _out_dir(args)
    catalog = _load_catalog(args)
    model = generative.load_model(args.model)
    if model.type_code not in catalog:
        raise ValidationError(f"type {model.type_code} missing from the performance catalog")
    perf = catalog[model.type_code]
    lower, upper = generative.bound_profiles(model, args.level)
    mean_profile = model.mean_profile()
    rows = ["h_m,lower_N,mean_N,upper_N"]
    for j in range(model.basis.grid.size):
        rows.append(f"{fnum(model.basis.grid[j])},{fnum(lower.values[j])},"
                    f"{fnum(mean_profile.values[j])},{fnum(upper.values[j])}")
    (out / f"bounds_thrust_{model.type_code}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    h0, h1 = float(model.basis.grid[0]), float(model.basis.grid[-1])
    slow, fast = generative.bound_trajectories(model, perf, perf.nominal_mass, h0, h1, args.level)
    rows = ["h_m,t_fast_s,t_slow_s"]
    for j in range(slow.h.size):
        rows.append(f"{fnum(slow.h[j])},{fnum(fast.t[j])},{fnum(slow.t[j])}")
    (out / f"bounds_time_{model.type_code}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"wrote thrust and time bounds for {model.type_code} at level {args.level}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    out = _out_dir(args)
    catalog = _load_catalog(args)
    model = generative.load_model(args.model)
    if model.type_code not in catalog:
        raise ValidationError(f"type {model.type_code} missing from the performance catalog")
    perf = catalog[model.type_code]
    from .dynamics import integrate_climb
    from .performance import nominal_thrust

    grid = model.basis.grid
    h0, h1 = float(grid[0]), float(grid[-1])
    mean_traj = integrate_climb(perf, perf.nominal_mass, model.mean_profile(), h0, h1)
    nominal_traj = integrate_climb(
        perf, perf.nominal_mass,
        learning.ThrustProfile(grid.copy(), nominal_thrust(perf, grid)), h0, h1,
    )
    rows = ["h_m,t_model_s,t_nominal_s"]
    for j in range(mean_traj.h.size):
        rows.append(f"{fnum(mean_traj.h[j])},{fnum(mean_traj.t[j])},{fnum(nominal_traj.t[j])}")
    path = out / f"predict_{model.type_code}.csv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    model_sample = evaluation.arrival_times(mean_traj)
    nominal_sample = evaluation.arrival_times(nominal_traj)
    summary = {
        "type_code": model.type_code,
        "model_t_fl250_s": model_sample.t_fl250 if model_sample else None,
        "model_t_fl325_s": model_sample.t_fl325 if model_sample else None,
        "nominal_t_fl250_s": nominal_sample.t_fl250 if nominal_sample else None,
        "nominal_t_fl325_s": nominal_sample.t_fl325 if nominal_sample else None,
    }
    (out / f"predict_{model.type_code}.json").write_text(
        json.dumps(summary, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    print(f"wrote mean and nominal climb predictions to {path}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    out = _out_dir(args)
    catalog = _load_catalog(args)
    model_dir = Path(args.model_dir)
    models = {}
    for path in sorted(model_dir.glob("model_*.json")):
        model = generative.load_model(path)
        models[model.type_code] = model
    if not models:
        raise ValidationError(f"no model_*.json files under {model_dir}")
    test_trajectories = pipeline.ingest(args.test)
    split_data = pipeline.DatasetSplit(train=[], test=test_trajectories, seed=args.seed)
    reports = evaluation.run_report(models, split_data, catalog, out,
                                    seed=args.seed, level=args.level)
    for report in reports:
        print(f"{report.type_code}: n_f={report.n_f} "
              f"mae325 model/nominal = {report.mae_fl325_model:.1f}/{report.mae_fl325_nominal:.1f} s, "
              f"kl = {report.kl_fl250:.3f}/{report.kl_fl325:.3f} nats, "
              f"coverage = {report.coverage_pct:.1f}%")
    if not reports:
        print("warning: nothing to evaluate (empty test set or missing models)")
    print(f"wrote {out / 'metrics_report.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="climbgen",
        description="Learn and evaluate generative thrust corrections for climbing aircraft.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic radar dataset")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    _add_common(p, perf=True, seed=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("prepare", help="ingest, filter climbs, and split train/test")
    p.add_argument("--csv", required=True, help="blip CSV file")
    p.add_argument("--rocd-min", type=float, default=500.0, help="blip climb-rate floor, ft/min")
    _add_common(p, interval=True, seed=True)
    p.set_defaults(func=_cmd_prepare)

    p = sub.add_parser("fit", help="fit a generative model per aircraft type")
    p.add_argument("--train", required=True, help="training blip CSV")
    p.add_argument("--max-modes", type=int, default=learning.MAX_COMPONENTS,
                   help="upper bound on retained modes")
    _add_common(p, perf=True, interval=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("sample", help="sample synthetic thrust profiles from a model")
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--count", type=int, default=100, help="number of samples")
    _add_common(p, seed=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("bounds", help="compute confidence envelopes and bound climbs")
    p.add_argument("--model", required=True, help="model JSON file")
    _add_common(p, perf=True, level=True)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("predict", help="mean-model and nominal climb predictions")
    p.add_argument("--model", required=True, help="model JSON file")
    _add_common(p, perf=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score models against a test dataset")
    p.add_argument("--model-dir", required=True, help="directory of model_*.json files")
    p.add_argument("--test", required=True, help="test blip CSV")
    _add_common(p, perf=True, seed=True, level=True)
    p.set_defaults(func=_cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("CLIMBGEN_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ClimbgenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
