"""Radar-blip ingestion, climb filtering, train/test splitting, and the
synthetic fleet simulator used for verification.

CSV schema (UTF-8, header required)::

    flight_id,type_code,t_s,alt_ft[,lat,lon]

Blips are grouped by flight, sorted by time, deduplicated (first blip per
timestamp wins), and annotated with a derived climb rate: central finite
differences of altitude over time (one-sided at the ends) followed by a
3-point median filter to suppress altitude-quantization spikes.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .atmosphere import FT, fl_to_m
from .dynamics import integrate_climb
from .errors import DataError, DomainError, InfeasibleClimbError, ScenarioError
from .learning import ThrustProfile
from .performance import AircraftPerformance, nominal_thrust

logger = logging.getLogger(__name__)

_HEADER = ["flight_id", "type_code", "t_s", "alt_ft"]
_HEADER_LATLON = _HEADER + ["lat", "lon"]
ALT_MAX_FT = 60000.0
MAX_REDRAWS = 100
TRUTH_GRID_SIZE = 200


@dataclass(frozen=True)
class RadarBlip:
    """One surveillance return; lateral position is carried but unused."""

    flight_id: str
    type_code: str
    t_s: float
    alt_ft: float
    lat: float | None = None
    lon: float | None = None

    def __post_init__(self):
        if not self.flight_id or not self.type_code:
            raise DomainError("blip needs a flight_id and type_code")
        if not math.isfinite(self.t_s):
            raise DomainError("blip time must be finite")
        if not math.isfinite(self.alt_ft) or not 0.0 <= self.alt_ft <= ALT_MAX_FT:
            raise DomainError(f"blip altitude {self.alt_ft} outside [0, {ALT_MAX_FT:.0f}] ft")


@dataclass(eq=False)
class Trajectory:
    """Time-ordered blips of one flight with derived climb rates (ft/min)."""

    flight_id: str
    type_code: str
    t_s: np.ndarray
    alt_ft: np.ndarray
    rocd_fpm: np.ndarray

    def __post_init__(self):
        self.t_s = np.asarray(self.t_s, dtype=float)
        self.alt_ft = np.asarray(self.alt_ft, dtype=float)
        self.rocd_fpm = np.asarray(self.rocd_fpm, dtype=float)
        if np.any(np.diff(self.t_s) <= 0.0):
            raise DomainError(f"flight {self.flight_id}: timestamps not strictly increasing")

    @property
    def n_blips(self) -> int:
        return self.t_s.size


@dataclass(eq=False)
class DatasetSplit:
    """Disjoint train/test partition of a trajectory set, split by flight."""

    train: list[Trajectory]
    test: list[Trajectory]
    seed: int


def fnum(x: float) -> str:
    """Shortest exact decimal form of a float (numpy scalars unwrapped)."""
    return repr(float(x))


def median3(x: np.ndarray) -> np.ndarray:
    """3-point running median; endpoints pass through unchanged."""
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        return x.copy()
    out = x.copy()
    out[1:-1] = np.median(np.vstack([x[:-2], x[1:-1], x[2:]]), axis=0)
    return out


def derive_rocd(t_s: np.ndarray, alt_ft: np.ndarray) -> np.ndarray:
    """Climb rate (ft/min) by central differences, median-filtered."""
    n = t_s.size
    r = np.empty(n)
    r[0] = (alt_ft[1] - alt_ft[0]) / (t_s[1] - t_s[0])
    r[-1] = (alt_ft[-1] - alt_ft[-2]) / (t_s[-1] - t_s[-2])
    if n > 2:
        r[1:-1] = (alt_ft[2:] - alt_ft[:-2]) / (t_s[2:] - t_s[:-2])
    return median3(r * 60.0)


def ingest(csv_path: str | Path) -> list[Trajectory]:
    """Read a blip CSV into per-flight trajectories.

    Malformed rows are logged with their line number, skipped, and
    counted; an empty or header-less file raises ``DataError``.
    """
    path = Path(csv_path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"blip file not found: {path}") from None
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{path}: empty file") from None
    if header == _HEADER:
        has_latlon = False
    elif header == _HEADER_LATLON:
        has_latlon = True
    else:
        raise DataError(
            f"{path}: header must be exactly {','.join(_HEADER)} "
            f"or {','.join(_HEADER_LATLON)}"
        )

    flights: dict[str, list[RadarBlip]] = {}
    skipped = 0
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            if len(row) != len(header):
                raise DomainError(f"expected {len(header)} fields, got {len(row)}")
            blip = RadarBlip(
                flight_id=row[0],
                type_code=row[1],
                t_s=float(row[2]),
                alt_ft=float(row[3]),
                lat=float(row[4]) if has_latlon and row[4] else None,
                lon=float(row[5]) if has_latlon and row[5] else None,
            )
        except (DomainError, ValueError) as exc:
            logger.warning("%s line %d: %s; row skipped", path, line_no, exc)
            skipped += 1
            continue
        flights.setdefault(blip.flight_id, []).append(blip)
    if skipped:
        logger.warning("%s: skipped %d malformed row(s)", path, skipped)
    if not flights:
        raise DataError(f"{path}: no valid blip rows")

    trajectories = []
    for flight_id in sorted(flights):
        blips = sorted(flights[flight_id], key=lambda b: b.t_s)
        t_arr = np.array([b.t_s for b in blips])
        alt_arr = np.array([b.alt_ft for b in blips])
        keep = np.concatenate(([True], np.diff(t_arr) > 0.0))
        t_arr, alt_arr = t_arr[keep], alt_arr[keep]
        if t_arr.size < 2:
            logger.warning("flight %s: fewer than 2 distinct blips; dropped", flight_id)
            continue
        trajectories.append(
            Trajectory(
                flight_id=flight_id,
                type_code=blips[0].type_code,
                t_s=t_arr,
                alt_ft=alt_arr,
                rocd_fpm=derive_rocd(t_arr, alt_arr),
            )
        )
    if not trajectories:
        raise DataError(f"{path}: no usable flights")
    return trajectories


def write_trajectories_csv(trajectories: Sequence[Trajectory], path: str | Path) -> None:
    """Write trajectories back out in the ingest schema (4-column form)."""
    lines = [",".join(_HEADER)]
    for tr in sorted(trajectories, key=lambda t: t.flight_id):
        for t, alt in zip(tr.t_s, tr.alt_ft):
            lines.append(f"{tr.flight_id},{tr.type_code},{fnum(t)},{fnum(alt)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _climbed_through(raw_alt: np.ndarray, med_alt: np.ndarray,
                     low_ft: float, high_ft: float) -> bool:
    tol = 1e-6
    idx = np.flatnonzero(med_alt >= low_ft)
    if idx.size == 0:
        return False
    enter = int(idx[0])
    if med_alt[enter] < high_ft:
        later = np.flatnonzero(med_alt[enter:] >= high_ft)
        if later.size:
            j = enter + int(later[0])
            return not np.any(med_alt[enter:j] < low_ft)
    # No observed crossing of the top boundary.  Monotone-overall climbs
    # that lie entirely inside the interval are retained: these are partial
    # radar pickups or the output of a previous filter pass (this keeps the
    # filter idempotent).
    return (
        raw_alt.min() >= low_ft - tol
        and raw_alt.max() <= high_ft + tol
        and med_alt[-1] > med_alt[0]
    )


def filter_climbs(
    trajectories: Sequence[Trajectory],
    fl_low: float = 150.0,
    fl_high: float = 325.0,
    rocd_min_fpm: float = 500.0,
    min_blips: int = 4,
) -> list[Trajectory]:
    """Keep flights that climb through [fl_low, fl_high] and, within each,
    the blips inside the interval with climb rate >= ``rocd_min_fpm``."""
    low_ft, high_ft = fl_low * 100.0, fl_high * 100.0
    kept = []
    for tr in trajectories:
        med = median3(tr.alt_ft)
        if not _climbed_through(tr.alt_ft, med, low_ft, high_ft):
            continue
        mask = (
            (tr.alt_ft >= low_ft)
            & (tr.alt_ft <= high_ft)
            & (tr.rocd_fpm >= rocd_min_fpm)
        )
        if int(np.count_nonzero(mask)) < min_blips:
            continue
        kept.append(
            Trajectory(
                flight_id=tr.flight_id,
                type_code=tr.type_code,
                t_s=tr.t_s[mask],
                alt_ft=tr.alt_ft[mask],
                rocd_fpm=tr.rocd_fpm[mask],
            )
        )
    logger.info("filter_climbs: kept %d of %d flights", len(kept), len(trajectories))
    return kept


def split(trajectories: Sequence[Trajectory], ratio: float = 2.0 / 3.0, seed: int = 0) -> DatasetSplit:
    """Random flight-level train/test partition, deterministic per seed."""
    if not trajectories:
        raise DataError("cannot split an empty trajectory set")
    if not 0.0 < ratio < 1.0:
        raise DomainError(f"ratio must lie in (0, 1), got {ratio}")
    ordered = sorted(trajectories, key=lambda tr: tr.flight_id)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ordered))
    n_train = int(round(ratio * len(ordered)))
    train_idx = set(perm[:n_train].tolist())
    train = [tr for i, tr in enumerate(ordered) if i in train_idx]
    test = [tr for i, tr in enumerate(ordered) if i not in train_idx]
    return DatasetSplit(train=train, test=test, seed=seed)


@dataclass(frozen=True)
class TypeScenario:
    """Ground-truth deviation family for one aircraft type.

    ``weight_dist`` selects the draw family: "normal", "student_t" (scaled
    to the target deviations), or "contaminated" (a Gaussian scale mixture:
    a ``contam_frac`` share of flights get ``contam_scale`` times the base
    deviation, mimicking the occasional off-profile operation seen in real
    traffic).
    """

    count: int
    thrust_bias_n: float = 0.0
    mode_sds: tuple[float, ...] = ()
    weight_dist: str = "normal"
    t_dof: float = 6.0
    contam_frac: float = 0.1
    contam_scale: float = 3.0

    def __post_init__(self):
        if self.count < 1:
            raise DomainError("count must be at least 1")
        if self.weight_dist not in ("normal", "student_t", "contaminated"):
            raise DomainError(f"unknown weight_dist {self.weight_dist!r}")
        if self.weight_dist == "student_t" and self.t_dof <= 2.0:
            raise DomainError("t_dof must exceed 2 for finite variance")
        if not 0.0 <= self.contam_frac < 1.0 or self.contam_scale <= 0.0:
            raise DomainError("contamination parameters out of range")


@dataclass(frozen=True)
class FleetScenario:
    """Synthetic fleet description: counts, truth family, and sampling."""

    types: dict[str, TypeScenario]
    fl_low: float = 150.0
    fl_high: float = 325.0
    fl_start: float = 140.0
    fl_end: float = 335.0
    blip_interval_s: float = 6.0
    alt_noise_ft: float = 0.0
    quantization_ft: float = 25.0
    delta_t_k: float = 0.0

    def __post_init__(self):
        if not self.types:
            raise DomainError("scenario must define at least one type")
        if not self.fl_start < self.fl_low < self.fl_high < self.fl_end:
            raise DomainError("need fl_start < fl_low < fl_high < fl_end")
        if self.blip_interval_s <= 0.0:
            raise DomainError("blip_interval_s must be positive")


def load_scenario(path: str | Path) -> FleetScenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file {path} is not valid JSON: {exc}") from None
    try:
        types = {
            code: TypeScenario(
                count=int(spec["count"]),
                thrust_bias_n=float(spec.get("thrust_bias_n", 0.0)),
                mode_sds=tuple(float(s) for s in spec.get("mode_sds", ())),
                weight_dist=str(spec.get("weight_dist", "normal")),
                t_dof=float(spec.get("t_dof", 6.0)),
                contam_frac=float(spec.get("contam_frac", 0.1)),
                contam_scale=float(spec.get("contam_scale", 3.0)),
            )
            for code, spec in doc["types"].items()
        }
        return FleetScenario(
            types=types,
            fl_low=float(doc.get("fl_low", 150.0)),
            fl_high=float(doc.get("fl_high", 325.0)),
            fl_start=float(doc.get("fl_start", 140.0)),
            fl_end=float(doc.get("fl_end", 335.0)),
            blip_interval_s=float(doc.get("blip_interval_s", 6.0)),
            alt_noise_ft=float(doc.get("alt_noise_ft", 0.0)),
            quantization_ft=float(doc.get("quantization_ft", 25.0)),
            delta_t_k=float(doc.get("delta_t_k", 0.0)),
        )
    except (KeyError, TypeError, ValueError, DomainError) as exc:
        raise ScenarioError(f"scenario file {path} is invalid: {exc}") from None


def truth_modes(grid: np.ndarray, n_modes: int) -> np.ndarray:
    """Orthonormal deviation shapes on the grid's span (rows are modes).

    The first mode is a flat thrust offset (the dominant real-world
    misspecification: mass / thrust setting); higher modes are cosine
    harmonics.  Unit quadrature norm: integral of psi_i psi_j dh = delta_ij.
    """
    if n_modes == 0:
        return np.zeros((0, grid.size))
    h0, h1 = grid[0], grid[-1]
    length = h1 - h0
    u = (grid - h0) / length
    shapes = [np.full(grid.size, 1.0 / np.sqrt(length))]
    shapes += [np.sqrt(2.0 / length) * np.cos(i * np.pi * u) for i in range(1, n_modes)]
    return np.stack(shapes)


def _draw_weights(spec: TypeScenario, rng: np.random.Generator) -> np.ndarray:
    sds = np.asarray(spec.mode_sds, dtype=float)
    if sds.size == 0:
        return np.zeros(0)
    if spec.weight_dist == "normal":
        return sds * rng.standard_normal(sds.size)
    if spec.weight_dist == "contaminated":
        scale = spec.contam_scale if rng.random() < spec.contam_frac else 1.0
        return scale * sds * rng.standard_normal(sds.size)
    # Student t scaled to unit variance, so sds are the target deviations
    z = rng.standard_t(spec.t_dof, size=sds.size)
    return sds * z / np.sqrt(spec.t_dof / (spec.t_dof - 2.0))


def simulate_fleet(
    catalog: dict[str, AircraftPerformance],
    scenario: FleetScenario,
    seed: int,
    csv_path: str | Path,
    truth_path: str | Path,
) -> dict[str, int]:
    """Generate a synthetic radar CSV plus a ground-truth sidecar.

    Each flight draws a true thrust profile (nominal + bias + weighted
    cosine modes), is integrated through [fl_start, fl_end], and sampled
    at the blip interval with optional Gaussian noise and altitude
    quantization.  Infeasible draws are retried up to 100 times.  Output
    is byte-identical for a fixed seed.
    """
    missing = sorted(set(scenario.types) - set(catalog))
    if missing:
        raise ScenarioError(f"scenario types missing from the catalog: {', '.join(missing)}")
    rng = np.random.default_rng(seed)
    h0, h1 = fl_to_m(scenario.fl_start), fl_to_m(scenario.fl_end)
    grid = np.linspace(h0, h1, TRUTH_GRID_SIZE)

    lines = [",".join(_HEADER)]
    truth: dict[str, dict] = {}
    counts: dict[str, int] = {}
    for type_code in sorted(scenario.types):
        spec = scenario.types[type_code]
        perf = catalog[type_code]
        base = nominal_thrust(perf, grid) + spec.thrust_bias_n
        modes = truth_modes(grid, len(spec.mode_sds))
        for i in range(spec.count):
            flight_id = f"{type_code}-{i:05d}"
            for attempt in range(MAX_REDRAWS + 1):
                weights = _draw_weights(spec, rng)
                values = base + weights @ modes if weights.size else base.copy()
                try:
                    traj = integrate_climb(
                        perf, perf.nominal_mass, ThrustProfile(grid, values),
                        h0, h1, delta_T=scenario.delta_t_k,
                    )
                except InfeasibleClimbError:
                    if attempt == MAX_REDRAWS:
                        raise ScenarioError(
                            f"{type_code}: no feasible thrust draw in {MAX_REDRAWS} attempts"
                        ) from None
                    continue
                break
            t_blips = np.arange(0.0, traj.t[-1], scenario.blip_interval_s)
            alt = np.interp(t_blips, traj.t, traj.h) / FT
            if scenario.alt_noise_ft > 0.0:
                alt = alt + scenario.alt_noise_ft * rng.standard_normal(alt.size)
            if scenario.quantization_ft > 0.0:
                alt = np.round(alt / scenario.quantization_ft) * scenario.quantization_ft
            for t, a in zip(t_blips, alt):
                lines.append(f"{flight_id},{type_code},{fnum(t)},{fnum(a)}")
            truth[flight_id] = {
                "type_code": type_code,
                "thrust_bias_n": spec.thrust_bias_n,
                "weights": [float(w) for w in weights],
            }
        counts[type_code] = spec.count

    Path(csv_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    Path(truth_path).write_text(
        json.dumps({"seed": seed, "flights": truth}, sort_keys=True, indent=1) + "\n",
        encoding="utf-8",
    )
    return counts
