"""Per-aircraft-type performance parameters and the nominal climb-thrust
profile, loaded from an open JSON parameter file.

File format: a JSON array with one record per aircraft type and exactly
these keys::

    type_code      ICAO-style designator (string)
    c_D0           parasitic drag coefficient
    c_D2           induced drag coefficient
    S_m2           reference wing area, m^2
    m_nom_kg       nominal mass, kg
    v_cas_ms       schedule CAS below the crossover, m/s
    mach           schedule Mach at/above the crossover
    c_T1_N         thrust at sea level, N
    c_T2_m         altitude scale of the linear thrust decay, m
    c_T3_per_m2    quadratic thrust coefficient, 1/m^2

The package ships synthetic-but-plausible parameter sets for three
archetypes (narrow-body jet, wide-body jet, corporate jet) under
``climbgen/data/aircraft.json``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import dynamics
from .atmosphere import SpeedSchedule, isa_state, schedule_speed
from .errors import DomainError, ModelValidityError, ValidationError

PERF_H_MAX = 15000.0   # m, validity ceiling of the thrust model

_FILE_KEYS = (
    "type_code",
    "c_D0",
    "c_D2",
    "S_m2",
    "m_nom_kg",
    "v_cas_ms",
    "mach",
    "c_T1_N",
    "c_T2_m",
    "c_T3_per_m2",
)


@dataclass(frozen=True)
class AircraftPerformance:
    """Physical coefficients for one aircraft type."""

    type_code: str
    c_d0: float
    c_d2: float
    wing_area: float     # m^2
    nominal_mass: float  # kg
    schedule: SpeedSchedule
    c_t1: float          # N
    c_t2: float          # m
    c_t3: float          # 1/m^2

    def __post_init__(self):
        for name in ("c_d0", "c_d2", "wing_area", "nominal_mass", "c_t1", "c_t2"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                raise ValidationError(f"{self.type_code or '<record>'}: {name} must be positive, got {value}")
        if not np.isfinite(self.c_t3) or self.c_t3 < 0.0:
            raise ValidationError(f"{self.type_code}: c_t3 must be non-negative, got {self.c_t3}")
        # the thrust model must stay positive across its validity interval
        probe = np.linspace(0.0, PERF_H_MAX, 256)
        thrust = self.c_t1 * (1.0 - probe / self.c_t2 + self.c_t3 * probe**2)
        if np.any(thrust <= 0.0):
            raise ValidationError(
                f"{self.type_code}: nominal thrust non-positive below {PERF_H_MAX:.0f} m"
            )


def nominal_thrust(perf: AircraftPerformance, h: float | np.ndarray) -> float | np.ndarray:
    """Nominal max-climb thrust c_T1 * (1 - h/c_T2 + c_T3 h^2), in N."""
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr < 0.0) or np.any(h_arr > PERF_H_MAX):
        raise DomainError(f"altitude outside thrust model interval [0, {PERF_H_MAX:.0f}] m")
    t = perf.c_t1 * (1.0 - h_arr / perf.c_t2 + perf.c_t3 * h_arr**2)
    if np.any(t <= 0.0):
        raise ModelValidityError(f"{perf.type_code}: nominal thrust non-positive at {h}")
    return float(t) if np.ndim(t) == 0 else t


def min_level_thrust(
    perf: AircraftPerformance, h: float | np.ndarray, delta_T: float = 0.0
) -> float | np.ndarray:
    """Thrust for zero climb rate: the drag at nominal mass and schedule speed."""
    state = isa_state(h, delta_T)
    v_tas, _ = schedule_speed(perf.schedule, state)
    return dynamics.drag(perf, perf.nominal_mass, state, v_tas)


def _record_to_performance(record: dict, index: int) -> AircraftPerformance:
    if not isinstance(record, dict):
        raise ValidationError(f"record {index}: expected an object")
    missing = [k for k in _FILE_KEYS if k not in record]
    if missing:
        raise ValidationError(f"record {index}: missing required field(s) {', '.join(missing)}")
    unknown = [k for k in record if k not in _FILE_KEYS]
    if unknown:
        raise ValidationError(f"record {index}: unknown field(s) {', '.join(sorted(unknown))}")
    type_code = record["type_code"]
    if not isinstance(type_code, str) or not type_code:
        raise ValidationError(f"record {index}: type_code must be a non-empty string")
    values = {}
    for key in _FILE_KEYS[1:]:
        try:
            values[key] = float(record[key])
        except (TypeError, ValueError):
            raise ValidationError(f"{type_code}: field {key} is not a number") from None
    try:
        schedule = SpeedSchedule(v_cas=values["v_cas_ms"], mach=values["mach"])
    except DomainError as exc:
        raise ValidationError(f"{type_code}: {exc}") from None
    return AircraftPerformance(
        type_code=type_code,
        c_d0=values["c_D0"],
        c_d2=values["c_D2"],
        wing_area=values["S_m2"],
        nominal_mass=values["m_nom_kg"],
        schedule=schedule,
        c_t1=values["c_T1_N"],
        c_t2=values["c_T2_m"],
        c_t3=values["c_T3_per_m2"],
    )


def load_performance(path: str | Path) -> dict[str, AircraftPerformance]:
    """Load a catalog of aircraft performance records, keyed by type code.

    The result is sorted by type code so loading is order-independent.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ValidationError(f"performance file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"performance file {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, list) or not raw:
        raise ValidationError(f"performance file {path} must be a non-empty JSON array")
    catalog: dict[str, AircraftPerformance] = {}
    for index, record in enumerate(raw):
        perf = _record_to_performance(record, index)
        if perf.type_code in catalog:
            raise ValidationError(f"duplicate type code {perf.type_code}")
        catalog[perf.type_code] = perf
    return {code: catalog[code] for code in sorted(catalog)}


def save_performance(catalog: dict[str, AircraftPerformance], path: str | Path) -> None:
    """Write a catalog back to the JSON parameter format (round-trip safe)."""
    records = []
    for code in sorted(catalog):
        perf = catalog[code]
        records.append(
            {
                "type_code": perf.type_code,
                "c_D0": perf.c_d0,
                "c_D2": perf.c_d2,
                "S_m2": perf.wing_area,
                "m_nom_kg": perf.nominal_mass,
                "v_cas_ms": perf.schedule.v_cas,
                "mach": perf.schedule.mach,
                "c_T1_N": perf.c_t1,
                "c_T2_m": perf.c_t2,
                "c_T3_per_m2": perf.c_t3,
            }
        )
    Path(path).write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")


def default_catalog_path() -> Path:
    """Path of the shipped synthetic archetype catalog."""
    return Path(resources.files("climbgen").joinpath("data/aircraft.json"))
