"""Forward climb physics: drag, energy share factor, climb rate, and
time-to-altitude integration of a thrust profile.

The climb follows the aircraft's speed schedule exactly; acceleration
between the CAS and Mach legs is absorbed by the energy share factor
rather than integrated explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .atmosphere import (
    BETA,
    G0,
    H_TROPOPAUSE,
    KAPPA,
    R_AIR,
    AtmosphereState,
    SpeedSchedule,
    crossover_altitude,
    isa_state,
    schedule_speed,
)
from .errors import DomainError, InfeasibleClimbError

if TYPE_CHECKING:
    from .learning import ThrustProfile
    from .performance import AircraftPerformance

ROCD_FLOOR = 0.5      # m/s; below this a climb is declared infeasible
DEFAULT_NODES = 1000  # quadrature refinement of the thrust-profile grid

_integration_calls = 0


def integration_call_count() -> int:
    """Number of integrate_climb invocations so far (test instrumentation)."""
    return _integration_calls


@dataclass(eq=False)
class ClimbTrajectory:
    """Time at altitude for one integrated climb.

    ``t`` is seconds from the start altitude, strictly increasing; ``h``
    is metres; ``rocd`` the pointwise climb rate in m/s; ``v_tas`` the
    schedule true airspeed in m/s.
    """

    t: np.ndarray
    h: np.ndarray
    rocd: np.ndarray
    v_tas: np.ndarray | None = None

    def time_at(self, h_query: float | np.ndarray) -> float | np.ndarray:
        """Interpolate the arrival time at an altitude within the span."""
        return np.interp(h_query, self.h, self.t)


def drag(
    perf: "AircraftPerformance",
    mass: float,
    state: AtmosphereState,
    v_tas: float | np.ndarray,
    phi: float = 0.0,
) -> float | np.ndarray:
    """Aerodynamic drag from the parabolic polar, in N."""
    q = 0.5 * state.rho * np.asarray(v_tas, dtype=float) ** 2 * perf.wing_area
    c_lift = mass * G0 / (q * np.cos(phi))
    d = q * (perf.c_d0 + perf.c_d2 * c_lift**2)
    return float(d) if np.ndim(d) == 0 else d


def energy_share(
    mach: float | np.ndarray,
    h: float | np.ndarray,
    schedule: SpeedSchedule,
) -> float | np.ndarray:
    """Energy share factor f(M): the fraction of excess power that goes
    into climbing, by flight condition.

    Conditions: constant CAS below the crossover altitude, constant Mach
    at/above it; each splits at the tropopause.  Constant Mach above the
    tropopause gives exactly 1 (TAS is constant there).
    """
    m = np.asarray(mach, dtype=float)
    m2 = m * m
    half = (KAPPA - 1.0) / 2.0
    lapse_term = KAPPA * R_AIR * BETA / (2.0 * G0) * m2
    base = 1.0 + half * m2
    compress = base ** (-1.0 / (KAPPA - 1.0)) * (base ** (KAPPA / (KAPPA - 1.0)) - 1.0)

    f_cas_tropo = 1.0 / (1.0 + lapse_term + compress)
    f_cas_strato = 1.0 / (1.0 + compress)
    f_mach_tropo = 1.0 / (1.0 + lapse_term)

    below_cross = np.asarray(h) < crossover_altitude(schedule)
    below_trop = np.asarray(h) < H_TROPOPAUSE
    f = np.where(
        below_cross,
        np.where(below_trop, f_cas_tropo, f_cas_strato),
        np.where(below_trop, f_mach_tropo, 1.0),
    )
    return float(f) if np.ndim(f) == 0 else f


def rocd(
    perf: "AircraftPerformance",
    mass: float,
    t_hr: float | np.ndarray,
    h: float | np.ndarray,
    delta_T: float = 0.0,
    phi: float = 0.0,
) -> float | np.ndarray:
    """Rate of climb (m/s) for a given engine thrust at altitude.

    Excess power (thrust minus drag, times TAS) is converted to climb rate
    through the nominal mass, scaled by the temperature ratio and the
    energy share factor.  Negative results are returned as-is.
    """
    state = isa_state(h, delta_T)
    v_tas, mach = schedule_speed(perf.schedule, state)
    d = drag(perf, mass, state, v_tas, phi)
    f = energy_share(mach, h, perf.schedule)
    r = ((state.T - delta_T) / state.T) * ((np.asarray(t_hr, dtype=float) - d) * v_tas) / (mass * G0) * f
    return float(r) if np.ndim(r) == 0 else r


def time_from_rocd(h: np.ndarray, rocd_values: np.ndarray) -> np.ndarray:
    """Cumulative trapezoidal time-at-altitude from pointwise climb rates."""
    h = np.asarray(h, dtype=float)
    r = np.asarray(rocd_values, dtype=float)
    inv = 1.0 / r
    seg = 0.5 * np.diff(h) * (inv[1:] + inv[:-1])
    return np.concatenate(([0.0], np.cumsum(seg)))


def integrate_climb(
    perf: "AircraftPerformance",
    mass: float,
    thrust_profile: "ThrustProfile",
    h_start: float,
    h_end: float,
    delta_T: float = 0.0,
    n_nodes: int = DEFAULT_NODES,
) -> ClimbTrajectory:
    """Integrate time-at-altitude for a climb driven by a thrust profile.

    Thrust is linearly interpolated from the profile grid onto a uniform
    ``n_nodes`` refinement augmented with the profile's own nodes, and
    1/ROCD is integrated by the trapezoidal rule.  The energy share factor
    switches branch at the CAS-Mach crossover, so the quadrature is split
    there and the jump is handled with one-sided limits.  Raises
    ``InfeasibleClimbError`` if the climb rate drops to the floor anywhere
    on the refinement.
    """
    global _integration_calls
    if not h_start < h_end:
        raise DomainError(f"need h_start < h_end, got {h_start} >= {h_end}")
    grid = thrust_profile.grid
    if h_start < grid[0] - 1e-9 or h_end > grid[-1] + 1e-9:
        raise DomainError(
            f"thrust profile spans [{grid[0]:.1f}, {grid[-1]:.1f}] m, "
            f"requested [{h_start:.1f}, {h_end:.1f}] m"
        )
    if n_nodes < 2:
        raise DomainError("n_nodes must be at least 2")

    _integration_calls += 1
    base = np.linspace(h_start, h_end, n_nodes)
    inner = grid[(grid > h_start) & (grid < h_end)]
    nodes = np.unique(np.concatenate([base, inner]))
    h_cross = crossover_altitude(perf.schedule)

    def rates(h_nodes: np.ndarray, h_eval: np.ndarray) -> np.ndarray:
        thrust = np.interp(h_nodes, grid, thrust_profile.values)
        r = rocd(perf, mass, thrust, h_eval, delta_T)
        bad = r <= ROCD_FLOOR
        if np.any(bad):
            i = int(np.argmax(bad))
            raise InfeasibleClimbError(
                f"climb rate {float(r[i]):.3f} m/s at {float(h_nodes[i]):.0f} m "
                f"is at or below the {ROCD_FLOOR} m/s floor",
                altitude_m=float(h_nodes[i]),
            )
        return r

    if not h_start < h_cross < h_end:
        r = rates(nodes, nodes)
        v_tas, _ = schedule_speed(perf.schedule, isa_state(nodes, delta_T))
        return ClimbTrajectory(t=time_from_rocd(nodes, r), h=nodes, rocd=r, v_tas=v_tas)

    left = np.append(nodes[nodes < h_cross], h_cross)
    right = np.append(h_cross, nodes[nodes > h_cross])
    # evaluate the left endpoint just below the crossover to pick up the
    # CAS-leg limit of the energy share factor
    left_eval = left.copy()
    left_eval[-1] = np.nextafter(h_cross, h_start)
    r_left = rates(left, left_eval)
    r_right = rates(right, right)
    t_left = time_from_rocd(left, r_left)
    t_right = time_from_rocd(right, r_right) + t_left[-1]
    h_out = np.concatenate([left[:-1], right])
    v_tas, _ = schedule_speed(perf.schedule, isa_state(h_out, delta_T))
    return ClimbTrajectory(
        t=np.concatenate([t_left[:-1], t_right]),
        h=h_out,
        rocd=np.concatenate([r_left[:-1], r_right]),
        v_tas=v_tas,
    )
