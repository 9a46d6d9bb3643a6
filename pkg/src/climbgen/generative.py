"""Gaussian generative model over basis weights: sampling of synthetic
thrust profiles, analytic confidence bounds from tangency points on the
chi-square ellipsoid, and JSON persistence.

The weight covariance is stored diagonal-only (the basis is orthonormal,
so cross-covariances vanish in expectation); the confidence region is the
axis-aligned ellipsoid whose radius is the chi-square quantile for the
number of modes.  For the thrust value at one grid node, the extreme
weights over that ellipsoid have the closed form

    w_pm = mu_w +- sqrt(q) * (c o n_hat),   c = sqrt(diag variances),
    n_hat = (a o c) / ||a o c||_2,          a_i = phi_i(h_k),

which are the tangency points of the constant-thrust hyperplanes, and lie
exactly on the ellipsoid surface.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .dynamics import ClimbTrajectory, integrate_climb
from .errors import (
    DegenerateModelError,
    DegenerateNodeError,
    DomainError,
    ModelFileError,
)
from .learning import FpcaBasis, ThrustProfile

if TYPE_CHECKING:
    from .performance import AircraftPerformance

SCHEMA_VERSION = 1
MIN_FIT_WEIGHTS = 10

_MODEL_KEYS = {
    "schema_version",
    "type_code",
    "interval_fl",
    "grid_m",
    "mean_N",
    "modes",
    "explained_variance",
    "mu_w",
    "sigma_diag",
    "n_flights_fit",
}


@dataclass(eq=False)
class WeightDistribution:
    """Mean and per-coordinate variances of the fitted weight density."""

    mu: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.var = np.asarray(self.var, dtype=float)
        if self.mu.shape != self.var.shape or self.mu.ndim != 1:
            raise DomainError("mu and var must be 1-d arrays of equal length")
        if np.any(~np.isfinite(self.mu)) or np.any(~np.isfinite(self.var)):
            raise DomainError("weight distribution parameters must be finite")
        if np.any(self.var <= 0.0):
            raise DegenerateModelError(
                "zero variance in a weight coordinate; retain fewer modes"
            )


@dataclass(eq=False)
class GenerativeClimbModel:
    """Fitted per-type model: basis, weight distribution, and provenance."""

    type_code: str
    basis: FpcaBasis
    weights: WeightDistribution
    interval_fl: tuple[float, float]
    n_flights_fit: int

    def __post_init__(self):
        if self.weights.mu.size != self.basis.n_modes:
            raise DomainError("weight distribution dimension does not match the basis")

    def mean_profile(self) -> ThrustProfile:
        """Reconstruction at the mean weights."""
        return ThrustProfile(self.basis.grid.copy(), self.basis.reconstruct(self.weights.mu))


def fit_weight_distribution(weight_vectors: Sequence[np.ndarray]) -> WeightDistribution:
    """Gaussian fit of projected weights: sample mean and unbiased
    per-coordinate variances (off-diagonals discarded)."""
    if len(weight_vectors) < MIN_FIT_WEIGHTS:
        raise DomainError(
            f"need at least {MIN_FIT_WEIGHTS} weight vectors, got {len(weight_vectors)}"
        )
    w = np.stack([np.asarray(v, dtype=float) for v in weight_vectors])
    return WeightDistribution(mu=w.mean(axis=0), var=w.var(axis=0, ddof=1))


def sample_weights(model: GenerativeClimbModel, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` weight vectors, deterministic for a fixed seed."""
    if count < 1:
        raise DomainError("count must be at least 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, model.weights.mu.size))
    return model.weights.mu + z * np.sqrt(model.weights.var)


def sample_thrust(model: GenerativeClimbModel, count: int, seed: int) -> list[ThrustProfile]:
    """Sample synthetic thrust profiles by reconstructing drawn weights."""
    values = model.basis.mean + sample_weights(model, count, seed) @ model.basis.modes
    return [ThrustProfile(model.basis.grid.copy(), row) for row in values]


def _regularized_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x), series / continued fraction."""
    if x < 0.0 or a <= 0.0:
        raise DomainError("require x >= 0 and a > 0")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        # series representation
        term = 1.0 / a
        total = term
        denom = a
        for _ in range(500):
            denom += 1.0
            term *= x / denom
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    # continued fraction for the upper tail (modified Lentz)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    frac = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        frac *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    upper = math.exp(-x + a * math.log(x) - math.lgamma(a)) * frac
    return 1.0 - upper


def confidence_radius(n: int, level: float) -> float:
    """Chi-square quantile with ``n`` degrees of freedom at ``level``,
    by bisection on the regularized incomplete-gamma CDF."""
    if n < 1:
        raise DomainError("n must be at least 1")
    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")

    def cdf(x: float) -> float:
        return _regularized_lower_gamma(n / 2.0, x / 2.0)

    hi = float(max(n, 1))
    while cdf(hi) < level:
        hi *= 2.0
        if hi > 1e12:
            raise DomainError("confidence level too close to 1")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < level:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(hi, 1.0):
            break
    return 0.5 * (lo + hi)


def bound_weights(
    model: GenerativeClimbModel, k: int, level: float = 0.95
) -> tuple[np.ndarray, np.ndarray]:
    """Weights minimizing / maximizing the thrust at grid node ``k`` over
    the confidence ellipsoid (tangency closed form)."""
    n_g = model.basis.grid.size
    if not 0 <= k < n_g:
        raise DomainError(f"node index {k} outside [0, {n_g - 1}]")
    a = model.basis.modes[:, k]
    c = np.sqrt(model.weights.var)
    n_vec = a * c
    norm = float(np.linalg.norm(n_vec))
    if norm <= 1e-300 or norm <= 1e-15 * float(np.max(c)):
        raise DegenerateNodeError(f"all modes vanish at grid node {k}")
    n_hat = n_vec / norm
    radius = math.sqrt(confidence_radius(model.weights.mu.size, level))
    offset = radius * (c * n_hat)
    return model.weights.mu - offset, model.weights.mu + offset


def bound_profiles(
    model: GenerativeClimbModel, level: float = 0.95
) -> tuple[ThrustProfile, ThrustProfile]:
    """Pointwise lower and upper thrust envelopes at a confidence level.

    One tangency solve per grid node and envelope (2 * n_g in total);
    each node's bound is the basis reconstruction at the extreme weights.
    """
    grid = model.basis.grid
    lower = np.empty(grid.size)
    upper = np.empty(grid.size)
    for k in range(grid.size):
        w_lo, w_up = bound_weights(model, k, level)
        a = model.basis.modes[:, k]
        lower[k] = model.basis.mean[k] + a @ w_lo
        upper[k] = model.basis.mean[k] + a @ w_up
    return ThrustProfile(grid.copy(), lower), ThrustProfile(grid.copy(), upper)


def bound_trajectories(
    model: GenerativeClimbModel,
    perf: "AircraftPerformance",
    mass: float,
    h_start: float,
    h_end: float,
    level: float = 0.95,
    delta_T: float = 0.0,
) -> tuple[ClimbTrajectory, ClimbTrajectory]:
    """Slow and fast bounding climbs: exactly one integration per envelope.

    The slow trajectory uses the lower thrust envelope, the fast one the
    upper; an infeasible lower envelope raises ``InfeasibleClimbError``
    naming the failing altitude.
    """
    lower, upper = bound_profiles(model, level)
    slow = integrate_climb(perf, mass, lower, h_start, h_end, delta_T)
    fast = integrate_climb(perf, mass, upper, h_start, h_end, delta_T)
    return slow, fast


def save_model(model: GenerativeClimbModel, path: str | Path) -> None:
    """Write the model to versioned JSON; save/load/save is byte-stable."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "type_code": model.type_code,
        "interval_fl": [float(model.interval_fl[0]), float(model.interval_fl[1])],
        "grid_m": [float(v) for v in model.basis.grid],
        "mean_N": [float(v) for v in model.basis.mean],
        "modes": [[float(v) for v in row] for row in model.basis.modes],
        "explained_variance": [float(v) for v in model.basis.explained_variance],
        "mu_w": [float(v) for v in model.weights.mu],
        "sigma_diag": [float(v) for v in model.weights.var],
        "n_flights_fit": int(model.n_flights_fit),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> GenerativeClimbModel:
    """Load a model file, refusing unknown schema versions and validating
    the basis invariants."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ModelFileError(f"model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"model file {path} is corrupted: {exc}") from None
    if not isinstance(doc, dict) or set(doc) != _MODEL_KEYS:
        raise ModelFileError(f"model file {path} does not match the expected schema")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ModelFileError(
            f"unsupported schema version {doc['schema_version']!r} "
            f"(supported: {SCHEMA_VERSION})"
        )
    try:
        basis = FpcaBasis(
            grid=np.array(doc["grid_m"], dtype=float),
            mean=np.array(doc["mean_N"], dtype=float),
            modes=np.array(doc["modes"], dtype=float),
            explained_variance=np.array(doc["explained_variance"], dtype=float),
        )
        weights = WeightDistribution(
            mu=np.array(doc["mu_w"], dtype=float),
            var=np.array(doc["sigma_diag"], dtype=float),
        )
        interval = (float(doc["interval_fl"][0]), float(doc["interval_fl"][1]))
        model = GenerativeClimbModel(
            type_code=str(doc["type_code"]),
            basis=basis,
            weights=weights,
            interval_fl=interval,
            n_flights_fit=int(doc["n_flights_fit"]),
        )
    except (DomainError, DegenerateModelError, TypeError, ValueError, IndexError) as exc:
        raise ModelFileError(f"model file {path} is invalid: {exc}") from None
    if np.any(np.diff(basis.grid) <= 0.0):
        raise ModelFileError(f"model file {path}: grid is not strictly increasing")
    _check_orthonormal(model.basis)
    return model


def _check_orthonormal(basis: FpcaBasis, tol: float = 1e-6) -> None:
    from .learning import trapezoid_weights

    w = trapezoid_weights(basis.grid)
    gram = basis.modes @ (w[:, None] * basis.modes.T)
    if not np.allclose(gram, np.eye(basis.n_modes), atol=tol):
        raise ModelFileError("basis modes are not orthonormal")
