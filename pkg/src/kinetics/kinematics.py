import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Tuple, Union

import numpy as np
from scipy import integrate, special
from typeguard import typechecked

from src.config.constants import KinematicsConfig

HalfInteger = Union[int, float, Fraction]


@typechecked
def as_half_integer(k: HalfInteger) -> Fraction:
    """Returns k as an exact non-negative multiple of 1/2.

    Args:
        k: an integer, a float such as 1.5, or a Fraction.

    Raises:
        ValueError: k is negative or not a multiple of 1/2.
    """
    doubled = Fraction(k) * 2
    if doubled.denominator != 1 or doubled < 0:
        raise ValueError(f"Moment index {k!r} is not a non-negative half-integer.")
    return doubled / 2


def sphere_area(d: int) -> float:
    """Returns |S^{d-1}|, the surface measure of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _validate_dimension(d: int) -> None:
    if d < KinematicsConfig.MIN_DIMENSION.value:
        raise ValueError(f"Dimension must be >= {KinematicsConfig.MIN_DIMENSION.value}, got {d}.")


@dataclass(frozen=True)
class CollisionFrame:
    """Defines a binary hard-sphere collision: the two incoming velocities and the scattering direction."""

    v: np.ndarray
    v_star: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        vectors = [np.asarray(item, dtype=float) for item in (self.v, self.v_star, self.sigma)]
        shapes = {vector.shape for vector in vectors}
        if len(shapes) != 1 or vectors[0].ndim != 1:
            raise ValueError(f"Collision frame vectors must share one 1-d shape, got {sorted(shapes)}.")
        _validate_dimension(vectors[0].shape[0])
        if not all(np.all(np.isfinite(vector)) for vector in vectors):
            raise ValueError("Collision frame velocities must be finite.")
        object.__setattr__(self, "v", vectors[0])
        object.__setattr__(self, "v_star", vectors[1])
        object.__setattr__(self, "sigma", vectors[2])

    @property
    def dimension(self) -> int:
        """Returns the velocity-space dimension d."""
        return int(self.v.shape[0])


@typechecked
def post_collision(frame: CollisionFrame) -> Tuple[np.ndarray, np.ndarray]:
    """Returns the post-collision velocities (v', v'_*) of an elastic hard-sphere collision.

    Args:
        frame: the incoming velocities and a unit scattering direction.

    Raises:
        ValueError: sigma is not a unit vector within the tolerance.
    """
    prime, prime_star = post_collision_batch(frame.v[None, :], frame.v_star[None, :], frame.sigma[None, :])
    return prime[0], prime_star[0]


@typechecked
def post_collision_batch(
    v: np.ndarray, v_star: np.ndarray, sigma: np.ndarray, validate: bool = True
) -> Tuple[np.ndarray, np.ndarray]:
    """Returns the post-collision velocities for arrays of collisions of shape (n, d).

    Args:
        v: incoming velocities, shape (n, d).
        v_star: partner velocities, shape (n, d).
        sigma: unit scattering directions, shape (n, d).
        validate: check the norm of every sigma.

    Raises:
        ValueError: mismatched shapes or a non-unit sigma.
    """
    if v.shape != v_star.shape or v.shape != sigma.shape or v.ndim != 2:
        raise ValueError(f"Shapes {v.shape}, {v_star.shape}, {sigma.shape} are not a matching (n, d) triple.")
    if validate:
        deviation = np.abs(np.linalg.norm(sigma, axis=1) - 1.0)
        if deviation.size and deviation.max() > KinematicsConfig.SIGMA_TOLERANCE.value:
            raise ValueError(
                f"Scattering direction is not a unit vector: norm deviation {deviation.max():.3e} exceeds "
                f"{KinematicsConfig.SIGMA_TOLERANCE.value:.0e}."
            )
    center = 0.5 * (v + v_star)
    half_speed = 0.5 * np.linalg.norm(v - v_star, axis=1, keepdims=True)
    return center + half_speed * sigma, center - half_speed * sigma


@typechecked
def sample_unit_sphere(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Returns n directions uniformly distributed on S^{d-1}, shape (n, d)."""
    _validate_dimension(d)
    draws = rng.standard_normal((n, d))
    norms = np.linalg.norm(draws, axis=1, keepdims=True)
    while np.any(norms == 0.0):
        zero = norms[:, 0] == 0.0
        draws[zero] = rng.standard_normal((int(zero.sum()), d))
        norms = np.linalg.norm(draws, axis=1, keepdims=True)
    return draws / norms


@typechecked
def renormalize_velocities(velocities: np.ndarray) -> np.ndarray:
    """Returns the velocities shifted to zero mean and scaled to mean energy d/2.

    Raises:
        ValueError: every velocity coincides, so no scaling reaches the target energy.
    """
    d = velocities.shape[1]
    centered = velocities - velocities.mean(axis=0)
    energy = float(np.mean(np.sum(centered * centered, axis=1)))
    if energy <= 0.0:
        raise ValueError("Cannot renormalize a velocity sample with zero spread.")
    scaled = centered * math.sqrt(0.5 * d / energy)
    return scaled - scaled.mean(axis=0)


# POVZNER COEFFICIENTS


@lru_cache(maxsize=None)
def _povzner_by_quadrature(d: int, k: Fraction) -> float:
    exponent = float(k)
    norm = math.sqrt(math.pi) * math.gamma((d - 1) / 2.0) / math.gamma(d / 2.0)

    def integrand(theta: float) -> float:
        return math.sin(theta) ** (d - 2) * (math.cos(theta / 2.0) ** (2 * exponent) + math.sin(theta / 2.0) ** (2 * exponent))

    value, _ = integrate.quad(
        integrand,
        0.0,
        math.pi,
        epsabs=KinematicsConfig.POVZNER_ABS_TOLERANCE.value,
        epsrel=KinematicsConfig.POVZNER_REL_TOLERANCE.value,
        limit=KinematicsConfig.POVZNER_QUAD_LIMIT.value,
    )
    return value / norm


@typechecked
def povzner_coefficient(d: int, k: HalfInteger, closed_form: bool = True) -> float:
    """Returns the angular coefficient rho_k, the sphere average of ((1+x)/2)^k + ((1-x)/2)^k.

    The average runs over x = cos(theta) with weight (1-x^2)^((d-3)/2). For d=3 the closed form
    2/(k+1) is used unless `closed_form` is False.

    Args:
        d: dimension, at least 2.
        k: non-negative half-integer.
        closed_form: use 2/(k+1) when d=3.

    Raises:
        ValueError: d < 2 or k is not a non-negative half-integer.
    """
    _validate_dimension(d)
    index = as_half_integer(k)
    if index == 0:
        return 2.0
    if d == 3 and closed_form:
        return float(Fraction(2) / (index + 1))
    return _povzner_by_quadrature(d, index)


@dataclass(frozen=True)
class PovznerTable:
    """Defines the table k -> rho_k for one dimension."""

    d: int
    entries: Dict[Fraction, float] = field(default_factory=dict)

    def __getitem__(self, k: HalfInteger) -> float:
        index = as_half_integer(k)
        if index not in self.entries:
            raise KeyError(f"Povzner coefficient for k={index} is not tabulated (d={self.d}).")
        return self.entries[index]

    def is_decreasing_after_one(self) -> bool:
        """Returns True if rho_k strictly decreases over the tabulated k >= 1."""
        values = [self.entries[k] for k in sorted(self.entries) if k >= 1]
        return all(later < earlier for earlier, later in zip(values, values[1:]))


@typechecked
def povzner_table(d: int, k_max: HalfInteger) -> PovznerTable:
    """Returns rho_k for k = 0, 1/2, ..., k_max."""
    top = as_half_integer(k_max)
    entries = {Fraction(j, 2): povzner_coefficient(d, Fraction(j, 2)) for j in range(int(2 * top) + 1)}
    return PovznerTable(d=d, entries=entries)


@typechecked
def povzner_beta(d: int, k: HalfInteger, alpha: float) -> float:
    """Returns (1 - alpha) * rho_k, the angular coefficient of the annihilation operator."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return (1.0 - alpha) * povzner_coefficient(d, k)


@dataclass(frozen=True)
class AlphaThresholds:
    """Defines the annihilation thresholds of one dimension.

    alpha0 bounds the regime with a uniform M_{3/2} estimate. alpha2 is evaluated from its closed
    formula; alpha2_quoted keeps the rounded published value 0.401 next to it (d=3 only).
    """

    d: int
    alpha0: float
    alpha2: float
    alpha2_quoted: float = float("nan")


@typechecked
def alpha_thresholds(d: int) -> AlphaThresholds:
    """Returns the thresholds alpha0 = (1 - rho_{3/2})/(3/2 - rho_{3/2}) and alpha2 = 2*sqrt2/(4*sqrt2 + d(sqrt2 - 1))."""
    _validate_dimension(d)
    rho = povzner_coefficient(d, Fraction(3, 2))
    root2 = math.sqrt(2.0)
    alpha0 = (1.0 - rho) / (1.5 - rho)
    alpha2 = 2.0 * root2 / (4.0 * root2 + d * (root2 - 1.0))
    quoted = KinematicsConfig.ALPHA2_QUOTED_D3.value if d == 3 else float("nan")
    return AlphaThresholds(d=d, alpha0=alpha0, alpha2=alpha2, alpha2_quoted=quoted)


@typechecked
def moment_bound_margin(d: int, alpha: float) -> float:
    """Returns 1 - beta_{3/2}(alpha) - 3*alpha/2, positive exactly when alpha < alpha0(d)."""
    return 1.0 - povzner_beta(d, Fraction(3, 2), alpha) - 1.5 * alpha


def gaussian_moment(d: int, k: HalfInteger) -> float:
    """Returns the moment M_k of the normalized Maxwellian, Gamma(k + d/2)/Gamma(d/2)."""
    index = float(as_half_integer(k))
    return float(np.exp(special.gammaln(index + d / 2.0) - special.gammaln(d / 2.0)))
