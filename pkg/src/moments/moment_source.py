from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
from typeguard import typechecked

from src.config.constants import MomentsConfig
from src.kinetics.kinematics import HalfInteger, as_half_integer


def moment_key(k: HalfInteger) -> str:
    """Returns the JSON key of a moment index, e.g. '1.5'."""
    return f"{float(as_half_integer(k)):g}"


@dataclass
class MomentVector:
    """Defines the table k -> M_k for k = 0, 1/2, ..., k_max, with standard errors (zero when deterministic)."""

    d: int
    entries: Dict[Fraction, float]
    errors: Dict[Fraction, float] = field(default_factory=dict)

    def __post_init__(self):
        self.entries = {as_half_integer(k): float(v) for k, v in self.entries.items()}
        self.errors = {as_half_integer(k): float(v) for k, v in self.errors.items()}
        if Fraction(0) in self.entries and self.entries[Fraction(0)] <= 0.0:
            raise ValueError(f"M_0 must be positive, got {self.entries[Fraction(0)]}.")

    @property
    def k_max(self) -> Fraction:
        """Returns the largest tabulated index."""
        return max(self.entries)

    def __contains__(self, k: HalfInteger) -> bool:
        return as_half_integer(k) in self.entries

    def get(self, k: HalfInteger) -> float:
        """Returns M_k.

        Raises:
            KeyError: M_k is not tabulated.
        """
        index = as_half_integer(k)
        if index not in self.entries:
            raise KeyError(f"Moment M_{index} is not available (k_max = {self.k_max}).")
        return self.entries[index]

    def error(self, k: HalfInteger) -> float:
        """Returns the standard error of M_k, zero when none was recorded."""
        return self.errors.get(as_half_integer(k), 0.0)

    def log_convexity_violations(self, sigmas: float = MomentsConfig.AUDIT_SIGMAS.value) -> List[Fraction]:
        """Returns the interior k where M_k^2 <= M_{k-1/2} M_{k+1/2} fails beyond `sigmas` standard errors."""
        violations = []
        half = Fraction(1, 2)
        for k in sorted(self.entries):
            if k - half not in self.entries or k + half not in self.entries:
                continue
            lhs = self.entries[k] ** 2
            rhs = self.entries[k - half] * self.entries[k + half]
            spread = np.hypot(
                2.0 * self.entries[k] * self.error(k),
                np.hypot(self.entries[k + half] * self.error(k - half), self.entries[k - half] * self.error(k + half)),
            )
            if lhs - rhs > sigmas * spread + MomentsConfig.AUDIT_FLOAT_SLACK.value * max(1.0, rhs):
                violations.append(k)
        return violations

    def truncated(self, k_max: HalfInteger) -> "MomentVector":
        """Returns the entries up to k_max.

        Raises:
            ValueError: k_max beyond the tabulated range.
        """
        top = as_half_integer(k_max)
        if top > self.k_max:
            raise ValueError(f"Moments are tabulated up to k={self.k_max}; k_max={top} was requested.")
        return MomentVector(
            d=self.d,
            entries={k: v for k, v in self.entries.items() if k <= top},
            errors={k: v for k, v in self.errors.items() if k <= top},
        )

    def scaled_velocities(self, factor: float) -> "MomentVector":
        """Returns the moments of the velocity-rescaled law v -> factor * v."""
        return MomentVector(
            d=self.d,
            entries={k: factor ** float(2 * k) * v for k, v in self.entries.items()},
            errors={k: factor ** float(2 * k) * v for k, v in self.errors.items()},
        )

    def to_dict(self) -> Dict[str, Dict[str, float]]:
        """Returns {'values': {...}, 'errors': {...}} keyed by moment_key."""
        return {
            "values": {moment_key(k): self.entries[k] for k in sorted(self.entries)},
            "errors": {moment_key(k): self.error(k) for k in sorted(self.entries)},
        }


@dataclass
class RadialHistogram:
    """Defines shell masses over radial bin edges; the last edge may be infinite."""

    edges: np.ndarray
    masses: np.ndarray
    mass_errors: Optional[np.ndarray] = None

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        if self.edges.ndim != 1 or self.masses.shape != (self.edges.size - 1,):
            raise ValueError(f"{self.edges.size} edges do not bound {self.masses.shape} masses.")
        if np.any(np.diff(self.edges) <= 0.0) or self.edges[0] < 0.0:
            raise ValueError("Histogram edges must be non-negative and strictly increasing.")

    @property
    def n_bins(self) -> int:
        """Returns the number of shells."""
        return int(self.masses.size)

    def same_edges(self, edges: np.ndarray) -> bool:
        """Returns True if the edges coincide with the given ones."""
        return self.edges.shape == np.shape(edges) and bool(np.allclose(self.edges, edges, rtol=1e-12, atol=0.0))


@dataclass
class CoefficientSet:
    """Defines the collision-frequency functionals a, b and the drift coefficients A, B they induce.

    A = (alpha/2)(d b - (d+2) a) and B = (alpha/2)(b - a), so that d B - A = alpha a and
    (d+2) B - A = alpha b.
    """

    d: int
    alpha: float
    a: float
    b: float
    A: float
    B: float
    a_error: float = 0.0
    b_error: float = 0.0

    @classmethod
    def from_frequencies(
        cls, d: int, alpha: float, a: float, b: float, a_error: float = 0.0, b_error: float = 0.0
    ) -> "CoefficientSet":
        """Returns the set completed with A and B."""
        drift_b = 0.5 * alpha * (b - a)
        drift_a = 0.5 * alpha * (d * b - (d + 2) * a)
        return cls(d=d, alpha=alpha, a=a, b=b, A=drift_a, B=drift_b, a_error=a_error, b_error=b_error)

    def to_dict(self) -> Dict[str, float]:
        """Returns the coefficients and their errors."""
        return {
            "alpha": self.alpha,
            "a": self.a,
            "b": self.b,
            "A": self.A,
            "B": self.B,
            "a_error": self.a_error,
            "b_error": self.b_error,
        }


@typechecked
class MomentSource(ABC):
    """Defines an abstract base class for the objects moment functionals are evaluated on.

    Every source answers the same questions (moments, collision frequencies, collisional moments
    and shell masses) from its own representation: a density on a radial grid, a particle sample,
    or the Maxwellian in closed form.

    Args:
        d: velocity-space dimension.
        source_type: one of the MomentsConfig source types.

    Raises:
        ValueError: an unsupported source type.
    """

    def __init__(self, d: int, source_type: str):
        if not MomentsConfig.is_valid_source_type(source_type):
            raise ValueError(f"Source type '{source_type}' is not one of {MomentsConfig.SOURCE_TYPES.value}.")
        self.d = d
        self.source_type = source_type

    @property
    @abstractmethod
    def is_statistical(self) -> bool:
        """Returns True if values carry sampling error."""
        pass

    @abstractmethod
    def moment(self, k: HalfInteger) -> Tuple[float, float]:
        """Returns (M_k, standard error)."""
        pass

    @abstractmethod
    def collision_frequencies(self) -> Tuple[float, float, float, float]:
        """Returns (a, b, error of a, error of b)."""
        pass

    @abstractmethod
    def collision_moment(self, k: HalfInteger, alpha: float) -> Tuple[float, float]:
        """Returns (integral of the annihilation operator against |xi|^{2k}, standard error)."""
        pass

    @abstractmethod
    def bin_masses(self, edges: np.ndarray) -> np.ndarray:
        """Returns the mass in each shell [edges[i], edges[i+1])."""
        pass

    @abstractmethod
    def loss_profile(self) -> Tuple[np.ndarray, np.ndarray]:
        """Returns radii and L(f) evaluated there."""
        pass

    # SHARED OPERATIONS

    def moment_vector(self, k_max: HalfInteger) -> MomentVector:
        """Returns M_k for k = 0, 1/2, ..., k_max.

        Raises:
            ValueError: k_max above the supported maximum.
        """
        top = as_half_integer(k_max)
        if top > MomentsConfig.MAX_K.value:
            raise ValueError(f"k_max must be <= {MomentsConfig.MAX_K.value}, got {top}.")
        entries, errors = {}, {}
        for j in range(int(2 * top) + 1):
            k = Fraction(j, 2)
            entries[k], errors[k] = self.moment(k)
        return MomentVector(d=self.d, entries=entries, errors=errors)

    def histogram(self, edges: np.ndarray) -> RadialHistogram:
        """Returns the shell masses over the edges as a RadialHistogram."""
        return RadialHistogram(edges=np.asarray(edges, dtype=float), masses=self.bin_masses(np.asarray(edges, dtype=float)))
