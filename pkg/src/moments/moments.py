import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special
from typeguard import typechecked

from src.config.constants import MomentsConfig
from src.config.errors import ConfigurationError
from src.kinetics.kinematics import HalfInteger, as_half_integer, renormalize_velocities
from src.kinetics.radial_grid import RadialDistribution
from src.moments.moment_source import CoefficientSet, MomentSource, MomentVector, RadialHistogram
from src.moments.particle_source import ParticleSource
from src.moments.radial_source import MaxwellianSource, RadialSource

logger = logging.getLogger(__name__)


def as_moment_source(obj: Any) -> MomentSource:
    """Returns a MomentSource for a density, a particle sample, an ensemble or a source.

    Raises:
        TypeError: the object has no moment-source reading.
    """
    if isinstance(obj, MomentSource):
        return obj
    if isinstance(obj, RadialDistribution):
        return RadialSource(obj)
    if isinstance(obj, np.ndarray):
        return ParticleSource(obj)
    if hasattr(obj, "velocities"):
        return ParticleSource(np.asarray(obj.velocities))
    raise TypeError(f"Cannot compute moments of {type(obj).__name__}.")


@typechecked
def moments_of(f: Any, k_max: HalfInteger) -> MomentVector:
    """Returns M_k for k = 0, 1/2, ..., k_max (k_max at most 10).

    Radial densities are integrated by grid quadrature; particle samples are averaged with mass 1/N.

    Raises:
        ValueError: k_max above 10, or beyond the moments a steady profile carries.
    """
    if hasattr(f, "moments") and isinstance(getattr(f, "moments"), MomentVector):
        return f.moments.truncated(k_max)
    return as_moment_source(f).moment_vector(k_max)


@typechecked
def coefficients(f: Any, alpha: float) -> CoefficientSet:
    """Returns a = int Q-(f, f), b = (2/d) int |xi|^2 Q-(f, f) and the drift coefficients A, B.

    Raises:
        ValueError: alpha outside [0, 1] or f without positive mass.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}.")
    source = as_moment_source(f)
    mass, _ = source.moment(0)
    if mass <= 0.0:
        raise ValueError("Coefficients need a distribution with positive mass.")
    a, b, a_error, b_error = source.collision_frequencies()
    return CoefficientSet.from_frequencies(source.d, alpha, a, b, a_error, b_error)


@typechecked
def drift_bound_ratio(cs: CoefficientSet) -> float:
    """Returns (|A| + |B|) / alpha, NaN at alpha = 0."""
    if cs.alpha == 0.0:
        return float("nan")
    return (abs(cs.A) + abs(cs.B)) / cs.alpha


# BOUNDS AUDIT


@dataclass
class AuditCheck:
    """Defines one inequality lhs <= rhs with its slack and the tolerance it was judged with."""

    name: str
    lhs: float
    rhs: float
    slack: float
    tolerance: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _check(name: str, lhs: float, lhs_error: float, rhs: float, rhs_error: float) -> AuditCheck:
    tolerance = MomentsConfig.AUDIT_SIGMAS.value * math.hypot(lhs_error, rhs_error)
    tolerance += MomentsConfig.AUDIT_FLOAT_SLACK.value * max(1.0, abs(lhs), abs(rhs))
    slack = rhs - lhs
    return AuditCheck(name=name, lhs=lhs, rhs=rhs, slack=slack, tolerance=tolerance, passed=bool(slack >= -tolerance))


@typechecked
def audit_bounds(ms: MomentVector, cs: CoefficientSet, d: int) -> List[AuditCheck]:
    """Returns the collision-frequency inequalities evaluated with slack rhs - lhs.

    Statistical inputs pass within 3 combined standard errors; deterministic inputs within a float slack.

    Raises:
        ValueError: M_{1/2} or M_{3/2} missing.
    """
    for k in (Fraction(1, 2), Fraction(3, 2)):
        if k not in ms:
            raise ValueError(f"Bounds audit needs M_{k}; available k_max is {ms.k_max}.")
    half, half_err = ms.get(Fraction(1, 2)), ms.error(Fraction(1, 2))
    three, three_err = ms.get(Fraction(3, 2)), ms.error(Fraction(3, 2))
    a, a_err, b, b_err = cs.a, cs.a_error, cs.b, cs.b_error
    inverse = d * d / (4.0 * three)
    inverse_err = inverse * three_err / three
    return [
        _check("jensen_lower", half, half_err, a, a_err),
        _check("triangle_upper", a, a_err, 2.0 * half, 2.0 * half_err),
        _check("cauchy_schwarz_upper", a, a_err, math.sqrt(d), 0.0),
        _check("energy_frequency_lower", math.sqrt(d), 0.0, math.sqrt(2.0) * b, math.sqrt(2.0) * b_err),
        _check("b_lower", math.sqrt(d / 2.0), 0.0, b, b_err),
        _check("b_moment_lower", 2.0 / d * three, 2.0 / d * three_err, b, b_err),
        _check("b_moment_upper", b, b_err, 2.0 / d * three + half, math.hypot(2.0 / d * three_err, half_err)),
        _check("m3half_lower", (d / 2.0) ** 1.5, 0.0, three, three_err),
        _check("a_upper_sqrt2d", a, a_err, math.sqrt(2.0 * d), 0.0),
        _check("m_half_upper", half, half_err, math.sqrt(d / 2.0), 0.0),
        _check("a_lower_inverse_moment", inverse, inverse_err, a, a_err),
        _check("m_half_lower_inverse_moment", inverse, inverse_err, half, half_err),
    ]


# STEADY BALANCE


@typechecked
def steady_residual_with_error(f: Any, alpha: float, k: HalfInteger) -> Tuple[float, float]:
    """Returns the moment-balance residual alpha(k-1) a M_k - alpha k b M_k - int B_alpha(f, f)|xi|^{2k} and its error.

    Radial inputs use quadrature; particle inputs use the pair U-statistic with the angular
    average done exactly by Gauss-Jacobi quadrature.
    """
    index = float(as_half_integer(k))
    source = as_moment_source(f)
    moment, moment_error = source.moment(k)
    a, b, a_error, b_error = source.collision_frequencies()
    collisional, collisional_error = source.collision_moment(k, alpha)
    drift = alpha * ((index - 1.0) * a - index * b)
    residual = drift * moment - collisional
    if index in (0.0, 1.0) and source.is_statistical:
        return residual, 0.0
    error = math.sqrt(
        collisional_error**2
        + (drift * moment_error) ** 2
        + (alpha * (index - 1.0) * a_error * moment) ** 2
        + (alpha * index * b_error * moment) ** 2
    )
    return residual, error


@typechecked
def steady_residual(f: Any, alpha: float, k: HalfInteger) -> float:
    """Returns the signed moment-balance residual; small for a steady profile."""
    return steady_residual_with_error(f, alpha, k)[0]


# TAILS


@dataclass
class TailEstimate:
    """Defines the geometric bound K_hat on renormalized moments and the tail rate A_est = 1/K_hat."""

    K_hat: float
    A_est: float
    gamma: float
    k_range: Tuple[int, int]
    ratios: Dict[int, float] = field(default_factory=dict)
    growth_flag: bool = False
    noise_flag: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "K_hat": self.K_hat,
            "A_est": self.A_est,
            "gamma": self.gamma,
            "k_range": list(self.k_range),
            "growth_flag": self.growth_flag,
            "noise_flag": self.noise_flag,
        }


@typechecked
def tail_estimate(
    ms: MomentVector,
    k_range: Tuple[int, int] = MomentsConfig.TAIL_K_RANGE.value,
    gamma: float = MomentsConfig.TAIL_GAMMA.value,
) -> TailEstimate:
    """Returns K_hat = max_k (M_{k/2} / Gamma(k + gamma))^{1/k} over k in k_range, and A_est = 1/K_hat.

    The growth flag is raised when the maximum sits at the window end after a strictly increasing
    run; the noise flag when the moments used violate log-convexity or are dominated by their errors.

    Raises:
        ValueError: a moment of the window is missing, or gamma outside (0, 1).
    """
    low, high = k_range
    if not 1 <= low < high:
        raise ValueError(f"k_range must be an increasing pair of positive integers, got {k_range}.")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}.")
    ratios = {}
    for k in range(low, high + 1):
        index = Fraction(k, 2)
        if index not in ms:
            raise ValueError(f"Tail estimate over {k_range} needs M_{index}; k_max is {ms.k_max}.")
        ratios[k] = float(math.exp((math.log(ms.get(index)) - special.gammaln(k + gamma)) / k))
    values = [ratios[k] for k in range(low, high + 1)]
    K_hat = max(values)
    tail = values[-3:]
    growth = values.index(K_hat) == len(values) - 1 and all(later > earlier for earlier, later in zip(tail, tail[1:]))
    used = {Fraction(k, 2) for k in range(low, high + 1)}
    noisy = any(k in used for k in ms.log_convexity_violations()) or any(
        ms.error(k) > MomentsConfig.NOISE_RELATIVE_ERROR.value * ms.get(k) for k in used
    )
    if growth:
        logger.warning("Renormalized moments still grow at the end of k_range %s; tail estimate unreliable.", k_range)
    return TailEstimate(
        K_hat=K_hat,
        A_est=1.0 / K_hat,
        gamma=gamma,
        k_range=(low, high),
        ratios=ratios,
        growth_flag=bool(growth),
        noise_flag=bool(noisy),
    )


@typechecked
def tail_gamma_sensitivity(
    ms: MomentVector, gammas: Sequence[float] = (0.25, 0.5, 0.75), k_range: Tuple[int, int] = MomentsConfig.TAIL_K_RANGE.value
) -> Dict[float, float]:
    """Returns A_est for each gamma over one k window."""
    return {float(gamma): tail_estimate(ms, k_range, float(gamma)).A_est for gamma in gammas}


@typechecked
def exponential_moment(ms: MomentVector, a: float) -> float:
    """Returns the truncated series sum_j a^j / j! M_{j/2} approximating int f exp(a |xi|)."""
    top = int(2 * ms.k_max)
    return float(sum(a**j / math.factorial(j) * ms.get(Fraction(j, 2)) for j in range(top + 1)))


@typechecked
def concentration_constant(f: Any) -> float:
    """Returns min_r L(f)(r) / <r>, a measured lower bound of the collision frequency growth."""
    radii, loss = as_moment_source(f).loss_profile()
    return float(np.min(loss / np.sqrt(1.0 + radii**2)))


# WEIGHTED DISTANCES


@dataclass
class WeightedDistance:
    """Defines the discrete weighted L1 distance sum_bins |m_f - m_g| <r_c>^k exp(a r_c)."""

    a_weight: float
    k_weight: float
    value: float
    n_bins: int

    def to_dict(self) -> Dict[str, Any]:
        return {"a_weight": self.a_weight, "k_weight": self.k_weight, "value": self.value, "n_bins": self.n_bins}


@typechecked
def maxwellian_edges(d: int, n_bins: int) -> np.ndarray:
    """Returns shell edges carrying equal Maxwellian mass; the last edge is infinite."""
    quantiles = np.arange(1, n_bins) / n_bins
    inner = np.sqrt(special.gammaincinv(d / 2.0, quantiles))
    return np.concatenate([[0.0], inner, [np.inf]])


@typechecked
def representative_radii(edges: np.ndarray, d: int) -> np.ndarray:
    """Returns bin midpoints, and the Maxwellian mass-median radius for an open last bin."""
    lower, upper = edges[:-1], edges[1:]
    radii = 0.5 * (lower + upper)
    if np.isinf(upper[-1]):
        tail = special.gammaincc(d / 2.0, lower[-1] ** 2)
        median = math.sqrt(special.gammainccinv(d / 2.0, 0.5 * tail)) if tail > 0.0 else np.nan
        radii[-1] = median if np.isfinite(median) and median >= lower[-1] else lower[-1]
    return radii


def bin_weights(edges: np.ndarray, d: int, a_weight: float, k_weight: float) -> np.ndarray:
    """Returns <r_c>^k exp(a r_c) per bin."""
    radii = representative_radii(edges, d)
    return (1.0 + radii**2) ** (0.5 * k_weight) * np.exp(a_weight * radii)


def _default_edges(inputs: List[Any], d: int) -> np.ndarray:
    for item in inputs:
        if isinstance(item, RadialHistogram):
            return item.edges
        if hasattr(item, "histogram") and hasattr(item, "edges"):
            return np.asarray(item.edges)
    sources = [as_moment_source(item) for item in inputs]
    particles = [source for source in sources if isinstance(source, ParticleSource)]
    if particles:
        pooled = np.concatenate([source.speeds for source in particles])
        n_bins = int(math.ceil(pooled.size ** (1.0 / 3.0)))
        inner = np.quantile(pooled, np.arange(1, n_bins) / n_bins)
        return np.concatenate([[0.0], inner, [np.inf]])
    for source in sources:
        if isinstance(source, RadialSource) and not isinstance(source, MaxwellianSource):
            return source.grid.nodes.copy()
    return maxwellian_edges(d, MomentsConfig.ANALYTIC_BINS.value)


def as_histogram(obj: Any, edges: np.ndarray) -> RadialHistogram:
    """Returns the shell masses of obj over the edges.

    Raises:
        ValueError: a precomputed histogram whose edges differ from the requested ones.
    """
    if isinstance(obj, RadialHistogram):
        histogram = obj
    elif hasattr(obj, "histogram") and hasattr(obj, "edges"):
        histogram = obj.histogram()
    else:
        return as_moment_source(obj).histogram(edges)
    if not histogram.same_edges(edges):
        raise ValueError("Precomputed histogram edges differ from the comparison edges.")
    return histogram


def _check_truncation(inputs: List[Any], edges: np.ndarray, d: int, a_weight: float, k_weight: float) -> None:
    cutoffs = [float(edges[-1])] if np.isfinite(edges[-1]) else []
    for item in inputs:
        if isinstance(item, RadialDistribution):
            cutoffs.append(item.grid.r_max)
        elif isinstance(item, RadialSource) and not isinstance(item, MaxwellianSource):
            cutoffs.append(item.grid.r_max)
    for cutoff in cutoffs:
        weight = (1.0 + cutoff**2) ** (0.5 * k_weight) * math.exp(a_weight * cutoff)
        lost = weight * float(special.gammaincc(d / 2.0, cutoff**2))
        if lost > MomentsConfig.TRUNCATION_TOLERANCE.value:
            raise ConfigurationError(
                f"Weight exp({a_weight} r) <r>^{k_weight} is too large for truncation at r={cutoff:g}: "
                f"weighted Maxwellian tail {lost:.2e} exceeds {MomentsConfig.TRUNCATION_TOLERANCE.value:.0e}."
            )


@typechecked
def weighted_distance(
    f: Any, g: Any, a_weight: float, k_weight: float, edges: Optional[np.ndarray] = None
) -> WeightedDistance:
    """Returns the weighted L1 distance between two laws reduced to common radial shells.

    Default shells: the edges of a precomputed histogram input; equal-mass shells of the pooled
    particle speeds (ceil(N^{1/3}) of them) for particle inputs; the grid nodes for radial inputs.

    Raises:
        ValueError: negative weights.
        ConfigurationError: the weight is too large for the truncation radius of the comparison.
    """
    if a_weight < 0.0 or k_weight < 0.0:
        raise ValueError(f"Weights must be non-negative, got a={a_weight}, k={k_weight}.")
    d = _dimension_of(g) if isinstance(f, RadialHistogram) else _dimension_of(f)
    comparison = _default_edges([f, g], d) if edges is None else np.asarray(edges, dtype=float)
    _check_truncation([f, g], comparison, d, a_weight, k_weight)
    difference = np.abs(as_histogram(f, comparison).masses - as_histogram(g, comparison).masses)
    value = float(np.sum(difference * bin_weights(comparison, d, a_weight, k_weight)))
    return WeightedDistance(a_weight=a_weight, k_weight=k_weight, value=value, n_bins=int(comparison.size - 1))


def _dimension_of(obj: Any) -> int:
    if isinstance(obj, RadialHistogram):
        raise ValueError("Two bare histograms carry no dimension; compare a density, sample or profile.")
    if hasattr(obj, "d"):
        return int(obj.d)
    return as_moment_source(obj).d


@typechecked
def bootstrap_standard_error(samples: np.ndarray, resamples: int, seed: int) -> np.ndarray:
    """Returns the bootstrap standard error of the mean over the first axis (sub-windows or replicas)."""
    rng = np.random.default_rng(seed)
    count = samples.shape[0]
    picks = rng.integers(0, count, size=(resamples, count))
    means = samples[picks].mean(axis=1)
    return means.std(axis=0, ddof=1)


@typechecked
def noise_floor(
    n_particles: int,
    d: int,
    edges: np.ndarray,
    a_weight: float,
    k_weight: float,
    seed: int,
    replicas: int,
) -> Tuple[float, float]:
    """Returns mean and spread of the weighted distance between renormalized Maxwellian samples and the Maxwellian."""
    reference = MaxwellianSource(d)
    values = []
    for child in np.random.SeedSequence(seed).spawn(replicas):
        rng = np.random.default_rng(child)
        sample = renormalize_velocities(rng.normal(scale=math.sqrt(0.5), size=(n_particles, d)))
        values.append(weighted_distance(sample, reference, a_weight, k_weight, edges=edges).value)
    return float(np.mean(values)), float(np.std(values, ddof=1))
