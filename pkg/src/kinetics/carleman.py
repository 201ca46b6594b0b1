import logging
import math
from typing import NamedTuple, Tuple

import numpy as np
from typeguard import typechecked

from src.config.constants import QuadratureConfig
from src.kinetics.kinematics import sample_unit_sphere, sphere_area
from src.kinetics.radial_grid import RadialDistribution, RadialGrid

logger = logging.getLogger(__name__)


class MonteCarloEstimate(NamedTuple):
    """Monte Carlo estimate, its standard error and the number of degenerate draws that were resampled."""

    estimate: float
    std_error: float
    resampled: int = 0


def hyperplane_kernel(d: int, distance: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Returns the hard-sphere Carleman kernel 2^{d-1} s^{3-d} / (rho |S^{d-1}|) with s = distance."""
    return 2.0 ** (d - 1) * distance ** (3 - d) / (rho * sphere_area(d))


class _RadialProposal:
    """Samples |w| cell by cell from a piecewise-constant envelope of g(r) r^{d-1}."""

    def __init__(self, g: RadialDistribution):
        grid = g.grid
        lower, upper = grid.nodes[:-1], grid.nodes[1:]
        shell = g.values * grid.nodes ** (grid.d - 1)
        cell_mass = 0.5 * (shell[:-1] + shell[1:]) * (upper - lower)
        self.total = float(cell_mass.sum())
        self.lower = lower
        self.width = upper - lower
        self.probabilities = cell_mass / self.total if self.total > 0 else cell_mass
        self.g = g

    def sample(self, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """Returns n radii and their importance weights g(r) |S^{d-1}| r^{d-1} / p(r)."""
        cells = rng.choice(self.probabilities.size, size=n, p=self.probabilities)
        radii = self.lower[cells] + self.width[cells] * rng.random(n)
        density = self.probabilities[cells] / self.width[cells]
        d = self.g.grid.d
        weights = self.g.evaluate(radii) * sphere_area(d) * radii ** (d - 1) / density
        return radii, weights


def _plane_integrand(
    f: RadialDistribution, v: np.ndarray, w: np.ndarray, tau: float, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Returns one-draw estimates of the hyperplane integral for each row pair (v, w), plus rho."""
    d = v.shape[1]
    difference = v - w
    rho = np.linalg.norm(difference, axis=1)
    normal = difference / np.where(rho > 0.0, rho, 1.0)[:, None]
    along = np.sum(v * normal, axis=1)
    anchor = v - along[:, None] * normal
    draw = tau * rng.standard_normal(v.shape)
    free = draw - np.sum(draw * normal, axis=1)[:, None] * normal
    free_sq = np.sum(free * free, axis=1)
    proposal = (2.0 * math.pi * tau * tau) ** (-(d - 1) / 2.0) * np.exp(-0.5 * free_sq / (tau * tau))
    z = anchor + free
    distance = np.sqrt(np.sum(z * z, axis=1) + rho * rho)
    target = np.sqrt(along * along + free_sq)
    value = hyperplane_kernel(d, distance, np.where(rho > 0.0, rho, 1.0)) * f.evaluate(target) / proposal
    return value, rho


def _proposal_scale(f: RadialDistribution) -> float:
    mass = f.mass()
    per_coordinate = f.energy() / (f.grid.d * mass)
    return math.sqrt(QuadratureConfig.PROPOSAL_VARIANCE_FACTOR.value * per_coordinate)


def _validate_samples(samples: int) -> None:
    if samples < QuadratureConfig.CARLEMAN_MIN_SAMPLES.value:
        raise ValueError(f"Carleman estimates need at least {QuadratureConfig.CARLEMAN_MIN_SAMPLES.value} samples, got {samples}.")


@typechecked
def gain_carleman_mc(
    f: RadialDistribution, g: RadialDistribution, r: float, samples: int, seed: int
) -> MonteCarloEstimate:
    """Returns a Monte Carlo estimate of Q+(g, f)(r) from the hyperplane (Carleman) representation.

        Q+(g, f)(v) = int g(w) int_{z perp (v - w)} B(z - v + w, |v - w|) f(v - z) dz dw

    |w| is drawn from a cell-wise envelope of g, its direction uniformly; z is a Gaussian draw
    projected on the hyperplane. Draws with |v - w| below the degeneracy threshold are redrawn and counted.

    Args:
        f: density inside the hyperplane integral.
        g: density of the outer variable w.
        r: radius |v|.
        samples: number of draws, at least 10^4.
        seed: seed of the private random stream.

    Raises:
        ValueError: too few samples, negative r, or densities on different grids.
    """
    _validate_samples(samples)
    if r < 0.0:
        raise ValueError(f"Radius must be non-negative, got {r}.")
    if f.grid != g.grid:
        raise ValueError("Carleman estimate needs both densities on one grid.")
    if f.mass() <= 0.0 or g.mass() <= 0.0:
        return MonteCarloEstimate(0.0, 0.0, 0)
    rng = np.random.default_rng(seed)
    proposal = _RadialProposal(g)
    tau = _proposal_scale(f)
    d = f.grid.d
    v_row = np.zeros(d)
    v_row[0] = r
    threshold = QuadratureConfig.DEGENERATE_SEPARATION.value
    chunk = QuadratureConfig.CARLEMAN_CHUNK.value
    total, total_sq, resampled, drawn = 0.0, 0.0, 0, 0
    while drawn < samples:
        n = min(chunk, samples - drawn)
        radii, weights = proposal.sample(n, rng)
        w = radii[:, None] * sample_unit_sphere(n, d, rng)
        degenerate = np.linalg.norm(v_row - w, axis=1) < threshold
        while np.any(degenerate):
            count = int(degenerate.sum())
            resampled += count
            new_radii, new_weights = proposal.sample(count, rng)
            w[degenerate] = new_radii[:, None] * sample_unit_sphere(count, d, rng)
            weights[degenerate] = new_weights
            degenerate = np.linalg.norm(v_row - w, axis=1) < threshold
        values, _ = _plane_integrand(f, np.broadcast_to(v_row, w.shape).copy(), w, tau, rng)
        values = values * weights
        total += float(values.sum())
        total_sq += float(np.dot(values, values))
        drawn += n
    if resampled:
        logger.info("Carleman estimate at r=%.4g resampled %d degenerate draws.", r, resampled)
    return _summarize(total, total_sq, samples, resampled)


@typechecked
def gamma_b_mc(f: RadialDistribution, r: float, samples: int, seed: int) -> MonteCarloEstimate:
    """Returns a Monte Carlo estimate of Q+(delta_0, f)(r): the Carleman sampler with w fixed at the origin.

    Raises:
        ValueError: too few samples or r not positive.
    """
    _validate_samples(samples)
    if r <= 0.0:
        raise ValueError(f"Gamma_B f is evaluated at positive radii only, got {r}.")
    if f.mass() <= 0.0:
        return MonteCarloEstimate(0.0, 0.0, 0)
    rng = np.random.default_rng(seed)
    tau = _proposal_scale(f)
    d = f.grid.d
    chunk = QuadratureConfig.CARLEMAN_CHUNK.value
    total, total_sq, drawn = 0.0, 0.0, 0
    while drawn < samples:
        n = min(chunk, samples - drawn)
        v = np.zeros((n, d))
        v[:, 0] = r
        values, _ = _plane_integrand(f, v, np.zeros((n, d)), tau, rng)
        total += float(values.sum())
        total_sq += float(np.dot(values, values))
        drawn += n
    return _summarize(total, total_sq, samples, 0)


def _summarize(total: float, total_sq: float, samples: int, resampled: int) -> MonteCarloEstimate:
    mean = total / samples
    variance = max(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
    return MonteCarloEstimate(mean, math.sqrt(variance / samples), resampled)


@typechecked
def spike_density(grid: RadialGrid, width: float) -> RadialDistribution:
    """Returns a unit-mass Gaussian of the given width centered at the origin (the delta_0 proxy)."""
    values = np.exp(-np.square(grid.nodes / width))
    distribution = RadialDistribution(grid, values)
    return distribution.scaled(1.0 / distribution.mass())
