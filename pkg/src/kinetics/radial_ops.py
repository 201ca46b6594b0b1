import logging
import math
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np
from scipy import integrate, special
from typeguard import typechecked

from src.config.constants import QuadratureConfig, RadialGridConfig
from src.config.errors import ConfigurationError
from src.kinetics.kinematics import sphere_area
from src.kinetics.radial_grid import RadialDistribution, RadialGrid

logger = logging.getLogger(__name__)


@typechecked
def maxwellian_density(d: int, r: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Returns the normalized Maxwellian pi^{-d/2} exp(-r^2) at radius r."""
    value = math.pi ** (-d / 2.0) * np.exp(-np.square(r))
    return float(value) if np.ndim(value) == 0 else value


@typechecked
def maxwellian(grid: RadialGrid) -> RadialDistribution:
    """Returns the normalized Maxwellian sampled on the grid nodes.

    Raises:
        ConfigurationError: the grid loses more than the allowed mass to truncation or discretization.
    """
    distribution = RadialDistribution(grid, maxwellian_density(grid.d, grid.nodes))
    deficit = abs(1.0 - distribution.mass())
    if deficit > RadialGridConfig.MASS_DEFICIT_TOLERANCE.value:
        raise ConfigurationError(
            f"{grid!r} reproduces the Maxwellian mass only to {deficit:.2e}; "
            f"increase r_max or n_nodes (tolerance {RadialGridConfig.MASS_DEFICIT_TOLERANCE.value:.0e})."
        )
    return distribution


# LOSS TERM


@lru_cache(maxsize=None)
def jacobi_rule(order: int, d: int) -> Tuple[np.ndarray, np.ndarray]:
    exponent = (d - 3) / 2.0
    nodes, weights = special.roots_jacobi(order, exponent, exponent)
    return nodes, weights


@typechecked
def loss_kernel(d: int, r: Union[float, np.ndarray], r_prime: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Returns K_d(r, r'), the average of |xi - xi_*| over relative orientations at |xi|=r, |xi_*|=r'.

    For d=3 this is ((r + r')^3 - |r - r'|^3) / (6 r r'), with K(r, 0) = r and K(0, r') = r'.
    Other dimensions use Gauss-Jacobi quadrature in the cosine of the angle.
    """
    r_arr, rp_arr = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(r_prime, dtype=float))
    if d == 3:
        product = r_arr * rp_arr
        safe = np.where(product > 0.0, product, 1.0)
        closed = ((r_arr + rp_arr) ** 3 - np.abs(r_arr - rp_arr) ** 3) / (6.0 * safe)
        value = np.where(product > 0.0, closed, r_arr + rp_arr)
    else:
        nodes, weights = jacobi_rule(QuadratureConfig.LOSS_KERNEL_ORDER.value, d)
        squared = r_arr[..., None] ** 2 + rp_arr[..., None] ** 2 - 2.0 * r_arr[..., None] * rp_arr[..., None] * nodes
        value = np.sqrt(np.maximum(squared, 0.0)) @ weights / weights.sum()
    return float(value) if np.ndim(value) == 0 else value


@typechecked
def loss_intensity_nodes(f: RadialDistribution, radii: Optional[np.ndarray] = None) -> np.ndarray:
    """Returns L(f) at the given radii (default: the grid nodes) by the one-dimensional reduction."""
    grid = f.grid
    targets = grid.nodes if radii is None else np.asarray(radii, dtype=float)
    kernel = loss_kernel(grid.d, targets[:, None], grid.nodes[None, :])
    return kernel @ (grid.weights * f.values)


@typechecked
def loss_intensity(f: RadialDistribution, r: float) -> float:
    """Returns L(f)(r) = integral |xi - xi_*| f(xi_*) dxi_* at |xi| = r.

    Raises:
        ValueError: r is negative.
    """
    if r < 0.0:
        raise ValueError(f"Radius must be non-negative, got {r}.")
    return float(loss_intensity_nodes(f, np.array([r]))[0])


# GAIN TERM


@typechecked
class GainQuadrature:
    """Defines the tensor Gauss rule for the gain term Q+(g, f) at a fixed |v| = r.

    With relative velocity u = v - v_* and center w = v - u/2, the integrand depends on
    |u|, c = cos(u, v) and x = sigma . w/|w| only:

        Q+(g, f)(r) = |S^{d-2}| int_0^inf |u|^d int (1-c^2)^{(d-3)/2}
                      <g(|v'|) f(|v'_*|)>_x dc d|u|,

    where |w|^2 = r^2 + |u|^2/4 - r|u|c and |v'|^2, |v'_*|^2 = |w|^2 + |u|^2/4 +- |u||w|x.
    |u| uses Gauss-Legendre on [0, r + sqrt(2) r_max]; c and x use Gauss-Jacobi rules.

    Args:
        d: dimension.
        r_max: truncation radius of the densities the rule is applied to.
        relative_order: Gauss-Legendre points in |u|.
        angle_order: Gauss-Jacobi points in each of c and x.

    Raises:
        ConfigurationError: an order below the minimum of 8 points per axis.
    """

    def __init__(
        self,
        d: int,
        r_max: float,
        relative_order: int = QuadratureConfig.RELATIVE_SPEED_ORDER.value,
        angle_order: int = QuadratureConfig.ANGLE_ORDER.value,
    ):
        minimum = QuadratureConfig.MIN_ORDER.value
        if relative_order < minimum or angle_order < minimum:
            raise ConfigurationError(
                f"Gain quadrature needs at least {minimum} points per axis, "
                f"got relative_order={relative_order}, angle_order={angle_order}."
            )
        self.d = d
        self.r_max = float(r_max)
        self.relative_order = relative_order
        self.angle_order = angle_order
        self._legendre = np.polynomial.legendre.leggauss(relative_order)
        self._cosine = jacobi_rule(angle_order, d)
        x_nodes, x_weights = jacobi_rule(angle_order, d)
        self._sigma = (x_nodes, x_weights / x_weights.sum())
        self._prefactor = sphere_area(d - 1)

    @classmethod
    def for_grid(cls, grid: RadialGrid, relative_order: Optional[int] = None, angle_order: Optional[int] = None) -> "GainQuadrature":
        """Returns the rule sized for densities living on the grid."""
        return cls(
            grid.d,
            grid.r_max,
            relative_order or QuadratureConfig.RELATIVE_SPEED_ORDER.value,
            angle_order or QuadratureConfig.ANGLE_ORDER.value,
        )

    def rule(self, r: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns flat arrays (|v'|, |v'_*|, weight) of the quadrature points at |v| = r."""
        upper = r + math.sqrt(2.0) * self.r_max
        speed = 0.5 * upper * (self._legendre[0] + 1.0)
        speed_weight = 0.5 * upper * self._legendre[1] * speed**self.d
        cosine, cosine_weight = self._cosine
        x, x_weight = self._sigma
        u = speed[:, None, None]
        c = cosine[None, :, None]
        center_sq = np.maximum(r * r + 0.25 * u * u - r * u * c, 0.0)
        cross = u * np.sqrt(center_sq) * x[None, None, :]
        base = center_sq + 0.25 * u * u
        s_prime = np.sqrt(np.maximum(base + cross, 0.0))
        s_star = np.sqrt(np.maximum(base - cross, 0.0))
        weight = self._prefactor * speed_weight[:, None, None] * cosine_weight[None, :, None] * x_weight[None, None, :]
        return s_prime.ravel(), s_star.ravel(), np.broadcast_to(weight, s_prime.shape).ravel()


@typechecked
def gain_direct(
    f: RadialDistribution, g: RadialDistribution, r: float, quadrature: Optional[GainQuadrature] = None
) -> float:
    """Returns Q+(g, f)(r), with g evaluated at v' and f at v'_*.

    Args:
        f: density entering at v'_*.
        g: density entering at v'.
        r: radius in [0, r_max].
        quadrature: the tensor rule; built from f's grid with default orders when omitted.

    Raises:
        ValueError: r outside the grid range or f and g on different grids.
        ConfigurationError: a quadrature order below the minimum.
    """
    if f.grid != g.grid:
        raise ValueError(f"Gain term needs both densities on one grid, got {f.grid!r} and {g.grid!r}.")
    if not 0.0 <= r <= f.grid.r_max:
        raise ValueError(f"Radius {r} lies outside [0, {f.grid.r_max}].")
    rule = quadrature or GainQuadrature.for_grid(f.grid)
    s_prime, s_star, weight = rule.rule(r)
    return float(np.sum(weight * g.evaluate(s_prime) * f.evaluate(s_star)))


@typechecked
def gain_nodes(
    f: RadialDistribution, g: RadialDistribution, quadrature: Optional[GainQuadrature] = None
) -> np.ndarray:
    """Returns Q+(g, f) at every grid node."""
    rule = quadrature or GainQuadrature.for_grid(f.grid)
    return np.array([gain_direct(f, g, float(r), rule) for r in f.grid.nodes])


@typechecked
def annihilation_apply(
    f: RadialDistribution, alpha: float, quadrature: Optional[GainQuadrature] = None
) -> RadialDistribution:
    """Returns the signed nodal field (1 - alpha) Q+(f, f) - f L(f).

    Raises:
        ValueError: alpha outside [0, 1].
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}.")
    loss = f.values * loss_intensity_nodes(f)
    if alpha == 1.0:
        return RadialDistribution(f.grid, -loss, signed=True)
    gain = gain_nodes(f, f, quadrature)
    return RadialDistribution(f.grid, (1.0 - alpha) * gain - loss, signed=True)


@typechecked
def collision_integrals(
    f: RadialDistribution, weight_power: float = 0.0, quadrature: Optional[GainQuadrature] = None
) -> Tuple[float, float]:
    """Returns (int Q+(f, f) |xi|^p, int Q-(f, f) |xi|^p) for p = weight_power by grid quadrature."""
    weights = f.grid.nodes**weight_power
    gain = f.grid.integrate(gain_nodes(f, f, quadrature) * weights)
    loss = f.grid.integrate(f.values * loss_intensity_nodes(f) * weights)
    return gain, loss


# CARLEMAN SPIKE LIMIT


@typechecked
def gamma_b_direct(f: RadialDistribution, r: float) -> float:
    """Returns Q+(delta_0, f)(r) for hard spheres by one-dimensional adaptive quadrature.

    Gamma_B f(r) = |S^{d-2}| 2^{d-1} / (r |S^{d-1}|) int_0^inf s^{3-d} f(s) rho^{d-2} drho, s^2 = r^2 + rho^2.

    Raises:
        ValueError: r is not positive.
    """
    if r <= 0.0:
        raise ValueError(f"Gamma_B f is evaluated at positive radii only, got {r}.")
    d = f.grid.d
    if r >= f.grid.r_max:
        return 0.0
    reach = math.sqrt(f.grid.r_max**2 - r * r)

    def integrand(rho: float) -> float:
        s = math.sqrt(r * r + rho * rho)
        return s ** (3 - d) * f.evaluate(s) * rho ** (d - 2)

    breakpoints = [math.sqrt(max(node * node - r * r, 0.0)) for node in f.grid.nodes if r < node < f.grid.r_max]
    value, _ = integrate.quad(integrand, 0.0, reach, points=breakpoints[:50] or None, limit=200)
    return sphere_area(d - 1) * 2 ** (d - 1) / (r * sphere_area(d)) * value
