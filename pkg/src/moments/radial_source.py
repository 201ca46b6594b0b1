import math
from typing import Optional, Tuple

import numpy as np
from scipy import special
from typeguard import typechecked

from src.config.constants import MomentsConfig, QuadratureConfig
from src.kinetics.kinematics import HalfInteger, as_half_integer, gaussian_moment, sphere_area
from src.kinetics.radial_grid import RadialDistribution, RadialGrid
from src.kinetics.radial_ops import GainQuadrature, gain_nodes, loss_intensity_nodes, maxwellian
from src.moments.moment_source import MomentSource


@typechecked
class RadialSource(MomentSource):
    """Evaluates moment functionals of a density on a radial grid by deterministic quadrature.

    Args:
        distribution: the density.
        quadrature: the gain rule; built from the grid with default orders when omitted.
    """

    def __init__(
        self,
        distribution: RadialDistribution,
        quadrature: Optional[GainQuadrature] = None,
        source_type: str = MomentsConfig.SOURCE_TYPE_RADIAL.value,
    ):
        super().__init__(d=distribution.grid.d, source_type=source_type)
        self.distribution = distribution
        self._quadrature = quadrature
        self._loss_values = None
        self._gain_values = None

    @property
    def is_statistical(self) -> bool:
        return False

    @property
    def grid(self) -> RadialGrid:
        """Returns the grid of the density."""
        return self.distribution.grid

    @property
    def loss_values(self) -> np.ndarray:
        """Returns L(f) at the grid nodes."""
        if self._loss_values is None:
            self._loss_values = loss_intensity_nodes(self.distribution)
        return self._loss_values

    @property
    def gain_values(self) -> np.ndarray:
        """Returns Q+(f, f) at the grid nodes."""
        if self._gain_values is None:
            rule = self._quadrature or GainQuadrature.for_grid(self.grid)
            self._gain_values = gain_nodes(self.distribution, self.distribution, rule)
        return self._gain_values

    def moment(self, k: HalfInteger) -> Tuple[float, float]:
        return self.distribution.moment(k), 0.0

    def collision_frequencies(self) -> Tuple[float, float, float, float]:
        loss = self.distribution.values * self.loss_values
        a = self.grid.integrate(loss)
        b = 2.0 / self.d * self.grid.integrate(loss * self.grid.nodes**2)
        return a, b, 0.0, 0.0

    def collision_moment(self, k: HalfInteger, alpha: float) -> Tuple[float, float]:
        weight = self.grid.nodes ** (2.0 * float(as_half_integer(k)))
        loss = self.grid.integrate(self.distribution.values * self.loss_values * weight)
        if alpha == 1.0:
            return -loss, 0.0
        gain = self.grid.integrate(self.gain_values * weight)
        return (1.0 - alpha) * gain - loss, 0.0

    def bin_masses(self, edges: np.ndarray) -> np.ndarray:
        points, weights = np.polynomial.legendre.leggauss(QuadratureConfig.ANGLE_ORDER.value)
        lower = np.minimum(edges[:-1], self.grid.r_max)
        upper = np.minimum(edges[1:], self.grid.r_max)
        half = 0.5 * (upper - lower)
        radii = lower[:, None] + half[:, None] * (points + 1.0)
        shell = self.distribution.evaluate(radii) * sphere_area(self.d) * radii ** (self.d - 1)
        return (shell * weights).sum(axis=1) * half

    def loss_profile(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.grid.nodes, self.loss_values


@typechecked
class MaxwellianSource(RadialSource):
    """Evaluates moment functionals of the normalized Maxwellian, in closed form where one exists.

    Collisional moments and the loss profile fall back to quadrature on a reference grid.
    """

    def __init__(self, d: int, grid: Optional[RadialGrid] = None):
        reference = grid or RadialGrid(d=d, n_nodes=MomentsConfig.MAXWELLIAN_REFERENCE_NODES.value)
        super().__init__(maxwellian(reference), source_type=MomentsConfig.SOURCE_TYPE_MAXWELLIAN.value)

    def moment(self, k: HalfInteger) -> Tuple[float, float]:
        return gaussian_moment(self.d, k), 0.0

    def collision_frequencies(self) -> Tuple[float, float, float, float]:
        d = self.d
        log_norm = special.gammaln(d / 2.0)
        first = math.sqrt(2.0) * math.exp(special.gammaln((d + 1) / 2.0) - log_norm)
        third = 2.0**1.5 * math.exp(special.gammaln((d + 3) / 2.0) - log_norm)
        return first, 2.0 / d * (d * first + third) / 4.0, 0.0, 0.0

    def collision_moment(self, k: HalfInteger, alpha: float) -> Tuple[float, float]:
        weight = self.grid.nodes ** (2.0 * float(as_half_integer(k)))
        loss = self.grid.integrate(self.distribution.values * self.loss_values * weight)
        return -alpha * loss, 0.0

    def bin_masses(self, edges: np.ndarray) -> np.ndarray:
        upper_tail = special.gammaincc(self.d / 2.0, np.square(edges))
        return upper_tail[:-1] - upper_tail[1:]
