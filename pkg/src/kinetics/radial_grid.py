import json
import logging
from typing import Callable, Dict, Union

import numpy as np
import pandas as pd
from scipy.interpolate import PchipInterpolator
from typeguard import typechecked

from src.config.constants import KinematicsConfig, RadialGridConfig
from src.kinetics.kinematics import HalfInteger, as_half_integer, sphere_area

logger = logging.getLogger(__name__)


@typechecked
class RadialGrid:
    """Defines a stretched radial grid carrying the quadrature weights of isotropic integrals.

    Nodes are r_j = r_max * (j / (n - 1))**stretch. The weights integrate phi(|xi|) over R^d by the
    trapezoid rule in the uniform variable s = j / (n - 1), so that

        sum_j w_j phi(r_j) ~ |S^{d-1}| * integral phi(r) r^(d-1) dr.

    Args:
        d: velocity-space dimension.
        n_nodes: number of nodes, at least 8.
        r_max: truncation radius.
        stretch: exponent of the node map, at least 1.
    """

    def __init__(
        self,
        d: int = RadialGridConfig.DEFAULT_DIMENSION.value,
        n_nodes: int = RadialGridConfig.DEFAULT_NODES.value,
        r_max: float = RadialGridConfig.DEFAULT_R_MAX.value,
        stretch: float = RadialGridConfig.DEFAULT_STRETCH.value,
    ):
        if d < KinematicsConfig.MIN_DIMENSION.value:
            raise ValueError(f"Dimension must be >= {KinematicsConfig.MIN_DIMENSION.value}, got {d}.")
        if n_nodes < RadialGridConfig.MIN_NODES.value:
            raise ValueError(f"A radial grid needs at least {RadialGridConfig.MIN_NODES.value} nodes, got {n_nodes}.")
        if r_max <= 0.0:
            raise ValueError(f"r_max must be positive, got {r_max}.")
        if stretch < 1.0:
            raise ValueError(f"stretch must be >= 1, got {stretch}.")
        self.d = d
        self.n_nodes = n_nodes
        self.r_max = float(r_max)
        self.stretch = float(stretch)
        s = np.linspace(0.0, 1.0, n_nodes)
        self.nodes = self.r_max * s**self.stretch
        jacobian = self.r_max * self.stretch * s ** (self.stretch - 1.0)
        step = 1.0 / (n_nodes - 1)
        trapezoid = np.full(n_nodes, step)
        trapezoid[[0, -1]] *= 0.5
        self.weights = sphere_area(d) * trapezoid * self.nodes ** (d - 1) * jacobian

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RadialGrid):
            return NotImplemented
        return self.metadata() == other.metadata()

    def __repr__(self) -> str:
        return f"RadialGrid(d={self.d}, n_nodes={self.n_nodes}, r_max={self.r_max}, stretch={self.stretch})"

    def integrate(self, values: np.ndarray) -> float:
        """Returns the quadrature of an isotropic function given by its nodal values."""
        return float(self.weights @ values)

    def metadata(self) -> Dict[str, Union[int, float]]:
        """Returns the grid description stored next to serialized distributions."""
        return {"d": self.d, "n": self.n_nodes, "r_max": self.r_max, "stretch": self.stretch}

    @classmethod
    def from_metadata(cls, metadata: Dict[str, Union[int, float]]) -> "RadialGrid":
        """Returns the grid described by `metadata()` output."""
        return cls(
            d=int(metadata["d"]),
            n_nodes=int(metadata["n"]),
            r_max=float(metadata["r_max"]),
            stretch=float(metadata["stretch"]),
        )


@typechecked
class RadialDistribution:
    """Defines an isotropic function of velocity sampled on a RadialGrid.

    Densities are non-negative. Operator outputs such as the annihilation operator field are
    signed and are built with `signed=True`. Off-node values come from a monotone cubic (PCHIP)
    interpolant, are zero beyond r_max, and are clipped at zero for densities.
    """

    def __init__(self, grid: RadialGrid, values: np.ndarray, signed: bool = False):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_nodes,):
            raise ValueError(f"Expected {grid.n_nodes} nodal values, got shape {values.shape}.")
        if not np.all(np.isfinite(values)):
            raise ValueError("Radial distribution values must be finite.")
        if not signed and np.any(values < 0.0):
            raise ValueError(f"Density values must be non-negative, minimum is {values.min():.3e}.")
        self.grid = grid
        self.values = values
        self.signed = signed
        self._interpolant = None

    # EVALUATION

    def evaluate(self, r: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """Returns the interpolated value at radius (or array of radii) r."""
        radii = np.asarray(r, dtype=float)
        if self._interpolant is None:
            self._interpolant = PchipInterpolator(self.grid.nodes, self.values, extrapolate=False)
        result = self._interpolant(np.abs(radii))
        result = np.where(np.isnan(result), 0.0, result)
        if not self.signed:
            negative = result < 0.0
            clipped = float(-np.sum(result[negative]))
            if clipped > 0.0:
                logger.warning("Clipped negative interpolant mass %.3e at %d radii.", clipped, int(negative.sum()))
                result = np.where(negative, 0.0, result)
            else:
                logger.debug("Clipped negative interpolant mass 0.")
        if np.ndim(result) == 0:
            return float(result)
        return result

    def moment(self, k: HalfInteger) -> float:
        """Returns M_k = integral f |xi|^{2k} dxi by grid quadrature."""
        exponent = 2.0 * float(as_half_integer(k))
        return self.grid.integrate(self.values * self.grid.nodes**exponent)

    def mass(self) -> float:
        """Returns integral f dxi."""
        return self.grid.integrate(self.values)

    def energy(self) -> float:
        """Returns integral f |xi|^2 dxi."""
        return self.moment(1)

    def scaled(self, factor: float) -> "RadialDistribution":
        """Returns factor * f on the same grid."""
        return RadialDistribution(self.grid, factor * self.values, signed=self.signed or factor < 0)

    # SERIALIZATION

    def to_frame(self) -> pd.DataFrame:
        """Returns the nodal values as a DataFrame with columns r, f."""
        return pd.DataFrame({"r": self.grid.nodes, "f": self.values}, columns=RadialGridConfig.CSV_COLUMNS.value)

    def to_csv(self, path: str) -> None:
        """Writes the nodal values as CSV with header `r,f`."""
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    def to_json(self, path: str) -> None:
        """Writes the grid metadata and nodal values as JSON."""
        payload = {"grid": self.grid.metadata(), "signed": self.signed, "values": [float(v) for v in self.values]}
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, path: str) -> "RadialDistribution":
        """Returns the distribution written by `to_json`."""
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
        grid = RadialGrid.from_metadata(payload["grid"])
        return cls(grid, np.array(payload["values"], dtype=float), signed=bool(payload.get("signed", False)))

    @classmethod
    def from_csv(cls, path: str, grid: RadialGrid) -> "RadialDistribution":
        """Returns the distribution written by `to_csv`, checked against the given grid.

        Raises:
            ValueError: the CSV nodes do not match the grid.
        """
        frame = pd.read_csv(path, float_precision="round_trip")
        if list(frame.columns) != RadialGridConfig.CSV_COLUMNS.value:
            raise ValueError(f"Expected columns {RadialGridConfig.CSV_COLUMNS.value}, got {list(frame.columns)}.")
        if len(frame) != grid.n_nodes or not np.allclose(frame["r"].to_numpy(), grid.nodes, rtol=1e-12, atol=0):
            raise ValueError(f"CSV nodes at '{path}' do not match {grid!r}.")
        return cls(grid, frame["f"].to_numpy(dtype=float))


@typechecked
def radial_distribution_from_function(
    grid: RadialGrid, fn: Callable[[np.ndarray], np.ndarray], normalize: bool = False
) -> RadialDistribution:
    """Returns fn sampled at the grid nodes, rescaled to unit mass when `normalize` is set."""
    values = np.asarray(fn(grid.nodes), dtype=float)
    distribution = RadialDistribution(grid, values)
    if normalize:
        mass = distribution.mass()
        if mass <= 0.0:
            raise ValueError("Cannot normalize a distribution with zero mass.")
        distribution = RadialDistribution(grid, values / mass)
    return distribution
