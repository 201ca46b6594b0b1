import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import scipy.linalg
from typeguard import typechecked

from src.config.constants import QuadratureConfig
from src.config.errors import ConfigurationError, EigenSolverError
from src.kinetics.kinematics import sphere_area
from src.kinetics.radial_grid import RadialGrid
from src.kinetics.radial_ops import loss_kernel, maxwellian_density

logger = logging.getLogger(__name__)


def maxwellian_gain_kernel(r: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Returns k(r, s) with Q+(h, M)(r) = int_0^inf k(r, s) h(s) ds for isotropic h in d=3.

    From the hyperplane representation with a Maxwellian inside the plane integral,

        k(r, s) = 2 / sqrt(pi) * (s / r) * int_{|r-s|}^{r+s} exp(-(r^2 - s^2 + p^2)^2 / (4 p^2)) dp,

    and k(0, s) = 4 s / sqrt(pi).
    """
    r_arr, s_arr = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(s, dtype=float))
    nodes, weights = np.polynomial.legendre.leggauss(QuadratureConfig.MAXWELLIAN_KERNEL_ORDER.value)
    low = np.abs(r_arr - s_arr)[..., None]
    high = (r_arr + s_arr)[..., None]
    p = low + 0.5 * (high - low) * (nodes + 1.0)
    p_safe = np.where(p > 0.0, p, 1.0)
    shift = (r_arr * r_arr - s_arr * s_arr)[..., None]
    integrand = np.where(p > 0.0, np.exp(-np.square(shift + p * p) / (4.0 * p_safe * p_safe)), 0.0)
    integral = 0.5 * (high - low)[..., 0] * (integrand @ weights)
    r_safe = np.where(r_arr > 0.0, r_arr, 1.0)
    general = 2.0 / math.sqrt(math.pi) * s_arr / r_safe * integral
    return np.where(r_arr > 0.0, general, 4.0 * s_arr / math.sqrt(math.pi))


@dataclass
class LinearizedMatrix:
    """Defines the nodal matrix of the linearized operator L(h) = Q(M, h) + Q(h, M) on isotropic functions.

    Column j holds L applied to the j-th hat function, evaluated at every node. `gain` and `loss`
    keep the two parts separately.
    """

    grid: RadialGrid
    matrix: np.ndarray
    gain: np.ndarray
    loss: np.ndarray

    def __post_init__(self):
        n = self.grid.n_nodes
        if self.matrix.shape != (n, n):
            raise ValueError(f"Linearized matrix shape {self.matrix.shape} does not match {n} grid nodes.")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("Linearized matrix has non-finite entries.")

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Returns L applied to the hat interpolant of nodal values, at the nodes."""
        return self.matrix @ values

    def null_residuals(self) -> dict:
        """Returns ||L M|| and ||L |xi|^2 M|| relative to ||L|| ||vector||."""
        nodes = self.grid.nodes
        mass = maxwellian_density(self.grid.d, nodes)
        scale = float(np.linalg.norm(self.matrix, 2))
        result = {}
        for name, vector in (("mass", mass), ("energy", nodes**2 * mass)):
            result[name] = float(np.linalg.norm(self.matrix @ vector) / (scale * np.linalg.norm(vector)))
        return result

    def asymmetry(self, radius: float = QuadratureConfig.SYMMETRY_RADIUS.value) -> float:
        """Returns ||S - S^T|| / ||S + S^T|| for S = D L D^{-1}, D = diag(sqrt(w / M)), over nodes 0 < r <= radius."""
        nodes = self.grid.nodes
        keep = (nodes > 0.0) & (nodes <= radius)
        weight = np.sqrt(self.grid.weights[keep] / maxwellian_density(self.grid.d, nodes[keep]))
        block = self.matrix[np.ix_(keep, keep)]
        conjugated = weight[:, None] * block / weight[None, :]
        return float(np.linalg.norm(conjugated - conjugated.T) / np.linalg.norm(conjugated + conjugated.T))


@typechecked
def assemble_linearized(
    grid: RadialGrid, element_order: int = QuadratureConfig.ELEMENT_ORDER.value
) -> LinearizedMatrix:
    """Returns the hat-basis matrix of the linearized operator on the grid.

    Q+(M, h) = Q+(h, M) for the constant hard-sphere angular kernel, so the gain part is twice
    the Maxwellian gain kernel integrated against each hat. The loss part is
    M(r) L(h)(r) + h(r) L(M)(r). Integrals in s run element by element with Gauss-Legendre rules,
    which keeps the kernel kinks at nodes.

    Args:
        grid: the radial grid, three-dimensional, at most 128 nodes.
        element_order: Gauss-Legendre points per grid element.

    Raises:
        ConfigurationError: too many nodes for dense assembly or a dimension other than 3.
    """
    if grid.n_nodes > QuadratureConfig.MAX_LINEARIZED_NODES.value:
        raise ConfigurationError(
            f"Dense linearized assembly is limited to {QuadratureConfig.MAX_LINEARIZED_NODES.value} nodes, "
            f"got {grid.n_nodes}."
        )
    if grid.d != 3:
        raise ConfigurationError(f"Linearized assembly uses the three-dimensional Maxwellian kernel, got d={grid.d}.")
    nodes = grid.nodes
    n = grid.n_nodes
    points, point_weights = np.polynomial.legendre.leggauss(element_order)
    lower, width = nodes[:-1], np.diff(nodes)
    s = lower[:, None] + 0.5 * width[:, None] * (points + 1.0)
    ds = 0.5 * width[:, None] * point_weights
    right_share = (s - lower[:, None]) / width[:, None]
    left_share = 1.0 - right_share

    def hat_integrals(kernel: np.ndarray) -> np.ndarray:
        weighted = kernel * ds[None, :, :]
        columns = np.zeros((n, n))
        columns[:, :-1] += np.sum(weighted * left_share[None, :, :], axis=2)
        columns[:, 1:] += np.sum(weighted * right_share[None, :, :], axis=2)
        return columns

    gain = 2.0 * hat_integrals(maxwellian_gain_kernel(nodes[:, None, None], s[None, :, :]))
    loss_weight = loss_kernel(grid.d, nodes[:, None, None], s[None, :, :]) * sphere_area(grid.d) * s[None, :, :] ** (grid.d - 1)
    loss_of_hats = hat_integrals(loss_weight)
    collision_frequency = np.sum(loss_weight * ds[None, :, :] * maxwellian_density(grid.d, s)[None, :, :], axis=(1, 2))
    loss = maxwellian_density(grid.d, nodes)[:, None] * loss_of_hats + np.diag(collision_frequency)
    logger.debug("Assembled linearized operator on %r.", grid)
    return LinearizedMatrix(grid=grid, matrix=gain - loss, gain=gain, loss=loss)


@typechecked
def spectrum(mat: LinearizedMatrix) -> List[complex]:
    """Returns all eigenvalues of the matrix sorted by real part, descending.

    Raises:
        EigenSolverError: the dense eigensolver did not converge.
    """
    try:
        values = scipy.linalg.eigvals(mat.matrix)
    except (np.linalg.LinAlgError, ValueError) as error:
        logger.error("Eigen-decomposition failed on %r: %s", mat.grid, error)
        raise EigenSolverError(
            f"Eigen-decomposition failed for n={mat.grid.n_nodes}: {error}; "
            f"matrix norm {np.linalg.norm(mat.matrix):.3e}, diagonal range "
            f"[{mat.matrix.diagonal().min():.3e}, {mat.matrix.diagonal().max():.3e}]"
        ) from error
    order = np.lexsort((-values.imag, -values.real))
    return [complex(value) for value in values[order]]


@dataclass
class SpectrumReport:
    """Defines the summary of one linearized spectrum: kernel, gap and discretization diagnostics."""

    n_nodes: int
    eigenvalues: List[complex]
    null_tolerance: float
    kernel_dimension: int
    gap: float
    asymmetry: float
    mass_residual: float
    energy_residual: float

    def to_dict(self) -> dict:
        """Returns the scalar summary (eigenvalues excluded)."""
        return {
            "n": self.n_nodes,
            "kernel_dimension": self.kernel_dimension,
            "gap": self.gap,
            "null_tolerance": self.null_tolerance,
            "asymmetry": self.asymmetry,
            "mass_residual": self.mass_residual,
            "energy_residual": self.energy_residual,
            "near_zero": [abs(value) for value in self.eigenvalues[: self.kernel_dimension]],
        }


@typechecked
def refinement_null_tolerance(coarse: List[complex], fine: List[complex]) -> float:
    """Returns the kernel tolerance for |lambda|: 10 times the drift of the smallest-modulus eigenvalues
    between a coarse and a refined spectrum.

    Raises:
        ValueError: a spectrum shorter than the expected kernel.
    """
    size = QuadratureConfig.KERNEL_DIMENSION.value
    if min(len(coarse), len(fine)) < size:
        raise ValueError(f"Both spectra need at least {size} eigenvalues, got {len(coarse)} and {len(fine)}.")
    near_coarse = sorted(abs(value) for value in coarse)[:size]
    near_fine = sorted(abs(value) for value in fine)[:size]
    drift = max(abs(a - b) for a, b in zip(near_coarse, near_fine))
    return QuadratureConfig.NULL_DRIFT_FACTOR.value * drift


@typechecked
def analyze_spectrum(
    mat: LinearizedMatrix, null_tolerance: Optional[float] = None, values: Optional[List[complex]] = None
) -> SpectrumReport:
    """Returns the kernel dimension (eigenvalues with |lambda| <= tolerance) and the gap nu = -max Re over the rest.

    Args:
        mat: the assembled operator.
        null_tolerance: kernel tolerance; the fixed default applies when None.
        values: eigenvalues already computed for `mat`.
    """
    tolerance = QuadratureConfig.NULL_TOLERANCE.value if null_tolerance is None else null_tolerance
    values = spectrum(mat) if values is None else values
    near_zero = [value for value in values if abs(value) <= tolerance]
    rest = [value for value in values if abs(value) > tolerance]
    gap = -max(value.real for value in rest) if rest else float("nan")
    residuals = mat.null_residuals()
    ordered = sorted(near_zero, key=abs) + rest
    return SpectrumReport(
        n_nodes=mat.grid.n_nodes,
        eigenvalues=ordered,
        null_tolerance=tolerance,
        kernel_dimension=len(near_zero),
        gap=float(gap),
        asymmetry=mat.asymmetry(),
        mass_residual=residuals["mass"],
        energy_residual=residuals["energy"],
    )
