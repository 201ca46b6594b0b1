import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from typeguard import typechecked

from src.config.settings import RunConfig
from src.kinetics.carleman import gain_carleman_mc, gamma_b_mc
from src.kinetics.kinematics import (
    alpha_thresholds,
    gaussian_moment,
    post_collision_batch,
    povzner_coefficient,
    povzner_table,
    sample_unit_sphere,
)
from src.kinetics.radial_grid import RadialDistribution, RadialGrid, radial_distribution_from_function
from src.kinetics.radial_ops import (
    GainQuadrature,
    collision_integrals,
    gain_direct,
    gain_nodes,
    gamma_b_direct,
    loss_intensity_nodes,
    loss_kernel,
    maxwellian,
)
from src.moments.moment_source import CoefficientSet
from src.moments.moments import audit_bounds, coefficients, steady_residual, tail_estimate
from src.moments.radial_source import MaxwellianSource

logger = logging.getLogger(__name__)

CheckOutcome = Tuple[bool, str]

ORACLE_RADII = (0.3, 0.8, 1.4, 2.0, 2.8)


@dataclass
class CheckResult:
    """Defines the outcome of one named validation check."""

    name: str
    passed: bool
    detail: str

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _shell_density(grid: RadialGrid) -> RadialDistribution:
    return radial_distribution_from_function(grid, lambda r: np.exp(-np.square(r - 1.2) / 0.3), normalize=True)


@typechecked
class ValidationSuite:
    """Runs the fast acceptance checks of the kinetic building blocks.

    Every check is a method named `check_<name>` returning (passed, detail). A check that raises is
    recorded as failed with the exception message and the remaining checks still run.

    Args:
        config: supplies the grid, quadrature orders and Monte Carlo sample counts.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.seed = config.solver.seed
        self._grid = None
        self._maxwellian = None
        self._quadrature = None

    @property
    def grid(self) -> RadialGrid:
        """Returns the three-dimensional grid of the deterministic checks."""
        if self._grid is None:
            settings = self.config.grid
            self._grid = RadialGrid(d=3, n_nodes=settings.n_nodes, r_max=settings.r_max, stretch=settings.stretch)
        return self._grid

    @property
    def maxwellian(self) -> RadialDistribution:
        if self._maxwellian is None:
            self._maxwellian = maxwellian(self.grid)
        return self._maxwellian

    @property
    def quadrature(self) -> GainQuadrature:
        if self._quadrature is None:
            settings = self.config.grid
            self._quadrature = GainQuadrature.for_grid(self.grid, settings.relative_order, settings.angle_order)
        return self._quadrature

    # REGISTRY

    def names(self) -> List[str]:
        """Returns the names of all checks, alphabetically."""
        return [name[len("check_") :] for name in dir(self) if name.startswith("check_")]

    def run(self, name_filter: Optional[str] = None) -> List[CheckResult]:
        """Runs every check whose name contains `name_filter` (all checks when None)."""
        results = []
        for name in self.names():
            if name_filter and name_filter not in name:
                continue
            check: Callable[[], CheckOutcome] = getattr(self, f"check_{name}")
            try:
                passed, detail = check()
            except Exception as error:
                logger.error("Check %s raised %s: %s", name, type(error).__name__, error)
                passed, detail = False, f"{type(error).__name__}: {error}"
            logger.info("Check %-28s %s  %s", name, "PASS" if passed else "FAIL", detail)
            results.append(CheckResult(name=name, passed=bool(passed), detail=detail))
        return results

    @staticmethod
    def summary_frame(results: List[CheckResult]) -> pd.DataFrame:
        """Returns the results as a table."""
        return pd.DataFrame([result.to_dict() for result in results], columns=["name", "passed", "detail"])

    # KINEMATICS

    def check_povzner_anchor(self) -> CheckOutcome:
        rho = povzner_coefficient(3, Fraction(3, 2))
        alpha0 = alpha_thresholds(3).alpha0
        passed = bool(abs(rho - 0.8) <= 1e-10 and abs(alpha0 - 2.0 / 7.0) <= 1e-10)
        return passed, f"rho_3/2={rho:.12f}, alpha0={alpha0:.12f}"

    def check_povzner_table(self) -> CheckOutcome:
        table = povzner_table(3, 5)
        return bool(table.is_decreasing_after_one() and abs(table[1] - 1.0) <= 1e-12), f"rho_1={table[1]:.12f}"

    def check_povzner_closed_form(self) -> CheckOutcome:
        gaps = [
            abs(povzner_coefficient(3, k) - povzner_coefficient(3, k, closed_form=False))
            for k in (Fraction(1, 2), 1, Fraction(3, 2), 2, 3)
        ]
        return bool(max(gaps) <= 1e-8), f"max deviation {max(gaps):.2e}"

    def check_kinematic_conservation(self) -> CheckOutcome:
        rng = np.random.default_rng(self.seed)
        worst = 0.0
        for d in (2, 3, 4):
            v, w = rng.normal(size=(100_000, d)), rng.normal(size=(100_000, d))
            v_prime, w_prime = post_collision_batch(v, w, sample_unit_sphere(100_000, d, rng))
            scale = np.sum(v * v + w * w, axis=1)
            momentum = np.linalg.norm(v_prime + w_prime - v - w, axis=1) / np.sqrt(scale)
            energy = np.abs(np.sum(v_prime**2 + w_prime**2, axis=1) - scale) / scale
            worst = max(worst, float(momentum.max()), float(energy.max()))
        return bool(worst <= 1e-12), f"max relative defect {worst:.2e}"

    # RADIAL OPERATORS

    def check_loss_kernel_oracle(self) -> CheckOutcome:
        rng = np.random.default_rng(self.seed)
        directions = sample_unit_sphere(400_000, 3, rng)
        worst = 0.0
        for r, r_prime in ((0.5, 1.5), (1.0, 1.0), (2.0, 0.7)):
            samples = np.linalg.norm(np.array([r, 0.0, 0.0]) - r_prime * directions, axis=1)
            error = samples.std(ddof=1) / math.sqrt(samples.size)
            worst = max(worst, float(abs(float(loss_kernel(3, r, r_prime)) - samples.mean()) / error))
        return bool(worst <= 4.0), f"max deviation {worst:.2f} standard errors"

    def check_maxwellian_grid_moments(self) -> CheckOutcome:
        deviations = [
            abs(self.maxwellian.moment(k) - gaussian_moment(3, k)) / gaussian_moment(3, k) for k in (0, 1, 2)
        ]
        return bool(max(deviations) <= 1e-3), f"max relative deviation {max(deviations):.2e}"

    def check_equilibrium_identity(self) -> CheckOutcome:
        gain = gain_nodes(self.maxwellian, self.maxwellian, self.quadrature)
        loss = self.maxwellian.values * loss_intensity_nodes(self.maxwellian)
        relative = np.abs(gain - loss) / loss.max()
        return bool(relative.max() <= 5e-3), f"max node-wise gap {relative.max():.2e} of the peak loss"

    def check_collisional_identities(self) -> CheckOutcome:
        f = _shell_density(self.grid)
        gaps = []
        for power in (0.0, 2.0):
            gain, loss = collision_integrals(f, power, self.quadrature)
            gaps.append(float(abs(gain - loss) / loss))
        return bool(max(gaps) <= 1e-2), f"mass gap {gaps[0]:.2e}, energy gap {gaps[1]:.2e}"

    def check_carleman_oracle(self) -> CheckOutcome:
        samples = self.config.study.carleman_samples
        worst = 0.0
        for index, density in enumerate((self.maxwellian, _shell_density(self.grid))):
            for r in ORACLE_RADII:
                direct = gain_direct(density, density, r, self.quadrature)
                estimate = gain_carleman_mc(density, density, r, samples, self.seed + index)
                bound = 3.0 * estimate.std_error
                worst = max(worst, float(abs(estimate.estimate - direct) / bound))
        return bool(worst <= 1.0), f"worst deviation {worst:.2f} of the 3-sigma bound"

    def check_gamma_b_oracle(self) -> CheckOutcome:
        samples = self.config.study.carleman_samples
        worst = 0.0
        for r in ORACLE_RADII[1:4]:
            direct = gamma_b_direct(self.maxwellian, r)
            estimate = gamma_b_mc(self.maxwellian, r, samples, self.seed)
            worst = max(worst, float(abs(estimate.estimate - direct) / (3.0 * estimate.std_error)))
        return bool(worst <= 1.0), f"worst deviation {worst:.2f} of the 3-sigma bound"

    # MOMENTS

    def check_coefficient_identities(self) -> CheckOutcome:
        cs = CoefficientSet.from_frequencies(3, 0.1, 1.6, 1.9)
        first = abs(3 * cs.B - cs.A - cs.alpha * cs.a)
        second = abs(5 * cs.B - cs.A - cs.alpha * cs.b)
        return bool(max(first, second) <= 1e-12), f"identity defects {first:.1e}, {second:.1e}"

    def check_maxwellian_audit(self) -> CheckOutcome:
        source = MaxwellianSource(3)
        checks = audit_bounds(source.moment_vector(2), coefficients(source, 0.1), 3)
        failed = [check.name for check in checks if not check.passed]
        return not failed, f"failed: {failed}" if failed else f"{len(checks)} inequalities hold"

    def check_maxwellian_tail(self) -> CheckOutcome:
        estimate = tail_estimate(MaxwellianSource(3).moment_vector(4))
        passed = bool(estimate.A_est > 0.0 and not estimate.noise_flag)
        return passed, f"A_est={estimate.A_est:.4f}"

    def check_elastic_residual(self) -> CheckOutcome:
        scale = self.grid.integrate(self.maxwellian.values * loss_intensity_nodes(self.maxwellian) * self.grid.nodes**3)
        residual = steady_residual(self.maxwellian, 0.0, Fraction(3, 2))
        return bool(abs(residual) <= 5e-3 * scale), f"residual {residual:.2e} against scale {scale:.3f}"
