import math

import numpy as np
import pytest

from src.config.errors import ConfigurationError
from src.kinetics.radial_grid import RadialDistribution, RadialGrid, radial_distribution_from_function
from src.kinetics.radial_ops import (
    GainQuadrature,
    annihilation_apply,
    collision_integrals,
    gain_direct,
    gain_nodes,
    gamma_b_direct,
    loss_intensity_nodes,
    loss_kernel,
    maxwellian,
)


def _shell(grid: RadialGrid) -> RadialDistribution:
    return radial_distribution_from_function(grid, lambda r: np.exp(-np.square(r - 1.2) / 0.3), normalize=True)


def test_loss_kernel_limits_in_three_dimensions() -> None:
    assert loss_kernel(3, 0.0, 1.7) == pytest.approx(1.7)
    assert loss_kernel(3, 2.1, 0.0) == pytest.approx(2.1)
    assert loss_kernel(3, 1.0, 1.0) == pytest.approx(4.0 / 3.0)


@pytest.mark.parametrize("d", [2, 4])
def test_loss_kernel_is_symmetric_and_bounded(d: int) -> None:
    r, s = 0.8, 1.9
    value = loss_kernel(d, r, s)
    assert value == pytest.approx(loss_kernel(d, s, r), rel=1e-10)
    assert abs(r - s) <= value <= r + s
    assert loss_kernel(d, 0.0, s) == pytest.approx(s, rel=1e-10)


def test_loss_kernel_matches_direction_average_in_four_dimensions(rng: np.random.Generator) -> None:
    directions = rng.standard_normal((400_000, 4))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    samples = np.linalg.norm(np.array([1.1, 0.0, 0.0, 0.0]) - 0.6 * directions, axis=1)
    error = samples.std(ddof=1) / math.sqrt(samples.size)
    assert abs(loss_kernel(4, 1.1, 0.6) - samples.mean()) <= 4.0 * error


def test_maxwellian_refuses_a_lossy_grid() -> None:
    with pytest.raises(ConfigurationError, match="increase r_max"):
        maxwellian(RadialGrid(d=3, n_nodes=48, r_max=2.0))


def test_gain_quadrature_minimum_order() -> None:
    with pytest.raises(ConfigurationError):
        GainQuadrature(3, 6.0, relative_order=4)


def test_gain_balances_loss_for_the_maxwellian(maxwellian_3d: RadialDistribution) -> None:
    gain = gain_nodes(maxwellian_3d, maxwellian_3d)
    loss = maxwellian_3d.values * loss_intensity_nodes(maxwellian_3d)
    assert np.max(np.abs(gain - loss)) <= 5e-3 * loss.max()


@pytest.mark.parametrize("power", [0.0, 2.0])
def test_collision_integrals_conserve_mass_and_energy(grid: RadialGrid, power: float) -> None:
    gain, loss = collision_integrals(_shell(grid), power)
    assert gain == pytest.approx(loss, rel=1e-2)


def test_gain_direct_validates_radius_and_grids(maxwellian_3d: RadialDistribution) -> None:
    with pytest.raises(ValueError, match="outside"):
        gain_direct(maxwellian_3d, maxwellian_3d, 6.5)
    other = maxwellian(RadialGrid(d=3, n_nodes=56, r_max=6.0))
    with pytest.raises(ValueError, match="one grid"):
        gain_direct(maxwellian_3d, other, 1.0)


def test_annihilation_operator_balances_mass_loss(grid: RadialGrid) -> None:
    f = _shell(grid)
    alpha = 0.2
    field = annihilation_apply(f, alpha)
    assert field.signed
    gain, loss = collision_integrals(f)
    assert field.mass() == pytest.approx((1.0 - alpha) * gain - loss, rel=1e-10)
    assert field.mass() == pytest.approx(-alpha * loss, rel=5e-2)


def test_full_annihilation_is_pure_loss(maxwellian_3d: RadialDistribution) -> None:
    field = annihilation_apply(maxwellian_3d, 1.0)
    np.testing.assert_allclose(field.values, -maxwellian_3d.values * loss_intensity_nodes(maxwellian_3d))
    with pytest.raises(ValueError):
        annihilation_apply(maxwellian_3d, -0.1)


def test_gamma_b_direct_domain(maxwellian_3d: RadialDistribution) -> None:
    with pytest.raises(ValueError, match="positive"):
        gamma_b_direct(maxwellian_3d, 0.0)
    assert gamma_b_direct(maxwellian_3d, 6.0) == 0.0
    assert gamma_b_direct(maxwellian_3d, 1.0) > 0.0


def test_gamma_b_direct_closed_form_for_the_maxwellian(maxwellian_3d: RadialDistribution) -> None:
    # d=3: (2/r) * M(r) * int_0^inf rho exp(-rho^2) drho = M(r) / r
    r = 1.0
    expected = math.pi**-1.5 * math.exp(-r * r) / r
    assert gamma_b_direct(maxwellian_3d, r) == pytest.approx(expected, rel=5e-3)
