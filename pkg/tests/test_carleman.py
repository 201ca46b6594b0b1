import numpy as np
import pytest

from src.kinetics.carleman import gain_carleman_mc, gamma_b_mc, spike_density
from src.kinetics.radial_grid import RadialDistribution
from src.kinetics.radial_ops import GainQuadrature, gain_direct, gamma_b_direct


def test_too_few_samples_are_refused(maxwellian_3d: RadialDistribution) -> None:
    with pytest.raises(ValueError, match="at least"):
        gain_carleman_mc(maxwellian_3d, maxwellian_3d, 1.0, 5000, 1)
    with pytest.raises(ValueError, match="at least"):
        gamma_b_mc(maxwellian_3d, 1.0, 5000, 1)


def test_invalid_radii_are_refused(maxwellian_3d: RadialDistribution) -> None:
    with pytest.raises(ValueError):
        gain_carleman_mc(maxwellian_3d, maxwellian_3d, -0.5, 20_000, 1)
    with pytest.raises(ValueError, match="positive"):
        gamma_b_mc(maxwellian_3d, 0.0, 20_000, 1)


def test_zero_density_gives_zero_estimate(maxwellian_3d: RadialDistribution) -> None:
    empty = RadialDistribution(maxwellian_3d.grid, np.zeros(maxwellian_3d.grid.n_nodes))
    estimate = gain_carleman_mc(empty, maxwellian_3d, 1.0, 20_000, 3)
    assert estimate.estimate == 0.0 and estimate.std_error == 0.0


def test_estimates_are_reproducible_from_the_seed(maxwellian_3d: RadialDistribution) -> None:
    first = gain_carleman_mc(maxwellian_3d, maxwellian_3d, 0.8, 20_000, 11)
    second = gain_carleman_mc(maxwellian_3d, maxwellian_3d, 0.8, 20_000, 11)
    assert first == second
    assert first.std_error > 0.0


def test_spike_density_has_unit_mass(grid) -> None:
    assert spike_density(grid, 0.3).mass() == pytest.approx(1.0)


@pytest.mark.slow
@pytest.mark.parametrize("r", [0.3, 1.4, 2.4])
def test_carleman_estimate_agrees_with_direct_quadrature(maxwellian_3d: RadialDistribution, r: float) -> None:
    direct = gain_direct(maxwellian_3d, maxwellian_3d, r, GainQuadrature.for_grid(maxwellian_3d.grid))
    estimate = gain_carleman_mc(maxwellian_3d, maxwellian_3d, r, 400_000, 7)
    assert abs(estimate.estimate - direct) <= 3.0 * estimate.std_error


@pytest.mark.slow
def test_gamma_b_estimate_agrees_with_direct_quadrature(maxwellian_3d: RadialDistribution) -> None:
    direct = gamma_b_direct(maxwellian_3d, 1.0)
    estimate = gamma_b_mc(maxwellian_3d, 1.0, 400_000, 5)
    assert abs(estimate.estimate - direct) <= 3.0 * estimate.std_error
