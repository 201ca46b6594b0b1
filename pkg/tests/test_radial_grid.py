import logging

import numpy as np
import pytest

from src.kinetics.kinematics import gaussian_moment
from src.kinetics.radial_grid import RadialDistribution, RadialGrid, radial_distribution_from_function


@pytest.mark.parametrize(
    "kwargs",
    [{"d": 1}, {"n_nodes": 4}, {"r_max": 0.0}, {"stretch": 0.5}],
)
def test_grid_rejects_invalid_arguments(kwargs) -> None:
    with pytest.raises(ValueError):
        RadialGrid(**kwargs)


def test_grid_nodes_span_the_range(grid: RadialGrid) -> None:
    assert grid.nodes[0] == 0.0
    assert grid.nodes[-1] == pytest.approx(6.0)
    assert np.all(np.diff(grid.nodes) > 0.0)
    assert np.all(grid.weights >= 0.0)


def test_grid_equality_follows_metadata(grid: RadialGrid) -> None:
    assert grid == RadialGrid.from_metadata(grid.metadata())
    assert grid != RadialGrid(d=3, n_nodes=49, r_max=6.0)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_maxwellian_moments_on_grid(maxwellian_3d: RadialDistribution, k: int) -> None:
    assert maxwellian_3d.moment(k) == pytest.approx(gaussian_moment(3, k), rel=1e-3)


def test_distribution_rejects_negative_density(grid: RadialGrid) -> None:
    values = np.zeros(grid.n_nodes)
    values[3] = -1.0
    with pytest.raises(ValueError, match="non-negative"):
        RadialDistribution(grid, values)
    assert RadialDistribution(grid, values, signed=True).values[3] == -1.0


def test_distribution_rejects_wrong_shape(grid: RadialGrid) -> None:
    with pytest.raises(ValueError):
        RadialDistribution(grid, np.ones(grid.n_nodes + 1))


def test_evaluate_interpolates_and_vanishes_beyond_range(maxwellian_3d: RadialDistribution) -> None:
    at_node = maxwellian_3d.grid.nodes[10]
    assert maxwellian_3d.evaluate(float(at_node)) == pytest.approx(maxwellian_3d.values[10])
    assert maxwellian_3d.evaluate(7.0) == 0.0
    between = maxwellian_3d.evaluate(np.array([0.75, 1.25]))
    np.testing.assert_allclose(between, np.pi**-1.5 * np.exp(-np.array([0.75, 1.25]) ** 2), rtol=5e-3)


def test_scaled_keeps_grid_and_sign(maxwellian_3d: RadialDistribution) -> None:
    doubled = maxwellian_3d.scaled(2.0)
    assert doubled.mass() == pytest.approx(2.0 * maxwellian_3d.mass())
    assert maxwellian_3d.scaled(-1.0).signed


def test_csv_and_json_round_trip(tmp_path, maxwellian_3d: RadialDistribution) -> None:
    csv_path, json_path = str(tmp_path / "f.csv"), str(tmp_path / "f.json")
    maxwellian_3d.to_csv(csv_path)
    maxwellian_3d.to_json(json_path)
    from_csv = RadialDistribution.from_csv(csv_path, maxwellian_3d.grid)
    from_json = RadialDistribution.from_json(json_path)
    np.testing.assert_array_equal(from_csv.values, maxwellian_3d.values)
    assert from_json.grid == maxwellian_3d.grid
    np.testing.assert_array_equal(from_json.values, maxwellian_3d.values)


def test_csv_on_a_different_grid_is_refused(tmp_path, maxwellian_3d: RadialDistribution) -> None:
    path = str(tmp_path / "f.csv")
    maxwellian_3d.to_csv(path)
    with pytest.raises(ValueError, match="do not match"):
        RadialDistribution.from_csv(path, RadialGrid(d=3, n_nodes=48, r_max=5.0))


def test_from_function_normalizes(grid: RadialGrid) -> None:
    shell = radial_distribution_from_function(grid, lambda r: np.exp(-np.square(r - 1.5) / 0.2), normalize=True)
    assert shell.mass() == pytest.approx(1.0)
    with pytest.raises(ValueError, match="zero mass"):
        radial_distribution_from_function(grid, np.zeros_like, normalize=True)


def test_csv_round_trip_is_exact_for_arbitrary_values(tmp_path, grid: RadialGrid) -> None:
    values = np.random.default_rng(7).random(grid.n_nodes) / 3.0
    path = str(tmp_path / "random.csv")
    RadialDistribution(grid, values).to_csv(path)
    np.testing.assert_array_equal(RadialDistribution.from_csv(path, grid).values, values)


def test_clipped_interpolant_mass_is_logged_as_warning(maxwellian_3d: RadialDistribution, caplog) -> None:
    maxwellian_3d._interpolant = lambda r: np.full_like(r, -0.25)
    with caplog.at_level(logging.WARNING, logger="src.kinetics.radial_grid"):
        values = maxwellian_3d.evaluate(np.array([0.5, 1.0]))
    np.testing.assert_array_equal(values, 0.0)
    assert "mass 5.000e-01 at 2 radii" in caplog.text
