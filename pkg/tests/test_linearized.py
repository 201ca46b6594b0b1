import numpy as np
import pytest

from src.config.errors import ConfigurationError
from src.kinetics.linearized import (
    LinearizedMatrix,
    analyze_spectrum,
    assemble_linearized,
    refinement_null_tolerance,
    spectrum,
)
from src.kinetics.radial_grid import RadialGrid


@pytest.fixture(scope="module")
def operator() -> LinearizedMatrix:
    return assemble_linearized(RadialGrid(d=3, n_nodes=48, r_max=6.0))


def test_assembly_refuses_other_dimensions() -> None:
    with pytest.raises(ConfigurationError, match="d=2"):
        assemble_linearized(RadialGrid(d=2, n_nodes=24, r_max=6.0))


def test_assembly_refuses_large_grids() -> None:
    with pytest.raises(ConfigurationError, match="limited"):
        assemble_linearized(RadialGrid(d=3, n_nodes=129, r_max=6.0))


def test_matrix_shape_is_checked() -> None:
    grid = RadialGrid(d=3, n_nodes=16, r_max=6.0)
    with pytest.raises(ValueError, match="does not match"):
        LinearizedMatrix(grid=grid, matrix=np.zeros((15, 15)), gain=np.zeros((15, 15)), loss=np.zeros((15, 15)))


def test_collision_invariants_lie_near_the_kernel(operator: LinearizedMatrix) -> None:
    residuals = operator.null_residuals()
    assert residuals["mass"] < 0.05
    assert residuals["energy"] < 0.05


def test_spectrum_is_sorted_by_real_part(operator: LinearizedMatrix) -> None:
    values = spectrum(operator)
    assert len(values) == 48
    real = [value.real for value in values]
    assert real == sorted(real, reverse=True)


def test_kernel_is_two_dimensional_with_a_gap(operator: LinearizedMatrix) -> None:
    report = analyze_spectrum(operator)
    assert report.kernel_dimension == 2
    assert report.gap > 0.0
    summary = report.to_dict()
    assert summary["n"] == 48
    assert len(summary["near_zero"]) == 2


def test_refinement_tolerance_is_ten_times_the_near_zero_drift() -> None:
    coarse = [0.0158 + 0j, -0.0158 + 0j, -0.75 + 0j]
    fine = [0.0039 + 0j, -0.0039 + 0j, -0.75 + 0j]
    assert refinement_null_tolerance(coarse, fine) == pytest.approx(0.119)
    with pytest.raises(ValueError, match="at least 2"):
        refinement_null_tolerance([0j], fine)


def test_explicit_tolerance_and_values_are_used(operator: LinearizedMatrix) -> None:
    values = spectrum(operator)
    report = analyze_spectrum(operator, 0.0, values)
    assert report.null_tolerance == 0.0
    assert report.kernel_dimension == 0
    assert report.gap == pytest.approx(-values[0].real)
    assert sorted(report.eigenvalues, key=abs) == sorted(values, key=abs)
