from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest
from scipy import special

from src.config.errors import ConfigurationError
from src.kinetics.kinematics import renormalize_velocities
from src.kinetics.radial_grid import RadialDistribution
from src.kinetics.radial_ops import loss_intensity_nodes
from src.moments.moment_source import MomentVector
from src.moments.moments import (
    as_moment_source,
    audit_bounds,
    bootstrap_standard_error,
    coefficients,
    concentration_constant,
    drift_bound_ratio,
    exponential_moment,
    maxwellian_edges,
    moments_of,
    noise_floor,
    steady_residual,
    steady_residual_with_error,
    tail_estimate,
    tail_gamma_sensitivity,
    weighted_distance,
)
from src.moments.radial_source import MaxwellianSource


@pytest.fixture
def particles(rng: np.random.Generator) -> np.ndarray:
    return renormalize_velocities(rng.normal(size=(1200, 3)))


def test_moments_of_radial_density(maxwellian_3d: RadialDistribution) -> None:
    ms = moments_of(maxwellian_3d, 2)
    assert ms.get(1) == pytest.approx(1.5, rel=1e-3)
    assert ms.error(1) == 0.0
    with pytest.raises(ValueError, match="k_max"):
        moments_of(maxwellian_3d, 11)


def test_moments_of_a_profile_honours_k_max() -> None:
    profile = SimpleNamespace(moments=MaxwellianSource(3).moment_vector(5))
    ms = moments_of(profile, 2)
    assert ms.k_max == 2
    assert ms.get(2) == pytest.approx(3.75)
    with pytest.raises(ValueError, match="tabulated up to"):
        moments_of(profile, 6)


def test_moments_of_particles_carry_errors(particles: np.ndarray) -> None:
    ms = moments_of(particles, 2)
    assert ms.get(0) == 1.0
    assert ms.get(1) == pytest.approx(1.5, rel=1e-12)
    assert ms.error(2) > 0.0


def test_as_moment_source_rejects_unknown_objects() -> None:
    with pytest.raises(TypeError):
        as_moment_source("not a law")


def test_coefficients_validate_alpha(maxwellian_3d: RadialDistribution) -> None:
    with pytest.raises(ValueError, match="alpha"):
        coefficients(maxwellian_3d, 1.5)
    cs = coefficients(MaxwellianSource(3), 0.0)
    assert cs.A == 0.0 and cs.B == 0.0
    assert np.isnan(drift_bound_ratio(cs))
    assert drift_bound_ratio(coefficients(MaxwellianSource(3), 0.1)) > 0.0


def test_maxwellian_passes_the_audit() -> None:
    source = MaxwellianSource(3)
    checks = audit_bounds(source.moment_vector(2), coefficients(source, 0.1), 3)
    assert len(checks) == 12
    assert all(check.passed for check in checks), [check.to_dict() for check in checks if not check.passed]


def test_particle_sample_passes_the_audit(particles: np.ndarray) -> None:
    checks = audit_bounds(moments_of(particles, 2), coefficients(particles, 0.05), 3)
    assert all(check.passed for check in checks)


def test_audit_needs_half_integer_moments() -> None:
    ms = MomentVector(d=3, entries={0: 1.0, 1: 1.5})
    with pytest.raises(ValueError, match="M_1/2"):
        audit_bounds(ms, coefficients(MaxwellianSource(3), 0.1), 3)


def test_elastic_residual_vanishes_for_the_maxwellian(maxwellian_3d: RadialDistribution) -> None:
    grid = maxwellian_3d.grid
    loss = maxwellian_3d.values * loss_intensity_nodes(maxwellian_3d)
    for k in (Fraction(1, 2), Fraction(3, 2), 2):
        scale = grid.integrate(loss * grid.nodes ** (2.0 * float(k)))
        assert abs(steady_residual(maxwellian_3d, 0.0, k)) <= 5e-3 * scale


@pytest.mark.parametrize("k", [0, 1])
def test_particle_residual_is_exact_for_conserved_moments(particles: np.ndarray, k: int) -> None:
    residual, error = steady_residual_with_error(particles, 0.1, k)
    assert abs(residual) <= 1e-10
    assert error == 0.0


def test_particle_residual_reports_an_error(particles: np.ndarray) -> None:
    residual, error = steady_residual_with_error(particles, 0.1, 2)
    assert error > 0.0
    assert np.isfinite(residual)


def test_tail_estimate_of_the_maxwellian() -> None:
    estimate = tail_estimate(MaxwellianSource(3).moment_vector(4))
    assert estimate.A_est > 0.0
    assert estimate.A_est == pytest.approx(1.0 / estimate.K_hat)
    assert not estimate.noise_flag
    assert set(estimate.ratios) == set(range(2, 7))


def test_tail_estimate_flags_growing_ratios() -> None:
    entries = {Fraction(j, 2): float(np.exp(special.gammaln(j + 0.5))) * float(j) ** j for j in range(1, 13)}
    entries[Fraction(0)] = 1.0
    estimate = tail_estimate(MomentVector(d=3, entries=entries))
    assert estimate.growth_flag
    assert estimate.K_hat == pytest.approx(6.0)


def test_tail_estimate_validates_its_window() -> None:
    ms = MaxwellianSource(3).moment_vector(2)
    with pytest.raises(ValueError, match="needs"):
        tail_estimate(ms, (2, 6))
    with pytest.raises(ValueError, match="increasing"):
        tail_estimate(ms, (3, 3))
    with pytest.raises(ValueError, match="gamma"):
        tail_estimate(ms, (1, 3), gamma=1.5)


def test_tail_gamma_sensitivity_keys() -> None:
    rates = tail_gamma_sensitivity(MaxwellianSource(3).moment_vector(4))
    assert sorted(rates) == [0.25, 0.5, 0.75]


def test_exponential_moment_at_zero_is_the_mass() -> None:
    ms = MaxwellianSource(3).moment_vector(3)
    assert exponential_moment(ms, 0.0) == pytest.approx(1.0)
    assert exponential_moment(ms, 0.2) > 1.0


def test_concentration_constant_is_positive(maxwellian_3d: RadialDistribution) -> None:
    assert concentration_constant(maxwellian_3d) > 0.0


def test_distance_of_a_law_to_itself_is_zero() -> None:
    source = MaxwellianSource(3)
    assert weighted_distance(source, source, 0.2, 1.0).value == 0.0


def test_radial_density_is_close_to_the_closed_form(maxwellian_3d: RadialDistribution) -> None:
    distance = weighted_distance(maxwellian_3d, MaxwellianSource(3), 0.2, 0.0, edges=maxwellian_edges(3, 16))
    assert distance.n_bins == 16
    assert distance.value < 5e-3


def test_distance_rejects_negative_weights(maxwellian_3d: RadialDistribution) -> None:
    with pytest.raises(ValueError, match="non-negative"):
        weighted_distance(maxwellian_3d, maxwellian_3d, -0.1, 0.0)


def test_distance_refuses_weights_beyond_the_truncation(maxwellian_3d: RadialDistribution) -> None:
    with pytest.raises(ConfigurationError, match="truncation"):
        weighted_distance(maxwellian_3d, MaxwellianSource(3), 5.0, 0.0, edges=maxwellian_edges(3, 16))


def test_particle_distance_uses_equal_mass_shells(particles: np.ndarray) -> None:
    distance = weighted_distance(particles, MaxwellianSource(3), 0.0, 0.0)
    assert distance.n_bins == int(np.ceil(1200 ** (1.0 / 3.0)))
    assert 0.0 < distance.value < 0.2


def test_bootstrap_standard_error_shape(rng: np.random.Generator) -> None:
    samples = rng.normal(size=(8, 5))
    errors = bootstrap_standard_error(samples, 200, 1)
    assert errors.shape == (5,)
    assert np.all(errors > 0.0)
    np.testing.assert_array_equal(errors, bootstrap_standard_error(samples, 200, 1))


def test_noise_floor_is_reproducible() -> None:
    edges = maxwellian_edges(3, 10)
    first = noise_floor(1000, 3, edges, 0.0, 0.0, 9, 3)
    assert first == noise_floor(1000, 3, edges, 0.0, 0.0, 9, 3)
    assert first[0] > 0.0
