import math
from fractions import Fraction

import numpy as np
import pytest

from src.kinetics.kinematics import (
    CollisionFrame,
    alpha_thresholds,
    as_half_integer,
    gaussian_moment,
    moment_bound_margin,
    post_collision,
    post_collision_batch,
    povzner_beta,
    povzner_coefficient,
    povzner_table,
    renormalize_velocities,
    sample_unit_sphere,
    sphere_area,
)


def test_sphere_area_matches_known_values() -> None:
    assert sphere_area(2) == pytest.approx(2.0 * math.pi)
    assert sphere_area(3) == pytest.approx(4.0 * math.pi)
    assert sphere_area(4) == pytest.approx(2.0 * math.pi**2)


@pytest.mark.parametrize("k, expected", [(0, Fraction(0)), (1.5, Fraction(3, 2)), (Fraction(5, 2), Fraction(5, 2))])
def test_as_half_integer_accepts_multiples_of_half(k, expected) -> None:
    assert as_half_integer(k) == expected


@pytest.mark.parametrize("k", [-0.5, 0.25, Fraction(1, 3)])
def test_as_half_integer_rejects_other_indices(k) -> None:
    with pytest.raises(ValueError):
        as_half_integer(k)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_post_collision_conserves_momentum_and_energy(d: int, rng: np.random.Generator) -> None:
    v, w = rng.normal(size=(5000, d)), rng.normal(size=(5000, d))
    v_prime, w_prime = post_collision_batch(v, w, sample_unit_sphere(5000, d, rng))
    scale = np.sum(v * v + w * w, axis=1)
    assert np.max(np.linalg.norm(v_prime + w_prime - v - w, axis=1) / np.sqrt(scale)) <= 1e-12
    assert np.max(np.abs(np.sum(v_prime**2 + w_prime**2, axis=1) - scale) / scale) <= 1e-12


def test_post_collision_head_on_rotates_into_sigma() -> None:
    frame = CollisionFrame(v=np.array([1.0, 0.0, 0.0]), v_star=np.array([-1.0, 0.0, 0.0]), sigma=np.array([0.0, 1.0, 0.0]))
    v_prime, v_star_prime = post_collision(frame)
    np.testing.assert_allclose(v_prime, [0.0, 1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(v_star_prime, [0.0, -1.0, 0.0], atol=1e-15)


def test_post_collision_keeps_relative_speed(rng: np.random.Generator) -> None:
    v, w = rng.normal(size=(1000, 3)), rng.normal(size=(1000, 3))
    v_prime, w_prime = post_collision_batch(v, w, sample_unit_sphere(1000, 3, rng))
    np.testing.assert_allclose(np.linalg.norm(v_prime - w_prime, axis=1), np.linalg.norm(v - w, axis=1), rtol=1e-12)


def test_post_collision_along_relative_direction_is_identity() -> None:
    v = np.array([1.0, 0.5, -0.25])
    v_star = np.array([-0.3, 0.2, 0.4])
    sigma = (v - v_star) / np.linalg.norm(v - v_star)
    v_prime, v_star_prime = post_collision(CollisionFrame(v=v, v_star=v_star, sigma=sigma))
    np.testing.assert_allclose(v_prime, v, atol=1e-14)
    np.testing.assert_allclose(v_star_prime, v_star, atol=1e-14)


def test_post_collision_rejects_non_unit_sigma() -> None:
    frame = CollisionFrame(v=np.ones(3), v_star=np.zeros(3), sigma=np.array([1.0, 1e-4, 0.0]))
    with pytest.raises(ValueError, match="unit vector"):
        post_collision(frame)


def test_collision_frame_rejects_bad_input() -> None:
    with pytest.raises(ValueError):
        CollisionFrame(v=np.ones(3), v_star=np.zeros(2), sigma=np.ones(3))
    with pytest.raises(ValueError):
        CollisionFrame(v=np.ones(1), v_star=np.zeros(1), sigma=np.ones(1))
    with pytest.raises(ValueError):
        CollisionFrame(v=np.array([np.nan, 0.0]), v_star=np.zeros(2), sigma=np.array([1.0, 0.0]))


def test_sample_unit_sphere_has_unit_norms(rng: np.random.Generator) -> None:
    directions = sample_unit_sphere(10_000, 4, rng)
    np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1.0, atol=1e-12)
    assert np.all(np.abs(directions.mean(axis=0)) < 0.05)


def test_renormalize_velocities_fixes_mean_and_energy(rng: np.random.Generator) -> None:
    velocities = rng.normal(loc=0.7, scale=3.0, size=(2000, 3))
    scaled = renormalize_velocities(velocities)
    np.testing.assert_allclose(scaled.mean(axis=0), 0.0, atol=1e-12)
    assert np.mean(np.sum(scaled**2, axis=1)) == pytest.approx(1.5, rel=1e-12)


def test_renormalize_velocities_rejects_zero_spread() -> None:
    with pytest.raises(ValueError, match="zero spread"):
        renormalize_velocities(np.ones((10, 3)))


def test_povzner_anchor_values() -> None:
    assert povzner_coefficient(3, 0) == 2.0
    assert povzner_coefficient(3, 1) == pytest.approx(1.0, abs=1e-15)
    assert povzner_coefficient(3, Fraction(3, 2)) == pytest.approx(0.8, abs=1e-12)


@pytest.mark.parametrize("k", [Fraction(1, 2), 1, Fraction(3, 2), 2, 3])
def test_povzner_closed_form_agrees_with_quadrature(k) -> None:
    assert povzner_coefficient(3, k, closed_form=False) == pytest.approx(povzner_coefficient(3, k), abs=1e-8)


@pytest.mark.parametrize("d", [2, 4, 5])
def test_povzner_first_moment_is_one_in_every_dimension(d: int) -> None:
    assert povzner_coefficient(d, 1) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_povzner_table_decreases_beyond_one(d: int) -> None:
    table = povzner_table(d, 5)
    assert table.is_decreasing_after_one()
    assert table[Fraction(1, 2)] > 1.0
    with pytest.raises(KeyError):
        table[6]


def test_povzner_beta_scales_and_validates() -> None:
    assert povzner_beta(3, 2, 0.25) == pytest.approx(0.75 * 2.0 / 3.0)
    with pytest.raises(ValueError):
        povzner_beta(3, 2, 1.5)


def test_alpha_thresholds_three_dimensions() -> None:
    thresholds = alpha_thresholds(3)
    assert thresholds.alpha0 == pytest.approx(2.0 / 7.0, abs=1e-12)
    root2 = math.sqrt(2.0)
    assert thresholds.alpha2 == pytest.approx(2.0 * root2 / (4.0 * root2 + 3.0 * (root2 - 1.0)))
    assert thresholds.alpha2_quoted == 0.401
    assert abs(thresholds.alpha2 - thresholds.alpha2_quoted) < 0.01
    assert math.isnan(alpha_thresholds(4).alpha2_quoted)


def test_moment_bound_margin_vanishes_at_alpha0() -> None:
    alpha0 = alpha_thresholds(3).alpha0
    assert moment_bound_margin(3, alpha0) == pytest.approx(0.0, abs=1e-12)
    assert moment_bound_margin(3, 0.5 * alpha0) > 0.0
    assert moment_bound_margin(3, 0.5) < 0.0


def test_gaussian_moments() -> None:
    assert gaussian_moment(3, 0) == pytest.approx(1.0)
    assert gaussian_moment(3, 1) == pytest.approx(1.5)
    assert gaussian_moment(3, 2) == pytest.approx(3.75)
    assert gaussian_moment(2, 1) == pytest.approx(1.0)
