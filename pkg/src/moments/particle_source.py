import math
from typing import Iterator, Tuple

import numpy as np
from typeguard import typechecked

from src.config.constants import MomentsConfig, QuadratureConfig
from src.kinetics.kinematics import HalfInteger, as_half_integer
from src.kinetics.radial_ops import jacobi_rule
from src.moments.moment_source import MomentSource


@typechecked
class ParticleSource(MomentSource):
    """Evaluates moment functionals of an empirical particle law (each particle carries mass 1/N).

    Pair functionals are U-statistics over ordered pairs i != j: every pair when N is at most
    `full_pair_limit`, otherwise `sampled_pairs` pairs drawn with a fixed seed.

    Args:
        velocities: particle velocities, shape (N, d).
        pair_seed: seed of the pair sampler.
        full_pair_limit: largest N handled with all pairs.
        sampled_pairs: number of sampled pairs above the limit.
    """

    def __init__(
        self,
        velocities: np.ndarray,
        pair_seed: int = MomentsConfig.PAIR_SAMPLING_SEED.value,
        full_pair_limit: int = MomentsConfig.FULL_PAIR_LIMIT.value,
        sampled_pairs: int = MomentsConfig.SAMPLED_PAIRS.value,
    ):
        if velocities.ndim != 2 or velocities.shape[0] < 2:
            raise ValueError(f"Particle velocities must have shape (N >= 2, d), got {velocities.shape}.")
        super().__init__(d=int(velocities.shape[1]), source_type=MomentsConfig.SOURCE_TYPE_PARTICLE.value)
        self.velocities = np.asarray(velocities, dtype=float)
        self.n_particles = int(velocities.shape[0])
        self.pair_seed = pair_seed
        self.full_pair_limit = full_pair_limit
        self.sampled_pairs = sampled_pairs
        self._speeds = None
        self._frequencies = None
        self._pairs = None

    @property
    def is_statistical(self) -> bool:
        return True

    @property
    def speeds(self) -> np.ndarray:
        """Returns |v_i| for every particle."""
        if self._speeds is None:
            self._speeds = np.linalg.norm(self.velocities, axis=1)
        return self._speeds

    @property
    def uses_all_pairs(self) -> bool:
        """Returns True if pair functionals run over every ordered pair."""
        return self.n_particles <= self.full_pair_limit

    def moment(self, k: HalfInteger) -> Tuple[float, float]:
        exponent = 2.0 * float(as_half_integer(k))
        values = self.speeds**exponent
        return float(values.mean()), float(values.std(ddof=1) / math.sqrt(self.n_particles))

    def collision_frequencies(self) -> Tuple[float, float, float, float]:
        if self._frequencies is None:
            energy = self.speeds**2
            self._frequencies = self._pair_functional(
                lambda i, j, relative: (relative, 0.5 * (energy[i] + energy[j]) * relative),
                scales=(1.0, 2.0 / self.d),
            )
        return self._frequencies

    def collision_moment(self, k: HalfInteger, alpha: float) -> Tuple[float, float]:
        exponent = float(as_half_integer(k))
        x_nodes, x_weights = jacobi_rule(QuadratureConfig.ANGLE_ORDER.value, self.d)
        x_weights = x_weights / x_weights.sum()
        speeds = self.speeds

        def balance(i: np.ndarray, j: np.ndarray, relative: np.ndarray) -> Tuple[np.ndarray]:
            center = 0.5 * np.linalg.norm(self.velocities[i] + self.velocities[j], axis=-1)
            base = center * center + 0.25 * relative * relative
            cross = relative * center
            averaged = np.zeros_like(relative)
            for x, weight in zip(x_nodes, x_weights):
                prime = np.maximum(base + cross * x, 0.0) ** exponent
                prime_star = np.maximum(base - cross * x, 0.0) ** exponent
                averaged += weight * 0.5 * (prime + prime_star)
            before = 0.5 * (speeds[i] ** (2 * exponent) + speeds[j] ** (2 * exponent))
            return (relative * ((1.0 - alpha) * averaged - before),)

        value, error = self._pair_functional(balance, scales=(1.0,))
        return value, error

    def bin_masses(self, edges: np.ndarray) -> np.ndarray:
        index = np.searchsorted(edges, self.speeds, side="right") - 1
        inside = (index >= 0) & (index < edges.size - 1)
        counts = np.bincount(index[inside], minlength=edges.size - 1)
        return counts / self.n_particles

    def loss_profile(self) -> Tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(self.pair_seed)
        count = min(MomentsConfig.LOSS_PROFILE_PARTICLES.value, self.n_particles)
        chosen = rng.choice(self.n_particles, size=count, replace=False)
        loss = np.array(
            [np.linalg.norm(self.velocities - self.velocities[i], axis=1).sum() / (self.n_particles - 1) for i in chosen]
        )
        return self.speeds[chosen], loss

    # PAIR U-STATISTICS

    def _pair_blocks(self) -> Iterator[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
        if self.uses_all_pairs:
            n = self.n_particles
            block = MomentsConfig.PAIR_BLOCK.value // 8
            columns = np.arange(n)
            for start in range(0, n, block):
                rows = np.arange(start, min(start + block, n))
                i = np.repeat(rows, n - 1)
                j = np.concatenate([np.delete(columns, row) for row in rows])
                yield i, j, np.linalg.norm(self.velocities[i] - self.velocities[j], axis=1)
        else:
            i, j = self._sampled_pairs()
            chunk = QuadratureConfig.CARLEMAN_CHUNK.value
            for start in range(0, i.size, chunk):
                a, b = i[start : start + chunk], j[start : start + chunk]
                yield a, b, np.linalg.norm(self.velocities[a] - self.velocities[b], axis=1)

    def _sampled_pairs(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._pairs is None:
            rng = np.random.default_rng(self.pair_seed)
            first = rng.integers(0, self.n_particles, size=self.sampled_pairs)
            offset = rng.integers(1, self.n_particles, size=self.sampled_pairs)
            self._pairs = (first, (first + offset) % self.n_particles)
        return self._pairs

    def _pair_functional(self, kernel, scales: Tuple[float, ...]) -> Tuple[float, ...]:
        """Returns the U-statistic of each kernel output followed by its standard error.

        With all pairs the error is the Hoeffding projection estimate 2 std(h_i)/sqrt(N); with
        sampled pairs it combines the pair-sampling error and the particle-sampling error.
        """
        n = self.n_particles
        outputs = len(scales)
        if self.uses_all_pairs:
            projections = np.zeros((outputs, n))
            for i, j, relative in self._pair_blocks():
                for index, values in enumerate(kernel(i, j, relative)):
                    projections[index] += np.bincount(i, weights=values, minlength=n)
                    projections[index] += np.bincount(j, weights=values, minlength=n)
            projections /= 2.0 * (n - 1)
            means = projections.mean(axis=1)
            errors = 2.0 * projections.std(axis=1, ddof=1) / math.sqrt(n)
        else:
            totals, squares, count = np.zeros(outputs), np.zeros(outputs), 0
            for i, j, relative in self._pair_blocks():
                for index, values in enumerate(kernel(i, j, relative)):
                    totals[index] += values.sum()
                    squares[index] += np.dot(values, values)
                count += relative.size
            means = totals / count
            spread = np.sqrt(np.maximum(squares / count - means**2, 0.0))
            errors = spread * np.sqrt(1.0 / count + 4.0 / n)
        scaled_means = [float(scale * mean) for scale, mean in zip(scales, means)]
        scaled_errors = [float(scale * error) for scale, error in zip(scales, errors)]
        return tuple(scaled_means + scaled_errors)

