import logging
import math
from typing import Dict, Optional

import numpy as np
from typeguard import typechecked

from src.config.constants import DsmcConfig
from src.kinetics.kinematics import renormalize_velocities, sample_unit_sphere

logger = logging.getLogger(__name__)


@typechecked
class ParticleEnsemble:
    """Defines the particle state of the solver: N velocities, the random stream and the bookkeeping.

    Every particle carries mass 1/N. The random stream is owned by the ensemble, so a saved and
    restored ensemble continues exactly where it stopped.

    Args:
        velocities: array of shape (N, d).
        rng: the generator every stochastic step draws from.
        t: elapsed rescaled time.
        counters: cumulative event counts, keyed by DsmcConfig.COUNTER_KEYS.
        v_maj: current majorant of the relative speed, set on the first step when None.
    """

    def __init__(
        self,
        velocities: np.ndarray,
        rng: np.random.Generator,
        t: float = 0.0,
        counters: Optional[Dict[str, int]] = None,
        v_maj: Optional[float] = None,
    ):
        if velocities.ndim != 2 or velocities.shape[1] < 2:
            raise ValueError(f"Velocities must have shape (N, d >= 2), got {velocities.shape}.")
        self.velocities = np.ascontiguousarray(velocities, dtype=float)
        self.rng = rng
        self.t = float(t)
        self.counters = {key: 0 for key in DsmcConfig.COUNTER_KEYS.value}
        if counters:
            unknown = set(counters) - set(self.counters)
            if unknown:
                raise ValueError(f"Unknown ensemble counters {sorted(unknown)}.")
            self.counters.update({key: int(value) for key, value in counters.items()})
        self.v_maj = v_maj

    @property
    def n_particles(self) -> int:
        """Returns N."""
        return int(self.velocities.shape[0])

    @property
    def d(self) -> int:
        """Returns the velocity-space dimension."""
        return int(self.velocities.shape[1])

    def mean_velocity(self) -> np.ndarray:
        """Returns the empirical mean velocity."""
        return self.velocities.mean(axis=0)

    def energy(self) -> float:
        """Returns the empirical mean of |v|^2."""
        return float(np.mean(np.sum(self.velocities * self.velocities, axis=1)))


@typechecked
def renormalize(ens: ParticleEnsemble) -> ParticleEnsemble:
    """Shifts the ensemble to zero mean velocity and scales it to mean energy d/2, in place."""
    ens.velocities = renormalize_velocities(ens.velocities)
    ens.counters["rescalings"] += 1
    return ens


@typechecked
def init_ensemble(
    kind: str,
    n_particles: int,
    d: int,
    seed: int,
    r1: float = 1.0,
    r2: float = 2.0,
    p: float = 0.5,
) -> ParticleEnsemble:
    """Returns an isotropic sample of the requested law, renormalized to zero mean and energy d/2.

    Args:
        kind: 'maxwellian', 'uniform_ball' or 'two_shells'.
        n_particles: N, at least 1000.
        d: dimension.
        seed: seed of the ensemble's random stream.
        r1: inner shell radius (two_shells).
        r2: outer shell radius (two_shells).
        p: probability of the inner shell (two_shells).

    Raises:
        ValueError: an unknown kind, too few particles, or shell parameters with no spread.
    """
    if not DsmcConfig.is_valid_init_kind(kind):
        raise ValueError(f"Initial data kind '{kind}' is not one of {DsmcConfig.INIT_KINDS.value}.")
    if n_particles < DsmcConfig.MIN_PARTICLES.value:
        raise ValueError(f"Ensembles need at least {DsmcConfig.MIN_PARTICLES.value} particles, got {n_particles}.")
    if d < 2:
        raise ValueError(f"Dimension must be >= 2, got {d}.")
    rng = np.random.default_rng(seed)
    if kind == DsmcConfig.INIT_MAXWELLIAN.value:
        velocities = rng.normal(scale=math.sqrt(0.5), size=(n_particles, d))
    elif kind == DsmcConfig.INIT_UNIFORM_BALL.value:
        radii = rng.random(n_particles) ** (1.0 / d)
        velocities = radii[:, None] * sample_unit_sphere(n_particles, d, rng)
    else:
        if r1 < 0.0 or r2 < 0.0 or not 0.0 <= p <= 1.0:
            raise ValueError(f"two_shells needs r1, r2 >= 0 and p in [0, 1], got r1={r1}, r2={r2}, p={p}.")
        if not ((p > 0.0 and r1 > 0.0) or (p < 1.0 and r2 > 0.0)):
            raise ValueError(f"two_shells(r1={r1}, r2={r2}, p={p}) puts every particle at the origin.")
        inner = rng.random(n_particles) < p
        radii = np.where(inner, r1, r2)
        velocities = radii[:, None] * sample_unit_sphere(n_particles, d, rng)
    ensemble = ParticleEnsemble(velocities, rng)
    renormalize(ensemble)
    logger.debug("Initialized %s ensemble with N=%d, d=%d, seed=%d.", kind, n_particles, d, seed)
    return ensemble
