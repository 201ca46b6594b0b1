import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from typeguard import typechecked

from src.config.constants import DsmcConfig, MomentsConfig
from src.config.errors import ConfigurationError, SolverAbortError
from src.config.settings import SolverSettings
from src.dsmc.ensemble import ParticleEnsemble, renormalize
from src.kinetics.kinematics import alpha_thresholds, post_collision_batch, sample_unit_sphere
from src.moments.moment_source import CoefficientSet, MomentVector, RadialHistogram, moment_key
from src.moments.moments import (
    as_histogram,
    bin_weights,
    bootstrap_standard_error,
    maxwellian_edges,
    steady_residual_with_error,
    weighted_distance,
)
from src.moments.particle_source import ParticleSource

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Defines the numerical parameters of one particle run.

    `dt` defaults to TARGET_COLLISIONS_PER_STEP / sqrt(d), about 0.2 expected collisions per particle
    per step since the mean collision frequency of the normalized Maxwellian is close to sqrt(d).
    `v_maj` defaults to oversampling * 2 max|v| of the ensemble at the first step, an upper bound
    of every relative speed.

    Raises:
        ConfigurationError: a parameter outside its range.
    """

    alpha: float = 0.0
    dt: Optional[float] = None
    oversampling: float = 1.2
    v_maj: Optional[float] = None
    window_steps: int = 20
    steady_tolerance: float = 3.0
    max_steps: int = 4000
    sub_windows: int = DsmcConfig.MIN_SUB_WINDOWS.value
    seed: int = 12345
    bootstrap_resamples: int = 200

    def __post_init__(self):
        checks = [
            (0.0 <= self.alpha < 1.0, f"alpha must lie in [0, 1), got {self.alpha}."),
            (self.dt is None or self.dt > 0.0, f"dt must be positive, got {self.dt}."),
            (self.v_maj is None or self.v_maj > 0.0, f"v_maj must be positive, got {self.v_maj}."),
            (self.oversampling >= 1.0, f"oversampling must be >= 1, got {self.oversampling}."),
            (
                self.window_steps >= DsmcConfig.BATCHES_PER_WINDOW.value,
                f"window_steps must be >= {DsmcConfig.BATCHES_PER_WINDOW.value}, got {self.window_steps}.",
            ),
            (self.steady_tolerance > 0.0, f"steady_tolerance must be positive, got {self.steady_tolerance}."),
            (self.max_steps >= 1, f"max_steps must be >= 1, got {self.max_steps}."),
            (
                self.sub_windows >= DsmcConfig.MIN_SUB_WINDOWS.value,
                f"sub_windows must be >= {DsmcConfig.MIN_SUB_WINDOWS.value}, got {self.sub_windows}.",
            ),
            (self.bootstrap_resamples >= 2, f"bootstrap_resamples must be >= 2, got {self.bootstrap_resamples}."),
        ]
        for condition, message in checks:
            if not condition:
                raise ConfigurationError(message)

    @classmethod
    def from_settings(cls, settings: SolverSettings, bootstrap_resamples: int = 200) -> "SolverConfig":
        """Returns the solver parameters of a validated SolverSettings section."""
        return cls(
            alpha=settings.alpha,
            dt=settings.dt,
            oversampling=settings.oversampling,
            v_maj=settings.v_maj,
            window_steps=settings.window_steps,
            steady_tolerance=settings.steady_tolerance,
            max_steps=settings.max_steps,
            sub_windows=settings.sub_windows,
            seed=settings.seed,
            bootstrap_resamples=bootstrap_resamples,
        )

    def warn_above_threshold(self, d: int) -> None:
        """Logs a warning when alpha is at or above the uniform-moment threshold alpha0(d)."""
        alpha0 = alpha_thresholds(d).alpha0
        if self.alpha >= alpha0:
            logger.warning(
                "alpha=%.4f is at or above alpha0(%d)=%.4f; a steady profile may not exist.", self.alpha, d, alpha0
            )

    def resolve_dt(self, d: int) -> float:
        """Returns the time step, derived from d when not set."""
        if self.dt is not None:
            return float(self.dt)
        return DsmcConfig.TARGET_COLLISIONS_PER_STEP.value / math.sqrt(d)

    def initial_majorant(self, velocities: np.ndarray) -> float:
        """Returns the starting majorant of the relative speed."""
        if self.v_maj is not None:
            return float(self.v_maj)
        return float(self.oversampling * 2.0 * np.linalg.norm(velocities, axis=1).max())


@dataclass
class StepStats:
    """Defines the event counts of one step and the empirical collision frequencies they imply."""

    t: float
    dt: float
    candidates: int
    accepted: int
    annihilated_pairs: int
    duplicated: int
    majorant_doubled: bool
    a: float
    b: float
    A: float
    B: float


def _stochastic_round(value: float, rng: np.random.Generator) -> int:
    base = math.floor(value)
    return int(base + (rng.random() < value - base))


@typechecked
def step(ens: ParticleEnsemble, cfg: SolverConfig) -> StepStats:
    """Advances the ensemble by one time step of majorant-rate pair sampling.

    (N-1) v_maj dt / 2 candidate pairs are drawn (stochastically rounded) in rounds of disjoint
    pairs among the surviving particles. A candidate collides with probability |v_i - v_j| / v_maj;
    a colliding pair is annihilated with probability alpha and scatters elastically otherwise.
    Annihilated slots are refilled with copies of uniformly chosen survivors, then the ensemble is
    renormalized to zero mean and energy d/2.

    Raises:
        SolverAbortError: every particle was annihilated during the step.
    """
    rng = ens.rng
    n, d = ens.n_particles, ens.d
    dt = cfg.resolve_dt(d)
    if ens.v_maj is None:
        ens.v_maj = cfg.initial_majorant(ens.velocities)
    v_maj = ens.v_maj
    velocities = ens.velocities
    alive = np.ones(n, dtype=bool)
    remaining = _stochastic_round((n - 1) * v_maj * dt / 2.0, rng)
    candidates = remaining
    accepted, annihilated, collided_energy, overflow = 0, 0, 0.0, 0.0

    while remaining > 0:
        survivors = np.flatnonzero(alive)
        pairs = min(remaining, survivors.size // 2)
        if pairs == 0:
            break
        remaining -= pairs
        order = rng.permutation(survivors)
        i, j = order[:pairs], order[pairs : 2 * pairs]
        relative = np.linalg.norm(velocities[i] - velocities[j], axis=1)
        overflow = max(overflow, float(relative.max()))
        hit = rng.random(pairs) < np.minimum(relative / v_maj, 1.0)
        i, j = i[hit], j[hit]
        if i.size == 0:
            continue
        accepted += int(i.size)
        collided_energy += float(np.sum(velocities[i] ** 2) + np.sum(velocities[j] ** 2))
        vanish = rng.random(i.size) < cfg.alpha
        alive[i[vanish]] = False
        alive[j[vanish]] = False
        annihilated += int(vanish.sum())
        i, j = i[~vanish], j[~vanish]
        if i.size:
            sigma = sample_unit_sphere(int(i.size), d, rng)
            velocities[i], velocities[j] = post_collision_batch(velocities[i], velocities[j], sigma, validate=False)

    dead = np.flatnonzero(~alive)
    if dead.size == n:
        raise SolverAbortError(
            f"All {n} particles were annihilated in one step at t={ens.t:.4f} (alpha={cfg.alpha}, dt={dt}); "
            "reduce dt."
        )
    if dead.size:
        donors = rng.choice(np.flatnonzero(alive), size=dead.size, replace=True)
        velocities[dead] = velocities[donors]
    renormalize(ens)

    doubled = overflow > v_maj
    if doubled:
        ens.v_maj = 2.0 * v_maj
        ens.counters["majorant_doublings"] += 1
        logger.warning(
            "Relative speed %.4f exceeded the majorant %.4f at t=%.4f; majorant doubled to %.4f.",
            overflow,
            v_maj,
            ens.t,
            ens.v_maj,
        )
    ens.counters["collisions"] += accepted - annihilated
    ens.counters["annihilations"] += annihilated
    ens.counters["duplications"] += int(dead.size)
    ens.t += dt

    a_hat = 2.0 * accepted / (n * dt)
    b_hat = 2.0 / d * collided_energy / (n * dt)
    drift = CoefficientSet.from_frequencies(d, cfg.alpha, a_hat, b_hat)
    return StepStats(
        t=ens.t,
        dt=dt,
        candidates=candidates,
        accepted=accepted,
        annihilated_pairs=annihilated,
        duplicated=int(dead.size),
        majorant_doubled=bool(doubled),
        a=a_hat,
        b=b_hat,
        A=drift.A,
        B=drift.B,
    )


# STEADY PROFILE


@dataclass
class SteadyProfile:
    """Defines the time-averaged state of a run after steady detection.

    The averaging window is split into sub-windows; each contributes a shell-mass vector, a moment
    vector and one velocity snapshot, and every reported error is a bootstrap over sub-windows.
    """

    alpha: float
    d: int
    n_particles: int
    edges: np.ndarray
    masses: np.ndarray
    sub_window_masses: np.ndarray
    moments: MomentVector
    sub_window_moments: np.ndarray
    snapshots: List[np.ndarray]
    annihilation_rates: np.ndarray
    burn_in_steps: int
    averaging_steps: int
    t_end: float
    timed_out: bool
    time_series: pd.DataFrame
    seed: int = 12345
    bootstrap_resamples: int = 200
    _coefficients: Optional[CoefficientSet] = field(default=None, repr=False)

    @property
    def n_sub_windows(self) -> int:
        """Returns the number of averaging sub-windows."""
        return int(self.sub_window_masses.shape[0])

    def _bootstrap(self, samples: np.ndarray) -> np.ndarray:
        return bootstrap_standard_error(samples, self.bootstrap_resamples, self.seed)

    def histogram(self) -> RadialHistogram:
        """Returns the time-averaged shell masses with bootstrap errors."""
        return RadialHistogram(edges=self.edges, masses=self.masses, mass_errors=self._bootstrap(self.sub_window_masses))

    def histogram_frame(self) -> pd.DataFrame:
        """Returns the histogram as the r_lo, r_hi, mass table."""
        columns = DsmcConfig.HISTOGRAM_COLUMNS.value
        return pd.DataFrame({columns[0]: self.edges[:-1], columns[1]: self.edges[1:], columns[2]: self.masses})

    def coefficients(self) -> CoefficientSet:
        """Returns a, b (snapshot means with bootstrap errors) and the drift coefficients they induce."""
        if self._coefficients is None:
            frequencies = np.array([ParticleSource(snapshot).collision_frequencies()[:2] for snapshot in self.snapshots])
            a, b = frequencies.mean(axis=0)
            a_error, b_error = self._bootstrap(frequencies)
            self._coefficients = CoefficientSet.from_frequencies(
                self.d, self.alpha, float(a), float(b), float(a_error), float(b_error)
            )
        return self._coefficients

    def residual(self, k: float) -> Tuple[float, float]:
        """Returns the steady moment-balance residual at k averaged over snapshots, with its error."""
        results = np.array([steady_residual_with_error(snapshot, self.alpha, k) for snapshot in self.snapshots])
        values, within = results[:, 0], results[:, 1]
        spread = float(self._bootstrap(values[:, None])[0])
        sampling = float(math.sqrt(np.mean(within**2) / values.size))
        return float(values.mean()), max(spread, sampling)

    def annihilation_rate(self) -> Tuple[float, float]:
        """Returns the annihilated mass per unit time over the averaging window, with its bootstrap error."""
        return float(self.annihilation_rates.mean()), float(self._bootstrap(self.annihilation_rates[:, None])[0])

    def distance_to(self, other: Any, a_weight: float, k_weight: float) -> Tuple[float, float]:
        """Returns the weighted distance to another law over this profile's shells, with a bootstrap error.

        When `other` is also a SteadyProfile both sets of sub-windows are resampled, so the error is
        the combined statistical error of the pair.
        """
        value = weighted_distance(self, other, a_weight, k_weight).value
        weights = bin_weights(self.edges, self.d, a_weight, k_weight)
        rng = np.random.default_rng(self.seed)
        paired = isinstance(other, SteadyProfile)
        fixed = None if paired else as_histogram(other, self.edges).masses
        draws = []
        for _ in range(self.bootstrap_resamples):
            mine = self.sub_window_masses[rng.integers(0, self.n_sub_windows, self.n_sub_windows)].mean(axis=0)
            if paired:
                theirs = other.sub_window_masses[rng.integers(0, other.n_sub_windows, other.n_sub_windows)].mean(axis=0)
            else:
                theirs = fixed
            draws.append(float(np.sum(np.abs(mine - theirs) * weights)))
        return value, float(np.std(draws, ddof=1))

    def summary(self) -> Dict[str, Any]:
        """Returns the run bookkeeping as a JSON-ready dict."""
        return {
            "alpha": self.alpha,
            "d": self.d,
            "n_particles": self.n_particles,
            "burn_in_steps": self.burn_in_steps,
            "averaging_steps": self.averaging_steps,
            "sub_windows": self.n_sub_windows,
            "t_end": self.t_end,
            "timed_out": self.timed_out,
            "moments": self.moments.to_dict(),
        }


def _moment_powers(velocities: np.ndarray, k_max: int) -> np.ndarray:
    speeds = np.linalg.norm(velocities, axis=1)
    return np.array([np.mean(speeds**j) for j in range(2 * k_max + 1)])


def _tracked_indices() -> List[int]:
    return [int(2 * k) for k in DsmcConfig.TRACKED_MOMENTS.value]


def _series_row(stats: StepStats, powers: np.ndarray) -> Dict[str, float]:
    columns = DsmcConfig.TIME_SERIES_COLUMNS.value
    values = [stats.t, powers[1], powers[2], powers[3], powers[4], stats.a, stats.b, stats.A, stats.B]
    row = dict(zip(columns, [float(value) for value in values]))
    row[columns[-1]] = stats.annihilated_pairs
    return row


@dataclass
class _WindowMonitor:
    """Compares consecutive window means of the tracked moments against their batch-mean errors."""

    tolerance: float
    batches: int
    required_passes: int = 2
    previous: Optional[Tuple[np.ndarray, np.ndarray]] = None
    windows: int = 0
    passes: int = 0

    def close_window(self, block: np.ndarray) -> bool:
        batch_means = np.array([part.mean(axis=0) for part in np.array_split(block, self.batches)])
        mean = block.mean(axis=0)
        error = batch_means.std(axis=0, ddof=1) / math.sqrt(self.batches)
        self.windows += 1
        if self.previous is not None:
            previous_mean, previous_error = self.previous
            bound = self.tolerance * np.sqrt(error**2 + previous_error**2)
            steady = bool(np.all(np.abs(mean - previous_mean) <= bound))
            self.passes = self.passes + 1 if steady else 0
        self.previous = (mean, error)
        return self.windows >= DsmcConfig.MIN_WINDOWS.value and self.passes >= self.required_passes


@typechecked
def run_to_steady(cfg: SolverConfig, init: ParticleEnsemble, k_max: int = DsmcConfig.PROFILE_K_MAX.value) -> SteadyProfile:
    """Returns the steady profile of a run started from `init`, which is advanced in place.

    Steady state is declared when the window means of (M_{1/2}, M_{3/2}, M_2) changed by less than
    `steady_tolerance` combined batch-mean errors over two consecutive windows. The run then
    averages over as many steps as the burn-in took, split into `sub_windows` sub-windows. A run
    that never becomes steady within `max_steps` averages over one step per sub-window and is
    flagged as timed out.

    Raises:
        ValueError: k_max too small for the tracked moments or above the supported maximum.
    """
    if not max(DsmcConfig.TRACKED_MOMENTS.value) <= k_max <= MomentsConfig.MAX_K.value:
        raise ValueError(f"k_max must lie in [{max(DsmcConfig.TRACKED_MOMENTS.value)}, {MomentsConfig.MAX_K.value}].")
    d, n = init.d, init.n_particles
    cfg.warn_above_threshold(d)
    tracked = _tracked_indices()
    monitor = _WindowMonitor(cfg.steady_tolerance, DsmcConfig.BATCHES_PER_WINDOW.value)
    rows, window = [], []
    burn_in, detected = 0, False
    while burn_in < cfg.max_steps and not detected:
        stats = step(init, cfg)
        burn_in += 1
        powers = _moment_powers(init.velocities, k_max)
        rows.append(_series_row(stats, powers))
        window.append(powers[tracked])
        if len(window) == cfg.window_steps:
            detected = monitor.close_window(np.array(window))
            window = []
    if detected:
        logger.info("Steady state detected for alpha=%.4f after %d steps (t=%.3f).", cfg.alpha, burn_in, init.t)
        averaging = max(burn_in, cfg.sub_windows)
    else:
        logger.warning(
            "No steady state for alpha=%.4f within %d steps; returning a partial profile.", cfg.alpha, cfg.max_steps
        )
        averaging = cfg.sub_windows

    edges = maxwellian_edges(d, int(math.ceil(n ** (1.0 / 3.0))))
    per_sub = int(math.ceil(averaging / cfg.sub_windows))
    sub_masses, sub_moments, snapshots, rates = [], [], [], []
    for _ in range(cfg.sub_windows):
        masses = np.zeros(edges.size - 1)
        moments = np.zeros(2 * k_max + 1)
        pairs, elapsed = 0, 0.0
        for _ in range(per_sub):
            stats = step(init, cfg)
            powers = _moment_powers(init.velocities, k_max)
            rows.append(_series_row(stats, powers))
            moments += powers
            masses += ParticleSource(init.velocities).bin_masses(edges)
            pairs += stats.annihilated_pairs
            elapsed += stats.dt
        sub_masses.append(masses / per_sub)
        sub_moments.append(moments / per_sub)
        snapshots.append(init.velocities.copy())
        rates.append(2.0 * pairs / (n * elapsed))

    sub_moments = np.array(sub_moments)
    errors = bootstrap_standard_error(sub_moments, cfg.bootstrap_resamples, cfg.seed)
    mean_moments = sub_moments.mean(axis=0)
    moment_vector = MomentVector(
        d=d,
        entries={Fraction(j, 2): float(mean_moments[j]) for j in range(2 * k_max + 1)},
        errors={Fraction(j, 2): float(errors[j]) for j in range(2 * k_max + 1)},
    )
    sub_masses = np.array(sub_masses)
    logger.debug(
        "Averaged alpha=%.4f over %d steps: %s",
        cfg.alpha,
        per_sub * cfg.sub_windows,
        {moment_key(k): round(v, 6) for k, v in moment_vector.entries.items()},
    )
    return SteadyProfile(
        alpha=cfg.alpha,
        d=d,
        n_particles=n,
        edges=edges,
        masses=sub_masses.mean(axis=0),
        sub_window_masses=sub_masses,
        moments=moment_vector,
        sub_window_moments=sub_moments,
        snapshots=snapshots,
        annihilation_rates=np.array(rates),
        burn_in_steps=burn_in,
        averaging_steps=per_sub * cfg.sub_windows,
        t_end=init.t,
        timed_out=not detected,
        time_series=pd.DataFrame(rows, columns=DsmcConfig.TIME_SERIES_COLUMNS.value),
        seed=cfg.seed,
        bootstrap_resamples=cfg.bootstrap_resamples,
    )
