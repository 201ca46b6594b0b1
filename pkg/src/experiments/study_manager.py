import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats
from typeguard import typechecked

from src.config.constants import DsmcConfig, StudyConfig
from src.config.errors import ConfigurationError, EigenSolverError
from src.config.settings import RunConfig
from src.dsmc.ensemble import ParticleEnsemble, init_ensemble
from src.dsmc.solver import SolverConfig, SteadyProfile, run_to_steady
from src.kinetics.kinematics import alpha_thresholds
from src.kinetics.linearized import analyze_spectrum, assemble_linearized, refinement_null_tolerance, spectrum
from src.kinetics.radial_grid import RadialGrid
from src.moments.moments import (
    audit_bounds,
    bin_weights,
    drift_bound_ratio,
    noise_floor,
    tail_estimate,
    tail_gamma_sensitivity,
)
from src.moments.radial_source import MaxwellianSource

logger = logging.getLogger(__name__)

RunKey = Tuple[float, str, int]


def weight_label(a_weight: float, k_weight: float) -> str:
    """Returns the column label of a distance weight, e.g. 'a0.2_k0'."""
    return f"a{a_weight:g}_k{k_weight:g}"


@typechecked
def profile_seed(base_seed: int, alpha: float, init_kind: str, replica: int = 0) -> int:
    """Returns the seed of one run, derived from the base seed, alpha, the initial law and a replica index."""
    code = DsmcConfig.INIT_KINDS.value.index(init_kind)
    sequence = np.random.SeedSequence([base_seed, int(round(alpha * 1e6)), code, replica])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


@typechecked
def simulate_profile(
    config: RunConfig, alpha: float, init_kind: str, replica: int = 0
) -> Tuple[SteadyProfile, ParticleEnsemble]:
    """Returns the steady profile of one run and the final ensemble it leaves behind."""
    solver = config.solver
    seed = profile_seed(solver.seed, alpha, init_kind, replica)
    ensemble = init_ensemble(
        init_kind, solver.n_particles, config.dimension, seed, solver.shell_r1, solver.shell_r2, solver.shell_p
    )
    cfg = SolverConfig.from_settings(
        config.with_solver(alpha=alpha, seed=seed).solver, bootstrap_resamples=config.study.bootstrap_resamples
    )
    profile = run_to_steady(cfg, ensemble)
    return profile, ensemble


def _simulate_task(task: Tuple[Dict[str, Any], float, str, int]) -> SteadyProfile:
    raw, alpha, init_kind, replica = task
    return simulate_profile(RunConfig.from_dict(raw), alpha, init_kind, replica)[0]


# RESULT TYPES


@dataclass
class SweepResult:
    """Defines the outcome of an alpha sweep: distances to the Maxwellian, the floor they sit on and their fits.

    `distances[label]` holds one (value, error) per alpha; `net` is the value minus the noise floor.
    `fits[label]` holds the slope through the origin (kappa_hat), the least-squares intercept,
    the Pearson correlation and the Spearman rank correlation of (alpha, net).
    """

    alphas: List[float]
    weights: List[Tuple[float, float]]
    distances: Dict[str, List[Tuple[float, float]]]
    noise_floor: Dict[str, Tuple[float, float]]
    fits: Dict[str, Dict[str, float]]
    control: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    audits_passed: Dict[float, bool] = field(default_factory=dict)
    failed_audits: Dict[float, List[str]] = field(default_factory=dict)
    residuals: Dict[float, Dict[str, Tuple[float, float]]] = field(default_factory=dict)
    drift_ratios: Dict[float, float] = field(default_factory=dict)
    timed_out: Dict[float, bool] = field(default_factory=dict)

    def __post_init__(self):
        if any(later <= earlier for earlier, later in zip(self.alphas, self.alphas[1:])):
            raise ValueError(f"Sweep alphas must be strictly increasing, got {self.alphas}.")
        if any(value < 0.0 for values in self.distances.values() for value, _ in values):
            raise ValueError("Weighted distances must be non-negative.")

    @property
    def partial(self) -> bool:
        """Returns True if any run of the sweep timed out."""
        return any(self.timed_out.values())

    def net(self, label: str) -> np.ndarray:
        """Returns floor-subtracted distances for one weight."""
        return np.array([value for value, _ in self.distances[label]]) - self.noise_floor[label][0]

    def to_frame(self) -> pd.DataFrame:
        """Returns sweep.csv: one row per alpha, then the alpha=0 control and the noise floor."""
        rows = []
        for index, alpha in enumerate(self.alphas):
            row = {"row": "alpha", "alpha": alpha}
            for a_weight, k_weight in self.weights:
                label = weight_label(a_weight, k_weight)
                row[f"D_{label}"], row[f"err_{label}"] = self.distances[label][index]
                row[f"net_{label}"] = row[f"D_{label}"] - self.noise_floor[label][0]
            row["audits_passed"] = self.audits_passed.get(alpha)
            for key, (value, error) in self.residuals.get(alpha, {}).items():
                row[f"residual_{key}"], row[f"residual_err_{key}"] = value, error
            row["drift_ratio"] = self.drift_ratios.get(alpha)
            row["timed_out"] = self.timed_out.get(alpha)
            rows.append(row)
        if self.control:
            row = {"row": "control", "alpha": 0.0, "timed_out": self.timed_out.get(0.0)}
            for label, (value, error) in self.control.items():
                row[f"D_{label}"], row[f"err_{label}"] = value, error
                row[f"net_{label}"] = value - self.noise_floor[label][0]
            rows.append(row)
        floor_row = {"row": "noise_floor", "alpha": float("nan")}
        for label, (mean, spread) in self.noise_floor.items():
            floor_row[f"D_{label}"], floor_row[f"err_{label}"] = mean, spread
        rows.append(floor_row)
        return pd.DataFrame(rows)

    def to_dict(self) -> Dict[str, Any]:
        """Returns the JSON report of the sweep."""
        return {
            "alphas": self.alphas,
            "weights": [list(weight) for weight in self.weights],
            "distances": {label: [list(pair) for pair in values] for label, values in self.distances.items()},
            "noise_floor": {label: list(pair) for label, pair in self.noise_floor.items()},
            "control": {label: list(pair) for label, pair in self.control.items()},
            "fits": self.fits,
            "audits_passed": {f"{alpha:g}": passed for alpha, passed in self.audits_passed.items()},
            "failed_audits": {f"{alpha:g}": names for alpha, names in self.failed_audits.items()},
            "drift_ratios": {f"{alpha:g}": ratio for alpha, ratio in self.drift_ratios.items()},
            "partial": self.partial,
        }


@dataclass
class UniquenessVerdict:
    """Defines the comparison of steady profiles reached from different initial data at one alpha.

    Every pair passes when its distance is at most 3 combined errors; the combined error of a pair is
    the root-mean-square distance between two same-law averages, measured by permuting their sub-windows.
    """

    alpha: float
    inits: List[str]
    seeds: List[int]
    a_weight: float
    k_weight: float
    comparisons: List[Dict[str, Any]]
    timed_out: bool = False

    @property
    def distance(self) -> float:
        """Returns the distance of the least consistent pair."""
        return self._worst()["distance"]

    @property
    def combined_error(self) -> float:
        """Returns the combined error of the least consistent pair."""
        return self._worst()["combined_error"]

    @property
    def passed(self) -> bool:
        """Returns True if every pair agrees within 3 combined errors."""
        return all(item["passed"] for item in self.comparisons)

    def _worst(self) -> Dict[str, Any]:
        return max(self.comparisons, key=lambda item: item["distance"] / max(item["combined_error"], 1e-300))

    def to_frame(self) -> pd.DataFrame:
        """Returns uniqueness.csv, one row per compared pair."""
        return pd.DataFrame(self.comparisons)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "inits": self.inits,
            "seeds": self.seeds,
            "a_weight": self.a_weight,
            "k_weight": self.k_weight,
            "distance": self.distance,
            "combined_error": self.combined_error,
            "passed": self.passed,
            "timed_out": self.timed_out,
        }


@dataclass
class TailUniformity:
    """Defines the tail estimates of a sweep with the Maxwellian control, and their spread over alpha."""

    frame: pd.DataFrame
    min_max_ratio: float
    all_positive: bool
    flagged: bool

    @property
    def passed(self) -> bool:
        """Returns True if every A_est is positive and max/min stays within the uniformity limit."""
        return self.all_positive and self.min_max_ratio <= StudyConfig.TAIL_RATIO_LIMIT.value


@dataclass
class SpectralStudy:
    """Defines the spectral summary per grid size, the eigenvalues behind it and the gap drift under refinement."""

    frame: pd.DataFrame
    eigenvalues: pd.DataFrame
    gap_drift: float

    @property
    def passed(self) -> bool:
        """Returns True if every size found a two-dimensional kernel and a positive gap, with drift at most 10%."""
        ok = self.frame[~self.frame["failed"]]
        return (
            len(ok) == len(self.frame)
            and bool((ok["kernel_dimension"] == 2).all())
            and bool((ok["gap"] > 0).all())
            and (math.isnan(self.gap_drift) or self.gap_drift <= 0.1)
        )


@dataclass
class NonlinearProbe:
    """Defines the (D, D^2, alpha) table and the least-squares fit D ~ c1 D^2 + c2 alpha."""

    frame: pd.DataFrame
    c1: float
    c2: float
    max_scaled_residual: float

    @property
    def passed(self) -> bool:
        """Returns True if c2 is positive and every fit residual stays within 3 propagated errors."""
        return self.c2 > 0.0 and self.max_scaled_residual <= StudyConfig.NONLINEAR_RESIDUAL_LIMIT.value


# ORCHESTRATION


@typechecked
class ProfileStudyManager:
    """Provides the studies run on steady profiles of the annihilation dynamics.

    Runs are cached by (alpha, initial law, replica), so studies sharing a sweep reuse the same
    profiles. With more than one worker the missing runs execute in a process pool; each run owns
    its ensemble and random stream, so results do not depend on the scheduling.

    Example usage:
        manager = ProfileStudyManager(config=RunConfig.from_file("config/default_run_config.json"))
        sweep = manager.boltzmann_limit_study()

    Args:
        config: a validated RunConfig.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self._profiles: Dict[RunKey, SteadyProfile] = {}
        self._floors: Dict[str, Tuple[float, float]] = {}

    @property
    def d(self) -> int:
        return self.config.dimension

    # RUNS

    def profiles(self, keys: Sequence[RunKey]) -> List[SteadyProfile]:
        """Returns the steady profiles of the requested runs, simulating the ones not yet cached."""
        missing = [key for key in dict.fromkeys(keys) if key not in self._profiles]
        if missing:
            raw = self.config.to_dict()
            tasks = [(raw, alpha, kind, replica) for alpha, kind, replica in missing]
            if self.config.workers > 1 and len(tasks) > 1:
                with ProcessPoolExecutor(max_workers=min(self.config.workers, len(tasks))) as pool:
                    results = list(pool.map(_simulate_task, tasks))
            else:
                results = [_simulate_task(task) for task in tasks]
            for key, profile in zip(missing, results):
                self._profiles[key] = profile
        return [self._profiles[key] for key in keys]

    def profile(self, alpha: float, init_kind: Optional[str] = None, replica: int = 0) -> SteadyProfile:
        """Returns one steady profile."""
        return self.profiles([(alpha, init_kind or self.config.solver.init_kind, replica)])[0]

    def _sweep_alphas(self, alphas: Optional[Sequence[float]]) -> List[float]:
        chosen = [float(alpha) for alpha in (alphas if alphas is not None else self.config.study.alphas)]
        alpha0 = alpha_thresholds(self.d).alpha0
        if not chosen or any(later <= earlier for earlier, later in zip(chosen, chosen[1:])):
            raise ConfigurationError(f"Sweep alphas must be a non-empty increasing list, got {chosen}.")
        if not all(0.0 < alpha < alpha0 for alpha in chosen):
            raise ConfigurationError(f"Sweep alphas must lie in (0, alpha0={alpha0:.4f}), got {chosen}.")
        return chosen

    def noise_floor(self, a_weight: float, k_weight: float, edges: np.ndarray) -> Tuple[float, float]:
        """Returns the cached same-law distance floor of N-particle Maxwellian samples for one weight."""
        label = weight_label(a_weight, k_weight)
        if label not in self._floors:
            self._floors[label] = noise_floor(
                self.config.solver.n_particles,
                self.d,
                edges,
                a_weight,
                k_weight,
                self.config.solver.seed,
                self.config.study.noise_floor_replicas,
            )
        return self._floors[label]

    # BOLTZMANN LIMIT

    def boltzmann_limit_study(self, alphas: Optional[Sequence[float]] = None) -> SweepResult:
        """Returns the distances of the steady profiles to the Maxwellian along an alpha sweep.

        Each profile is compared to the Maxwellian for every configured (a_weight, k_weight); the
        measured noise floor is subtracted and the net distances are fitted against alpha. The audit
        verdicts, the moment-balance residuals and the drift ratio (|A|+|B|)/alpha are reported per alpha.

        Raises:
            ConfigurationError: alphas not increasing or outside (0, alpha0(d)).
        """
        chosen = self._sweep_alphas(alphas)
        kind = self.config.solver.init_kind
        keys = [(alpha, kind, 0) for alpha in chosen]
        if self.config.study.include_control:
            keys.append((0.0, kind, 0))
        profiles = dict(zip(keys, self.profiles(keys)))
        maxwellian = MaxwellianSource(self.d)
        weights = [tuple(weight) for weight in self.config.study.distance_weights]
        edges = profiles[keys[0]].edges

        distances, floors, fits, control = {}, {}, {}, {}
        for a_weight, k_weight in weights:
            label = weight_label(a_weight, k_weight)
            floors[label] = self.noise_floor(a_weight, k_weight, edges)
            distances[label] = [profiles[(alpha, kind, 0)].distance_to(maxwellian, a_weight, k_weight) for alpha in chosen]
            if self.config.study.include_control:
                control[label] = profiles[(0.0, kind, 0)].distance_to(maxwellian, a_weight, k_weight)

        result = SweepResult(
            alphas=chosen, weights=weights, distances=distances, noise_floor=floors, fits={}, control=control
        )
        for label in distances:
            fits[label] = self._fit(np.array(chosen), result.net(label))
        result.fits = fits
        for key, profile in profiles.items():
            result.timed_out[key[0]] = profile.timed_out
        for alpha in chosen:
            profile = profiles[(alpha, kind, 0)]
            coefficient_set = profile.coefficients()
            checks = audit_bounds(profile.moments, coefficient_set, self.d)
            result.audits_passed[alpha] = all(check.passed for check in checks)
            result.failed_audits[alpha] = [check.name for check in checks if not check.passed]
            result.residuals[alpha] = {f"{k:g}": profile.residual(k) for k in StudyConfig.RESIDUAL_KS.value}
            result.drift_ratios[alpha] = drift_bound_ratio(coefficient_set)
        logger.info("Boltzmann-limit sweep over %s finished: fits %s", chosen, fits)
        return result

    @staticmethod
    def _fit(alphas: np.ndarray, net: np.ndarray) -> Dict[str, float]:
        slope_through_origin = float(np.dot(alphas, net) / np.dot(alphas, alphas))
        if alphas.size >= 3:
            regression = stats.linregress(alphas, net)
            intercept, correlation = float(regression.intercept), float(regression.rvalue)
            spearman = float(stats.spearmanr(alphas, net).correlation)
        else:
            intercept, correlation, spearman = float("nan"), float("nan"), float("nan")
        return {"kappa_hat": slope_through_origin, "intercept": intercept, "correlation": correlation, "spearman": spearman}

    # UNIQUENESS

    def uniqueness_study(self, alpha: Optional[float] = None, inits: Optional[Sequence[str]] = None) -> UniquenessVerdict:
        """Returns whether steady profiles reached from different initial laws coincide.

        A kind listed twice is run under two seeds, which checks statistical reproducibility.

        Raises:
            ConfigurationError: fewer than two initial laws, or alpha not below the largest sweep alpha.
        """
        target = self.config.study.uniqueness_alpha if alpha is None else alpha
        kinds = list(inits if inits is not None else self.config.study.uniqueness_inits)
        if len(kinds) < 2 or not all(DsmcConfig.is_valid_init_kind(kind) for kind in kinds):
            raise ConfigurationError(f"Uniqueness needs at least two valid initial laws, got {kinds}.")
        if target < 0.0 or target >= max(self.config.study.alphas):
            raise ConfigurationError(
                f"Uniqueness alpha {target} must lie in [0, {max(self.config.study.alphas)}), below the sweep maximum."
            )
        keys = [(target, kind, kinds[:index].count(kind)) for index, kind in enumerate(kinds)]
        profiles = self.profiles(keys)
        a_weight, k_weight = StudyConfig.Y_NORM_WEIGHT.value
        comparisons = []
        for (key_p, p), (key_q, q) in itertools.combinations(zip(keys, profiles), 2):
            distance, _ = p.distance_to(q, a_weight, k_weight)
            combined = self._same_law_error(p, q, a_weight, k_weight)
            comparisons.append(
                {
                    "alpha": target,
                    "init_a": key_p[1],
                    "replica_a": key_p[2],
                    "init_b": key_q[1],
                    "replica_b": key_q[2],
                    "distance": distance,
                    "combined_error": combined,
                    "passed": bool(distance <= 3.0 * combined),
                }
            )
        seeds = [profile_seed(self.config.solver.seed, run_alpha, kind, replica) for run_alpha, kind, replica in keys]
        verdict = UniquenessVerdict(
            alpha=target,
            inits=kinds,
            seeds=seeds,
            a_weight=a_weight,
            k_weight=k_weight,
            comparisons=comparisons,
            timed_out=any(profile.timed_out for profile in profiles),
        )
        logger.info("Uniqueness at alpha=%g over %s: passed=%s", target, kinds, verdict.passed)
        return verdict

    def _same_law_error(self, p: SteadyProfile, q: SteadyProfile, a_weight: float, k_weight: float) -> float:
        weights = bin_weights(p.edges, self.d, a_weight, k_weight)
        pooled = np.concatenate([p.sub_window_masses, q.sub_window_masses])
        rng = np.random.default_rng(self.config.solver.seed)
        draws = []
        for _ in range(self.config.study.bootstrap_resamples):
            order = rng.permutation(pooled.shape[0])
            first = pooled[order[: p.n_sub_windows]].mean(axis=0)
            second = pooled[order[p.n_sub_windows :]].mean(axis=0)
            draws.append(float(np.sum(np.abs(first - second) * weights)))
        return float(math.sqrt(np.mean(np.square(draws))))

    # TAILS

    def tail_uniformity_study(self, alphas: Optional[Sequence[float]] = None) -> TailUniformity:
        """Returns A_est per alpha and k window with the Maxwellian control row, and the max/min ratio over alpha."""
        chosen = self._sweep_alphas(alphas)
        kind = self.config.solver.init_kind
        profiles = self.profiles([(alpha, kind, 0) for alpha in chosen])
        k_max = max(high for _, high in self.config.study.tail_k_ranges)
        sources = [("maxwellian", float("nan"), MaxwellianSource(self.d).moment_vector(k_max / 2))]
        sources += [("profile", alpha, profile.moments) for alpha, profile in zip(chosen, profiles)]
        rows = []
        for source, alpha, moments in sources:
            for k_range in self.config.study.tail_k_ranges:
                estimate = tail_estimate(moments, tuple(k_range))
                sensitivity = tail_gamma_sensitivity(moments, k_range=tuple(k_range))
                rows.append(
                    {
                        "source": source,
                        "alpha": alpha,
                        "k_low": k_range[0],
                        "k_high": k_range[1],
                        "K_hat": estimate.K_hat,
                        "A_est": estimate.A_est,
                        "gamma_spread": max(sensitivity.values()) - min(sensitivity.values()),
                        "growth_flag": estimate.growth_flag,
                        "noise_flag": estimate.noise_flag,
                    }
                )
        frame = pd.DataFrame(rows)
        primary = self.config.study.tail_k_ranges[0]
        swept = frame[(frame["source"] == "profile") & (frame["k_low"] == primary[0]) & (frame["k_high"] == primary[1])]
        values = swept["A_est"].to_numpy()
        positive = bool(np.all(values > 0.0))
        ratio = float(values.max() / values.min()) if positive else float("inf")
        flagged = bool(frame.loc[frame["source"] == "profile", ["growth_flag", "noise_flag"]].to_numpy().any())
        logger.info("Tail uniformity over %s: max/min A_est = %.3f", chosen, ratio)
        return TailUniformity(frame=frame, min_max_ratio=ratio, all_positive=positive, flagged=flagged)

    # LINEARIZED SPECTRUM

    def spectral_gap_study(self, sizes: Optional[Sequence[int]] = None) -> SpectralStudy:
        """Returns kernel dimension, gap and discretization diagnostics of the linearized operator per grid size.

        With two or more sizes the kernel tolerance is 10 times the drift of the near-zero eigenvalues
        between the two finest sizes; a single size falls back to the fixed tolerance. An eigensolver
        failure is recorded on its row and does not stop the other sizes.
        """
        chosen = list(sizes if sizes is not None else self.config.study.spectral_sizes)
        grid_settings = self.config.grid
        rows, eigen_rows, solved = [], [], {}
        for n_nodes in chosen:
            grid = RadialGrid(d=self.d, n_nodes=n_nodes, r_max=grid_settings.r_max, stretch=grid_settings.stretch)
            try:
                operator = assemble_linearized(grid)
                solved[n_nodes] = (operator, spectrum(operator))
            except EigenSolverError as error:
                rows.append({"n": n_nodes, "failed": True, "message": str(error)})
        tolerance = None
        if len(solved) >= 2:
            coarse, fine = sorted(solved)[-2:]
            tolerance = refinement_null_tolerance(solved[coarse][1], solved[fine][1])
            logger.info("Kernel tolerance %.4g from the n=%d/n=%d refinement drift", tolerance, coarse, fine)
        for n_nodes, (operator, values) in solved.items():
            report = analyze_spectrum(operator, tolerance, values)
            summary = report.to_dict()
            summary.pop("near_zero")
            rows.append({**summary, "failed": False, "message": ""})
            eigen_rows += [
                {"n": n_nodes, "index": index, "real": value.real, "imag": value.imag}
                for index, value in enumerate(report.eigenvalues)
            ]
        frame = pd.DataFrame(rows).sort_values("n", ignore_index=True)
        for column in ("kernel_dimension", "gap"):
            if column not in frame:
                frame[column] = np.nan
        ok = frame[~frame["failed"]].sort_values("n")
        gap_drift = float("nan")
        if len(ok) >= 2:
            finest, coarser = ok["gap"].iloc[-1], ok["gap"].iloc[-2]
            gap_drift = float(abs(finest - coarser) / abs(finest))
        frame["gap_drift"] = gap_drift
        logger.info("Spectral study over sizes %s: gap drift %.4f", chosen, gap_drift)
        return SpectralStudy(frame=frame, eigenvalues=pd.DataFrame(eigen_rows), gap_drift=gap_drift)

    # NONLINEAR ESTIMATE

    def nonlinear_estimate_probe(self, alphas: Optional[Sequence[float]] = None) -> NonlinearProbe:
        """Returns D, D^2 and alpha per sweep profile, with D the exponentially weighted distance to the
        Maxwellian, and the least-squares coefficients of D ~ c1 D^2 + c2 alpha.
        """
        chosen = self._sweep_alphas(alphas)
        kind = self.config.solver.init_kind
        profiles = self.profiles([(alpha, kind, 0) for alpha in chosen])
        a_weight, k_weight = StudyConfig.Y_NORM_WEIGHT.value
        maxwellian = MaxwellianSource(self.d)
        measured = np.array([profile.distance_to(maxwellian, a_weight, k_weight) for profile in profiles])
        distance, error = measured[:, 0], measured[:, 1]
        alpha_values = np.array(chosen)
        design = np.column_stack([distance**2, alpha_values])
        (c1, c2), *_ = np.linalg.lstsq(design, distance, rcond=None)
        fitted = design @ np.array([c1, c2])
        propagated = error * np.abs(1.0 - 2.0 * c1 * distance)
        scaled = np.abs(distance - fitted) / np.maximum(propagated, 1e-300)
        frame = pd.DataFrame(
            {"alpha": alpha_values, "D": distance, "D_err": error, "D_squared": distance**2, "fitted": fitted}
        )
        logger.info("Nonlinear estimate fit: c1=%.4g, c2=%.4g", c1, c2)
        return NonlinearProbe(frame=frame, c1=float(c1), c2=float(c2), max_scaled_residual=float(scaled.max()))


@typechecked
def profile_report(profile: SteadyProfile) -> Dict[str, Any]:
    """Returns the moment report of one steady profile: moments, coefficients, audits, residuals and tails."""
    coefficient_set = profile.coefficients()
    checks = audit_bounds(profile.moments, coefficient_set, profile.d)
    rate, rate_error = profile.annihilation_rate()
    return {
        "run": profile.summary(),
        "coefficients": coefficient_set.to_dict(),
        "drift_ratio": drift_bound_ratio(coefficient_set),
        "audits": [check.to_dict() for check in checks],
        "residuals": {f"{k:g}": list(profile.residual(k)) for k in StudyConfig.RESIDUAL_KS.value},
        "tail": tail_estimate(profile.moments).to_dict(),
        "annihilation_rate": {"measured": rate, "error": rate_error, "alpha_a": profile.alpha * coefficient_set.a},
    }
