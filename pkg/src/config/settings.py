import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from typeguard import typechecked

from src.config.constants import (
    DsmcConfig,
    MomentsConfig,
    QuadratureConfig,
    RadialGridConfig,
    ReportConfig,
    StudyConfig,
)
from src.config.errors import ConfigurationError


@dataclass(frozen=True)
class GridSettings:
    """Settings of the radial grid and the deterministic quadrature rules."""

    n_nodes: int = RadialGridConfig.DEFAULT_NODES.value
    r_max: float = RadialGridConfig.DEFAULT_R_MAX.value
    stretch: float = RadialGridConfig.DEFAULT_STRETCH.value
    relative_order: int = QuadratureConfig.RELATIVE_SPEED_ORDER.value
    angle_order: int = QuadratureConfig.ANGLE_ORDER.value


@dataclass(frozen=True)
class SolverSettings:
    """Settings of a single particle run. `dt` and `v_maj` are derived from the ensemble when null."""

    alpha: float = 0.0
    n_particles: int = 100_000
    dt: Optional[float] = None
    oversampling: float = 1.2
    v_maj: Optional[float] = None
    window_steps: int = 20
    steady_tolerance: float = 3.0
    max_steps: int = 4000
    sub_windows: int = DsmcConfig.MIN_SUB_WINDOWS.value
    seed: int = 12345
    init_kind: str = DsmcConfig.INIT_UNIFORM_BALL.value
    shell_r1: float = 1.0
    shell_r2: float = 2.0
    shell_p: float = 0.5


@dataclass(frozen=True)
class StudySettings:
    """Settings shared by the orchestrated studies."""

    alphas: Tuple[float, ...] = StudyConfig.DEFAULT_ALPHAS.value
    include_control: bool = True
    distance_weights: Tuple[Tuple[float, float], ...] = StudyConfig.DISTANCE_WEIGHTS.value
    uniqueness_alpha: float = StudyConfig.UNIQUENESS_ALPHA.value
    uniqueness_inits: Tuple[str, ...] = StudyConfig.UNIQUENESS_INITS.value
    tail_k_ranges: Tuple[Tuple[int, int], ...] = (
        MomentsConfig.TAIL_K_RANGE.value,
        MomentsConfig.TAIL_K_RANGE_REFINED.value,
    )
    spectral_sizes: Tuple[int, ...] = StudyConfig.SPECTRAL_SIZES.value
    noise_floor_replicas: int = 4
    bootstrap_resamples: int = 200
    carleman_samples: int = 1_000_000


@dataclass(frozen=True)
class RunConfig:
    """Defines the complete, archivable configuration of one command-line invocation.

    A RunConfig is parsed from JSON, validated before any run, and serialized back to the same
    canonical JSON. Its hash is stamped on every output file.
    """

    dimension: int = RadialGridConfig.DEFAULT_DIMENSION.value
    workers: int = 1
    output_dir: Optional[str] = None
    grid: GridSettings = field(default_factory=GridSettings)
    solver: SolverSettings = field(default_factory=SolverSettings)
    study: StudySettings = field(default_factory=StudySettings)

    # SERIALIZATION

    def to_dict(self) -> Dict[str, Any]:
        """Returns the configuration as plain JSON-compatible types (tuples become lists)."""
        return _to_builtin(dataclasses.asdict(self))

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "RunConfig":
        """Returns a validated RunConfig parsed from a dict.

        Raises:
            ConfigurationError: an unknown key, a wrongly-typed value or an invalid setting.
        """
        config = _build(cls, raw, path="")
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: str, overrides: Optional[List[str]] = None) -> "RunConfig":
        """Returns a RunConfig read from a JSON file with optional `a.b=value` overrides applied."""
        try:
            with open(path, "r", encoding="utf-8") as handle:
                raw = json.load(handle)
        except (OSError, json.JSONDecodeError) as error:
            raise ConfigurationError(f"Unable to read config file '{path}': {error}") from error
        return cls.from_dict(apply_overrides(raw, overrides or []))

    def canonical_json(self) -> str:
        """Returns the sorted-key, compact JSON the config hash is computed from."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """Returns the SHA-256 hex digest of the canonical JSON."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def resolve_output_dir(self) -> str:
        """Returns the output directory: config value, then the environment fallback, then `./out`."""
        if self.output_dir:
            return self.output_dir
        return os.environ.get(ReportConfig.OUTPUT_ENV_VAR.value, ReportConfig.DEFAULT_OUTPUT_DIR.value)

    def with_solver(self, **changes: Any) -> "RunConfig":
        """Returns a copy with the given solver fields replaced."""
        return dataclasses.replace(self, solver=dataclasses.replace(self.solver, **changes))

    # VALIDATION

    def validate(self) -> None:
        """Checks every setting against its admissible range.

        Raises:
            ConfigurationError: the first setting found outside its range.
        """
        grid, solver, study = self.grid, self.solver, self.study
        checks = [
            (self.dimension >= 2, f"dimension must be >= 2, got {self.dimension}"),
            (self.workers >= 1, f"workers must be >= 1, got {self.workers}"),
            (
                grid.n_nodes >= RadialGridConfig.MIN_NODES.value,
                f"grid.n_nodes must be >= {RadialGridConfig.MIN_NODES.value}, got {grid.n_nodes}",
            ),
            (grid.r_max > 0, f"grid.r_max must be positive, got {grid.r_max}"),
            (grid.stretch >= 1.0, f"grid.stretch must be >= 1, got {grid.stretch}"),
            (
                min(grid.relative_order, grid.angle_order) >= QuadratureConfig.MIN_ORDER.value,
                f"quadrature orders must be >= {QuadratureConfig.MIN_ORDER.value}",
            ),
            (0.0 <= solver.alpha < 1.0, f"solver.alpha must lie in [0, 1), got {solver.alpha}"),
            (
                solver.n_particles >= DsmcConfig.MIN_PARTICLES.value,
                f"solver.n_particles must be >= {DsmcConfig.MIN_PARTICLES.value}, got {solver.n_particles}",
            ),
            (solver.dt is None or solver.dt > 0, f"solver.dt must be positive, got {solver.dt}"),
            (solver.v_maj is None or solver.v_maj > 0, f"solver.v_maj must be positive, got {solver.v_maj}"),
            (solver.oversampling >= 1.0, f"solver.oversampling must be >= 1, got {solver.oversampling}"),
            (solver.window_steps >= 4, f"solver.window_steps must be >= 4, got {solver.window_steps}"),
            (solver.steady_tolerance > 0, "solver.steady_tolerance must be positive"),
            (solver.max_steps > 0, f"solver.max_steps must be positive, got {solver.max_steps}"),
            (
                solver.sub_windows >= DsmcConfig.MIN_SUB_WINDOWS.value,
                f"solver.sub_windows must be >= {DsmcConfig.MIN_SUB_WINDOWS.value}",
            ),
            (
                DsmcConfig.is_valid_init_kind(solver.init_kind),
                f"solver.init_kind '{solver.init_kind}' is not one of {DsmcConfig.INIT_KINDS.value}",
            ),
            (len(study.alphas) > 0, "study.alphas must not be empty"),
            (
                all(0.0 < alpha < 1.0 for alpha in study.alphas),
                f"study.alphas must lie in (0, 1), got {list(study.alphas)}",
            ),
            (
                list(study.alphas) == sorted(set(study.alphas)),
                f"study.alphas must be strictly increasing, got {list(study.alphas)}",
            ),
            (
                all(a >= 0 and k >= 0 for a, k in study.distance_weights),
                "study.distance_weights must be non-negative",
            ),
            (
                len(study.uniqueness_inits) >= 2
                and all(DsmcConfig.is_valid_init_kind(kind) for kind in study.uniqueness_inits),
                f"study.uniqueness_inits must name >= 2 valid kinds, got {list(study.uniqueness_inits)}",
            ),
            (
                all(2 <= low < high for low, high in study.tail_k_ranges),
                "study.tail_k_ranges must be increasing pairs starting at >= 2",
            ),
            (
                all(
                    RadialGridConfig.MIN_NODES.value <= size <= QuadratureConfig.MAX_LINEARIZED_NODES.value
                    for size in study.spectral_sizes
                ),
                f"study.spectral_sizes must lie in "
                f"[{RadialGridConfig.MIN_NODES.value}, {QuadratureConfig.MAX_LINEARIZED_NODES.value}]",
            ),
            (study.noise_floor_replicas >= 2, "study.noise_floor_replicas must be >= 2"),
            (study.bootstrap_resamples >= 20, "study.bootstrap_resamples must be >= 20"),
            (
                study.carleman_samples >= QuadratureConfig.CARLEMAN_MIN_SAMPLES.value,
                f"study.carleman_samples must be >= {QuadratureConfig.CARLEMAN_MIN_SAMPLES.value}",
            ),
        ]
        for passed, message in checks:
            if not passed:
                raise ConfigurationError(message)


@typechecked
def apply_overrides(raw: Dict[str, Any], overrides: List[str]) -> Dict[str, Any]:
    """Returns a copy of a raw config dict with dotted-path `key=value` overrides applied.

    Values are parsed as JSON, falling back to the raw string (so `solver.init_kind=two_shells` works).

    Raises:
        ConfigurationError: a malformed override or a path naming an unknown section.
    """
    updated = json.loads(json.dumps(raw))
    for override in overrides:
        if "=" not in override:
            raise ConfigurationError(f"Override '{override}' is not of the form key=value.")
        path, text = override.split("=", 1)
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        keys = path.strip().split(".")
        target = updated
        for key in keys[:-1]:
            section = target.setdefault(key, {})
            if not isinstance(section, dict):
                raise ConfigurationError(f"Override '{override}' descends into non-section '{key}'.")
            target = section
        target[keys[-1]] = value
    return updated


def _to_builtin(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(item) for item in value]
    return value


def _build(cls: type, raw: Any, path: str) -> Any:
    if not isinstance(raw, dict):
        raise ConfigurationError(f"Config section '{path or 'root'}' must be an object.")
    fields = {item.name: item for item in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - set(fields))
    if unknown:
        raise ConfigurationError(f"Unknown config key(s) in '{path or 'root'}': {unknown}")
    kwargs = {}
    for name, value in raw.items():
        kwargs[name] = _coerce(fields[name], value, f"{path}.{name}" if path else name)
    return cls(**kwargs)


_SECTIONS = {"grid": GridSettings, "solver": SolverSettings, "study": StudySettings}


def _coerce(spec: dataclasses.Field, value: Any, path: str) -> Any:
    if spec.name in _SECTIONS and path == spec.name:
        return _build(_SECTIONS[spec.name], value, path)
    default = spec.default if spec.default is not dataclasses.MISSING else None
    if spec.name in ("dt", "v_maj", "output_dir"):
        if value is None:
            return None
        if spec.name == "output_dir":
            return _expect(value, str, path)
        return float(_expect_number(value, path))
    if isinstance(default, bool):
        return _expect(value, bool, path)
    if isinstance(default, int):
        number = _expect_number(value, path)
        if float(number) != int(number):
            raise ConfigurationError(f"Config key '{path}' must be an integer, got {value!r}")
        return int(number)
    if isinstance(default, float):
        return float(_expect_number(value, path))
    if isinstance(default, str):
        return _expect(value, str, path)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"Config key '{path}' must be a list, got {value!r}")
        return tuple(_coerce_item(item, default, path) for item in value)
    raise ConfigurationError(f"Config key '{path}' has no known type.")


def _coerce_item(item: Any, default: tuple, path: str) -> Any:
    sample = default[0] if default else None
    if isinstance(sample, tuple):
        if not isinstance(item, (list, tuple)) or len(item) != len(sample):
            raise ConfigurationError(f"Config key '{path}' expects pairs, got {item!r}")
        return tuple(type(part)(_expect_number(entry, path)) for part, entry in zip(sample, item))
    if isinstance(sample, str):
        return _expect(item, str, path)
    if isinstance(sample, int) and not isinstance(sample, bool):
        return int(_expect_number(item, path))
    return float(_expect_number(item, path))


def _expect(value: Any, kind: type, path: str) -> Any:
    if not isinstance(value, kind):
        raise ConfigurationError(f"Config key '{path}' must be of type {kind.__name__}, got {value!r}")
    return value


def _expect_number(value: Any, path: str) -> Any:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"Config key '{path}' must be a number, got {value!r}")
    return value
