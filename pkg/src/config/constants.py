from enum import Enum


class KinematicsConfig(Enum):
    """Defines constants for collision geometry and the angular (Povzner) coefficients."""

    MIN_DIMENSION = 2
    SIGMA_TOLERANCE = 1e-9
    POVZNER_ABS_TOLERANCE = 1e-13
    POVZNER_REL_TOLERANCE = 1e-12
    POVZNER_QUAD_LIMIT = 200
    ALPHA2_QUOTED_D3 = 0.401


class RadialGridConfig(Enum):
    """Defines constants for isotropic distributions sampled on a stretched radial grid."""

    DEFAULT_DIMENSION = 3
    DEFAULT_NODES = 48
    DEFAULT_R_MAX = 6.0
    DEFAULT_STRETCH = 1.5
    MIN_NODES = 8
    MASS_DEFICIT_TOLERANCE = 1e-4
    CSV_COLUMNS = ["r", "f"]


class QuadratureConfig(Enum):
    """Defines constants for the deterministic and Monte Carlo collision integrals."""

    RELATIVE_SPEED_ORDER = 32
    ANGLE_ORDER = 16
    MIN_ORDER = 8
    LOSS_KERNEL_ORDER = 64
    ELEMENT_ORDER = 8
    MAXWELLIAN_KERNEL_ORDER = 48
    CARLEMAN_MIN_SAMPLES = 10_000
    CARLEMAN_CHUNK = 1 << 17
    DEGENERATE_SEPARATION = 1e-12
    PROPOSAL_VARIANCE_FACTOR = 1.5
    MAX_LINEARIZED_NODES = 128
    NULL_TOLERANCE = 0.05
    NULL_DRIFT_FACTOR = 10.0
    KERNEL_DIMENSION = 2
    SYMMETRY_RADIUS = 3.0


class MomentsConfig(Enum):
    """Defines constants for moment functionals, tail estimates and weighted distances."""

    MAX_K = 10
    TAIL_GAMMA = 0.5
    TAIL_K_RANGE = (2, 6)
    TAIL_K_RANGE_REFINED = (3, 8)
    AUDIT_SIGMAS = 3.0
    AUDIT_FLOAT_SLACK = 1e-9
    FULL_PAIR_LIMIT = 4096
    SAMPLED_PAIRS = 2_000_000
    PAIR_BLOCK = 512
    PAIR_SAMPLING_SEED = 20_240_611
    TRUNCATION_TOLERANCE = 1e-6
    NOISE_RELATIVE_ERROR = 0.5
    ANALYTIC_BINS = 64
    LOSS_PROFILE_PARTICLES = 256
    MAXWELLIAN_REFERENCE_NODES = 96
    SOURCE_TYPE_RADIAL = "radial"
    SOURCE_TYPE_PARTICLE = "particle"
    SOURCE_TYPE_MAXWELLIAN = "maxwellian"
    SOURCE_TYPES = [SOURCE_TYPE_RADIAL, SOURCE_TYPE_PARTICLE, SOURCE_TYPE_MAXWELLIAN]

    @classmethod
    def is_valid_source_type(cls, source_type: str) -> bool:
        """Returns True if the moment source type is supported."""
        return source_type in cls.SOURCE_TYPES.value


class DsmcConfig(Enum):
    """Defines constants for the particle solver."""

    INIT_MAXWELLIAN = "maxwellian"
    INIT_UNIFORM_BALL = "uniform_ball"
    INIT_TWO_SHELLS = "two_shells"
    INIT_KINDS = [INIT_MAXWELLIAN, INIT_UNIFORM_BALL, INIT_TWO_SHELLS]
    MIN_PARTICLES = 1000
    TARGET_COLLISIONS_PER_STEP = 0.2
    MIN_SUB_WINDOWS = 8
    MIN_WINDOWS = 3
    BATCHES_PER_WINDOW = 4
    TRACKED_MOMENTS = (0.5, 1.5, 2.0)
    PROFILE_K_MAX = 5
    CHECKPOINT_FORMAT_VERSION = 1
    CHECKPOINT_DTYPE = "<f8"
    COUNTER_KEYS = ["collisions", "annihilations", "duplications", "rescalings", "majorant_doublings"]
    TIME_SERIES_COLUMNS = ["t", "M_half", "M_1", "M_3half", "M_2", "a", "b", "A", "B", "annihilations"]
    HISTOGRAM_COLUMNS = ["r_lo", "r_hi", "mass"]

    @classmethod
    def is_valid_init_kind(cls, kind: str) -> bool:
        """Returns True if the initial-data kind is supported."""
        return kind in cls.INIT_KINDS.value


class StudyConfig(Enum):
    """Defines constants for the orchestrated studies and their report files."""

    DEFAULT_ALPHAS = (0.02, 0.05, 0.08, 0.12)
    DISTANCE_WEIGHTS = ((0.0, 0.0), (0.0, 1.0), (0.2, 0.0))
    Y_NORM_WEIGHT = (0.2, 1.0)
    RESIDUAL_KS = (0.5, 1.5, 2.0)
    UNIQUENESS_ALPHA = 0.05
    UNIQUENESS_INITS = ("uniform_ball", "two_shells")
    SPECTRAL_SIZES = (48, 96)
    TAIL_RATIO_LIMIT = 2.0
    SPEARMAN_THRESHOLD = 0.8
    CONTROL_FLOOR_FACTOR = 2.0
    SWEEP_FILE = "sweep.csv"
    UNIQUENESS_FILE = "uniqueness.csv"
    TAILS_FILE = "tails.csv"
    SPECTRUM_FILE = "spectrum.csv"
    EIGENVALUES_FILE = "eigenvalues.csv"
    NONLINEAR_FILE = "nonlinear.csv"
    NONLINEAR_RESIDUAL_LIMIT = 3.0


class ReportConfig(Enum):
    """Defines constants for files written by the command-line interface."""

    OUTPUT_ENV_VAR = "ANNIHILATION_KINETICS_OUT"
    DEFAULT_OUTPUT_DIR = "out"
    HASH_PREFIX = "# config_hash="
    MANIFEST_FILE = "manifest.json"
    TIMING_FILE = "timing.json"
    VALIDATION_FILE = "validation_summary.json"
    TIME_SERIES_FILE = "time_series.csv"
    HISTOGRAM_FILE = "histogram.csv"
    MOMENT_REPORT_FILE = "moment_report.json"
    CHECKPOINT_FILE = "checkpoint.json"
    TRACKED_PACKAGES = ["numpy", "scipy", "pandas", "tabulate", "typeguard"]


class ExitCode(Enum):
    """Defines the process exit codes of the command-line interface."""

    SUCCESS = 0
    CHECK_FAILURE = 1
    CONFIGURATION_ERROR = 2
    PARTIAL = 3
