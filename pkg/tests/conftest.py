import numpy as np
import pytest

from src.config.settings import RunConfig, apply_overrides
from src.kinetics.radial_grid import RadialGrid
from src.kinetics.radial_ops import maxwellian


@pytest.fixture
def grid() -> RadialGrid:
    return RadialGrid(d=3, n_nodes=48, r_max=6.0)


@pytest.fixture
def maxwellian_3d(grid):
    return maxwellian(grid)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)


@pytest.fixture
def small_config(tmp_path) -> RunConfig:
    """A configuration small enough for particle runs inside the unit tests."""
    overrides = [
        "solver.n_particles=2000",
        "solver.max_steps=400",
        "solver.window_steps=12",
        "study.alphas=[0.05, 0.1]",
        "study.uniqueness_alpha=0.05",
        "study.bootstrap_resamples=50",
        "study.noise_floor_replicas=2",
        "study.carleman_samples=20000",
        f"output_dir=\"{tmp_path / 'out'}\"",
    ]
    return RunConfig.from_dict(apply_overrides(RunConfig().to_dict(), overrides))
