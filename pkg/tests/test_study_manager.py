import numpy as np
import pandas as pd
import pytest

from src.config.errors import ConfigurationError
from src.experiments.study_manager import (
    ProfileStudyManager,
    SweepResult,
    NonlinearProbe,
    TailUniformity,
    UniquenessVerdict,
    profile_report,
    profile_seed,
    simulate_profile,
    weight_label,
)


def test_weight_label() -> None:
    assert weight_label(0.2, 0.0) == "a0.2_k0"
    assert weight_label(0.0, 1.0) == "a0_k1"


def test_profile_seeds_are_deterministic_and_distinct() -> None:
    seed = profile_seed(12345, 0.05, "uniform_ball")
    assert seed == profile_seed(12345, 0.05, "uniform_ball")
    others = {
        profile_seed(12345, 0.05, "uniform_ball", replica=1),
        profile_seed(12345, 0.08, "uniform_ball"),
        profile_seed(12345, 0.05, "two_shells"),
        profile_seed(12346, 0.05, "uniform_ball"),
    }
    assert seed not in others and len(others) == 4
    assert 0 <= seed < 2**32


@pytest.mark.parametrize("alphas", [[0.1, 0.05], [0.05, 0.3], []])
def test_sweep_refuses_invalid_alphas(small_config, alphas) -> None:
    with pytest.raises(ConfigurationError, match="alpha"):
        ProfileStudyManager(small_config).boltzmann_limit_study(alphas)


def test_uniqueness_refuses_invalid_requests(small_config) -> None:
    manager = ProfileStudyManager(small_config)
    with pytest.raises(ConfigurationError, match="two valid"):
        manager.uniqueness_study(inits=["uniform_ball"])
    with pytest.raises(ConfigurationError, match="below the sweep maximum"):
        manager.uniqueness_study(alpha=0.2)


def test_sweep_result_validation() -> None:
    with pytest.raises(ValueError, match="increasing"):
        SweepResult(alphas=[0.05, 0.02], weights=[], distances={}, noise_floor={}, fits={})
    with pytest.raises(ValueError, match="non-negative"):
        SweepResult(alphas=[0.02], weights=[(0.0, 0.0)], distances={"a0_k0": [(-0.1, 0.0)]}, noise_floor={}, fits={})


def test_sweep_frame_layout() -> None:
    result = SweepResult(
        alphas=[0.02, 0.05],
        weights=[(0.0, 0.0)],
        distances={"a0_k0": [(0.03, 0.002), (0.05, 0.002)]},
        noise_floor={"a0_k0": (0.01, 0.001)},
        fits={},
        control={"a0_k0": (0.012, 0.002)},
        timed_out={0.02: False, 0.05: True, 0.0: False},
    )
    frame = result.to_frame()
    assert list(frame["row"]) == ["alpha", "alpha", "control", "noise_floor"]
    np.testing.assert_allclose(result.net("a0_k0"), [0.02, 0.04])
    assert frame.loc[0, "net_a0_k0"] == pytest.approx(0.02)
    assert result.partial


def test_fit_recovers_a_linear_law() -> None:
    alphas = np.array([0.02, 0.05, 0.08, 0.12])
    fit = ProfileStudyManager._fit(alphas, 2.0 * alphas)
    assert fit["kappa_hat"] == pytest.approx(2.0)
    assert fit["intercept"] == pytest.approx(0.0, abs=1e-12)
    assert fit["correlation"] == pytest.approx(1.0)
    assert fit["spearman"] == pytest.approx(1.0)
    assert np.isnan(ProfileStudyManager._fit(alphas[:2], alphas[:2])["spearman"])


def test_uniqueness_verdict_reports_the_worst_pair() -> None:
    comparisons = [
        {"distance": 0.01, "combined_error": 0.01, "passed": True},
        {"distance": 0.05, "combined_error": 0.01, "passed": False},
    ]
    verdict = UniquenessVerdict(
        alpha=0.05, inits=["a", "b", "c"], seeds=[1, 2, 3], a_weight=0.2, k_weight=1.0, comparisons=comparisons
    )
    assert not verdict.passed
    assert verdict.distance == 0.05
    assert verdict.to_dict()["combined_error"] == 0.01
    assert len(verdict.to_frame()) == 2


def test_tail_uniformity_verdict() -> None:
    frame = pd.DataFrame()
    assert TailUniformity(frame=frame, min_max_ratio=1.5, all_positive=True, flagged=False).passed
    assert not TailUniformity(frame=frame, min_max_ratio=2.5, all_positive=True, flagged=False).passed
    assert not TailUniformity(frame=frame, min_max_ratio=1.0, all_positive=False, flagged=False).passed


def test_nonlinear_fit_verdict() -> None:
    frame = pd.DataFrame()
    assert NonlinearProbe(frame=frame, c1=0.4, c2=1.2, max_scaled_residual=2.0).passed
    assert not NonlinearProbe(frame=frame, c1=0.4, c2=-0.1, max_scaled_residual=2.0).passed
    assert not NonlinearProbe(frame=frame, c1=0.4, c2=1.2, max_scaled_residual=3.5).passed


def test_spectral_study_layout(small_config) -> None:
    study = ProfileStudyManager(small_config).spectral_gap_study([48])
    row = study.frame.iloc[0]
    assert not row["failed"]
    assert row["n"] == 48
    assert len(study.eigenvalues) == 48
    assert row["null_tolerance"] == 0.05
    assert np.isnan(study.gap_drift)


@pytest.mark.slow
def test_spectral_study_derives_kernel_tolerance_from_refinement(small_config) -> None:
    study = ProfileStudyManager(small_config).spectral_gap_study([96, 48])
    assert list(study.frame["n"]) == [48, 96]
    tolerances = study.frame["null_tolerance"].to_numpy()
    assert tolerances[0] == tolerances[1]
    assert tolerances[0] != 0.05
    assert list(study.frame["kernel_dimension"]) == [2, 2]
    assert (study.frame["gap"] > 0.0).all()


@pytest.mark.slow
def test_profile_report_of_a_short_run(small_config) -> None:
    config = small_config.with_solver(max_steps=5)
    profile, ensemble = simulate_profile(config, 0.05, "maxwellian")
    assert profile.timed_out
    assert ensemble.n_particles == 2000
    report = profile_report(profile)
    assert set(report) == {"run", "coefficients", "drift_ratio", "audits", "residuals", "tail", "annihilation_rate"}
    assert set(report["residuals"]) == {"0.5", "1.5", "2"}
    assert report["annihilation_rate"]["alpha_a"] == pytest.approx(0.05 * report["coefficients"]["a"])


@pytest.mark.slow
def test_small_sweep_end_to_end(small_config) -> None:
    manager = ProfileStudyManager(small_config)
    result = manager.boltzmann_limit_study()
    frame = result.to_frame()
    assert list(frame["row"]) == ["alpha", "alpha", "control", "noise_floor"]
    assert set(result.fits) == {"a0_k0", "a0_k1", "a0.2_k0"}
    assert all(value >= 0.0 for values in result.distances.values() for value, _ in values)
    assert set(result.residuals[0.05]) == {"0.5", "1.5", "2"}
    tails = manager.tail_uniformity_study()
    assert set(tails.frame["source"]) == {"maxwellian", "profile"}
    probe = manager.nonlinear_estimate_probe()
    assert len(probe.frame) == 2


@pytest.mark.slow
def test_reproducibility_check_with_two_seeds(small_config) -> None:
    verdict = ProfileStudyManager(small_config).uniqueness_study(inits=["uniform_ball", "uniform_ball"])
    assert len(verdict.comparisons) == 1
    assert verdict.comparisons[0]["replica_b"] == 1
    assert verdict.seeds[0] != verdict.seeds[1]
    assert verdict.combined_error > 0.0
