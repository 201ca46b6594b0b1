import pytest

import src.experiments.validation as validation
from src.config.settings import RunConfig
from src.experiments.validation import ValidationSuite


@pytest.fixture
def suite(small_config: RunConfig) -> ValidationSuite:
    return ValidationSuite(small_config)


def test_check_names_are_sorted_and_complete(suite: ValidationSuite) -> None:
    names = suite.names()
    assert names == sorted(names)
    assert {"povzner_anchor", "kinematic_conservation", "loss_kernel_oracle", "carleman_oracle"} <= set(names)


def test_filter_selects_matching_checks(suite: ValidationSuite) -> None:
    results = suite.run("povzner")
    assert [result.name for result in results] == ["povzner_anchor", "povzner_closed_form", "povzner_table"]
    assert all(result.passed for result in results)


def test_deterministic_checks_pass(suite: ValidationSuite) -> None:
    for name in ("kinematic_conservation", "loss_kernel_oracle", "coefficient_identities", "maxwellian_audit"):
        (result,) = suite.run(name)
        assert result.passed, result.detail


@pytest.mark.parametrize(
    "name", ["loss_kernel_oracle", "kinematic_conservation", "povzner_table", "maxwellian_grid_moments"]
)
def test_checks_return_plain_bool(suite: ValidationSuite, name: str) -> None:
    passed, detail = getattr(suite, f"check_{name}")()
    assert type(passed) is bool
    assert passed, detail


def test_equilibrium_identity_holds_on_every_node(suite: ValidationSuite) -> None:
    passed, detail = suite.check_equilibrium_identity()
    assert passed, detail


def test_injected_loss_kernel_fault_is_caught(suite: ValidationSuite, monkeypatch) -> None:
    original = validation.loss_kernel
    monkeypatch.setattr(validation, "loss_kernel", lambda d, r, r_prime: 1.01 * original(d, r, r_prime))
    (result,) = suite.run("loss_kernel_oracle")
    assert not result.passed


def test_a_raising_check_is_recorded_as_failed(suite: ValidationSuite, monkeypatch) -> None:
    def broken(*args, **kwargs):
        raise RuntimeError("table unavailable")

    monkeypatch.setattr(validation, "povzner_coefficient", broken)
    results = {result.name: result for result in suite.run("povzner")}
    assert not results["povzner_anchor"].passed
    assert results["povzner_anchor"].detail == "RuntimeError: table unavailable"
    assert results["povzner_table"].passed


def test_summary_frame_columns(suite: ValidationSuite) -> None:
    frame = ValidationSuite.summary_frame(suite.run("anchor"))
    assert list(frame.columns) == ["name", "passed", "detail"]
    assert len(frame) == 1


@pytest.mark.slow
def test_full_suite_passes(suite: ValidationSuite) -> None:
    failed = [(result.name, result.detail) for result in suite.run() if not result.passed]
    assert failed == []
