import json

import numpy as np
import pytest

from src.config.errors import CheckpointError
from src.dsmc.checkpoint import EnsembleCheckpoint, _payload_digest, checkpoint, restore
from src.dsmc.ensemble import init_ensemble
from src.dsmc.solver import SolverConfig, step


@pytest.fixture
def saved(tmp_path):
    ens = init_ensemble("two_shells", 1000, 3, seed=21)
    cfg = SolverConfig(alpha=0.1)
    for _ in range(3):
        step(ens, cfg)
    path = checkpoint(ens, tmp_path / "checkpoint.json", 0.1)
    return ens, cfg, path


def test_restored_ensemble_continues_bit_for_bit(saved) -> None:
    ens, cfg, path = saved
    resumed = restore(path, expected_d=3)
    np.testing.assert_array_equal(resumed.velocities, ens.velocities)
    assert resumed.t == ens.t and resumed.v_maj == ens.v_maj
    for _ in range(3):
        step(ens, cfg)
        step(resumed, cfg)
    np.testing.assert_array_equal(resumed.velocities, ens.velocities)
    assert resumed.counters == ens.counters


def test_corrupted_checkpoint_is_refused(saved) -> None:
    _, _, path = saved
    document = json.loads(path.read_text())
    document["payload"]["t"] += 1.0
    path.write_text(json.dumps(document))
    with pytest.raises(CheckpointError, match="checksum"):
        restore(path)


def test_unreadable_checkpoint_is_refused(tmp_path) -> None:
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(CheckpointError, match="unreadable"):
        restore(path)


def test_checkpoint_of_another_dimension_is_refused(saved) -> None:
    _, _, path = saved
    with pytest.raises(CheckpointError, match="d=3"):
        restore(path, expected_d=2)


def test_unknown_format_version_is_refused(saved) -> None:
    ens, _, path = saved
    payload = EnsembleCheckpoint.to_payload(ens, 0.1)
    payload["format_version"] = 99
    path.write_text(json.dumps({"checksum": _payload_digest(payload), "payload": payload}))
    with pytest.raises(CheckpointError, match="format version"):
        restore(path)
