import base64
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from typeguard import typechecked

from src.config.constants import DsmcConfig
from src.config.errors import CheckpointError
from src.dsmc.ensemble import ParticleEnsemble

logger = logging.getLogger(__name__)


def _payload_digest(payload: Dict[str, Any]) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@typechecked
class EnsembleCheckpoint:
    """Saves and restores a ParticleEnsemble as a checksummed JSON document.

    Velocities are stored as base64 little-endian float64 and the random stream as its
    bit-generator state, so a restored ensemble continues bit for bit.
    """

    @staticmethod
    def to_payload(ens: ParticleEnsemble, alpha: float) -> Dict[str, Any]:
        """Returns the JSON-ready body of a checkpoint, without its checksum."""
        raw = np.ascontiguousarray(ens.velocities, dtype=DsmcConfig.CHECKPOINT_DTYPE.value).tobytes()
        return {
            "format_version": DsmcConfig.CHECKPOINT_FORMAT_VERSION.value,
            "d": ens.d,
            "n": ens.n_particles,
            "alpha": alpha,
            "t": ens.t,
            "v_maj": ens.v_maj,
            "velocities": base64.b64encode(raw).decode("ascii"),
            "rng_state": ens.rng.bit_generator.state,
            "counters": dict(ens.counters),
        }

    @staticmethod
    def save(ens: ParticleEnsemble, path: Union[str, Path], alpha: float) -> Path:
        """Writes the ensemble to `path` and returns the path."""
        payload = EnsembleCheckpoint.to_payload(ens, alpha)
        document = {"checksum": _payload_digest(payload), "payload": payload}
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(json.dumps(document, sort_keys=True, indent=1))
        logger.info("Wrote checkpoint of %d particles at t=%.4f to %s.", ens.n_particles, ens.t, target)
        return target

    @staticmethod
    def load(path: Union[str, Path], expected_d: Optional[int] = None) -> ParticleEnsemble:
        """Returns the ensemble stored at `path`.

        Raises:
            CheckpointError: unreadable file, checksum mismatch, unsupported format version, or a
                dimension different from `expected_d`.
        """
        try:
            document = json.loads(Path(path).read_text())
            payload, checksum = document["payload"], document["checksum"]
        except (OSError, ValueError, KeyError, TypeError) as error:
            raise CheckpointError(f"Checkpoint {path} is unreadable: {error}") from error
        if _payload_digest(payload) != checksum:
            raise CheckpointError(f"Checkpoint {path} failed its checksum; the file is corrupted.")
        version = payload.get("format_version")
        if version != DsmcConfig.CHECKPOINT_FORMAT_VERSION.value:
            raise CheckpointError(
                f"Checkpoint {path} has format version {version}; this build reads "
                f"version {DsmcConfig.CHECKPOINT_FORMAT_VERSION.value}."
            )
        d, n = int(payload["d"]), int(payload["n"])
        if expected_d is not None and d != expected_d:
            raise CheckpointError(f"Checkpoint {path} holds a d={d} ensemble; a d={expected_d} run cannot resume it.")
        raw = base64.b64decode(payload["velocities"])
        velocities = np.frombuffer(raw, dtype=DsmcConfig.CHECKPOINT_DTYPE.value).astype(float).reshape(n, d)
        state = payload["rng_state"]
        bit_generator = getattr(np.random, state["bit_generator"])()
        bit_generator.state = state
        return ParticleEnsemble(
            velocities=velocities,
            rng=np.random.Generator(bit_generator),
            t=float(payload["t"]),
            counters=payload["counters"],
            v_maj=None if payload["v_maj"] is None else float(payload["v_maj"]),
        )


@typechecked
def checkpoint(ens: ParticleEnsemble, path: Union[str, Path], alpha: float) -> Path:
    """Saves the ensemble; see EnsembleCheckpoint.save."""
    return EnsembleCheckpoint.save(ens, path, alpha)


@typechecked
def restore(path: Union[str, Path], expected_d: Optional[int] = None) -> ParticleEnsemble:
    """Restores an ensemble; see EnsembleCheckpoint.load."""
    return EnsembleCheckpoint.load(path, expected_d)
