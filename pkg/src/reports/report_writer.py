import json
import logging
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from src.config.constants import ReportConfig
from src.config.errors import ProvenanceError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable.")


class ReportWriter:
    """Defines the reading and writing of every artifact a command produces.

    CSV tables start with a `# config_hash=<sha256>` line naming the configuration that produced
    them; JSON documents carry the same hash under `config_hash`. Everything is written with sorted
    keys and fixed formatting so that reruns are byte-identical.
    """

    @staticmethod
    def write_frame(frame: pd.DataFrame, path: PathLike, config_hash: str) -> Path:
        """Writes a DataFrame to CSV below its provenance line."""
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", newline="") as handle:
            handle.write(f"{ReportConfig.HASH_PREFIX.value}{config_hash}\n")
            frame.to_csv(handle, index=False, float_format="%.12g")
        logger.info("Wrote %s (%d rows).", target, len(frame))
        return target

    @staticmethod
    def read_hash(path: PathLike) -> Optional[str]:
        """Returns the config hash recorded in the first line of a CSV, or None if it has none."""
        with Path(path).open() as handle:
            first = handle.readline().strip()
        prefix = ReportConfig.HASH_PREFIX.value
        return first[len(prefix) :] if first.startswith(prefix) else None

    @staticmethod
    def read_frame(path: PathLike) -> pd.DataFrame:
        """Reads a CSV written by write_frame."""
        return pd.read_csv(path, comment="#")

    @staticmethod
    def write_json(document: Dict[str, Any], path: PathLike, config_hash: Optional[str] = None) -> Path:
        """Writes a JSON document with sorted keys, stamped with the config hash when one is given."""
        body = dict(document)
        if config_hash is not None:
            body["config_hash"] = config_hash
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(json.dumps(body, sort_keys=True, indent=2, default=_json_default) + "\n")
        logger.info("Wrote %s.", target)
        return target

    @staticmethod
    def read_json(path: PathLike) -> Dict[str, Any]:
        """Reads a JSON document."""
        return json.loads(Path(path).read_text())

    @staticmethod
    def package_versions() -> Dict[str, str]:
        """Returns the installed versions of the numerical stack."""
        versions = {}
        for package in ReportConfig.TRACKED_PACKAGES.value:
            try:
                versions[package] = metadata.version(package)
            except metadata.PackageNotFoundError:
                versions[package] = "not installed"
        return versions

    @classmethod
    def write_manifest(
        cls,
        output_dir: PathLike,
        command: str,
        config: Dict[str, Any],
        config_hash: str,
        seeds: Dict[str, Any],
        artifacts: List[str],
        partial: bool = False,
        notes: Optional[List[str]] = None,
    ) -> Path:
        """Writes manifest.json: command, configuration and its hash, seeds, package versions, artifacts."""
        manifest = {
            "command": command,
            "config": config,
            "seeds": seeds,
            "versions": cls.package_versions(),
            "artifacts": sorted(artifacts),
            "partial": partial,
            "notes": notes or [],
        }
        return cls.write_json(manifest, Path(output_dir) / ReportConfig.MANIFEST_FILE.value, config_hash)

    @classmethod
    def write_timing(cls, output_dir: PathLike, wall_seconds: float) -> Path:
        """Writes timing.json, kept apart from the manifest since wall time changes between reruns."""
        return cls.write_json({"wall_seconds": round(wall_seconds, 3)}, Path(output_dir) / ReportConfig.TIMING_FILE.value)

    @classmethod
    def aggregate_frames(cls, paths: List[PathLike]) -> pd.DataFrame:
        """Concatenates CSV tables that share one config hash.

        Raises:
            ProvenanceError: the tables come from different configurations or one carries no hash.
        """
        if not paths:
            raise ValueError("No tables to aggregate.")
        hashes = {str(path): cls.read_hash(path) for path in paths}
        distinct = set(hashes.values())
        if None in distinct or len(distinct) != 1:
            logger.error("Refusing to aggregate tables of mixed provenance: %s", hashes)
            raise ProvenanceError(f"Tables come from different configurations: {hashes}.")
        return pd.concat([cls.read_frame(path) for path in paths], ignore_index=True)
