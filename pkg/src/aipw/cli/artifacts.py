"""Output directory writers: CSV tables, the metadata sidecar and error payloads.

Nothing written here carries a timestamp, so reruns with the same seed and
configuration produce byte-identical files.
"""

from __future__ import annotations

import json
import logging
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Final

import pandas as pd

from aipw.longitudinal_data import write_csv
from aipw.models import ArtifactMetadata, ErrorPayload
from aipw.shared.seeding import config_hash

logger = logging.getLogger(__name__)

DIST_NAME: Final = "aipw-longitudinal"
METADATA_FILE: Final = "metadata.json"
ERROR_FILE: Final = "error.json"
DEFAULT_OUTPUT: Final = Path("out")


def package_version() -> str:
    """Installed distribution version (``0+unknown`` from a source checkout)."""
    try:
        return version(DIST_NAME)
    except PackageNotFoundError:
        return "0+unknown"


def _dumps(payload: Any) -> str:  # noqa: ANN401
    return json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"


class ArtifactWriter:
    """Collects one command's artifacts in an output directory.

    Args:
        out_dir: Directory to write into (created when missing).
        command: CLI subcommand name.
        seed: Master seed of the run.
        config: Effective configuration, hashed into the metadata.
    """

    def __init__(self, out_dir: Path, command: str, seed: int, config: Any) -> None:  # noqa: ANN401
        self._out_dir = out_dir
        self._command = command
        self._seed = seed
        self._hash = config_hash(config)
        self._written: list[str] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    @property
    def out_dir(self) -> Path:
        return self._out_dir

    def table(self, name: str, frame: pd.DataFrame) -> Path:
        """Write ``frame`` as ``<out>/<name>`` with pinned float precision."""
        path = self._out_dir / name
        with path.open("w", encoding="utf-8", newline="") as handle:
            write_csv(frame, handle)
        self._written.append(name)
        logger.info("Wrote %s (%d rows)", path, len(frame))
        return path

    def finish(self, switches: dict[str, Any]) -> ArtifactMetadata:
        """Write ``metadata.json`` listing the switches in effect and the files written."""
        metadata = ArtifactMetadata(
            package=DIST_NAME,
            version=package_version(),
            command=self._command,
            seed=self._seed,
            config_hash=self._hash,
            switches=switches,
            artifacts=tuple(self._written),
        )
        path = self._out_dir / METADATA_FILE
        path.write_text(_dumps(metadata.model_dump(mode="json")), encoding="utf-8")
        return metadata


def write_error(out_dir: Path, payload: ErrorPayload) -> None:
    """Write the error payload to stderr and, when possible, ``<out>/error.json``."""
    text = _dumps(payload.model_dump())
    sys.stderr.write(text)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / ERROR_FILE).write_text(text, encoding="utf-8")
    except OSError:
        logger.warning("Could not write %s to %s", ERROR_FILE, out_dir)


def echo(text: str) -> None:
    """Human-readable report on stdout."""
    sys.stdout.write(text.rstrip("\n") + "\n")
