import hashlib
import json
import logging
import platform
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from ..errors import DataIOError
from ..jsonio import read_json, write_json

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def config_digest(config: Dict[str, Any]) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    """What ran, with which inputs, and what it wrote. Enough to replay the run."""

    command: str
    seed: Optional[int]
    config: Optional[Dict[str, Any]]
    config_digest: Optional[str]
    inputs: Dict[str, Any]
    outputs: List[str]
    started_at: str
    duration_seconds: float
    exit_code: int = 0
    package_version: str = ""
    python_version: str = field(default_factory=platform.python_version)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        try:
            return cls(**data)
        except TypeError as e:
            raise DataIOError(f"malformed manifest: {e}")


class ManifestRecorder:
    """Collects inputs and outputs while a command runs, then writes manifest.json."""

    def __init__(self, command: str, seed: Optional[int] = None, config: Optional[Dict[str, Any]] = None):
        self.command = command
        self.seed = seed
        self.config = config
        self.inputs: Dict[str, Any] = {}
        self.outputs: List[str] = []
        self.started_at = datetime.now(timezone.utc).isoformat()
        self._start = time.perf_counter()

    def add_input(self, name: str, value: Any) -> None:
        self.inputs[name] = value

    def add_output(self, path: str) -> None:
        if path not in self.outputs:
            self.outputs.append(path)

    def finish(self, exit_code: int = 0) -> RunManifest:
        from .. import __version__

        return RunManifest(
            command=self.command,
            seed=self.seed,
            config=self.config,
            config_digest=None if self.config is None else config_digest(self.config),
            inputs=dict(self.inputs),
            outputs=list(self.outputs),
            started_at=self.started_at,
            duration_seconds=time.perf_counter() - self._start,
            exit_code=exit_code,
            package_version=__version__,
        )

    def write(self, path: str, exit_code: int = 0) -> RunManifest:
        manifest = self.finish(exit_code)
        write_json(manifest.to_dict(), path)
        logger.info(f"Manifest written to {path}")
        return manifest


def load_manifest(path: str) -> RunManifest:
    manifest = RunManifest.from_dict(read_json(path))
    if manifest.config is not None and config_digest(manifest.config) != manifest.config_digest:
        raise DataIOError(f"manifest {path}: config digest does not match its config")
    return manifest
