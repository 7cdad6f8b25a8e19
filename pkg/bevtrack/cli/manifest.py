"""
Run manifests and deterministic run identifiers.
"""
import hashlib
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Optional, Sequence, Union

from dateutil.tz import tzutc
from pydantic import BaseModel

from bevtrack import __version__
from bevtrack.core.jsonl import PathLike, write_text
from bevtrack.model.report import RunManifest

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"


def canonical_json(value: Any) -> str:
    if isinstance(value, BaseModel):
        value = value.model_dump(mode="json", by_alias=True)
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def config_hash(*configs: Union[BaseModel, dict, list, str, int, float, None]) -> str:
    """sha256 over the canonical JSON of every config, in order."""
    digest = hashlib.sha256()
    for config in configs:
        digest.update(canonical_json(config).encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def make_run_id(command: str, digest: str, seed: Optional[int]) -> str:
    return f"{command}-{digest[:12]}-s{seed if seed is not None else 'na'}"


def manifest_path(output: PathLike) -> Path:
    """Manifest location for an output: inside a directory, or next to a file."""
    output = Path(output)
    if output.is_dir():
        return output / "manifest.json"
    return output.with_name(output.name + MANIFEST_SUFFIX)


def write_manifest(
    output: PathLike,
    command: str,
    argv: Sequence[str],
    digest: str,
    seed: Optional[int],
    inputs: Sequence[PathLike],
    outputs: Sequence[PathLike],
) -> RunManifest:
    """Write the manifest for `output` atomically and return it."""
    manifest = RunManifest(
        command=command,
        argv=list(argv),
        config_hash=digest,
        seed=seed,
        inputs=[str(p) for p in inputs],
        outputs=[str(p) for p in outputs],
        tool_version=__version__,
        wall_clock=datetime.now(tzutc()).isoformat(),
        run_id=make_run_id(command, digest, seed),
    )
    path = manifest_path(output)
    write_text(path, manifest.model_dump_json(indent=2) + "\n")
    logger.debug(f"[{manifest.run_id}] Wrote manifest {path}")
    return manifest
