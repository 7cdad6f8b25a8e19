import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from bevtrack.errors import ConfigError, LogFormatError
from bevtrack.model.records import DetectionRecord, ForecastRecord, FrameDetections, TrackRecord
from bevtrack.model.weights import WeightEntry, WeightsFile

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)
PathLike = Union[str, Path]


def _field_errors(error: ValidationError) -> List[Dict[str, str]]:
    return [
        {"field": ".".join(str(part) for part in item["loc"]), "message": item["msg"]}
        for item in error.errors()
    ]


def parse_records(text: str, model: Type[M], source: str = "<memory>") -> List[M]:
    """
    Parse a JSON-lines document into validated rows.

    Raises:
        LogFormatError: On the first malformed line, with its 1-based line number
    """
    rows: List[M] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append(model.model_validate_json(line))
        except ValidationError as e:
            logger.error(f"Malformed row in {source} at line {lineno}: {e.error_count()} error(s)")
            raise LogFormatError(
                f"{source}:{lineno}: malformed {model.__name__} row",
                "MALFORMED_LOG",
                {"source": source, "line": lineno, "errors": _field_errors(e)}
            ) from e
    return rows


def dump_records(rows: Iterable[BaseModel]) -> str:
    """Serialize rows as JSON lines; an empty iterable gives an empty document."""
    return "".join(row.model_dump_json(by_alias=True) + "\n" for row in rows)


def read_detections(path: PathLike) -> List[DetectionRecord]:
    return parse_records(_read_text(path), DetectionRecord, str(path))


def read_tracks(path: PathLike) -> List[TrackRecord]:
    return parse_records(_read_text(path), TrackRecord, str(path))


def read_forecasts(path: PathLike) -> List[ForecastRecord]:
    return parse_records(_read_text(path), ForecastRecord, str(path))


def write_text(path: PathLike, text: str) -> None:
    """Write a file atomically (temp file then rename)."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(target)


def _read_text(path: PathLike) -> str:
    source = Path(path)
    if not source.is_file():
        raise ConfigError(f"Input file not found: {source}", "FILE_NOT_FOUND", {"path": str(source)})
    return source.read_text(encoding="utf-8")


def load_model(path: PathLike, model: Type[M]) -> M:
    """
    Load a JSON document into a pydantic model.

    Raises:
        ConfigError: If the file is missing or fails validation (details list field paths)
    """
    text = _read_text(path)
    try:
        return model.model_validate_json(text)
    except ValidationError as e:
        errors = _field_errors(e)
        logger.error(f"Invalid {model.__name__} in {path}: {errors}")
        raise ConfigError(
            f"Invalid {model.__name__} in {path}: " + "; ".join(f"{x['field']}: {x['message']}" for x in errors),
            "CONFIG_INVALID",
            {"path": str(path), "errors": errors}
        ) from e


def validate_model(data, model: Type[M], what: str = "config") -> M:
    """Validate an in-memory document, mapping failures to ConfigError."""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        errors = _field_errors(e)
        raise ConfigError(
            f"Invalid {what}: " + "; ".join(f"{x['field']}: {x['message']}" for x in errors),
            "CONFIG_INVALID",
            {"errors": errors}
        ) from e


def group_by_frame(rows: Sequence[DetectionRecord], last_frame: int = -1) -> List[FrameDetections]:
    """
    Group detection rows into consecutive frames 0..max(last row, last_frame).

    Frames with no rows are present with an empty detection tuple.
    """
    if not rows and last_frame < 0:
        return []
    final = max([r.frame for r in rows] + [last_frame])
    buckets: Dict[int, List[DetectionRecord]] = {f: [] for f in range(final + 1)}
    for row in rows:
        buckets[row.frame].append(row)
    return [FrameDetections(frame=f, detections=tuple(buckets[f])) for f in range(final + 1)]


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def encode_weights(params: Dict[str, np.ndarray]) -> str:
    """
    Encode named arrays, sorted by name, with 17 significant digits per float.
    """
    lines = []
    for name in sorted(params):
        array = np.asarray(params[name], dtype=np.float64)
        shape = ", ".join(str(n) for n in array.shape)
        data = ", ".join(_fmt(v) for v in array.ravel())
        lines.append(f'{{"name": {json.dumps(name)}, "shape": [{shape}], "data": [{data}]}}')
    return '{"weights": [\n' + ",\n".join(lines) + "\n]}\n"


def decode_weights(text: str, source: str = "<memory>") -> Dict[str, np.ndarray]:
    """
    Decode a weights document into named float64 arrays.

    Raises:
        ConfigError: If the document does not match the weights schema
    """
    try:
        document = WeightsFile.model_validate(json.loads(text, parse_int=float))
    except (ValueError, ValidationError) as e:
        logger.error(f"Invalid weights document {source}: {e}")
        raise ConfigError(f"Invalid weights document {source}", "CONFIG_INVALID", {"path": source, "error": str(e)}) from e
    return {entry.name: _entry_array(entry) for entry in document.weights}


def _entry_array(entry: WeightEntry) -> np.ndarray:
    return np.asarray(entry.data, dtype=np.float64).reshape([int(n) for n in entry.shape])


def read_weights(path: PathLike) -> Dict[str, np.ndarray]:
    return decode_weights(_read_text(path), str(path))


def write_weights(path: PathLike, params: Dict[str, np.ndarray]) -> None:
    write_text(path, encode_weights(params))
