"""JSON serialization of command results and error records."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from pydantic import BaseModel, ValidationError

from ..errors import (
    CheckpointError,
    CholeskyError,
    DatasetError,
    DivergenceError,
    HoldError,
    NumericalError,
)


def _default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def to_json(obj: Any, *, indent: int | None = None) -> str:
    """Deterministic JSON (sorted keys) that understands numpy and pydantic values."""
    return json.dumps(obj, default=_default, sort_keys=True, indent=indent)


def write_json(path: str | Path, obj: Any) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(to_json(obj, indent=2) + "\n", encoding="utf-8")
    return out


def serialize_error(
    error_code: str,
    message: str,
    details: dict[str, Any] | None = None,
) -> dict[str, Any]:
    """
    Serialize an error record.

    Format:
    {
        "error": {
            "code": "CONFIG_ERROR",
            "message": "Invalid input",
            "details": {...}
        }
    }
    """
    return {"error": {"code": error_code, "message": message, "details": details or {}}}


def is_usage_error(exc: BaseException) -> bool:
    """Bad configuration or arguments, as opposed to a failure while computing."""
    if isinstance(exc, (ValidationError, yaml.YAMLError)):
        return True
    return isinstance(exc, ValueError) and not isinstance(exc, HoldError)


def error_code(exc: BaseException) -> str:
    if isinstance(exc, (ValidationError, yaml.YAMLError)):
        return "CONFIG_ERROR"
    if isinstance(exc, FileNotFoundError):
        return "NOT_FOUND"
    if isinstance(exc, DatasetError):
        return "DATASET_ERROR"
    if isinstance(exc, CheckpointError):
        return "CHECKPOINT_ERROR"
    if isinstance(exc, NumericalError):
        return "NUMERICAL_ERROR"
    if isinstance(exc, (ValueError, KeyError, IndexError)):
        return "INVALID_ARGUMENT"
    return "INTERNAL_ERROR"


def serialize_exception(exc: BaseException) -> dict[str, Any]:
    details: dict[str, Any] = {"type": type(exc).__name__}
    if isinstance(exc, ValidationError):
        details["errors"] = [
            {"loc": ".".join(str(p) for p in err["loc"]), "msg": err["msg"]}
            for err in exc.errors()
        ]
    elif isinstance(exc, CholeskyError):
        details.update(time=exc.time, min_eigenvalue=exc.min_eigenvalue)
    elif isinstance(exc, DivergenceError):
        details.update(epoch=exc.epoch, loss=exc.loss)
    return serialize_error(error_code(exc), str(exc), details)
