"""Dataset plumbing: validation, batching, CSV IO and config merging."""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from ..errors import DatasetError

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]


def ensure_dataset(data: ArrayLike, d: int | None = None) -> FloatArray:
    """
    Coerce a dataset to a finite ``(count, d)`` float array.

    Raises:
        DatasetError: If the dataset is empty, not finite, or has the wrong width.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise DatasetError(
            f"dataset must be a non-empty 2-d array, got shape {arr.shape}"
        )
    if d is not None and arr.shape[1] != d:
        raise DatasetError(f"dataset has dimension {arr.shape[1]}, expected {d}")
    if not np.all(np.isfinite(arr)):
        raise DatasetError("dataset contains non-finite values")
    return arr


def iter_batches(indices: IntArray, batch_size: int) -> Iterator[IntArray]:
    """Consecutive slices of ``indices``; the last one may be shorter."""
    if batch_size < 1:
        raise ValueError("batch size must be positive")
    for start in range(0, len(indices), batch_size):
        yield indices[start : start + batch_size]


def column_names(d: int) -> list[str]:
    return [f"x{i + 1}" for i in range(d)]


def write_dataset_csv(data: ArrayLike, path: str | Path) -> Path:
    """One row per point, one-line header ``x1,...,xd``."""
    arr = ensure_dataset(data)
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(arr, columns=column_names(arr.shape[1])).to_csv(
        out, index=False, float_format="%.17g"
    )
    return out


def read_dataset_csv(path: str | Path, d: int | None = None) -> FloatArray:
    frame = pd.read_csv(path, float_precision="round_trip")
    return ensure_dataset(frame.to_numpy(dtype=np.float64), d)


def merge_configs(
    base: Mapping[str, Any], override: Mapping[str, Any]
) -> dict[str, Any]:
    """Recursively merge ``override`` onto ``base`` without mutating either."""
    result: dict[str, Any] = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(result.get(key), Mapping):
            result[key] = merge_configs(result[key], value)
        else:
            result[key] = value
    return result


def dotted_override(key: str, value: Any) -> dict[str, Any]:
    """``("train.epochs", 10)`` -> ``{"train": {"epochs": 10}}``."""
    nested: dict[str, Any] = {}
    node = nested
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return nested
