"""Score-network checkpoints: a NumPy ``.npz`` archive with a JSON header."""

from __future__ import annotations

import json
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from ..core.params import HoldParams
from ..errors import (
    CheckpointCorruptError,
    CheckpointDimensionError,
    CheckpointVersionError,
)
from .network import TIME_FEATURES, ScoreNetwork, parameter_names

FORMAT_NAME = "hold-mia-score-network"
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class Checkpoint:
    network: ScoreNetwork
    process: HoldParams | None


def checkpoint_save(
    net: ScoreNetwork, path: str | Path, process: HoldParams | None = None
) -> Path:
    """
    Write the network (and optionally its process parameters) to ``path``.

    Layout is documented in docs/checkpoint_format.md.
    """
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "n": net.n,
        "d": net.d,
        "depth": net.depth,
        "width": net.width,
        "time_features": TIME_FEATURES,
        "horizon": net.horizon,
        "parameters": parameter_names(net.depth),
        "process": process.model_dump(mode="json") if process is not None else None,
    }
    encoded = json.dumps(header, sort_keys=True).encode("utf-8")
    arrays = {
        name: np.ascontiguousarray(net.params[name], dtype="<f8")
        for name in parameter_names(net.depth)
    }
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("wb") as fh:
        np.savez(fh, header=np.frombuffer(encoded, dtype=np.uint8), **arrays)
    return out


def _read_archive(path: Path) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    try:
        with np.load(path, allow_pickle=False) as archive:
            header = json.loads(bytes(archive["header"]).decode("utf-8"))
            arrays = {
                name: np.asarray(archive[name], dtype=np.float64)
                for name in header["parameters"]
            }
    except (zipfile.BadZipFile, ValueError, KeyError, EOFError, TypeError) as exc:
        raise CheckpointCorruptError(f"cannot read checkpoint {path}: {exc}") from exc
    return header, arrays


def read_checkpoint(path: str | Path) -> Checkpoint:
    """
    Load a network and the process parameters stored with it.

    Raises:
        FileNotFoundError: If the file does not exist.
        CheckpointCorruptError: If the archive is truncated or malformed.
        CheckpointVersionError: If the format version is unknown.
        CheckpointDimensionError: If arrays do not fit the stored architecture.
    """
    src = Path(path)
    if not src.is_file():
        raise FileNotFoundError(src)
    header, arrays = _read_archive(src)
    if header.get("format") != FORMAT_NAME or header.get("version") != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"unsupported checkpoint {header.get('format')!r} "
            f"version {header.get('version')!r}"
        )
    if header.get("time_features") != TIME_FEATURES:
        raise CheckpointDimensionError(
            f"checkpoint uses {header.get('time_features')} time features"
        )
    try:
        network = ScoreNetwork(
            n=int(header["n"]),
            d=int(header["d"]),
            depth=int(header["depth"]),
            width=int(header["width"]),
            horizon=float(header["horizon"]),
            params=arrays,
        )
    except ValueError as exc:
        raise CheckpointDimensionError(str(exc)) from exc
    process = header.get("process")
    return Checkpoint(
        network=network,
        process=HoldParams.model_validate(process) if process else None,
    )


def checkpoint_load(
    path: str | Path, *, expected_state_dim: int | None = None
) -> ScoreNetwork:
    """Load a network, optionally checking that it takes states of size n*d."""
    network = read_checkpoint(path).network
    if expected_state_dim is not None and network.n * network.d != expected_state_dim:
        raise CheckpointDimensionError(
            f"checkpoint takes states of size {network.n * network.d}, "
            f"expected {expected_state_dim}"
        )
    return network
