"""Swiss Roll (2-D spiral) data and member/holdout splitting."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field

from ..errors import DatasetError
from .processor import ensure_dataset

FloatArray = NDArray[np.float64]

SPIRAL_DIM = 2


class SpiralConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    count: int = Field(default=2000, ge=2)
    turns: float = Field(default=2.0, gt=0.0)
    noise_std: float = Field(default=0.05, ge=0.0)
    seed: int = 0


def spiral_points(u: ArrayLike, turns: float) -> FloatArray:
    """Noiseless spiral point for each u in [0, 1], radius at most 1."""
    theta = 2.0 * np.pi * turns * np.sqrt(np.asarray(u, dtype=np.float64))
    scale = 2.0 * np.pi * turns
    return np.column_stack([theta * np.cos(theta), theta * np.sin(theta)]) / scale


def generate_spiral(cfg: SpiralConfig) -> FloatArray:
    rng = np.random.default_rng(cfg.seed)
    u = rng.uniform(0.0, 1.0, size=cfg.count)
    points = spiral_points(u, cfg.turns)
    return points + cfg.noise_std * rng.standard_normal(points.shape)


def split(
    dataset: ArrayLike, member_fraction: float, seed: int
) -> tuple[FloatArray, FloatArray]:
    """
    Seeded shuffle split into disjoint members and holdouts.

    Raises:
        ValueError: If the fraction is outside (0, 1).
        DatasetError: If either side would be empty.
    """
    if not 0.0 < member_fraction < 1.0:
        raise ValueError("member fraction must lie strictly between 0 and 1")
    data = ensure_dataset(dataset)
    members = int(round(member_fraction * len(data)))
    if members == 0 or members == len(data):
        raise DatasetError(
            f"fraction {member_fraction} of {len(data)} points leaves an empty side"
        )
    order = np.random.default_rng(seed).permutation(len(data))
    return data[order[:members]], data[order[members:]]
