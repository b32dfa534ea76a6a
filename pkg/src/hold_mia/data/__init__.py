"""Spiral data, splitting, sample-quality metrics and dataset IO."""

from __future__ import annotations

from .metrics import data_diameter_sq, energy_distance, energy_permutation_test
from .processor import ensure_dataset, read_dataset_csv, write_dataset_csv
from .spiral import SpiralConfig, generate_spiral, split

__all__ = [
    "SpiralConfig",
    "data_diameter_sq",
    "energy_distance",
    "energy_permutation_test",
    "ensure_dataset",
    "generate_spiral",
    "read_dataset_csv",
    "split",
    "write_dataset_csv",
]
