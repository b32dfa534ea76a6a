"""HOLD++ diffusion models, membership inference and Renyi-DP accounting."""

from __future__ import annotations

__version__ = "0.1.0"
