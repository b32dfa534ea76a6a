"""Adaptive-moment gradient descent on flat parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]


@dataclass
class AdamOptimizer:
    """
    Adam with bias-corrected first and second moment estimates.

    The optimizer owns its moment buffers; parameters are passed in and a new
    array is returned on every step.
    """

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    _m: FloatArray | None = field(default=None, repr=False)
    _v: FloatArray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            raise ValueError("learning rate must be non-negative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("decay rates must lie in [0, 1)")

    def step(self, params: FloatArray, grads: FloatArray) -> FloatArray:
        if self._m is None or self._v is None:
            self._m = np.zeros_like(params)
            self._v = np.zeros_like(params)
        self.step_count += 1
        self._m = self.beta1 * self._m + (1.0 - self.beta1) * grads
        self._v = self.beta2 * self._v + (1.0 - self.beta2) * grads**2
        m_hat = self._m / (1.0 - self.beta1**self.step_count)
        v_hat = self._v / (1.0 - self.beta2**self.step_count)
        return params - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
