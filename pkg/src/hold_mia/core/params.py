"""Parameterization of the critically-damped higher-order Langevin process."""

from __future__ import annotations

import numpy as np
from numpy.polynomial import polynomial as poly
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator

from ..errors import NumericalError


class HoldParams(BaseModel):
    """
    Full parameterization of a HOLD++ forward process.

    Attributes:
        n: Model order (number of stacked variable blocks).
        d: Data dimension.
        gammas: Coupling constants gamma_1..gamma_{n-1}.
        xi: Friction on the last block.
        inv_mass: Stationary variance L^{-1}.
        beta: Variance factor of the auxiliary variables at t=0.
        eps_num: Initial variance of the data block.
        horizon: Diffusion end time T.
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    d: int = Field(ge=1)
    gammas: tuple[PositiveFloat, ...] = ()
    xi: PositiveFloat
    inv_mass: PositiveFloat = 1.0
    beta: PositiveFloat = 1.0
    eps_num: PositiveFloat = 1e-3
    horizon: PositiveFloat = 1.0

    @model_validator(mode="after")
    def _check_gamma_count(self) -> HoldParams:
        if len(self.gammas) != self.n - 1:
            raise ValueError(
                f"order n={self.n} needs {self.n - 1} gammas, got {len(self.gammas)}"
            )
        return self

    @property
    def state_dim(self) -> int:
        return self.n * self.d

    @property
    def aux_variance(self) -> float:
        """Initial variance beta * L^{-1} of every auxiliary block."""
        return self.beta * self.inv_mass

    @property
    def t_min(self) -> float:
        """Lower time cutoff used wherever the inverse Cholesky factor is needed."""
        return 1e-3 * self.horizon

    @classmethod
    def critically_damped(
        cls,
        n: int,
        d: int,
        rate: float,
        *,
        inv_mass: float = 1.0,
        beta: float = 1.0,
        eps_num: float = 1e-3,
        horizon: float = 1.0,
    ) -> HoldParams:
        """Build parameters whose drift has the single eigenvalue ``-rate``."""
        gammas, xi = critical_parameters(n, rate)
        return cls(
            n=n,
            d=d,
            gammas=gammas,
            xi=xi,
            inv_mass=inv_mass,
            beta=beta,
            eps_num=eps_num,
            horizon=horizon,
        )

    def with_updates(self, **changes: object) -> HoldParams:
        """Return a validated copy with some fields replaced."""
        return HoldParams.model_validate({**self.model_dump(), **changes})


def critical_parameters(n: int, rate: float) -> tuple[tuple[float, ...], float]:
    """
    Coupling constants and friction giving det(lambda I - F) = (lambda + rate)^n.

    The characteristic polynomial of the tridiagonal drift is a continuant
    g_k = lambda g_{k-1} + gamma_{k-1}^2 g_{k-2} closed by the friction term,
    so its two parity halves can be peeled off one gamma at a time.

    Args:
        n: Model order.
        rate: Common decay rate (positive).

    Returns:
        Tuple ``(gammas, xi)``; for n=2 this is ``((rate,), 2 * rate)``.
    """
    if n < 1:
        raise ValueError("model order must be at least 1")
    if rate <= 0:
        raise ValueError("decay rate must be positive")

    coef = poly.polyfromroots([-rate] * n)
    degrees = np.arange(n + 1)
    friction_part = np.where(degrees % 2 == (n - 1) % 2, coef, 0.0)
    xi = float(friction_part[n - 1])
    prev = friction_part / xi
    cur = coef - friction_part

    gammas_sq: list[float] = []
    for j in range(n - 1, 0, -1):
        rem = cur - np.roll(prev, 1)
        g2 = float(rem[j - 1])
        if not g2 > 0:
            raise NumericalError(f"no real coupling for block {j} at rate {rate}")
        gammas_sq.append(g2)
        cur, prev = prev, rem / g2

    return tuple(float(np.sqrt(g)) for g in reversed(gammas_sq)), xi
