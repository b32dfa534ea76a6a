"""Experiment configuration: pydantic models, YAML loading and overrides."""

from __future__ import annotations

import itertools
import os
from collections.abc import Iterator, Mapping, Sequence
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..attack.pia import AttackConfig
from ..core.params import HoldParams, critical_parameters
from ..data.processor import dotted_override, merge_configs
from ..data.spiral import SpiralConfig
from ..models.training import TrainConfig
from ..sampling.integrators import IntegratorConfig
from ..utils.logging import LogFormat

OUTPUT_DIR_ENV = "HOLD_MIA_OUTPUT_DIR"


class GridConfig(BaseModel):
    """
    Sweep grid over model order, auxiliary variance and data-block variance.

    ``damping="critical"`` derives gammas and xi from ``rate`` for every order;
    ``"explicit"`` takes them from ``gammas_by_order`` and ``xi``.
    """

    model_config = ConfigDict(frozen=True)

    orders: list[int] = Field(default_factory=lambda: [1, 2, 3], min_length=1)
    betas: list[float] = Field(default_factory=lambda: [2.0, 10.0], min_length=1)
    eps_nums: list[float] = Field(default_factory=lambda: [1e-3], min_length=1)
    inv_mass: float = Field(default=1.0, gt=0.0)
    horizon: float = Field(default=1.0, gt=0.0)
    damping: Literal["critical", "explicit"] = "critical"
    rate: float = Field(default=5.0, gt=0.0)
    gammas_by_order: dict[int, list[float]] = Field(default_factory=dict)
    xi: float | None = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _check_points(self) -> GridConfig:
        # every combination must be a valid process
        list(self.points(d=1))
        return self

    def process(self, n: int, beta: float, eps_num: float, d: int) -> HoldParams:
        if self.damping == "critical":
            gammas, xi = critical_parameters(n, self.rate)
        else:
            if self.xi is None or (n > 1 and n not in self.gammas_by_order):
                raise ValueError(f"explicit damping needs xi and gammas for order {n}")
            gammas, xi = tuple(self.gammas_by_order.get(n, [])), self.xi
        return HoldParams(
            n=n,
            d=d,
            gammas=gammas,
            xi=xi,
            inv_mass=self.inv_mass,
            beta=beta,
            eps_num=eps_num,
            horizon=self.horizon,
        )

    def points(self, d: int) -> Iterator[HoldParams]:
        """Every (n, beta, eps_num) combination in grid order."""
        grid = itertools.product(self.orders, self.betas, self.eps_nums)
        for n, beta, eps_num in grid:
            yield self.process(n, beta, eps_num, d)


class NetworkConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    depth: int = Field(default=6, ge=1)
    width: int = Field(default=128, ge=2)


class LoggingConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    level: str = "INFO"
    format: LogFormat = "json"


class PrivacyConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(default=2.0, gt=1.0)
    grid_points: int = Field(default=50, ge=2)


class ExperimentConfig(BaseModel):
    """Everything a sweep needs; (config, seed_base) determines every output."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    grid: GridConfig = Field(default_factory=GridConfig)
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    attack: AttackConfig = Field(default_factory=AttackConfig)
    sampler: IntegratorConfig = Field(default_factory=IntegratorConfig)
    data: SpiralConfig = Field(default_factory=SpiralConfig)
    privacy: PrivacyConfig = Field(default_factory=PrivacyConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    member_fraction: float = Field(default=0.5, gt=0.0, lt=1.0)
    generate_count: int = Field(default=1000, ge=1)
    permutations: int = Field(default=200, ge=0)
    repeats: int = Field(default=5, ge=1)
    seed_base: int = 0
    workers: int = Field(default=1, ge=1)
    output_dir: Path = Path("results")


def parse_override(item: str) -> dict[str, Any]:
    """``"train.epochs=10"`` -> ``{"train": {"epochs": 10}}``; the value is YAML."""
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ValueError(f"override {item!r} is not of the form key=value")
    return dotted_override(key.strip(), yaml.safe_load(raw))


def load_config(
    path: str | Path | None = None,
    overrides: Sequence[str] = (),
    env: Mapping[str, str] | None = None,
) -> ExperimentConfig:
    """
    Build an ExperimentConfig from an optional YAML file.

    Precedence, lowest first: model defaults, the file, ``--set`` overrides,
    then the ``HOLD_MIA_OUTPUT_DIR`` environment variable.
    """
    raw: dict[str, Any] = {}
    if path is not None:
        with Path(path).open(encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, Mapping):
            raise ValueError(f"config file {path} does not contain a mapping")
        raw = dict(loaded)
    for item in overrides:
        raw = merge_configs(raw, parse_override(item))
    environ = os.environ if env is None else env
    if environ.get(OUTPUT_DIR_ENV):
        raw["output_dir"] = environ[OUTPUT_DIR_ENV]
    return ExperimentConfig.model_validate(raw)
