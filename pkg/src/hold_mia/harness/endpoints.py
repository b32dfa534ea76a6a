"""Command handlers behind the ``hold-mia`` subcommands."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Protocol

import numpy as np

from ..attack.pia import run_pia
from ..core.params import HoldParams
from ..core.process import build_drift, critical_damping_diagnostic
from ..data.metrics import data_diameter_sq
from ..data.processor import read_dataset_csv, write_dataset_csv
from ..data.spiral import SPIRAL_DIM, generate_spiral, split
from ..errors import CheckpointDimensionError
from ..models.checkpoint import checkpoint_save, read_checkpoint
from ..models.network import init_network
from ..models.training import train
from ..privacy.accountant import privacy_report
from .config import ExperimentConfig, load_config
from .plots import emit_plots
from .serializers import serialize_error, write_json
from .sweep import RESULTS_FILE, read_records, run_experiment

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


@dataclass
class CommandRequest:
    """One parsed invocation: subcommand, config sources and its own options."""

    command: str
    options: dict[str, Any] = field(default_factory=dict)
    config_path: Path | None = None
    overrides: list[str] = field(default_factory=list)

    @cached_property
    def config(self) -> ExperimentConfig:
        return load_config(self.config_path, self.overrides)

    def option(self, name: str, default: Any = None) -> Any:
        value = self.options.get(name)
        return default if value is None else value


@dataclass
class CommandResult:
    exit_code: int
    body: dict[str, Any]


class CommandHandler(Protocol):
    """Protocol for command handlers."""

    def handle(self, request: CommandRequest) -> CommandResult:
        """Run the command."""
        ...


def select_process(request: CommandRequest, d: int = SPIRAL_DIM) -> HoldParams:
    """The grid point picked by --order/--beta/--eps-num, else the first of each."""
    grid = request.config.grid
    return grid.process(
        int(request.option("order", grid.orders[0])),
        float(request.option("beta", grid.betas[0])),
        float(request.option("eps_num", grid.eps_nums[0])),
        d,
    )


class GenerateDataCommand:
    """Spiral dataset plus its member/holdout split as CSV files."""

    def handle(self, request: CommandRequest) -> CommandResult:
        cfg = request.config
        out = Path(request.option("out_dir", cfg.output_dir))
        data = generate_spiral(cfg.data)
        members, holdouts = split(data, cfg.member_fraction, cfg.seed_base)
        files = {
            "data": write_dataset_csv(data, out / "data.csv"),
            "members": write_dataset_csv(members, out / "members.csv"),
            "holdouts": write_dataset_csv(holdouts, out / "holdouts.csv"),
        }
        return CommandResult(
            EXIT_OK,
            {
                "count": len(data),
                "members": len(members),
                "holdouts": len(holdouts),
                "files": {k: str(v) for k, v in files.items()},
            },
        )


class TrainCommand:
    def handle(self, request: CommandRequest) -> CommandResult:
        cfg = request.config
        members = read_dataset_csv(request.option("members"))
        params = select_process(request, members.shape[1])
        damping = critical_damping_diagnostic(build_drift(params))
        net = init_network(
            params.n,
            params.d,
            cfg.network.depth,
            cfg.network.width,
            params.horizon,
            np.random.default_rng(cfg.train.seed),
        )
        result = train(net, params, members, cfg.train)
        path = checkpoint_save(
            result.network,
            request.option("checkpoint", Path(cfg.output_dir) / "model.npz"),
            process=params,
        )
        return CommandResult(
            EXIT_OK,
            {
                "checkpoint": str(path),
                "final_loss": float(result.losses[-1]),
                "epochs": len(result.losses),
                "critically_damped": damping.is_critical,
                "process": params.model_dump(mode="json"),
            },
        )


class AttackCommand:
    def handle(self, request: CommandRequest) -> CommandResult:
        cfg = request.config
        checkpoint = read_checkpoint(request.option("checkpoint"))
        if checkpoint.process is None:
            raise CheckpointDimensionError(
                "checkpoint does not record its process parameters"
            )
        params = checkpoint.process
        members = read_dataset_csv(request.option("members"), params.d)
        holdouts = read_dataset_csv(request.option("holdouts"), params.d)
        report = run_pia(params, checkpoint.network, members, holdouts, cfg.attack)

        out = Path(request.option("out_dir", cfg.output_dir))
        report_path = write_json(out / "attack_report.json", report.to_dict())
        roc_path = out / "roc.csv"
        report.roc_frame().to_csv(roc_path, index=False, float_format="%.17g")
        return CommandResult(
            EXIT_OK,
            {
                "auroc": report.auroc,
                "auroc_ci": [report.auroc_ci.low, report.auroc_ci.high],
                "per_time_auroc": report.to_dict()["per_time_auroc"],
                "files": {"report": str(report_path), "roc": str(roc_path)},
            },
        )


class PrivacyReportCommand:
    def handle(self, request: CommandRequest) -> CommandResult:
        cfg = request.config
        data_path = request.option("data")
        delta2f = request.option("delta2f")
        if (data_path is None) == (delta2f is None):
            raise ValueError("pass exactly one of --data or --delta2f")
        if data_path is not None:
            data = read_dataset_csv(data_path)
            params = select_process(request, data.shape[1])
            delta2f = data_diameter_sq(data)
        else:
            params = select_process(request)
        report = privacy_report(
            params,
            float(delta2f),
            float(request.option("alpha", cfg.privacy.alpha)),
            np.linspace(0.0, params.horizon, cfg.privacy.grid_points),
        )
        out = Path(request.option("out_dir", cfg.output_dir))
        json_path = write_json(out / "privacy_report.json", report.to_dict())
        curve_path = out / "sensitivity_curve.csv"
        report.frame().to_csv(curve_path, index=False, float_format="%.17g")
        return CommandResult(
            EXIT_OK,
            {
                "epsilon_bound": report.epsilon_bound,
                "epsilon_approx": report.epsilon_approx,
                "aux_mse": report.aux_mse,
                "violations": report.violations,
                "files": {"report": str(json_path), "curve": str(curve_path)},
            },
        )


class SweepCommand:
    def handle(self, request: CommandRequest) -> CommandResult:
        cfg = request.config
        records = run_experiment(cfg)
        failed = [r.run_id for r in records if r.status == "failed"]
        return CommandResult(
            EXIT_OK,
            {"runs": len(records), "failed": failed, "output_dir": str(cfg.output_dir)},
        )


class PlotCommand:
    def handle(self, request: CommandRequest) -> CommandResult:
        cfg = request.config
        results = Path(request.option("results", Path(cfg.output_dir) / RESULTS_FILE))
        out = Path(request.option("out_dir", results.parent / "plots"))
        written = emit_plots(read_records(results), out, results.parent / "samples")
        return CommandResult(EXIT_OK, {"files": [str(p) for p in written]})


class Router:
    """Maps subcommand names to handlers; unknown names are usage errors."""

    def __init__(self) -> None:
        self._handlers: dict[str, CommandHandler] = {}

    def register(self, command: str, handler: CommandHandler) -> None:
        """Register a handler for a subcommand."""
        if command in self._handlers:
            raise ValueError(f"command {command!r} is already registered")
        self._handlers[command] = handler

    @property
    def commands(self) -> list[str]:
        return sorted(self._handlers)

    def route(self, request: CommandRequest) -> CommandResult:
        """Dispatch to the registered handler."""
        handler = self._handlers.get(request.command)
        if handler is None:
            return CommandResult(
                EXIT_USAGE,
                serialize_error(
                    "UNKNOWN_COMMAND",
                    f"unknown command {request.command!r}",
                    {"commands": self.commands},
                ),
            )
        return handler.handle(request)

    def handle(self, request: CommandRequest) -> CommandResult:
        return self.route(request)


def default_router() -> Router:
    router = Router()
    router.register("generate-data", GenerateDataCommand())
    router.register("train", TrainCommand())
    router.register("attack", AttackCommand())
    router.register("privacy-report", PrivacyReportCommand())
    router.register("sweep", SweepCommand())
    router.register("plot", PlotCommand())
    return router
