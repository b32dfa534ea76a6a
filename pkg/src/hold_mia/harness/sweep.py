"""Seeded sweeps over the process grid: train, attack, sample, account."""

from __future__ import annotations

import hashlib
import json
import time
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel, ConfigDict, ValidationError

from ..attack.pia import per_time_auroc, run_pia
from ..core.params import HoldParams
from ..data.metrics import data_diameter_sq, energy_distance, energy_permutation_test
from ..data.processor import write_dataset_csv
from ..data.spiral import SPIRAL_DIM, generate_spiral, split
from ..models.network import init_network
from ..models.statistics import mean_confidence_interval
from ..models.training import train
from ..privacy.accountant import privacy_report
from ..sampling.integrators import generate
from ..utils.logging import configure_logging
from .config import ExperimentConfig

logger = structlog.get_logger(__name__)

RESULTS_FILE = "results.jsonl"
SUMMARY_FILE = "summary.csv"
CONFIG_FILE = "config.json"
SAMPLES_DIR = "samples"

GROUP_KEYS = ("n", "beta", "eps_num")
SEED_MASK = (1 << 63) - 1
CI_COLUMNS = ("count", "mean", "low", "high", "half_width", "flagged")


def derive_seed(seed_base: int, key: Mapping[str, Any], repeat: int) -> int:
    """Stable 63-bit seed derived from (seed_base, key, repeat)."""
    payload = json.dumps(
        {"seed_base": seed_base, "key": dict(key), "repeat": repeat},
        sort_keys=True,
        separators=(",", ":"),
    )
    digest = hashlib.blake2b(payload.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") & SEED_MASK


def run_key(params: HoldParams) -> dict[str, Any]:
    return {
        "n": params.n,
        "beta": params.beta,
        "eps_num": params.eps_num,
        "inv_mass": params.inv_mass,
        "horizon": params.horizon,
        "gammas": list(params.gammas),
        "xi": params.xi,
    }


def run_id(params: HoldParams, repeat: int) -> str:
    return f"n{params.n}_beta{params.beta!r}_eps{params.eps_num!r}_r{repeat}"


class RunRecord(BaseModel):
    """One line of results.jsonl."""

    model_config = ConfigDict(frozen=True)

    run_id: str
    status: Literal["ok", "failed"]
    n: int
    d: int
    beta: float
    eps_num: float
    inv_mass: float
    horizon: float
    gammas: list[float]
    xi: float
    repeat: int
    seed: int
    auroc: float | None = None
    auroc_ci_low: float | None = None
    auroc_ci_high: float | None = None
    attack_times: list[float] = []
    per_time_auroc: list[float] = []
    energy_distance: float | None = None
    energy_null_q95: float | None = None
    final_loss: float | None = None
    epsilon_bound: float | None = None
    epsilon_approx: float | None = None
    aux_mse: float | None = None
    wall_seconds: float = 0.0
    error: str | None = None


def _child_seeds(seed: int, count: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(s.generate_state(1)[0]) for s in children]


def run_single(
    cfg: ExperimentConfig, params: HoldParams, repeat: int
) -> tuple[RunRecord, np.ndarray]:
    """
    Generate data, train, attack, sample and account for one grid point.

    Returns:
        The completed record and the generated samples.
    """
    started = time.perf_counter()
    seed = derive_seed(cfg.seed_base, run_key(params), repeat)
    (
        data_seed,
        split_seed,
        init_seed,
        train_seed,
        attack_seed,
        sample_seed,
        perm_seed,
    ) = _child_seeds(seed, 7)

    data = generate_spiral(cfg.data.model_copy(update={"seed": data_seed}))
    members, holdouts = split(data, cfg.member_fraction, split_seed)
    net = init_network(
        params.n,
        params.d,
        cfg.network.depth,
        cfg.network.width,
        params.horizon,
        np.random.default_rng(init_seed),
    )
    train_cfg = cfg.train.model_copy(update={"seed": train_seed})
    trained = train(net, params, members, train_cfg)
    report = run_pia(
        params,
        trained.network,
        members,
        holdouts,
        cfg.attack.model_copy(update={"seed": attack_seed}),
    )
    samples = generate(
        params,
        trained.network,
        cfg.sampler,
        np.random.default_rng(sample_seed),
        cfg.generate_count,
    )
    null_q95 = None
    if cfg.permutations > 0:
        null = energy_permutation_test(
            members, holdouts, cfg.permutations, np.random.default_rng(perm_seed)
        )
        null_q95 = null.critical_value(0.95)
    privacy = privacy_report(
        params,
        data_diameter_sq(members),
        cfg.privacy.alpha,
        np.linspace(0.0, params.horizon, cfg.privacy.grid_points),
    )

    record = RunRecord(
        run_id=run_id(params, repeat),
        status="ok",
        **_params_fields(params),
        repeat=repeat,
        seed=seed,
        auroc=report.auroc,
        auroc_ci_low=report.auroc_ci.low,
        auroc_ci_high=report.auroc_ci.high,
        attack_times=report.times.tolist(),
        per_time_auroc=[per_time_auroc(report, k) for k in range(1, report.n_time + 1)],
        energy_distance=energy_distance(samples, holdouts),
        energy_null_q95=null_q95,
        final_loss=float(trained.losses[-1]),
        epsilon_bound=privacy.epsilon_bound,
        epsilon_approx=privacy.epsilon_approx,
        aux_mse=privacy.aux_mse_full,
        wall_seconds=time.perf_counter() - started,
    )
    return record, samples


def _params_fields(params: HoldParams) -> dict[str, Any]:
    return {
        "n": params.n,
        "d": params.d,
        "beta": params.beta,
        "eps_num": params.eps_num,
        "inv_mass": params.inv_mass,
        "horizon": params.horizon,
        "gammas": list(params.gammas),
        "xi": params.xi,
    }


def _execute(
    cfg: ExperimentConfig, params: HoldParams, repeat: int
) -> tuple[RunRecord, np.ndarray | None]:
    """run_single with failures turned into records."""
    started = time.perf_counter()
    try:
        record, samples = run_single(cfg, params, repeat)
    except Exception as exc:  # noqa: BLE001
        logger.error("run_failed", run_id=run_id(params, repeat), error=repr(exc))
        record = RunRecord(
            run_id=run_id(params, repeat),
            status="failed",
            **_params_fields(params),
            repeat=repeat,
            seed=derive_seed(cfg.seed_base, run_key(params), repeat),
            wall_seconds=time.perf_counter() - started,
            error=f"{type(exc).__name__}: {exc}",
        )
        return record, None
    logger.info("run_completed", run_id=record.run_id, auroc=record.auroc)
    return record, samples


def _run_task(
    task: tuple[ExperimentConfig, HoldParams, int],
) -> tuple[RunRecord, np.ndarray | None]:
    return _execute(*task)


def run_experiment(cfg: ExperimentConfig) -> list[RunRecord]:
    """
    Run every grid point times every repeat, appending each record as it lands.

    Results go to ``output_dir``: results.jsonl (rewritten per sweep, one line
    per finished run), summary.csv and one samples CSV per successful run.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_FILE).write_text(
        json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    d = SPIRAL_DIM
    tasks = [
        (cfg, params, repeat)
        for params in cfg.grid.points(d)
        for repeat in range(cfg.repeats)
    ]
    logger.info(
        "sweep_started", runs=len(tasks), workers=cfg.workers, output_dir=str(out)
    )

    records: list[RunRecord] = []
    results_path = out / RESULTS_FILE
    with results_path.open("w", encoding="utf-8") as fh:
        for record, samples in _iter_results(cfg, tasks):
            fh.write(record.model_dump_json() + "\n")
            fh.flush()
            if samples is not None:
                write_dataset_csv(samples, out / SAMPLES_DIR / f"{record.run_id}.csv")
            records.append(record)

    write_summary(records, out / SUMMARY_FILE)
    failed = sum(r.status == "failed" for r in records)
    logger.info("sweep_finished", runs=len(records), failed=failed)
    return records


def _iter_results(
    cfg: ExperimentConfig, tasks: Sequence[tuple[ExperimentConfig, HoldParams, int]]
) -> Iterable[tuple[RunRecord, np.ndarray | None]]:
    if cfg.workers == 1:
        return map(_run_task, tasks)
    executor = ProcessPoolExecutor(
        max_workers=cfg.workers,
        initializer=configure_logging,
        initargs=(cfg.logging.level, cfg.logging.format),
    )
    return _ordered(executor, tasks)


def _ordered(
    executor: ProcessPoolExecutor,
    tasks: Sequence[tuple[ExperimentConfig, HoldParams, int]],
) -> Iterable[tuple[RunRecord, np.ndarray | None]]:
    with executor:
        yield from executor.map(_run_task, tasks)


def read_records(path: str | Path) -> list[RunRecord]:
    """Parse results.jsonl, skipping a torn final line."""
    records: list[RunRecord] = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(RunRecord.model_validate_json(line))
            except ValidationError:
                logger.warning("record_skipped", path=str(path), line=lineno)
    return records


def records_frame(records: Sequence[RunRecord]) -> pd.DataFrame:
    """One flat row per record; per-time AUROCs become auroc_t1..auroc_tK."""
    rows = []
    for record in records:
        row = record.model_dump(exclude={"per_time_auroc", "attack_times", "gammas"})
        row["gammas"] = " ".join(f"{g:.17g}" for g in record.gammas)
        for k, value in enumerate(record.per_time_auroc, start=1):
            row[f"auroc_t{k}"] = value
        rows.append(row)
    return pd.DataFrame(rows)


def write_summary(records: Sequence[RunRecord], path: str | Path) -> Path:
    out = Path(path)
    records_frame(records).to_csv(out, index=False, float_format="%.17g")
    return out


def aggregate_ci(
    records: Sequence[RunRecord],
    group_keys: Sequence[str] = GROUP_KEYS,
    value: str = "auroc",
) -> pd.DataFrame:
    """
    Mean and 95% normal interval of ``value`` per group of successful runs.

    Groups with fewer than two records are kept with ``flagged=True`` and no
    interval.
    """
    ok = [r for r in records if r.status == "ok" and getattr(r, value) is not None]
    frame = pd.DataFrame(
        [_group_fields(r, group_keys) | {value: getattr(r, value)} for r in ok],
        columns=[*group_keys, value],
    )
    return _grouped_ci(frame, list(group_keys), value)


def _group_fields(record: RunRecord, keys: Sequence[str]) -> dict[str, Any]:
    return {k: getattr(record, k) for k in keys}


def _grouped_ci(frame: pd.DataFrame, keys: list[str], value: str) -> pd.DataFrame:
    rows = []
    for group, part in frame.groupby(keys, sort=True):
        labels = group if isinstance(group, tuple) else (group,)
        rows.append(dict(zip(keys, labels, strict=True)) | _ci_row(part[value]))
    return pd.DataFrame(rows, columns=[*keys, *CI_COLUMNS])


def _ci_row(values: pd.Series) -> dict[str, Any]:
    if len(values) < 2:
        return {
            "count": len(values),
            "mean": float(values.mean()),
            "low": np.nan,
            "high": np.nan,
            "half_width": np.nan,
            "flagged": True,
        }
    ci = mean_confidence_interval(values.to_numpy())
    return {
        "count": ci.count,
        "mean": ci.mean,
        "low": ci.low,
        "high": ci.high,
        "half_width": ci.half_width,
        "flagged": False,
    }


def aggregate_time_ci(
    records: Sequence[RunRecord], group_keys: Sequence[str] = ("n",)
) -> pd.DataFrame:
    """Per-time AUROC mean and interval per group, one row per attack time."""
    rows = []
    for record in records:
        if record.status != "ok":
            continue
        for k, (t, auc) in enumerate(
            zip(record.attack_times, record.per_time_auroc, strict=True), start=1
        ):
            point = {"k": k, "t": t, "auroc": auc}
            rows.append(_group_fields(record, group_keys) | point)
    frame = pd.DataFrame(rows, columns=[*group_keys, "k", "t", "auroc"])
    return _grouped_ci(frame, [*group_keys, "k", "t"], "auroc")
