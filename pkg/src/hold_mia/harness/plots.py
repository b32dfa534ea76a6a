"""Figure data (CSV) and static SVG figures for a finished sweep."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import matplotlib
import numpy as np
import pandas as pd
import structlog
from matplotlib.figure import Figure

from ..data.processor import column_names, read_dataset_csv
from .sweep import GROUP_KEYS, SAMPLES_DIR, RunRecord, aggregate_ci, aggregate_time_ci

logger = structlog.get_logger(__name__)

RC_PARAMS = {
    "svg.hashsalt": "hold-mia",
    "svg.fonttype": "path",
    "font.family": "DejaVu Sans",
    "axes.unicode_minus": False,
}


def _save(fig: Figure, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def _group_label(beta: float, eps_num: float) -> str:
    return f"beta={beta:g}, eps={eps_num:g}"


def _bars(table: pd.DataFrame) -> Figure:
    orders = sorted(table["n"].unique())
    series = sorted(set(zip(table["beta"], table["eps_num"], strict=True)))
    width = 0.8 / max(len(series), 1)
    fig = Figure(figsize=(6.4, 4.0), layout="constrained")
    ax = fig.subplots()
    for j, (beta, eps_num) in enumerate(series):
        part = table[(table["beta"] == beta) & (table["eps_num"] == eps_num)]
        offset = (j - (len(series) - 1) / 2) * width
        xs = np.array([orders.index(n) for n in part["n"]]) + offset
        ax.bar(
            xs,
            part["mean"],
            width=width,
            yerr=part["half_width"].fillna(0.0),
            capsize=3,
            label=_group_label(beta, eps_num),
        )
    ax.axhline(0.5, color="grey", linewidth=0.8, linestyle="--")
    ax.set_xticks(range(len(orders)), [str(n) for n in orders])
    ax.set_xlabel("model order n")
    ax.set_ylabel("AUROC (95% CI)")
    ax.legend(loc="best", fontsize=8)
    return fig


def _time_curves(table: pd.DataFrame) -> Figure:
    fig = Figure(figsize=(6.4, 4.0), layout="constrained")
    ax = fig.subplots()
    for n, part in table.groupby("n", sort=True):
        ax.errorbar(
            part["t"],
            part["mean"],
            yerr=part["half_width"].fillna(0.0),
            marker="o",
            capsize=3,
            label=f"n={n}",
        )
    ax.axhline(0.5, color="grey", linewidth=0.8, linestyle="--")
    ax.set_xlabel("diffusion time t")
    ax.set_ylabel("per-time AUROC (95% CI)")
    ax.legend(loc="best", fontsize=8)
    return fig


def _scatter_table(records: Sequence[RunRecord], samples_dir: Path) -> pd.DataFrame:
    """Generated samples of the first successful repeat of every grid point."""
    frames = []
    seen: set[tuple[int, float, float]] = set()
    for record in sorted(records, key=lambda r: (r.n, r.beta, r.eps_num, r.repeat)):
        key = (record.n, record.beta, record.eps_num)
        path = samples_dir / f"{record.run_id}.csv"
        if record.status != "ok" or key in seen or not path.is_file():
            continue
        seen.add(key)
        points = read_dataset_csv(path)
        frame = pd.DataFrame(points, columns=column_names(points.shape[1]))
        frame.insert(0, "eps_num", record.eps_num)
        frame.insert(0, "beta", record.beta)
        frame.insert(0, "n", record.n)
        frame.insert(0, "run_id", record.run_id)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=["run_id", *GROUP_KEYS, "x1", "x2"])
    return pd.concat(frames, ignore_index=True)


def _scatter(table: pd.DataFrame) -> Figure:
    runs = list(dict.fromkeys(table["run_id"]))
    cols = max(min(len(runs), 3), 1)
    rows = max(-(-len(runs) // cols), 1)
    fig = Figure(figsize=(3.2 * cols, 3.2 * rows), layout="constrained")
    axes = fig.subplots(rows, cols, squeeze=False)
    for ax in axes.ravel():
        ax.set_axis_off()
    for ax, rid in zip(axes.ravel(), runs, strict=False):
        part = table[table["run_id"] == rid]
        ax.set_axis_on()
        ax.scatter(part["x1"], part["x2"], s=2, alpha=0.6)
        first = part.iloc[0]
        label = _group_label(first["beta"], first["eps_num"])
        ax.set_title(f"n={first['n']}, {label}", fontsize=8)
        ax.set_aspect("equal")
    return fig


def emit_plots(
    records: Sequence[RunRecord],
    output_dir: str | Path,
    samples_dir: str | Path | None = None,
) -> list[Path]:
    """
    Write AUROC-by-order bars, AUROC-by-time curves and sample scatters.

    Each figure is written as ``<name>.csv`` and ``<name>.svg``; identical
    records give byte-identical files.

    Raises:
        ValueError: If ``records`` is empty.
    """
    if not records:
        raise ValueError("no records to plot")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    samples = Path(samples_dir) if samples_dir is not None else out / SAMPLES_DIR

    bars = aggregate_ci(records, GROUP_KEYS)
    curves = aggregate_time_ci(records, ("n",))
    scatter = _scatter_table(records, samples)

    written: list[Path] = []
    with matplotlib.rc_context(RC_PARAMS):
        for name, table, draw in (
            ("auroc_by_order", bars, _bars),
            ("auroc_by_time", curves, _time_curves),
            ("samples_scatter", scatter, _scatter),
        ):
            csv_path = out / f"{name}.csv"
            table.to_csv(csv_path, index=False, float_format="%.17g")
            written += [csv_path, _save(draw(table), out / f"{name}.svg")]
    logger.info("plots_written", output_dir=str(out), files=len(written))
    return written
