"""Tests for configuration, sweeps, plots and the command line."""

from __future__ import annotations

import json
from collections.abc import Iterator
from pathlib import Path
from typing import Any

import numpy as np
import pytest
import structlog
from pydantic import ValidationError

from hold_mia.harness import sweep
from hold_mia.harness.cli import main
from hold_mia.harness.config import (
    ExperimentConfig,
    GridConfig,
    load_config,
    parse_override,
)
from hold_mia.harness.plots import emit_plots
from hold_mia.harness.sweep import (
    RunRecord,
    aggregate_ci,
    aggregate_time_ci,
    derive_seed,
    read_records,
    run_experiment,
)

TINY = {
    "grid": {"orders": [1, 2], "betas": [2.0, 10.0]},
    "network": {"depth": 2, "width": 8},
    "train": {"epochs": 2, "batch_size": 64},
    "attack": {"n_time": 3},
    "sampler": {"steps": 5},
    "data": {"count": 80},
    "privacy": {"grid_points": 5},
    "generate_count": 20,
    "permutations": 10,
    "repeats": 3,
}


def tiny_config(output_dir: Path, **updates: Any) -> ExperimentConfig:
    raw = {**TINY, "output_dir": str(output_dir), **updates}
    return ExperimentConfig.model_validate(raw)


def make_record(
    n: int, beta: float, auroc: float | None, repeat: int = 0, **extra: Any
) -> RunRecord:
    fields: dict[str, Any] = {
        "run_id": f"n{n}_beta{beta!r}_eps0.001_r{repeat}",
        "status": "ok",
        "n": n,
        "d": 2,
        "beta": beta,
        "eps_num": 1e-3,
        "inv_mass": 1.0,
        "horizon": 1.0,
        "gammas": [],
        "xi": 5.0,
        "repeat": repeat,
        "seed": repeat,
        "auroc": auroc,
        "attack_times": [0.0, 0.5],
        "per_time_auroc": [auroc, 0.5],
    }
    fields.update(extra)
    return RunRecord(**fields)


def stable_fields(record: RunRecord) -> dict[str, Any]:
    return record.model_dump(exclude={"wall_seconds"})


@pytest.fixture(autouse=True)
def _reset_structlog() -> Iterator[None]:
    yield
    structlog.reset_defaults()


class TestConfig:
    """Tests for config loading and overrides."""

    def test_derive_seed(self) -> None:
        """Seeds are stable, 63-bit and differ across repeats and keys."""
        key = {"n": 2, "beta": 10.0}
        seed = derive_seed(0, key, 0)
        assert seed == derive_seed(0, dict(reversed(list(key.items()))), 0)
        assert 0 <= seed < 2**63
        assert seed != derive_seed(0, key, 1)
        assert seed != derive_seed(1, key, 0)
        assert seed != derive_seed(0, {"n": 3, "beta": 10.0}, 0)

    def test_parse_override(self) -> None:
        """Values are parsed as YAML."""
        assert parse_override("train.epochs=10") == {"train": {"epochs": 10}}
        assert parse_override("grid.orders=[1, 3]") == {"grid": {"orders": [1, 3]}}
        assert parse_override("output_dir=out") == {"output_dir": "out"}
        with pytest.raises(ValueError):
            parse_override("repeats")
        with pytest.raises(ValueError):
            parse_override("=3")

    def test_precedence(self, tmp_path: Path) -> None:
        """File < --set < environment."""
        path = tmp_path / "exp.yaml"
        path.write_text("repeats: 3\noutput_dir: from_file\ntrain:\n  epochs: 7\n")
        cfg = load_config(path, ["repeats=4"], env={})
        assert (cfg.repeats, cfg.train.epochs) == (4, 7)
        assert cfg.output_dir == Path("from_file")
        env = {"HOLD_MIA_OUTPUT_DIR": "from_env"}
        cfg = load_config(path, ["output_dir=from_set"], env=env)
        assert cfg.output_dir == Path("from_env")

    def test_defaults_without_file(self) -> None:
        """No file and no overrides gives the model defaults."""
        cfg = load_config(env={})
        assert cfg.repeats == 5
        assert cfg.grid.orders == [1, 2, 3]

    def test_unknown_keys_rejected(self, tmp_path: Path) -> None:
        """Top-level typos fail validation."""
        with pytest.raises(ValidationError):
            load_config(None, ["repaets=2"], env={})
        with pytest.raises(ValidationError):
            load_config(None, ["repeats=0"], env={})

    def test_non_mapping_file(self, tmp_path: Path) -> None:
        """A YAML list is not a config."""
        path = tmp_path / "bad.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ValueError):
            load_config(path, env={})

    def test_explicit_damping(self) -> None:
        """Explicit damping needs xi and gammas for every order above 1."""
        with pytest.raises(ValidationError):
            GridConfig(damping="explicit", orders=[2], xi=2.0)
        grid = GridConfig(
            damping="explicit", orders=[1, 2], xi=2.0, gammas_by_order={2: [1.5]}
        )
        params = grid.process(2, 10.0, 1e-3, d=2)
        assert params.gammas == (1.5,)
        assert params.xi == 2.0

    def test_critical_grid_points(self) -> None:
        """Every combination appears in order-major order."""
        grid = GridConfig(orders=[1, 2], betas=[2.0, 10.0], eps_nums=[1e-3])
        points = [(p.n, p.beta) for p in grid.points(d=2)]
        assert points == [(1, 2.0), (1, 10.0), (2, 2.0), (2, 10.0)]


class TestAggregation:
    """Tests for grouping records into confidence intervals."""

    def test_aggregate_ci(self) -> None:
        """Two repeats give the normal interval; a single one is flagged."""
        records = [
            make_record(1, 2.0, 0.6, 0),
            make_record(1, 2.0, 0.8, 1),
            make_record(2, 2.0, 0.55, 0),
            make_record(
                2, 2.0, None, 1, status="failed", per_time_auroc=[], attack_times=[]
            ),
        ]
        table = aggregate_ci(records)
        assert list(table["n"]) == [1, 2]
        first, second = table.iloc[0], table.iloc[1]
        assert first["mean"] == pytest.approx(0.7)
        assert first["half_width"] == pytest.approx(0.196, rel=1e-3)
        assert not first["flagged"]
        assert second["count"] == 1
        assert second["flagged"]
        assert np.isnan(second["low"])

    def test_aggregate_time_ci(self) -> None:
        """One row per (n, attack time)."""
        records = [make_record(1, 2.0, 0.6, 0), make_record(1, 2.0, 0.8, 1)]
        table = aggregate_time_ci(records)
        assert list(table["k"]) == [1, 2]
        assert table.iloc[0]["mean"] == pytest.approx(0.7)
        assert table.iloc[1]["half_width"] == pytest.approx(0.0)

    def test_read_records_skips_torn_line(self, tmp_path: Path) -> None:
        """A partially written last line is dropped."""
        path = tmp_path / "results.jsonl"
        good = make_record(1, 2.0, 0.6).model_dump_json()
        path.write_text(good + "\n\n" + good[: len(good) // 2])
        records = read_records(path)
        assert len(records) == 1
        assert records[0].auroc == 0.6


class TestSweep:
    """End-to-end sweeps at toy scale."""

    def test_outputs(self, tmp_path: Path) -> None:
        """Every grid point and repeat yields one record and its files."""
        records = run_experiment(tiny_config(tmp_path))
        assert len(records) == 12
        assert all(r.status == "ok" for r in records)
        assert [r.n for r in records[:6]] == [1] * 6
        assert [r.repeat for r in records[:3]] == [0, 1, 2]

        config = json.loads((tmp_path / "config.json").read_text())
        assert config["repeats"] == 3
        lines = (tmp_path / "results.jsonl").read_text().splitlines()
        assert len(lines) == 12
        assert [r.run_id for r in read_records(tmp_path / "results.jsonl")] == [
            r.run_id for r in records
        ]
        assert (tmp_path / "summary.csv").is_file()
        for record in records:
            assert 0.0 <= record.auroc <= 1.0
            assert len(record.per_time_auroc) == 3
            assert record.attack_times == pytest.approx([0.0, 1 / 3, 2 / 3])
            assert (tmp_path / "samples" / f"{record.run_id}.csv").is_file()
            assert record.epsilon_bound is not None and record.epsilon_bound > 0

    def test_deterministic(self, tmp_path: Path) -> None:
        """The same config and seed base reproduce every field but wall time."""
        first = run_experiment(tiny_config(tmp_path / "a", repeats=1))
        second = run_experiment(tiny_config(tmp_path / "b", repeats=1))
        assert [stable_fields(r) for r in first] == [stable_fields(r) for r in second]
        for record in first:
            name = f"samples/{record.run_id}.csv"
            first_bytes = (tmp_path / "a" / name).read_bytes()
            assert first_bytes == (tmp_path / "b" / name).read_bytes()

    def test_seed_base_changes_results(self, tmp_path: Path) -> None:
        """A different seed base gives different seeds."""
        grid = {"orders": [1], "betas": [2.0]}
        first = run_experiment(tiny_config(tmp_path / "a", repeats=1, grid=grid))
        second = run_experiment(
            tiny_config(tmp_path / "b", repeats=1, grid=grid, seed_base=1)
        )
        assert first[0].seed != second[0].seed

    def test_close_grid_values_get_own_files(self, tmp_path: Path) -> None:
        """Betas equal to six digits still write separate sample files."""
        grid = {"orders": [1], "betas": [2.0, 2.0000001]}
        records = run_experiment(tiny_config(tmp_path, repeats=1, grid=grid))
        ids = [r.run_id for r in records]
        assert ids == ["n1_beta2.0_eps0.001_r0", "n1_beta2.0000001_eps0.001_r0"]
        first, second = (tmp_path / "samples" / f"{rid}.csv" for rid in ids)
        assert first.read_bytes() != second.read_bytes()

    def test_workers_keep_order(self, tmp_path: Path) -> None:
        """A process pool produces the same records in the same order."""
        grid = {"orders": [1, 2], "betas": [2.0]}
        serial = run_experiment(tiny_config(tmp_path / "a", repeats=1, grid=grid))
        pooled = run_experiment(
            tiny_config(tmp_path / "b", repeats=1, grid=grid, workers=2)
        )
        assert [stable_fields(r) for r in serial] == [stable_fields(r) for r in pooled]

    def test_failed_runs_are_recorded(
        self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """A failing grid point becomes a failed record; the sweep continues."""
        real_train = sweep.train

        def flaky_train(net: Any, params: Any, *args: Any, **kwargs: Any) -> Any:
            if params.n == 2:
                raise RuntimeError("boom")
            return real_train(net, params, *args, **kwargs)

        monkeypatch.setattr("hold_mia.harness.sweep.train", flaky_train)
        records = run_experiment(tiny_config(tmp_path, repeats=1))
        statuses = {r.run_id: r.status for r in records}
        assert len(records) == 4
        failed = [r for r in records if r.status == "failed"]
        assert {r.n for r in failed} == {2}
        assert all(r.error == "RuntimeError: boom" and r.auroc is None for r in failed)
        assert sum(s == "ok" for s in statuses.values()) == 2
        for record in failed:
            assert not (tmp_path / "samples" / f"{record.run_id}.csv").exists()
        assert len(read_records(tmp_path / "results.jsonl")) == 4


class TestPlots:
    """Tests for figure emission."""

    def test_empty_records(self, tmp_path: Path) -> None:
        """Nothing to plot is an error."""
        with pytest.raises(ValueError):
            emit_plots([], tmp_path)

    def test_files_are_byte_identical(
        self, tmp_path: Path, rng: np.random.Generator
    ) -> None:
        """Two emissions from the same records match byte for byte."""
        records = [
            make_record(n, 2.0, 0.5 + 0.1 * r, r) for n in (1, 2) for r in range(2)
        ]
        samples = tmp_path / "samples"
        samples.mkdir()
        for record in records:
            np.savetxt(
                samples / f"{record.run_id}.csv",
                rng.standard_normal((10, 2)),
                delimiter=",",
                header="x1,x2",
                comments="",
            )
        first = emit_plots(records, tmp_path / "a", samples)
        second = emit_plots(records, tmp_path / "b", samples)
        assert [p.name for p in first] == [
            "auroc_by_order.csv",
            "auroc_by_order.svg",
            "auroc_by_time.csv",
            "auroc_by_time.svg",
            "samples_scatter.csv",
            "samples_scatter.svg",
        ]
        for a, b in zip(first, second, strict=True):
            assert a.read_bytes() == b.read_bytes()
        assert b"<svg" in first[1].read_bytes()


class TestCli:
    """Tests for the hold-mia entry point."""

    def run(
        self, capsys: pytest.CaptureFixture[str], *argv: str
    ) -> tuple[int, dict[str, Any]]:
        code = main(list(argv))
        body = json.loads(capsys.readouterr().out)
        return code, body

    def test_privacy_report(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """A squared diameter alone is enough for a report."""
        code, body = self.run(
            capsys,
            "privacy-report",
            "--delta2f", "4",
            "--order", "2",
            "--out-dir", str(tmp_path),
            "--set", "privacy.grid_points=5",
        )
        assert code == 0
        assert body["violations"] == 0
        assert body["epsilon_bound"] > 0
        assert Path(body["files"]["report"]).is_file()
        assert Path(body["files"]["curve"]).is_file()

    def test_invalid_config_is_usage_error(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Validation failures exit 2 with a CONFIG_ERROR record."""
        code, body = self.run(
            capsys, "privacy-report", "--delta2f", "4", "--set", "repeats=0",
            "--out-dir", str(tmp_path),
        )
        assert code == 2
        assert body["error"]["code"] == "CONFIG_ERROR"
        assert body["error"]["details"]["errors"][0]["loc"] == "repeats"

    def test_malformed_override(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """An override without '=' is an invalid argument."""
        code, body = self.run(
            capsys, "privacy-report", "--delta2f", "4", "--set", "repeats",
            "--out-dir", str(tmp_path),
        )
        assert code == 2
        assert body["error"]["code"] == "INVALID_ARGUMENT"

    def test_missing_checkpoint(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """A missing file is a runtime failure, not a usage error."""
        code, body = self.run(
            capsys,
            "attack",
            "--checkpoint", str(tmp_path / "none.npz"),
            "--members", str(tmp_path / "m.csv"),
            "--holdouts", str(tmp_path / "h.csv"),
        )
        assert code == 1
        assert body["error"]["code"] == "NOT_FOUND"

    def test_generate_train_attack(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """The three-step pipeline runs end to end on a toy configuration."""
        shared = [
            "--set", "network.depth=2",
            "--set", "network.width=8",
            "--set", "data.count=60",
        ]
        code, body = self.run(
            capsys, "generate-data", "--out-dir", str(tmp_path), *shared
        )
        assert code == 0
        assert (body["members"], body["holdouts"]) == (30, 30)

        checkpoint = tmp_path / "model.npz"
        code, body = self.run(
            capsys,
            "train",
            "--members", body["files"]["members"],
            "--checkpoint", str(checkpoint),
            "--epochs", "3",
            "--order", "2",
            *shared,
        )
        assert code == 0
        assert body["epochs"] == 3
        assert body["critically_damped"]
        assert body["process"]["n"] == 2
        assert checkpoint.is_file()

        code, body = self.run(
            capsys,
            "attack",
            "--checkpoint", str(checkpoint),
            "--members", str(tmp_path / "members.csv"),
            "--holdouts", str(tmp_path / "holdouts.csv"),
            "--out-dir", str(tmp_path / "attack"),
            "--set", "attack.n_time=4",
        )
        assert code == 0
        assert 0.0 <= body["auroc"] <= 1.0
        assert len(body["per_time_auroc"]) == 4
        assert Path(body["files"]["roc"]).is_file()

    def test_sweep_and_plot(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """sweep writes results that plot turns into figures."""
        config = tmp_path / "tiny.yaml"
        config.write_text(json.dumps({**TINY, "grid": {"orders": [1], "betas": [2.0]}}))
        code, body = self.run(
            capsys,
            "sweep",
            "--config", str(config),
            "--output-dir", str(tmp_path / "out"),
            "--repeats", "2",
        )
        assert code == 0
        assert body == {"runs": 2, "failed": [], "output_dir": str(tmp_path / "out")}

        code, body = self.run(capsys, "plot", "--output-dir", str(tmp_path / "out"))
        assert code == 0
        assert len(body["files"]) == 6
        assert all(Path(p).parent == tmp_path / "out" / "plots" for p in body["files"])
