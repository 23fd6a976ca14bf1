import json

import pytest
from click.testing import CliRunner

from tmqmc.core.instance import random_instance
from tmqmc.errors import ChainWeightError, ConfigError, DegenerateSpectrumError, DimensionError
from tmqmc.main import cli
from tmqmc.models.schemas import ExperimentConfig
from tmqmc.services.ensemble import EnsembleService, derive_seed
from tmqmc.services.validation import PropertySuite
from tmqmc.storage.artifacts import SUMMARY_HEADER, TRAJECTORY_HEADER, ArtifactStore


def _config(**overrides) -> ExperimentConfig:
    data = {
        "mode": "anneal",
        "instance": {"n": 6},
        "plackets": 12,
        "steps": 600,
        "omega_in": 2.0,
        "ensemble": {"instances": 3, "repetitions": 2, "seed_base": 17},
        "short_window": 100,
        "long_window": 300,
    }
    data.update(overrides)
    return ExperimentConfig.model_validate(data)


# --- derive_seed

def test_derive_seed_is_stable_and_spread():
    assert derive_seed(5, 1, 2) == derive_seed(5, 1, 2)
    seeds = {derive_seed(5, i, r) for i in range(20) for r in range(5)}
    assert len(seeds) == 100
    assert all(0 <= s < 1 << 64 for s in seeds)
    assert derive_seed(5, 1) != derive_seed(5, 1, 0)


# --- ExperimentConfig

def test_config_consistency_checks():
    with pytest.raises(ConfigError):
        _config(mode="static")
    with pytest.raises(ConfigError):
        _config(mode="preanneal", omega=3.0)
    with pytest.raises(ConfigError):
        _config(mode="preanneal", omega=1.0, prefix_steps=600)
    with pytest.raises(ConfigError):
        _config(mode="static", omega=1.0, burn_in=600)
    with pytest.raises(ConfigError):
        ExperimentConfig.model_validate({"instance": {"path": "x.json", "n": 4}})
    assert _config(mode="static", omega=0.5, burn_in=100).plackets_for(6, 20) == 12


# --- ensemble_run

def test_empty_ensemble_rejected():
    with pytest.raises(ConfigError):
        EnsembleService.ensemble_run(_config(ensemble={"instances": 0}))


def test_ensemble_attaches_exhaustive_oracle():
    summary = EnsembleService.ensemble_run(_config())
    assert len(summary.cells) == 6
    assert [(c.instance_index, c.rep) for c in summary.cells] == [(i, r) for i in range(3) for r in range(2)]
    assert summary.failures == 0
    for cell in summary.cells:
        assert cell.instance_seed == derive_seed(17, cell.instance_index)
        assert cell.cell_seed == derive_seed(17, cell.instance_index, cell.rep)
        assert cell.final_energy >= cell.oracle_energy
        assert cell.success == (cell.final_energy == int(cell.oracle_energy))
    assert 0.0 <= summary.success_rate <= 1.0


def test_ensemble_summary_is_reproducible_across_threads(tmp_path):
    config = _config()
    serial = ArtifactStore(tmp_path / "a").write_summary(EnsembleService.ensemble_run(config, threads=1))
    pooled = ArtifactStore(tmp_path / "b").write_summary(EnsembleService.ensemble_run(config, threads=3))
    assert serial.read_bytes() == pooled.read_bytes()
    assert serial.read_text().splitlines()[0] == ",".join(SUMMARY_HEADER)


def test_failed_cell_is_recorded(monkeypatch):
    original = EnsembleService.run_single
    bad_seed = derive_seed(17, 1, 0)

    def flaky(config, inst, seed):
        if seed == bad_seed:
            raise ChainWeightError("boom")
        return original(config, inst, seed)

    monkeypatch.setattr(EnsembleService, "run_single", staticmethod(flaky))
    summary = EnsembleService.ensemble_run(_config())
    failed = [c for c in summary.cells if c.error is not None]
    assert [(c.instance_index, c.rep) for c in failed] == [(1, 0)]
    assert failed[0].error == "boom"
    assert failed[0].final_energy is None
    assert summary.failures == 1
    assert len(summary.cells) == 6


def test_oracle_failure_is_recorded_on_cells(monkeypatch):
    from tmqmc.services.oracle import OracleService

    original = OracleService.exhaustive_ground_state
    bad_seed = derive_seed(17, 1)

    def flaky(inst, threads=None):
        if inst.seed == bad_seed:
            raise DegenerateSpectrumError("no oracle")
        return original(inst, threads)

    monkeypatch.setattr(OracleService, "exhaustive_ground_state", staticmethod(flaky))
    summary = EnsembleService.ensemble_run(_config())
    missing = [c for c in summary.cells if c.oracle_error is not None]
    assert [(c.instance_index, c.rep) for c in missing] == [(1, 0), (1, 1)]
    assert all(c.oracle_error == "no oracle" and c.oracle_energy is None for c in missing)
    assert all(c.error is None and c.success is None and c.final_energy is not None for c in missing)
    assert summary.oracle_missing == 2
    assert summary.failures == 0


def test_static_ensemble_uses_spectral_oracle():
    summary = EnsembleService.ensemble_run(_config(mode="static", omega=1.0, burn_in=200, steps=1_200))
    assert all(c.success is None for c in summary.cells)
    assert summary.mean_oracle_density is not None
    assert summary.mean_abs_error is not None


def test_sweep_and_mode_comparison():
    points = EnsembleService.sweep_steps(_config(ensemble={"instances": 2, "seed_base": 3}), [200, 800])
    assert [p.steps for p in points] == [200, 800]
    assert all(p.mean_oracle_density is not None for p in points)

    compared = EnsembleService.compare_modes(
        _config(ensemble={"instances": 2, "seed_base": 3}, steps=1_000, prefix_steps=300), [0.5],
    )
    assert len(compared) == 1
    assert compared[0].static_abs_error >= 0.0
    assert compared[0].preanneal_abs_error >= 0.0


# --- ArtifactStore

def test_instance_file_roundtrip(store):
    inst = random_instance(9, 31)
    loaded = ArtifactStore.read_instance(store.write_instance(inst))
    assert loaded == inst


def test_malformed_instance_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 3, "couplings": [1, 1]}))
    with pytest.raises(DimensionError):
        ArtifactStore.read_instance(path)
    path.write_text(json.dumps({"seed": 3}))
    with pytest.raises(DimensionError):
        ArtifactStore.read_instance(path)


def test_trajectory_csv(store):
    from tmqmc.services.anneal import AnnealService
    from tmqmc.models.schemas import AnnealSchedule

    report = AnnealService.run_annealed(random_instance(5, 1), 10, AnnealSchedule(omega_in=1.0, total_steps=400), 0,
                                        short_window=100)
    path = store.write_trajectory(report.trajectory)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRAJECTORY_HEADER)
    assert len(lines) == 5
    assert ArtifactStore.read_trajectory(path) == report.trajectory


# --- PropertySuite

def test_property_suite_passes():
    results = PropertySuite(seed=0, trials=300).run()
    assert [r.name for r in results if not r.passed] == []
    assert len(results) == 8
    assert PropertySuite().check_parity().detail == "exhaustive for N = 2..12"


# --- CLI

def test_cli_gen_writes_instance(tmp_path):
    result = CliRunner().invoke(cli, ["gen", "--n", "7", "--seed", "4", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    data = json.loads((tmp_path / "instance.json").read_text())
    assert data["n"] == 7 and data["seed"] == 4
    assert len(data["couplings"]) == 21


def test_cli_anneal_from_instance_file(tmp_path):
    runner = CliRunner()
    runner.invoke(cli, ["gen", "--n", "6", "--seed", "1", "--out", str(tmp_path)])
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"instance": {"path": str(tmp_path / "instance.json")}, "short_window": 100}))
    result = runner.invoke(cli, ["anneal", "--config", str(config), "--steps", "500", "--plackets", "12",
                                 "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "anneal_trajectory.csv").read_text().startswith(",".join(TRAJECTORY_HEADER))
    report = json.loads((tmp_path / "anneal_report.json").read_text())
    assert report["steps"] == 500


def test_cli_static_without_field_fails(tmp_path):
    result = CliRunner().invoke(cli, ["static", "--n", "5", "--steps", "100", "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "requires omega > 0" in result.output


def test_cli_eigen_writes_json(tmp_path):
    result = CliRunner().invoke(cli, ["eigen", "--n", "5", "--seed", "2", "--omega", "1.0", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    data = json.loads((tmp_path / "eigen.json").read_text())
    assert {"theta1", "classical_expectation", "iterations"} <= set(data)


def test_cli_cap_violation_is_reported(tmp_path):
    result = CliRunner().invoke(cli, ["eigen", "--n", "21", "--omega", "1.0", "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "limited to N <= 20" in result.output


def test_cli_ensemble_and_landscape(tmp_path):
    runner = CliRunner()
    result = runner.invoke(cli, ["ensemble", "--n", "6", "--instances", "2", "--reps", "1", "--steps", "300",
                                 "--plackets", "12", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "summary.csv").read_text().splitlines()[0] == ",".join(SUMMARY_HEADER)

    result = runner.invoke(cli, ["landscape", "--n", "8", "--seed", "3", "--starts", "3", "--moves", "200",
                                 "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    for name in ("dos.csv", "flip_path.csv", "greedy.csv", "ground_state.json"):
        assert (tmp_path / name).exists()
    assert (tmp_path / "dos.csv").read_text().splitlines()[0] == "energy,count"


def test_cli_unknown_preset(tmp_path):
    result = CliRunner().invoke(cli, ["anneal", "--preset", "nope", "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "unknown preset" in result.output
