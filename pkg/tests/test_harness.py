import json
from pathlib import Path

import numpy as np
import pytest

from epiadapt.baselines import no_adaptation_schedule
from epiadapt.dynamics import EpidemicParams, integrate, objective_value
from epiadapt.graph import generate_ba
from epiadapt.harness import (
    ConfigError,
    ExperimentConfig,
    derive_run_seed,
    normalize_algorithm,
    read_runs_csv,
    read_schedule_csv,
    run_experiment,
    summarize_run_dirs,
    write_schedule_csv,
    write_summary_csv,
)

TINY = dict(
    np_size=10, total_fes=1200, sub_fes=40, substeps=5, runs=2, master_seed=3
)


def tiny_config(**overrides):
    merged = {**TINY, **overrides}
    return ExperimentConfig(**merged)


class TestConfig:
    def test_defaults_match_reported_campaign(self):
        cfg = ExperimentConfig()
        assert cfg.np_size == 350
        assert cfg.total_fes == 6_300_000
        assert cfg.cr == 0.9
        assert cfg.runs == 25

    def test_from_dict_round_trip(self):
        cfg = ExperimentConfig.from_dict(
            {"np": 16, "total_fes": 5000, "algorithm": "nsde"}
        )
        assert cfg.np_size == 16
        assert cfg.algorithm == "nsde"

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            ExperimentConfig.from_dict({"np_sizes": 16})

    def test_null_value_rejected(self):
        with pytest.raises(ConfigError, match="null"):
            ExperimentConfig.from_dict({"beta": None})

    def test_nullable_keys_allowed(self):
        cfg = ExperimentConfig.from_dict({"ds": None, "sub_fes": None})
        assert cfg.ds is None and cfg.sub_fes is None

    def test_validation(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(runs=0)
        with pytest.raises(ConfigError):
            ExperimentConfig(algorithm="simulated-annealing")
        with pytest.raises(ConfigError):
            ExperimentConfig(gc_fraction=1.0)
        with pytest.raises(ConfigError):
            ExperimentConfig(p0=1.2)

    def test_algorithm_spelling_normalized(self):
        assert ExperimentConfig(algorithm="NSDE-C3").algorithm == "nsde_c3"
        assert normalize_algorithm("nsde-c3") == "nsde_c3"
        with pytest.raises(ConfigError):
            normalize_algorithm("hillclimb")

    def test_json_keys_use_np(self):
        keys = ExperimentConfig.json_keys()
        assert "np" in keys and "np_size" not in keys


class TestSeedDerivation:
    def test_deterministic(self):
        assert derive_run_seed(7, 3) == derive_run_seed(7, 3)

    def test_distinct_across_runs_and_masters(self):
        seeds = {derive_run_seed(m, r) for m in range(4) for r in range(25)}
        assert len(seeds) == 100


class TestRunExperiment:
    def test_none_baseline_single_record(self):
        cfg = tiny_config(algorithm="none")
        records = run_experiment(cfg)
        assert len(records) == 1
        rec = records[0]
        assert rec.violation == 0.0
        net = generate_ba(cfg.n, cfg.m0, cfg.m, cfg.net_seed)
        params = EpidemicParams(beta=0.4, gamma=0.3, p0=0.153, horizon=10, substeps=5)
        expected = objective_value(integrate(net, params, no_adaptation_schedule(net, 10)))
        assert rec.ofv == pytest.approx(expected)

    def test_constant_below_none(self):
        f_none = run_experiment(tiny_config(algorithm="none"))[0].ofv
        f_const = run_experiment(tiny_config(algorithm="constant"))[0].ofv
        assert f_const < f_none

    def test_optimizer_records_per_run(self):
        records = run_experiment(tiny_config(algorithm="nsde"))
        assert [rec.run for rec in records] == [0, 1]
        assert all(rec.evaluations <= 1200 for rec in records)
        assert all(len(rec.history) == rec.generations for rec in records)

    def test_campaign_reproducible(self):
        a = run_experiment(tiny_config(algorithm="nsde_c3"))
        b = run_experiment(tiny_config(algorithm="nsde_c3"))
        for x, y in zip(a, b):
            assert x.ofv == y.ofv and x.violation == y.violation
            np.testing.assert_array_equal(x.schedule.blocks, y.schedule.blocks)

    def test_integration_failure_loses_run_not_campaign(self, monkeypatch, capsys):
        import epiadapt.harness as harness
        from epiadapt.dynamics import IntegrationError

        real = harness._optimizer_record

        def flaky(cfg, net, params, run_index):
            if run_index == 0:
                raise IntegrationError("state became non-finite during integration")
            return real(cfg, net, params, run_index)

        monkeypatch.setattr(harness, "_optimizer_record", flaky)
        records = run_experiment(tiny_config(algorithm="nsde", runs=3))
        assert [rec.run for rec in records] == [1, 2]
        assert "run 0 aborted" in capsys.readouterr().err

    def test_workers_do_not_change_results(self):
        serial = run_experiment(tiny_config(algorithm="nsde_c3"))
        pooled = run_experiment(tiny_config(algorithm="nsde_c3"), workers=2)
        for x, y in zip(serial, pooled):
            assert x.run == y.run and x.ofv == y.ofv

    def test_artifact_layout(self, tmp_path):
        outdir = tmp_path / "campaign"
        run_experiment(tiny_config(algorithm="nsde"), outdir=outdir)
        assert (outdir / "runs.csv").exists()
        assert (outdir / "timing.txt").exists()
        for run in ("run_00", "run_01"):
            for name in ("history.csv", "trace_I.csv", "trace_W.csv", "best_schedule.csv"):
                assert (outdir / run / name).exists()
        header = (outdir / "run_00" / "history.csv").read_text().splitlines()[0]
        assert header == "generation,cycle,group,best_f,best_violation,epsilon"

    def test_csv_bytes_identical_across_reruns(self, tmp_path):
        cfg = tiny_config(algorithm="nsde_c3")
        d1, d2 = tmp_path / "a", tmp_path / "b"
        run_experiment(cfg, outdir=d1)
        run_experiment(cfg, outdir=d2, workers=2)
        for path in sorted(d1.rglob("*.csv")):
            other = d2 / path.relative_to(d1)
            assert other.read_bytes() == path.read_bytes(), path.name


class TestScheduleCsv:
    def test_round_trip(self, tmp_path):
        net = generate_ba(6, 3, 2, seed=0)
        rng = np.random.default_rng(1)
        from epiadapt.dynamics import decode_candidate

        sched = decode_candidate(rng.random(6 * 5 * 3), 6, 4)
        path = tmp_path / "sched.csv"
        write_schedule_csv(sched, path)
        loaded = read_schedule_csv(path, 6, 4)
        np.testing.assert_allclose(loaded.blocks, sched.blocks, atol=1e-12)

    def test_bad_block_index_rejected(self, tmp_path):
        path = tmp_path / "sched.csv"
        path.write_text("t,i,j,w\n0,0,1,0.5\n")
        with pytest.raises(ConfigError):
            read_schedule_csv(path, 4, 3)

    def test_diagonal_rejected(self, tmp_path):
        path = tmp_path / "sched.csv"
        path.write_text("t,i,j,w\n1,2,2,0.5\n")
        with pytest.raises(ConfigError):
            read_schedule_csv(path, 4, 3)

    def test_node_ids_bounds_checked(self, tmp_path):
        path = tmp_path / "sched.csv"
        path.write_text("t,i,j,w\n1,0,9,0.5\n")
        with pytest.raises(ConfigError):
            read_schedule_csv(path, 4, 3)


class TestStatsPipeline:
    def test_summary_round_trip(self, tmp_path):
        d_ref = tmp_path / "c3"
        d_other = tmp_path / "none"
        run_experiment(tiny_config(algorithm="nsde_c3"), outdir=d_ref)
        run_experiment(tiny_config(algorithm="none"), outdir=d_other)
        rows = summarize_run_dirs([d_ref, d_other], reference="nsde-c3")
        assert rows[0].algorithm == "nsde_c3"
        assert rows[0].p_value is None
        out = tmp_path / "summary.csv"
        write_summary_csv(rows, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "algorithm,mean_ofv,std,p_value,best,infeasible_runs"
        assert lines[1].startswith("nsde_c3,")
        assert ",-," in lines[1]

    def test_runs_csv_reader_validates(self, tmp_path):
        path = tmp_path / "runs.csv"
        path.write_text("foo,bar\n1,2\n")
        with pytest.raises(ConfigError):
            read_runs_csv(path)
        path.write_text("algorithm,run,ofv,violation\n")
        with pytest.raises(ConfigError):
            read_runs_csv(path)
