import json

import pytest

from epiadapt.cli import main
from epiadapt.graph import load_network

TINY_CONFIG = {
    "n": 20, "m0": 5, "m": 5, "net_seed": 1,
    "beta": 0.4, "gamma": 0.3, "p0": 0.153, "horizon": 10, "substeps": 5,
    "budget": 700.0, "np": 10, "total_fes": 1200, "sub_fes": 40,
    "runs": 2, "master_seed": 5,
}


@pytest.fixture()
def workspace(tmp_path):
    config = tmp_path / "exp.json"
    config.write_text(json.dumps(TINY_CONFIG))
    net = tmp_path / "net.csv"
    assert main(["gen-net", "--n", "20", "--m0", "5", "--m", "5",
                 "--seed", "1", "--out", str(net)]) == 0
    return tmp_path, net, config


def test_gen_net_writes_loadable_network(workspace):
    tmp_path, net, _ = workspace
    loaded = load_network(net)
    assert loaded.n == 20 and loaded.edge_count == 85


def test_group_prob_output(capsys):
    assert main(["group-prob", "--k", "1", "--cycles", "50", "--ns", "9"]) == 0
    assert "P_1 = 0.9972" in capsys.readouterr().out
    assert main(["group-prob", "--k", "2", "--cycles", "50", "--ns", "9"]) == 0
    assert "P_2 = 0.9799" in capsys.readouterr().out


def test_simulate_default_schedule(workspace, capsys):
    tmp_path, net, config = workspace
    out = tmp_path / "traj.csv"
    assert main(["simulate", "--net", str(net), "--config", str(config),
                 "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0]
    assert header.startswith("t,p_0,") and header.endswith("p_19")
    assert "objective" in capsys.readouterr().out


def test_optimize_baseline_stats_pipeline(workspace, capsys):
    tmp_path, net, config = workspace
    for algo, outdir in (("nsde-c3", "c3"), ("nsde", "plain")):
        assert main(["optimize", "--net", str(net), "--config", str(config),
                     "--algo", algo, "--outdir", str(tmp_path / outdir)]) == 0
    assert main(["baseline", "--net", str(net), "--config", str(config),
                 "--mode", "none", "--outdir", str(tmp_path / "none")]) == 0
    assert main(["baseline", "--net", str(net), "--config", str(config),
                 "--mode", "constant", "--outdir", str(tmp_path / "const")]) == 0
    summary = tmp_path / "summary.csv"
    assert main(["stats",
                 "--indir", str(tmp_path / "c3"), str(tmp_path / "plain"),
                 str(tmp_path / "none"), str(tmp_path / "const"),
                 "--ref", "nsde-c3", "--out", str(summary)]) == 0
    lines = summary.read_text().splitlines()
    assert lines[0] == "algorithm,mean_ofv,std,p_value,best,infeasible_runs"
    assert len(lines) == 5
    out = capsys.readouterr().out
    assert "nsde_c3" in out and "*" in out


def test_simulate_with_optimized_schedule(workspace, capsys):
    tmp_path, net, config = workspace
    assert main(["optimize", "--net", str(net), "--config", str(config),
                 "--algo", "nsde", "--runs", "1",
                 "--outdir", str(tmp_path / "opt")]) == 0
    optimize_out = capsys.readouterr().out
    out = tmp_path / "traj.csv"
    assert main(["simulate", "--net", str(net), "--config", str(config),
                 "--schedule", str(tmp_path / "opt" / "run_00" / "best_schedule.csv"),
                 "--out", str(out)]) == 0
    simulate_out = capsys.readouterr().out
    reported = float(optimize_out.split("ofv=")[1].split()[0])
    resimulated = float(simulate_out.split("objective ")[1].split(";")[0])
    assert abs(reported - resimulated) < 1e-4


def test_unknown_config_key_exits_2(workspace, tmp_path):
    _, net, _ = workspace
    bad = tmp_path / "bad.json"
    bad.write_text('{"bogus": 1}')
    assert main(["simulate", "--net", str(net), "--config", str(bad),
                 "--out", str(tmp_path / "x.csv")]) == 2


def test_invalid_parameter_exits_2(tmp_path):
    assert main(["gen-net", "--n", "3", "--m0", "5", "--m", "5",
                 "--seed", "0", "--out", str(tmp_path / "net.csv")]) == 2


def test_missing_network_file_exits_3(workspace, tmp_path):
    _, _, config = workspace
    assert main(["simulate", "--net", str(tmp_path / "nope.csv"),
                 "--config", str(config), "--out", str(tmp_path / "x.csv")]) == 3


def test_missing_subcommand_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 2
