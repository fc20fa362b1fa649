import csv
import json

import numpy as np
import pytest

from swarmstab import cli
from swarmstab.scenario import ScenarioError, builtin_text, load_builtin, parse_scenario, scenario_from_dict


def write(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def builtin_dict(k):
    return json.loads(builtin_text(k))


def test_builtin_round_trip(tmp_path):
    for k in (1, 2, 3):
        first = load_builtin(k)
        again = parse_scenario(write(tmp_path, first.to_dict()))
        assert again.to_dict() == first.to_dict()


def test_builtin_instance_one_records_graph_choice():
    sc = load_builtin(1)
    assert "17" in sc.comment
    assert np.trace(np.diag(sc.W.sum(axis=1))) == 17


def test_diagonal_weight_is_named():
    data = builtin_dict(2)
    data["W"][1][1] = 1
    with pytest.raises(ScenarioError, match=r"W\[1\]\[1\]"):
        scenario_from_dict(data)


def test_extra_agent_column_is_reported():
    data = builtin_dict(2)
    for row in data["X0"]:
        row.append(0.0)
    with pytest.raises(ScenarioError, match=r"3x5, got 3x6"):
        scenario_from_dict(data)


def test_all_errors_are_collected():
    data = builtin_dict(1)
    data["W"][0][1] = -1
    data["F"] = [[1, 0], [0, 1]]
    data["t_span"] = [0, 0]
    data["bogus"] = 1
    with pytest.raises(ScenarioError) as info:
        scenario_from_dict(data)
    assert len(info.value.errors) == 4


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{ not json")
    with pytest.raises(ScenarioError, match="malformed JSON"):
        parse_scenario(str(path))


@pytest.mark.parametrize(
    "k,verdict",
    [(1, "consensus"), (2, "swarm_unstable"), (3, "swarm_stable")],
)
def test_analyze_builtin_files(k, verdict, tmp_path, capsys):
    path = write(tmp_path, builtin_dict(k))
    code = cli.main(["analyze", path, "--format", "json"])
    report = json.loads(capsys.readouterr().out)
    assert code == 0
    assert report["verdict"] == verdict


def test_analyze_instance_one_report(tmp_path, capsys):
    cli.main(["analyze", write(tmp_path, builtin_dict(1)), "--format", "json", "--out", str(tmp_path / "o")])
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    mu = sorted(re for re, _ in report["pencil"]["finite_eigenvalues"])
    np.testing.assert_allclose(mu, [0.1667, 1.0], atol=1e-3)
    assert report["fast_path"]["path"] == "real-finite-eigenvalues"
    assert report["consensus_estimate"] is not None
    assert report == json.loads(capsys.readouterr().out)


def test_analyze_instance_three_spectrum(tmp_path, capsys):
    cli.main(["analyze", write(tmp_path, builtin_dict(3)), "--format", "json"])
    report = json.loads(capsys.readouterr().out)
    lam = sorted(re for re, _ in report["laplacian"]["spectrum"])
    np.testing.assert_allclose(lam, [0, 1, 2, 3, 4], atol=1e-9)


def test_report_schema_is_stable(tmp_path, capsys):
    keys = None
    for k in (1, 2, 3):
        cli.main(["analyze", write(tmp_path, builtin_dict(k)), "--format", "json"])
        report = json.loads(capsys.readouterr().out)
        shape = {key: sorted(v) if isinstance(v, dict) else type(v).__name__ for key, v in report.items()}
        shape.pop("fast_path"), shape.pop("consensus_estimate")
        keys = keys or shape
        assert shape == keys


def test_full_precision_in_machine_output(tmp_path, capsys):
    cli.main(["analyze", write(tmp_path, builtin_dict(1)), "--format", "json"])
    report = json.loads(capsys.readouterr().out)
    mu = min(re for re, _ in report["pencil"]["finite_eigenvalues"])
    assert abs(mu - 1 / 6) < 1e-14


def test_expect_mismatch_exit_code(tmp_path, capsys):
    path = write(tmp_path, builtin_dict(2))
    assert cli.main(["analyze", path, "--expect", "consensus"]) == cli.EXIT_MISMATCH
    assert cli.main(["analyze", path, "--expect", "swarm_unstable"]) == cli.EXIT_OK


def test_indeterminate_exit_code(tmp_path, capsys):
    data = builtin_dict(1)
    data["E"] = [[1, 0, 0], [0, 0, 0], [0, 0, 0]]
    data["F"] = [[1, 0, 0], [0, 1, 0], [0, 0, 0]]
    assert cli.main(["analyze", write(tmp_path, data)]) == cli.EXIT_INDETERMINATE
    assert "indeterminate" in capsys.readouterr().out


def test_validation_exit_code(tmp_path, capsys):
    data = builtin_dict(1)
    data["W"][2][2] = 1
    assert cli.main(["analyze", write(tmp_path, data)]) == cli.EXIT_INPUT
    assert "W[2][2]" in capsys.readouterr().err
    assert cli.main(["analyze", str(tmp_path / "missing.json")]) == cli.EXIT_INPUT


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_simulate_instance_one_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = cli.main(["simulate", write(tmp_path, builtin_dict(1)), "--out", str(out), "--samples", "250"])
    assert code == 0
    assert {p.name for p in out.iterdir()} == {"report.json", "trajectory.csv", "dispersion.csv", "plot.svg"}
    header, traj = read_csv(out / "trajectory.csv")
    assert header[:4] == ["t", "x_1_1", "x_1_2", "x_1_3"]
    assert header[-1] == "x_5_3"
    assert traj.shape == (250, 16)
    assert np.all(np.diff(traj[:, 0]) > 0)
    assert np.all(np.isfinite(traj))
    _, disp = read_csv(out / "dispersion.csv")
    assert disp[-1, 1] <= 0.02 * disp[0, 1]
    report = json.loads((out / "report.json").read_text())
    assert report["simulation"]["empirical"]["label"] == "consensus-like"
    assert (out / "plot.svg").read_text().lstrip().startswith("<?xml")


def test_trajectory_columns_are_agent_major(tmp_path, capsys):
    out = tmp_path / "run"
    cli.main(["simulate", write(tmp_path, builtin_dict(2)), "--out", str(out), "--samples", "10"])
    header, traj = read_csv(out / "trajectory.csv")
    report = json.loads((out / "report.json").read_text())
    # agent 2, component 3 at t = 0+ sits in column x_2_3
    col = header.index("x_2_3")
    from swarmstab.simulator import consistent_projection
    from instances import system, initial_state

    X0_plus, _ = consistent_projection(system(2), initial_state(2))
    assert abs(traj[0, col] - X0_plus[2, 1]) < 1e-12
    assert report["simulation"]["samples"] == 10


def test_simulate_instance_three_is_bounded_and_persistent(tmp_path, capsys):
    out = tmp_path / "run"
    cli.main(["simulate", write(tmp_path, builtin_dict(3)), "--out", str(out)])
    _, disp = read_csv(out / "dispersion.csv")
    d = disp[:, 1]
    assert np.all(np.isfinite(d))
    assert d.min() >= 1e-2 * d[0]


def test_simulate_zero_dispersion(tmp_path, capsys):
    data = builtin_dict(1)
    data["X0"] = [[1.5] * 5, [-0.5] * 5, [2.0] * 5]
    out = tmp_path / "run"
    cli.main(["simulate", write(tmp_path, data), "--out", str(out)])
    _, disp = read_csv(out / "dispersion.csv")
    assert np.all(disp[:, 1] <= 1e-12)


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = cli.main(["simulate", write(tmp_path, builtin_dict(1)), "--out", str(blocker / "sub")])
    assert code == cli.EXIT_INPUT


@pytest.mark.parametrize("k,verdict", [(1, "consensus"), (2, "swarm_unstable"), (3, "swarm_stable")])
def test_paper_command(k, verdict, tmp_path, capsys):
    out = tmp_path / f"p{k}"
    assert cli.main(["paper", str(k), "--out", str(out), "--samples", "100"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["verdict"] == verdict
    assert f"verdict        {verdict}" in capsys.readouterr().out


def test_tolerance_flags_reach_the_report(tmp_path, capsys):
    cli.main(["analyze", write(tmp_path, builtin_dict(1)), "--tol-rank", "1e-9", "--tol-eig", "1e-5", "--format", "json"])
    report = json.loads(capsys.readouterr().out)
    assert report["scenario"]["tolerances"] == {"rank": 1e-9, "cluster": 1e-5}


def test_selftest_passes(capsys):
    assert cli.main(["selftest", "--seed", "1", "--scale", "0.1"]) == 0
    assert "selftest passed" in capsys.readouterr().out


def test_selftest_is_deterministic(capsys):
    cli.main(["selftest", "--seed", "7", "--scale", "0.1"])
    first = capsys.readouterr().out
    cli.main(["selftest", "--seed", "7", "--scale", "0.1"])
    assert capsys.readouterr().out == first


def test_selftest_names_failing_suite(tmp_path, capsys):
    data = builtin_dict(1)
    data["W"] = builtin_dict(2)["W"]  # corrupted: wrong graph for the stated verdict
    data["F"] = builtin_dict(2)["F"]
    code = cli.main(["selftest", "--scale", "0.05", "--instance", write(tmp_path, data)])
    captured = capsys.readouterr()
    assert code != 0
    assert "paper-instances" in captured.err
