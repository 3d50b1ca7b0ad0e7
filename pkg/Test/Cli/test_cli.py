import csv
import json

import numpy as np
import pytest
from pytest import approx

import lindket as lk
from lindket.cli import main
from lindket.config import BenchConfig, CompareConfig, RunConfig


def _two_level(**system):
    pars = {}
    pars["System"] = {"Name": "TwoLevel", "Energy": 1.0, "Rabi": 1.0, "Gamma": 0.5}
    pars["System"].update(system)
    pars["Integrator"] = {"Method": "taylor_series", "TimeStep": 0.1, "Order": 10}
    pars["EndTime"] = 1.0
    pars["InitialState"] = {"Name": "Excited"}
    return pars


def _heisenberg(length, method="taylor_series"):
    pars = {}
    pars["System"] = {"Name": "Heisenberg", "Length": length, "Coupling": 1.0, "Gamma": 1.0}
    pars["Integrator"] = {"Method": method, "TimeStep": 0.1, "Order": 10}
    pars["EndTime"] = 0.5
    pars["InitialState"] = {"Name": "Neel"}
    return pars


def _write(tmp_path, pars, name="input.json"):
    path = tmp_path / name
    path.write_text(json.dumps(pars, indent=2))
    return str(path)


def _run(tmp_path, command, pars, *extra):
    out = str(tmp_path / "out.csv")
    code = main([command, "--config", _write(tmp_path, pars), "--out", out] + list(extra))
    return code, out


def _rows(path):
    with open(path) as f:
        return list(csv.reader(f))


def _manifest(path):
    with open(path + ".manifest.json") as f:
        return json.load(f)


def test_evolve_writes_csv(tmp_path):
    code, out = _run(tmp_path, "evolve", _two_level())
    assert code == 0
    rows = _rows(out)
    assert rows[0] == [
        "t",
        "rho_0_0_re",
        "rho_0_0_im",
        "rho_1_1_re",
        "rho_1_1_im",
        "trace",
        "error_bound",
    ]
    assert len(rows) == 1 + 11
    for row in rows[1:]:
        assert abs(float(row[1]) + float(row[3]) - 1.0) <= 1e-9
        assert float(row[5]) == approx(1.0, abs=1e-9)
    # the Taylor method reports its truncation bound after the first step
    assert rows[1][6] == ""
    assert float(rows[-1][6]) > 0


def test_evolve_elements(tmp_path):
    pars = _two_level()
    pars["Elements"] = [[0, 1]]
    code, out = _run(tmp_path, "evolve", pars)
    assert code == 0
    assert _rows(out)[0] == ["t", "rho_0_1_re", "rho_0_1_im", "trace", "error_bound"]


def test_evolve_zero_end_time(tmp_path):
    pars = _two_level()
    pars["EndTime"] = 0.0
    code, out = _run(tmp_path, "evolve", pars)
    assert code == 0
    rows = _rows(out)
    assert len(rows) == 2
    assert [float(x) for x in rows[1][:5]] == [0.0, 0.0, 0.0, 1.0, 0.0]


def test_reruns_are_identical(tmp_path):
    pars = _heisenberg(3, "vectorization_taylor")
    code, out = _run(tmp_path, "evolve", pars)
    assert code == 0
    first = open(out).read(), open(out + ".manifest.json").read()
    code, out = _run(tmp_path, "evolve", pars)
    assert code == 0
    assert (open(out).read(), open(out + ".manifest.json").read()) == first


def test_manifest(tmp_path):
    code, out = _run(tmp_path, "evolve", _two_level(), "--seed", "17")
    assert code == 0
    manifest = _manifest(out)
    assert set(manifest) == {"Command", "Config", "ConfigHash", "Seed", "Version", "Rows"}
    assert manifest["Command"] == "evolve"
    assert manifest["Seed"] == 17
    assert manifest["Config"]["Seed"] == 17
    assert manifest["Rows"] == 11
    assert manifest["Version"] == lk.__version__
    assert manifest["ConfigHash"] == lk.output.config_hash(manifest["Config"])


def test_unknown_key(tmp_path, caplog):
    pars = _two_level(Colour="red")
    code, _ = _run(tmp_path, "evolve", pars)
    assert code == 2
    assert "System.Colour" in caplog.text


def test_json_syntax_error(tmp_path, caplog):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "EndTime": 1.0,\n  "System": {\n}')
    assert main(["evolve", "--config", str(path)]) == 2
    assert "line" in caplog.text


def test_missing_config_file(tmp_path):
    assert main(["evolve", "--config", str(tmp_path / "nowhere.json")]) == 2


def test_incompatible_initial_state(tmp_path):
    pars = _two_level()
    pars["InitialState"] = {"Name": "Neel"}
    code, _ = _run(tmp_path, "evolve", pars)
    assert code == 2


def test_memory_budget_refusal(tmp_path, caplog):
    code, out = _run(
        tmp_path, "evolve", _heisenberg(3, "vectorization_full"), "--budget-bytes", "4096"
    )
    assert code == 3
    assert "OutOfMemoryError" in caplog.text
    # the direct method fits the same budget
    code, out = _run(tmp_path, "evolve", _heisenberg(3), "--budget-bytes", "4096")
    assert code == 0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numerical_failure(tmp_path):
    pars = _two_level(Hbar=1e-30)
    pars["Integrator"] = {
        "Method": "vectorization_full",
        "TimeStep": 0.1,
        "Expm": {"Method": "taylor_ss", "Scaling": 0},
    }
    code, _ = _run(tmp_path, "evolve", pars)
    assert code == 4


def test_step_size_error(tmp_path):
    pars = _two_level(Gamma=10.0, Rabi=0.0)
    pars["Trajectories"] = {"TimeStep": 0.1, "NTrajectories": 4}
    code, _ = _run(tmp_path, "traj", pars)
    assert code == 5


def test_bench_records_refusals(tmp_path):
    pars = {"Sites": [1, 3], "Repeats": 3, "MemoryBudgetBytes": 4096}
    code, out = _run(tmp_path, "bench", pars)
    assert code == 0
    rows = _rows(out)
    assert rows[0] == list(lk.experiments.BENCH_COLUMNS)
    assert len(rows) == 1 + 4 * 3
    for method, sites, _, seconds, _, _, refusal in rows[1:]:
        refused = method.startswith("vectorization") and sites == "3"
        assert (refusal != "") == refused, (method, sites)
        assert (seconds == "") == refused, (method, sites)
    slopes = _manifest(out)["Summary"]["Slopes"]
    assert set(slopes) == set(BenchConfig().methods)


def test_bench_repeat_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("LINDKET_BENCH_MAX_REPEATS", "1")
    pars = {"Methods": ["taylor_series"], "Sites": [2, 2], "Repeats": 50}
    code, out = _run(tmp_path, "bench", pars)
    assert code == 0
    # the cap never goes below three repeats
    assert _manifest(out)["Summary"]["Repeats"] == 3


def _compare(a, b, reference=None, grid=None):
    pars = {"A": a, "B": b}
    pars["Reference"] = reference or {"Method": "taylor_series", "TimeStep": 0.1, "Order": 10}
    if grid is not None:
        pars["Grid"] = grid
    return pars


def test_compare_with_itself(tmp_path):
    code, out = _run(tmp_path, "compare", _compare(_two_level(), _two_level()))
    assert code == 0
    rows = _rows(out)
    assert rows[0] == ["t", "method_a_dev", "method_b_dev"]
    assert len(rows) == 12
    for row in rows[1:]:
        assert float(row[1]) == 0.0
        assert float(row[2]) == 0.0


def test_compare_different_steps(tmp_path):
    b = _two_level()
    b["Integrator"] = {"Method": "rk4", "TimeStep": 0.05}
    b["SampleEvery"] = 2
    reference = {"Method": "vectorization_full", "TimeStep": 0.01}
    code, out = _run(tmp_path, "compare", _compare(_two_level(), b, reference))
    assert code == 0
    rows = _rows(out)
    # both runs sample the same times
    assert len(rows) == 12
    for row in rows[1:]:
        assert float(row[1]) < 1e-9
        assert float(row[2]) < 1e-5


def test_compare_mismatched_systems(tmp_path, caplog):
    code, _ = _run(tmp_path, "compare", _compare(_two_level(), _two_level(Gamma=0.1)))
    assert code == 2
    assert "B.System" in caplog.text


def test_compare_grid(tmp_path):
    b = _two_level()
    b["Integrator"] = {"Method": "rk4", "TimeStep": 0.1}
    pars = _compare(_two_level(), b, grid=[[4, 0.2], [8, 0.5]])
    code, out = _run(tmp_path, "compare", pars)
    assert code == 0
    grid = _rows(str(tmp_path / "out_grid.csv"))
    assert grid[0] == ["order", "sampling_step", "cost_ratio", "t", "taylor_dev", "rk4_dev"]
    # 6 samples at step 0.2, 3 at step 0.5
    assert len(grid) == 1 + 6 + 3
    assert float(grid[1][2]) == approx(4 / 8)
    assert float(grid[-1][2]) == approx(8 / 20)
    assert _manifest(out)["Summary"]["GridRows"] == 9


def test_compare_grid_needs_multiple_of_rk4_step(tmp_path):
    b = _two_level()
    b["Integrator"] = {"Method": "rk4", "TimeStep": 0.3}
    code, _ = _run(tmp_path, "compare", _compare(_two_level(), b, grid=[[4, 0.5]]))
    assert code == 2


def test_traj_single_trajectory(tmp_path):
    pars = _two_level(Rabi=0.0, Gamma=1.0)
    pars["EndTime"] = 2.0
    pars["Trajectories"] = {"TimeStep": 0.05, "NTrajectories": 1}
    code, out = _run(tmp_path, "traj", pars, "--seed", "3")
    assert code == 0
    rows = _rows(out)
    assert rows[0] == ["t", "element", "mcwf_value", "reference_value", "stderr_estimate"]
    assert len(rows) == 1 + 41 * 2
    for row in rows[1:]:
        value = float(row[2])
        assert min(abs(value), abs(value - 1.0)) < 1e-12
        assert float(row[4]) == 0.0
    manifest = _manifest(out)
    assert manifest["Seed"] == 3
    assert manifest["Summary"]["Jumps"]["Mean"] <= 1


def test_traj_workers(tmp_path):
    pars = _heisenberg(2)
    pars["Trajectories"] = {"TimeStep": 0.05, "NTrajectories": 8}
    out1 = str(tmp_path / "serial.csv")
    out4 = str(tmp_path / "threaded.csv")
    config = _write(tmp_path, pars)
    assert main(["traj", "--config", config, "--out", out1]) == 0
    assert main(["traj", "--config", config, "--out", out4, "--workers", "4"]) == 0
    assert open(out1).read() == open(out4).read()


def test_metts_checkpoints(tmp_path):
    pars = _heisenberg(2)
    pars["InitialState"] = {"Name": "Thermal", "Beta": 1.0}
    pars["Metts"] = {"Beta": 1.0, "NSamples": 5, "BurnIn": 2}
    code, out = _run(tmp_path, "metts", pars)
    assert code == 0
    rows = _rows(out)
    assert rows[0] == ["samples", "element", "metts_value", "reference_value", "stderr_estimate"]
    assert [int(r[0]) for r in rows[1::4]] == [1, 2, 4, 5]
    assert len(rows) == 1 + 4 * 4


def test_run_config_round_trip():
    pars = _heisenberg(3)
    pars["Elements"] = [[0, 0], [1, 2]]
    pars["Seed"] = 9
    pars["Trajectories"] = {
        "TimeStep": 0.02,
        "NTrajectories": 10,
        "TaylorOrder": 4,
        "JumpScheme": "first_order",
    }
    pars["Metts"] = {"Beta": 0.5, "NSamples": 7, "BurnIn": 1, "Basis": "z", "Chains": 3}
    cfg = RunConfig.from_dict(pars)
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.trajectory_config().master_seed == 9
    assert cfg.trajectory_config().jump_scheme == "first_order"
    assert cfg.metts_config().basis == "z"
    assert cfg.metts_config().n_chains == 3
    assert cfg.metts_config().master_seed == 9
    assert cfg.pattern == ["up", "down", "up"]

    overridden = cfg.with_overrides(seed=4, budget=100, output="x.csv")
    assert overridden.trajectories.master_seed == 4
    assert overridden.memory_budget_bytes == 100
    assert overridden.output == "x.csv"


def test_compare_config_round_trip():
    pars = _compare(_two_level(), _two_level(), grid=[[4, 0.2]])
    cfg = CompareConfig.from_dict(pars)
    assert CompareConfig.from_dict(cfg.to_dict()) == cfg


errors = {}
errors["Integrator"] = ({"TimeStep": -0.1}, "Integrator")
errors["Integrator.Expm"] = ({"Expm": {"Method": "magic"}}, "Integrator.Expm")
errors["Integrator.Order"] = ({"Order": 2.5}, "Integrator.Order")
errors["Integrator.Method"] = ({"Method": "euler"}, "Integrator.Method")


def test_config_error_fields():
    for name, (change, field) in errors.items():
        pars = _two_level()
        pars["Integrator"].update(change)
        with pytest.raises(lk.ConfigError) as info:
            RunConfig.from_dict(pars)
        assert info.value.field == field, name

    pars = _two_level()
    del pars["EndTime"]
    with pytest.raises(lk.ConfigError) as info:
        RunConfig.from_dict(pars)
    assert info.value.field == "EndTime"

    pars = _heisenberg(3)
    pars["InitialState"] = {"Name": "Pattern", "Pattern": ["up", "down"]}
    with pytest.raises(lk.ConfigError):
        RunConfig.from_dict(pars)

    pars = _two_level()
    pars["Trajectories"] = {"JumpScheme": "exact"}
    with pytest.raises(lk.ConfigError) as info:
        RunConfig.from_dict(pars)
    assert info.value.field == "Trajectories"

    pars = _two_level()
    pars["Metts"] = {"Chains": 0}
    with pytest.raises(lk.ConfigError) as info:
        RunConfig.from_dict(pars)
    assert info.value.field == "Metts"


def test_load_document_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "a": 1,\n  "b": \n}')
    with pytest.raises(lk.ConfigError) as info:
        lk.config.load_document(str(path))
    assert info.value.line == 4


def test_exit_codes():
    assert lk.cli.exit_code(lk.ConfigError("x")) == 2
    assert lk.cli.exit_code(lk.MemoryBudgetError("x", 2, 1)) == 3
    assert lk.cli.exit_code(lk.NumericalFailure("x")) == 4
    assert lk.cli.exit_code(lk.IntegrationError("x", 3)) == 4
    assert lk.cli.exit_code(lk.StepSizeError("x")) == 5
    assert lk.cli.exit_code(FileNotFoundError("x")) == 2


def test_unwritable_output(tmp_path, caplog):
    out = str(tmp_path / "out.csv")
    (tmp_path / "out.csv").mkdir()
    code = main(["evolve", "--config", _write(tmp_path, _two_level()), "--out", out])
    assert code == 2
    assert caplog.text


def test_csv_writer(tmp_path):
    path = tmp_path / "sub" / "a.csv"
    with lk.output.CsvOutputWriter(path, ["a", "b"]) as out:
        out.write_row([0.1, None])
        with pytest.raises(ValueError):
            out.write_row([1.0])
    assert out.rows == 1
    assert open(str(path)).read() == "a,b\n0.10000000000000001,\n"


def test_config_hash_ignores_key_order():
    assert lk.output.config_hash({"a": 1, "b": [1, 2]}) == lk.output.config_hash(
        {"b": [1, 2], "a": 1}
    )
    assert lk.output.config_hash({"a": 1}) != lk.output.config_hash({"a": 2})


def test_statistics():
    stats = lk.stats.statistics([1.0, 2.0, 3.0, 4.0])
    assert stats.mean == approx(2.5)
    assert stats.variance == approx(np.var([1, 2, 3, 4], ddof=1))
    assert stats.error_of_mean == approx(np.sqrt(stats.variance / 4))
    single = lk.stats.statistics([5.0])
    assert single.variance == 0.0
    assert lk.stats.stats_dict(single) == {"Mean": 5.0, "Variance": 0.0, "Sigma": 0.0}
