import json

import pytest

from cli_cases import cases, write_configs
from sidex.cli import EXIT_BUDGET, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main, validate_obj


@pytest.fixture(scope="module")
def paths(tmp_path_factory):
    return write_configs(tmp_path_factory.mktemp("cfg"))


def run(argv, tmp_path, name="out"):
    out = tmp_path / name
    rc = main([*argv, "--out", str(out)])
    return rc, (out.read_text() if out.exists() else None)


@pytest.mark.parametrize("name", ["sccsi", "wz", "be-fig2", "simulate-sccsi", "gauss-fig5"])
def test_rerun_is_byte_identical(name, paths, tmp_path):
    argv = cases(paths)[name]
    rc1, a = run(argv, tmp_path, "a")
    rc2, b = run(argv, tmp_path, "b")
    assert rc1 == rc2 == EXIT_OK
    assert a == b


def test_csv_header_and_units(paths, tmp_path):
    rc, text = run(cases(paths)["be-fig2"], tmp_path)
    lines = text.splitlines()
    assert lines[0].startswith("# sidex ") and "unit=bits" in lines[0]
    assert lines[1] == "delta,g1_bits,g2_bits"
    rc, nats = run([*cases(paths)["be-fig2"], "--unit", "nats"], tmp_path, "n")
    assert nats.splitlines()[1] == "delta,g1_nats,g2_nats"
    g1_bits = float(lines[7].split(",")[1])
    g1_nats = float(nats.splitlines()[7].split(",")[1])
    assert g1_nats == pytest.approx(g1_bits * 0.6931471805599453)


def test_sccsi_json_contains_bounds(paths, tmp_path):
    rc, text = run(cases(paths)["sccsi"], tmp_path)
    obj = json.loads(text)
    assert {"eta_lower", "eta_upper", "eta_sp"} <= set(obj)
    assert obj["_header"]["unit"] == "bits"


def test_seed_changes_simulation(paths, tmp_path):
    argv = cases(paths)["simulate-wz"]
    _, a = run(argv, tmp_path, "a")
    _, b = run([*argv, "--seed", "6"], tmp_path, "b")
    assert a != b


def test_usage_errors(paths, tmp_path, capsys):
    assert main(["sccsi"]) == EXIT_USAGE
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["exit"] == EXIT_USAGE
    assert main(["be-fig2", "--grid", "bogus=1"]) == EXIT_USAGE
    assert main(["be-fig2", "--grid", "dgrid"]) == EXIT_USAGE
    assert main(["simulate", "sccsi", "--config", paths["sim_sccsi"], "--trials", "0"]) == EXIT_USAGE
    assert main(["nonsense"]) == EXIT_USAGE


def test_budget_exit(paths, tmp_path):
    rc, _ = run(["simulate", "sccsi", "--config", paths["sim_sccsi"], "--n", "18", "--trials", "1"], tmp_path)
    assert rc == EXIT_BUDGET


def test_validate_reports_bad_sum(tmp_path, capsys):
    f = tmp_path / "bad.json"
    f.write_text(json.dumps({"p_xy": [[0.5, 0.2], [0.2, 0.2]], "r1": 0.5, "r2": 0.2}))
    rc, text = run(["validate", str(f)], tmp_path)
    assert rc == EXIT_VALIDATION
    assert json.loads(text)["ok"] is False
    err = json.loads(capsys.readouterr().err.strip())
    assert "sum" in err["message"]


def test_validate_messages():
    assert validate_obj({"p_xy": [[0.5, 0.0], [0.25, 0.25]]}, ("eta_upper",)) == [
        "eta_upper hypothesis violated: P_XY must be strictly positive"]
    assert validate_obj({"p_xy": [[0.5, 0.0], [0.25, 0.25]]}) == []
    msgs = validate_obj({"sigma": [[1.0, 0.9], [0.9, 0.5]]})
    assert msgs == ["sigma: covariance is not positive semidefinite"]
    assert validate_obj({"channel": [[0.5, 0.6], [1, 0]]}) == ["channel: rows are not probability vectors"]
    assert validate_obj({"zeta": 1.0}) == ["zeta: correlation must lie strictly inside (-1, 1)"]
    gauss = {"zeta": 0.7, "delta": 0.4, "rate": 0.1}
    assert any("rate-distortion" in m for m in validate_obj(gauss, ("theta_gauss_upper",)))
    assert validate_obj({**gauss, "rate": 0.4}, ("theta_gauss_upper",)) == []


def test_validate_ok_exit(paths, tmp_path):
    rc, text = run(["validate", paths["sccsi"]], tmp_path)
    assert rc == EXIT_OK and json.loads(text)["ok"]
