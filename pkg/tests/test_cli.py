import csv
import io
import json
import math
import subprocess
import sys

import pytest

from spherestab.cli import config_hash, load_defaults, run
from spherestab.harmonics import SpectralFunction


def call(argv, capsys):
    code = run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def records(text):
    return [json.loads(line) for line in text.splitlines()]


def test_eigen_table(capsys):
    code, out, _ = call(["eigen-table", "--n", "2", "--lmax", "6", "--check"], capsys)
    assert code == 0
    rows = records(out)
    assert [r["l"] for r in rows] == list(range(1, 7))
    for r in rows:
        assert r["rel_err"] < 1e-7
        assert set(r) >= {"lambda", "multiplier_H", "pv_oracle", "config_hash"}
    assert rows[0]["multiplier_H"] == pytest.approx(2 * math.pi)


@pytest.mark.parametrize("n", ["3", "4"])
def test_eigen_table_other_dimensions(n, capsys):
    assert call(["eigen-table", "--n", n, "--check"], capsys)[0] == 0


def test_ls_local_check(capsys):
    code, out, _ = call(["ls-local", "--n", "2", "--L", "16", "--check"], capsys)
    assert code == 0
    summary = records(out)[-1]["summary"]
    assert summary["limit"] == pytest.approx(2 * math.pi, rel=1e-2)


def test_mo_scaling_check(capsys):
    code, out, _ = call(["mo-scaling", "--n", "2", "--lambda", "1,2,4,8,16", "--check"], capsys)
    assert code == 0
    summary = records(out)[-1]["summary"]
    assert summary["exponent"] == pytest.approx(-2.0, abs=1e-3)


@pytest.mark.parametrize("command", ["mo-local", "ls-gap", "homogeneity", "invariance-check", "distance"])
def test_commands_pass_their_checks(command, capsys):
    code, out, err = call([command, "--check"], capsys)
    assert code == 0, err
    assert all("config_hash" in r for r in records(out))


def test_d0_counterexample_fails_its_check(capsys):
    # d_0(1 + eps Y_1, M) is a non-attained zero infimum, so the check is red
    code, out, err = call(["ls-d0-counterexample", "--check"], capsys)
    assert code == 3
    assert "check failed" in err
    assert records(out)


def test_configuration_errors(capsys):
    assert call(["ls-local", "--n", "0"], capsys)[0] == 2
    assert call(["ls-gap", "--n", "3"], capsys)[0] == 2
    assert call(["ls-local", "--L", "1"], capsys)[0] == 2
    assert call(["ls-local", "--eps", "0.1,x"], capsys)[0] == 2
    assert call(["distance", "--starts", "0,0,2"], capsys)[0] == 2


def test_usage_errors(capsys):
    code, _, err = call(["ls-local", "--bogus"], capsys)
    assert code == 2 and "usage" in err
    assert call(["no-such-command"], capsys)[0] == 2
    assert call([], capsys)[0] == 2


def test_deterministic_output(capsys):
    argv = ["invariance-check", "--seed", "11"]
    _, a, _ = call(argv, capsys)
    _, b, _ = call(argv, capsys)
    assert a == b
    _, c, _ = call(["invariance-check", "--seed", "12"], capsys)
    assert records(a)[0]["config_hash"] != records(c)[0]["config_hash"]


def test_config_hash_is_stable():
    cfg = {"n": 2, "L": 4, "eps": [0.1]}
    assert config_hash(cfg) == config_hash(dict(reversed(list(cfg.items()))))
    assert len(config_hash(cfg)) == 16


def test_csv_output(tmp_path, capsys):
    path = tmp_path / "out.csv"
    code, out, _ = call(["ls-local", "--L", "8", "--eps", "0.2,0.1,0.05", "--output", "csv", "--output-path", str(path)], capsys)
    assert code == 0 and out == ""
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert list(rows[0]) == ["experiment", "n", "L", "param", "deficit", "d2", "ratio", "config_hash"]
    assert [float(r["param"]) for r in rows] == [0.2, 0.1, 0.05]


def test_distance_from_input_file(tmp_path, capsys):
    u = 1 + 0.01 * SpectralFunction.harmonic(2, 4, 2, 0)
    path = tmp_path / "u.json"
    path.write_text(u.to_json())
    code, out, _ = call(["distance", "--input", str(path), "--check"], capsys)
    assert code == 0
    (rec,) = records(out)
    assert rec["d"] == pytest.approx(0.01, rel=1e-6)


def test_defaults_file():
    d = load_defaults()
    assert d["version"] == 1
    assert d["common"]["n"] == 2
    assert d["ls-local"]["eps"] == [0.2, 0.1, 0.05, 0.025, 0.0125]


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "spherestab.cli", "eigen-table", "--lmax", "2"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert len(proc.stdout.splitlines()) == 2
