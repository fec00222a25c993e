import json
import subprocess
import sys

import pytest

from conelab import cli
from conelab.varmodel import bundled_path


def run(*argv):
    return cli.run_command(list(argv))


def strip(report):
    return {k: v for k, v in report.items() if k != "timings_ms"}


def test_validate_quadric_counts_fibres():
    status, report = run("validate", "--instance", "quadric-net")
    assert status == 0 and report["verdicts"]["reducible_fibres"] == 28
    assert set(report) == {"command", "instance", "verdicts", "guards", "completeness", "timings_ms"}


def test_make_nef_example():
    status, report = run("make-nef", "--instance", "i2-chain", "--divisor", "1,7/2")
    v = report["verdicts"]
    assert status == 0 and v["path_length"] == 3 and v["contains_divisor"]
    assert sorted(map(tuple, v["chamber"]["frame"])) == [("-3", "1"), ("4", "-1")]


def test_chambers_example():
    status, report = run("chambers", "--instance", "i2-chain", "--sigma", "1,0;1,5")
    assert status == 0 and report["verdicts"]["count"] == 5


def test_negative_values_parse():
    status, report = run("cones", "--instance", "toy-vertical", "--divisor", "-1,1")
    assert status == 0


SMALL = [
    ("validate",),
    ("cones",),
    ("make-nef", "--divisor", "1,1/2"),
    ("chambers",),
    ("orbits",),
    ("fundamental", "--samples", "200"),
    ("classify-rays",),
    ("lift", "--divisor", "1,1"),
]


@pytest.mark.parametrize("name", ["toy-vertical", "i2-chain"])
@pytest.mark.parametrize("cmd", SMALL, ids=lambda c: c[0])
def test_every_command_runs_and_is_deterministic(name, cmd):
    argv = [cmd[0], "--instance", name, *cmd[1:]]
    s1, r1 = cli.run_command(argv)
    s2, r2 = cli.run_command(argv)
    assert s1 == 0 and s1 == s2
    assert json.dumps(strip(r1), sort_keys=True) == json.dumps(strip(r2), sort_keys=True)


@pytest.mark.parametrize(
    "cmd",
    [
        ("validate",),
        ("cones",),
        ("classify-rays",),
        ("lift", "--divisor", "1,0,0,0,0,0,0,0"),
        ("make-nef", "--divisor", "1,0,0,0,0,0,0,0,0"),
        ("chambers",),
    ],
    ids=lambda c: c[0],
)
def test_quadric_commands(cmd):
    status, report = cli.run_command([cmd[0], "--instance", "quadric-net", *cmd[1:]])
    assert status == 0, report["verdicts"]


def test_quadric_group_commands_report_their_budgets():
    status, report = run("orbits", "--instance", "quadric-net", "--budget", "5")
    assert status == 0 and not report["verdicts"]["complete"]
    assert report["completeness"]


def test_main_writes_out_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = cli.main(["chambers", "--instance", "i2-chain", "--out", str(out)])
    assert code == 0
    assert json.loads(out.read_text(encoding="utf-8"))["verdicts"]["count"] == 5
    assert capsys.readouterr().out == ""


def test_guard_trip_exits_3(monkeypatch):
    monkeypatch.setenv("CONELAB_GUARD_FLOPS", "2")
    status, report = run("make-nef", "--instance", "i2-chain", "--divisor", "1,99/2")
    assert status == 3 and report["guards"]["tripped"]


def test_invalid_instance_exits_1(tmp_path):
    doc = json.loads(bundled_path("toy-vertical").read_text(encoding="utf-8"))
    doc["vertical_divisors"][0] = ["1", "1"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    status, report = run("validate", "--instance", str(path))
    assert status == 1
    assert any("D_i·F_i < 0" in v for v in report["verdicts"]["violations"])


def test_usage_errors_exit_2(tmp_path):
    assert run("validate", "--instance", str(tmp_path / "missing.json"))[0] == 2
    assert run("frobnicate", "--instance", "i2-chain")[0] == 2
    assert run("make-nef", "--instance", "i2-chain", "--divisor", "1,x")[0] == 2


def test_console_script():
    proc = subprocess.run(
        [sys.executable, "-m", "conelab.cli", "validate", "--instance", "toy-vertical"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["verdicts"]["valid"]
