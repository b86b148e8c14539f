import csv
import io
import math

import pytest

from secharq import cli
from secharq.closedform import ConvergenceError

TWO_STATE_CFG = """\
# two-state discrete model
d_states = 4:0.5, 5:0.5
e_states = 2:0.5, 3.5:0.5
L = 2
constraints = 0.25:0.125
"""


def rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


@pytest.fixture
def two_state(tmp_path):
    p = tmp_path / "two_state.ini"
    p.write_text(TWO_STATE_CFG)
    return str(p)


def test_header_lines(two_state):
    code, text, _ = cli.run(["discrete", "--config", two_state, "--seed", "5"])
    assert code == 0
    head = text.splitlines()[:4]
    assert head[0] == "# schema: secharq-discrete/v1"
    assert head[1].startswith("# tool: secharq ")
    assert head[2] == "# seed: 5"
    assert head[3].startswith("# config_sha256: ") and len(head[3].split()[-1]) == 64


def test_discrete_two_state_peak(two_state):
    code, text, _ = cli.run(["discrete", "--config", two_state])
    assert code == 0
    table = rows(text)
    assert list(table[0]) == ["R", "eta_asr", "r1_asr", "r2_asr", "eta_tang", "r1_tang", "r2_tang",
                              "eta_tomasin", "r1_tomasin", "r2_tomasin"]
    peak = max(table, key=lambda r: float(r["eta_asr"]) if r["eta_asr"] != "nan" else -1)
    assert float(peak["R"]) == 1.5 and float(peak["eta_asr"]) == 1.0
    assert (float(peak["r1_asr"]), float(peak["r2_asr"])) == (3.5, 2.0)


def test_discrete_tang_only(two_state):
    code, text, _ = cli.run(["discrete", "--config", two_state, "--protocol", "tang"])
    table = rows(text)
    assert list(table[0]) == ["R", "eta_tang", "r1_tang", "r2_tang"]
    assert {r["r2_tang"] for r in table} <= {"0", "nan"}


def test_discrete_empty_states(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("d_states =\ne_states = 1:1\nL = 2\n")
    assert cli.main(["discrete", "--config", str(p)]) == 2
    assert "empty state list" in capsys.readouterr().err


@pytest.mark.parametrize("extra", [
    ["--set", "bogus=1"],
    ["--set", "L=0"],
    ["--set", "constraints=0.2"],
    ["--set", "constraints=0:0.1"],
    ["--protocol", "foo"],
    ["--set", "d_states=4:0.6, 5:0.6"],
    ["--set", "noequals"],
    ["--seed", "-1"],
])
def test_config_errors(two_state, extra):
    code, msg, _ = cli.run(["discrete", "--config", two_state] + extra)
    assert code == 2 and msg.startswith("config error")


def test_missing_config_file(tmp_path):
    assert cli.run(["closedform", "--config", str(tmp_path / "nope.ini")])[0] == 2


def test_closedform_verdicts():
    code, text, _ = cli.run(["closedform", "--set", "gamma_d_db=15", "--set", "gamma_e_db=5",
                             "--set", "constraints=0.75:1e-2, 0.01:1e-6"])
    assert code == 0
    a, b = rows(text)
    assert a["verdict"] == "compatible" and float(a["r_max"]) == pytest.approx(1.527, abs=1e-3)
    assert b["verdict"] == "infeasible" and b["r_max"] == "nan"


def test_closedform_boundary():
    code, text, _ = cli.run(["closedform", "--set", "gamma_d=2", "--set", "gamma_e=2",
                             "--set", "constraints=0.25:0.75"])
    (row,) = rows(text)
    assert row["verdict"] == "compatible" and abs(float(row["r_max"])) < 1e-12


def test_db_and_linear_exclusive():
    code, _, _ = cli.run(["closedform", "--set", "gamma_d=2", "--set", "gamma_d_db=3",
                          "--set", "gamma_e=1", "--set", "constraints=1:0.5"])
    assert code == 2


def test_rayleigh_small(tmp_path):
    out = tmp_path / "r.csv"
    args = ["rayleigh", "--set", "gamma_d_db=15", "--set", "gamma_e_db=5", "--set", "L=4",
            "--set", "constraints=1:1e-2", "--set", "r_step=1", "--set", "r_max=6", "--set", "r1_step=0.5",
            "--trials", "20000", "--out", str(out)]
    assert cli.main(args) == 0
    table = rows(out.read_text())
    assert list(table[0])[:7] == ["protocol", "xi_c", "xi_s", "R", "r1", "r2", "feasible"]
    assert all(float(r["se_eta"]) > 0 for r in table if float(r["R"]) > 0)
    first = out.read_bytes()
    assert cli.main(args) == 0
    assert out.read_bytes() == first


def test_tradeoff_headers():
    code, text, _ = cli.run(["tradeoff", "--set", "gamma_d_db=15", "--set", "gamma_e_db=5", "--set", "L=1,2",
                             "--set", "tradeoff_r1_step=2", "--set", "tradeoff_r2_step=2", "--trials", "5000"])
    assert code == 0
    table = rows(text)
    assert list(table[0])[:2] == ["protocol", "L"]
    assert {(r["protocol"], r["L"]) for r in table} == {("asr", "1"), ("asr", "2"), ("tang", "1"), ("tang", "2")}


def test_optimize_discrete(two_state):
    code, text, _ = cli.run(["optimize", "--config", two_state])
    by = {r["protocol"]: r for r in rows(text)}
    assert float(by["asr"]["eta"]) == 1.0 and by["asr"]["feasible"] == "true"
    assert float(by["tang"]["eta"]) == 0.75


def test_convergence_exit_code(monkeypatch):
    def boom(values):
        raise ConvergenceError("no root")
    monkeypatch.setitem(cli.HANDLERS, "closedform", boom)
    assert cli.run(["closedform"])[0] == 3


def test_fmt():
    assert cli.fmt(True) == "true" and cli.fmt(3) == "3"
    assert cli.fmt(math.nan) == "nan" and cli.fmt(math.inf) == "inf"
    assert cli.fmt(0.1 + 0.2) == "0.3"
