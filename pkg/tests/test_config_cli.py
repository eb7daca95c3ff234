import textwrap

import numpy as np
import pytest

import yaml

from mmpp_control import evaluate_policy
from mmpp_control.config import load_config, parse_config
from mmpp_control.cli import main
from mmpp_control.errors import ConfigError
from mmpp_control.solver import read_policy_csv

EXAMPLE_3_2 = """
phase:
  Q: [[-1, 1, 0], [0, -1, 1], [1, 0, -1]]
  lambdas: [0.5, 1.0, 1.25]
cost:
  service: {family: exponential}
  holding: {family: linear}
  u_max: 5
solver:
  truncation_N: 50
"""

NHPP = """
cost:
  service: {family: exponential}
  holding: {family: linear}
  u_max: 10
solver:
  truncation_N: 30
nhpp:
  rate: {family: piecewise_constant, breakpoints: [0, 1, 2], rates: [0.5, 3.0]}
  period_T: 2
  delta_t: 0.05
  partitions: 2
"""


def write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return str(path)


def read_summary(path):
    lines = path.read_text().splitlines()
    assert lines[0] == "key,value"
    return dict(line.split(",", 1) for line in lines[1:])


def test_parse_builds_scenario():
    sc = parse_config(yaml.safe_load(EXAMPLE_3_2)).scenario()
    assert sc.phase.L == 3 and sc.truncation_N == 50 and sc.cost.u_max == 5.0
    assert sc.boundary == "extrapolate"


@pytest.mark.parametrize(
    "text",
    [
        EXAMPLE_3_2 + "extra: 1\n",
        EXAMPLE_3_2.replace("[[-1, 1, 0]", "[[-1, 2, 0]"),
        EXAMPLE_3_2.replace("family: exponential", "family: cubic"),
        EXAMPLE_3_2.replace("u_max: 5", "u_max: -5"),
        "cost: [",
    ],
)
def test_bad_config_exits_1(tmp_path, capsys, text):
    assert main(["solve", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")]) == 1
    assert "ConfigError" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


def test_missing_phase_section(tmp_path):
    cfg = load_config(write(tmp_path, NHPP))
    with pytest.raises(ConfigError):
        cfg.scenario()


def test_numeric_failure_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, EXAMPLE_3_2 + "  max_iterations: 3\n")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert capsys.readouterr().err.startswith("NonConvergence:")


def test_unstable_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, EXAMPLE_3_2.replace("u_max: 5", "u_max: 0.9"))
    assert main(["heuristic", "--config", cfg, "--method", "arm", "--out", str(tmp_path / "o")]) == 2
    assert capsys.readouterr().err.startswith("Unstable:")


def test_solve_writes_outputs_and_round_trips(tmp_path):
    cfg = write(tmp_path, EXAMPLE_3_2)
    out = tmp_path / "o"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    summary = read_summary(out / "summary.csv")
    assert summary["criterion"] == "average"
    policy = read_policy_csv(out / "policy.csv")
    g = evaluate_policy(load_config(cfg).scenario(), policy)
    assert g == pytest.approx(float(summary["gain"]), abs=1e-8)
    assert (out / "value.csv").read_text().startswith("n,s,v\n")


def test_solve_discounted(tmp_path):
    cfg = write(tmp_path, EXAMPLE_3_2 + "  alpha: 0.05\n")
    out = tmp_path / "o"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    summary = read_summary(out / "summary.csv")
    assert summary["criterion"] == "discounted" and "gain" not in summary


def test_solve_is_deterministic(tmp_path):
    cfg = write(tmp_path, EXAMPLE_3_2)
    for d in ("a", "b"):
        assert main(["solve", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    for f in ("policy.csv", "value.csv", "summary.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_check_reports_phase_violation(tmp_path, capsys):
    cfg = write(tmp_path, EXAMPLE_3_2)
    assert main(["check", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    text = capsys.readouterr().out
    assert "stable: yes" in text
    assert "stochastically monotone: no" in text
    assert "violation n=4 " in text
    rows = (tmp_path / "o" / "monotone_s.csv").read_text().splitlines()
    assert rows[0] == "n,s,mu_low,mu_high" and any(r.startswith("4,") for r in rows[1:])


@pytest.mark.parametrize("method", ["arm", "prm", "fixed"])
def test_heuristic_subcommand(tmp_path, method):
    cfg = write(tmp_path, EXAMPLE_3_2)
    out = tmp_path / method
    assert main(["heuristic", "--config", cfg, "--method", method, "--out", str(out)]) == 0
    summary = read_summary(out / "summary.csv")
    assert summary["method"] == method and float(summary["gain"]) > 0
    assert read_policy_csv(out / "policy.csv").rates.shape == (51, 3)


def test_compare_subcommand(tmp_path):
    cfg = write(tmp_path, EXAMPLE_3_2, "ex32.yaml")
    out = tmp_path / "o"
    assert main(["compare", "--config", cfg, "--out", str(out), "--c", "1"]) == 0
    header, row = (out / "comparison.csv").read_text().splitlines()
    assert header == "case,c,optimal,arm,arm_pct,prm,prm_pct,fixed,fixed_pct"
    fields = row.split(",")
    assert fields[:2] == ["ex32", "1"]
    assert all(float(fields[i]) >= float(fields[2]) - 1e-6 for i in (3, 5, 7))


@pytest.mark.parametrize("action", ["solve", "approx", "compare"])
def test_nhpp_subcommands(tmp_path, action):
    cfg = write(tmp_path, NHPP)
    out = tmp_path / action
    assert main(["nhpp", action, "--config", cfg, "--out", str(out)]) == 0
    files = {p.name for p in out.iterdir()}
    expected = {"solve": {"nhpp_policy.csv", "summary.csv"},
                "approx": {"mmpp_policy.csv", "lifted_policy.csv", "summary.csv"},
                "compare": {"nhpp_policy.csv", "lifted_policy.csv", "comparison.csv"}}[action]
    assert files == expected
    if action == "compare":
        opt, approx, pct = map(float, (out / "comparison.csv").read_text().splitlines()[1].split(","))
        assert approx >= opt - 1e-6 and pct == pytest.approx(100 * (approx - opt) / opt, rel=1e-6)


def test_nhpp_needs_section(tmp_path):
    cfg = write(tmp_path, EXAMPLE_3_2)
    assert main(["nhpp", "solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_nhpp_bad_slot_width_exits_1(tmp_path):
    cfg = write(tmp_path, NHPP.replace("delta_t: 0.05", "delta_t: 0.3"))
    assert main(["nhpp", "solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_unknown_table_rejected():
    with pytest.raises(SystemExit):
        main(["reproduce", "--table", "7", "--out", "x"])
