import csv
import json
import math
import textwrap

import pytest
import yaml

from ngrhmc.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from ngrhmc.config import ConfigError, RunConfig, config_from_dict, parse_config

HALF_NORMAL = textwrap.dedent(
    """\
    schema_version: 1
    model: half-normal
    sampler:
      T: {T}
      N: 500
      chains: {chains}
      seed: 7
    output:
      dir: {out}
      event_log: true
      dense_trace: true
    """
)


def write(tmp_path, text, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def half_normal_config(tmp_path, out="out", T=400, chains=2):
    return write(tmp_path, HALF_NORMAL.format(T=T, chains=chains, out=tmp_path / out))


def report_without_timing(path):
    rep = json.loads(path.read_text())
    rep.pop("timing")
    return rep


# -- config parsing -----------------------------------------------------------

def test_minimal_config_defaults():
    cfg = parse_config("model: std-normal\n")
    assert cfg.sampler.N == 1000 and cfg.sampler.lam == 0.5
    assert cfg.sampler.kernel.value == "sparse-randomized"
    assert cfg.output.formats == ["csv", "json"]


def test_error_names_field_and_line():
    text = "schema_version: 1\nmodel: half-normal\nsampler:\n  T: 100\n  N: 1\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text, "bad.yaml")
    assert info.value.messages == ["bad.yaml:5: sampler.N: Input should be greater than or equal to 2"]


def test_unknown_keys_are_rejected():
    text = "model: half-normal\nsampler:\n  T: 100\n  bogus: 3\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text, "x.yaml")
    assert info.value.messages == ["x.yaml:4: sampler.bogus: Extra inputs are not permitted"]


def test_constraint_errors_hide_union_tags():
    text = "model: std-normal\nconstraints:\n  - type: l2\n    A: [[1.0]]\n    b: [0.0]\n    v: -1\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text, "c.yaml")
    (msg,) = info.value.messages
    assert msg.startswith("c.yaml:6: constraints.0.v:")


def test_bad_gaussian_rejected():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"model": {"type": "gaussian", "mean": [0, 0], "cov": [[1, 2], [2, 1]]}})
    assert "positive definite" in str(info.value)


def test_yaml_syntax_error():
    with pytest.raises(ConfigError) as info:
        parse_config("model: [unclosed\n", "s.yaml")
    assert "YAML syntax error" in str(info.value)


def test_echo_round_trip():
    cfg = parse_config(
        "model: {type: gaussian, mean: [0, 1], cov: [[1, 0.2], [0.2, 2]]}\n"
        "constraints:\n  - {type: linear, a: [1, -2], b: 1}\n"
        "sampler: {T: 50, kernel: randomized, step: {abs_tol: 1.0e-5}}\n"
    )
    again = RunConfig.model_validate(json.loads(json.dumps(cfg.echo())))
    assert again == cfg
    assert parse_config(yaml.safe_dump(cfg.echo())) == cfg


# -- commands ------------------------------------------------------------------

def test_validate_command(tmp_path, capsys):
    assert main(["validate", half_normal_config(tmp_path)]) == EXIT_OK
    bad = write(tmp_path, "model: half-normal\nsampler:\n  N: 1\n", "bad.yaml")
    assert main(["validate", bad]) == EXIT_CONFIG
    assert "sampler.N" in capsys.readouterr().err


def test_run_half_normal(tmp_path):
    cfg = half_normal_config(tmp_path, T=5000, chains=4)
    assert main(["run", cfg, "--workers", "1"]) == EXIT_OK
    out = tmp_path / "out"
    rep = json.loads((out / "report.json").read_text())
    (q1,) = rep["coordinates"]
    assert q1["rhat"] < 1.01
    assert abs(q1["time_mean"] - math.sqrt(2 / math.pi)) <= 3 * q1["time_mean_se"]
    assert rep["seed"] == 7 and rep["chains"] == 4
    assert rep["events"]["collisions"] > 0
    assert {"wall_total", "wall_sampling", "ess_per_sec"} <= set(rep["timing"])

    rows = list(csv.reader((out / "samples.csv").open()))
    assert rows[0] == ["chain", "index", "q1"]
    assert len(rows) == 1 + 4 * 500
    # 17 significant digits round-trip a double exactly
    assert all(float(repr(float(r[2]))) == float(r[2]) for r in rows[1:50])
    assert any(len(r[2].replace("-", "").replace(".", "").lstrip("0")) >= 15 for r in rows[1:50])
    assert (out / "events.csv").exists() and (out / "trace.csv").exists()


def test_run_config_error_exit_code(tmp_path):
    bad = write(tmp_path, "model: half-normal\nsampler:\n  N: 1\n", "bad.yaml")
    assert main(["run", bad]) == EXIT_CONFIG
    assert main(["run", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG


def test_run_unknown_model_is_config_error(tmp_path, capsys):
    cfg = write(tmp_path, "model: no-such-model\n")
    assert main(["run", cfg]) == EXIT_CONFIG
    assert "no-such-model" in capsys.readouterr().err


def test_infeasible_start_exit_code(tmp_path, capsys):
    cfg = write(
        tmp_path,
        "model: half-normal\nstart: {mode: given, q0: [-1.0]}\nsampler: {T: 10, N: 10}\n"
        f"output: {{dir: {tmp_path / 'o'}}}\n",
    )
    assert main(["run", cfg]) == EXIT_RUNTIME
    err = capsys.readouterr().err
    assert "InfeasibleStart" in err and "constraint 0" in err


def test_feasible_search_start(tmp_path):
    cfg = write(
        tmp_path,
        "model: {type: gaussian, mean: [0, 0], cov: [[1, 0], [0, 1]]}\n"
        "constraints:\n  - {type: linear, a: [1, 1], b: -1}\n"
        "start: {mode: feasible-search, center: [0, 0], scale: 2}\n"
        f"sampler: {{T: 50, N: 20}}\noutput: {{dir: {tmp_path / 'fs'}}}\n",
    )
    assert main(["run", cfg]) == EXIT_OK
    rep = json.loads((tmp_path / "fs" / "report.json").read_text())
    assert sum(rep["q0"]) - 1.0 > 0.0


def test_outputs_are_byte_identical(tmp_path):
    cfg = half_normal_config(tmp_path, out="a", T=300, chains=3)
    assert main(["run", cfg, "--workers", "1"]) == EXIT_OK
    assert main(["run", cfg, "--out", str(tmp_path / "b"), "--workers", "3"]) == EXIT_OK
    a, b = tmp_path / "a", tmp_path / "b"
    for name in ("samples.csv", "events.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert report_without_timing(a / "report.json") == report_without_timing(b / "report.json")


def test_report_echo_reproduces_the_run(tmp_path):
    cfg = half_normal_config(tmp_path, out="first", T=200, chains=1)
    assert main(["run", cfg]) == EXIT_OK
    rep = json.loads((tmp_path / "first" / "report.json").read_text())
    echo = rep["config"]
    echo["output"]["dir"] = str(tmp_path / "second")
    again = write(tmp_path, yaml.safe_dump(echo), "again.yaml")
    assert main(["run", again]) == EXIT_OK
    assert (tmp_path / "first" / "samples.csv").read_bytes() == (tmp_path / "second" / "samples.csv").read_bytes()


def test_list_examples(capsys):
    assert main(["list-examples"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "half-normal" in out and "toy-mixture-transformed" in out


def test_unknown_demo(tmp_path, capsys):
    assert main(["demo", "fig9", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "fig9" in capsys.readouterr().err


def test_workers_environment_variable(tmp_path, monkeypatch):
    monkeypatch.setenv("NGRHMC_WORKERS", "2")
    cfg = half_normal_config(tmp_path, out="env", T=100, chains=2)
    assert main(["run", cfg]) == EXIT_OK
