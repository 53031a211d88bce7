import csv
import io
import json
import math
import time

import pytest

from nvberry import cli
from nvberry.config import ParseError, RunConfig, ValidationError, parse_config, with_value


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[geometry]\ntheta0 = 0.5\nrotations = 2\n\n[readout]\nc = 0.2\n\n[sweep]\nparam = theta0\ncount = 3\n")
    cfg = parse_config("echo", path, ["geometry.rotations=3", "seed=4"])
    assert (cfg.theta0, cfg.rotations, cfg.c, cfg.seed) == (0.5, 3, 0.2, 4)
    assert cfg.sweep_param == "theta0" and cfg.sweep_count == 3


def test_unknown_key_names_line(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[geometry]\ntheta0 = 0.5\nspeed_rpm = 3000\n")
    with pytest.raises(ParseError, match=r"bad.ini:3"):
        parse_config("echo", path)
    with pytest.raises(ParseError):
        parse_config("echo", None, ["nosuch=1"])
    with pytest.raises(ParseError):
        parse_config("echo", None, ["rotations=1.5"])
    with pytest.raises(ParseError):
        parse_config("echo", tmp_path / "missing.ini")


@pytest.mark.parametrize(
    "override,fragment",
    [("omega=-1", "omega"), ("theta0=1.6", "theta0"), ("tolerance=0.01", "tolerance"), ("repetitions=50", "repetitions"), ("m=2", "m must")],
)
def test_validation_names_invariant(override, fragment):
    with pytest.raises(ValidationError, match=fragment):
        parse_config("echo", None, [override])


def test_per_command_defaults():
    assert parse_config("ramsey").decoherence() == ("gaussian", 10e-6)
    assert parse_config("echo").decoherence() == ("exponential", 2e-3)
    assert parse_config("ramsey").effective_phi0() == pytest.approx(4000 * math.pi * 10e-6)
    assert parse_config("berry").effective_phi0() == pytest.approx(2 * math.pi)
    assert with_value(RunConfig("echo"), "rotations", 2.6).rotations == 3


def test_sensitivity_command(capsys):
    code, out, _ = run_cli(capsys, "sensitivity")
    assert code == 0
    r = rows(out)
    assert [x["sequence"] for x in r] == ["echo", "ramsey"]
    assert float(r[0]["relative_sensitivity"]) == pytest.approx(0.149, abs=1e-3)
    assert float(r[1]["relative_sensitivity"]) == pytest.approx(2.11, abs=1e-2)


def test_echo_command(capsys):
    code, out, _ = run_cli(capsys, "echo")
    (r,) = rows(out)
    assert code == 0
    assert float(r["phase_analytic"]) == pytest.approx(4.0)
    assert float(r["phase_mc_mean"]) == pytest.approx(4.0, abs=0.05)


def test_berry_command_closed_loop(capsys):
    code, out, _ = run_cli(capsys, "berry", "--set", f"theta={math.pi / 2!r}", "--json")
    rec = json.loads(out)
    assert code == 0
    assert rec["phase_analytic"] == pytest.approx(2 * math.pi)
    assert abs(rec["difference"]) < 5e-3


def test_exit_codes(capsys, tmp_path):
    assert run_cli(capsys, "echo", "--set", "rotations=0")[0] == 2
    code, _, err = run_cli(capsys, "ramsey", "--set", "theta=0")
    assert code == 3 and "stage 'protocol'" in err and "NoDrive" in err
    code, _, err = run_cli(capsys, "ramsey", "--set", "phi0=10")
    assert code == 3 and "SignalDead" in err
    code, _, err = run_cli(capsys, "berry", "--set", "method=rk4", "--set", "dt=2e-7", "--set", "d_over_omega=30")
    assert code == 4 and "stage 'oracle'" in err
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


@pytest.mark.parametrize("command", ["ramsey", "echo", "sensitivity"])
def test_columns_depend_on_command_only(capsys, command):
    _, a, _ = run_cli(capsys, command)
    _, b, _ = run_cli(capsys, command, "--set", "c=0.3", "--seed", "9")
    assert a.splitlines()[0] == b.splitlines()[0]
    assert a.splitlines()[0].split(",") == cli.columns(RunConfig(command))


def test_round_trip_from_echoed_inputs(capsys):
    _, first, _ = run_cli(capsys, "echo", "--set", "theta0=0.4", "--seed", "11", "--json")
    rec = json.loads(first)
    inputs = [f"{k}={rec[k]}" for k in cli.INPUTS["echo"] if rec[k] is not None]
    _, second, _ = run_cli(capsys, "echo", "--json", *sum((["--set", i] for i in inputs), []))
    assert json.loads(second) == rec


def test_out_file_and_rfc4180(capsys, tmp_path):
    target = tmp_path / "out.csv"
    assert run_cli(capsys, "sensitivity", "--out", str(target))[0] == 0
    raw = target.read_bytes()
    assert raw.count(b"\r\n") == 3
    assert len(rows(target.read_text())) == 2


def test_sweep_keeps_order_in_parallel(capsys):
    args = ["sweep", "--set", "sweep.command=echo", "--set", "sweep.param=theta0", "--set", "sweep.min=0.1", "--set", "sweep.max=1.0", "--set", "sweep.count=4"]
    _, serial, _ = run_cli(capsys, *args)
    _, parallel, _ = run_cli(capsys, *args, "--set", "jobs=2")
    assert serial == parallel
    r = rows(serial)
    assert [float(x["theta0"]) for x in r] == pytest.approx([0.1, 0.4, 0.7, 1.0])
    assert [float(x["phase_analytic"]) for x in r] == pytest.approx([1.6, 6.4, 11.2, 16.0])


def test_sweep_rejects_invalid_point(capsys):
    code, _, err = run_cli(capsys, "sweep", "--set", "sweep.param=theta", "--set", "sweep.max=2.0", "--set", "sweep.count=2")
    assert code == 2 and "theta" in err


def test_default_run_of_every_command_is_fast(capsys):
    start = time.perf_counter()
    for command in ("berry", "ramsey", "echo", "sensitivity", "sweep"):
        assert run_cli(capsys, command)[0] == 0
    assert time.perf_counter() - start < 60
