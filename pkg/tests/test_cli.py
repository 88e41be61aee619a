import csv
import io
import subprocess
import sys

import pytest

from fracbubble.cli import COMMANDS, EXIT_CHECK, EXIT_OK, EXIT_USAGE, main, read_config_file
from fracbubble.cli import UsageError

FAST = ("constants", "config", "sums", "energy", "critical", "pohozaev", "norms")


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("command", FAST)
def test_subcommand_succeeds_with_header(command, capsys):
    code, out, err = run([command], capsys)
    assert code == EXIT_OK
    rows = table(out)
    assert rows and len(rows[0]) >= 2
    assert err.startswith(f"# run-config: command={command}")


def test_every_command_is_registered(capsys):
    for command in COMMANDS:
        code, out, _ = run([command, "--help"], capsys)
        assert code == EXIT_OK and "--config" in out


def test_sums_example_row(capsys):
    code, out, _ = run(["sums", "--k", "64", "--tau", "2.4", "--h", "0.1"], capsys)
    assert code == EXIT_OK
    rows = {r["kind"]: r for r in table(out)}
    same = rows["same_circle"]
    assert same["in_regime"] == "true"
    assert abs(float(same["ratio"]) - 1) < 0.05
    assert float(same["exact"]) == pytest.approx(739.6892661533525, rel=1e-12)
    assert "cross_circle" in rows


def test_sums_skips_cross_row_when_h_zero(capsys):
    _, out, _ = run(["sums", "--h", "0"], capsys)
    assert [r["kind"] for r in table(out)] == ["same_circle"]


def test_second_parameter_set(capsys):
    code, out, err = run(["constants", "--n", "4", "--s", "0.5"], capsys)
    assert code == EXIT_OK and "n=4 s=0.5" in err
    names = {r["name"] for r in table(out)}
    assert {"A", "A1", "h0"} <= names


def test_critical_trace_adds_rows(capsys):
    _, plain, _ = run(["critical", "--k", "16"], capsys)
    _, traced, _ = run(["critical", "--k", "16", "--trace"], capsys)
    sections = {r["section"] for r in table(traced)}
    assert "trace" in sections
    assert len(table(traced)) > len(table(plain))
    grad = [r for r in table(plain) if r["name"] == "grad_max"][0]
    assert grad["passed"] == "true"


def test_pohozaev_dilation(capsys):
    code, out, _ = run(["pohozaev", "--which", "dilation"], capsys)
    assert code == EXIT_OK
    assert all(r["passed"] == "true" for r in table(out))


@pytest.mark.parametrize("argv", [
    ["energy", "--bogus", "1"],
    ["sums", "--s", "1.5"],
    ["sums", "--s", "0"],
    ["energy", "--h", "1.0"],
    ["pohozaev", "--delta", "-1"],
    ["norms", "--which", "sideways"],
    ["constants", "--m", "0.1"],
])
def test_usage_errors(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == EXIT_USAGE and "error" in err


def test_missing_command(capsys):
    code, _, _ = run([], capsys)
    assert code == EXIT_USAGE


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment line\nn = 4\ns = 0.5\nk = 20\n\n")
    assert read_config_file(str(cfg)) == {"n": 4, "s": 0.5, "k": 20}
    _, _, err = run(["sums", "--config", str(cfg)], capsys)
    assert "n=4 s=0.5" in err and "k=20" in err
    _, out, err = run(["sums", "--config", str(cfg), "--k", "40"], capsys)
    assert "k=40" in err
    assert table(out)[0]["k"] == "40"


def test_config_file_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = blue\n")
    with pytest.raises(UsageError):
        read_config_file(str(cfg))
    code, _, err = run(["sums", "--config", str(cfg)], capsys)
    assert code == EXIT_USAGE and "colour" in err


def test_config_file_missing(tmp_path, capsys):
    code, _, _ = run(["sums", "--config", str(tmp_path / "nope.cfg")], capsys)
    assert code == EXIT_USAGE


def test_out_file(tmp_path, capsys):
    target = tmp_path / "c.csv"
    code, out, _ = run(["constants", "--out", str(target)], capsys)
    assert code == EXIT_OK and out == ""
    assert target.read_text().startswith("name,value,provenance")


@pytest.mark.parametrize("command", ["constants", "energy", "critical", "norms"])
def test_outputs_are_deterministic(command, capsys):
    _, first, _ = run([command], capsys)
    _, second, _ = run([command], capsys)
    assert first == second


def test_module_entry_point(tmp_path):
    target = tmp_path / "s.csv"
    proc = subprocess.run([sys.executable, "-m", "fracbubble", "sums", "--out", str(target)],
                          capture_output=True, text=True, timeout=600)
    assert proc.returncode == 0
    assert "# run-config" in proc.stderr
    assert target.read_text().splitlines()[0] == "k,tau,kind,h,exact,asymptotic,ratio,in_regime"


@pytest.mark.slow
def test_verify_reports_each_criterion(tmp_path, capsys):
    target = tmp_path / "v.csv"
    code, _, err = run(["verify", "--out", str(target)], capsys)
    lines = [ln for ln in err.splitlines() if ln.startswith("criterion")]
    assert len(lines) == 12
    failing = [ln for ln in lines if ln.endswith("FAIL")]
    assert code == (EXIT_CHECK if failing else EXIT_OK)
    assert len(table(target.read_text())) == 12
