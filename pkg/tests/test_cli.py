import json
import subprocess
import sys

import pytest

from hypersingular import __version__
from hypersingular.cli import main


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_region_json(capsys):
    code, out, _ = run(["region", "--format", "json", "--resolution", "3"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"config", "results", "metadata"}
    assert doc["metadata"]["sigma"] == "1/2"
    assert doc["metadata"]["version"] == __version__
    assert doc["config"]["experiment"] == "region"
    assert len(doc["results"]) == 9  # both line ends are lattice points here


def test_csv_header_records_config(capsys):
    code, out, _ = run(["blowup", "--m", "5", "--m-min", "3"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == f"# version={__version__}"
    assert "# config.m=5" in lines
    rows = [l for l in lines if not l.startswith("#")]
    assert rows[0].startswith("m,value,expected")
    assert len(rows) == 1 + 3


def test_deterministic_output(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["decompose", "--seed", "11", "--n-r", "32", "--n-theta", "64", "-o", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# layer norms\nt = 1.1\njmax = 8\nformat = json\n")
    code, out, _ = run(["layer-norms", "--config", str(cfg), "--jmax", "9"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["t"] == "11/10" and doc["config"]["jmax"] == 9
    assert doc["metadata"]["slope_L1_L1"] == pytest.approx(0.2, abs=0.02)
    js = tmp_path / "run.json"
    js.write_text(json.dumps({"weight": "power:-0.5", "t": 1.25}))
    code, out, _ = run(["weights", "--config", str(js), "--format", "json"], capsys)
    assert json.loads(out)["metadata"]["strong_verdict"] == "Bounded"


@pytest.mark.parametrize("args,needle", [
    (["region", "--t", "1.6"], "not admissible"),
    (["maximal", "--r-max", "1.0"], "r_max"),
    (["dominate", "--samples", "3"], "--seed is required"),
    (["blowup", "--m", "40"], "m <= 22"),
    (["weights", "--weight", "cosine:2"], "weight"),
    (["bergman", "--t", "abc"], "cannot parse"),
    (["maximal", "--n-r", "8", "--n-theta", "8", "--max-level", "9"], "max_level"),
])
def test_invalid_parameters_exit_nonzero(args, needle, capsys):
    code, out, err = run(args, capsys)
    assert code == 2
    assert needle in err and out == ""


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("tee = 1.2\n")
    code, _, err = run(["region", "--config", str(cfg)], capsys)
    assert code == 2 and "unknown config keys" in err


def test_dry_run_writes_nothing(tmp_path, capsys):
    out = tmp_path / "x.csv"
    code, stdout, err = run(["dominate", "--seed", "1", "--samples", "2", "--dry-run", "-o", str(out)], capsys)
    assert code == 0 and not out.exists() and "valid" in err and stdout == ""


def test_timestamp_is_opt_in(capsys):
    _, out, _ = run(["bourgain", "--format", "json"], capsys)
    assert "timestamp" not in json.loads(out)["metadata"]
    _, out, _ = run(["bourgain", "--format", "json", "--timestamp"], capsys)
    assert "timestamp" in json.loads(out)["metadata"]


def test_bourgain_point(capsys):
    _, out, _ = run(["bourgain", "--beta1", "1/5", "--beta2", "3/5", "--format", "json"], capsys)
    row = json.loads(out)["results"][0]
    assert row["theta"] == "3/4" and row["ip"] == "3/4" and row["iq"] == "1"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hypersingular", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
