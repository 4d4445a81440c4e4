import subprocess
import sys

import pytest
import yaml

from piclab.cli import build_parser, main
from piclab.metrics import h_std

SPEC = {"schema_version": 1, "name": "cyl", "operation": "curvature-spectrum",
        "inputs": {"metric": {"builtin": "h_std"}},
        "params": {"points": [[0.0, 1.5, 1.5, 1.5], [1.0, 1.0, 1.0, 1.0]]}}
CAP = {"schema_version": 1, "name": "cap", "operation": "surgery-cap-path",
       "inputs": {"metric": {"builtin": "h_std"}}, "grid": {"mu_count": 3, "point_count": 20}}


@pytest.fixture
def cfg(tmp_path):
    def make(doc, name="s.cfg"):
        p = tmp_path / name
        p.write_text(yaml.safe_dump(doc))
        return str(p)
    return make


def test_run_table_format(cfg, capsys):
    assert main(["run", cfg(SPEC), "--format", "table", "--no-write"]) == 0
    out, err = capsys.readouterr()
    assert len(out.strip().splitlines()) == 3 and "cyl: pass" in err


def test_run_doc_format_is_yaml(cfg, capsys):
    assert main(["run", cfg(SPEC), "--format", "doc", "--seed", "5", "--threads", "2", "--no-write"]) == 0
    doc = yaml.safe_load(capsys.readouterr().out)
    assert doc["seed"] == 5 and doc["status"] == 0


def test_run_writes_next_to_config(cfg, tmp_path, capsys):
    main(["run", cfg(SPEC)])
    assert (tmp_path / "s.report.yaml").exists() and (tmp_path / "s.table.csv").exists()


def test_schema_error_status(cfg, capsys):
    assert main(["run", cfg({**SPEC, "extra": 1})]) == 2
    assert "schema violation" in capsys.readouterr().err


def test_suite(cfg, tmp_path, capsys):
    cfg(SPEC, "a.cfg")
    cfg(CAP, "b.cfg")
    assert main(["suite", str(tmp_path), "--no-write"]) == 0
    assert "2 scenarios, worst status 0" in capsys.readouterr().err


def test_curvature_command(tmp_path, capsys):
    m = tmp_path / "m.yaml"
    m.write_text(yaml.safe_dump(h_std().to_dict()))
    assert main(["curvature", str(m), "--point", "0", "1.5", "1.5", "1.5", "--format", "doc"]) == 0
    doc = yaml.safe_load(capsys.readouterr().out)
    ev = doc["points"][0]["eigenvalues"]
    assert ev[:3] == pytest.approx([0, 0, 0], abs=1e-14) and ev[3:] == pytest.approx([1 / 6] * 3)
    assert main(["curvature", str(m), "--point", "9", "1.5", "1.5", "1.5"]) == 2


def test_curvature_missing_metric(capsys):
    assert main(["curvature", "/nonexistent.yaml", "--point", "0", "1", "1", "1"]) == 2


def test_surgery_subcommands(cfg, capsys):
    assert main(["surgery", "cap-path", cfg(CAP), "--no-write"]) == 0
    # a document for another operation is rejected
    assert main(["surgery", "verify-prop51", cfg(CAP), "--no-write"]) == 2


@pytest.mark.parametrize("argv", [[], ["run"], ["surgery", "bogus", "x"], ["curvature", "m.yaml"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(argv)
    assert exc.value.code == 2


def test_console_entry_point(cfg):
    proc = subprocess.run([sys.executable, "-m", "piclab.cli", "run", cfg(SPEC), "--no-write"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "cyl: pass" in proc.stderr
