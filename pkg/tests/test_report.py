import math

import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from conftest import interior_points
from piclab.metrics import cylinder, round_sphere
from piclab.paths import certify_path, constant_path
from piclab.report import (
    ReportError,
    dump_doc,
    emit_report,
    format_float,
    load_doc,
    report_to_dict,
    table_rows,
    write_atomic,
)


@pytest.mark.parametrize("x,expected", [
    (1.0, "1.0"), (-0.0, "0.0"), (0.1, "0.10000000000000001"), (1e20, "1.0e+20"),
    (2.5e-300, "2.5e-300"), (3e-5, "3.0000000000000001e-05"), (math.inf, ".inf"), (-math.inf, "-.inf"), (math.nan, ".nan"),
])
def test_format_float(x, expected):
    assert format_float(x) == expected


@given(st.floats(allow_nan=False))
def test_format_float_roundtrips_through_yaml(x):
    back = yaml.safe_load(format_float(x))
    assert isinstance(back, float) and back == x


def _report(mu=10, pts=50, metric=None):
    metric = metric or round_sphere()
    x = interior_points(metric, pts, seed=3)
    return certify_path(constant_path(metric), ("PIC", "PCO"), mu, x)


def test_table_has_one_row_per_mu():
    header, rows = table_rows(_report())
    assert len(rows) == 10 and header[0] == "mu"
    assert all(len(r) == len(header) for r in rows)


def test_empty_point_set_gives_header_only(tmp_path):
    rep = certify_path(constant_path(cylinder()), ("PIC",), 5, np.zeros((0, 4)))
    paths = emit_report(rep, tmp_path / "r.yaml", tmp_path / "r.csv")
    assert len(paths) == 2
    assert (tmp_path / "r.csv").read_text().count("\n") == 1


def test_document_is_byte_deterministic_without_wall_time():
    a, b = _report(), _report()
    a.wall_time, b.wall_time = 1.0, 2.0
    assert dump_doc(report_to_dict(a)) == dump_doc(report_to_dict(b))
    assert "wall_time" not in report_to_dict(a)
    assert "wall_time" in report_to_dict(a, include_wall_time=True)


def test_document_roundtrip_preserves_floats():
    rep = _report()
    doc = load_doc(dump_doc(report_to_dict(rep)))
    assert doc["schema_version"] == 1
    assert doc["minimum"]["PIC"] == rep.minimum["PIC"]
    assert doc["grid"] == {"mu_count": 10, "point_count": 50, **{k: doc["grid"][k] for k in ("point_lo", "point_hi")}}


def test_atomic_write_leaves_nothing_on_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    good = tmp_path / "a.yaml"
    with pytest.raises(ReportError):
        write_atomic({good: "a: 1.0\n", blocker / "b.csv": "mu\n"})
    assert sorted(p.name for p in tmp_path.iterdir()) == ["file"]
