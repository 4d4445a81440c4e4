"""Structured-document and table output for certification reports."""
from __future__ import annotations

import csv
import io
import math
import os
from pathlib import Path

import numpy as np
import yaml

from .paths import CertificationReport

SCHEMA_VERSION = 1


class ReportError(OSError):
    pass


def format_float(x: float) -> str:
    """17 significant digits, always readable back as a YAML float."""
    x = float(x) + 0.0  # no negative zero
    if math.isnan(x):
        return ".nan"
    if math.isinf(x):
        return ".inf" if x > 0 else "-.inf"
    s = format(x, ".17g")
    if "." not in s:
        s = s.replace("e", ".0e") if "e" in s else s + ".0"
    return s


class _Dumper(yaml.SafeDumper):
    pass


def _float_rep(dumper, value):
    return dumper.represent_scalar("tag:yaml.org,2002:float", format_float(value))


_Dumper.add_representer(float, _float_rep)


def plain(obj):
    """Convert numpy scalars/arrays and tuples into plain YAML-safe values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return plain(obj.to_dict())
    return str(obj)


def dump_doc(doc: dict) -> str:
    return yaml.dump(plain(doc), Dumper=_Dumper, sort_keys=False, default_flow_style=None, width=100)


def load_doc(text: str):
    return yaml.safe_load(text)


def report_to_dict(report: CertificationReport, include_wall_time=False) -> dict:
    argmin = {}
    for c, at in report.argmin.items():
        argmin[c] = None if at is None else {"mu": at[0], "point": list(at[1])}
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "certification-report",
        "name": report.name,
        "conditions": list(report.conditions),
        "threshold": report.threshold,
        "passed": report.passed,
        "grid": report.grid_spec(),
        "minimum": dict(report.minimum),
        "argmin": argmin,
        "note": "sampled minima over the grid, not rigorous bounds",
    }
    if include_wall_time:
        doc["wall_time"] = report.wall_time
    if report.extra:
        doc["extra"] = _drop_arrays(report.extra)
    return plain(doc)


def _drop_arrays(d):
    # large per-sample arrays belong in the table, not the document
    out = {}
    for k, v in d.items():
        if isinstance(v, np.ndarray) and v.size > 16:
            out[k] = {"count": int(v.size), "min": float(np.min(v)), "max": float(np.max(v))}
        elif isinstance(v, dict):
            out[k] = _drop_arrays(v)
        else:
            out[k] = v
    return out


def table_rows(report: CertificationReport):
    header = ["mu"]
    for c in report.conditions:
        header += [f"{c}_min", f"{c}_x0", f"{c}_x1", f"{c}_x2", f"{c}_x3"]
    rows = []
    if report.points.shape[0]:
        for i, mu in enumerate(report.mu):
            row = [format_float(mu)]
            for c in report.conditions:
                row.append(format_float(report.curves[c][i]))
                row += [format_float(v) for v in report.curve_argmin[c][i]]
            rows.append(row)
    return header, rows


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def render_table(header, rows) -> str:
    """Fixed-width text table for terminal output."""
    cells = [header] + rows
    widths = [max(len(str(r[j])) for r in cells) for j in range(len(header))]
    lines = ["  ".join(str(v).rjust(widths[j]) for j, v in enumerate(r)) for r in cells]
    return "\n".join(lines) + "\n"


def write_atomic(files: dict):
    """Write all ``{path: text}`` or none of them."""
    staged = []
    try:
        for path, text in files.items():
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_name(path.name + ".partial")
            tmp.write_text(text)
            staged.append((tmp, path))
    except OSError as exc:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise ReportError(f"cannot write report output: {exc}") from exc
    for tmp, path in staged:
        os.replace(tmp, path)
    return [str(p) for _, p in staged]


def emit_report(report: CertificationReport, doc_path=None, table_path=None, include_wall_time=False):
    """Write the structured document and/or the per-mu table; returns the paths written."""
    files = {}
    if doc_path is not None:
        files[doc_path] = dump_doc(report_to_dict(report, include_wall_time))
    if table_path is not None:
        files[table_path] = rows_to_csv(*table_rows(report))
    return write_atomic(files)
