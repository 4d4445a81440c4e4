"""Scenario configuration, operation dispatch and report emission.

A scenario is one YAML document:

    schema_version: 1
    name: cylinder-eigenvalues
    operation: curvature-spectrum
    inputs: {metric: {builtin: h_std}}
    params: {points: [[0.0, 1.5, 1.5, 1.5]], expected_eigenvalues: [0, 0, 0, 0.1667, 0.1667, 0.1667]}

Unknown keys anywhere in the scenario layer are rejected.
"""
from __future__ import annotations

import inspect
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import metrics as _metrics
from .assembly import Join, Piece, canonical_assembly
from .curvature import CurvatureError, classify_curvature, curvature
from .deform import linear_blend_path, star_shaped_path, tube_straighten_path, warped_flatten_path
from .flows import FlowError, dumbbell, ricci_flow_warped, yamabe_flow_rotsym
from .metrics import MetricError, WarpedMetric, metric_from_dict
from .mw import MWError, mw_build_profile
from .paths import CertificationError, PathError, certify_path, certify_samples, default_points
from .profiles import ProfileError, even_bump, profile_from_dict
from .report import (
    SCHEMA_VERSION,
    ReportError,
    dump_doc,
    format_float,
    plain,
    report_to_dict,
    rows_to_csv,
    table_rows,
    write_atomic,
)
from .surgery import (
    SurgeryError,
    double_surgery_isotopy,
    linear_homotopy_residual,
    surgery_cap_path,
    surgery_factor,
    surgery_points,
    verify_prop51,
)

EXIT_PASS, EXIT_FAIL, EXIT_SCHEMA, EXIT_INTERNAL = 0, 1, 2, 3

REQUIRED = object()


class SchemaError(ValueError):
    pass


# -- metric inputs -------------------------------------------------------------

def _warped_bump(height=0.2, inner=1.0, outer=2.0, kappa=1.0 / 6.0, interval=(-3.0, 3.0)):
    return WarpedMetric.from_warping(even_bump(height, inner, outer), kappa, tuple(interval),
                                     tag="warped-cylinder")


BUILTINS = {
    "cylinder": _metrics.cylinder,
    "h_std": _metrics.h_std,
    "round_sphere": _metrics.round_sphere,
    "s2xs2": _metrics.s2xs2,
    "dumbbell": dumbbell,
    "warped_bump": _warped_bump,
}


def _tuples(v):
    return tuple(v) if isinstance(v, list) else v


def load_metric(spec, base_dir: Path):
    """A metric from a path to a YAML document, a ``builtin`` spec or an inline document."""
    if isinstance(spec, str):
        path = (base_dir / spec).resolve()
        try:
            spec = yaml.safe_load(path.read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise SchemaError(f"cannot read metric document {path}: {exc}") from exc
    if not isinstance(spec, dict):
        raise SchemaError("metric input must be a mapping or a path")
    if "builtin" in spec:
        name = spec["builtin"]
        if name not in BUILTINS:
            raise SchemaError(f"unknown builtin metric {name!r}; known: {sorted(BUILTINS)}")
        fn = BUILTINS[name]
        args = {k: _tuples(v) for k, v in spec.items() if k != "builtin"}
        try:
            inspect.signature(fn).bind(**args)
        except TypeError as exc:
            raise SchemaError(f"builtin {name!r}: {exc}") from exc
        try:
            return fn(**args)
        except (MetricError, ProfileError, ValueError) as exc:
            raise SchemaError(f"builtin {name!r}: {exc}") from exc
    try:
        return metric_from_dict(spec)
    except (MetricError, ProfileError, KeyError, TypeError) as exc:
        raise SchemaError(f"invalid metric document: {exc}") from exc


def _profile(spec, what):
    try:
        return profile_from_dict(spec)
    except ProfileError as exc:
        raise SchemaError(f"{what}: {exc}") from exc


# -- scenario ------------------------------------------------------------------

TOP_KEYS = {"schema_version", "name", "operation", "description", "inputs", "params", "grid",
            "threshold", "seed", "threads", "outputs"}
GRID_KEYS = {"mu_count", "point_count"}
OUTPUT_KEYS = {"doc", "table"}


@dataclass
class Scenario:
    name: str
    operation: str
    inputs: dict
    params: dict
    grid: dict
    threshold: float = 0.0
    seed: int = 0
    threads: int = 1
    outputs: dict = field(default_factory=dict)
    base_dir: Path = Path(".")
    description: str = ""

    @classmethod
    def from_doc(cls, doc, base_dir=".", operation=None) -> Scenario:
        if not isinstance(doc, dict):
            raise SchemaError("scenario must be a mapping")
        unknown = set(doc) - TOP_KEYS
        if unknown:
            raise SchemaError(f"unknown scenario keys: {sorted(unknown)}")
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise SchemaError(f"schema_version must be {SCHEMA_VERSION}")
        op = doc.get("operation", operation)
        if operation is not None and op != operation:
            raise SchemaError(f"this command runs {operation!r}, the document names {op!r}")
        if op not in OPERATIONS:
            raise SchemaError(f"unknown operation {op!r}; known: {sorted(OPERATIONS)}")
        name = doc.get("name")
        if not isinstance(name, str) or not name:
            raise SchemaError("scenario needs a non-empty name")
        spec = OPERATIONS[op]
        inputs = _mapping(doc, "inputs")
        extra_inputs = set(inputs) - set(spec.inputs)
        missing_inputs = set(spec.required_inputs) - set(inputs)
        if extra_inputs:
            raise SchemaError(f"{op}: unknown inputs {sorted(extra_inputs)}")
        if missing_inputs:
            raise SchemaError(f"{op}: missing inputs {sorted(missing_inputs)}")
        params = _check_params(op, spec.params, _mapping(doc, "params"))
        grid = _mapping(doc, "grid")
        if set(grid) - GRID_KEYS:
            raise SchemaError(f"unknown grid keys: {sorted(set(grid) - GRID_KEYS)}")
        grid = {**spec.grid, **grid}
        for k, v in grid.items():
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise SchemaError(f"grid.{k} must be a nonnegative integer")
        outputs = _mapping(doc, "outputs")
        if set(outputs) - OUTPUT_KEYS:
            raise SchemaError(f"unknown output keys: {sorted(set(outputs) - OUTPUT_KEYS)}")
        threshold = doc.get("threshold", 0.0)
        seed = doc.get("seed", 0)
        threads = doc.get("threads", 1)
        if not _is_number(threshold):
            raise SchemaError("threshold must be a number")
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise SchemaError("seed must be a nonnegative integer")
        if not isinstance(threads, int) or isinstance(threads, bool) or threads < 1:
            raise SchemaError("threads must be a positive integer")
        return cls(name, op, inputs, params, grid, float(threshold), seed, threads, outputs,
                   Path(base_dir), str(doc.get("description", "")))

    @classmethod
    def from_file(cls, path, operation=None) -> Scenario:
        path = Path(path)
        try:
            doc = yaml.safe_load(path.read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise SchemaError(f"cannot read scenario {path}: {exc}") from exc
        sc = cls.from_doc(doc, path.parent, operation)
        sc.stem = path.stem
        return sc

    def output_paths(self, out_dir=None):
        stem = getattr(self, "stem", self.name)
        base = Path(out_dir) if out_dir is not None else self.base_dir
        doc = self.outputs.get("doc", f"{stem}.report.yaml")
        table = self.outputs.get("table", f"{stem}.table.csv")
        if out_dir is not None:
            doc, table = Path(doc).name, Path(table).name
        return base / doc, base / table


def _mapping(doc, key):
    v = doc.get(key, {})
    if v is None:
        return {}
    if not isinstance(v, dict):
        raise SchemaError(f"{key} must be a mapping")
    return v


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_params(op, defaults, given):
    unknown = set(given) - set(defaults)
    if unknown:
        raise SchemaError(f"{op}: unknown params {sorted(unknown)}")
    out = {}
    for k, d in defaults.items():
        if k not in given:
            if d is REQUIRED:
                raise SchemaError(f"{op}: missing required param {k!r}")
            out[k] = d
            continue
        v = given[k]
        if isinstance(d, bool):
            ok = isinstance(v, bool)
        elif isinstance(d, int):
            ok = isinstance(v, int) and not isinstance(v, bool)
        elif isinstance(d, float):
            ok = _is_number(v)
            v = float(v) if ok else v
        elif isinstance(d, str):
            ok = isinstance(v, str)
        elif isinstance(d, (list, tuple)):
            ok = isinstance(v, list)
        else:
            ok = True
        if not ok:
            raise SchemaError(f"{op}: param {k!r} has the wrong type ({type(v).__name__})")
        out[k] = v
    return out


# -- operations ----------------------------------------------------------------

@dataclass
class Outcome:
    passed: bool
    report: dict
    header: list
    rows: list


@dataclass
class OperationSpec:
    run: object
    params: dict
    inputs: tuple = ()
    required_inputs: tuple = ()
    grid: dict = field(default_factory=dict)


def _conditions(sc):
    conds = sc.params.get("conditions", ["PIC"])
    for c in conds:
        if not isinstance(c, str) or not (c.upper() in ("PIC", "PCO", "PSC") or c.upper().startswith("PINCHING")):
            raise SchemaError(f"unknown condition {c!r}")
    return [c.upper() for c in conds]


def _report_outcome(rep, extra=None, passed=None):
    doc = report_to_dict(rep)
    if extra:
        doc.setdefault("extra", {}).update(plain(extra))
    header, rows = table_rows(rep)
    return Outcome(rep.passed if passed is None else bool(passed), doc, header, rows)


def _check_inside(metric, pts):
    if not np.all(metric.domain.contains(pts)):
        raise SchemaError("points lie outside the metric's chart domain")


def _points(sc, metric):
    pts = sc.params.get("points")
    if pts:
        arr = np.asarray(pts, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise SchemaError("points must be a list of 4-vectors")
        _check_inside(metric, arr)
        return arr
    return default_points(metric.domain, sc.grid.get("point_count", 200))


def run_curvature_spectrum(sc, inputs):
    metric = inputs["metric"]
    pts = np.asarray(sc.params["points"], dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 4 or pts.shape[0] == 0:
        raise SchemaError("points must be a non-empty list of 4-vectors")
    _check_inside(metric, pts)
    backend = sc.params["backend"]
    if backend not in ("analytic", "fd"):
        raise SchemaError("backend must be 'analytic' or 'fd'")
    conds = _conditions(sc)
    blocks = curvature(metric, pts, backend)
    ev = blocks.op_eigenvalues
    rep = certify_samples(sc.name, [metric], [0.0], pts, conds, sc.threshold, backend=backend,
                          threads=sc.threads)
    per_point = [{"point": pts[i], "eigenvalues": ev[i], "a": blocks.a[i], "b": blocks.b[i],
                  "c": blocks.c[i], "scalar": blocks.scalar[i], "sigma": blocks.sigma[i]}
                 for i in range(pts.shape[0])]
    extra = {"backend": backend, "spectrum": per_point}
    ok = rep.passed
    if sc.params["expected_eigenvalues"] is not None:
        want = np.sort(np.asarray(sc.params["expected_eigenvalues"], dtype=float))
        if want.shape != (6,):
            raise SchemaError("expected_eigenvalues needs six values")
        err = float(np.max(np.abs(ev - want)))
        tol = sc.params["tolerance"]
        extra["expected_check"] = {"max_error": err, "tolerance": tol, "passed": err <= tol}
        ok = ok and err <= tol
    out = _report_outcome(rep, extra, ok)
    rep_c = classify_curvature(blocks)
    out.header = ["x0", "x1", "x2", "x3"] + [f"ev{k}" for k in range(6)] + ["pic_margin", "pco_margin"]
    out.rows = [[format_float(v) for v in list(pts[i]) + list(ev[i])
                 + [rep_c.pic_margin[i], rep_c.pco_margin[i]]] for i in range(pts.shape[0])]
    return out


def _build_path(sc, inputs):
    p = sc.params
    metric = inputs["metric"]
    kind = p["path"]
    if kind == "warped-flatten":
        return warped_flatten_path(metric, b=p["b"], symmetric=p["symmetric"], periodic=p["periodic"],
                                   q_ref=p["q_ref"], period=p["period"], precheck=p["precheck"])
    if kind == "star-conformal":
        if p["u"] is None:
            raise SchemaError("star-conformal needs params.u")
        return star_shaped_path(metric, _profile(p["u"], "u"))
    if kind in ("linear-blend", "cutoff-blend"):
        if "target" not in inputs:
            raise SchemaError(f"{kind} needs inputs.target")
        cut = None if p["cutoff"] is None else _profile(p["cutoff"], "cutoff")
        if kind == "cutoff-blend" and cut is None:
            raise SchemaError("cutoff-blend needs params.cutoff")
        return linear_blend_path(metric, inputs["target"], cutoff=cut)
    if kind == "tube-straighten":
        return tube_straighten_path(metric, eps_neck=p["eps_neck"])
    raise SchemaError(f"unknown path kind {kind!r}")


def run_certify_path(sc, inputs):
    path = _build_path(sc, inputs)
    pts = _points(sc, path.start)
    conds = _conditions(sc)
    pin = sc.params["pinching_constant"]
    rep = certify_path(path, conds, sc.grid["mu_count"], pts, sc.threshold,
                       np.inf if pin is None else float(pin), sc.threads, sc.params["backend"],
                       name=sc.name)
    extra = {"endpoint_residuals": path.endpoint_residuals(pts),
             "fixed_region_residual": path.fixed_region_residual(pts, rep.mu),
             "path": path.to_dict()}
    return _report_outcome(rep, extra)


def run_mw_profile(sc, inputs):
    p = sc.params
    prof = mw_build_profile(p["k1"], p["r1"], p["rho"], r_star=p["r_star"], grid=p["grid"])
    m, at = prof.min_margin(p["grid"])
    ok = m > sc.threshold and prof.neck_radius <= p["rho"]
    doc = {"schema_version": SCHEMA_VERSION, "kind": "mw-profile", "name": sc.name, "passed": ok,
           "profile": prof.to_dict(), "min_margin": m, "argmin_r": at}
    r = prof.log_grid(sc.grid["point_count"])
    a = prof.alpha(r)
    margin = prof.margin(r)
    rows = [[format_float(x), format_float(y), format_float(z)] for x, y, z in zip(r, a, margin)]
    return Outcome(ok, doc, ["r", "alpha", "margin"], rows)


def run_mw_assembly(sc, inputs):
    p = sc.params
    try:
        pieces = [Piece(**d) for d in p["pieces"]]
        joins = [Join(**d) for d in p["joins"]]
    except TypeError as exc:
        raise SchemaError(f"malformed piece or join: {exc}") from exc
    asm = canonical_assembly(None, pieces, joins, None, p["k1"], p["r1"], p["rho"], seed=sc.seed,
                             threads=sc.threads, frame_samples=p["frame_samples"],
                             neck_count=p["neck_count"])
    k1_ok = all(c.get("passed", True) for c in asm.k1_certificates)
    doc = {"schema_version": SCHEMA_VERSION, "kind": "canonical-assembly", "name": sc.name,
           "passed": asm.passed and k1_ok, "assembly": asm.to_dict(),
           "charts": [report_to_dict(r) for r in asm.certification]}
    rows = []
    for r in asm.certification:
        for c in r.conditions:
            at = r.argmin[c]
            rows.append([r.name, c, format_float(r.minimum[c])]
                        + ([format_float(v) for v in at[1]] if at else [""] * 4))
    return Outcome(asm.passed and k1_ok, plain(doc), ["chart", "condition", "min", "x0", "x1", "x2", "x3"], rows)


def _surgery_profile(p):
    return surgery_factor(p["c"], p["q"])


def run_prop51(sc, inputs):
    p = sc.params
    rep = verify_prop51(inputs["metric"], _surgery_profile(p), p["s_count"], p["fiber_count"], sc.seed,
                        p["eps"], p["order"], tuple(p["s_range"]), p["pinching_constant"], sc.threads)
    frac = rep.extra["predicted_bound"]["rescaled_fraction"]
    ok = rep.passed and (p["bound_fraction"] is None or frac >= p["bound_fraction"])
    return _report_outcome(rep, {"bound_fraction_required": p["bound_fraction"]}, ok)


def run_cap_path(sc, inputs):
    p = sc.params
    h = inputs["metric"]
    path = surgery_cap_path(h, _surgery_profile(p), p["eps"], p["cap_sharpness"])
    pts = surgery_points(path.model, sc.grid["point_count"])
    rep = certify_path(path, ("PIC",), sc.grid["mu_count"], pts, sc.threshold, threads=sc.threads,
                       name=sc.name)
    target = _metrics.cylinder(h.kappa, h.interval, gamma=h.gamma, coord=h.coord)
    xs = np.linspace(h.interval[0] + 1e-3, -1e-3, 100)
    lin = linear_homotopy_residual(path, h, target, rep.mu, xs)
    return _report_outcome(rep, {"linear_homotopy_residual": lin, "model": path.model.to_dict()})


def run_double_isotopy(sc, inputs):
    p = sc.params
    res = double_surgery_isotopy(inputs["metric"], _surgery_profile(p), p["k1"], p["r1"], p["rho"],
                                 p["eps"], p["cap_sharpness"], sc.grid["mu_count"],
                                 sc.grid["point_count"], sc.threads, sc.seed, p["frame_samples"])
    rep = res.report
    rep.name = sc.name
    ok = rep.passed and res.fixed_region_residual < 1e-12
    return _report_outcome(rep, {"double_cap": res.double_cap.to_dict()}, ok)


def run_ricci_flow(sc, inputs):
    p = sc.params
    metric = inputs["metric"]
    if not isinstance(metric, WarpedMetric):
        raise SchemaError("ricci-flow needs a warped metric")
    traj = ricci_flow_warped(metric, p["step"], p["max_steps"], p["blowup_threshold"], p["n"],
                             p["t_max"], p["record_every"])
    margins = [r["pic_margin_min"] for r in traj.retained]
    ok = bool(margins) and min(margins) > sc.threshold
    kind = traj.events[0]["kind"] if traj.events else "none"
    if p["expect_event"] is not None:
        ok = ok and kind == p["expect_event"]
    doc = {"schema_version": SCHEMA_VERSION, "kind": "ricci-flow", "name": sc.name, "passed": ok,
           "gauge": traj.gauge, "trajectory": traj.to_dict()}
    rows = [[str(r["step"]), format_float(r["t"]), format_float(r["pic_margin_min"]),
             format_float(r["max_curvature"])] for r in traj.retained]
    return Outcome(ok, plain(doc), ["step", "t", "pic_margin_min", "max_curvature"], rows)


def run_yamabe_flow(sc, inputs):
    p = sc.params
    factor = _profile(p["factor"], "factor")
    traj = yamabe_flow_rotsym(factor, p["step"], p["max_steps"], p["tol"], p["n"], p["record_every"])
    drift = traj.volume_drift
    ok = traj.converged and min(traj.min_R) > 0 and drift < p["volume_tol"]
    doc = {"schema_version": SCHEMA_VERSION, "kind": "yamabe-flow", "name": sc.name, "passed": ok,
           "trajectory": traj.to_dict()}
    rows = [[str(r["step"]), format_float(r["t"]), format_float(r["sup_dev"]),
             format_float(r["pic_margin_min"])] for r in traj.reports]
    return Outcome(ok, plain(doc), ["step", "t", "sup_dev", "pic_margin_min"], rows)


_SURGERY = {"c": 0.1, "q": 20.0, "eps": 0.02}

OPERATIONS = {
    "curvature-spectrum": OperationSpec(
        run_curvature_spectrum,
        {"points": REQUIRED, "backend": "analytic", "expected_eigenvalues": None, "tolerance": 1e-10,
         "conditions": ["PIC"]},
        ("metric",), ("metric",)),
    "certify-path": OperationSpec(
        run_certify_path,
        {"path": REQUIRED, "b": None, "symmetric": False, "periodic": False, "period": None,
         "q_ref": 1.0, "precheck": True, "u": None, "cutoff": None, "eps_neck": 0.02,
         "conditions": ["PIC"], "backend": "analytic", "pinching_constant": None, "points": None},
        ("metric", "target"), ("metric",), {"mu_count": 50, "point_count": 200}),
    "mw-profile": OperationSpec(
        run_mw_profile, {"k1": 0.1, "r1": 0.5, "rho": 0.02, "r_star": None, "grid": 10_000},
        grid={"point_count": 200}),
    "mw-assembly": OperationSpec(
        run_mw_assembly,
        {"pieces": [], "joins": [], "k1": 0.1, "r1": 0.5, "rho": 0.02, "frame_samples": 1000,
         "neck_count": 600}),
    "surgery-verify-prop51": OperationSpec(
        run_prop51,
        {**_SURGERY, "s_count": 200, "fiber_count": 50, "order": 2, "s_range": [0.5, 4.0],
         "pinching_constant": None, "bound_fraction": None},
        ("metric",), ("metric",)),
    "surgery-cap-path": OperationSpec(
        run_cap_path, {**_SURGERY, "cap_sharpness": 1.0},
        ("metric",), ("metric",), {"mu_count": 20, "point_count": 200}),
    "surgery-double-isotopy": OperationSpec(
        run_double_isotopy,
        {**_SURGERY, "k1": 0.1, "r1": 1.0, "rho": 0.02, "cap_sharpness": 1.0, "frame_samples": 1000},
        ("metric",), ("metric",), {"mu_count": 12, "point_count": 600}),
    "ricci-flow": OperationSpec(
        run_ricci_flow,
        {"step": 1e-3, "max_steps": 100_000, "blowup_threshold": 1e3, "n": 400, "t_max": None,
         "record_every": 200, "expect_event": None},
        ("metric",), ("metric",)),
    "yamabe-flow": OperationSpec(
        run_yamabe_flow,
        {"factor": REQUIRED, "step": 1e-3, "max_steps": 200_000, "tol": 1e-3, "n": 400,
         "record_every": 500, "volume_tol": 1e-4}),
}


# -- running -------------------------------------------------------------------

@dataclass
class RunResult:
    status: int
    name: str
    doc: dict | None = None
    header: list | None = None
    rows: list | None = None
    files: list = field(default_factory=list)
    message: str = ""

    @property
    def passed(self):
        return self.status == EXIT_PASS


def _load_inputs(sc: Scenario):
    return {k: load_metric(v, sc.base_dir) for k, v in sc.inputs.items()}


def _wrap(sc, outcome: Outcome, status):
    return {"schema_version": SCHEMA_VERSION, "kind": "scenario-result", "scenario": sc.name,
            "operation": sc.operation, "seed": sc.seed, "status": status, "passed": outcome.passed,
            "report": outcome.report}


def execute(sc: Scenario) -> RunResult:
    """Run a validated scenario without writing anything."""
    try:
        inputs = _load_inputs(sc)
    except SchemaError as exc:
        return RunResult(EXIT_SCHEMA, sc.name, message=str(exc))
    try:
        with np.errstate(invalid="raise", divide="raise", over="raise", under="ignore"):
            outcome = OPERATIONS[sc.operation].run(sc, inputs)
    except SchemaError as exc:
        return RunResult(EXIT_SCHEMA, sc.name, message=str(exc))
    except (PathError, CertificationError, SurgeryError, MWError) as exc:
        # the construction or its preconditions failed to certify
        doc = {"schema_version": SCHEMA_VERSION, "kind": "scenario-result", "scenario": sc.name,
               "operation": sc.operation, "seed": sc.seed, "status": EXIT_FAIL, "passed": False,
               "error": f"{type(exc).__name__}: {exc}"}
        return RunResult(EXIT_FAIL, sc.name, doc, [], [], message=str(exc))
    except (FlowError, MetricError, ProfileError, CurvatureError, FloatingPointError,
            ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return RunResult(EXIT_INTERNAL, sc.name, message=f"{type(exc).__name__}: {exc}")
    status = EXIT_PASS if outcome.passed else EXIT_FAIL
    return RunResult(status, sc.name, _wrap(sc, outcome, status), outcome.header, outcome.rows)


def run_scenario(config, seed=None, threads=None, out_dir=None, write=True, operation=None) -> RunResult:
    """Validate, execute and (on status 0 or 1) write the report document and table."""
    try:
        if isinstance(config, Scenario):
            sc = config
        elif isinstance(config, dict):
            sc = Scenario.from_doc(config, ".", operation)
        else:
            sc = Scenario.from_file(config, operation)
    except SchemaError as exc:
        return RunResult(EXIT_SCHEMA, str(config), message=str(exc))
    if seed is not None:
        sc.seed = int(seed)
    if threads is not None:
        sc.threads = int(threads)
    res = execute(sc)
    if write and res.status in (EXIT_PASS, EXIT_FAIL):
        doc_path, table_path = sc.output_paths(out_dir)
        try:
            res.files = write_atomic({doc_path: dump_doc(res.doc),
                                      table_path: rows_to_csv(res.header, res.rows)})
        except ReportError as exc:
            return RunResult(EXIT_INTERNAL, sc.name, message=str(exc))
    return res


def run_suite(directory, seed=None, threads=None, out_dir=None, write=True, log=sys.stderr):
    """Run every ``*.cfg`` scenario in ``directory`` in name order; returns (status, results)."""
    paths = sorted(Path(directory).glob("*.cfg"))
    results = []
    for p in paths:
        res = run_scenario(p, seed, threads, out_dir, write)
        results.append(res)
        if log is not None:
            verdict = {0: "PASS", 1: "FAIL", 2: "SCHEMA", 3: "ERROR"}[res.status]
            tail = f"  ({res.message})" if res.message else ""
            print(f"{verdict:6s} {p.name}{tail}", file=log)
    status = max((r.status for r in results), default=EXIT_PASS)
    return status, results


def describe_status(status):
    return {EXIT_PASS: "pass", EXIT_FAIL: "certification failure", EXIT_SCHEMA: "schema violation",
            EXIT_INTERNAL: "internal numeric failure"}[status]


def finite_or_none(x):
    return x if x is None or math.isfinite(x) else None
