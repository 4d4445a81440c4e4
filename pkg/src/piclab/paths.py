"""One-parameter families of metrics and their grid certification."""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .curvature import classify_curvature, curvature_analytic, curvature_fd
from .metrics import ChartMetric, line_points

PATH_KINDS = ("star-conformal", "warped-flatten", "linear-blend", "cutoff-blend", "composite")


class PathError(ValueError):
    pass


class CertificationError(RuntimeError):
    """A sampled metric is not positive definite."""


def _describe(m):
    try:
        return m.to_dict()
    except Exception:  # function-backed charts carry only a description
        return {"tag": getattr(m, "tag", "unknown")}


class IsotopyPath:
    """``mu -> metric`` on [0, 1] with declared endpoints and a fixed region.

    ``fixed_region`` is a list of intervals of the first coordinate on which
    every member must coincide with the ``mu = 0`` member.
    """

    def __init__(self, kind, builder, start, end, fixed_region=(), closure=None,
                 reparametrization=None, meta=None):
        if kind not in PATH_KINDS:
            raise PathError(f"unknown path kind {kind!r}")
        self.kind = kind
        self._builder = builder
        self.start = start
        self.end = end
        self.fixed_region = [tuple(map(float, iv)) for iv in fixed_region]
        self.closure = dict(closure or {})
        self.reparametrization = dict(reparametrization or {})
        self.meta = dict(meta or {})

    def member(self, mu) -> ChartMetric:
        mu = float(mu)
        if not 0.0 <= mu <= 1.0:
            raise PathError("path parameter must lie in [0, 1]")
        return self._builder(mu)

    def __call__(self, mu):
        return self.member(mu)

    @property
    def domain(self):
        return self.start.domain

    def endpoint_residuals(self, points):
        p = np.atleast_2d(points)
        r0 = np.max(np.abs(self.member(0.0).coeffs(p) - self.start.coeffs(p)))
        r1 = np.max(np.abs(self.member(1.0).coeffs(p) - self.end.coeffs(p)))
        return float(r0), float(r1)

    def fixed_region_residual(self, points, mus):
        p = np.atleast_2d(points)
        if not self.fixed_region:
            return 0.0
        mask = np.zeros(p.shape[0], dtype=bool)
        for lo, hi in self.fixed_region:
            mask |= (p[:, 0] > lo) & (p[:, 0] < hi)
        if not np.any(mask):
            return 0.0
        q = p[mask]
        ref = self.member(0.0).coeffs(q)
        return float(max(np.max(np.abs(self.member(m).coeffs(q) - ref)) for m in mus))

    def to_dict(self):
        out = {
            "kind": self.kind,
            "interval": [0.0, 1.0],
            "start": _describe(self.start),
            "end": _describe(self.end),
            "fixed_region": [list(iv) for iv in self.fixed_region],
        }
        if self.closure:
            out["closure"] = self.closure
        if self.reparametrization:
            out["reparametrization"] = self.reparametrization
        if self.meta:
            out["meta"] = self.meta
        return out


class CompositePath(IsotopyPath):
    """Concatenation of child paths on consecutive sub-intervals of [0, 1]."""

    def __init__(self, children, breakpoints=None, fixed_region=(), meta=None, check_points=None):
        if not children:
            raise PathError("composite path needs at least one child")
        n = len(children)
        bp = np.linspace(0.0, 1.0, n + 1) if breakpoints is None else np.asarray(breakpoints, float)
        if bp.shape != (n + 1,) or bp[0] != 0.0 or bp[-1] != 1.0 or np.any(np.diff(bp) <= 0):
            raise PathError("breakpoints must increase from 0 to 1")
        self.children = list(children)
        self.breakpoints = bp
        super().__init__("composite", self._pick, children[0].start, children[-1].end,
                         fixed_region, meta=meta)
        if check_points is not None:
            gap = self.chain_residual(check_points)
            if gap > 1e-12:
                raise PathError(f"composite children do not chain (gap {gap:.3e})")

    def _pick(self, mu):
        i = int(np.searchsorted(self.breakpoints, mu, side="right") - 1)
        i = min(max(i, 0), len(self.children) - 1)
        lo, hi = self.breakpoints[i], self.breakpoints[i + 1]
        local = min(max((mu - lo) / (hi - lo), 0.0), 1.0)
        return self.children[i].member(local)

    def chain_residual(self, points):
        p = np.atleast_2d(points)
        gaps = [0.0]
        for a, b in zip(self.children, self.children[1:]):
            gaps.append(float(np.max(np.abs(a.member(1.0).coeffs(p) - b.member(0.0).coeffs(p)))))
        return max(gaps)

    def to_dict(self):
        out = super().to_dict()
        out["breakpoints"] = self.breakpoints.tolist()
        out["children"] = [c.to_dict() for c in self.children]
        return out


def constant_path(metric, kind="linear-blend"):
    return IsotopyPath(kind, lambda mu: metric, metric, metric)


# -- certification ---------------------------------------------------------

@dataclass
class CertificationReport:
    name: str
    conditions: list
    threshold: float
    mu: np.ndarray
    points: np.ndarray
    minimum: dict
    argmin: dict
    curves: dict
    curve_argmin: dict
    passed: bool
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def min_margin(self):
        return min(self.minimum.values()) if self.minimum else np.inf

    def grid_spec(self):
        pts = self.points
        spec = {"mu_count": int(self.mu.size), "point_count": int(pts.shape[0])}
        if pts.size:
            spec["point_lo"] = pts.min(axis=0).tolist()
            spec["point_hi"] = pts.max(axis=0).tolist()
        return spec


def _member_margins(member, points, conditions, pinching_constant, backend):
    lam = np.linalg.eigvalsh(member.coeffs(points))[:, 0]
    if not np.all(lam > 0):
        i = int(np.argmin(lam))
        raise CertificationError(
            f"metric not positive definite at point {points[i].tolist()} (eigenvalue {lam[i]:.3e})")
    use_fd = backend == "fd" or not member.has_analytic()
    blocks = curvature_fd(member, points) if use_fd else curvature_analytic(member, points)
    rep = classify_curvature(blocks, pinching_constant)
    return {c: np.asarray(rep.margin(c), dtype=float) for c in conditions}


def certify_samples(name, members, mus, points, conditions=("PIC",), threshold=0.0,
                    pinching_constant=np.inf, threads=1, backend="analytic"):
    """Certify an explicit list of metrics (one per parameter value)."""
    t0 = time.perf_counter()
    pts = np.atleast_2d(np.asarray(points, dtype=float)) if len(points) else np.zeros((0, 4))
    mus = np.asarray(mus, dtype=float)
    conditions = [str(c) for c in conditions]

    def work(i):
        if pts.shape[0] == 0:
            return {c: np.zeros(0) for c in conditions}
        m = members(i) if callable(members) else members[i]
        return _member_margins(m, pts, conditions, pinching_constant, backend)

    if threads > 1 and mus.size > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as ex:
            rows = list(ex.map(work, range(mus.size)))
    else:
        rows = [work(i) for i in range(mus.size)]

    minimum, argmin, curves, curve_arg = {}, {}, {}, {}
    for c in conditions:
        curve = np.full(mus.size, np.inf)
        carg = np.zeros((mus.size, 4))
        best, best_at = np.inf, None
        for i, row in enumerate(rows):
            v = row[c]
            if v.size == 0:
                continue
            j = int(np.argmin(v))
            curve[i] = v[j]
            carg[i] = pts[j]
            if v[j] < best:
                best, best_at = float(v[j]), (float(mus[i]), pts[j].tolist())
        minimum[c] = best
        argmin[c] = best_at
        curves[c] = curve
        curve_arg[c] = carg
    passed = all(minimum[c] > threshold for c in conditions)
    return CertificationReport(name, conditions, float(threshold), mus, pts, minimum, argmin,
                               curves, curve_arg, bool(passed), time.perf_counter() - t0)


def certify_path(path: IsotopyPath, conditions=("PIC",), mu_count=50, points=None,
                 threshold=0.0, pinching_constant=np.inf, threads=1, backend="analytic",
                 name=None, mus=None) -> CertificationReport:
    if points is None:
        points = default_points(path.domain, 200)
    mus = np.linspace(0.0, 1.0, int(mu_count)) if mus is None else np.asarray(mus, float)
    rep = certify_samples(name or path.kind, lambda i: path.member(mus[i]), mus, points,
                          conditions, threshold, pinching_constant, threads, backend)
    rep.extra["path_kind"] = path.kind
    return rep


def default_points(domain, count, margin=1e-6):
    """Evenly spaced points along the first coordinate, strictly interior."""
    lo, hi = domain.lo[0], domain.hi[0]
    if not np.isfinite(lo) or not np.isfinite(hi):
        raise PathError("default grids need a bounded first coordinate")
    w = hi - lo
    xs = lo + w * (np.arange(count) + 0.5) / count
    return line_points(np.clip(xs, lo + margin * w, hi - margin * w))


def merge_reports(name, reports, threshold=None) -> CertificationReport:
    """Stack several reports along the parameter axis (stage after stage)."""
    if not reports:
        raise PathError("nothing to merge")
    conds = list(reports[0].conditions)
    thr = reports[0].threshold if threshold is None else float(threshold)
    mus = np.concatenate([r.mu + k for k, r in enumerate(reports)])
    minimum, argmin, curves, cargs = {}, {}, {}, {}
    for c in conds:
        best, at = np.inf, None
        for k, r in enumerate(reports):
            if r.minimum[c] < best:
                best = r.minimum[c]
                mu, pt = r.argmin[c]
                at = (mu + k, pt)
        minimum[c], argmin[c] = best, at
        curves[c] = np.concatenate([r.curves[c] for r in reports])
        cargs[c] = np.concatenate([r.curve_argmin[c] for r in reports])
    pts = reports[0].points
    out = CertificationReport(name, conds, thr, mus, pts, minimum, argmin, curves, cargs,
                              all(minimum[c] > thr for c in conds),
                              sum(r.wall_time for r in reports))
    out.extra["stages"] = [{"name": r.name, "min_margin": r.min_margin, "passed": r.passed,
                            "grid": r.grid_spec()} for r in reports]
    return out
