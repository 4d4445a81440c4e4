"""Connected sums of structured pieces and canonical-metric assemblies.

A join removes a small ball around an attachment site on each side, stretches
both punctured pieces conformally with an :class:`~piclab.mw.MWProfile` into
half-necks, closes each half-neck off to an exact round cylinder and glues the
two cylinders by reflection. Attachment sites are the poles of polar charts or
the point ``(s, psi) = (s_q, 0)`` of a cylinder chart.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import (
    ck_distance,
    classify_curvature,
    curvature_analytic,
    min_isotropic_curvature,
)
from .metrics import (
    AxisField,
    Box,
    ConformalMetric,
    FunctionMetric,
    PointDistanceField,
    WarpedMetric,
    axis_box,
    cylinder,
    line_points,
    round_sphere,
)
from .mw import MWError, MWProfile, mw_build_profile
from .paths import certify_samples
from .profiles import (
    Composition,
    Constant,
    Elementary,
    MirrorGlue,
    Product,
    Reciprocal,
    Smoothstep,
    Sum,
    linear,
)

NECK_FIBER = (1.2, 0.3)  # (chi, phi) used on neck grids


# -- pieces ------------------------------------------------------------------

@dataclass
class Piece:
    """A closed building block: a round quotient or a cylinder quotient."""

    kind: str  # "round" | "cylinder"
    gamma: str = "trivial"
    radius: float = 1.0
    length: float = 8.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("round", "cylinder"):
            raise MWError(f"unknown piece kind {self.kind!r}")

    def base_metric(self):
        if self.kind == "round":
            m = round_sphere(self.radius)
            m.gamma = self.gamma
            return m
        half = 0.5 * self.length
        return cylinder(1.0 / 6.0, (-half, half), gamma=self.gamma, coord="s", periodic=self.length)

    def sites(self):
        return ("north", "south") if self.kind == "round" else ("q",)

    def to_dict(self):
        d = {"kind": self.kind, "gamma": self.gamma, "name": self.name}
        d.update({"radius": self.radius} if self.kind == "round" else {"length": self.length})
        return d


# -- half-necks ----------------------------------------------------------------

class PoleHalf:
    """Stretched neighbourhood of a pole of ``dr^2 + omega(r)^2 dtheta_kappa^2``."""

    def __init__(self, metric: WarpedMetric, pole: str, prof: MWProfile, t_blend: float):
        if getattr(metric, "omega", None) is None:
            raise MWError("pole attachment needs a warped metric given by its warping function")
        self.metric, self.pole, self.prof, self.t_blend = metric, pole, prof, float(t_blend)
        lo, hi = metric.interval
        rs = prof.r_star
        self.rho_t = Elementary("exp", amplitude=rs, frequency=-1.0)
        if pole == "north":
            arg = Sum([self.rho_t, Constant(lo)])
        elif pole == "south":
            arg = Sum([Product([Constant(-1.0), self.rho_t]), Constant(hi)])
        else:
            raise MWError(f"unknown pole {pole!r}")
        unit = Product([Constant(math.sqrt(metric.kappa)), Composition(metric.omega, arg)])
        rho_min = rs * math.exp(-(t_blend + 40.0))
        ratio = Product([unit, Reciprocal(self.rho_t, rho_min)])
        chi = Smoothstep(t_blend, t_blend + 1.0)
        ratio_sq = Sum([Product([Sum([Constant(1.0), Product([Constant(-1.0), chi])]), ratio, ratio]),
                        chi])
        self.N = prof.neck_scale_t()
        self.P = Product([self.N, self.N])
        self.Q = Product([self.N, self.N, ratio_sq])

    def coeffs(self, t, beta, chi):
        P, Q = self.P(t), self.Q(t)
        sb, sc = np.sin(beta), np.sin(chi)
        return np.stack([P, Q, Q * sb**2, Q * sb**2 * sc**2], axis=-1)

    def to_outer(self, t):
        """Outer chart radial coordinate for neck coordinate ``t``."""
        lo, hi = self.metric.interval
        rho = self.prof.r_star * np.exp(-t)
        return lo + rho if self.pole == "north" else hi - rho


class PointHalf:
    """Stretched neighbourhood of ``(s_q, psi = 0)`` on the cylinder ``ds^2 + dtheta_kappa^2``."""

    def __init__(self, kappa, s_q, prof: MWProfile, t_blend: float):
        self.kappa, self.s_q, self.prof, self.t_blend = float(kappa), float(s_q), prof, float(t_blend)
        self.N = prof.neck_scale_t()
        self.chi = Smoothstep(t_blend, t_blend + 1.0)

    def coeffs(self, t, beta, chi):
        N2 = self.N(t) ** 2
        d = self.prof.r_star * np.exp(-t)
        R = 1.0 / math.sqrt(self.kappa)
        E = R * np.sin(d * np.sin(beta) / R) / d
        c = self.chi(t)
        E2 = (1.0 - c) * E**2 + c * np.sin(beta) ** 2
        return np.stack([N2, N2, N2 * E2, N2 * E2 * np.sin(chi) ** 2], axis=-1)

    def to_outer(self, t, beta):
        d = self.prof.r_star * np.exp(-t)
        return self.s_q + d * np.cos(beta), math.sqrt(self.kappa) * d * np.sin(beta)


# -- joins -----------------------------------------------------------------

@dataclass
class Join:
    a: int
    a_site: str
    b: int
    b_site: str
    fiber_isometry: str = "identity"


@dataclass
class Chart:
    name: str
    metric: object
    role: str  # "outer" | "neck"
    points: np.ndarray
    backend: str = "analytic"
    meta: dict = field(default_factory=dict)


@dataclass
class CanonicalAssembly:
    principal: Piece
    pieces: list
    joins: list
    charts: list
    overlaps: list
    neck_reports: list
    certification: list
    k1_certificates: list
    topology: str = ""
    outer_residuals: list = field(default_factory=list)

    @property
    def passed(self):
        return all(r.passed for r in self.certification)

    @property
    def min_margin(self):
        return min((r.min_margin for r in self.certification), default=math.inf)

    def to_dict(self):
        return {
            "principal": self.principal.to_dict(),
            "pieces": [p.to_dict() for p in self.pieces],
            "joins": [j.__dict__ for j in self.joins],
            "charts": [{"name": c.name, "role": c.role, "tag": c.metric.tag, "backend": c.backend,
                        **({"meta": c.meta} if c.meta else {})} for c in self.charts],
            "overlaps": self.overlaps,
            "necks": self.neck_reports,
            "k1_certificates": self.k1_certificates,
            "outer_residuals": self.outer_residuals,
            "topology": self.topology,
            "passed": self.passed,
            "min_margin": self.min_margin,
        }


def neck_layout(prof: MWProfile):
    """Neck coordinates ``(t_a, t_cut, t_blend, t_mid)``.

    Outer charts stop at ``t_cut`` (radius ``r_star / e``); the neck chart starts
    at ``t_a`` so the two overlap on ``(t_a, t_cut)``. Keeping the outer charts
    away from the pole avoids cancellation in their curvature formulas.
    """
    t_a, t_cut = 0.5, 1.0
    t_blend = prof.plateau_t + 0.5
    t_mid = t_blend + 2.0
    return t_a, t_cut, t_blend, t_mid


def _sample_neck_points(t_a, t_mid, count, betas):
    ts = np.linspace(t_a, 2 * t_mid - t_a, count + 2)[1:-1]
    pts = []
    for b in betas:
        for t in ts:
            pts.append((t, b) + NECK_FIBER)
    return np.array(pts)


def _neck_metric(left, right, t_a, t_mid):
    """Glue two half-necks into one chart ``tau in (t_a, 2 t_mid - t_a)``."""
    if isinstance(left, PoleHalf) and isinstance(right, PoleHalf):
        P = MirrorGlue(left.P, right.P, t_mid)
        Q = MirrorGlue(left.Q, right.Q, t_mid)
        return WarpedMetric(P, Q, 1.0, (t_a, 2 * t_mid - t_a), coord="t",
                            gamma=left.metric.gamma, tag="warped-cylinder")

    def fn(p):
        tau, beta, chi = p[:, 0], p[:, 1], p[:, 2]
        on_left = tau <= t_mid
        cl = left.coeffs(np.where(on_left, tau, t_mid), beta, chi)
        cr = right.coeffs(np.where(on_left, t_mid, 2 * t_mid - tau), beta, chi)
        diag = np.where(on_left[:, None], cl, cr)
        g = np.zeros((p.shape[0], 4, 4))
        for a in range(4):
            g[:, a, a] = diag[:, a]
        return g

    box = Box((t_a, 0.0, 0.0, -math.pi), (2 * t_mid - t_a, math.pi, math.pi, math.pi))
    return FunctionMetric(fn, box, {"neck": "function-backed", "t_mid": t_mid})


def _outer_pole_metric(base: WarpedMetric, factors, cuts):
    """``prod u_i^2 base`` on the base interval minus the removed balls."""
    lo, hi = base.interval
    P, Q = [base.radial_sq], [base.fiber_sq]
    for u in factors:
        P += [u, u]
        Q += [u, u]
    lo_c = lo + cuts.get("north", 0.0)
    hi_c = hi - cuts.get("south", 0.0)
    m = base.replace(Product(P), Product(Q), interval=(lo_c, hi_c))
    return m


def _pole_distance_u(base: WarpedMetric, pole, prof: MWProfile):
    lo, hi = base.interval
    dist = linear(1.0, -lo) if pole == "north" else linear(-1.0, hi)
    return Composition(prof.u, dist)


def k1_certificate(metric, points, k1, samples=1000, seed=0):
    blocks = curvature_analytic(metric, points)
    vals = [min_isotropic_curvature(blocks.riemann[i], samples, seed, stream=i)
            for i in range(points.shape[0])]
    est = float(np.min(vals))
    return {"k1": float(k1), "estimate": est, "passed": est >= k1, "samples": int(samples),
            "seed": int(seed)}


def _site_points(piece: Piece, site, r1, count=6):
    base = piece.base_metric()
    if piece.kind == "round":
        lo, hi = base.interval
        rs = np.linspace(0.05 * r1, r1, count)
        xs = lo + rs if site == "north" else hi - rs
        return base, line_points(xs)
    pts = []
    for d in np.linspace(0.05 * r1, r1, count):
        for beta in (0.3, 1.2, 2.5):
            pts.append((d * math.cos(beta), math.sqrt(base.kappa) * d * math.sin(beta), 1.2, 0.3))
    return base, np.array(pts)


def _outer_grid_round(metric: WarpedMetric, count=300):
    lo, hi = metric.interval
    # denser near the ends; base curvature formulas lose accuracy within 1e-3 of a pole
    xs = np.linspace(lo, hi, count + 2)[1:-1]
    extra = []
    for end, sgn in ((lo, 1.0), (hi, -1.0)):
        extra.append(end + sgn * np.geomspace(1e-3, 0.6, 60))
    xs = np.concatenate([xs] + extra)
    xs = xs[(xs > lo) & (xs < hi)]
    return line_points(np.unique(xs))


def _outer_grid_cylinder(metric, s_q, kappa, d_cut, r_out=0.8, count=40):
    lo, hi = metric.domain.lo[0], metric.domain.hi[0]
    pts = []
    for s in np.linspace(lo, hi, count + 2)[1:-1]:
        for psi in (0.05, 0.4, 1.2, 2.4, 3.0):
            pts.append((s, psi, 1.2, 0.3))
    for d in np.geomspace(d_cut * 1.01, r_out, count):
        for beta in np.linspace(0.05, math.pi - 0.05, 7):
            pts.append((s_q + d * math.cos(beta), math.sqrt(kappa) * d * math.sin(beta), 1.2, 0.3))
    p = np.array(pts)
    keep = metric.domain.contains(p)
    return p[keep]


def _overlap_pole(outer: WarpedMetric, half: PoleHalf, neck, t_a, t_cut, left=True, t_mid=None):
    ts = np.linspace(t_a + 0.05, t_cut - 0.05, 12)
    tau = ts if left else 2 * t_mid - ts
    gn = neck.coeffs(np.column_stack([tau, np.full_like(ts, 1.1), np.full_like(ts, 1.2),
                                      np.full_like(ts, 0.3)]))
    r = half.to_outer(ts)
    go = outer.coeffs(line_points(r, (1.1, 1.2, 0.3)))
    drdt = half.prof.r_star * np.exp(-ts)
    pulled = go.copy()
    pulled[:, 0, 0] = go[:, 0, 0] * drdt**2
    scale = np.abs(np.diagonal(gn, axis1=1, axis2=2)).max(axis=1)[:, None, None]
    return float(np.max(np.abs(pulled - gn) / scale))


def _overlap_point(outer, half: PointHalf, neck, t_a, t_cut, left=True, t_mid=None):
    ts = np.repeat(np.linspace(t_a + 0.05, t_cut - 0.05, 6), 3)
    betas = np.tile([0.4, 1.3, 2.6], 6)
    tau = ts if left else 2 * t_mid - ts
    gn = neck.coeffs(np.column_stack([tau, betas, np.full_like(ts, 1.2), np.full_like(ts, 0.3)]))
    s, psi = half.to_outer(ts, betas)
    go = outer.coeffs(np.column_stack([s, psi, np.full_like(ts, 1.2), np.full_like(ts, 0.3)]))
    d = half.prof.r_star * np.exp(-ts)
    k = math.sqrt(half.kappa)
    J = np.zeros((ts.size, 4, 4))
    J[:, 0, 0] = -d * np.cos(betas)
    J[:, 0, 1] = -d * np.sin(betas)
    J[:, 1, 0] = -k * d * np.sin(betas)
    J[:, 1, 1] = k * d * np.cos(betas)
    J[:, 2, 2] = 1.0
    J[:, 3, 3] = 1.0
    pulled = np.einsum("nai,nab,nbj->nij", J, go, J)
    scale = np.abs(np.diagonal(gn, axis1=1, axis2=2)).max(axis=1)[:, None, None]
    return float(np.max(np.abs(pulled - gn) / scale))


def outer_identity_residual(outer, base, sites, r1, count=200):
    """Max coefficient difference between a deformed outer chart and the base
    metric at distance >= r1 from every used site."""
    if isinstance(base, WarpedMetric) and base.tag != "warped-cylinder":
        lo, hi = base.interval
        xs = np.linspace(lo + (r1 if "north" in sites else 0.0), hi - (r1 if "south" in sites else 0.0),
                         count + 2)[1:-1]
        pts = line_points(xs)
    else:
        pts = _outer_grid_cylinder(outer, 0.0, base.kappa, r1, r_out=3.0, count=count // 5)
        d = np.hypot(pts[:, 0], pts[:, 1] / math.sqrt(base.kappa))
        pts = pts[d >= r1]
    return float(np.max(np.abs(outer.coeffs(pts) - base.coeffs(pts))))


def _validate_tree(n_pieces, joins, pieces):
    if len(joins) != n_pieces - 1:
        raise MWError("joins must form a tree over the principal sphere and the pieces")
    parent = list(range(n_pieces))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    used = set()
    for j in joins:
        if j.a == j.b:
            raise MWError("self-joins are not part of a canonical assembly tree")
        for idx, site in ((j.a, j.a_site), (j.b, j.b_site)):
            if not 0 <= idx < n_pieces:
                raise MWError(f"join references unknown piece {idx}")
            if site not in pieces[idx].sites():
                raise MWError(f"piece {idx} has no attachment site {site!r}")
            if (idx, site) in used:
                raise MWError(f"attachment site {site!r} of piece {idx} used twice")
            used.add((idx, site))
        ra, rb = find(j.a), find(j.b)
        if ra == rb:
            raise MWError("join graph has a cycle")
        parent[ra] = rb
    if len({find(i) for i in range(n_pieces)}) != 1:
        raise MWError("join graph is disconnected")


def canonical_assembly(principal: Piece | None = None, pieces=(), joins=(), profile: MWProfile | None = None,
                       k1=0.1, r1=0.5, rho=0.02, seed=0, threads=1, frame_samples=1000,
                       neck_count=600):
    """Assemble and certify a principal round sphere with pieces joined along a tree."""
    principal = principal or Piece("round", name="principal")
    if principal.kind != "round" or principal.gamma != "trivial":
        raise MWError("the principal piece is the round 4-sphere")
    all_pieces = [principal] + list(pieces)
    joins = [j if isinstance(j, Join) else Join(**j) for j in joins]
    _validate_tree(len(all_pieces), joins, all_pieces)
    prof = profile or mw_build_profile(k1, r1, rho)
    t_a, t_cut, t_blend, t_mid = neck_layout(prof)
    rho_cut = prof.r_star * math.exp(-t_cut)

    # k1 certificates at every used site
    certs = []
    for j in joins:
        for idx, site in ((j.a, j.a_site), (j.b, j.b_site)):
            base, pts = _site_points(all_pieces[idx], site, prof.r1)
            c = k1_certificate(base, pts, prof.k1, frame_samples, seed)
            c.update({"piece": idx, "site": site})
            certs.append(c)
            if not c["passed"]:
                raise MWError(f"isotropic curvature estimate {c['estimate']:.4g} below k1 at piece "
                              f"{idx} site {site}")

    used = {}
    for j in joins:
        used.setdefault(j.a, []).append(j.a_site)
        used.setdefault(j.b, []).append(j.b_site)

    charts, outers, halves, outer_res = [], {}, {}, []
    for idx, piece in enumerate(all_pieces):
        base = piece.base_metric()
        sites = used.get(idx, [])
        name = piece.name or ("principal" if idx == 0 else f"piece{idx}")
        if piece.kind == "round":
            factors = [_pole_distance_u(base, s, prof) for s in sites]
            cuts = {s: rho_cut for s in sites}
            m = _outer_pole_metric(base, factors, cuts)
            charts.append(Chart(f"{name}:outer", m, "outer", _outer_grid_round(m)))
            for s in sites:
                halves[(idx, s)] = PoleHalf(base, s, prof, t_blend)
        else:
            if len(sites) > 1:
                raise MWError("cylinder pieces carry a single attachment site")
            if sites:
                f = PointDistanceField(Composition(Elementary("log", amplitude=-1.0), prof.u),
                                       0.0, base.kappa)
                m = ConformalMetric(base, f, meta={"removed_ball": rho_cut})
                halves[(idx, "q")] = PointHalf(base.kappa, 0.0, prof, t_blend)
            else:
                m = base
            charts.append(Chart(f"{name}:outer", m, "outer",
                                _outer_grid_cylinder(m, 0.0, base.kappa, rho_cut),
                                meta={"removed_ball_radius": rho_cut}))
        outers[idx] = charts[-1]
        if sites:
            outer_res.append({"chart": charts[-1].name, "radius": prof.r1,
                              "residual": outer_identity_residual(m, base, sites, prof.r1)})

    overlaps, necks = [], []
    for k, j in enumerate(joins):
        left, right = halves[(j.a, j.a_site)], halves[(j.b, j.b_site)]
        neck = _neck_metric(left, right, t_a, t_mid)
        analytic = isinstance(neck, WarpedMetric)
        betas = (1.1,) if analytic else (0.15, 0.8, 1.6, 2.4, 3.0)
        pts = _sample_neck_points(t_a, t_mid, neck_count, betas)
        charts.append(Chart(f"neck{k}", neck, "neck", pts, "analytic" if analytic else "fd",
                            meta={"join": k, "fiber_isometry": j.fiber_isometry}))
        for side, half, idx in (("left", left, j.a), ("right", right, j.b)):
            outer = outers[idx].metric
            fn = _overlap_pole if isinstance(half, PoleHalf) else _overlap_point
            res = fn(outer, half, neck, t_a, t_cut, left=(side == "left"), t_mid=t_mid)
            overlaps.append({"neck": k, "side": side, "chart": outers[idx].name,
                             "map": "r = r_star exp(-t)" if isinstance(half, PoleHalf)
                             else "(s, psi) = (d cos beta, sqrt(kappa) d sin beta), d = r_star exp(-t)",
                             "relative_residual": res})
        necks.append({"neck": k, "radius": prof.neck_radius, "t_range": [t_a, 2 * t_mid - t_a]})

    certs_out = []
    for ch in charts:
        rep = certify_samples(ch.name, [ch.metric], [0.0], ch.points, ("PIC",), 0.0,
                              threads=threads, backend=ch.backend)
        certs_out.append(rep)
        if ch.role == "neck":
            necks[ch.meta["join"]]["min_margin"] = rep.min_margin
            necks[ch.meta["join"]]["passed"] = rep.passed
    return CanonicalAssembly(principal, list(pieces), joins, charts, overlaps, necks, certs_out,
                             certs, topology=f"{len(all_pieces)} pieces, {len(joins)} necks",
                             outer_residuals=outer_res)


def mw_connect(m1: Piece, site1, m2: Piece | None, site2, profile1=None, profile2=None,
               fiber_isometry="identity", k1=0.1, r1=0.5, rho=0.02, seed=0, frame_samples=1000,
               neck_count=600):
    """Join two pieces (or one piece to itself when ``m2`` is None)."""
    prof = profile1 or mw_build_profile(k1, r1, rho)
    if profile2 is not None and abs(profile2.neck_radius - prof.neck_radius) > 1e-9 * prof.neck_radius:
        raise MWError("both sides of a join need the same neck radius")
    if m2 is not None and m1.gamma != m2.gamma:
        raise MWError(f"fiber group labels differ: {m1.gamma!r} vs {m2.gamma!r}")
    if m2 is not None:
        return canonical_assembly(m1, [m2], [Join(0, site1, 1, site2, fiber_isometry)], prof,
                                  seed=seed, frame_samples=frame_samples, neck_count=neck_count)
    return _self_join(m1, site1, site2, prof, fiber_isometry, seed, frame_samples, neck_count)


def _self_join(piece: Piece, site1, site2, prof, fiber_isometry, seed, frame_samples, neck_count):
    if piece.kind != "round" or {site1, site2} != {"north", "south"}:
        raise MWError("self-joins are supported between the two poles of a round piece")
    base = piece.base_metric()
    t_a, t_cut, t_blend, t_mid = neck_layout(prof)
    rho_cut = prof.r_star * math.exp(-t_cut)
    certs = []
    for s in ("north", "south"):
        b, pts = _site_points(piece, s, prof.r1)
        c = k1_certificate(b, pts, prof.k1, frame_samples, seed)
        c.update({"piece": 0, "site": s})
        certs.append(c)
        if not c["passed"]:
            raise MWError("isotropic curvature estimate below k1")
    factors = [_pole_distance_u(base, s, prof) for s in ("north", "south")]
    outer = _outer_pole_metric(base, factors, {"north": rho_cut, "south": rho_cut})
    left, right = PoleHalf(base, site1, prof, t_blend), PoleHalf(base, site2, prof, t_blend)
    neck = _neck_metric(left, right, t_a, t_mid)
    charts = [Chart("outer", outer, "outer", _outer_grid_round(outer)),
              Chart("neck0", neck, "neck", _sample_neck_points(t_a, t_mid, neck_count, (1.1,)),
                    meta={"join": 0, "fiber_isometry": fiber_isometry})]
    overlaps = []
    for side, half in (("left", left), ("right", right)):
        overlaps.append({"neck": 0, "side": side, "chart": "outer", "map": "r = r_star exp(-t)",
                         "relative_residual": _overlap_pole(outer, half, neck, t_a, t_cut,
                                                            side == "left", t_mid)})
    reps = [certify_samples(c.name, [c.metric], [0.0], c.points, ("PIC",)) for c in charts]
    outer_res = [{"chart": "outer", "radius": prof.r1,
                  "residual": outer_identity_residual(outer, base, ("north", "south"), prof.r1)}]
    necks = [{"neck": 0, "radius": prof.neck_radius, "t_range": [t_a, 2 * t_mid - t_a],
              "min_margin": reps[1].min_margin, "passed": reps[1].passed}]
    return CanonicalAssembly(piece, [], [Join(0, site1, 0, site2, fiber_isometry)], charts, overlaps,
                             necks, reps, certs,
                             topology="mapping torus: S^3/Gamma x S^1 pattern "
                                      f"(gluing map {fiber_isometry})",
                             outer_residuals=outer_res)


def near_tip_distance(neck: WarpedMetric, radius, plateau_t, k=2, count=40):
    """C^k distance of a round-round neck chart to the cylinder of the given radius.

    Sampled on the deep-neck region ``plateau_t <= t`` on both halves.
    """
    target = WarpedMetric(Constant(radius**2), Constant(radius**2), neck.kappa, neck.interval,
                          coord=neck.coord)
    lo, hi = neck.interval
    t_mid = 0.5 * (lo + hi)
    xs = np.linspace(plateau_t, 2 * t_mid - plateau_t, count)
    return ck_distance(neck, target, k, line_points(xs))
