"""Structured 4-metrics on coordinate boxes.

Coordinates are ``(x, psi, chi, phi)``: ``x`` is the radial/axial coordinate
(``r`` or ``s``) and the last three are hyperspherical angles on the fiber.
The fiber metric ``dtheta^2`` of constant curvature ``kappa`` is
``(1/kappa) * (dpsi^2 + sin^2 psi dchi^2 + sin^2 psi sin^2 chi dphi^2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .profiles import (
    Constant,
    Elementary,
    Product,
    Profile,
    as_profile,
    profile_from_dict,
)

SCHEMA_VERSION = 1
FIBER_POINT = (1.1, 1.2, 0.3)
ANGLE_BOX = ((0.0, math.pi), (0.0, math.pi), (-math.pi, math.pi))


class MetricError(ValueError):
    pass


@dataclass
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        self.lo = tuple(float(v) for v in self.lo)
        self.hi = tuple(float(v) for v in self.hi)
        if len(self.lo) != 4 or len(self.hi) != 4:
            raise MetricError("chart domains are 4-dimensional boxes")

    def contains(self, points, margin=0.0) -> np.ndarray:
        p = np.atleast_2d(points)
        m = np.broadcast_to(np.asarray(margin, dtype=float), (4,))
        return np.all((p > np.array(self.lo) + m) & (p < np.array(self.hi) - m), axis=-1)

    def to_dict(self):
        return {"lo": list(self.lo), "hi": list(self.hi)}


def axis_box(lo, hi) -> Box:
    return Box((lo,) + tuple(a for a, _ in ANGLE_BOX), (hi,) + tuple(b for _, b in ANGLE_BOX))


def line_points(xs, fiber=FIBER_POINT) -> np.ndarray:
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    pts = np.empty((xs.size, 4))
    pts[:, 0] = xs
    pts[:, 1:] = fiber
    return pts


def _fiber_shape(points):
    """Angular factors of the unit round S^3 metric and their partials."""
    psi, chi = points[:, 1], points[:, 2]
    sp, cp, sc, cc = np.sin(psi), np.cos(psi), np.sin(chi), np.cos(chi)
    shape = np.stack([np.ones_like(psi), sp**2, sp**2 * sc**2], axis=-1)
    d_psi = np.stack([np.zeros_like(psi), 2 * sp * cp, 2 * sp * cp * sc**2], axis=-1)
    d_chi = np.stack([np.zeros_like(psi), np.zeros_like(psi), 2 * sp**2 * sc * cc], axis=-1)
    return shape, d_psi, d_chi


class ChartMetric:
    """Base class: metric coefficients on a box with a structure tag."""

    tag = "abstract"
    gamma = "trivial"
    domain: Box

    def coeffs(self, points) -> np.ndarray:
        raise NotImplementedError

    def check_positive(self, points):
        g = self.coeffs(points)
        lam = np.linalg.eigvalsh(g)[:, 0]
        if not np.all(lam > 0):
            i = int(np.argmin(lam))
            raise MetricError(
                f"metric not positive definite at {np.atleast_2d(points)[i].tolist()} "
                f"(smallest eigenvalue {lam[i]:.3e})"
            )
        return lam

    def has_analytic(self) -> bool:
        return hasattr(self, "riemann")

    def to_dict(self) -> dict:
        raise NotImplementedError


def warped_sectional(P, P1, P2, Q, Q1, Q2, kappa):
    """Sectional curvatures of ``P dx^2 + Q dtheta_kappa^2`` from coefficient jets."""
    if np.any(P <= 0) or np.any(Q <= 0):
        raise MetricError("warped metric needs positive radial and fiber coefficients")
    sP, sQ = np.sqrt(P), np.sqrt(Q)
    w_s = Q1 / (2.0 * sP * sQ)
    dw_s = Q2 / (2.0 * sP * sQ) - Q1 * (P1 * Q + P * Q1) / (4.0 * (P * Q) ** 1.5)
    w_ss = dw_s / sP
    return -w_ss / sQ, (kappa - w_s**2) / Q


class WarpedMetric(ChartMetric):
    """Rotationally symmetric metric ``P(x) dx^2 + Q(x) dtheta_kappa^2``.

    ``P = 1`` and ``Q = omega^2`` is the warped product ``dr^2 + omega^2 dtheta^2``;
    a general ``P`` stores a metric whose arclength reparametrization is warped.
    """

    def __init__(self, radial_sq, fiber_sq, kappa, interval, gamma="trivial",
                 tag="warped-cylinder", coord="r", periodic=None, meta=None):
        self.radial_sq = as_profile(radial_sq)
        self.fiber_sq = as_profile(fiber_sq)
        self.kappa = float(kappa)
        if self.kappa <= 0:
            raise MetricError("fiber curvature kappa must be positive")
        self.interval = (float(interval[0]), float(interval[1]))
        self.domain = axis_box(*self.interval)
        self.gamma = str(gamma)
        self.tag = tag
        self.coord = coord
        self.periodic = periodic
        self.meta = dict(meta or {})

    @classmethod
    def from_warping(cls, omega, kappa, interval, **kw):
        omega = as_profile(omega)
        m = cls(Constant(1.0), Product([omega, omega]), kappa, interval, **kw)
        m.omega = omega
        return m

    def replace(self, radial_sq=None, fiber_sq=None, **kw):
        args = dict(gamma=self.gamma, tag=self.tag, coord=self.coord,
                    periodic=self.periodic, meta=self.meta)
        args.update(kw)
        return WarpedMetric(
            self.radial_sq if radial_sq is None else radial_sq,
            self.fiber_sq if fiber_sq is None else fiber_sq,
            args.pop("kappa", self.kappa), args.pop("interval", self.interval), **args,
        )

    def profile_jets(self, x):
        return self.radial_sq.jet(x), self.fiber_sq.jet(x)

    def coeffs(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        P = self.radial_sq(p[:, 0])
        Q = self.fiber_sq(p[:, 0])
        shape, _, _ = _fiber_shape(p)
        g = np.zeros((p.shape[0], 4, 4))
        g[:, 0, 0] = P
        for a in range(3):
            g[:, a + 1, a + 1] = Q / self.kappa * shape[:, a]
        return g

    def diag_derivs(self, points):
        """Diagonal coefficients ``g_aa`` (N,4) and partials ``d_b g_aa`` (N,4,4)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        (P, P1, _), (Q, Q1, _) = self.profile_jets(p[:, 0])
        shape, d_psi, d_chi = _fiber_shape(p)
        g = np.empty((p.shape[0], 4))
        dg = np.zeros((p.shape[0], 4, 4))  # dg[:, a, b] = d_b g_aa
        g[:, 0] = P
        dg[:, 0, 0] = P1
        k = self.kappa
        g[:, 1:] = Q[:, None] / k * shape
        dg[:, 1:, 0] = Q1[:, None] / k * shape
        dg[:, 1:, 1] = Q[:, None] / k * d_psi
        dg[:, 1:, 2] = Q[:, None] / k * d_chi
        return g, dg

    def sectional(self, x):
        """Radial and fiber sectional curvatures ``(-w_ss/w, (kappa - w_s^2)/w^2)``."""
        (P, P1, P2), (Q, Q1, Q2) = self.profile_jets(np.asarray(x, dtype=float))
        return warped_sectional(P, P1, P2, Q, Q1, Q2, self.kappa)

    def operator6(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        k_rad, k_fib = self.sectional(p[:, 0])
        op = np.zeros((p.shape[0], 6, 6))
        for i in range(3):
            op[:, i, i] = k_rad
            op[:, i + 3, i + 3] = k_fib
        return op

    def riemann(self, points):
        from .curvature import riemann_from_operator6

        return riemann_from_operator6(self.operator6(points))

    def laplacian(self, u: Profile, x):
        """Laplace-Beltrami of a function of ``x`` alone."""
        (P, P1, _), (Q, Q1, _) = self.profile_jets(np.asarray(x, dtype=float))
        _, u1, u2 = u.jet(x)
        return u2 / P + u1 * (1.5 * Q1 / Q - 0.5 * P1 / P) / P

    def to_dict(self):
        d = {
            "schema_version": SCHEMA_VERSION,
            "tag": self.tag,
            "coord": self.coord,
            "interval": list(self.interval),
            "kappa": self.kappa,
            "gamma": self.gamma,
            "radial_sq": self.radial_sq.to_dict(),
            "fiber_sq": self.fiber_sq.to_dict(),
        }
        if getattr(self, "omega", None) is not None:
            d["omega"] = self.omega.to_dict()
        if self.periodic is not None:
            d["periodic"] = self.periodic
        if self.meta:
            d["meta"] = dict(self.meta)
        return d


class ScalarField:
    """A function on a chart with coordinate gradient and Hessian."""

    def derivs(self, points):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


class AxisField(ScalarField):
    """``profile(x)`` depending on the first coordinate only."""

    def __init__(self, profile: Profile):
        self.profile = as_profile(profile)

    def derivs(self, points):
        p = np.atleast_2d(points)
        v, d1, d2 = self.profile.jet(p[:, 0])
        n = p.shape[0]
        grad = np.zeros((n, 4))
        hess = np.zeros((n, 4, 4))
        grad[:, 0] = d1
        hess[:, 0, 0] = d2
        return v, grad, hess

    def to_dict(self):
        return {"kind": "axis", "profile": self.profile.to_dict()}


class PointDistanceField(ScalarField):
    """``profile(d)`` with ``d`` the product distance on R x S^3(kappa) to the point
    ``(x = center, psi = 0)``."""

    def __init__(self, profile: Profile, center: float, kappa: float):
        self.profile = as_profile(profile)
        self.center = float(center)
        self.kappa = float(kappa)

    def distance(self, points):
        p = np.atleast_2d(points)
        return np.sqrt((p[:, 0] - self.center) ** 2 + p[:, 1] ** 2 / self.kappa)

    def derivs(self, points):
        p = np.atleast_2d(points)
        n = p.shape[0]
        d = self.distance(p)
        w = np.array([1.0, 1.0 / self.kappa])
        dd = np.zeros((n, 4))
        dd[:, 0] = (p[:, 0] - self.center) / d
        dd[:, 1] = p[:, 1] / (self.kappa * d)
        ddd = np.zeros((n, 4, 4))
        for a in range(2):
            for b in range(2):
                ddd[:, a, b] = ((w[a] if a == b else 0.0) - dd[:, a] * dd[:, b]) / d
        v, f1, f2 = self.profile.jet(d)
        grad = f1[:, None] * dd
        hess = f2[:, None, None] * dd[:, :, None] * dd[:, None, :] + f1[:, None, None] * ddd
        return v, grad, hess

    def to_dict(self):
        return {"kind": "point-distance", "center": self.center, "kappa": self.kappa,
                "profile": self.profile.to_dict()}


def field_from_dict(d) -> ScalarField:
    if d.get("kind") == "point-distance":
        return PointDistanceField(profile_from_dict(d["profile"]), d["center"], d["kappa"])
    if d.get("kind") == "axis":
        return AxisField(profile_from_dict(d["profile"]))
    return AxisField(profile_from_dict(d))


class ConformalMetric(ChartMetric):
    """``exp(-2 f) * base`` for a warped ``base`` and a scalar field ``f``."""

    tag = "conformal-over-base"

    def __init__(self, base: WarpedMetric, f, meta=None):
        if not isinstance(base, WarpedMetric):
            raise MetricError("conformal-over-base needs a warped base metric")
        self.base = base
        self.f = f if isinstance(f, ScalarField) else AxisField(f)
        self.domain = base.domain
        self.gamma = base.gamma
        self.meta = dict(meta or {})

    def coeffs(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        v, _, _ = self.f.derivs(p)
        return np.exp(-2.0 * v)[:, None, None] * self.base.coeffs(p)

    def frame_derivatives(self, points):
        """Value, gradient and covariant Hessian of ``f`` in the base orthonormal frame."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        v, grad, hess = self.f.derivs(p)
        g, dg = self.base.diag_derivs(p)
        # Christoffels of a diagonal metric, contracted with df:
        # Gamma^c_ab f_c for all a, b.
        n = p.shape[0]
        gam_f = np.zeros((n, 4, 4))
        fc = grad / g  # f_c / g_cc
        for a in range(4):
            for b in range(4):
                if a == b:
                    # Gamma^a_aa f_a + sum_{c != a} Gamma^c_aa f_c
                    t = 0.5 * dg[:, a, a] * fc[:, a]
                    for c in range(4):
                        if c != a:
                            t = t - 0.5 * dg[:, a, c] * fc[:, c]
                    gam_f[:, a, a] = t
                else:
                    gam_f[:, a, b] = 0.5 * (dg[:, a, b] * fc[:, a] + dg[:, b, a] * fc[:, b])
        cov = hess - gam_f
        s = np.sqrt(g)
        grad_frame = grad / s
        hess_frame = cov / (s[:, :, None] * s[:, None, :])
        return v, grad_frame, hess_frame

    def riemann(self, points):
        from .curvature import conformal_riemann

        p = np.atleast_2d(np.asarray(points, dtype=float))
        base_r = self.base.riemann(p)
        v, gf, hf = self.frame_derivatives(p)
        return conformal_riemann(base_r, v, gf, hf)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "tag": self.tag,
            "base": self.base.to_dict(),
            "f": self.f.to_dict(),
        }


class ProductSurfaceMetric(ChartMetric):
    """``dx0^2 + phi1(x0)^2 dx1^2 + dx2^2 + phi2(x2)^2 dx3^2``."""

    tag = "product"

    def __init__(self, phi1, phi2, domain: Box, gamma="trivial"):
        self.phi1, self.phi2 = as_profile(phi1), as_profile(phi2)
        self.domain = domain
        self.gamma = gamma

    def coeffs(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        g = np.zeros((p.shape[0], 4, 4))
        g[:, 0, 0] = 1.0
        g[:, 1, 1] = self.phi1(p[:, 0]) ** 2
        g[:, 2, 2] = 1.0
        g[:, 3, 3] = self.phi2(p[:, 2]) ** 2
        return g

    def riemann(self, points):
        from .curvature import riemann_from_operator6

        p = np.atleast_2d(np.asarray(points, dtype=float))
        v1, _, a2 = self.phi1.jet(p[:, 0])
        v2, _, b2 = self.phi2.jet(p[:, 2])
        op = np.zeros((p.shape[0], 6, 6))
        op[:, 0, 0] = -a2 / v1
        op[:, 5, 5] = -b2 / v2
        return riemann_from_operator6(op)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "tag": self.tag,
            "domain": self.domain.to_dict(),
            "gamma": self.gamma,
            "phi1": self.phi1.to_dict(),
            "phi2": self.phi2.to_dict(),
        }


class RawGridMetric(ChartMetric):
    """Coefficients stored on a regular grid; evaluable at grid nodes only."""

    tag = "raw-grid"

    def __init__(self, origin, spacing, values, gamma="trivial"):
        self.origin = np.asarray(origin, dtype=float)
        self.spacing = np.broadcast_to(np.asarray(spacing, dtype=float), (4,)).copy()
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != 6 or self.values.shape[-2:] != (4, 4):
            raise MetricError("raw grid values must have shape (n0, n1, n2, n3, 4, 4)")
        n = np.array(self.values.shape[:4])
        self.domain = Box(self.origin - 0.5 * self.spacing,
                          self.origin + (n - 0.5) * self.spacing)
        self.gamma = gamma

    @classmethod
    def sample(cls, fn, center, spacing, half=2):
        spacing = np.broadcast_to(np.asarray(spacing, dtype=float), (4,))
        origin = np.asarray(center, dtype=float) - half * spacing
        k = np.arange(2 * half + 1)
        grids = np.meshgrid(*[origin[a] + k * spacing[a] for a in range(4)], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        vals = fn(pts).reshape((2 * half + 1,) * 4 + (4, 4))
        return cls(origin, spacing, vals)

    def node_points(self):
        n = self.values.shape[:4]
        grids = np.meshgrid(*[self.origin[a] + np.arange(n[a]) * self.spacing[a]
                              for a in range(4)], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def coeffs(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        idx_f = (p - self.origin) / self.spacing
        idx = np.rint(idx_f).astype(int)
        if np.any(np.abs(idx_f - idx) > 1e-6):
            raise MetricError("raw-grid metric evaluated off the grid nodes")
        n = np.array(self.values.shape[:4])
        if np.any(idx < 0) or np.any(idx >= n):
            raise MetricError("stencil exits the raw grid")
        return self.values[idx[:, 0], idx[:, 1], idx[:, 2], idx[:, 3]]

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "tag": self.tag,
            "origin": self.origin.tolist(),
            "spacing": self.spacing.tolist(),
            "shape": list(self.values.shape),
            "values": self.values.ravel().tolist(),
        }


class FunctionMetric(ChartMetric):
    """Coefficients from a vectorized callable; finite-difference curvature only."""

    tag = "function"

    def __init__(self, fn, domain: Box, description=None, gamma="trivial"):
        self.fn = fn
        self.domain = domain
        self.description = description or {}
        self.gamma = gamma

    def coeffs(self, points):
        return self.fn(np.atleast_2d(np.asarray(points, dtype=float)))

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, "tag": self.tag,
                "domain": self.domain.to_dict(), "description": self.description}


# -- constructors ----------------------------------------------------------

def cylinder(kappa=1.0 / 6.0, interval=(-4.0, 4.0), scale=1.0, gamma="trivial", coord="s",
             periodic=None) -> WarpedMetric:
    """``scale^2 (ds^2 + dtheta_kappa^2)``; kappa = 1/6 gives scalar curvature 1."""
    c = Constant(scale**2)
    return WarpedMetric(c, c, kappa, interval, gamma=gamma, coord=coord, periodic=periodic)


def h_std(interval=(-4.0, 4.0), gamma="trivial") -> WarpedMetric:
    return cylinder(1.0 / 6.0, interval, gamma=gamma)


def round_sphere(radius=1.0, interval=(0.0, math.pi)) -> WarpedMetric:
    """Round S^4 of the given radius in polar form around a pole."""
    omega = Elementary("sin", amplitude=radius, frequency=1.0 / radius)
    m = WarpedMetric.from_warping(omega, 1.0, (interval[0] * radius, interval[1] * radius),
                                  tag="round-sphere-polar")
    return m


def s2xs2(domain=None) -> ProductSurfaceMetric:
    box = domain or Box((0.0, -math.pi, 0.0, -math.pi), (math.pi, math.pi, math.pi, math.pi))
    return ProductSurfaceMetric(Elementary("sin"), Elementary("sin"), box)


def metric_from_dict(d) -> ChartMetric:
    if not isinstance(d, dict):
        raise MetricError("metric description must be a mapping")
    ver = d.get("schema_version", SCHEMA_VERSION)
    if ver != SCHEMA_VERSION:
        raise MetricError(f"unsupported schema_version {ver}")
    tag = d.get("tag")
    if tag in ("warped-cylinder", "round-sphere-polar"):
        if "radial_sq" in d or "fiber_sq" in d:
            m = WarpedMetric(
                profile_from_dict(d.get("radial_sq", {"kind": "constant", "value": 1.0})),
                profile_from_dict(d["fiber_sq"]),
                d["kappa"], d["interval"], gamma=d.get("gamma", "trivial"), tag=tag,
                coord=d.get("coord", "r"), periodic=d.get("periodic"), meta=d.get("meta"),
            )
            if "omega" in d:
                m.omega = profile_from_dict(d["omega"])
            return m
        return WarpedMetric.from_warping(
            profile_from_dict(d["omega"]), d["kappa"], d["interval"],
            gamma=d.get("gamma", "trivial"), tag=tag, coord=d.get("coord", "r"),
            periodic=d.get("periodic"), meta=d.get("meta"),
        )
    if tag == "conformal-over-base":
        return ConformalMetric(metric_from_dict(d["base"]), field_from_dict(d["f"]))
    if tag == "product":
        return ProductSurfaceMetric(profile_from_dict(d["phi1"]), profile_from_dict(d["phi2"]),
                                    Box(d["domain"]["lo"], d["domain"]["hi"]),
                                    gamma=d.get("gamma", "trivial"))
    if tag == "raw-grid":
        vals = np.asarray(d["values"], dtype=float).reshape(d["shape"])
        return RawGridMetric(d["origin"], d["spacing"], vals)
    raise MetricError(f"unknown or non-serializable metric tag {tag!r}")
