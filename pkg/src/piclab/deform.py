"""Explicit isotopy paths between rotationally symmetric metrics."""
from __future__ import annotations

import numpy as np

from .curvature import (
    ck_distance,
    classify_curvature,
    curvature_analytic,
    curvature_fd,
)
from .metrics import AxisField, ConformalMetric, FunctionMetric, WarpedMetric, cylinder, line_points
from .paths import CompositePath, IsotopyPath, PathError, default_points
from .profiles import (
    Composition,
    Constant,
    Elementary,
    Integral,
    Product,
    Reciprocal,
    Smoothstep,
    Sum,
    as_profile,
)


def plateau_bump(height, inner, outer, base=1.0):
    """``base + height`` on |r| <= inner, ``base`` on |r| >= outer, smooth and even."""
    up = Smoothstep(-outer, -inner, 0.0, 1.0)
    down = Smoothstep(inner, outer, 1.0, 0.0)
    return Sum([Constant(base - height), Product([Constant(height), up]),
                Product([Constant(height), down])])


def pic_precheck(metric, points, what="input"):
    blocks = curvature_analytic(metric, points)
    rep = classify_curvature(blocks)
    i = int(np.argmin(rep.pic_margin))
    if not rep.pic_margin[i] > 0:
        raise PathError(f"{what} metric is not PIC: margin {rep.pic_margin[i]:.4g} at "
                        f"{np.atleast_2d(points)[i].tolist()}")
    return float(rep.pic_margin[i])


def _omega_of(metric: WarpedMetric, q_ref):
    if q_ref == 1.0 and getattr(metric, "omega", None) is not None:
        return metric.omega
    return Composition(Elementary("sqrt"), Product([Constant(1.0 / q_ref), metric.fiber_sq]))


def warped_flatten_path(metric: WarpedMetric, b=None, symmetric=False, periodic=False,
                        q_ref=1.0, check_count=400, period=None, omega=None,
                        precheck=True) -> IsotopyPath:
    """Two-stage flattening of ``P dr^2 + Q dtheta^2`` to ``P dr^2 + q_ref dtheta^2``.

    Stage 1 (mu <= 1/2) rescales conformally by ``(1 - 2mu + 2mu/omega)^2`` with
    ``omega = sqrt(Q / q_ref)``; stage 2 interpolates the radial coefficient.
    An explicit ``omega`` (equal to ``sqrt(Q / q_ref)`` only where it differs
    from 1) flattens just that region; the fiber then ends at ``Q / omega^2``.
    ``precheck=False`` skips the input PIC check so a failing input can be
    certified and localized.
    """
    if not isinstance(metric, WarpedMetric):
        raise PathError("warped flattening needs a warped chart")
    lo, hi = metric.interval
    pts = default_points(metric.domain, check_count)
    xs = pts[:, 0]
    explicit = omega is not None
    omega = as_profile(omega) if explicit else _omega_of(metric, float(q_ref))
    w = omega(xs)
    if np.any(w <= 0):
        raise PathError("warping function must be positive")
    if precheck:
        pic_precheck(metric, pts)
    if b is None and not (symmetric or periodic):
        raise PathError("fixed-end radius b is required unless a symmetry flag is set")
    fixed = []
    if b is not None:
        band = np.abs(xs) > b
        dev = np.max(np.abs(w[band] - 1.0)) if np.any(band) else 0.0
        if dev > 1e-14:
            raise PathError(f"omega differs from 1 on the end bands |r| > {b} (by {dev:.3e})")
        fixed = [(lo, -b), (b, hi)]
    if symmetric:
        asym = np.max(np.abs(omega(xs) - omega(-xs)))
        if asym > 1e-12:
            raise PathError(f"symmetric flag set but omega is not even (asymmetry {asym:.3e})")
    if periodic:
        per = 2 * np.pi if period is None else float(period)
        gap = np.max(np.abs(omega(xs) - omega(xs + per)))
        if gap > 1e-12:
            raise PathError("periodic flag set but omega is not periodic")

    inv = Reciprocal(omega, 0.5 * float(np.min(w)))
    P, Q = metric.radial_sq, metric.fiber_sq
    fiber_end = Product([Q, inv, inv]) if explicit else Constant(q_ref)

    def build(mu):
        if mu <= 0.5:
            u = Sum([Constant(1.0 - 2.0 * mu), Product([Constant(2.0 * mu), inv])])
            return metric.replace(Product([P, u, u]), Product([Q, u, u]))
        a = 2.0 - 2.0 * mu
        radial = Sum([Product([Constant(a), P, inv, inv]), Product([Constant(2.0 * mu - 1.0), P])])
        return metric.replace(radial, fiber_end)

    end = metric.replace(P, fiber_end)
    upsilon = Integral(Product([Composition(Elementary("sqrt"), P), inv]), x0=0.0)
    meta = {}
    if periodic:
        meta["quotient"] = "translation by the period" if not symmetric else "reflection r -> -r"
        meta["period"] = float(2 * np.pi if period is None else period)
    if symmetric:
        meta["symmetric"] = True
    return IsotopyPath(
        "warped-flatten", build, metric, end, fixed,
        closure={"omega": omega.to_dict(), "q_ref": float(q_ref), "b": b},
        reparametrization={"at_mu": 0.5, "coordinate": "upsilon", "upsilon": upsilon.to_dict(),
                           "note": "mu = 1/2 member is d upsilon^2 + q_ref dtheta^2"},
        meta=meta,
    )


def upsilon_map(path: IsotopyPath):
    from .profiles import profile_from_dict

    return profile_from_dict(path.reparametrization["upsilon"])


# -- star-shaped conformal path ---------------------------------------------

def _neg_log(u):
    return Composition(Elementary("log", amplitude=-1.0), u)


def star_shaped_path(base: WarpedMetric, u, check_count=200) -> IsotopyPath:
    """``g_mu = (1 - mu + mu u)^2 base`` for a positive profile ``u`` of the first coordinate."""
    u = as_profile(u)
    pts = default_points(base.domain, check_count)
    if np.any(u(pts[:, 0]) <= 0):
        raise PathError("conformal factor must be positive")
    start_sigma = curvature_analytic(base, pts).sigma
    end = ConformalMetric(base, AxisField(_neg_log(u)))
    end_sigma = curvature_analytic(end, pts).sigma
    for name, s in (("base", start_sigma), ("u^2 base", end_sigma)):
        i = int(np.argmin(s))
        if not s[i] > 0:
            raise PathError(f"endpoint {name} is not PIC: sigma {s[i]:.4g} at {pts[i].tolist()}")

    def build(mu):
        if mu == 0.0:
            return base
        u_mu = Sum([Constant(1.0 - mu), Product([Constant(mu), u])])
        return ConformalMetric(base, AxisField(_neg_log(u_mu)))

    return IsotopyPath("star-conformal", build, base, end, closure={"u": u.to_dict()})


def star_identity_residual(path: IsotopyPath, mus, xs, backend="fd"):
    """Max of |u_mu^3 sigma_mu - mu (-6 Lap u + sigma u) - (1 - mu) sigma| on the grid."""
    from .profiles import profile_from_dict

    base = path.start
    u = profile_from_dict(path.closure["u"])
    pts = line_points(xs)
    sig = curvature_analytic(base, pts).sigma
    uu = u(pts[:, 0])
    lap = base.laplacian(u, pts[:, 0])
    worst = 0.0
    for mu in mus:
        m = path.member(mu)
        s_mu = (curvature_fd(m, pts) if backend == "fd" else curvature_analytic(m, pts)).sigma
        u_mu = 1.0 - mu + mu * uu
        lhs = u_mu**3 * s_mu
        rhs = mu * (-6.0 * lap + sig * uu) + (1.0 - mu) * sig
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


# -- blends ----------------------------------------------------------------

def _blend(a, b, mu, chi=None):
    """Profile ``(1 - mu chi) a + mu chi b``; exact at mu = 0 and where chi is 0 or 1."""
    if chi is None:
        return Sum([Product([Constant(1.0 - mu), a]), Product([Constant(mu), b])])
    w = Product([Constant(mu), chi])
    return Sum([Product([Sum([Constant(1.0), Product([Constant(-1.0), w])]), a]), Product([w, b])])


def blend_warped(h0: WarpedMetric, h1: WarpedMetric, mu, chi=None, **kw):
    if h0.kappa != h1.kappa:
        raise PathError("blended warped metrics need equal fiber curvature")
    return h0.replace(_blend(h0.radial_sq, h1.radial_sq, mu, chi),
                      _blend(h0.fiber_sq, h1.fiber_sq, mu, chi), **kw)


def blend_function_metric(h0, h1, mu, chi=None):
    def fn(p):
        w = mu * (np.ones(p.shape[0]) if chi is None else chi(p[:, 0]))
        return (1.0 - w)[:, None, None] * h0.coeffs(p) + w[:, None, None] * h1.coeffs(p)

    return FunctionMetric(fn, h0.domain, {"blend": mu})


def linear_blend_path(h0, h1, cutoff=None, transform=None, fixed_region=()) -> IsotopyPath:
    """``(1 - mu chi) h0 + mu chi h1`` (``chi = 1`` without a cutoff), optionally
    post-composed with a metric transform such as surgery."""
    warped = isinstance(h0, WarpedMetric) and isinstance(h1, WarpedMetric)
    chi = as_profile(cutoff) if cutoff is not None else None

    def raw(mu):
        if mu == 0.0:
            return h0
        if warped:
            return blend_warped(h0, h1, mu, chi)
        return blend_function_metric(h0, h1, mu, chi)

    def build(mu):
        m = raw(mu)
        return transform(m) if transform is not None else m

    kind = "cutoff-blend" if cutoff is not None else "linear-blend"
    closure = {"cutoff": chi.to_dict()} if chi is not None else {}
    if transform is not None:
        closure["transform"] = getattr(transform, "label", "transform")
    return IsotopyPath(kind, build, build(0.0), build(1.0), fixed_region, closure=closure)


# -- neck straightening ------------------------------------------------------

def central_scale(metric: WarpedMetric, kappa_std=1.0 / 6.0):
    """Scale ``h`` with ``metric ~ h^2 h_std`` read off the central fiber."""
    c = 0.5 * (metric.interval[0] + metric.interval[1])
    q = float(metric.fiber_sq(np.array([c]))[0]) * kappa_std / metric.kappa
    return float(np.sqrt(q))


def tube_straighten_path(metric: WarpedMetric, eps_neck=0.02, band=1.0, check_order=2,
                         ck_points=None):
    """Blend the ends of a near-neck to ``h^2 h_std`` then flatten the interior."""
    if not isinstance(metric, WarpedMetric):
        raise PathError("tube straightening works on warped charts")
    lo, hi = metric.interval
    s = central_scale(metric)
    target = cylinder(metric.kappa, metric.interval, scale=s, gamma=metric.gamma, coord=metric.coord)
    grid = ck_points if ck_points is not None else line_points(np.linspace(lo + 0.5, hi - 0.5, 41))
    for k in range(check_order + 1):
        d = ck_distance(metric, target, k, grid, normalize=True)
        if d >= eps_neck:
            raise PathError(f"neck closeness fails at derivative order {k}: {d:.3e} >= {eps_neck}")
    # chi = 1 on the end bands |x| >= L - band, 0 on |x| <= L - 2 band
    L = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    sq = Product([Sum([Elementary("identity"), Constant(-mid)])] * 2)
    chi = Composition(Smoothstep((L - 2 * band) ** 2, (L - band) ** 2, 0.0, 1.0), sq)
    stage_a = linear_blend_path(metric, target, cutoff=chi)
    warped_end = stage_a.end
    stage_b = warped_flatten_path(warped_end, b=L - band, q_ref=s * s,
                                  check_count=400) if mid == 0.0 else None
    if stage_b is None:
        raise PathError("tube straightening expects a chart centred at 0")
    pts = default_points(metric.domain, 200)
    path = CompositePath([stage_a, stage_b], fixed_region=(), check_points=pts)
    path.closure = {"scale": s, "band": band, "end_bands": [[lo, lo + band], [hi - band, hi]],
                    "end_band_rule": "(1 - mu) g + mu h^2 h_std during stage A, then constant"}
    return path
