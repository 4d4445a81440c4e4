"""Conformal surgery on near-cylindrical necks, the capped model and cap isotopies.

Charts use the first coordinate ``s`` along the neck and the fiber normalised as
in :func:`~piclab.metrics.h_std` (fiber coefficient 1 is the unit-scalar-curvature
cylinder). Inputs to the path constructions are rotationally symmetric.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import ck_distance, classify_curvature, curvature_analytic
from .deform import blend_warped, linear_blend_path, warped_flatten_path
from .metrics import AxisField, ConformalMetric, WarpedMetric, cylinder, h_std, line_points
from .mw import MWProfile, mw_build_profile
from .paths import (
    CertificationReport,
    CompositePath,
    IsotopyPath,
    certify_path,
    certify_samples,
    default_points,
    merge_reports,
)
from .profiles import (
    Composition,
    Constant,
    Elementary,
    ExpBump,
    Integral,
    MirrorGlue,
    Piecewise,
    Product,
    Profile,
    Reparametrization,
    Smoothstep,
    Sum,
    _arr,
    linear,
    profile_from_dict,
    register_kind,
)

SMALLNESS_TOL = 0.05
EPS_DEFAULT = 0.02


class SurgeryError(ValueError):
    pass


# -- surgery factor --------------------------------------------------------

@dataclass
class SurgeryProfile:
    c: float
    q: float
    f: Profile = field(repr=False, default=None)
    cutoff: Profile = field(repr=False, default=None)

    def __post_init__(self):
        if self.f is None:
            self.f = ExpBump(self.c, self.q)
        if self.cutoff is None:
            self.cutoff = Smoothstep(2.0, 3.0, 1.0, 0.0)

    def smallness(self, count=4000):
        """Maxima over ``s in (0, 4]`` of the quantities the positivity argument needs small."""
        s = np.linspace(4.0 / count, 4.0, count)
        f = self.f(s)
        q = self.q
        return {
            "q f / s^2": float(np.max(q * f / s**2)),
            "q^2 f^2 / s^4": float(np.max(q**2 * f**2 / s**4)),
            "2 q f / s^3": float(np.max(2.0 * q * f / s**3)),
        }

    def identity_residual(self, s):
        """Relative residual of ``f'(s) s^2 = q f(s)``."""
        s = _arr(s)
        f, f1, _ = self.f.jet(s)
        return float(np.max(np.abs(f1 * s**2 - self.q * f) / np.maximum(np.abs(self.q * f), 1e-300)))

    def to_dict(self):
        return {"c": self.c, "q": self.q, "f": self.f.to_dict(), "cutoff": self.cutoff.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return surgery_factor(d["c"], d["q"])


def surgery_factor(c=0.1, q=20.0, tol=SMALLNESS_TOL) -> SurgeryProfile:
    if not c > 0:
        raise SurgeryError(f"c must be positive, got {c}")
    if not q > 16:
        raise SurgeryError(f"q must exceed 16, got {q}")
    prof = SurgeryProfile(float(c), float(q))
    small = prof.smallness()
    bad = {k: v for k, v in small.items() if not (np.isfinite(v) and v < tol)}
    if bad:
        raise SurgeryError(f"(c, q) = ({c}, {q}) not admissible: {bad} not below {tol}")
    return prof


def apply_surgery(h: WarpedMetric, profile: SurgeryProfile) -> ConformalMetric:
    """``exp(-2 f(s)) h``; identical to ``h`` on ``s <= 0``."""
    if not isinstance(h, WarpedMetric):
        raise SurgeryError("surgery acts on warped charts")
    return ConformalMetric(h, AxisField(profile.f), meta={"surgery": {"c": profile.c, "q": profile.q}})


# -- closeness --------------------------------------------------------------

def cylinder_closeness(h, eps=EPS_DEFAULT, order=2, xs=None, target=None):
    """Normalised C^k distances to ``h_std`` for k = 0..order; raises on the first failure."""
    lo, hi = h.domain.lo[0], h.domain.hi[0]
    target = target or cylinder(h.kappa if hasattr(h, "kappa") else 1.0 / 6.0, (lo, hi))
    xs = np.linspace(lo + 0.5, hi - 0.5, 41) if xs is None else xs
    pts = line_points(xs)
    out = []
    for k in range(order + 1):
        d = ck_distance(h, target, k, pts, normalize=True)
        out.append(d)
        if not d < eps:
            raise SurgeryError(f"closeness to the standard cylinder fails at derivative order {k}: "
                               f"{d:.3e} >= {eps}")
    return out


def fiber_samples(count, seed=0):
    """Seeded fiber angles ``(psi, chi, phi)`` away from the coordinate poles."""
    rng = np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, 1, 0]))
    u = rng.random((count, 3))
    return np.column_stack([0.1 + (math.pi - 0.2) * u[:, 0], 0.1 + (math.pi - 0.2) * u[:, 1],
                            -math.pi + 2 * math.pi * u[:, 2]])


def verify_prop51(h: WarpedMetric, profile: SurgeryProfile, s_count=200, fiber_count=50, seed=0,
                  eps=EPS_DEFAULT, order=2, s_range=(0.5, 4.0), pinching_constant=None,
                  threads=1) -> CertificationReport:
    """Certify positive curvature operator of ``exp(-2f) h`` and compare with the predicted bound."""
    cylinder_closeness(h, eps, order)
    s = np.linspace(s_range[0], s_range[1], s_count)
    # keep the closed end of the range inside the open chart
    s = np.clip(s, h.domain.lo[0] + 1e-9, h.domain.hi[0] - 1e-9)
    fib = fiber_samples(fiber_count, seed)
    pts = np.array([(x,) + tuple(a) for x in s for a in fib])
    rep_h = classify_curvature(curvature_analytic(h, pts),
                               np.inf if pinching_constant is None else pinching_constant)
    lam = rep_h.pco_margin
    if np.min(lam) < -1e-12:
        i = int(np.argmin(lam))
        raise SurgeryError(f"input curvature operator is not nonnegative: {lam[i]:.3e} at "
                           f"{pts[i].tolist()}")
    hat = apply_surgery(h, profile)
    rep = certify_samples("prop51", [hat], [0.0], pts, ("PCO",), 0.0, threads=threads)
    rep_hat = classify_curvature(curvature_analytic(hat, pts),
                                 np.inf if pinching_constant is None else pinching_constant)
    observed = rep_hat.pco_margin
    f = profile.f(pts[:, 0])
    predicted = lam + profile.q**2 * f / (2.0 * pts[:, 0] ** 4)
    rescaled = np.exp(-2.0 * f) * observed
    raw_ok = observed >= predicted
    res_ok = rescaled >= predicted
    flagged = np.nonzero(~res_ok)[0]
    extra = {
        "closeness": cylinder_closeness(h, eps, order),
        "predicted_bound": {
            "raw_fraction": float(np.mean(raw_ok)),
            "rescaled_fraction": float(np.mean(res_ok)),
            "min_rescaled_minus_predicted": float(np.min(rescaled - predicted)),
            "flagged_count": int(flagged.size),
            "flagged": [pts[i].tolist() for i in flagged[:20]],
        },
    }
    if pinching_constant is not None:
        pin_h = np.min(np.stack(rep_h.pinching_margins), axis=0)
        pin_hat = np.min(np.stack(rep_hat.pinching_margins), axis=0)
        holds = pin_h >= 0
        extra["pinching"] = {
            "constant": float(pinching_constant),
            "input_holds": int(np.sum(holds)),
            "violations": int(np.sum(holds & (pin_hat < 0))),
        }
    rep.extra.update(extra)
    rep.extra["observed"] = observed
    rep.extra["predicted"] = predicted
    return rep


# -- standard solution -----------------------------------------------------

class CapClosure(Profile):
    """Cap warping ``sqrt(kappa) psi(rho)`` closing at ``rho = 0`` and equal to 1 for ``rho >= L``.

    ``psi(rho) = rho / 2 + sin(pi rho / L) L / (2 pi)`` with ``L = 2 / sqrt(kappa)``,
    so psi(0) = 0, psi'(0) = 1, psi''(0) = 0 and psi meets the unit fiber with
    matching first and second derivatives at ``rho = L``. The profile variable is
    ``rho = tip - x`` (``orientation='left'``) or ``rho = x - tip``.
    """

    kind = "cap-closure"

    def __init__(self, kappa, tip, orientation="left"):
        self.kappa, self.tip = float(kappa), float(tip)
        self.orientation = orientation
        self.length = 2.0 / math.sqrt(self.kappa)

    def rho_jet(self, rho):
        rho = _arr(rho)
        L, a, sk = self.length, math.pi / self.length, math.sqrt(self.kappa)
        r = np.clip(rho, 0.0, L)
        v = sk * (0.5 * r + np.sin(a * r) / (2.0 * a))
        d1 = sk * (0.5 + 0.5 * np.cos(a * r))
        d2 = -sk * 0.5 * a * np.sin(a * r)
        inside = rho < L
        return np.where(inside, v, 1.0), np.where(inside, d1, 0.0), np.where(inside, d2, 0.0)

    def jet(self, x):
        x = _arr(x)
        sgn = -1.0 if self.orientation == "left" else 1.0
        v, d1, d2 = self.rho_jet(sgn * (x - self.tip))
        return v, sgn * d1, d2

    def params(self):
        return {"kappa": self.kappa, "tip": self.tip, "orientation": self.orientation}


register_kind("cap-closure", lambda d, a: CapClosure(d["kappa"], d["tip"], d.get("orientation", "left")))


@dataclass
class StandardSolutionModel:
    profile: SurgeryProfile
    cap_sharpness: float
    kappa: float
    s_join: float
    s_tip: float
    freeze_at: float
    metric: ConformalMetric = field(repr=False)
    cap: CapClosure = field(repr=False)
    F: Profile = field(repr=False)
    A0: float = 0.0
    checks: dict = field(default_factory=dict)

    @property
    def frozen_factor(self):
        """Value of the conformal exponent on the frozen part of the cap."""
        return float(self.F(np.array([self.s_tip]))[0])

    def tip_distance(self, s):
        s = _arr(s)
        d = Integral(Composition(Elementary("exp"), Product([Constant(-1.0), self.F])), x0=self.s_tip)
        return -d(s)

    def s_std(self, s):
        """``A0 - dist(x, tip)`` for points at chart coordinate ``s``."""
        return self.A0 - self.tip_distance(s)

    def omega_cap(self, rho):
        """Unit-fiber cap warping as a function of distance from the tip in the unscaled cap."""
        v, _, _ = self.cap.rho_jet(rho)
        return v / math.sqrt(self.kappa)

    def to_dict(self):
        return {
            "surgery": self.profile.to_dict(),
            "cap_sharpness": self.cap_sharpness,
            "kappa": self.kappa,
            "s_join": self.s_join,
            "s_tip": self.s_tip,
            "freeze_at": self.freeze_at,
            "A0": self.A0,
            "cap": self.cap.to_dict(),
            "metric": self.metric.to_dict(),
            "checks": self.checks,
        }


def _freeze(s1, width):
    """Identity for s <= s1, constant ``s1 + width / 2`` beyond ``s1 + width``."""
    return Sum([Elementary("identity"), Integral(Smoothstep(s1, s1 + width, 0.0, -1.0), x0=s1)])


def build_standard_solution(profile: SurgeryProfile, cap_sharpness=1.0, s_join=4.0,
                            kappa=1.0 / 6.0, freeze_at=None, grid=300) -> StandardSolutionModel:
    """Close ``exp(-2f) h_std`` off beyond ``s_join`` with a round cap.

    The conformal exponent is frozen over a window of width ``cap_sharpness``
    starting at ``freeze_at`` (default ``s_join``).
    """
    if not cap_sharpness > 0:
        raise SurgeryError("cap_sharpness must be positive")
    s1 = float(s_join if freeze_at is None else freeze_at)
    cap = CapClosure(kappa, s_join + 2.0 / math.sqrt(kappa))
    s_tip = cap.tip
    F = Composition(profile.f, _freeze(s1, float(cap_sharpness)))
    base = WarpedMetric(Constant(1.0), Product([cap, cap]), kappa, (-4.0, s_tip), coord="s")
    metric = ConformalMetric(base, AxisField(F), meta={"model": "standard-solution"})
    model = StandardSolutionModel(profile, float(cap_sharpness), float(kappa), float(s_join), s_tip,
                                  s1, metric, cap, F)
    model.A0 = float(model.tip_distance(np.array([s_join]))[0])

    xs = np.linspace(0.5, s_tip - 1e-3, grid)
    rep = classify_curvature(curvature_analytic(metric, line_points(xs)))
    i = int(np.argmin(rep.pco_margin))
    if not rep.pco_margin[i] > 0:
        raise SurgeryError(f"cap_sharpness {cap_sharpness} (freeze at {s1}) breaks positivity: "
                           f"curvature operator margin {rep.pco_margin[i]:.3e} at s = {xs[i]:.6g}")
    # umbilic tip: radial and fiber sectional curvatures at distance 1e-2
    rho = 1e-2 * math.exp(model.frozen_factor)
    op = curvature_analytic(metric, line_points([s_tip - rho])).operator6[0]
    # C^2 transition at s_join
    dlt = 1e-9
    jumps = [float(abs(a - b)[0]) for a, b in zip(cap.jet(np.array([s_join + dlt])),
                                               cap.jet(np.array([s_join - dlt])))]
    model.checks = {
        "pco_min": float(rep.pco_margin[i]),
        "pco_argmin_s": float(xs[i]),
        "tip_umbilic_gap": float(abs(op[0, 0] - op[5, 5])),
        "join_jumps": jumps,
        "tip_jet": [float(v[0]) for v in cap.rho_jet(np.array([0.0]))[:3]],
    }
    return model


# -- surgery of near-cylinders and the cap path ------------------------------

class SurgeryTransform:
    """``h -> surg(h)``: blend ``h`` into the cap model on ``2 <= s <= 3`` and apply the model's factor."""

    label = "surgery"

    def __init__(self, model: StandardSolutionModel):
        self.model = model

    def __call__(self, h: WarpedMetric) -> ConformalMetric:
        m = self.model
        if not isinstance(h, WarpedMetric):
            raise SurgeryError("surgery acts on warped charts")
        if abs(h.kappa - m.kappa) > 1e-15:
            raise SurgeryError("fiber normalisation differs from the cap model")
        a = m.profile.cutoff
        one_minus = Sum([Constant(1.0), Product([Constant(-1.0), a])])
        P = Sum([Product([a, h.radial_sq]), one_minus])
        Q = Sum([Product([a, h.fiber_sq]), Product([one_minus, m.cap, m.cap])])
        base = WarpedMetric(P, Q, h.kappa, (h.interval[0], m.s_tip), gamma=h.gamma, coord=h.coord)
        return ConformalMetric(base, AxisField(m.F), meta={"surgery": "capped"})


def surgery_points(model: StandardSolutionModel, count=200, lo=-4.0):
    xs = np.linspace(lo + 1e-3, model.s_tip - 1e-3, count)
    return line_points(xs)


def surgery_cap_path(h: WarpedMetric, profile: SurgeryProfile, eps=EPS_DEFAULT, cap_sharpness=1.0,
                     model: StandardSolutionModel | None = None) -> IsotopyPath:
    """``mu -> surg((1 - mu) h + mu h_std)``."""
    cylinder_closeness(h, eps, 2)
    model = model or build_standard_solution(profile, cap_sharpness, kappa=h.kappa)
    target = cylinder(h.kappa, h.interval, gamma=h.gamma, coord=h.coord)
    path = linear_blend_path(h, target, transform=SurgeryTransform(model))
    path.meta["model"] = {"A0": model.A0, "s_tip": model.s_tip}
    path.model = model
    return path


def linear_homotopy_residual(path: IsotopyPath, h, target, mus, xs):
    """Max deviation on ``s < 0`` of path members from ``(1 - mu) h + mu h_target``.

    Compares the radial and fiber profiles and checks the conformal factor is 1.
    """
    xs = np.asarray(xs, dtype=float)
    if np.any(xs >= 0):
        raise SurgeryError("linearity is checked on s < 0 only")
    pts = line_points(xs)
    worst = 0.0
    for mu in mus:
        m = path.member(mu)
        base = m.base if isinstance(m, ConformalMetric) else m
        factor = m.f.derivs(pts)[0] if isinstance(m, ConformalMetric) else np.zeros(xs.size)
        for got, a, b in ((base.radial_sq(xs), h.radial_sq(xs), target.radial_sq(xs)),
                          (base.fiber_sq(xs), h.fiber_sq(xs), target.fiber_sq(xs))):
            worst = max(worst, float(np.max(np.abs(got - ((1.0 - mu) * a + mu * b)))))
        worst = max(worst, float(np.max(np.abs(factor))))
    return worst


def rotational_asymmetry(metric, xs, count=16, seed=0):
    """Spread of the fiber-normalised coefficients over seeded fiber points."""
    fib = fiber_samples(count, seed)
    ref = line_points(xs)
    g_ref = metric.coeffs(ref)
    worst = 0.0
    ref_shape = _shape(ref)
    for a in fib:
        p = line_points(xs, tuple(a))
        g = metric.coeffs(p)
        shape = _shape(p)
        for k in range(1, 4):
            lhs = g[:, k, k] / shape[:, k - 1]
            rhs = g_ref[:, k, k] / ref_shape[:, k - 1]
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        worst = max(worst, float(np.max(np.abs(g[:, 0, 0] - g_ref[:, 0, 0]))))
    return worst


def _shape(p):
    s1 = np.sin(p[:, 1]) ** 2
    s2 = s1 * np.sin(p[:, 2]) ** 2
    return np.column_stack([np.ones(p.shape[0]), s1, s2])


# -- double surgery ----------------------------------------------------------

def _even_cutoff(inner, outer):
    """1 on |x| <= inner, 0 on |x| >= outer."""
    sq = Product([Elementary("identity"), Elementary("identity")])
    return Composition(Smoothstep(inner**2, outer**2, 1.0, 0.0), sq)


def _neg(p):
    return Product([Constant(-1.0), p])


class DoubleCap:
    """``h -> h_surg^- # h_surg^+`` as one warped chart with coordinate ``X``.

    Each half is the surgered metric on one side of ``s = 0``; its cap tip is
    stretched into a half-neck with a connected-sum neck profile in the geodesic distance to
    the tip. The coordinate ``s = S(X)`` equals ``X`` up to ``X0`` and becomes
    logarithmic in the distance to the tip after ``X1``. Both halves end on an
    exact round cylinder and are glued by reflection at ``X = 0`` after
    recentring, so the chart is ``(-4 - a, 4 + a)``.
    """

    label = "double-surgery"

    def __init__(self, model: StandardSolutionModel, prof: MWProfile):
        self.model, self.prof = model, prof
        kappa = model.kappa
        F_t = model.frozen_factor
        reach = prof.r1 * math.exp(F_t)
        frozen_from = model.freeze_at + model.cap_sharpness
        if not model.s_tip - reach > frozen_from:
            raise SurgeryError(f"neck profile radius {prof.r1} reaches outside the frozen cap")
        s_tip = model.s_tip
        X0 = s_tip - reach - 1.0
        X1 = X0 + 1.0
        beta = Smoothstep(X0, X1)
        one_minus_beta = Sum([Constant(1.0), _neg(beta)])
        i1 = float(Integral(one_minus_beta, x0=X1)(np.array([X0]))[0])
        i2 = float(Integral(Product([one_minus_beta, Elementary("exp", frequency=-1.0)]),
                            x0=X1)(np.array([X0]))[0])
        # R(X0) = s_tip - X0 with R = c e^{-X} - int_{X1}^{X} (1 - beta)(1 - c e^{-x}) dx
        c = (s_tip - X0 + i1) / (math.exp(-X0) + i2)
        if not c > 0:
            raise SurgeryError("coordinate map degenerates")
        ce = Elementary("exp", amplitude=c, frequency=-1.0)
        R_right = Sum([ce, _neg(Integral(Product([one_minus_beta, Sum([Constant(1.0), _neg(ce)])]),
                                         x0=X1))])
        self.R = Piecewise(linear(-1.0, s_tip), R_right, X0)
        self.S = Piecewise(Elementary("identity"), Sum([Constant(s_tip), _neg(R_right)]), X0)
        self.dS = Piecewise(Constant(1.0),
                            Sum([ce, Product([one_minus_beta, Sum([Constant(1.0), _neg(ce)])])]), X0)
        # t = log(r_star / r), r = exp(-F_t) R
        self.T = Sum([Constant(math.log(prof.r_star) + F_t),
                      Composition(Elementary("log", amplitude=-1.0), self.R)])
        self.U = Composition(prof.u_of_t(), self.T)
        self.delta = math.log(prof.r_star) + F_t - math.log(c)
        t_blend = prof.plateau_t + 0.5
        self.X_blend = t_blend - self.delta
        self.X_mid = self.X_blend + 2.0
        self.c, self.X0, self.X1 = c, X0, X1
        self.W_R = Composition(CapClosure(kappa, 0.0, "right"), self.R)
        self.kappa = kappa
        self.a = self.X_mid
        self.chi = Smoothstep(self.X_blend, self.X_blend + 1.0)
        # neck radius squared from the unblended formula deep in the plateau
        P_deep, _ = self._half(Constant(1.0), Constant(1.0))
        self.C2 = float(P_deep(np.array([self.X_blend + 1.5]))[0])

    def _half(self, P_h, Q_h):
        m = self.model
        S = self.S
        alpha = Composition(m.profile.cutoff, S)
        one_minus = Sum([Constant(1.0), _neg(alpha)])
        e2F = Composition(Elementary("exp", amplitude=1.0, frequency=-2.0), Composition(m.F, S))
        P_L = Sum([Product([alpha, Composition(P_h, S)]), one_minus])
        Q_L = Sum([Product([alpha, Composition(Q_h, S)]), Product([one_minus, self.W_R, self.W_R])])
        P = Product([P_L, self.dS, self.dS, e2F, self.U, self.U])
        Q = Product([Q_L, e2F, self.U, self.U])
        return P, Q

    def _closed_half(self, P_h, Q_h):
        P, Q = self._half(P_h, Q_h)
        chi, om = self.chi, Sum([Constant(1.0), _neg(self.chi)])
        P = Sum([Product([om, P]), Product([chi, Constant(self.C2)])])
        Q = Sum([Product([om, Q]), Product([chi, Constant(self.kappa * self.C2)])])
        return P, Q

    @property
    def interval(self):
        return (-4.0 - self.a, 4.0 + self.a)

    def __call__(self, h: WarpedMetric) -> WarpedMetric:
        if not isinstance(h, WarpedMetric):
            raise SurgeryError("double surgery acts on warped charts")
        Pl, Ql = self._closed_half(h.radial_sq, h.fiber_sq)
        Pr, Qr = self._closed_half(Reparametrization(h.radial_sq, -1.0), Reparametrization(h.fiber_sq, -1.0))
        sh = self.X_mid
        P = MirrorGlue(Reparametrization(Pl, 1.0, sh), Reparametrization(Pr, 1.0, sh), 0.0)
        Q = MirrorGlue(Reparametrization(Ql, 1.0, sh), Reparametrization(Qr, 1.0, sh), 0.0)
        return WarpedMetric(P, Q, h.kappa, self.interval, gamma=h.gamma, coord="X",
                            meta={"double_surgery": {"a": self.a, "neck_radius_sq": self.C2}})

    def to_dict(self):
        return {"a": self.a, "c": self.c, "X0": self.X0, "X1": self.X1, "delta": self.delta,
                "neck_radius": math.sqrt(self.C2), "mw": self.prof.to_dict()}


def _pullback(h: WarpedMetric, psi, dpsi, interval):
    P = Product([Composition(h.radial_sq, psi), dpsi, dpsi])
    Q = Composition(h.fiber_sq, psi)
    return WarpedMetric(P, Q, h.kappa, interval, gamma=h.gamma, coord="X")


@dataclass
class DoubleSurgeryResult:
    path: CompositePath
    report: CertificationReport
    double_cap: DoubleCap
    stage_reports: list
    fixed_region_residual: float
    chain_residual: float
    psi: dict


def double_surgery_isotopy(h: WarpedMetric, profile: SurgeryProfile, k1=0.1, r1=1.0, rho=0.02,
                           eps=EPS_DEFAULT, cap_sharpness=1.0, mu_count=12, point_count=600,
                           threads=1, seed=0, frame_samples=1000) -> DoubleSurgeryResult:
    """Deform the pulled-back double surgery of ``h`` back to ``h`` through PIC metrics."""
    from .assembly import k1_certificate

    cylinder_closeness(h, eps, 2)
    if h.interval != (-4.0, 4.0):
        raise SurgeryError("double surgery expects the chart s in (-4, 4)")
    model = build_standard_solution(profile, cap_sharpness, kappa=h.kappa)
    # isotropic curvature near the cap tip, in geodesic distance from the tip
    F_t = model.frozen_factor
    rr = np.linspace(0.05 * r1, r1, 8) * math.exp(F_t)
    cert = k1_certificate(model.metric, line_points(model.s_tip - rr), k1, frame_samples, seed)
    if not cert["passed"]:
        raise SurgeryError(f"cap isotropic curvature estimate {cert['estimate']:.4g} below k1 = {k1}")
    prof = mw_build_profile(k1, r1, rho)
    ds = DoubleCap(model, prof)
    a = ds.a
    lo, hi = ds.interval
    std = cylinder(h.kappa, h.interval, gamma=h.gamma, coord=h.coord)
    cut = _even_cutoff(2.0, 3.0)
    fixed = [(lo, -3.0 - a), (3.0 + a, hi)]

    # stage A: blend h to h_std on |s| <= 2 underneath the double surgery
    stage_a = linear_blend_path(h, std, cutoff=cut, transform=ds, fixed_region=fixed)
    # stage B: flatten the middle
    mid = stage_a.end
    chi_b = _even_cutoff(a + 0.5, a + 1.5)
    omega = Sum([Product([chi_b, Composition(Elementary("sqrt"), mid.fiber_sq)]),
                 Sum([Constant(1.0), _neg(chi_b)])])
    stage_b = warped_flatten_path(mid, b=a + 1.5, omega=omega, check_count=point_count)
    stage_b.fixed_region = list(fixed)
    # stage C: radial coefficient to psi'^2 with psi the compression of the middle
    chi_c = _even_cutoff(a + 0.5, a + 1.5)
    J = float(Integral(chi_c, x0=0.0)(np.array([a + 1.5]))[0])
    shrink = a / J
    if not 0 < shrink < 1:
        raise SurgeryError("middle compression degenerates")
    dpsi = Sum([Constant(1.0), Product([Constant(-shrink), chi_c])])
    psi = Integral(dpsi, x0=0.0)
    b_end = stage_b.end
    chi_outer = _even_cutoff(a + 1.5, a + 2.0)

    def build_c(mu):
        if mu == 0.0:
            return b_end
        w = Product([Constant(mu), chi_outer])
        P = Sum([Product([Sum([Constant(1.0), _neg(w)]), b_end.radial_sq]), Product([w, dpsi, dpsi])])
        return b_end.replace(P)

    stage_c = IsotopyPath("cutoff-blend", build_c, b_end, build_c(1.0), fixed,
                          closure={"target_radial": "psi'^2", "psi_slope_min": 1.0 - shrink})

    # stage D: pulled-back blend back to h
    def build_d(mu):
        return _pullback(blend_warped(h, std, 1.0 - mu, cut), psi, dpsi, ds.interval)

    stage_d = IsotopyPath("cutoff-blend", build_d, build_d(0.0), build_d(1.0), fixed,
                          closure={"pullback": "psi", "cutoff": cut.to_dict()})

    pts = default_points(axis_interval(lo, hi), point_count)
    path = CompositePath([stage_a, stage_b, stage_c, stage_d], fixed_region=fixed,
                         meta={"double_cap": ds.to_dict()})
    chain = path.chain_residual(pts)
    psi_rec = {"coordinate": "X", "psi": psi.to_dict(), "slope_min": 1.0 - shrink,
               "note": "mu = 1 member is psi^* h"}
    path.reparametrization = psi_rec
    mus = np.linspace(0.0, 1.0, int(mu_count))
    reps = []
    for k, st in enumerate(path.children):
        r = certify_path(st, ("PIC",), points=pts, mus=mus, threads=threads, name=f"stage{k}")
        reps.append(r)
        if not r.passed:
            break
    report = merge_reports("double-surgery", reps)
    report.extra["k1_certificate"] = cert
    fixed_res = max(path.fixed_region_residual(pts, np.linspace(0, 1, 4 * int(mu_count))), 0.0)
    report.extra["fixed_region_residual"] = fixed_res
    report.extra["chain_residual"] = chain
    failed = [k for k, r in enumerate(reps) if not r.passed]
    report.extra["failed_stage"] = failed[0] if failed else None
    return DoubleSurgeryResult(path, report, ds, reps, fixed_res, chain, psi_rec)


def axis_interval(lo, hi):
    from .metrics import axis_box

    return axis_box(lo, hi)
