"""Rotationally symmetric model flows: normalized Yamabe flow on S^4 and Ricci
flow of warped metrics in a fixed radial gauge."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import blocks_from_riemann, classify_curvature, riemann_from_operator6
from .deform import plateau_bump
from .metrics import WarpedMetric
from .profiles import as_profile


class FlowError(RuntimeError):
    pass


def _d1_2(f, h):
    g = np.pad(f, 1, mode="symmetric")
    return (g[2:] - g[:-2]) / (2.0 * h)


def _d2_2(f, h):
    g = np.pad(f, 1, mode="symmetric")
    return (g[2:] - 2.0 * g[1:-1] + g[:-2]) / h**2


# -- Yamabe flow -------------------------------------------------------------

@dataclass
class YamabeTrajectory:
    theta: np.ndarray
    times: list = field(default_factory=list)
    sup_dev: list = field(default_factory=list)
    min_R: list = field(default_factory=list)
    mean_R: list = field(default_factory=list)
    volume: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    converged: bool = False
    steps: int = 0

    @property
    def volume_drift(self):
        v = np.asarray(self.volume)
        return float(np.max(np.abs(v / v[0] - 1.0)))

    def to_dict(self):
        return {
            "steps": self.steps,
            "converged": self.converged,
            "final_time": self.times[-1] if self.times else 0.0,
            "final_sup_dev": self.sup_dev[-1] if self.sup_dev else None,
            "min_R": float(np.min(self.min_R)) if self.min_R else None,
            "volume_drift": self.volume_drift if self.volume else None,
            "reports": self.reports,
        }


def _yamabe_state(u, theta, h, weights):
    lap = _d2_2(u, h) + 3.0 / np.tan(theta) * _d1_2(u, h)
    R = (-6.0 * lap + 12.0 * u) / u**3
    vol_w = weights * u**4
    vol = float(np.sum(vol_w))
    r = float(np.sum(vol_w * R) / vol)
    return R, r, vol


def yamabe_flow_rotsym(initial, step=1e-3, max_steps=200_000, tol=1e-3, n=400, record_every=500):
    """Normalized Yamabe flow of ``v(theta) g_round`` on S^4.

    ``initial`` gives the metric multiplier ``v > 0`` as a function of the polar
    angle. The flow ``dg/dt = -(R - r) g`` is stepped explicitly for
    ``u = sqrt(v)``; ``r`` is the volume-weighted mean of ``R``.
    """
    h = math.pi / n
    theta = (np.arange(n) + 0.5) * h
    if hasattr(initial, "jet"):
        v = as_profile(initial)(theta)
    elif callable(initial):
        v = initial(theta)
    else:
        v = initial
    v = np.broadcast_to(np.asarray(v, dtype=float), theta.shape).copy()
    if np.any(v <= 0):
        raise FlowError("conformal factor must be positive")
    u = np.sqrt(v)
    weights = np.sin(theta) ** 3 * h
    traj = YamabeTrajectory(theta)
    R, r, vol = _yamabe_state(u, theta, h, weights)
    if np.any(R <= 0):
        raise FlowError("initial scalar curvature must be positive")
    t = 0.0
    for k in range(max_steps + 1):
        dev = float(np.max(np.abs(R - r)))
        if not np.isfinite(dev) or np.any(R <= 0):
            raise FlowError(f"instability at step {k} (t = {t:.6g}): scalar curvature lost sign "
                            f"or became non-finite; use a smaller step")
        traj.times.append(t)
        traj.sup_dev.append(dev)
        traj.min_R.append(float(np.min(R)))
        traj.mean_R.append(r)
        traj.volume.append(vol)
        done = dev < tol
        if k % record_every == 0 or done or k == max_steps:
            traj.snapshots.append((t, u.copy()))
            # conformally flat: sigma = R, so the PIC margin is R / 6
            traj.reports.append({"step": k, "t": t, "sup_dev": dev, "pic_margin_min": float(np.min(R)) / 6.0})
        if done:
            traj.converged = True
            break
        if k == max_steps:
            break
        dt = min(step, 0.2 * h * h * float(np.min(u)) ** 2 / 3.0)
        # Heun step on du/dt = -(R - r) u / 2
        k1 = -0.5 * (R - r) * u
        u1 = u + dt * k1
        R1, r1, _ = _yamabe_state(u1, theta, h, weights)
        k2 = -0.5 * (R1 - r1) * u1
        u = u + 0.5 * dt * (k1 + k2)
        t += dt
        R, r, vol = _yamabe_state(u, theta, h, weights)
    traj.steps = k
    return traj


# -- Ricci flow --------------------------------------------------------------

@dataclass
class RicciTrajectory:
    x: np.ndarray
    kappa: float
    times: list = field(default_factory=list)
    pic_min: list = field(default_factory=list)
    max_curvature: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    retained: list = field(default_factory=list)
    events: list = field(default_factory=list)
    steps: int = 0

    def fiber_sq_at(self, i):
        return self.snapshots[i][2]

    def to_dict(self):
        return {
            "steps": self.steps,
            "final_time": self.times[-1] if self.times else 0.0,
            "min_pic_margin": float(np.min(self.pic_min)) if self.pic_min else None,
            "events": self.events,
            "retained": self.retained,
        }


def _pad_ends(f, parity, periodic):
    """Two ghost cells per end; ``parity`` gives +1 (even) or -1 (odd) per end."""
    if periodic:
        return np.pad(f, 2, mode="wrap")
    left = parity[0] * f[1::-1]
    right = parity[1] * f[:-3:-1]
    return np.concatenate([left, f, right])


def _d4(g, h):
    m2, m1, c, p1, p2 = g[:-4], g[1:-3], g[2:-2], g[3:-1], g[4:]
    d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h)
    d2 = (-p2 + 16.0 * p1 - 30.0 * c + 16.0 * m1 - m2) / (12.0 * h * h)
    return d1, d2


def _ricci_rhs_arclength(phi, w, h, periodic, kappa):
    """Rates for ``(phi, omega)`` with ``P = phi(t)^2``, ``Q = omega^2``.

    A tangential velocity keeps arclength uniform in ``x``. Used for
    periodic and flat-ended charts.
    """
    w1, w2 = _d4(_pad_ends(w, (1, 1), periodic), h)
    ws, wss = w1 / phi, w2 / phi**2
    k_rad = -wss / w
    k_fib = (kappa - ws**2) / w**2
    rate = -3.0 * k_rad
    c = float(np.mean(rate))
    g = c - rate
    V = phi * h * (np.cumsum(g) - 0.5 * g)
    return c * phi, -w * (k_rad + 2.0 * k_fib) + V * ws, k_rad, k_fib


class _PoleReference:
    """Profile ``rho0`` of the conformal gauge ``P = e^{2u}``, ``Q = e^{2u} rho0^2``.

    ``rho0`` vanishes with slope ``sqrt(kappa)`` at each pole end and is flat at a
    non-pole end, so smoothness of the metric is just evenness of ``u``.
    """

    def __init__(self, lo, hi, ends, kappa):
        self.lo, self.hi, self.ends, self.kappa = lo, hi, ends, kappa
        span = hi - lo
        self.k = math.pi / span if ends == ("pole", "pole") else 0.5 * math.pi / span
        self.flip = ends[0] != "pole"

    def _arg(self, x):
        return self.k * ((self.hi - x) if self.flip else (x - self.lo))

    def values(self, x):
        """``rho0``, ``rho0' / rho0`` and ``(kappa - rho0'^2) / rho0^2``."""
        a = self._arg(x)
        sk = math.sqrt(self.kappa)
        rho = sk * np.sin(a) / self.k
        log_d = self.k / np.tan(a) * (-1.0 if self.flip else 1.0)
        return rho, log_d, np.full_like(x, self.k**2)

    def F(self, x):
        """``int dx / rho0``, zero at the centre (two poles) or at the flat end."""
        return np.log(np.tan(0.5 * self._arg(x))) / math.sqrt(self.kappa) * (-1.0 if self.flip else 1.0)

    def F_inv(self, f):
        a = 2.0 * np.arctan(np.exp(f * math.sqrt(self.kappa) * (-1.0 if self.flip else 1.0)))
        return self.hi - a / self.k if self.flip else self.lo + a / self.k


def _ricci_rhs_conformal(u, h, ref_vals, kappa, two_poles, flip):
    """Rate for ``u`` in the conformal gauge, with the tangential field that
    keeps the gauge; the fiber curvature has no pole cancellation."""
    rho, log_d, base = ref_vals
    u1, u2 = _d4(_pad_ends(u, (1, 1), False), h)
    e = np.exp(-2.0 * u)
    k_rad = -e * (-base + log_d * u1 + u2)
    k_fib = e * (base - 2.0 * log_d * u1 - u1**2)
    # (V / rho0)' = 2 (k_rad - k_fib) / rho0
    g = 2.0 * (k_rad - k_fib) / rho
    cum = h * (np.cumsum(g) - 0.5 * g)
    if two_poles:
        n = u.size
        cum = cum - 0.5 * (cum[n // 2 - 1] + cum[n // 2])
    elif not flip:
        cum = cum - h * np.sum(g)
    V = rho * cum
    return -(k_rad + 2.0 * k_fib) + V * u1 + cum * rho * log_d, k_rad, k_fib


def _classified_pic(k_rad, k_fib):
    op = np.zeros((k_rad.size, 6, 6))
    for i in range(3):
        op[:, i, i] = k_rad
        op[:, i + 3, i + 3] = k_fib
    rep = classify_curvature(blocks_from_riemann(riemann_from_operator6(op)), check=False)
    return float(np.min(rep.pic_margin))


def _end_type(metric: WarpedMetric, x_end):
    (P, P1, _), (Q, Q1, _) = metric.profile_jets(np.array([x_end]))
    if abs(Q[0]) < 1e-10:
        return "pole"
    if abs(P1[0]) < 1e-8 and abs(Q1[0]) < 1e-8:
        return "flat"
    return None


def _ssp_rk3(state, rates, dt):
    s1 = [x + dt * r for x, r in zip(state, rates(state))]
    s2 = [0.75 * x + 0.25 * (y + dt * r) for x, y, r in zip(state, s1, rates(s1))]
    return [x / 3.0 + 2.0 / 3.0 * (y + dt * r) for x, y, r in zip(state, s2, rates(s2))]


def _fine_arclength(initial, lo, hi, count):
    xf = np.linspace(lo, hi, count + 1)
    xm = 0.5 * (xf[1:] + xf[:-1])
    ds = np.sqrt(initial.radial_sq(xm)) * np.diff(xf)
    return xf, xm, ds


def ricci_flow_warped(initial: WarpedMetric, step=1e-3, max_steps=100_000, blowup_threshold=1e3,
                      n=400, t_max=None, record_every=200):
    """Ricci flow of ``P dx^2 + Q dtheta_kappa^2``.

    The chart is first rewritten in a gauge that the flow keeps with an
    explicit tangential field: uniform arclength for periodic or flat-ended
    charts, conformal to the model ``dx^2 + rho0^2 dtheta_kappa^2`` when an end
    is a pole. Snapshots hold ``(t, P, Q)`` on the cell centres ``x`` of the
    same interval. Stops at the first curvature blowup: curvature above
    ``blowup_threshold`` times the initial maximum.
    """
    lo, hi = initial.interval
    h = (hi - lo) / n
    x = lo + (np.arange(n) + 0.5) * h
    kappa = initial.kappa
    periodic = bool(initial.periodic)
    if periodic:
        ends = ("periodic", "periodic")
    else:
        ends = (_end_type(initial, lo), _end_type(initial, hi))
        if None in ends:
            raise FlowError("ends must be periodic, smooth poles or flat")
    conformal = "pole" in ends
    xf, xm, ds = _fine_arclength(initial, lo, hi, 64 * n)

    if conformal:
        ref = _PoleReference(lo, hi, ends, kappa)
        ref_vals = ref.values(x)
        two = ends == ("pole", "pole")
        # match int ds / omega to int dx / rho0 (= ref.F); both diverge like a
        # log at poles, so integrate the regular difference H and solve
        # ref.F(x) = H(y) + ref.F(y) for the source point y
        Hf = np.concatenate([[0.0], np.cumsum(ds / np.sqrt(initial.fiber_sq(xm))
                                              - np.diff(xf) / ref.values(xm)[0])])
        if two:
            Hf -= np.interp(0.5 * (lo + hi), xf, Hf)
        elif ref.flip:
            Hf -= Hf[0]
        else:
            Hf -= Hf[-1]
        fx = ref.F(x)
        x_src = x.copy()
        for _ in range(100):
            nxt = ref.F_inv(fx - np.interp(x_src, xf, Hf))
            done = np.max(np.abs(nxt - x_src)) < 1e-15
            x_src = nxt
            if done:
                break
        u = np.log(np.sqrt(initial.fiber_sq(x_src)) / ref_vals[0])
        state = [u]

        def rates(st):
            return [_ricci_rhs_conformal(st[0], h, ref_vals, kappa, two, ref.flip)[0]]

        def curv(st):
            return _ricci_rhs_conformal(st[0], h, ref_vals, kappa, two, ref.flip)[1:]

        def coeffs(st):
            e2 = np.exp(2.0 * st[0])
            return e2, e2 * ref_vals[0] ** 2

        def min_radial(st):
            return float(np.exp(2.0 * np.min(st[0])))
    else:
        s_edges = np.concatenate([[0.0], np.cumsum(ds)])
        phi = s_edges[-1] / (hi - lo)
        x_src = np.interp((x - lo) * phi, s_edges, xf)
        state = [np.array(phi), np.sqrt(initial.fiber_sq(x_src))]

        def rates(st):
            return list(_ricci_rhs_arclength(st[0], st[1], h, periodic, kappa)[:2])

        def curv(st):
            return _ricci_rhs_arclength(st[0], st[1], h, periodic, kappa)[2:]

        def coeffs(st):
            return np.full(n, float(st[0]) ** 2), st[1] ** 2

        def min_radial(st):
            return float(st[0]) ** 2

    k_rad, k_fib = curv(state)
    if np.min(k_rad + k_fib) <= 0:
        raise FlowError("initial metric is not PIC")
    k0 = float(np.max(np.maximum(np.abs(k_rad), np.abs(k_fib))))
    p_floor = 1e-6 * min_radial(state)
    traj = RicciTrajectory(x, kappa)
    traj.gauge = "conformal" if conformal else "arclength"
    t = 0.0

    def snap():
        P, Q = coeffs(state)
        return (t, P, Q)

    for k in range(max_steps + 1):
        k_rad, k_fib = curv(state)
        kmax_arr = np.maximum(np.abs(k_rad), np.abs(k_fib))
        kmax = float(np.max(kmax_arr))
        if not np.isfinite(kmax):
            raise FlowError(f"non-finite curvature at t = {t:.6g}")
        traj.times.append(t)
        traj.pic_min.append(float(np.min(k_rad + k_fib)))
        traj.max_curvature.append(kmax)
        if kmax > blowup_threshold * k0:
            i = int(np.argmax(kmax_arr))
            global_ = float(np.min(k_fib)) > 0.5 * kmax
            _, Q = coeffs(state)
            traj.events.append({
                "kind": "extinction" if global_ else "neck-blowup",
                "step": k, "t": t, "x": float(x[i]), "max_curvature": kmax,
                "surgery_handoff": {"x": float(x[i]), "fiber_radius": float(math.sqrt(Q[i] / kappa))},
            })
            traj.snapshots.append(snap())
            break
        p_min = min_radial(state)
        if p_min < p_floor:
            raise FlowError(f"gauge degeneration: radial coefficient {p_min:.3e} at t = {t:.6g} "
                            f"with curvature still bounded ({kmax:.3e})")
        if k % record_every == 0:
            traj.snapshots.append(snap())
            traj.retained.append({"step": k, "t": t, "pic_margin_min": _classified_pic(k_rad, k_fib),
                                  "max_curvature": kmax})
        if k == max_steps or (t_max is not None and t >= t_max):
            break
        dt = min(step, 0.2 * h * h * p_min, 0.2 / kmax)
        if t_max is not None:
            dt = min(dt, t_max - t)
        state = _ssp_rk3(state, rates, dt)
        t += dt
    traj.steps = k
    return traj


def dumbbell(neck=0.3, half_length=4.0, inner=0.3, outer=2.5, kappa=1.0):
    """Two unit-radius bulges joined by a neck of radius ``neck``; flat ends."""
    omega = plateau_bump(neck - 1.0, inner, outer, base=1.0)
    return WarpedMetric.from_warping(omega, kappa, (-half_length, half_length), tag="warped-cylinder")
