"""Conformal neck-stretching profiles for PIC connected sums.

In the variable ``t = log(r_star / r)`` the profile inequality
``2 k1 + alpha (3/2 - alpha) / r^2 + alpha' / r > 0`` reads
``d alpha / dt < alpha (3/2 - alpha) + 2 k1 r^2``. We build
``alpha = 1 - (1 - L S_lo)(1 - S_hi)`` with a logistic ``L`` of rate
``gamma <= 1`` (which satisfies the inequality on its own), a flat-start
smoothstep ``S_lo`` on ``t in [0, 1]`` paid for by the ``2 k1 r^2`` term, and a
smoothstep ``S_hi`` that makes ``alpha`` exactly 1 deep in the neck.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .profiles import (
    Composition,
    Constant,
    Elementary,
    Integral,
    Product,
    Profile,
    Smoothstep,
    Sum,
    profile_from_dict,
)


class MWError(ValueError):
    pass


def _logistic(gamma, t0):
    # 1 / (1 + exp(-gamma (t - t0))) = (1 + tanh(gamma (t - t0) / 2)) / 2
    return Sum([Constant(0.5), Elementary("tanh", 0.5, 0.5 * gamma, -0.5 * gamma * t0)])


def alpha_in_t(gamma, t0, t1, hi_width=1.0) -> Profile:
    lo = Smoothstep(0.0, 1.0)
    hi = Smoothstep(t1, t1 + hi_width)
    one_minus = Product([
        Sum([Constant(1.0), Product([Constant(-1.0), _logistic(gamma, t0), lo])]),
        Sum([Constant(1.0), Product([Constant(-1.0), hi])]),
    ])
    return Sum([Constant(1.0), Product([Constant(-1.0), one_minus])])


def t_of_r(r_star) -> Profile:
    """``log(r_star / r)`` as a profile of ``r``."""
    return Elementary("log", amplitude=-1.0, frequency=1.0 / r_star)


@dataclass
class MWProfile:
    k1: float
    r1: float
    r_star: float
    rho: float
    gamma: float
    t0: float
    t1: float
    hi_width: float = 1.0
    retries: int = 0

    def __post_init__(self):
        self.alpha_t = alpha_in_t(self.gamma, self.t0, self.t1, self.hi_width)
        # integral of (alpha - 1) from 0; exactly zero for t <= 0 once alpha is
        # added back on the r >= r_star side (see ``u``)
        self._int_alpha = Integral(self.alpha_t, x0=0.0, panel=0.25)
        self._int_gap = Integral(Sum([self.alpha_t, Constant(-1.0)]), x0=0.0, panel=0.25)

    # -- profiles ------------------------------------------------------
    @property
    def plateau_t(self):
        """Beyond this ``t`` alpha is identically 1."""
        return self.t1 + self.hi_width

    @property
    def alpha(self) -> Profile:
        """alpha as a function of r."""
        return Composition(self.alpha_t, t_of_r(self.r_star))

    def u_of_t(self) -> Profile:
        return Composition(Elementary("exp"), self._int_alpha)

    @property
    def u(self) -> Profile:
        """``u(r) = exp(int_r^{r1} alpha(x)/x dx)``."""
        return Composition(self.u_of_t(), t_of_r(self.r_star))

    def neck_scale_t(self) -> Profile:
        """``u(r) r`` as a function of ``t``; tends to the neck radius."""
        return Product([Constant(self.r_star), Composition(Elementary("exp"), self._int_gap)])

    @property
    def neck_radius(self) -> float:
        return float(self.neck_scale_t()(np.array([self.plateau_t + 1.0]))[0])

    # -- checks --------------------------------------------------------
    def margin(self, r):
        r = np.asarray(r, dtype=float)
        a, a1, _ = self.alpha.jet(r)
        return 2.0 * self.k1 + a * (1.5 - a) / r**2 + a1 / r

    def log_grid(self, count=10_000):
        lo = self.r_star * math.exp(-(self.plateau_t + 2.0))
        return np.geomspace(lo, self.r1, count)

    def min_margin(self, count=10_000):
        r = self.log_grid(count)
        m = self.margin(r)
        i = int(np.argmin(m))
        return float(m[i]), float(r[i])

    def to_dict(self):
        return {
            "k1": self.k1, "r1": self.r1, "r_star": self.r_star, "rho": self.rho,
            "gamma": self.gamma, "t0": self.t0, "t1": self.t1, "hi_width": self.hi_width,
            "neck_radius": self.neck_radius,
        }

    @classmethod
    def from_dict(cls, d):
        keys = ("k1", "r1", "r_star", "rho", "gamma", "t0", "t1", "hi_width")
        return cls(**{k: float(d[k]) for k in keys if k in d})


def _choose_t0(gamma, k1, r_star, safety=0.5):
    """Smallest logistic centre with ``L S_lo' <= safety * 2 k1 r^2`` on [0, 1]."""
    t = np.linspace(0.0, 1.0, 2001)
    _, s1, _ = Smoothstep.unit_jet(t)
    budget = safety * 2.0 * k1 * r_star**2 * np.exp(-2.0 * t)

    def ok(t0):
        lval = 1.0 / (1.0 + np.exp(-gamma * (t - t0)))
        return np.all(lval * s1 <= budget)

    lo, hi = 0.0, 1.0
    while not ok(hi):
        hi *= 2.0
        if hi > 1e4:
            raise MWError("no logistic centre satisfies the transition budget")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return hi


def mw_build_profile(k1, r1, rho, r_star=None, gamma=1.0, max_retries=20, grid=10_000) -> MWProfile:
    """Construct and verify a neck profile; shrinks the transition rate on failure."""
    if not k1 > 0:
        raise MWError("k1 must be positive")
    if not 0 < rho < r1:
        raise MWError("need 0 < rho < r1")
    r_star = 0.5 * r1 if r_star is None else float(r_star)
    if not 0 < r_star < r1:
        raise MWError("need 0 < r_star < r1")
    last = None
    g = float(gamma)
    for attempt in range(max_retries + 1):
        t0 = _choose_t0(g, k1, r_star)
        t1 = t0 + math.log(999.0) / g
        prof = MWProfile(float(k1), float(r1), r_star, float(rho), g, t0, t1, retries=attempt)
        m, at = prof.min_margin(grid)
        last = (m, at, g)
        if m > 0 and prof.neck_radius <= rho:
            return prof
        g *= 0.8
    raise MWError(
        f"no admissible profile after {max_retries} retries (last margin {last[0]:.3e} at "
        f"r = {last[1]:.3e}); largest transition rate tried {gamma}, smallest {last[2]:.3e}")
