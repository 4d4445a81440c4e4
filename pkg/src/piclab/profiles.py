"""One-variable profiles with exact first and second derivatives.

Every profile evaluates to a jet ``(value, d1, d2)`` on numpy arrays. Composite
kinds combine their children's jets with the product and chain rules, so no
finite differencing ever happens inside a profile. Profiles serialize as a
nested expression tree (see :meth:`Profile.to_dict` / :func:`profile_from_dict`).
"""
from __future__ import annotations

import math

import numpy as np

# Gauss-Legendre nodes on [0, 1] for the ``integral`` kind.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class ProfileError(ValueError):
    pass


def _arr(x):
    return np.asarray(x, dtype=float)


class Profile:
    kind = "abstract"
    domain = (-math.inf, math.inf)

    def jet(self, x):
        """Return ``(value, first derivative, second derivative)`` at ``x``."""
        raise NotImplementedError

    def __call__(self, x):
        return self.jet(x)[0]

    def d1(self, x):
        return self.jet(x)[1]

    def d2(self, x):
        return self.jet(x)[2]

    def params(self) -> dict:
        return {}

    def children(self) -> list:
        return []

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        out.update(self.params())
        kids = self.children()
        if kids:
            out["args"] = [k.to_dict() for k in kids]
        return out

    # arithmetic sugar ---------------------------------------------------
    def __add__(self, other):
        return Sum([self, as_profile(other)])

    __radd__ = __add__

    def __sub__(self, other):
        return Sum([self, Product([Constant(-1.0), as_profile(other)])])

    def __rsub__(self, other):
        return as_profile(other) - self

    def __mul__(self, other):
        return Product([self, as_profile(other)])

    __rmul__ = __mul__

    def __neg__(self):
        return Product([Constant(-1.0), self])

    def compose(self, inner: "Profile") -> "Profile":
        return Composition(self, inner)

    def __repr__(self):
        return f"{type(self).__name__}({self.params()})"


def as_profile(p) -> Profile:
    if isinstance(p, Profile):
        return p
    return Constant(float(p))


class Constant(Profile):
    kind = "constant"

    def __init__(self, value: float):
        self.value = float(value)

    def jet(self, x):
        x = _arr(x)
        z = np.zeros_like(x)
        return z + self.value, z, z.copy()

    def params(self):
        return {"value": self.value}


_ELEMENTARY = {
    # name: (f, f', f'')
    "identity": (lambda t: t, lambda t: np.ones_like(t), lambda t: np.zeros_like(t)),
    "sin": (np.sin, np.cos, lambda t: -np.sin(t)),
    "cos": (np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t)),
    "sinh": (np.sinh, np.cosh, np.sinh),
    "cosh": (np.cosh, np.sinh, np.cosh),
    "exp": (np.exp, np.exp, np.exp),
    "log": (np.log, lambda t: 1.0 / t, lambda t: -1.0 / t**2),
    "sqrt": (np.sqrt, lambda t: 0.5 / np.sqrt(t), lambda t: -0.25 * t**-1.5),
    "tanh": (
        np.tanh,
        lambda t: 1.0 / np.cosh(t) ** 2,
        lambda t: -2.0 * np.tanh(t) / np.cosh(t) ** 2,
    ),
}


class Elementary(Profile):
    """``amplitude * fn(frequency * x + phase)`` for a named analytic ``fn``."""

    kind = "elementary"

    def __init__(self, fn: str, amplitude=1.0, frequency=1.0, phase=0.0):
        if fn not in _ELEMENTARY:
            raise ProfileError(f"unknown elementary function {fn!r}")
        self.fn = fn
        self.amplitude = float(amplitude)
        self.frequency = float(frequency)
        self.phase = float(phase)

    def jet(self, x):
        x = _arr(x)
        f, f1, f2 = _ELEMENTARY[self.fn]
        t = self.frequency * x + self.phase
        if self.fn in ("log", "sqrt") and np.any(t <= 0):
            raise ProfileError(f"{self.fn} argument must be positive")
        a, k = self.amplitude, self.frequency
        return a * f(t), a * k * f1(t), a * k * k * f2(t)

    def params(self):
        return {
            "fn": self.fn,
            "amplitude": self.amplitude,
            "frequency": self.frequency,
            "phase": self.phase,
        }


def linear(slope=1.0, offset=0.0) -> Profile:
    """``slope * x + offset``."""
    if offset == 0.0:
        return Elementary("identity", amplitude=slope)
    return Sum([Elementary("identity", amplitude=slope), Constant(offset)])


def _flat_jet(t):
    """Jet of psi(t) = exp(-1/t) for t > 0, 0 otherwise."""
    pos = t > 0
    ts = np.where(pos, t, 1.0)
    e = np.where(pos, np.exp(-1.0 / ts), 0.0)
    d1 = np.where(pos, e / ts**2, 0.0)
    d2 = np.where(pos, e * (1.0 / ts**4 - 2.0 / ts**3), 0.0)
    return e, d1, d2


class Smoothstep(Profile):
    """C-infinity transition from ``y0`` (x <= x0) to ``y1`` (x >= x1).

    Built from ``psi(t) / (psi(t) + psi(1 - t))`` with ``psi(t) = exp(-1/t)``;
    the value is exactly ``y0`` / ``y1`` outside the transition window.
    """

    kind = "smoothstep"
    # sup |S'| and sup |S''| of the unit step on [0, 1]
    _UNIT_D1 = None
    _UNIT_D2 = None

    def __init__(self, x0, x1, y0=0.0, y1=1.0):
        if not x1 > x0:
            raise ProfileError("smoothstep needs x0 < x1")
        self.x0, self.x1 = float(x0), float(x1)
        self.y0, self.y1 = float(y0), float(y1)

    @staticmethod
    def unit_jet(t):
        t = _arr(t)
        a, a1, a2 = _flat_jet(t)
        b, b1, b2 = _flat_jet(1.0 - t)
        b1, b2 = -b1, b2
        den = a + b
        s = a / den
        # s' = (a' b - a b') / den^2
        num1 = a1 * b - a * b1
        s1 = num1 / den**2
        num2 = a2 * b - a * b2
        s2 = num2 / den**2 - 2.0 * num1 * (a1 + b1) / den**3
        return s, s1, s2

    @classmethod
    def unit_bounds(cls):
        if cls._UNIT_D1 is None:
            t = np.linspace(0.0, 1.0, 20001)
            _, s1, s2 = cls.unit_jet(t)
            cls._UNIT_D1 = float(np.max(np.abs(s1)))
            cls._UNIT_D2 = float(np.max(np.abs(s2)))
        return cls._UNIT_D1, cls._UNIT_D2

    def derivative_bounds(self):
        """Upper bounds for ``|f'|`` and ``|f''|`` from the parameters alone."""
        b1, b2 = self.unit_bounds()
        w = self.x1 - self.x0
        dy = abs(self.y1 - self.y0)
        return dy * b1 / w, dy * b2 / w**2

    def jet(self, x):
        x = _arr(x)
        w = self.x1 - self.x0
        s, s1, s2 = self.unit_jet((x - self.x0) / w)
        dy = self.y1 - self.y0
        v = self.y0 + dy * s
        v = np.where(x <= self.x0, self.y0, np.where(x >= self.x1, self.y1, v))
        return v, dy * s1 / w, dy * s2 / w**2

    def params(self):
        return {"x0": self.x0, "x1": self.x1, "y0": self.y0, "y1": self.y1}


class ExpBump(Profile):
    """``c * exp(-q / (x - x0))`` for x > x0 and exactly 0 for x <= x0.

    With ``side='left'`` the mirrored ``c * exp(-q / (x0 - x))`` for x < x0.
    """

    kind = "exponential-bump"

    def __init__(self, c, q, x0=0.0, side="right"):
        if q <= 0:
            raise ProfileError("q must be positive")
        if side not in ("right", "left"):
            raise ProfileError("side must be 'right' or 'left'")
        self.c, self.q, self.x0, self.side = float(c), float(q), float(x0), side

    def jet(self, x):
        x = _arr(x)
        sgn = 1.0 if self.side == "right" else -1.0
        y = sgn * (x - self.x0)
        pos = y > 0
        ys = np.where(pos, y, 1.0)
        q = self.q
        f = np.where(pos, self.c * np.exp(-q / ys), 0.0)
        f1 = np.where(pos, q / ys**2 * f, 0.0)
        f2 = np.where(pos, (q * q / ys**4 - 2.0 * q / ys**3) * f, 0.0)
        return f, sgn * f1, f2

    def params(self):
        return {"c": self.c, "q": self.q, "x0": self.x0, "side": self.side}


class Sum(Profile):
    kind = "sum"

    def __init__(self, terms):
        self.terms = [as_profile(t) for t in terms]

    def jet(self, x):
        x = _arr(x)
        v = np.zeros_like(x)
        d1 = np.zeros_like(x)
        d2 = np.zeros_like(x)
        for t in self.terms:
            a, a1, a2 = t.jet(x)
            v = v + a
            d1 = d1 + a1
            d2 = d2 + a2
        return v, d1, d2

    def children(self):
        return self.terms


class Product(Profile):
    kind = "product"

    def __init__(self, factors):
        self.factors = [as_profile(f) for f in factors]

    def jet(self, x):
        x = _arr(x)
        v = np.ones_like(x)
        d1 = np.zeros_like(x)
        d2 = np.zeros_like(x)
        seen = {}
        for f in self.factors:
            if id(f) not in seen:
                seen[id(f)] = f.jet(x)
            a, a1, a2 = seen[id(f)]
            v, d1, d2 = v * a, d1 * a + v * a1, d2 * a + 2.0 * d1 * a1 + v * a2
        return v, d1, d2

    def children(self):
        return self.factors


class Composition(Profile):
    """``outer(inner(x))``."""

    kind = "composition"

    def __init__(self, outer, inner):
        self.outer, self.inner = as_profile(outer), as_profile(inner)

    def jet(self, x):
        g, g1, g2 = self.inner.jet(x)
        f, f1, f2 = self.outer.jet(g)
        return f, f1 * g1, f2 * g1 * g1 + f1 * g2

    def children(self):
        return [self.outer, self.inner]


class Reciprocal(Profile):
    """``1 / operand``; the operand carries a certified positive lower bound."""

    kind = "reciprocal"

    def __init__(self, operand, lower_bound: float):
        if not lower_bound > 0:
            raise ProfileError("reciprocal needs a positive lower bound")
        self.operand = as_profile(operand)
        self.lower_bound = float(lower_bound)

    def jet(self, x):
        g, g1, g2 = self.operand.jet(x)
        if np.any(g < self.lower_bound):
            raise ProfileError(
                f"reciprocal operand {float(np.min(g))} below certified bound "
                f"{self.lower_bound}"
            )
        r = 1.0 / g
        return r, -g1 * r * r, (2.0 * g1 * g1 * r - g2) * r * r

    def params(self):
        return {"lower_bound": self.lower_bound}

    def children(self):
        return [self.operand]


class Reparametrization(Profile):
    """``base(scale * x + shift)``; the affine special case of composition."""

    kind = "reparametrization"

    def __init__(self, base, scale=1.0, shift=0.0):
        self.base = as_profile(base)
        self.scale, self.shift = float(scale), float(shift)

    def jet(self, x):
        x = _arr(x)
        f, f1, f2 = self.base.jet(self.scale * x + self.shift)
        return f, self.scale * f1, self.scale**2 * f2

    def params(self):
        return {"scale": self.scale, "shift": self.shift}

    def children(self):
        return [self.base]


class Integral(Profile):
    """``int_{x0}^{x} integrand``; derivatives come from the integrand's jet.

    Values use 12-point Gauss-Legendre rules on the fixed panels
    ``[x0 + j panel, x0 + (j + 1) panel]`` plus one partial panel, so the value
    at a point does not depend on which other points are evaluated with it.
    """

    kind = "integral"

    def __init__(self, integrand, x0=0.0, panel=0.05):
        self.integrand = as_profile(integrand)
        self.x0 = float(x0)
        self.panel = float(panel)
        if not self.panel > 0:
            raise ProfileError("panel width must be positive")

    def _rule(self, a, b):
        """Gauss-Legendre integrals over the intervals [a_i, b_i]."""
        h = (b - a)[:, None]
        nodes = a[:, None] + h * _GL_X[None, :]
        vals = self.integrand(nodes.ravel()).reshape(nodes.shape)
        return np.sum(vals * _GL_W[None, :] * h, axis=1)

    def value(self, x):
        x = _arr(x)
        flat = x.ravel()
        if flat.size == 0:
            return np.zeros_like(x)
        h, x0 = self.panel, self.x0
        k = np.trunc((flat - x0) / h).astype(np.int64)  # whole panels between x0 and x
        k_hi, k_lo = max(int(k.max()), 0), min(int(k.min()), 0)
        # cumulative whole-panel integrals, accumulated outward from x0
        up = np.zeros(k_hi + 1)
        if k_hi > 0:
            j = np.arange(k_hi)
            up[1:] = np.cumsum(self._rule(x0 + j * h, x0 + (j + 1) * h))
        down = np.zeros(-k_lo + 1)
        if k_lo < 0:
            j = np.arange(-k_lo)
            down[1:] = np.cumsum(self._rule(x0 - j * h, x0 - (j + 1) * h))
        whole = np.where(k >= 0, up[np.clip(k, 0, None)], down[np.clip(-k, 0, None)])
        start = x0 + k * h
        out = whole + self._rule(start, flat)
        return out.reshape(x.shape)

    def jet(self, x):
        x = _arr(x)
        g, g1, _ = self.integrand.jet(x)
        return self.value(x), g, g1

    def params(self):
        return {"x0": self.x0, "panel": self.panel}

    def children(self):
        return [self.integrand]


class Piecewise(Profile):
    """``left(x)`` for x <= at, ``right(x)`` beyond; for two expressions of the
    same function that are numerically preferable on either side."""

    kind = "piecewise"

    def __init__(self, left, right, at):
        self.left, self.right = as_profile(left), as_profile(right)
        self.at = float(at)

    def jet(self, x):
        x = _arr(x)
        on_left = x <= self.at
        return _split_jet(x, on_left, self.left, lambda y: y, self.right, lambda y: y, 1.0)

    def params(self):
        return {"at": self.at}

    def children(self):
        return [self.left, self.right]


def _split_jet(x, mask, left, lmap, right, rmap, rsign):
    """Evaluate ``left`` on ``x[mask]`` and ``right`` elsewhere (``rsign`` flips d1)."""
    v, d1, d2 = np.empty_like(x), np.empty_like(x), np.empty_like(x)
    for sel, prof, amap, sgn in ((mask, left, lmap, 1.0), (~mask, right, rmap, rsign)):
        if np.any(sel):
            a, a1, a2 = prof.jet(amap(x[sel]))
            v[sel], d1[sel], d2[sel] = a, sgn * a1, a2
    return v, d1, d2


class MirrorGlue(Profile):
    """``left(x)`` for x <= center and ``right(2 center - x)`` beyond.

    Smooth when both pieces agree to all orders near ``center`` (for instance
    when both are exactly constant there).
    """

    kind = "mirror-glue"

    def __init__(self, left, right, center):
        self.left, self.right = as_profile(left), as_profile(right)
        self.center = float(center)

    def jet(self, x):
        x = _arr(x)
        on_left = x <= self.center
        return _split_jet(x, on_left, self.left, lambda y: y, self.right,
                          lambda y: 2.0 * self.center - y, -1.0)

    def params(self):
        return {"center": self.center}

    def children(self):
        return [self.left, self.right]


_KINDS = {
    "constant": lambda d, a: Constant(d["value"]),
    "elementary": lambda d, a: Elementary(
        d["fn"], d.get("amplitude", 1.0), d.get("frequency", 1.0), d.get("phase", 0.0)
    ),
    "smoothstep": lambda d, a: Smoothstep(d["x0"], d["x1"], d.get("y0", 0.0), d.get("y1", 1.0)),
    "exponential-bump": lambda d, a: ExpBump(d["c"], d["q"], d.get("x0", 0.0), d.get("side", "right")),
    "sum": lambda d, a: Sum(a),
    "product": lambda d, a: Product(a),
    "composition": lambda d, a: Composition(a[0], a[1]),
    "reciprocal": lambda d, a: Reciprocal(a[0], d["lower_bound"]),
    "reparametrization": lambda d, a: Reparametrization(a[0], d.get("scale", 1.0), d.get("shift", 0.0)),
    "integral": lambda d, a: Integral(a[0], d.get("x0", 0.0), d.get("panel", 0.05)),
    "mirror-glue": lambda d, a: MirrorGlue(a[0], a[1], d["center"]),
    "piecewise": lambda d, a: Piecewise(a[0], a[1], d["at"]),
}


def register_kind(kind, factory):
    """Make an extra profile kind known to :func:`profile_from_dict`."""
    _KINDS[kind] = factory


def profile_from_dict(d) -> Profile:
    if isinstance(d, (int, float)):
        return Constant(d)
    if not isinstance(d, dict) or "kind" not in d:
        raise ProfileError(f"not a profile description: {d!r}")
    kind = d["kind"]
    if kind not in _KINDS:
        raise ProfileError(f"unknown profile kind {kind!r}")
    args = [profile_from_dict(a) for a in d.get("args", [])]
    try:
        return _KINDS[kind](d, args)
    except (KeyError, IndexError) as exc:
        raise ProfileError(f"malformed {kind} profile: missing {exc}") from exc


def even_bump(height, inner, outer, base=1.0) -> Profile:
    """``base + height`` on |x| <= inner, ``base`` on |x| >= outer; exactly even."""
    sq = Product([Elementary("identity"), Elementary("identity")])
    step = Smoothstep(inner**2, outer**2, y0=height, y1=0.0)
    return Sum([Constant(base), Composition(step, sq)])
