"""Curvature tensors, the operator on 2-forms, its self-dual blocks and classifiers.

Conventions: frame components ``R[i, j, k, l]`` with ``R[i, j, i, j]`` the
sectional curvature of the plane ``e_i ^ e_j``; the operator on 2-forms is
``op[(ij), (kl)] = R[i, j, k, l]`` in the basis 01, 02, 03, 12, 13, 23, so the
round unit sphere has ``op = I`` and scalar curvature ``R = 2 tr(op)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_S = 1.0 / np.sqrt(2.0)
# Columns: self-dual forms (e01+e23, e02-e13, e03+e12)/sqrt2, then
# anti-self-dual forms (e01-e23, e02+e13, e03-e12)/sqrt2.
SD_BASIS = _S * np.array(
    [
        [1, 0, 0, 1, 0, 0],
        [0, 1, 0, 0, 1, 0],
        [0, 0, 1, 0, 0, 1],
        [0, 0, 1, 0, 0, -1],
        [0, -1, 0, 0, 1, 0],
        [1, 0, 0, -1, 0, 0],
    ],
    dtype=float,
)


class CurvatureError(ValueError):
    pass


# -- tensor plumbing -------------------------------------------------------

def riemann_from_operator6(op):
    op = np.asarray(op, dtype=float)
    batch = op.shape[:-2]
    R = np.zeros(batch + (4, 4, 4, 4))
    for I, (i, j) in enumerate(PAIRS):
        for J, (k, l) in enumerate(PAIRS):
            v = op[..., I, J]
            R[..., i, j, k, l] = v
            R[..., j, i, k, l] = -v
            R[..., i, j, l, k] = -v
            R[..., j, i, l, k] = v
    return R


def operator6_from_riemann(R):
    R = np.asarray(R, dtype=float)
    op = np.empty(R.shape[:-4] + (6, 6))
    for I, (i, j) in enumerate(PAIRS):
        for J, (k, l) in enumerate(PAIRS):
            op[..., I, J] = R[..., i, j, k, l]
    return 0.5 * (op + np.swapaxes(op, -1, -2))


def symmetry_residual(R):
    R = np.asarray(R)
    r1 = np.abs(R + np.swapaxes(R, -4, -3))
    r2 = np.abs(R + np.swapaxes(R, -2, -1))
    pair = np.moveaxis(R, (-4, -3), (-2, -1))
    r3 = np.abs(R - pair)
    return np.max(np.maximum(np.maximum(r1, r2), r3), axis=(-4, -3, -2, -1))


def bianchi_residual(R):
    """Max over (i, j, k, l) of |R_ijkl + R_iklj + R_iljk|."""
    R = np.asarray(R)
    cyc = R + np.transpose(R, _axes_perm(R.ndim, (0, 2, 3, 1))) + np.transpose(
        R, _axes_perm(R.ndim, (0, 3, 1, 2)))
    return np.max(np.abs(cyc), axis=(-4, -3, -2, -1))


def _axes_perm(ndim, tail):
    lead = list(range(ndim - 4))
    return lead + [ndim - 4 + t for t in tail]


# -- blocks ----------------------------------------------------------------

@dataclass
class CurvatureBlocks:
    """Pointwise curvature package; every array may carry leading batch axes."""

    riemann: np.ndarray
    operator6: np.ndarray
    blockA: np.ndarray
    blockB: np.ndarray
    blockC: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    scalar: np.ndarray
    sigma: np.ndarray
    w_plus: np.ndarray
    w_minus: np.ndarray
    frame: np.ndarray | None = None

    def __len__(self):
        return int(np.prod(self.scalar.shape)) if np.ndim(self.scalar) else 1

    def __getitem__(self, i):
        def pick(v):
            return None if v is None else v[i]
        return CurvatureBlocks(**{k: pick(v) for k, v in self.__dict__.items()})

    @property
    def op_eigenvalues(self):
        return np.linalg.eigvalsh(self.operator6)

    def invariant_residuals(self):
        trA = np.trace(self.blockA, axis1=-2, axis2=-1)
        trC = np.trace(self.blockC, axis1=-2, axis2=-1)
        return {
            "symmetry": symmetry_residual(self.riemann),
            "bianchi": bianchi_residual(self.riemann),
            "trace_A": np.abs(trA - self.scalar / 4),
            "trace_C": np.abs(trC - self.scalar / 4),
            "sigma": np.abs(self.sigma - 6 * np.minimum(self.a[..., 0] + self.a[..., 1],
                                                        self.c[..., 0] + self.c[..., 1])),
        }


def blocks_from_riemann(R, frame=None) -> CurvatureBlocks:
    R = np.asarray(R, dtype=float)
    op = operator6_from_riemann(R)
    M = SD_BASIS.T @ op @ SD_BASIS
    M = 0.5 * (M + np.swapaxes(M, -1, -2))
    A, B, C = M[..., :3, :3], M[..., :3, 3:], M[..., 3:, 3:]
    a = np.linalg.eigvalsh(A)
    c = np.linalg.eigvalsh(C)
    btb = np.swapaxes(B, -1, -2) @ B
    b = np.sqrt(np.clip(np.linalg.eigvalsh(btb), 0.0, None))
    scalar = 2.0 * np.trace(op, axis1=-2, axis2=-1)
    wp = a - scalar[..., None] / 12.0
    wm = c - scalar[..., None] / 12.0
    sigma = scalar - 6.0 * np.maximum(wp[..., -1], wm[..., -1])
    return CurvatureBlocks(R, op, A, B, C, a, b, c, scalar, sigma, wp, wm, frame)


# -- classifiers -----------------------------------------------------------

@dataclass
class ConditionReport:
    pic_margin: np.ndarray
    pco_margin: np.ndarray
    psc_margin: np.ndarray
    pinching_margins: np.ndarray  # (..., 3)
    pinching_constant: float

    @property
    def pic(self):
        return self.pic_margin > 0

    @property
    def pco(self):
        return self.pco_margin > 0

    @property
    def psc(self):
        return self.psc_margin > 0

    @property
    def pinched(self):
        return np.all(self.pinching_margins >= 0, axis=-1)

    @property
    def pinching_margin(self):
        return np.min(self.pinching_margins, axis=-1)

    def margin(self, condition: str):
        cond = condition.upper()
        if cond == "PIC":
            return self.pic_margin
        if cond == "PCO":
            return self.pco_margin
        if cond == "PSC":
            return self.psc_margin
        if cond.startswith("PINCHING"):
            return self.pinching_margin
        raise CurvatureError(f"unknown condition {condition!r}")


def classify_curvature(blocks: CurvatureBlocks, pinching_constant=np.inf,
                       check=True) -> ConditionReport:
    a, b, c = blocks.a, blocks.b, blocks.c
    pic = np.minimum(a[..., 0] + a[..., 1], c[..., 0] + c[..., 1])
    pco = blocks.op_eigenvalues[..., 0]
    lam = float(pinching_constant)
    if np.isinf(lam):
        pa = np.where(a[..., 0] > 0, np.inf, np.where(a[..., 0] < 0, -np.inf, 0.0))
        pc = np.where(c[..., 0] > 0, np.inf, np.where(c[..., 0] < 0, -np.inf, 0.0))
    else:
        pa = lam * a[..., 0] - a[..., 2]
        pc = lam * c[..., 0] - c[..., 2]
    pin = np.stack([pa, pc, a[..., 0] * c[..., 0] - b[..., 2] ** 2], axis=-1)
    rep = ConditionReport(pic, pco, blocks.scalar, pin, lam)
    if check:
        tol = 1e-9 * np.maximum(1.0, np.abs(blocks.scalar))
        if np.any(np.abs(pic - blocks.sigma / 6.0) > tol):
            raise CurvatureError("sign equivalence between sigma and the PIC margin violated")
        if np.any((pco > 0) & ~(pic > 0)) or np.any((pic > 0) & ~(blocks.scalar > 0)):
            raise CurvatureError("implication chain PCO => PIC => PSC violated")
    return rep


# -- analytic backends -----------------------------------------------------

def curvature_analytic(metric, points) -> CurvatureBlocks:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if not np.all(metric.domain.contains(pts)):
        raise CurvatureError("evaluation point outside the chart domain")
    if not metric.has_analytic():
        raise CurvatureError(f"no analytic backend for tag {metric.tag!r}")
    return blocks_from_riemann(metric.riemann(pts))


def curvature_warped(metric, point) -> CurvatureBlocks:
    if metric.tag not in ("warped-cylinder", "round-sphere-polar"):
        raise CurvatureError("curvature_warped needs a warped chart")
    pts = np.atleast_2d(np.asarray(point, dtype=float))
    if not np.all(metric.domain.contains(pts)):
        raise CurvatureError("evaluation point outside the chart domain")
    if np.any(metric.fiber_sq(pts[:, 0]) <= 0):
        raise CurvatureError("warping function must be positive")
    out = blocks_from_riemann(metric.riemann(pts))
    return out[0] if np.ndim(point) == 1 else out


def conformal_riemann(R, f, grad, hess, h=None):
    """Frame components of ``exp(-2 f) h`` from those of ``h``.

    ``R``, ``grad`` and ``hess`` are components in an ``h``-orthonormal frame
    (``h`` defaults to the identity there); the result is expressed in the
    rescaled frame ``exp(f) e_i``.
    """
    R = np.asarray(R, dtype=float)
    batch = R.shape[:-4]
    h = np.broadcast_to(np.eye(4) if h is None else np.asarray(h, dtype=float), batch + (4, 4))
    g = np.asarray(grad, dtype=float)
    H = np.asarray(hess, dtype=float)
    ein = np.einsum
    df2 = ein("...i,...ij,...j->...", g, np.linalg.inv(h), g)
    ff = ein("...a,...b->...ab", g, g)
    hh = ein("...ik,...jl->...ijkl", h, h) - ein("...il,...jk->...ijkl", h, h)
    T = (
        R
        - ein("...jk,...il->...ijkl", ff, h)
        + ein("...jl,...ik->...ijkl", ff, h)
        + ein("...ik,...jl->...ijkl", ff, h)
        - ein("...il,...jk->...ijkl", ff, h)
        - hh * df2[..., None, None, None, None]
        - ein("...jk,...il->...ijkl", H, h)
        + ein("...ik,...jl->...ijkl", H, h)
        + ein("...jl,...ik->...ijkl", H, h)
        - ein("...il,...jk->...ijkl", H, h)
    )
    return np.exp(2.0 * np.asarray(f, dtype=float))[..., None, None, None, None] * T


def curvature_conformal(base: CurvatureBlocks, f_value, f_gradient, f_hessian,
                        base_metric_coeffs=None, tol=1e-8) -> CurvatureBlocks:
    bres = bianchi_residual(base.riemann)
    if np.any(bres > tol):
        raise CurvatureError(f"base curvature fails the Bianchi identity (residual {np.max(bres):.2e})")
    R = conformal_riemann(base.riemann, f_value, f_gradient, f_hessian, base_metric_coeffs)
    return blocks_from_riemann(R)


def conformal_scalar_sigma(R_base, sigma_base, u_value, laplacian_u):
    u = np.asarray(u_value, dtype=float)
    if np.any(u <= 0):
        raise CurvatureError("conformal factor must be positive")
    lap = np.asarray(laplacian_u, dtype=float)
    return u**-3 * (-6.0 * lap + R_base * u), u**-3 * (-6.0 * lap + sigma_base * u)


# -- finite-difference oracle ----------------------------------------------

def _fd_offsets():
    offs = {(0, 0, 0, 0)}
    for m in range(4):
        for s in (-1, 1):
            e = [0] * 4
            e[m] = s
            offs.add(tuple(e))
            e2 = list(e)
            e2[m] = 2 * s
            offs.add(tuple(e2))
            for n in range(4):
                if n == m:
                    continue
                for t in (-1, 1):
                    e3 = list(e)
                    e3[n] = t
                    offs.add(tuple(e3))
    return sorted(offs)


_OFFSETS = _fd_offsets()
_OFFSET_INDEX = {o: i for i, o in enumerate(_OFFSETS)}


def _christoffel(g, dg):
    """Gamma^a_bc from g (..., 4, 4) and dg[..., c, a, b] = d_c g_ab."""
    ginv = np.linalg.inv(g)
    # lowered: Gamma_abc = (d_b g_ac + d_c g_ab - d_a g_bc) / 2
    low = 0.5 * (np.einsum("...bac->...abc", dg) + np.einsum("...cab->...abc", dg)
                 - np.einsum("...abc->...abc", dg))
    return np.einsum("...ad,...dbc->...abc", ginv, low)


def riemann_fd(metric, points, mesh=1e-3):
    """Frame Riemann components by nested central differences; returns (R, frame).

    The stencil spans ``x +- mesh`` in each coordinate direction.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    mesh = np.broadcast_to(np.asarray(mesh, dtype=float), (4,))
    if not np.all(metric.domain.contains(pts, margin=2 * mesh)):
        raise CurvatureError("finite-difference stencil exits the chart domain")
    # Christoffels live at the half-mesh points x +- mesh/2 e_c, so every
    # difference is a centred one of width ``mesh`` (compact stencil).
    h = 0.5 * mesh
    n = pts.shape[0]
    offs = np.array(_OFFSETS, dtype=float)
    stencil = pts[:, None, :] + offs[None, :, :] * h
    G = metric.coeffs(stencil.reshape(-1, 4)).reshape(n, len(_OFFSETS), 4, 4)
    G = 0.5 * (G + np.swapaxes(G, -1, -2))
    if np.any(np.linalg.eigvalsh(G)[..., 0] <= 0):
        raise CurvatureError("metric not positive definite on the stencil")

    def at(o):
        return G[:, _OFFSET_INDEX[tuple(o)]]

    def gamma_at(base):
        dg = np.empty((n, 4, 4, 4))
        for c in range(4):
            up, dn = list(base), list(base)
            up[c] += 1
            dn[c] -= 1
            dg[:, c] = (at(up) - at(dn)) / (2 * h[c])
        return _christoffel(at(base), dg)

    zero = [0, 0, 0, 0]
    gam0 = gamma_at(zero)
    dgam = np.empty((n, 4, 4, 4, 4))  # dgam[:, c, a, b, d] = d_c Gamma^a_bd
    for c in range(4):
        up, dn = list(zero), list(zero)
        up[c], dn[c] = 1, -1
        dgam[:, c] = (gamma_at(up) - gamma_at(dn)) / (2 * h[c])
    # R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb
    Rup = (
        np.einsum("...cadb->...abcd", dgam)
        - np.einsum("...dacb->...abcd", dgam)
        + np.einsum("...ace,...edb->...abcd", gam0, gam0)
        - np.einsum("...ade,...ecb->...abcd", gam0, gam0)
    )
    g0 = at(zero)
    Rlow = np.einsum("...ae,...ebcd->...abcd", g0, Rup)
    E = orthonormal_frame(g0)
    Rf = np.einsum("...abcd,...ai,...bj,...ck,...dl->...ijkl", Rlow, E, E, E, E)
    return Rf, E


def orthonormal_frame(g):
    """Columns are an orthonormal frame: inverse transpose of the Cholesky factor."""
    L = np.linalg.cholesky(g)
    return np.swapaxes(np.linalg.inv(L), -1, -2)


def curvature_fd(metric, point, mesh=1e-3) -> CurvatureBlocks:
    R, E = riemann_fd(metric, point, mesh)
    out = blocks_from_riemann(R, frame=E)
    return out[0] if np.ndim(point) == 1 else out


def curvature(metric, points, backend="analytic") -> CurvatureBlocks:
    if backend == "analytic":
        return curvature_analytic(metric, points)
    if backend == "fd":
        return curvature_fd(metric, np.atleast_2d(points))
    raise CurvatureError(f"unknown backend {backend!r}")


# -- C^k distance ----------------------------------------------------------

def _multi_indices(k):
    for order in range(k + 1):
        for combo in itertools.combinations_with_replacement(range(4), order):
            yield tuple(combo.count(a) for a in range(4))


def _difference_stencil(beta, h):
    """Nodes and weights of the product of repeated central differences."""
    axes = []
    for a, m in enumerate(beta):
        j = np.arange(m + 1)
        binom = np.array([_binom(m, i) for i in j], dtype=float)
        w = binom * (-1.0) ** j / (2 * h[a]) ** m
        axes.append(((m - 2 * j) * h[a], w))
    nodes = np.array(list(itertools.product(*[ax[0] for ax in axes])))
    weights = np.array([np.prod(c) for c in itertools.product(*[ax[1] for ax in axes])])
    return nodes, weights


def _binom(n, k):
    from math import comb

    return comb(n, k)


def ck_distance(m1, m2, k, grid, mesh=2e-2, normalize=False) -> float:
    """Sup of |d^beta (g1 - g2)| over grid points and |beta| <= k.

    With ``normalize`` each component is divided by ``sqrt(g2_ii g2_jj)`` at the
    grid point, which measures the difference in a ``g2``-orthonormal scale.
    """
    if not (0 <= int(k) <= 4):
        raise CurvatureError("derivative order must be between 0 and 4")
    if m1.domain != m2.domain:
        raise CurvatureError("C^k distance needs identical chart domains")
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    h = np.broadcast_to(np.asarray(mesh, dtype=float), (4,))
    if not np.all(m1.domain.contains(pts, margin=k * h)):
        raise CurvatureError("C^k grid too close to the chart boundary")
    best = 0.0
    scale = 1.0
    if normalize:
        dg = np.sqrt(np.abs(np.diagonal(m2.coeffs(pts), axis1=-2, axis2=-1)))
        scale = dg[:, :, None] * dg[:, None, :]
    for beta in _multi_indices(int(k)):
        nodes, w = _difference_stencil(beta, h)
        allp = (pts[:, None, :] + nodes[None, :, :]).reshape(-1, 4)
        diff = (m1.coeffs(allp) - m2.coeffs(allp)).reshape(pts.shape[0], len(w), 4, 4)
        d = np.einsum("s,nsij->nij", w, diff) / scale
        best = max(best, float(np.max(np.abs(d))))
    return best


# -- isotropic curvature sampling ------------------------------------------

def isotropic_curvature(R, frames):
    """R_1313 + R_1414 + R_2323 + R_2424 - 2 R_1234 for frames (..., 4, 4) (columns)."""
    def comp(i, j, k, l):
        return np.einsum("abcd,...a,...b,...c,...d->...", R, frames[..., i], frames[..., j],
                         frames[..., k], frames[..., l], optimize=True)

    return (comp(0, 2, 0, 2) + comp(0, 3, 0, 3) + comp(1, 2, 1, 2) + comp(1, 3, 1, 3)
            - 2.0 * comp(0, 1, 2, 3))


def random_frames(count, seed, stream=0):
    """Haar-random orthonormal 4-frames from a counter-based generator."""
    rng = np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, 0, int(stream)]))
    Z = rng.standard_normal((count, 4, 4))
    Q, Rr = np.linalg.qr(Z)
    d = np.sign(np.diagonal(Rr, axis1=-2, axis2=-1))
    return Q * d[:, None, :]


def min_isotropic_curvature(R, samples=1000, seed=0, stream=0):
    """Sampled estimate of the minimal isotropic curvature at one point."""
    frames = np.concatenate([np.eye(4)[None], random_frames(samples, seed, stream)])
    # include both orientations of each frame
    flip = frames.copy()
    flip[:, :, 3] *= -1
    vals = isotropic_curvature(R, np.concatenate([frames, flip]))
    return float(np.min(vals))
