"""Acceptance criteria 1-10, each timed against its runtime budget.

Every test records one PASS/FAIL line; the lines are printed in the terminal
summary (see ``conftest.pytest_terminal_summary``) and also shown with ``-s``.
"""
import contextlib
import shutil
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_KEY, STRUCTURED, conformal_cylinder, interior_points
from piclab.assembly import Piece, mw_connect, near_tip_distance
from piclab.curvature import (
    classify_curvature,
    conformal_scalar_sigma,
    curvature,
    curvature_fd,
    riemann_fd,
)
from piclab.deform import star_identity_residual, star_shaped_path, warped_flatten_path
from piclab.flows import dumbbell, ricci_flow_warped, yamabe_flow_rotsym
from piclab.harness import run_suite
from piclab.metrics import RawGridMetric, WarpedMetric, cylinder, h_std, line_points, s2xs2
from piclab.mw import mw_build_profile
from piclab.paths import certify_path, default_points
from piclab.profiles import Constant, Elementary, Sum, even_bump
from piclab.surgery import (
    apply_surgery,
    double_surgery_isotopy,
    linear_homotopy_residual,
    rotational_asymmetry,
    surgery_cap_path,
    surgery_factor,
    surgery_points,
    verify_prop51,
)

DEMOS = Path(__file__).resolve().parents[1] / "demos"
CYL_EIG = np.array([0, 0, 0, 1 / 6, 1 / 6, 1 / 6])
SURGERY = surgery_factor(0.1, 20.0)


@pytest.fixture
def criterion(request):
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    @contextlib.contextmanager
    def run(number, title, budget):
        notes = []
        t0 = time.perf_counter()
        try:
            yield notes.append
        except BaseException as exc:
            dt = time.perf_counter() - t0
            _emit(lines, f"FAIL criterion {number:2d} {title} [{dt:.2f} s]: {type(exc).__name__}: {exc}")
            raise
        dt = time.perf_counter() - t0
        verdict = "PASS" if dt < budget else "FAIL"
        _emit(lines, f"{verdict} criterion {number:2d} {title} [{dt:.2f} s < {budget:g} s] "
                     + "; ".join(notes))
        assert dt < budget, f"runtime {dt:.2f} s exceeds {budget} s"

    return run


def _emit(lines, text):
    lines.append(text)
    print(text)


def test_c01_cylinder_spectrum(criterion):
    with criterion(1, "cylinder spectrum", 1.0) as note:
        h = h_std()
        pts = interior_points(h, 20, seed=4)
        b = curvature(h, pts)
        e_an = np.max(np.abs(b.op_eigenvalues - CYL_EIG))
        e_fd = np.max(np.abs(curvature_fd(h, pts, 1e-3).op_eigenvalues - CYL_EIG))
        eye = np.eye(3) / 12
        e_blk = max(np.max(np.abs(b.blockA - eye)), np.max(np.abs(b.blockC - eye)))
        note(f"analytic {e_an:.1e}, fd {e_fd:.1e}, blocks {e_blk:.1e}")
        assert e_an < 1e-10 and e_fd < 1e-6 and e_blk < 1e-10


def _s2xs2_grid_errors(pts, mesh):
    exact = curvature(s2xs2(), pts).riemann
    err = 0.0
    for p, R in zip(pts, exact):
        grid = RawGridMetric.sample(s2xs2().coeffs, p, mesh / 2, half=4)
        err = max(err, float(np.max(np.abs(curvature_fd(grid, p, mesh).riemann - R))))
    return err


def test_c02_oracle_equivalence(criterion):
    with criterion(2, "oracle equivalence", 10.0) as note:
        worst, ratios = 0.0, []
        for name, make in sorted(STRUCTURED.items()):
            m = make()
            pts = interior_points(m, 20, seed=1)
            Ra = curvature(m, pts).riemann
            worst = max(worst, float(np.max(np.abs(riemann_fd(m, pts, 1e-3)[0] - Ra))))
            e2 = np.max(np.abs(riemann_fd(m, pts, 2e-2)[0] - Ra))
            e1 = np.max(np.abs(riemann_fd(m, pts, 1e-2)[0] - Ra))
            ratios.append(e2 / e1)
        gpts = interior_points(s2xs2(), 20, seed=2)
        worst = max(worst, _s2xs2_grid_errors(gpts, 1e-3))
        ratios.append(_s2xs2_grid_errors(gpts, 2e-2) / _s2xs2_grid_errors(gpts, 1e-2))
        note(f"max error {worst:.1e}, halving ratios {min(ratios):.3f}..{max(ratios):.3f}")
        assert worst < 1e-5
        assert all(3.5 <= r <= 4.5 for r in ratios)


def test_c03_sigma_equivalence(criterion):
    with criterion(3, "sigma equivalence", 2.0) as note:
        e_sig = e_tr = 0.0
        for i, (name, make) in enumerate(sorted(STRUCTURED.items())):
            m = make()
            b = curvature(m, interior_points(m, 40, seed=10 + i))
            rep = classify_curvature(b)
            e_sig = max(e_sig, float(np.max(np.abs(rep.pic_margin - b.sigma / 6))))
            trA = np.trace(b.blockA, axis1=1, axis2=2)
            trC = np.trace(b.blockC, axis1=1, axis2=2)
            e_tr = max(e_tr, float(np.max(np.abs(trA - b.scalar / 4))), float(np.max(np.abs(trC - b.scalar / 4))))
        note(f"|pic - sigma/6| {e_sig:.1e}, |tr - R/4| {e_tr:.1e} over 200 points")
        assert e_sig < 1e-9 and e_tr < 1e-9


def test_c04_conformal_formulas(criterion):
    with criterion(4, "conformal formulas", 5.0) as note:
        h = h_std()
        u = Sum([Constant(1.0), Elementary("cos", amplitude=0.1)])
        xs = np.linspace(-3.4, 3.4, 41)
        b = curvature(h, line_points(xs))
        Rn, _ = conformal_scalar_sigma(b.scalar, b.sigma, u(xs), h.laplacian(u, xs))
        e_R = float(np.max(np.abs(Rn - curvature(conformal_cylinder(), line_points(xs), "fd").scalar)))
        path = star_shaped_path(h, u)
        e_id = star_identity_residual(path, np.linspace(0, 1, 10), np.linspace(-3.5, 3.5, 100))
        note(f"R vs fd {e_R:.1e}, identity residual {e_id:.1e}")
        assert e_R < 1e-6 and e_id < 1e-6


def test_c05_warped_flattening(criterion):
    with criterion(5, "warped flattening", 10.0) as note:
        m = WarpedMetric.from_warping(even_bump(0.01, 0.5, 2.0), 1 / 6, (-3.0, 3.0))
        p = warped_flatten_path(m, b=2.0, symmetric=True)
        pts = default_points(m.domain, 200)
        rep = certify_path(p, ("PIC",), 50, pts)
        ends = p.endpoint_residuals(pts)
        fixed = p.fixed_region_residual(pts, rep.mu)
        xs = np.linspace(0.01, 2.99, 50)
        even = max(float(np.max(np.abs(p.member(mu).coeffs(line_points(xs))
                                       - p.member(mu).coeffs(line_points(-xs))))) for mu in rep.mu)
        note(f"min PIC {rep.minimum['PIC']:.4g}, endpoints {max(ends):.1e}, fixed {fixed:.1e}, evenness {even:.1e}")
        assert rep.passed and rep.minimum["PIC"] > 0
        assert max(ends) < 1e-12 and fixed < 1e-12 and even < 1e-12


def test_c06_mw_construction(criterion):
    with criterion(6, "connected-sum neck", 15.0) as note:
        prof = mw_build_profile(0.1, 0.5, 0.02)
        margin, _ = prof.min_margin(10_000)
        asm = mw_connect(Piece("round", name="a"), "north", Piece("round", name="b"), "south",
                         profile1=prof)
        neck = next(c for c in asm.charts if c.role == "neck")
        tip = near_tip_distance(neck.metric, prof.rho, prof.plateau_t)
        outer = max(r["residual"] for r in asm.outer_residuals)
        note(f"profile margin {margin:.4g}, assembly min {asm.min_margin:.4g}, near-tip {tip:.1e}, outer {outer}")
        assert margin > 0 and asm.passed
        assert tip < 1e-2 and outer == 0.0


def test_c07_surgery_positivity(criterion):
    with criterion(7, "surgery positivity", 10.0) as note:
        std = verify_prop51(h_std(), SURGERY, s_count=200, fiber_count=20)
        hat = apply_surgery(h_std(), SURGERY)
        s = np.linspace(0.5, 3.999, 400)
        direct = classify_curvature(curvature(hat, line_points(s))).pco_margin
        near = WarpedMetric.from_warping(Elementary("cos", frequency=0.0075), 1 / 6, (-4.0, 4.0), coord="s")
        rep = verify_prop51(near, SURGERY, s_count=200, fiber_count=50)
        frac = rep.extra["predicted_bound"]["rescaled_fraction"]
        note(f"h_std min PCO {min(std.minimum['PCO'], direct.min()):.3g}, "
             f"near-cylinder min PCO {rep.minimum['PCO']:.3g}, bound fraction {frac:.3f}")
        assert std.passed and np.all(direct > 0)
        assert rep.passed and frac >= 0.99


def test_c08_cap_isotopies(criterion):
    with criterion(8, "cap isotopies", 30.0) as note:
        pert = WarpedMetric(Constant(1.0), Sum([Constant(1.0), Elementary("cos", amplitude=0.005)]),
                            1 / 6, (-4.0, 4.0), coord="s")
        path = surgery_cap_path(pert, SURGERY)
        rep = certify_path(path, ("PIC",), 20, surgery_points(path.model, 200))
        lin = linear_homotopy_residual(path, pert, cylinder(1 / 6, (-4.0, 4.0)), rep.mu,
                                       np.linspace(-4.0 + 1e-3, -1e-3, 100))
        asym = rotational_asymmetry(path.member(1.0), np.linspace(-3.0, 6.0, 30))
        dbl = double_surgery_isotopy(pert, SURGERY)
        note(f"cap min PIC {rep.minimum['PIC']:.3g}, linear residual {lin:.1e}, "
             f"double min PIC {dbl.report.min_margin:.3g}, fixed region {dbl.fixed_region_residual:.1e}")
        assert rep.passed and lin < 1e-15 and asym < 1e-12
        assert dbl.report.passed and dbl.fixed_region_residual < 1e-12


def test_c09_flows(criterion):
    with criterion(9, "flows (cylinder)", 60.0) as note:
        tr = ricci_flow_warped(cylinder(1.0, (-2.0, 2.0)), n=60, record_every=10)
        err = max(float(np.max(np.abs(Q - (1 - 4 * t)))) for t, _, Q in tr.snapshots if t <= 0.24)
        t_ext = tr.events[0]["t"]
        note(f"|omega^2 - (1 - 4t)| {err:.1e} up to t = 0.24, extinction at t = {t_ext:.4f}")
        assert tr.snapshots[-2][0] >= 0.24 and err < 1e-3
        assert tr.events[0]["kind"] == "extinction" and abs(t_ext - 0.25) < 5e-3
    with criterion(9, "flows (dumbbell)", 60.0) as note:
        tr = ricci_flow_warped(dumbbell(), n=200)
        ev = tr.events[0]
        pic = min(r["pic_margin_min"] for r in tr.retained)
        note(f"{ev['kind']} at x = {ev['x']:.3f}, t = {ev['t']:.4f}; min retained PIC {pic:.3g}")
        assert ev["kind"] == "neck-blowup" and abs(ev["x"]) < 0.1 and pic > 0
    with criterion(9, "flows (Yamabe)", 60.0) as note:
        y = yamabe_flow_rotsym(Sum([Constant(1.0), Elementary("cos", amplitude=0.1)]), n=200)
        note(f"sup|R - r| {y.sup_dev[-1]:.2e} after {y.steps} steps, min R {min(y.min_R):.3g}, "
             f"volume drift {y.volume_drift:.1e}")
        assert y.converged and y.sup_dev[-1] < 1e-3
        assert min(y.min_R) > 0 and y.volume_drift < 1e-4


def _suite_outputs(src, work, threads):
    shutil.copytree(src, work)
    status, results = run_suite(work / "scenarios", seed=7, threads=threads, log=None)
    files = {p.name: p.read_bytes() for p in sorted((work / "scenarios").iterdir()) if p.suffix != ".cfg"}
    return status, {r.name: r.status for r in results}, files


def test_c10_determinism(criterion, tmp_path):
    with criterion(10, "determinism", 120.0) as note:
        src = tmp_path / "src"
        shutil.copytree(DEMOS / "scenarios", src / "scenarios")
        shutil.copytree(DEMOS / "metrics", src / "metrics")
        s_a, v_a, f_a = _suite_outputs(src, tmp_path / "a", 4)
        s_b, v_b, f_b = _suite_outputs(src, tmp_path / "b", 4)
        s_c, v_c, _ = _suite_outputs(src, tmp_path / "c", 1)
        note(f"{len(f_a)} files byte-identical across repeats; verdicts equal for 1 and 4 threads")
        assert len(f_a) == 2 * len(v_a) and f_a == f_b
        assert v_a == v_b == v_c and s_a == s_c
