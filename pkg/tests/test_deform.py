import numpy as np
import pytest

from piclab.curvature import classify_curvature, curvature
from piclab.deform import (
    linear_blend_path,
    star_identity_residual,
    star_shaped_path,
    tube_straighten_path,
    upsilon_map,
    warped_flatten_path,
)
from piclab.metrics import WarpedMetric, cylinder, h_std, line_points, round_sphere
from piclab.paths import (
    CompositePath,
    IsotopyPath,
    PathError,
    certify_path,
    certify_samples,
    constant_path,
    default_points,
    merge_reports,
)
from piclab.profiles import Constant, Elementary, Integral, Reciprocal, Sum, even_bump


def bump_metric(height=0.01, kappa=1 / 6):
    return WarpedMetric.from_warping(even_bump(height, 0.5, 2.0), kappa, (-3.0, 3.0))


def cos_factor(a=0.1):
    return Sum([Constant(1.0), Elementary("cos", amplitude=a)])


# -- star-shaped -----------------------------------------------------------

def test_star_identity_factor_gives_constant_path():
    p = star_shaped_path(h_std(), Constant(1.0))
    pts = default_points(h_std().domain, 50)
    for mu in (0.0, 0.3, 1.0):
        assert np.max(np.abs(p.member(mu).coeffs(pts) - h_std().coeffs(pts))) < 1e-15


def test_star_homothety_sigma_on_round_sphere():
    s4 = round_sphere()
    p = star_shaped_path(s4, Constant(2.0))
    pts = line_points(np.linspace(0.3, 2.8, 20))
    for mu in np.linspace(0, 1, 6):
        sig = curvature(p.member(mu), pts).sigma
        assert np.allclose(sig, 12 / (1 + mu) ** 2, rtol=1e-12)


def test_star_identity_residual_small():
    p = star_shaped_path(h_std(), cos_factor())
    assert star_identity_residual(p, np.linspace(0, 1, 10), np.linspace(-3.5, 3.5, 100)) < 1e-6


def test_star_rejects_non_pic_endpoint():
    with pytest.raises(PathError, match="not PIC"):
        star_shaped_path(h_std(), Sum([Constant(1.0), Elementary("cos", amplitude=0.9, frequency=3.0)]))


# -- warped flattening -----------------------------------------------------

def test_flatten_flat_input_is_constant():
    h = cylinder(interval=(-3.0, 3.0))
    p = warped_flatten_path(h, b=2.0)
    pts = default_points(h.domain, 60)
    for mu in (0.25, 0.5, 0.75, 1.0):
        assert np.max(np.abs(p.member(mu).coeffs(pts) - h.coeffs(pts))) < 1e-15


@pytest.mark.parametrize("height,kappa", [(0.01, 1 / 6), (0.1, 1.0)])
def test_flatten_bump_certified(height, kappa):
    m = bump_metric(height, kappa)
    p = warped_flatten_path(m, b=2.0, symmetric=True)
    pts = default_points(m.domain, 200)
    rep = certify_path(p, ("PIC",), 50, pts)
    assert rep.passed and rep.minimum["PIC"] > 0
    assert p.endpoint_residuals(pts) == (0.0, 0.0)
    assert p.fixed_region_residual(pts, rep.mu) < 1e-12
    # evenness of every member
    xs = np.linspace(0.01, 2.99, 50)
    for mu in rep.mu:
        g = p.member(mu)
        assert np.max(np.abs(g.coeffs(line_points(xs)) - g.coeffs(line_points(-xs)))) < 1e-12


def test_flatten_midpoint_is_flat_in_upsilon():
    m = bump_metric(0.1, 1.0)
    p = warped_flatten_path(m, b=2.0)
    mid = p.member(0.5)
    xs = np.linspace(-2.5, 2.5, 21)
    # fiber is q_ref and radial is dr^2 / omega^2, so d upsilon = dr / omega
    assert np.allclose(mid.fiber_sq(xs), 1.0, atol=1e-14)
    w = even_bump(0.1, 0.5, 2.0)
    assert np.allclose(mid.radial_sq(xs), 1 / w(xs) ** 2, rtol=1e-13)
    ups = upsilon_map(p)
    oracle = Integral(Reciprocal(w, 0.5), x0=0.0)
    assert np.allclose(ups(xs), oracle(xs), atol=1e-12)
    ev = curvature(mid, line_points(xs)).op_eigenvalues
    assert np.allclose(ev, [0, 0, 0, 1, 1, 1], atol=1e-10)


def test_flatten_periodic_members_keep_period():
    m = WarpedMetric.from_warping(Sum([Constant(1.0), Elementary("sin", amplitude=0.1)]),
                                  1 / 6, (-np.pi, np.pi), periodic=2 * np.pi)
    p = warped_flatten_path(m, periodic=True)
    assert "quotient" in p.meta and p.meta["period"] == pytest.approx(2 * np.pi)
    xs = np.linspace(-3.0, -0.2, 30)
    for mu in np.linspace(0, 1, 7):
        g = p.member(mu)
        for prof in (g.radial_sq, g.fiber_sq):
            assert np.max(np.abs(prof(xs) - prof(xs + 2 * np.pi))) < 1e-12
    rep = certify_path(p, ("PIC",), 20, default_points(m.domain, 100))
    assert rep.passed


def test_flatten_input_errors():
    with pytest.raises(PathError, match="not PIC"):
        warped_flatten_path(bump_metric(0.2), b=2.0)
    with pytest.raises(PathError, match="end bands"):
        warped_flatten_path(bump_metric(0.01), b=1.0)
    with pytest.raises(PathError):
        warped_flatten_path(bump_metric(0.01))


def test_broken_bump_is_localized():
    m = bump_metric(0.2)
    p = warped_flatten_path(m, b=2.0, symmetric=True, precheck=False)
    pts = default_points(m.domain, 200)
    rep = certify_path(p, ("PIC",), 10, pts)
    assert not rep.passed
    mu, at = rep.argmin["PIC"]
    assert mu == 0.0 and 0.5 < abs(at[0]) < 2.0
    # the reported minimum is the margin at the reported location
    margin = classify_curvature(curvature(p.member(mu), np.array([at]))).pic_margin[0]
    assert margin == rep.minimum["PIC"] < 0


# -- tube straightening ----------------------------------------------------

def test_tube_straighten_standard_is_constant():
    p = tube_straighten_path(h_std())
    pts = default_points(h_std().domain, 80)
    for mu in (0.2, 0.5, 0.9):
        assert np.max(np.abs(p.member(mu).coeffs(pts) - h_std().coeffs(pts))) < 1e-14


@pytest.mark.parametrize("metric", [
    cylinder(scale=1.01),
    WarpedMetric(Constant(1.0), Sum([Constant(1.0), Elementary("cos", amplitude=0.005)]), 1 / 6,
                 (-4.0, 4.0), coord="s"),
], ids=["scaled", "fiber-perturbed"])
def test_tube_straighten_certified_with_linear_end_bands(metric):
    p = tube_straighten_path(metric)
    pts = default_points(metric.domain, 200)
    rep = certify_path(p, ("PIC",), 20, pts)
    assert rep.passed
    s = p.closure["scale"]
    target = cylinder(scale=s)
    ends = line_points(np.concatenate([np.linspace(-3.99, -3.0, 8), np.linspace(3.0, 3.99, 8)]))
    stage_a = p.children[0]
    worst = 0.0
    for mu in np.linspace(0, 1, 6):
        lin = (1 - mu) * metric.coeffs(ends) + mu * target.coeffs(ends)
        worst = max(worst, np.max(np.abs(stage_a.member(mu).coeffs(ends) - lin)))
    assert worst < 1e-12


def test_tube_straighten_closeness_failure():
    with pytest.raises(PathError, match="order"):
        tube_straighten_path(WarpedMetric(Constant(1.0), Sum([Constant(1.0), Elementary("cos", amplitude=0.2)]),
                                          1 / 6, (-4.0, 4.0), coord="s"))


# -- path plumbing and certification ---------------------------------------

def test_constant_round_sphere_certificate():
    s4 = round_sphere()
    pts = default_points(s4.domain, 50)
    rep = certify_path(constant_path(s4), ("PIC",), 10, pts)
    assert rep.minimum["PIC"] == pytest.approx(2.0, abs=1e-9)
    assert rep.passed and len(rep.mu) == 10
    at = rep.argmin["PIC"]
    assert at[0] == 0.0


def test_certification_threads_and_repeat_identical():
    m = bump_metric(0.1, 1.0)
    p = warped_flatten_path(m, b=2.0)
    pts = default_points(m.domain, 100)
    a = certify_path(p, ("PIC", "PSC"), 12, pts, threads=1)
    b = certify_path(p, ("PIC", "PSC"), 12, pts, threads=4)
    c = certify_path(p, ("PIC", "PSC"), 12, pts, threads=1)
    for r in (b, c):
        assert r.minimum == a.minimum and r.argmin == a.argmin
        for k in a.curves:
            assert np.array_equal(r.curves[k], a.curves[k])


def test_pass_flag_tracks_threshold():
    s4 = round_sphere()
    pts = default_points(s4.domain, 20)
    assert not certify_path(constant_path(s4), ("PIC",), 3, pts, threshold=2.5).passed


def test_empty_grid_report():
    rep = certify_samples("empty", [h_std()], [0.0], np.zeros((0, 4)))
    assert rep.points.shape[0] == 0


def test_linear_blend_endpoints_and_kappa_guard():
    a, b = cylinder(scale=1.01), h_std()
    p = linear_blend_path(a, b)
    pts = default_points(a.domain, 30)
    assert p.endpoint_residuals(pts) == (0.0, 0.0)
    with pytest.raises(PathError):
        linear_blend_path(a, cylinder(kappa=1.0)).member(0.5)


def test_composite_chain_checked():
    a = linear_blend_path(cylinder(scale=1.01), h_std())
    b = linear_blend_path(h_std(), cylinder(scale=0.99))
    pts = default_points(h_std().domain, 20)
    comp = CompositePath([a, b], check_points=pts)
    assert comp.chain_residual(pts) == 0.0
    assert np.max(np.abs(comp.member(0.5).coeffs(pts) - h_std().coeffs(pts))) == 0.0
    with pytest.raises(PathError, match="chain"):
        CompositePath([b, a], check_points=pts)


def test_path_parameter_and_kind_guards():
    p = constant_path(h_std())
    with pytest.raises(PathError):
        p.member(1.5)
    with pytest.raises(PathError):
        IsotopyPath("spiral", lambda mu: h_std(), h_std(), h_std())


def test_merge_reports_takes_worst():
    s4 = round_sphere()
    pts = default_points(s4.domain, 20)
    r1 = certify_path(constant_path(s4), ("PIC",), 3, pts, name="a")
    r2 = certify_path(constant_path(h_std()), ("PIC",), 3, default_points(h_std().domain, 20), name="b")
    m = merge_reports("both", [r1, r2])
    assert m.minimum["PIC"] == pytest.approx(1 / 6)
