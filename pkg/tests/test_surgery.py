import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from piclab.curvature import classify_curvature, curvature
from piclab.metrics import WarpedMetric, cylinder, h_std, line_points
from piclab.paths import certify_path
from piclab.profiles import Constant, Elementary, Sum
from piclab.surgery import (
    SurgeryError,
    SurgeryProfile,
    apply_surgery,
    build_standard_solution,
    double_surgery_isotopy,
    linear_homotopy_residual,
    rotational_asymmetry,
    surgery_cap_path,
    surgery_factor,
    surgery_points,
    verify_prop51,
)

PROF = surgery_factor(0.1, 20.0)


def near_cylinder(freq=0.0075):
    # strictly positive curvature operator, close to h_std
    return WarpedMetric.from_warping(Elementary("cos", frequency=freq), 1 / 6, (-4.0, 4.0), coord="s")


def fiber_perturbed(a=0.005, gamma="trivial"):
    return WarpedMetric(Constant(1.0), Sum([Constant(1.0), Elementary("cos", amplitude=a)]), 1 / 6,
                        (-4.0, 4.0), coord="s", gamma=gamma)


# -- profile ----------------------------------------------------------------

def test_factor_values():
    s = np.array([-1.0, 0.0, 4.0])
    f = PROF.f(s)
    assert f[0] == 0.0 and f[1] == 0.0
    assert f[2] == pytest.approx(6.7379e-4, rel=1e-4)
    xs = np.linspace(0.05, 200, 2000)
    assert np.all(np.diff(PROF.f(xs)) > 0) and PROF.f(np.array([1e6]))[0] < PROF.c


@settings(max_examples=30, deadline=None)
@given(c=st.floats(0.01, 0.2), q=st.floats(16.5, 60.0), s=st.floats(0.5, 4.0))
def test_f_identity_property(c, q, s):
    p = SurgeryProfile(c, q)
    assert p.identity_residual(np.array([s])) < 1e-10


def test_one_sided_derivatives_vanish_at_zero():
    v, d1, d2 = PROF.f.jet(np.array([-1e-3, 0.0, 1e-3]))
    assert np.all(v[:2] == 0) and np.all(d1[:2] == 0) and np.all(d2[:2] == 0)
    assert np.all(np.abs([v[2], d1[2], d2[2]]) < 1e-300)


def test_smallness_report_finite():
    small = PROF.smallness()
    assert len(small) == 3 and all(np.isfinite(v) and v < 0.05 for v in small.values())


@pytest.mark.parametrize("c,q", [(0.0, 20.0), (0.1, 10.0), (5.0, 17.0)])
def test_inadmissible_parameters(c, q):
    with pytest.raises(SurgeryError):
        surgery_factor(c, q)


def test_profile_roundtrip():
    back = SurgeryProfile.from_dict(PROF.to_dict())
    assert back.c == PROF.c and back.q == PROF.q


# -- apply_surgery ------------------------------------------------------------

def test_surgery_is_identity_on_negative_half():
    hat = apply_surgery(h_std(), PROF)
    pts = line_points(np.linspace(-3.9, 0.0, 40))
    assert np.array_equal(hat.coeffs(pts), h_std().coeffs(pts))
    a = classify_curvature(curvature(hat, pts))
    b = classify_curvature(curvature(h_std(), pts))
    assert np.array_equal(a.pco_margin, b.pco_margin)


def test_small_c_approaches_input():
    tiny = apply_surgery(h_std(), SurgeryProfile(1e-8, 20.0))
    pts = line_points(np.linspace(-3, 3.9, 30))
    assert np.max(np.abs(tiny.coeffs(pts) - h_std().coeffs(pts))) <= 2e-8 * 1.0 + 1e-15


# -- positivity certificate -----------------------------------------------------

def test_positivity_on_standard_cylinder():
    rep = verify_prop51(h_std(), PROF, s_count=200, fiber_count=5)
    assert rep.passed and rep.minimum["PCO"] > 0
    s = np.array([2.0])
    hat = apply_surgery(h_std(), PROF)
    obs = classify_curvature(curvature(hat, line_points(s))).pco_margin[0]
    f = PROF.f(s)[0]
    assert np.exp(-2 * f) * obs >= 0.5 * PROF.q**2 * f / (2 * 2.0**4)


def test_positivity_near_cylinder_dominates_bound():
    rep = verify_prop51(near_cylinder(), PROF, s_count=200, fiber_count=50, pinching_constant=3.0)
    assert rep.passed
    assert rep.extra["predicted_bound"]["rescaled_fraction"] >= 0.99
    assert rep.extra["pinching"]["violations"] == 0


def test_positivity_precondition_failures():
    with pytest.raises(SurgeryError, match="closeness"):
        verify_prop51(fiber_perturbed(0.2), PROF)
    with pytest.raises(SurgeryError, match="nonnegative"):
        verify_prop51(WarpedMetric.from_warping(Elementary("cosh", frequency=0.002), 1 / 6,
                                                (-4.0, 4.0), coord="s"), PROF, fiber_count=5)


# -- standard solution -------------------------------------------------------

@pytest.fixture(scope="module")
def model():
    return build_standard_solution(PROF)


def test_standard_solution_checks(model):
    assert model.checks["pco_min"] > 0
    assert model.checks["tip_umbilic_gap"] < 1e-4
    assert max(model.checks["join_jumps"]) < 1e-8
    v, d1, d2 = model.checks["tip_jet"]
    assert v == 0.0 and d1 == pytest.approx(np.sqrt(model.kappa)) and abs(d2) < 1e-12


def test_standard_solution_matches_half_cylinder_outside(model):
    pts = line_points(np.linspace(-3.9, model.s_join - 1e-6, 60))
    assert np.array_equal(model.metric.coeffs(pts), apply_surgery(h_std(), PROF).coeffs(pts))
    assert model.s_std(np.array([model.s_join]))[0] == pytest.approx(0.0, abs=1e-12)


def test_sharp_freeze_breaks_positivity():
    with pytest.raises(SurgeryError, match="positivity"):
        build_standard_solution(PROF, freeze_at=3.5)


# -- cap path -------------------------------------------------------------------

def test_cap_path_standard_is_constant(model):
    p = surgery_cap_path(h_std(), PROF, model=model)
    pts = surgery_points(model, 60)
    for mu in (0.3, 1.0):
        assert np.array_equal(p.member(mu).coeffs(pts), p.member(0.0).coeffs(pts))


@pytest.mark.parametrize("h", [cylinder(scale=1.005), fiber_perturbed()], ids=["scaled", "fiber"])
def test_cap_path_certified_and_linear(h, model):
    p = surgery_cap_path(h, PROF, model=model)
    rep = certify_path(p, ("PIC",), 10, surgery_points(model, 150))
    assert rep.passed
    xs = np.linspace(-3.999, -1e-3, 80)
    assert linear_homotopy_residual(p, h, cylinder(1 / 6, (-4.0, 4.0)), rep.mu, xs) < 1e-15
    assert rotational_asymmetry(p.member(1.0), np.linspace(-3, 6, 30)) < 1e-12


def test_cap_path_closeness_failure():
    with pytest.raises(SurgeryError, match="order"):
        surgery_cap_path(fiber_perturbed(0.2), PROF)


def test_linear_residual_only_on_negative_half(model):
    p = surgery_cap_path(h_std(), PROF, model=model)
    with pytest.raises(SurgeryError):
        linear_homotopy_residual(p, h_std(), h_std(), [0.5], np.array([0.5]))


# -- double surgery -------------------------------------------------------------

@pytest.mark.slow
def test_double_surgery_gamma_label_invariant():
    a = double_surgery_isotopy(fiber_perturbed(), PROF, mu_count=4, point_count=200)
    b = double_surgery_isotopy(fiber_perturbed(gamma="Z_2"), PROF, mu_count=4, point_count=200)
    assert a.report.passed and a.fixed_region_residual < 1e-12
    assert a.report.minimum == b.report.minimum
    assert a.chain_residual < 1e-12
