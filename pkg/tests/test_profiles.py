import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from piclab.profiles import (
    Composition,
    Constant,
    Elementary,
    ExpBump,
    Integral,
    MirrorGlue,
    Piecewise,
    Product,
    ProfileError,
    Reciprocal,
    Reparametrization,
    Smoothstep,
    Sum,
    even_bump,
    linear,
    profile_from_dict,
)

XS = np.linspace(-1.7, 2.3, 41)

CASES = {
    "constant": Constant(2.5),
    "sin": Elementary("sin", amplitude=0.7, frequency=1.3, phase=0.2),
    "cosh": Elementary("cosh", frequency=0.5),
    "smoothstep": Smoothstep(-1.0, 1.5, 0.2, 1.1),
    "exp-bump": ExpBump(0.3, 2.0, x0=-2.0),
    "exp-bump-left": ExpBump(0.3, 2.0, x0=3.0, side="left"),
    "sum": Sum([Elementary("sin"), Constant(1.0), linear(0.5)]),
    "product": Product([Elementary("cos"), Elementary("exp", amplitude=0.5)]),
    "composition": Composition(Elementary("tanh"), Elementary("sin", frequency=2.0)),
    "reciprocal": Reciprocal(Sum([Constant(2.0), Elementary("sin")]), 0.9),
    "reparametrization": Reparametrization(Elementary("sin"), scale=2.0, shift=0.3),
    "integral": Integral(Elementary("cos"), x0=0.2),
    "piecewise": Piecewise(Elementary("sin"), Elementary("sin"), at=0.4),
    "bump": even_bump(0.2, 0.5, 1.5),
}


def fd_jet(p, x, h=1e-4):
    f = p(x)
    fp, fm = p(x + h), p(x - h)
    return (fp - fm) / (2 * h), (fp - 2 * f + fm) / h**2


@pytest.mark.parametrize("name", sorted(CASES))
def test_exact_derivatives_match_finite_differences(name):
    p = CASES[name]
    v, d1, d2 = p.jet(XS)
    f1, f2 = fd_jet(p, XS)
    assert np.allclose(d1, f1, atol=1e-6)
    assert np.allclose(d2, f2, atol=1e-4)
    assert np.array_equal(v, p(XS))


@pytest.mark.parametrize("name", sorted(CASES))
def test_serialization_roundtrip(name):
    p = CASES[name]
    q = profile_from_dict(p.to_dict())
    for a, b in zip(p.jet(XS), q.jet(XS)):
        assert np.array_equal(a, b)


def test_closed_forms():
    x = np.array([0.3, 1.1])
    v, d1, d2 = Elementary("sin", amplitude=2.0, frequency=3.0).jet(x)
    assert np.allclose(v, 2 * np.sin(3 * x))
    assert np.allclose(d1, 6 * np.cos(3 * x))
    assert np.allclose(d2, -18 * np.sin(3 * x))
    v, d1, d2 = ExpBump(0.1, 20.0).jet(np.array([4.0]))
    assert v[0] == pytest.approx(0.1 * np.exp(-5.0), rel=1e-14)
    assert d1[0] == pytest.approx(20 / 16 * v[0], rel=1e-13)


def test_smoothstep_exact_outside_window():
    s = Smoothstep(0.0, 1.0, 3.0, 5.0)
    v, d1, d2 = s.jet(np.array([-1.0, 0.0, 1.0, 2.0]))
    assert list(v) == [3.0, 3.0, 5.0, 5.0]
    assert np.all(d1[[0, 3]] == 0) and np.all(d2[[0, 3]] == 0)


@settings(max_examples=40, deadline=None)
@given(x0=st.floats(-3, 3), width=st.floats(0.1, 5), y0=st.floats(-2, 2), y1=st.floats(-2, 2))
def test_smoothstep_derivative_bounds_hold(x0, width, y0, y1):
    s = Smoothstep(x0, x0 + width, y0, y1)
    b1, b2 = s.derivative_bounds()
    _, d1, d2 = s.jet(np.linspace(x0 - 0.1, x0 + width + 0.1, 2001))
    assert np.max(np.abs(d1)) <= b1 * (1 + 1e-9) + 1e-15
    assert np.max(np.abs(d2)) <= b2 * (1 + 1e-9) + 1e-15


@settings(max_examples=40, deadline=None)
@given(h=st.floats(-0.5, 0.5), inner=st.floats(0.05, 2.0), gap=st.floats(0.05, 2.0),
       x=st.floats(0.0, 5.0))
def test_even_bump_is_exactly_even(h, inner, gap, x):
    b = even_bump(h, inner, inner + gap)
    assert b(np.array([x]))[0] == b(np.array([-x]))[0]
    assert b(np.array([inner + gap + 0.1]))[0] == 1.0


def test_reciprocal_requires_certified_bound():
    with pytest.raises(ProfileError):
        Reciprocal(Constant(1.0), 0.0)
    r = Reciprocal(Elementary("sin"), 0.5)
    with pytest.raises(ProfileError):
        r(np.array([0.1]))


def test_integral_is_batch_independent():
    p = Integral(Elementary("exp"), x0=-0.3)
    xs = np.linspace(-2, 2, 17)
    one_by_one = np.array([p(np.array([x]))[0] for x in xs])
    assert np.array_equal(one_by_one, p(xs))
    assert np.allclose(p(xs), np.exp(xs) - np.exp(-0.3), rtol=1e-13)


def test_mirror_glue_reflects_right_piece():
    g = MirrorGlue(Constant(1.0), Elementary("identity"), center=2.0)
    assert g(np.array([3.5]))[0] == pytest.approx(0.5)
    assert g.d1(np.array([3.5]))[0] == pytest.approx(-1.0)


@pytest.mark.parametrize("bad", [{"kind": "nope"}, {"value": 1.0}, {"kind": "smoothstep", "x0": 0.0},
                                 "text"])
def test_malformed_descriptions_rejected(bad):
    with pytest.raises(ProfileError):
        profile_from_dict(bad)


def test_arithmetic_sugar():
    s = Elementary("sin")
    x = np.array([0.4])
    assert (2 * s + 1)(x)[0] == pytest.approx(2 * np.sin(0.4) + 1)
    assert (s - s)(x)[0] == 0.0
    assert (-s)(x)[0] == pytest.approx(-np.sin(0.4))
