import math

import numpy as np
import pytest

from piclab.flows import FlowError, dumbbell, ricci_flow_warped, yamabe_flow_rotsym
from piclab.metrics import WarpedMetric, cylinder, round_sphere
from piclab.profiles import Constant, Elementary, Sum


@pytest.mark.parametrize("kappa", [1 / 6, 1.0])
def test_cylinder_fiber_shrinks_linearly(kappa):
    tr = ricci_flow_warped(cylinder(kappa, (-2.0, 2.0)), n=60, record_every=50)
    assert tr.gauge == "arclength"
    for t, P, Q in tr.snapshots[:-1]:
        assert np.allclose(Q, 1.0 - 4.0 * kappa * t, atol=1e-12)
        assert np.allclose(P, 1.0, atol=1e-12)
    ev = tr.events[0]
    assert ev["kind"] == "extinction"
    assert ev["t"] == pytest.approx(1.0 / (4.0 * kappa), rel=2e-2)


def test_dumbbell_neck_pinches_first():
    tr = ricci_flow_warped(dumbbell(), n=200)
    ev = tr.events[0]
    assert ev["kind"] == "neck-blowup" and abs(ev["x"]) < 0.1
    assert ev["surgery_handoff"]["fiber_radius"] < 0.3
    assert min(tr.pic_min) > 0
    assert all(r["pic_margin_min"] > 0 for r in tr.retained)


def test_flow_is_deterministic():
    a = ricci_flow_warped(dumbbell(), n=100)
    b = ricci_flow_warped(dumbbell(), n=100)
    assert a.to_dict() == b.to_dict()


def test_t_max_stops_before_event():
    tr = ricci_flow_warped(cylinder(1.0, (-2.0, 2.0)), n=40, t_max=0.1)
    assert tr.times[-1] == pytest.approx(0.1) and not tr.events


def test_round_sphere_shrinks_to_round_point():
    tr = ricci_flow_warped(round_sphere(), n=120, blowup_threshold=20.0)
    assert tr.gauge == "conformal"
    ev = tr.events[0]
    assert ev["kind"] == "extinction"
    # radius^2 = 1 - 6t for the unit 4-sphere
    assert ev["t"] == pytest.approx(1.0 / 6.0, rel=5e-2)


def test_flow_rejects_non_pic_and_bad_ends():
    neg = WarpedMetric.from_warping(Elementary("cosh"), 1 / 6, (-1.0, 1.0), coord="s")
    with pytest.raises(FlowError):
        ricci_flow_warped(neg, n=40)


# -- Yamabe -------------------------------------------------------------------

@pytest.mark.parametrize("c", [1.0, 4.0])
def test_yamabe_constant_factor_is_stationary(c):
    y = yamabe_flow_rotsym(Constant(c), n=100)
    assert y.converged and y.steps == 0
    assert y.mean_R[0] == pytest.approx(12.0 / c)


def test_yamabe_perturbation_converges():
    init = Sum([Constant(1.0), Elementary("cos", amplitude=0.1)])
    y = yamabe_flow_rotsym(init, n=60, tol=1e-3)
    assert y.converged
    assert y.volume_drift < 1e-3
    assert np.all(np.diff(y.sup_dev[:: max(1, len(y.sup_dev) // 20)]) <= 1e-12)
    assert min(y.min_R) > 0


@pytest.mark.parametrize("init,match", [
    (Constant(-1.0), "positive"),
    (lambda th: 1.0 + 0.0 * th - 2.0 * (np.abs(th - 1.5) < 0.05), "positive"),
])
def test_yamabe_bad_initial_data(init, match):
    with pytest.raises(FlowError, match=match):
        yamabe_flow_rotsym(init, n=60)
