import numpy as np
import pytest

from conftest import STRUCTURED, interior_points
from piclab.curvature import curvature
from piclab.metrics import MetricError, RawGridMetric, WarpedMetric, h_std, metric_from_dict, s2xs2
from piclab.profiles import Constant, Elementary


@pytest.mark.parametrize("name", sorted(STRUCTURED))
def test_serialization_roundtrip(name):
    m = STRUCTURED[name]()
    d = m.to_dict()
    assert d["schema_version"] == 1 and d["tag"] == m.tag
    back = metric_from_dict(d)
    pts = interior_points(m, 10)
    assert np.array_equal(back.coeffs(pts), m.coeffs(pts))


def test_raw_grid_roundtrip_and_off_grid_error():
    center = np.array([1.0, 0.5, 1.2, 0.1])
    g = RawGridMetric.sample(s2xs2().coeffs, center, 1e-2, half=1)
    back = metric_from_dict(g.to_dict())
    assert np.array_equal(back.coeffs(g.node_points()), g.coeffs(g.node_points()))
    with pytest.raises(MetricError):
        g.coeffs(center + 3e-3)


@pytest.mark.parametrize("bad", [
    {"tag": "mystery"},
    {"tag": "warped-cylinder", "schema_version": 2},
    [1, 2],
])
def test_bad_documents_rejected(bad):
    with pytest.raises(MetricError):
        metric_from_dict(bad)


def test_positive_definiteness_checked():
    m = WarpedMetric(Constant(1.0), Elementary("sin"), 1.0, (-1.0, 1.0))
    with pytest.raises(MetricError):
        m.check_positive(np.array([[-0.5, 1.0, 1.0, 0.0]]))
    assert np.all(h_std().check_positive(interior_points(h_std(), 5)) > 0)


def test_gamma_label_is_metadata_only():
    pts = interior_points(h_std(), 8)
    a, b = h_std(), h_std(gamma="binary-icosahedral")
    assert b.to_dict()["gamma"] == "binary-icosahedral"
    assert np.array_equal(curvature(a, pts).operator6, curvature(b, pts).operator6)
