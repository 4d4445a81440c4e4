import numpy as np
import pytest

from piclab.metrics import ConformalMetric, WarpedMetric, h_std, round_sphere, s2xs2
from piclab.profiles import Composition, Constant, Elementary, Sum


def interior_points(metric, count, seed=0, pad=0.6):
    """Uniform points kept ``pad`` away from every chart face (and so from coordinate poles)."""
    lo = np.asarray(metric.domain.lo, dtype=float)
    hi = np.asarray(metric.domain.hi, dtype=float)
    rng = np.random.default_rng(seed)
    return lo + pad + (hi - lo - 2 * pad) * rng.random((count, 4))


def cosh_warped():
    return WarpedMetric.from_warping(Elementary("cosh"), 1.0, (-1.5, 1.5))


def conformal_cylinder(amplitude=0.1):
    # u^2 h_std with u = 1 + a cos(s), stored as exp(-2f) with f = -log u
    u = Sum([Constant(1.0), Elementary("cos", amplitude=amplitude)])
    return ConformalMetric(h_std(), Composition(Elementary("log", amplitude=-1.0), u))


STRUCTURED = {
    "cylinder": h_std,
    "round-s4": round_sphere,
    "cosh-warped": cosh_warped,
    "conformal-cylinder": conformal_cylinder,
    "s2xs2": s2xs2,
}


@pytest.fixture(params=sorted(STRUCTURED))
def structured_metric(request):
    return request.param, STRUCTURED[request.param]()


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
