from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from troamoeba.polytope import box, hexagon, segment, standard_simplex
from troamoeba.potential import PotentialFamily, Quadratic, QuarticRadial, identity_quadratic

settings.register_profile(
    "repo", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
G0 = [[1, 0], [0, 1]]
G1 = [["3/2", "3/4"], ["3/4", "3/2"]]
G2 = [["8/9", "-4/9"], ["-4/9", "8/9"]]
TRIPOD_V = {(0, 0): 0, (1, 0): "1/2", (0, 1): "1/4"}


@pytest.fixture
def simplex():
    return standard_simplex()


@pytest.fixture
def square2():
    return box([2, 2])


@pytest.fixture
def hexa():
    return hexagon()


@pytest.fixture
def seg():
    return segment()


@pytest.fixture
def seg_family(seg):
    return PotentialFamily(seg, identity_quadratic(1))


@pytest.fixture
def simplex_family(simplex):
    return PotentialFamily(simplex, identity_quadratic(2))


@pytest.fixture
def hexa_family(hexa):
    return PotentialFamily(hexa, QuarticRadial())


@pytest.fixture
def quadratics():
    return [Quadratic(G0), Quadratic(G1), Quadratic(G2)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def interior_points(P, k, rng, margin=1e-3):
    """Uniform samples of P by rejection, kept ``margin`` away from the facets."""
    lo, hi = P.bbox
    out = []
    while len(out) < k:
        X = rng.uniform(lo, hi, size=(4 * k, P.dim))
        out.extend(X[np.all(P.ell(X) > margin, axis=1)])
    return np.asarray(out[:k])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
