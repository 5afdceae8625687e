import json
import math

import pytest

from _suite import H_STAR_Z
from sinkhorn_mirror import (
    BoundReport,
    NonpositiveEps,
    ZeroIterations,
    bound_basic,
    bound_general,
    bound_quadratic,
    bound_strong,
    bound_talagrand,
)


def test_bound_basic():
    assert bound_basic(0.0, 17) == 0.0
    assert bound_basic(1.0, 4) == 0.25
    assert bound_basic(H_STAR_Z, 1) == H_STAR_Z
    with pytest.raises(ZeroIterations):
        bound_basic(1.0, 0)


def test_bound_general():
    assert bound_general(0.7, 1.0, 3) == bound_basic(0.7, 3)
    assert bound_general(0.7, math.e, 1) == pytest.approx(1.7)
    assert bound_general(0.7, 0.5, 1) < 0.7


def test_bound_strong():
    assert bound_strong(0.9, 0.0, 3) == bound_basic(0.9, 3)
    assert bound_strong(1.0, 0.3, 2) == pytest.approx(0.35)
    assert bound_strong(1.0, -0.5, 1) == 1.5


def test_bound_quadratic():
    assert bound_quadratic(0.0, 0.0, 0.3, 5) == 0.0
    assert bound_quadratic(1.0, 1.0, 1.0, 2) == 1.0
    # eps = 1e-4 with O(1) moments needs about 1e7 iterations for accuracy 1e-3
    n = math.ceil(bound_quadratic(0.5, 0.5, 1e-4, 1) / 1e-3)
    assert 1e6 < n <= 1e8
    with pytest.raises(NonpositiveEps):
        bound_quadratic(1.0, 1.0, 0.0, 1)


def test_bound_talagrand():
    assert bound_talagrand(0.5, 0.5, 1.0, math.log(2)) == pytest.approx(2.0)
    assert bound_talagrand(0.0, 0.0, 1.0, 1.0) == 0.0
    assert bound_talagrand(0.3, 0.4, 1.0, 50.0) == pytest.approx(0.7, rel=1e-15)


def test_report_json_fields():
    r = BoundReport.from_values(1.0, -0.1, 0.2, 0.8, m2_mu=1.0, m2_nu=2.0, eps=0.5)
    d = json.loads(r.to_json())
    assert d == {
        "h_star": 1.0,
        "log_mass": -0.1,
        "kl_mu_mubar": 0.2,
        "c_basic": 1.0,
        "c_general": 0.9,
        "c_strong": 0.8,
        "c_exact": 0.8,
        "c_quadratic": 6.0,
        "c_talagrand": None,
    }
