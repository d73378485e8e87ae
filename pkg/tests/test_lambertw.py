import math

import mpmath
import pytest

from iwlearn.lambertw import lambert_w, lambert_w_exp


@pytest.mark.parametrize("z, expected", [
    (0.0, 0.0),
    (math.e, 1.0),
    (1.0, 0.5671432904097838),
    (-1.0 / math.e, -1.0),
])
def test_known_values(z, expected):
    assert lambert_w(z) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("z", [1e-300, 1e-12, 1e-3, 0.5, 10.0, 1e5, 1e100, 1e308])
def test_agrees_with_mpmath(z):
    assert lambert_w(z) == pytest.approx(float(mpmath.lambertw(z)), rel=1e-14)


@pytest.mark.parametrize("z", [-0.3678, -0.3, -0.1, -1e-8])
def test_negative_arguments(z):
    w = lambert_w(z)
    assert w >= -1.0
    assert w == pytest.approx(float(mpmath.lambertw(z)), rel=1e-9, abs=1e-12)


def test_domain_errors():
    with pytest.raises(ValueError):
        lambert_w(-0.5)
    with pytest.raises(ValueError):
        lambert_w(math.nan)
    with pytest.raises(ValueError):
        lambert_w_exp(math.nan)
    assert lambert_w(math.inf) == math.inf
    assert lambert_w_exp(math.inf) == math.inf


@pytest.mark.parametrize("a", [-700.0, -5.0, 0.0, 0.999, 1.0, 2.5, 3.0, 3.1, 50.0, 709.0,
                               710.0, 1e4, 1e8, 1e15])
def test_log_space_matches_mpmath(a):
    expected = mpmath.lambertw(mpmath.exp(mpmath.mpf(a)))
    assert lambert_w_exp(a) == pytest.approx(float(expected), rel=1e-14, abs=1e-300)


def test_log_space_continuous_across_branch_switch():
    below, above = lambert_w_exp(1.0 - 1e-12), lambert_w_exp(1.0)
    assert above - below == pytest.approx(1e-12 / (1.0 + 1.0 / above), rel=1e-3)
