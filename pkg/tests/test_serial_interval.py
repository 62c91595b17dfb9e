import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiexplain.errors import ParameterDomainError
from epiexplain.serial_interval import (
    DiscretizedSerialInterval,
    GammaParams,
    discretize,
    gamma_cdf,
    gamma_from_mean_sd,
    serial_interval,
)

from oracles import quad_bucket_weights, quad_cdf, trapezoid_bucket_weights

DEFAULT = gamma_from_mean_sd(7.0, 4.5)


@pytest.mark.parametrize(
    "mean, sd, shape, scale",
    [
        (7.0, 4.5, 49 / 20.25, 20.25 / 7),
        (1.0, 1.0, 1.0, 1.0),
        (2.0, 1.0, 4.0, 0.5),
    ],
)
def test_moment_matching(mean, sd, shape, scale):
    p = gamma_from_mean_sd(mean, sd)
    assert p.shape == pytest.approx(shape, rel=1e-15)
    assert p.scale == pytest.approx(scale, rel=1e-15)
    assert p.mean == pytest.approx(mean, rel=1e-14)
    assert math.sqrt(p.variance) == pytest.approx(sd, rel=1e-14)


def test_default_parameters_rounded():
    assert DEFAULT.shape == pytest.approx(2.419753, abs=1e-6)
    assert DEFAULT.scale == pytest.approx(2.892857, abs=1e-6)


@pytest.mark.parametrize("mean, sd", [(0, 1), (1, 0), (-7, 4.5), (7, -4.5)])
def test_non_positive_parameters_rejected(mean, sd):
    with pytest.raises(ParameterDomainError):
        gamma_from_mean_sd(mean, sd)


def test_cdf_exponential_closed_form():
    expo = GammaParams(1.0, 1.0)
    assert gamma_cdf(expo, 1.5) == pytest.approx(1 - math.exp(-1.5), abs=1e-14)
    assert gamma_cdf(expo, 1.5) == pytest.approx(0.77687, abs=1e-5)


def test_cdf_endpoints():
    for p in (DEFAULT, GammaParams(0.5, 3.0), GammaParams(30.0, 0.1)):
        assert gamma_cdf(p, 0.0) == 0.0
    assert abs(gamma_cdf(DEFAULT, 1e6) - 1.0) < 1e-9


def test_cdf_negative_x_rejected():
    with pytest.raises(ParameterDomainError):
        gamma_cdf(DEFAULT, -0.1)


@pytest.mark.parametrize(
    "shape, scale",
    [(1.0, 1.0), (1.5, 0.7), (2.419753086419753, 2.892857142857143), (4.0, 0.5), (9.0, 3.0)],
)
def test_cdf_matches_adaptive_quadrature(shape, scale):
    p = GammaParams(shape, scale)
    xs = np.linspace(0.0, shape * scale + 8 * math.sqrt(shape) * scale, 100)
    worst = max(abs(gamma_cdf(p, x) - quad_cdf(shape, scale, x)) for x in xs)
    assert worst < 1e-9


@settings(max_examples=200, deadline=None)
@given(
    shape=st.floats(0.2, 50.0),
    scale=st.floats(0.05, 20.0),
    a=st.floats(0.0, 500.0),
    b=st.floats(0.0, 500.0),
)
def test_cdf_monotone(shape, scale, a, b):
    p = GammaParams(shape, scale)
    lo, hi = sorted((a, b))
    assert 0.0 <= gamma_cdf(p, lo) <= gamma_cdf(p, hi) <= 1.0


def test_discretize_exponential_two_days():
    si = discretize(GammaParams(1.0, 1.0), 2)
    assert si.horizon == 2
    assert si.weights[0] == pytest.approx(1 - math.exp(-1.5), abs=1e-14)
    assert si.weights[1] == pytest.approx(math.exp(-1.5) - math.exp(-2.5), abs=1e-14)
    assert si.weights[1] == pytest.approx(0.14100, abs=1e-4)


def test_discretize_single_bucket():
    si = discretize(DEFAULT, 1)
    assert si.weights == (gamma_cdf(DEFAULT, 1.5),)


def test_default_horizon_60_mass_against_trapezoid():
    si = discretize(DEFAULT, 60)
    assert si.total_mass() >= 0.999
    trap = trapezoid_bucket_weights(DEFAULT.shape, DEFAULT.scale, 60)
    assert trap.sum() >= 0.999
    np.testing.assert_allclose(si.as_array(), trap, atol=1e-7)


def test_default_weights_against_quadrature():
    si = discretize(DEFAULT, 60)
    oracle = quad_bucket_weights(DEFAULT.shape, DEFAULT.scale, 60)
    assert np.max(np.abs(si.as_array() - oracle)) < 1e-9


def test_default_horizon_tail_is_negligible():
    si = serial_interval()
    assert si.horizon == 100
    assert 1.0 - si.total_mass() < 1e-6


@pytest.mark.parametrize("horizon", [0, -3, 2.5])
def test_bad_horizon(horizon):
    with pytest.raises(ParameterDomainError):
        discretize(DEFAULT, horizon)


def test_weights_reproducible():
    assert discretize(DEFAULT, 80) == discretize(gamma_from_mean_sd(7.0, 4.5), 80)


@settings(max_examples=100, deadline=None)
@given(
    mean=st.floats(0.5, 30.0),
    sd=st.floats(0.3, 20.0),
    horizon=st.integers(2, 120),
)
def test_telescoping_and_mass_bound(mean, sd, horizon):
    p = gamma_from_mean_sd(mean, sd)
    si = discretize(p, horizon)
    w = si.as_array()
    assert (w >= 0).all()
    assert si.total_mass() <= 1.0 + 1e-12
    tail = math.fsum(si.weights[1:])
    assert abs(tail - (gamma_cdf(p, horizon + 0.5) - gamma_cdf(p, 1.5))) < 1e-12


def test_serial_interval_type_rejects_negative():
    with pytest.raises(ParameterDomainError):
        DiscretizedSerialInterval((0.5, -0.1))
    assert DiscretizedSerialInterval((0.5, 0.25)).weight(3) == 0.0
