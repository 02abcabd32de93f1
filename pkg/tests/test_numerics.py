import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from cogcap.errors import DomainError
from cogcap.numerics import (
    GammaArgs,
    gamma_pq,
    inv_reg_lower_gamma,
    reg_lower_gamma,
    reg_upper_gamma,
    spectral_radius_generic,
)
from cogcap.params import SystemParams
from cogcap.sensing import SensingOperatingPoint
from cogcap.statemodel import transition_rows

shapes = st.floats(min_value=0.05, max_value=300.0)
xs = st.floats(min_value=0.0, max_value=600.0)


def test_shape_one_closed_form():
    assert reg_lower_gamma(1, 0.5) == pytest.approx(1 - math.exp(-0.5), abs=1e-14)


def test_zero_limit():
    assert reg_lower_gamma(10, 0.0) == 0.0
    assert reg_upper_gamma(10, 0.0) == 1.0


def test_shape_ten_matches_quadrature():
    val, err = integrate.quad(lambda t: t**9 * math.exp(-t), 0, 10, epsabs=1e-14, epsrel=1e-14)
    assert reg_lower_gamma(10, 10) == pytest.approx(val / math.factorial(9), abs=1e-10)


def test_large_x_tends_to_one():
    assert reg_lower_gamma(10, 1e4) == 1.0
    assert reg_upper_gamma(10, 1e4) == 0.0


@given(shapes, xs)
def test_against_scipy(shape, x):
    p, q = gamma_pq(shape, x)
    assert p == pytest.approx(special.gammainc(shape, x), abs=1e-12)
    assert q == pytest.approx(special.gammaincc(shape, x), abs=1e-12)
    assert 0.0 <= p <= 1.0 and 0.0 <= q <= 1.0


@given(shapes, st.lists(xs, min_size=2, max_size=20))
def test_monotone_in_x(shape, grid):
    grid = sorted(grid)
    vals = [reg_lower_gamma(shape, x) for x in grid]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("shape", [0.0, -1.0, math.inf, math.nan])
def test_bad_shape(shape):
    with pytest.raises(DomainError):
        reg_lower_gamma(shape, 1.0)


def test_negative_x():
    with pytest.raises(DomainError):
        reg_lower_gamma(2.0, -0.1)
    with pytest.raises(DomainError):
        GammaArgs(shape=1.0, x=-1.0)


def test_inverse_examples():
    assert inv_reg_lower_gamma(1, 1 - math.exp(-0.5)) == pytest.approx(0.5, abs=1e-12)
    assert inv_reg_lower_gamma(10, 0.0) == 0.0
    assert inv_reg_lower_gamma(10, 1.0) == math.inf
    x = inv_reg_lower_gamma(10, 0.5)
    assert reg_lower_gamma(10, x) == pytest.approx(0.5, abs=1e-10)
    # bisection oracle
    lo, hi = 0.0, 100.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if special.gammainc(10, mid) < 0.5 else (lo, mid)
    assert x == pytest.approx(lo, rel=1e-10)


@pytest.mark.parametrize("p", [-0.1, 1.1, math.nan])
def test_inverse_bad_p(p):
    with pytest.raises(DomainError):
        inv_reg_lower_gamma(3.0, p)


@given(st.sampled_from([1, 5, 10, 20]), st.floats(min_value=1e-6, max_value=50.0))
def test_inverse_roundtrip(shape, x):
    p = reg_lower_gamma(shape, x)
    if p in (0.0, 1.0):
        return
    x_back = inv_reg_lower_gamma(shape, p)
    # the inverse is ill-conditioned where the density is tiny; compare in p
    assert reg_lower_gamma(shape, x_back) == pytest.approx(p, abs=1e-10)
    dens = math.exp((shape - 1) * math.log(x) - x - math.lgamma(shape))
    if dens > 1e-3:
        assert x_back == pytest.approx(x, abs=1e-8)


@given(shapes, st.floats(min_value=1e-9, max_value=1 - 1e-9))
def test_inverse_against_scipy(shape, p):
    assert inv_reg_lower_gamma(shape, p) == pytest.approx(special.gammaincinv(shape, p), rel=1e-8, abs=1e-12)


@given(st.floats(min_value=300.0, max_value=1e5), st.floats(min_value=-8.0, max_value=8.0))
def test_large_shape_near_the_mode(shape, z):
    # x within a few standard deviations of the mean, where cancellation hurts most
    x = max(shape + z * math.sqrt(shape), 0.0)
    assert reg_lower_gamma(shape, x) == pytest.approx(special.gammainc(shape, x), abs=1e-12)
    assert reg_upper_gamma(shape, x) == pytest.approx(special.gammaincc(shape, x), abs=1e-12)


@given(st.floats(min_value=0.01, max_value=5.0), st.floats(min_value=1e-300, max_value=1e-6))
def test_inverse_deep_lower_tail(shape, p):
    assert inv_reg_lower_gamma(shape, p) == pytest.approx(special.gammaincinv(shape, p), rel=1e-8)


def test_spectral_radius_examples():
    assert spectral_radius_generic(0.5 * np.eye(8)) == pytest.approx(0.5, rel=1e-12)
    rng = np.random.default_rng(3)
    m = rng.random((8, 8))
    m /= m.sum(axis=1, keepdims=True)
    assert spectral_radius_generic(m) == pytest.approx(1.0, abs=1e-10)


def test_spectral_radius_rejects_bad_input():
    with pytest.raises(DomainError):
        spectral_radius_generic(np.full((3, 3), np.nan))
    with pytest.raises(DomainError):
        spectral_radius_generic(-np.eye(3))
    with pytest.raises(DomainError):
        spectral_radius_generic(np.ones((2, 3)))


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_spectral_radius_matches_eigvals(seed):
    rng = np.random.default_rng(seed)
    m = rng.random((8, 8)) * rng.exponential(1.0, (8, 1))
    m[rng.random((8, 8)) < 0.3] = 0.0
    ref = float(np.max(np.abs(np.linalg.eigvals(m))))
    assert spectral_radius_generic(m) == pytest.approx(ref, rel=1e-10, abs=1e-14)


@given(
    st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0, 1), st.floats(0, 1),
    st.lists(st.floats(0, 20), min_size=4, max_size=4),
)
def test_stochastic_transition_matrix_radius_one(a, b, pd, pf, alphas):
    rows = transition_rows(SensingOperatingPoint.from_probabilities(pd, pf), alphas, SystemParams(a=a, b=b))
    assert spectral_radius_generic(rows.matrix()) == pytest.approx(1.0, abs=1e-10)
