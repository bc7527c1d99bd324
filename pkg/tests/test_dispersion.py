import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fkwave.dispersion import (
    C2_MAX,
    C2_MIN,
    K0,
    D,
    D_prime,
    Params,
    bound_factor_profile,
    dispersion_eval,
    inversion_constants,
    kernel_roots,
)
from fkwave.errors import DegenerateConstant, InvalidParams

admissible_c2 = st.floats(min_value=C2_MIN, max_value=C2_MAX, allow_nan=False)


def test_alpha_is_derived_from_speed():
    p = Params(1.0)
    assert p.k0 == math.pi / 2
    assert_allclose(p.alpha, math.pi**2 / 4 - 2, rtol=0, atol=1e-15)


@pytest.mark.parametrize("c2", [0.5, 0.82, 1.01, -1.0])
def test_speed_outside_range_rejected(c2):
    with pytest.raises(InvalidParams):
        Params.from_c2(c2)


@pytest.mark.parametrize("kw", [{"epsilon": 0.0}, {"epsilon": -1e-3}, {"rho": -1.0}, {"gamma": 1.0}])
def test_other_invalid_params(kw):
    with pytest.raises(InvalidParams):
        Params(1.0, **kw)


def test_speed_exceeds_inverse_sqrt_k0():
    assert math.sqrt(C2_MIN) > K0**-0.5


@pytest.mark.parametrize(
    "zeta, expected",
    [(0.0, math.pi**2 / 4 - 2), (math.pi, -math.pi**2 + 4 + math.pi**2 / 4 - 2), (K0, 0.0)],
)
def test_values_at_c_one(zeta, expected):
    d, _ = dispersion_eval(zeta, Params(1.0))
    assert_allclose(d, expected, atol=1e-14)


def test_spot_values_against_rounded_table():
    p = Params(1.0)
    assert_allclose(D(0.0, p), 0.467401, atol=1e-6)
    assert_allclose(D(math.pi, p), -5.402, atol=1e-3)


@given(admissible_c2)
def test_kernel_roots_vanish(c2):
    p = Params.from_c2(c2)
    dp, _ = dispersion_eval(K0, p)
    dm, _ = dispersion_eval(-K0, p)
    assert abs(dp) <= 1e-12 and abs(dm) <= 1e-12


@settings(max_examples=50)
@given(admissible_c2, st.lists(st.floats(-20, 20, allow_nan=False), min_size=1, max_size=20))
def test_D_even_and_derivative_odd(c2, zs):
    p = Params.from_c2(c2)
    z = np.array(zs)
    assert_allclose(D(z, p), D(-z, p), atol=1e-12)
    assert_allclose(D_prime(z, p), -D_prime(-z, p), atol=1e-12)


@given(admissible_c2, st.floats(-10, 10, allow_nan=False))
def test_derivative_matches_central_difference(c2, z):
    p = Params.from_c2(c2)
    h = 1e-5
    fd = (D(z + h, p) - D(z - h, p)) / (2 * h)
    assert_allclose(D_prime(z, p), fd, atol=1e-7 * (1 + abs(z)))


@pytest.mark.parametrize("c2", [0.83, 0.9, 0.95, 1.0])
def test_roots_certified(c2):
    cert = kernel_roots(Params.from_c2(c2))
    assert cert.certified
    assert cert.roots == (K0, -K0)
    assert cert.sign_changes == 1
    assert cert.slope_at_root < 0


def test_dense_scan_finds_single_positive_root():
    # independent oracle: count sign changes on a finer grid without the library scan
    for c2 in np.linspace(C2_MIN, C2_MAX, 7):
        p = Params.from_c2(c2)
        z = np.linspace(1e-6, 3 * math.pi, 200_001)
        s = np.sign(D(z, p))
        assert np.count_nonzero(s[1:] != s[:-1]) == 1


def test_inversion_constants_at_c_one():
    p = Params(1.0)
    ic = inversion_constants(p)
    assert_allclose(ic.D_half, 0.4363, atol=1e-4)
    assert_allclose(ic.D_three_half, -1.670, atol=1e-3)
    assert_allclose(ic.D_prime_half, -0.1566, atol=1e-4)
    assert_allclose(ic.C1, 6.11, atol=0.01)
    assert_allclose(ic.bound_factor, 34.4, atol=0.1)


def test_inversion_constants_independent_formula():
    p = Params(1.0)
    a, c2 = p.alpha, p.c2

    def d(z):
        return -c2 * z * z + 4 * math.sin(z / 2) ** 2 + a

    dp = -2 * c2 * K0 / 2 + 2 * math.sin(K0 / 2)
    c1 = math.sqrt(max(d(K0 / 2) ** -2, d(3 * K0 / 2) ** -2) + (K0 / 2) / dp**2)
    ic = inversion_constants(p)
    assert_allclose(ic.C1, c1, rtol=1e-14)
    assert_allclose(ic.bound_factor, c1 + ((4 + a) * c1 + 1) / c2, rtol=1e-14)


@given(admissible_c2)
def test_C1_positive(c2):
    try:
        assert inversion_constants(Params.from_c2(c2)).C1 > 0
    except DegenerateConstant:  # only possible exactly at the pole of the bound
        pass


def test_bound_factor_profile_is_reported():
    rows = bound_factor_profile(np.linspace(C2_MIN, C2_MAX, 18))
    assert len(rows) == 18
    assert all(b > 0 for _, b in rows)


def test_orthogonality_gap():
    assert_allclose(Params(1.0).orthogonality_gap, 1.141593, atol=1e-6)
