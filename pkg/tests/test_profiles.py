import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fkwave.dispersion import C2_MAX, C2_MIN, K0, Params
from fkwave.errors import NonPositiveEpsilon
from fkwave.profiles import (
    ProfileSpec,
    Psi_partial1,
    Psi_partial11,
    lambda_blend,
    psi_envelope_constant,
    psi_eps,
    psi_eps_prime,
    psi_eps_second,
    u_even,
    u_odd,
    u_pa,
    xi_saturate,
)

admissible_c2 = st.floats(min_value=C2_MIN, max_value=C2_MAX, allow_nan=False)
eps_st = st.floats(min_value=1e-4, max_value=0.5, allow_nan=False)


def one_sided(f, x0, d, side, h=1e-4):
    """One-sided second-order finite-difference derivative of order ``d`` at ``x0``."""
    s = 1.0 if side == "right" else -1.0
    pts = x0 + s * h * np.arange(5)
    v = f(pts)
    if d == 0:
        return v[0]
    if d == 1:
        return s * (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    return (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h**2


# -- u_pa ---------------------------------------------------------------------

@given(admissible_c2)
def test_amplitudes_sum_to_one(c2):
    ps = ProfileSpec.from_params(Params.from_c2(c2))
    assert abs(ps.A + ps.B - 1) <= 1e-14


@given(admissible_c2)
def test_B_matches_closed_form(c2):
    p = Params.from_c2(c2)
    assert abs(ProfileSpec.from_params(p).B - ProfileSpec.B_closed_form(p)) <= 1e-12


@given(admissible_c2)
def test_decay_rate_formula(c2):
    p = Params.from_c2(c2)
    ps = ProfileSpec.from_params(p)
    assert_allclose(ps.decay_rate**2, (p.alpha / p.c2) * K0 / (2 - K0), rtol=1e-14)


def test_profile_values_at_c_one():
    p = Params(1.0)
    ps = ProfileSpec.from_params(p)
    assert_allclose(ps.B, 0.5213, atol=1e-4)
    assert_allclose(ps.decay_rate, 1.3079, atol=1e-4)
    assert u_pa(0.0, p) == 0.0


@pytest.mark.parametrize("d", [1, 2, 3])
def test_u_pa_derivatives_match_finite_differences(d):
    p = Params.from_c2(0.9)
    x = np.array([-4.3, -1.7, -0.6, 0.4, 2.2, 7.9])
    h = 1e-5
    fd = (u_pa(x + h, p, d - 1) - u_pa(x - h, p, d - 1)) / (2 * h)
    assert_allclose(u_pa(x, p, d), fd, atol=1e-6)


def test_u_pa_is_odd():
    p = Params.from_c2(0.85)
    x = np.linspace(0.01, 20, 500)
    assert_allclose(u_pa(-x, p), -u_pa(x, p), atol=1e-15)


# -- carriers -----------------------------------------------------------------

def test_u_odd_seam_values():
    assert abs(u_odd(1.0)) <= 1e-15
    assert_allclose(u_odd(1.0, 1), -K0, atol=1e-15)
    assert_allclose(u_odd(2.0), -1.0, atol=1e-15)
    assert_allclose(u_odd(-0.37), -u_odd(0.37), atol=0)


def test_u_even_seam_values():
    assert_allclose(u_even(1.0), 1.0, atol=1e-15)
    assert abs(u_even(1.0, 1)) <= 1e-15
    assert_allclose(u_even(1.0, 2), -(K0**2), atol=1e-14)
    assert_allclose(u_even(0.0), 1 - math.pi**2 / 32, atol=1e-15)
    assert_allclose(u_even(0.0), 0.69158, atol=1e-5)
    assert_allclose(u_even(3.0), -1.0, atol=1e-15)


@pytest.mark.parametrize("carrier", [u_odd, u_even])
@pytest.mark.parametrize("seam", [-1.0, 1.0])
@pytest.mark.parametrize("d", [0, 1, 2])
def test_carriers_are_C2_at_seams(carrier, seam, d):
    left = one_sided(lambda x: carrier(x), seam, d, "left")
    right = one_sided(lambda x: carrier(x), seam, d, "right")
    assert abs(left - right) <= 1e-5


@pytest.mark.parametrize("d", [0, 1, 2])
def test_carriers_equal_far_fields_outside_core(d):
    x = np.concatenate([np.linspace(-30, -1, 400), np.linspace(1, 30, 400)])
    far_odd = {0: np.sign(x) * np.cos(K0 * x), 1: -K0 * np.sin(K0 * np.abs(x)),
               2: -np.sign(x) * K0**2 * np.cos(K0 * x)}[d]
    far_even = {0: np.sign(x) * np.sin(K0 * x), 1: np.sign(x) * K0 * np.cos(K0 * x),
                2: -np.sign(x) * K0**2 * np.sin(K0 * x)}[d]
    w = 1 + x**2
    assert np.all(w * (u_odd(x, d) - far_odd) == 0)
    assert np.all(w * (u_even(x, d) - far_even) == 0)


# -- blend --------------------------------------------------------------------

def test_lambda_blend_endpoints():
    assert lambda_blend(0.0) == 0.0
    assert lambda_blend(1.0) == 0.5 and lambda_blend(-1.0) == -0.5
    for d in (1, 2):
        assert lambda_blend(1.0, d) == 0 and lambda_blend(-1.0, d) == 0
    assert_allclose(lambda_blend(np.array([-3.0, 5.0])), [-0.5, 0.5])


def test_lambda_blend_monotone_and_odd():
    x = np.linspace(-2, 2, 10_000)
    v = lambda_blend(x)
    assert np.all(np.diff(v) >= 0)
    assert_allclose(lambda_blend(-x), -v, atol=1e-15)


@pytest.mark.parametrize("d", [1, 2])
def test_lambda_derivatives_match_finite_differences(d):
    x = np.linspace(-0.95, 0.95, 41)
    h = 1e-5
    fd = (lambda_blend(x + h, d - 1) - lambda_blend(x - h, d - 1)) / (2 * h)
    assert_allclose(lambda_blend(x, d), fd, atol=1e-6)


# -- mollified force ---------------------------------------------------------

@given(eps_st)
def test_mollifier_matches_sgn_at_window_edge(eps):
    assert psi_eps_prime(eps, eps) == 1.0 and psi_eps_prime(-eps, eps) == -1.0
    assert abs(psi_eps_second(np.nextafter(eps, 0), eps)) <= 1e-6 / eps


@given(eps_st, st.lists(st.floats(-2, 2, allow_nan=False), min_size=2, max_size=30))
def test_mollifier_odd_and_monotone(eps, ss):
    s = np.sort(np.array(ss))
    v = psi_eps_prime(s, eps)
    assert np.all(np.diff(v) >= -1e-15)
    assert_allclose(psi_eps_prime(-s, eps), -v, atol=1e-15)
    assert np.all(np.abs(v) <= 1)


@given(eps_st)
def test_mollifier_second_derivative_bound(eps):
    s = np.linspace(-2 * eps, 2 * eps, 2001)
    sup = np.max(np.abs(psi_eps_second(s, eps)))
    assert_allclose(sup, math.pi / (2 * eps), rtol=1e-12)
    assert sup <= 2 / eps


def test_mollifier_spot_value():
    assert_allclose(psi_eps_prime(0.005, 0.01), math.sin(math.pi / 4), atol=1e-15)


def test_mollifier_derivatives_consistent():
    eps = 0.03
    s = np.linspace(-0.06, 0.06, 37)
    h = 1e-7
    assert_allclose((psi_eps(s + h, eps) - psi_eps(s - h, eps)) / (2 * h), psi_eps_prime(s, eps), atol=1e-6)
    assert_allclose((psi_eps_prime(s + h, eps) - psi_eps_prime(s - h, eps)) / (2 * h), psi_eps_second(s, eps),
                    atol=1e-4)


@pytest.mark.parametrize("fn", [psi_eps, psi_eps_prime, psi_eps_second])
@pytest.mark.parametrize("eps", [0.0, -0.1])
def test_non_positive_epsilon_rejected(fn, eps):
    with pytest.raises(NonPositiveEpsilon):
        fn(0.1, eps)


def test_localized_force():
    eps = 0.01
    assert Psi_partial1(-3.0, 5.0, eps) == 1.0
    assert Psi_partial1(2 * eps, 0.0, eps) == 1.0
    assert Psi_partial1(0.0, 0.0, eps) == 0.0
    assert Psi_partial11(0.0, 4.0, eps) == 0.0


@pytest.mark.parametrize("eps", [0.005, 0.01, 0.05])
def test_second_derivative_envelope(eps):
    u = np.linspace(-3 * eps, 3 * eps, 301)[:, None]
    x = np.linspace(-6, 6, 241)[None, :]
    env = (1 + x**2) ** 1.5 * np.abs(Psi_partial11(u, x, eps))
    assert np.max(env) <= psi_envelope_constant(eps)


# -- saturation ---------------------------------------------------------------

def test_xi_identity_region():
    v, d, clamped = xi_saturate(0.05, 0.1)
    assert v == 0.05 and d == 1.0 and not clamped


def test_xi_saturates():
    v, d, clamped = xi_saturate(0.3, 0.1)
    assert abs(v) <= 4 / 3 * 0.1 + 1e-15 and clamped and d == 0.0


@given(st.floats(-1, 1, allow_nan=False), st.floats(1e-3, 0.5))
def test_xi_odd_and_bounded(b, bmax):
    v, d, _ = xi_saturate(b, bmax)
    vm, dm, _ = xi_saturate(-b, bmax)
    assert vm == -v and dm == d
    assert 0 <= d <= 1
    assert abs(v) <= 4 / 3 * bmax + 1e-15


def test_xi_is_C1():
    bmax = 0.1
    b = np.linspace(0, 0.3, 30001)
    v, d, _ = xi_saturate(b, bmax)
    assert_allclose(np.gradient(v, b), d, atol=1e-3)
    assert np.max(np.abs(np.diff(d))) <= 1e-3
