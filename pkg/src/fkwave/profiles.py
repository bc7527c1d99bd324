"""Closed-form building blocks.

* ``u_pa`` - explicit approximate heteroclinic profile.
* ``u_odd`` / ``u_even`` - carriers equal to ``sgn(x) cos(k0 x)`` and
  ``sgn(x) sin(k0 x)`` for ``|x| >= 1`` with polynomial C^2 cores, so that
  ``L u_odd`` and ``L u_even`` are supported in ``[-2, 2]``.
* ``lambda_blend`` - odd non-decreasing C^2 step from -1/2 to 1/2.
* ``psi_eps_*`` - sine mollification of ``|s|`` on ``|s| < eps``.
* ``Psi_partial*`` - the force localized to ``|x| <= 1``.
* ``xi_saturate`` - C^1 saturation of the ansatz coefficient.

All functions accept arrays and a derivative order ``d`` where it makes sense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import K0, Params
from .errors import NonPositiveEpsilon
from .fields import Analytic

_S = np.sign


@dataclass(frozen=True)
class ProfileSpec:
    """Coefficients of ``u_pa``; ``decay_rate`` is the exponential rate."""

    A: float
    B: float
    decay_rate: float

    @classmethod
    def from_params(cls, p: Params) -> ProfileSpec:
        c2, a, k0 = p.c2, p.alpha, p.k0
        b2 = (a / c2) * k0 / (2.0 - k0)
        denom = c2 * (b2 + k0 * k0)
        return cls(A=(c2 * k0 * k0 - a) / denom, B=(a + b2 * c2) / denom, decay_rate=math.sqrt(b2))

    @staticmethod
    def B_closed_form(p: Params) -> float:
        """``1 - (2 - k0) / (c^2 k0^2 - k0)``; must agree with ``B``."""
        return 1.0 - (2.0 - p.k0) / (p.c2 * p.k0**2 - p.k0)


def u_pa(x, p: Params, d: int = 0, spec: ProfileSpec | None = None):
    """``sgn(x) [A (1 - e^{-b|x|}) + B (1 - cos(k0 x))]`` and derivatives up to 3."""
    ps = spec or ProfileSpec.from_params(p)
    A, B, b, k = ps.A, ps.B, ps.decay_rate, K0
    x = np.asarray(x, dtype=float)
    s, ax = _S(x), np.abs(x)
    e = np.exp(-b * ax)
    if d == 0:
        return s * (A * (1.0 - e) + B * (1.0 - np.cos(k * x)))
    if d == 1:
        return A * b * e + B * k * np.sin(k * ax)
    if d == 2:
        return s * (-A * b * b * e + B * k * k * np.cos(k * x))
    if d == 3:
        return A * b**3 * e - B * k**3 * np.sin(k * ax)
    raise ValueError(f"derivative order {d} not available")


def u_odd(x, d: int = 0):
    """Odd carrier: quintic core on ``|x| < 1``, ``sgn(x) cos(k0 x)`` outside."""
    x = np.asarray(x, dtype=float)
    k = K0
    inside = np.abs(x) < 1.0
    s, ax = _S(x), np.abs(x)
    if d == 0:
        core, far = (k / 8) * (7 * x - 10 * x**3 + 3 * x**5), s * np.cos(k * x)
    elif d == 1:
        core, far = (k / 8) * (7 - 30 * x**2 + 15 * x**4), -k * np.sin(k * ax)
    elif d == 2:
        core, far = (k / 8) * (-60 * x + 60 * x**3), -s * k * k * np.cos(k * x)
    elif d == 3:
        core, far = (k / 8) * (-60 + 180 * x**2), k**3 * np.sin(k * ax)
    else:
        raise ValueError(f"derivative order {d} not available")
    return np.where(inside, core, far)


def u_even(x, d: int = 0):
    """Even carrier: quartic core on ``|x| < 1``, ``sgn(x) sin(k0 x)`` outside."""
    x = np.asarray(x, dtype=float)
    k2 = K0 * K0
    inside = np.abs(x) < 1.0
    s, ax = _S(x), np.abs(x)
    if d == 0:
        core, far = 1 - k2 / 8 + (k2 / 4) * x**2 - (k2 / 8) * x**4, np.sin(K0 * ax)
    elif d == 1:
        core, far = (k2 / 2) * (x - x**3), s * K0 * np.cos(K0 * x)
    elif d == 2:
        core, far = (k2 / 2) * (1 - 3 * x**2), -k2 * np.sin(K0 * ax)
    elif d == 3:
        core, far = -3 * k2 * x, -s * K0**3 * np.cos(K0 * x)
    else:
        raise ValueError(f"derivative order {d} not available")
    return np.where(inside, core, far)


def lambda_blend(x, d: int = 0):
    """``s((x+1)/2) - 1/2`` with the quintic smoothstep ``s``."""
    x = np.asarray(x, dtype=float)
    t = np.clip(0.5 * (x + 1.0), 0.0, 1.0)
    if d == 0:
        return t**3 * (10 - 15 * t + 6 * t * t) - 0.5
    if d == 1:
        return 0.5 * 30 * t * t * (1 - t) ** 2
    if d == 2:
        return 0.25 * 60 * t * (1 - t) * (1 - 2 * t)
    raise ValueError(f"derivative order {d} not available")


def _check_eps(eps):
    if not eps > 0:
        raise NonPositiveEpsilon(f"epsilon must be positive, got {eps!r}")


def psi_eps(s, eps: float):
    """Mollified ``|s|``: ``eps - (2 eps/pi) cos(pi s / 2 eps)`` on ``|s| < eps``."""
    _check_eps(eps)
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < eps, eps - (2 * eps / np.pi) * np.cos(np.pi * s / (2 * eps)), np.abs(s))


def psi_eps_prime(s, eps: float):
    _check_eps(eps)
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < eps, np.sin(np.pi * s / (2 * eps)), _S(s))


def psi_eps_second(s, eps: float):
    _check_eps(eps)
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < eps, (np.pi / (2 * eps)) * np.cos(np.pi * s / (2 * eps)), 0.0)


def Psi_partial1(u, x, eps: float):
    """``d/du`` of the localized potential: ``psi_eps'(u)`` for ``|x| <= 1``, ``sgn(x)`` beyond."""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= 1.0, psi_eps_prime(u, eps), _S(x))


def Psi_partial11(u, x, eps: float):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= 1.0, psi_eps_second(u, eps), 0.0)


def psi_envelope_constant(eps: float) -> float:
    """``mu`` with ``|Psi_11(u, x)| <= mu (1+x^2)^{-3/2}``; reported, not used."""
    _check_eps(eps)
    return 2.0**2.5 / eps


def xi_saturate(beta, beta_max: float):
    """C^1 odd saturation: identity on ``|beta| <= beta_max``, ``+-(4/3) beta_max`` beyond ``2 beta_max``.

    Returns ``(value, derivative, clamped)``.
    """
    if not beta_max > 0:
        raise ValueError("beta_max must be positive")
    b = np.asarray(beta, dtype=float)
    a = np.abs(b)
    t = np.clip((a - beta_max) / beta_max, 0.0, 1.0)
    mag = np.where(a <= beta_max, a, beta_max * (t**3 / 3 - t * t + t + 1.0))
    deriv = np.where(a <= beta_max, 1.0, (1.0 - t) ** 2)
    clamped = a > beta_max
    if b.ndim == 0:
        return float(_S(b) * mag), float(deriv), bool(clamped)
    return _S(b) * mag, deriv, clamped


# -- Analytic wrappers ------------------------------------------------------

def upa_analytic(p: Params) -> Analytic:
    spec = ProfileSpec.from_params(p)
    return Analytic(lambda x, d: u_pa(x, p, d, spec), max_order=3, label="u_pa")


def u_odd_analytic() -> Analytic:
    return Analytic(u_odd, max_order=3, label="u_odd")


def u_even_analytic() -> Analytic:
    return Analytic(u_even, max_order=3, label="u_even")


def lambda_analytic() -> Analytic:
    return Analytic(lambda_blend, max_order=2, label="lambda")


def sign_analytic(center: float = 0.0, reflect_about_zero: bool = False) -> Analytic:
    """Piecewise-constant sign function (derivatives zero away from the jump).

    With ``reflect_about_zero`` it is ``sgn(|x| - center)``.
    """
    if reflect_about_zero:
        def fn(x, d):
            return _S(np.abs(x) - center) if d == 0 else np.zeros_like(x)
        label = f"sgn(|x|-{center:g})"
    else:
        def fn(x, d):
            return _S(x - center) if d == 0 else np.zeros_like(x)
        label = "sgn"
    return Analytic(fn, max_order=3, label=label)
