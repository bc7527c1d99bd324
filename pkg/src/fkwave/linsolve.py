"""Spectral inversion of ``L`` on decaying fields.

Away from ``+-k0`` the inverse is the division ``r^(k) = Q^(k) / D(k)``.  At
the two kernel wavenumbers both numerator and denominator vanish (the
moment condition on ``Q``); there the coefficient is set to its limit
``Q^'(k0) / D'(k0)``, with ``Q^'`` the transform of ``-i x Q``.  This picks
the representative of ``r + a sin + b cos`` that actually decays, which a
plain zero would not: a zeroed coefficient leaves an O(h) non-decaying
kernel-mode component in the periodic solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import D, D_prime, Params, inversion_constants
from .errors import MomentViolated, NearSingularMode, TailTooLarge
from .fields import (
    TAIL_TOL,
    CompositeField,
    SpectralField,
    discrete_moment,
    from_spectral,
    h2_norm,
    l2_norm,
    mode,
    to_spectral,
    weighted_norm,
    _phase,
    apply_L,
)

MOMENT_TOL = 1e-10
SINGULAR_TOL = 1e-8
_PARITY_MODE = {"odd": "sin", "even": "cos"}


def _window(x):
    return 1.0 / np.cosh(x)


def _gridded(Q: CompositeField, tail_tol: float, what: str) -> CompositeField:
    """Fold any analytic part into the grid and check that it decays."""
    f = Q.folded() if Q.analytic is not None else Q
    f.check_tail(tail_tol, what)
    return f


def project_moment(Q: CompositeField, kind: str, tail_tol: float = TAIL_TOL) -> tuple[CompositeField, float]:
    """Remove the kernel moment of ``Q`` with a ``sech(x)``-windowed mode.

    Returns the projected field and the removed moment (the defect).
    """
    f = _gridded(Q, tail_tol, "project_moment input")
    g = f.grid
    moment = discrete_moment(f, kind)
    if moment == 0.0:
        return f, 0.0
    shape = mode(kind)(g.x) * _window(g.x)
    norm = g.h * float(np.dot(shape, mode(kind)(g.x)))
    projected = CompositeField(g, f.grid_part - (moment / norm) * shape, None, f.parity)
    return projected, moment


@dataclass(frozen=True)
class Inversion:
    r: CompositeField
    spectrum: SpectralField
    moment: float
    deflation_residue: float
    moment_tolerance: float


def _moment_tolerance(Q: CompositeField) -> float:
    return MOMENT_TOL * max(1.0, l2_norm(Q))


def invert_L_detailed(Q: CompositeField, p: Params, parity: str, *, moment_tol: float | None = None,
                      tail_tol: float = TAIL_TOL) -> Inversion:
    if parity not in _PARITY_MODE:
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    f = _gridded(Q, tail_tol, "invert_L input").symmetrized(parity)
    g = f.grid
    moment = discrete_moment(f, _PARITY_MODE[parity])
    tol = _moment_tolerance(f) if moment_tol is None else moment_tol
    if abs(moment) > tol:
        raise MomentViolated(f"{_PARITY_MODE[parity]}-moment {moment:.3e} exceeds {tol:.1e}; project first")

    j_plus, j_minus = g.kernel_index
    k = g.k
    d = D(k, p)
    mask = np.ones(g.n, dtype=bool)
    mask[[j_plus, j_minus]] = False
    dmin = float(np.min(np.abs(d[mask])))
    if dmin < SINGULAR_TOL:
        raise NearSingularMode(f"|D(k_j)| = {dmin:.3e} on a non-kernel mode")

    q_hat = to_spectral(f).coefficients
    scale = g.h / math.sqrt(2 * math.pi)
    dq_hat = np.fft.fft(-1j * g.x * f.grid_part) * _phase(g) * scale
    r_hat = np.empty_like(q_hat)
    r_hat[mask] = q_hat[mask] / d[mask]
    deflated = {}
    for j in (j_plus, j_minus):
        r_hat[j] = dq_hat[j] / D_prime(k[j], p)
        deflated[j] = (complex(q_hat[j]), complex(r_hat[j]))
    spectrum = SpectralField(g, r_hat, deflated)
    r = from_spectral(spectrum, parity).symmetrized(parity)
    r.check_tail(tail_tol, "L^{-1} output", exc=TailTooLarge)
    residue = max(abs(q_hat[j_plus]), abs(q_hat[j_minus]))
    return Inversion(r, spectrum, moment, float(residue), tol)


def invert_L(Q: CompositeField, p: Params, parity: str, **kw) -> CompositeField:
    """Decaying solution of ``L r = Q`` with the declared parity."""
    return invert_L_detailed(Q, p, parity, **kw).r


def split_parity(Q: CompositeField) -> tuple[CompositeField, CompositeField]:
    f = Q.folded() if Q.analytic is not None else Q
    return f.symmetrized("odd"), f.symmetrized("even")


def invert_L_general(Q: CompositeField, p: Params, **kw) -> CompositeField:
    """Invert ``L`` on a field without parity: odd and even parts separately."""
    q_odd, q_even = split_parity(Q)
    r = invert_L(q_odd, p, "odd", **kw) + invert_L(q_even, p, "even", **kw)
    return r.with_parity(None)


def bound_ratio(Q: CompositeField, r: CompositeField, p: Params) -> float:
    """``||r||_{H^2} / (bound_factor ||(1+x^2) Q||)``; at most 1 when the estimate holds."""
    denom = inversion_constants(p).bound_factor * weighted_norm(Q, 1)
    return h2_norm(r) / denom if denom > 0 else 0.0


def roundtrip_error(Q: CompositeField, r: CompositeField, p: Params) -> float:
    """``||L r - Q||_{L^2}``."""
    return l2_norm(apply_L(r, p) - Q.folded())
