"""Dispersion function of the linear advance-delay operator.

The operator ``L u = c^2 u'' - (u(x+1) - 2u(x) + u(x-1)) + alpha u`` acts in
Fourier space as multiplication by

    D(zeta) = -c^2 zeta^2 + 4 sin^2(zeta/2) + alpha.

With ``k0 = pi/2`` and ``alpha = c^2 k0^2 - 2`` the roots of ``D`` sit at
``+-k0`` for every admissible speed, so ``alpha`` is always derived from ``c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificationFailed, DegenerateConstant, InvalidParams

K0 = math.pi / 2
C2_MIN = 0.83
C2_MAX = 1.0
GAMMA_CAP = 0.1

_C2_SLACK = 1e-12
ROOT_SCAN_POINTS = 10_000


@dataclass(frozen=True)
class Params:
    """Model constants.

    ``alpha`` and ``k0`` are derived and cannot be passed in.  ``rho`` may be
    left as ``None``; the stage-2 solver then takes a fraction of the sign
    margin measured on the stage-1 solution.
    """

    c: float
    epsilon: float = 0.01
    gamma: float = 0.0
    rho: float | None = None
    alpha: float = field(init=False)
    k0: float = field(init=False, default=K0)

    def __post_init__(self):
        c = float(self.c)
        if not math.isfinite(c) or c <= 0:
            raise InvalidParams(f"wave speed must be positive, got c={self.c!r}")
        c2 = c * c
        if not (C2_MIN - _C2_SLACK <= c2 <= C2_MAX + _C2_SLACK):
            raise InvalidParams(f"c^2={c2:.6g} outside admissible range [{C2_MIN}, {C2_MAX}]")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise InvalidParams(f"epsilon must be positive, got {self.epsilon!r}")
        if self.rho is not None and not self.rho > 0:
            raise InvalidParams(f"rho must be positive, got {self.rho!r}")
        if not abs(self.gamma) <= GAMMA_CAP:
            raise InvalidParams(f"|gamma|={abs(self.gamma):.3g} exceeds cap {GAMMA_CAP}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "alpha", c2 * K0 * K0 - 2.0)

    @classmethod
    def from_c2(cls, c2: float, **kwargs) -> Params:
        if not c2 > 0:
            raise InvalidParams(f"c^2 must be positive, got {c2!r}")
        return cls(c=math.sqrt(c2), **kwargs)

    @property
    def c2(self) -> float:
        return self.c * self.c

    @property
    def orthogonality_gap(self) -> float:
        """``2(c^2 k0 - 1)``, minus the sin-moment of ``L u_odd``."""
        return 2.0 * (self.c2 * self.k0 - 1.0)

    def replace(self, **changes) -> Params:
        kw = dict(c=self.c, epsilon=self.epsilon, gamma=self.gamma, rho=self.rho)
        kw.update(changes)
        return Params(**kw)

    def as_dict(self) -> dict:
        return {
            "c": self.c,
            "c2": self.c2,
            "alpha": self.alpha,
            "k0": self.k0,
            "epsilon": self.epsilon,
            "gamma": self.gamma,
            "rho": self.rho,
        }


def D(zeta, p: Params):
    zeta = np.asarray(zeta, dtype=float)
    return -p.c2 * zeta**2 + 4.0 * np.sin(zeta / 2) ** 2 + p.alpha


def D_prime(zeta, p: Params):
    zeta = np.asarray(zeta, dtype=float)
    return -2.0 * p.c2 * zeta + 2.0 * np.sin(zeta)


def dispersion_eval(zeta, p: Params):
    """Return ``(D(zeta), D'(zeta))``."""
    return D(zeta, p), D_prime(zeta, p)


@dataclass(frozen=True)
class RootCertificate:
    roots: tuple[float, float]
    certified: bool
    sign_changes: int
    scan_interval: tuple[float, float]
    n_samples: int
    slope_at_root: float


def kernel_roots(p: Params, n_samples: int = ROOT_SCAN_POINTS) -> RootCertificate:
    """Return ``(+k0, -k0)`` and certify there is no other positive root.

    The scan covers ``(0, 3*pi/2]``.  Beyond ``3*pi/2`` no root can exist
    because ``c^2 (3 pi/2)^2 > 4 + alpha`` throughout the admissible range,
    and ``D`` is even so negative roots mirror positive ones.
    """
    hi = 1.5 * math.pi
    if p.c2 * hi * hi <= 4.0 + p.alpha:
        raise CertificationFailed("scan interval does not bound all roots at this speed")
    zeta = np.linspace(0.0, hi, n_samples + 1)[1:]
    s = np.sign(D(zeta, p))
    s = s[s != 0]
    changes = np.flatnonzero(s[1:] != s[:-1])
    if changes.size != 1:
        raise CertificationFailed(f"expected a single positive root, found {changes.size} sign changes")
    nz = zeta[np.sign(D(zeta, p)) != 0]
    lo_b, hi_b = nz[changes[0]], nz[changes[0] + 1]
    if not lo_b <= p.k0 <= hi_b:
        raise CertificationFailed(f"sign change in [{lo_b}, {hi_b}] does not bracket k0")
    slope = float(D_prime(p.k0, p))
    if slope == 0.0:
        raise CertificationFailed("root at k0 is not simple")
    return RootCertificate(
        roots=(p.k0, -p.k0),
        certified=True,
        sign_changes=int(changes.size),
        scan_interval=(0.0, hi),
        n_samples=n_samples,
        slope_at_root=slope,
    )


@dataclass(frozen=True)
class InversionConstants:
    C1: float
    bound_factor: float
    D_half: float
    D_three_half: float
    D_prime_half: float


def inversion_constants(p: Params, degenerate_tol: float = 1e-12) -> InversionConstants:
    """Constants of the H^2 bound for ``L^{-1}``.

    ``C1^2 = max(|D(k0/2)|^-2, |D(3k0/2)|^-2) + (k0/2) |D'(k0/2)|^-2`` and
    ``bound_factor = C1 + ((4 + alpha) C1 + 1) / c^2``, evaluated at the
    given ``c`` (no extra enlargement for ``c < 1``).
    """
    d_half = float(D(p.k0 / 2, p))
    d_3half = float(D(1.5 * p.k0, p))
    dp_half = float(D_prime(p.k0 / 2, p))
    for name, v in (("D(k0/2)", d_half), ("D(3k0/2)", d_3half), ("D'(k0/2)", dp_half)):
        if abs(v) < degenerate_tol:
            raise DegenerateConstant(f"{name} = {v:.3e} vanishes at c^2={p.c2:.6g}")
    c1 = math.sqrt(max(d_half**-2, d_3half**-2) + 0.5 * p.k0 * dp_half**-2)
    factor = c1 + ((4.0 + p.alpha) * c1 + 1.0) / p.c2
    return InversionConstants(c1, factor, d_half, d_3half, dp_half)


def bound_factor_profile(c2_values) -> list[tuple[float, float]]:
    """``(c^2, bound_factor)`` pairs, for the monotonicity report.

    ``D'(k0/2)`` crosses zero near ``c^2 = sin(pi/4)/(pi/4) ~ 0.9003``, so the
    factor has a pole there; points where it is degenerate are reported as inf.
    """
    out = []
    for c2 in c2_values:
        try:
            out.append((float(c2), inversion_constants(Params.from_c2(c2)).bound_factor))
        except DegenerateConstant:
            out.append((float(c2), math.inf))
    return out
