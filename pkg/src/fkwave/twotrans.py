"""Two-transition (even) waves for the sgn force.

The profile ``v_p`` glues the single-transition wave shifted to ``+x0`` and
its negative reflection at ``-x0`` with the blend ``lambda``.  The remaining
defect is removed by an even corrector ``r_tilde = L^{-1} Q`` after the
cos-moment of ``Q`` has been cancelled with ``beta_e u_even``; finally
``gamma_tilde cos(k0 x)`` restores the zeros at ``+-x0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dispersion import K0, Params, inversion_constants
from .errors import DomainTooSmall, InvalidParams, MomentViolated, ResidualTooLarge, SignConditionFailed, TailTooLarge
from .fields import (
    Analytic,
    CompositeField,
    Grid,
    apply_L,
    discrete_moment,
    h2_norm,
    kernel_moment,
    l2_norm,
    mode,
    weighted_norm,
)
from .linsolve import invert_L_detailed
from .profiles import lambda_analytic, sign_analytic, u_even, u_even_analytic
from .waves import SolverConfig, Stage1Solution, sgn, stage1_for

MIN_X0 = 6
EDGE_MARGIN = 8


def _constant(value: float) -> Analytic:
    return Analytic(lambda x, d: np.full_like(x, value) if d == 0 else np.zeros_like(x), max_order=4,
                    label=f"{value:g}")


def _shift_samples(v: np.ndarray, grid: Grid, s: int) -> np.ndarray:
    """Samples of ``f(x - s)`` for integer ``s``, zero-filled (no periodic wrap)."""
    k = s * grid.m
    out = np.zeros_like(v)
    if k > 0:
        out[k:] = v[:-k]
    elif k < 0:
        out[:k] = v[-k:]
    else:
        out[:] = v
    return out


def check_x0(x0, grid: Grid) -> int:
    if int(x0) != x0 or int(x0) % 2:
        raise InvalidParams(f"x0 must be an even integer, got {x0!r}")
    x0 = int(x0)
    if x0 < MIN_X0:
        raise InvalidParams(f"x0={x0} below the minimum {MIN_X0}")
    if x0 > grid.X - EDGE_MARGIN:
        raise DomainTooSmall(f"x0={x0} exceeds X-{EDGE_MARGIN}={grid.X - EDGE_MARGIN}")
    return x0


def build_vp(x0: int, stage1: Stage1Solution, grid: Grid | None = None, tail_tol: float | None = None) -> CompositeField:
    """Even profile vanishing exactly at ``+-x0``.

    ``(1/2 + lam) u_p(x - x0) - (1/2 - lam) u_p(x + x0)`` with ``u_p`` the
    stage-1 wave; analytic and gridded parts are blended separately.
    """
    grid = grid or stage1.grid
    if grid != stage1.grid:
        raise ValueError("stage-1 solution lives on a different grid")
    x0 = check_x0(x0, grid)
    lam = lambda_analytic()
    half = _constant(0.5)
    plus, minus = half + lam, half - lam
    ua = stage1.u_p.analytic
    analytic = plus * ua.shift(x0) - minus * ua.shift(-x0)
    analytic.label = f"v_p(x0={x0})"
    g_up = stage1.u_p.grid_part  # = -r
    lam_s = lam(grid.x)
    gp = (0.5 + lam_s) * _shift_samples(g_up, grid, x0) - (0.5 - lam_s) * _shift_samples(g_up, grid, -x0)
    vp = CompositeField(grid, gp, analytic, "even").symmetrized()
    tol = 1e-9 if tail_tol is None else tail_tol
    try:
        vp.check_tail(tol, "two-transition profile")
    except TailTooLarge as exc:
        raise DomainTooSmall(str(exc)) from exc
    return vp


def vp_sign(x0: int) -> Analytic:
    """``sgn(v_p) = sgn(|x| - x0)``."""
    return sign_analytic(x0, reflect_about_zero=True)


def vp_defect(vp: CompositeField, x0: int, p: Params) -> CompositeField:
    """``L v_p - alpha sgn(v_p)`` with the analytic parts kept in closed form."""
    Lv = apply_L(vp, p)
    return CompositeField(vp.grid, Lv.grid_part, Lv.analytic - p.alpha * vp_sign(x0), "even")


def beta_e_of(vp: CompositeField, x0: int, p: Params, method: str = "quadrature", tail_tol: float = 1e-9) -> float:
    """``(1 / 2(c^2 k0 - 1)) int (-L v_p + alpha sgn v_p) cos(k0 x) dx``.

    ``method="quadrature"`` uses piecewise Gauss for the closed-form part and
    the exact orthogonality constant; ``method="discrete"`` uses trapezoid
    sums for both numerator and denominator, which is what makes the
    assembled right-hand side exactly cos-orthogonal on the grid.
    """
    defect = vp_defect(vp, x0, p)
    if method == "quadrature":
        return -kernel_moment(defect, "cos", tail_tol) / p.orthogonality_gap
    if method == "discrete":
        g = vp.grid
        Lue = apply_L(CompositeField.from_analytic(g, u_even_analytic()), p)
        return -discrete_moment(defect, "cos") / discrete_moment(Lue, "cos")
    raise ValueError(method)


@dataclass(frozen=True, eq=False)
class TwoTransSolution:
    p: Params
    x0: int
    beta_e: float
    gamma_tilde: float
    r_tilde: CompositeField
    vp: CompositeField
    u: CompositeField
    diagnostics: dict = field(default_factory=dict)


def sign_changes(v: np.ndarray) -> int:
    s = sgn(v)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def solve_two_transition(x0: int, p: Params, grid: Grid | None = None, stage1: Stage1Solution | None = None,
                         cfg: SolverConfig | None = None) -> TwoTransSolution:
    cfg = cfg or SolverConfig()
    stage1 = stage1 or stage1_for(p, grid, cfg)
    g = stage1.grid
    x0 = check_x0(x0, g)
    vp = build_vp(x0, stage1, g, cfg.tail_tol)
    v = vp.samples()
    expected = np.sign(np.abs(g.x) - x0)
    if not np.array_equal(sgn(v), expected):
        raise SignConditionFailed(f"v_p does not vanish exactly at +-{x0}")

    defect = vp_defect(vp, x0, p)
    ue = CompositeField.from_analytic(g, u_even_analytic(), "even")
    Lue = apply_L(ue, p)
    beta_e = beta_e_of(vp, x0, p, "discrete")
    Q = (Lue * beta_e + defect).folded().symmetrized("even")
    cos_m, sin_m = discrete_moment(Q, "cos"), discrete_moment(Q, "sin")
    tol = 1e-10 * max(1.0, l2_norm(Q))
    if abs(cos_m) > tol or abs(sin_m) > tol:
        raise MomentViolated(f"two-transition moments cos={cos_m:.3e}, sin={sin_m:.3e}")
    try:
        inv = invert_L_detailed(Q, p, "even", tail_tol=cfg.tail_tol)
    except TailTooLarge as exc:
        raise DomainTooSmall(str(exc)) from exc
    rt = inv.r
    j0 = g.index_of(float(x0))
    cos_x0 = math.cos(K0 * x0)
    gamma = (rt.grid_part[j0] - beta_e * float(u_even(float(x0)))) / cos_x0

    analytic = vp.analytic + beta_e * u_even_analytic() + gamma * mode("cos")
    u = CompositeField(g, vp.grid_part - rt.grid_part, analytic, "even")
    us = u.samples()
    zeros = (float(abs(us[j0])), float(abs(us[g.index_of(-float(x0))])))
    mismatched = int(np.count_nonzero(sgn(us) != expected))
    if mismatched:
        raise SignConditionFailed(f"u and v_p differ in sign at {mismatched} nodes (x0={x0} too small?)")
    res = apply_L(u, p).samples() - p.alpha * sgn(us)
    residual = l2_norm(res, g)
    if residual > cfg.residual_tol:
        raise ResidualTooLarge(f"two-transition residual {residual:.3e} > {cfg.residual_tol:.1e}")

    x = g.x
    inner = np.abs(x) < x0 - 2
    outer = (np.abs(x) > x0 + 2) & (np.abs(x) < g.X - 4)
    weighted_defect = weighted_norm(defect.folded(), 1)
    bf = inversion_constants(p).bound_factor
    diag = {
        "x0": x0,
        "beta_e": beta_e,
        "beta_e_quadrature": beta_e_of(vp, x0, p, "quadrature"),
        "gamma_tilde": gamma,
        "cos_k0x0": cos_x0,
        "u_at_x0": zeros,
        "sign_changes": sign_changes(us),
        "residual_l2": residual,
        "vp_defect_weighted": weighted_defect,
        "vp_at_zero": float(v[g.n // 2]),
        "vp_slope_at_x0": float(vp.derivative_samples(1)[j0]),
        "cos_moment": cos_m,
        "sin_moment": sin_m,
        "r_tilde_h2": h2_norm(rt),
        "r_tilde_bound": bf * weighted_norm(Q, 1),
        "inner_negative": bool(np.all(us[inner] < 0)),
        "outer_positive": bool(np.all(us[outer] > 0)),
        "even_defect": u.parity_defect("even"),
        "deflation_residue": inv.deflation_residue,
    }
    return TwoTransSolution(p, x0, beta_e, gamma, rt, vp, u, diag)


def cos_weight_norm() -> float:
    """``||cos(k0 x) / (1 + x^2)||_{L^2(R)}`` in closed form.

    Uses ``int_0^inf cos(a x) / (1+x^2)^2 dx = pi (1 + a) e^{-a} / 4`` with ``a = 2 k0 = pi``.
    """
    return math.sqrt(math.pi / 4 * (1 + (1 + math.pi) * math.exp(-math.pi)))
