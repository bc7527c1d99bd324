"""Single-transition travelling waves.

Stage 1 solves the degenerate problem ``L u = alpha sgn(u)``: with the sign
pattern fixed to ``sgn(x)`` it is linear, ``u_p = u_pa - L^{-1}(L u_pa - alpha sgn)``,
and the pattern is verified a posteriori.

Stage 2 solves ``L u = alpha psi_eps'(u)`` with the ansatz
``u = u_p + beta u_odd + gamma sin(k0 x) - r`` by the damped Picard map
``r -> L^{-1} Q(r)``, where ``beta = beta(r)`` is chosen to make the
sin-moment of ``Q`` vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache

import numpy as np

from .dispersion import K0, Params, inversion_constants
from .errors import (
    BallEscaped,
    BetaClampActive,
    DomainTooSmall,
    InvalidParams,
    IterationCapExceeded,
    MomentViolated,
    NonContraction,
    ResidualTooLarge,
    SignConditionFailed,
    TailTooLarge,
)
from .fields import (
    TAIL_TOL,
    CompositeField,
    Grid,
    L_analytic,
    apply_L,
    discrete_moment,
    h2_norm,
    kernel_moment,
    l2_norm,
    mode,
    solver_grid,
    spectral_derivative,
    sup_norms,
    weighted_norm,
)
from .linsolve import invert_L_detailed, project_moment
from .profiles import (
    Psi_partial1,
    Psi_partial11,
    psi_envelope_constant,
    psi_eps_prime,
    sign_analytic,
    u_odd,
    u_odd_analytic,
    upa_analytic,
    xi_saturate,
)

SIGN_ZERO_TOL = 1e-12
CORRECTOR_BOUNDS = {"upper": (0.257, 0.43), "lower": (0.339, 0.34)}


def sgn(v):
    """Sign with a small dead zone, so round-off at a prescribed zero reads as 0."""
    v = np.asarray(v, dtype=float)
    return np.where(np.abs(v) <= SIGN_ZERO_TOL, 0.0, np.sign(v))


@dataclass(frozen=True)
class SolverConfig:
    outer_tol: float = 1e-10
    residual_tol: float = 1e-8
    max_outer: int = 200
    omega: float = 1.0
    omega_fallback: float = 0.5
    beta_inner_tol: float = 1e-12
    beta_inner_max: int = 100
    beta_max: float = 0.1
    tail_tol: float = TAIL_TOL
    rho_fraction: float = 0.9
    max_sign_rounds: int = 20

    def __post_init__(self):
        for name in ("outer_tol", "residual_tol", "beta_inner_tol", "beta_max", "tail_tol", "omega", "omega_fallback"):
            if not getattr(self, name) > 0:
                raise InvalidParams(f"{name} must be positive")
        if self.omega > 1 or self.omega_fallback > 1:
            raise InvalidParams("damping must lie in (0, 1]")
        if not 0 < self.rho_fraction < 1:
            raise InvalidParams("rho_fraction must lie in (0, 1)")
        if self.max_outer < 1 or self.beta_inner_max < 1:
            raise InvalidParams("iteration caps must be positive")


# -- stage 1 ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Stage1Solution:
    p: Params
    grid: Grid
    u_p: CompositeField
    r: CompositeField
    rho0: float
    x_margin: float
    diagnostics: dict = field(default_factory=dict)

    @cached_property
    def samples(self) -> np.ndarray:
        return self.u_p.samples()

    @cached_property
    def derivative(self) -> np.ndarray:
        return self.u_p.derivative_samples(1)

    @cached_property
    def L_samples(self) -> np.ndarray:
        """``L u_p`` on the grid."""
        return apply_L(self.u_p, self.p).samples()

    @property
    def slope_at_zero(self) -> float:
        return float(self.derivative[self.grid.n // 2])


def _corrector_bounds(c2: float) -> tuple[float, float]:
    return CORRECTOR_BOUNDS["upper"] if c2 >= 0.9 else CORRECTOR_BOUNDS["lower"]


def sign_margin_constant(u: np.ndarray, du: np.ndarray, grid: Grid) -> tuple[float, float]:
    """Largest ``rho0`` with a split point ``x_m`` such that ``u > rho0/2`` beyond it and ``u' > rho0/2`` before.

    Only ``x >= 0`` is inspected (the profile is odd); the edge band is excluded.
    Returns ``(rho0, x_m)``; a relative slack of 1e-9 keeps the inequalities strict.
    """
    x = grid.x
    keep = (x >= 0) & (x <= grid.X - 4)
    xs, us, ds = x[keep], u[keep], du[keep]
    # a[i] = min u over x > xs[i]; b[i] = min u' over [0, xs[i])
    a = np.minimum.accumulate(us[::-1])[::-1]
    a = np.append(a[1:], np.inf)
    b = np.minimum.accumulate(ds)
    b = np.concatenate([[np.inf], b[:-1]])
    score = np.minimum(a, b)
    score[0] = -np.inf  # x_m must be positive
    i = int(np.argmax(score))
    return 2.0 * float(score[i]) * (1 - 1e-9), float(xs[i])


def _heteroclinic_fit(u: np.ndarray, grid: Grid) -> dict:
    """Least-squares ``u - 1 ~ -lam sin(k0 x + theta)`` on the last full period before the edge band."""
    x = grid.x
    sel = (x >= grid.X - 8) & (x < grid.X - 4)
    M = np.column_stack([np.sin(K0 * x[sel]), np.cos(K0 * x[sel])])
    coef, *_ = np.linalg.lstsq(M, u[sel] - 1.0, rcond=None)
    a, b = coef
    mismatch = float(np.max(np.abs(M @ coef - (u[sel] - 1.0))))
    return {"lambda": float(math.hypot(a, b)), "theta": float(math.atan2(-b, -a)), "tail_mismatch": mismatch}


def _stage1_rhs(p: Params, grid: Grid, pattern: np.ndarray | None, tail_tol: float) -> CompositeField:
    a = L_analytic(upa_analytic(p), p)
    if pattern is None:
        Q = CompositeField.from_analytic(grid, a - p.alpha * sign_analytic(), "odd")
    else:
        Q = CompositeField(grid, -p.alpha * pattern, a, "odd")
    Q = Q.folded()
    try:
        Q.check_tail(tail_tol, "stage-1 defect")
    except TailTooLarge as exc:
        raise DomainTooSmall(str(exc)) from exc
    return Q


def solve_stage1(p: Params, grid: Grid | None = None, cfg: SolverConfig | None = None) -> Stage1Solution:
    """Degenerate (sgn-force) wave ``u_p = u_pa - r``.

    Any tail violation (profile or corrector still large near ``+-X``) is
    reported as :class:`DomainTooSmall`.
    """
    try:
        return _solve_stage1(p, grid, cfg)
    except DomainTooSmall:
        raise
    except TailTooLarge as exc:
        raise DomainTooSmall(str(exc)) from exc


def _solve_stage1(p: Params, grid: Grid | None, cfg: SolverConfig | None) -> Stage1Solution:
    grid = grid or solver_grid()
    cfg = cfg or SolverConfig()
    ua = upa_analytic(p)
    nonzero = grid.x != 0
    pattern = None
    analytic_moment = kernel_moment(
        CompositeField.from_analytic(grid, L_analytic(ua, p) - p.alpha * sign_analytic()), "sin", cfg.tail_tol)
    for rounds in range(1, cfg.max_sign_rounds + 1):
        Q = _stage1_rhs(p, grid, pattern, cfg.tail_tol)
        Qp, defect = project_moment(Q, "sin", cfg.tail_tol)
        inv = invert_L_detailed(Qp, p, "odd", tail_tol=cfg.tail_tol)
        r = inv.r
        u_p = CompositeField(grid, -r.grid_part, ua, "odd")
        u = u_p.samples()
        new_pattern = sgn(u)
        expected = np.sign(grid.x) if pattern is None else pattern
        if np.array_equal(new_pattern[nonzero], expected[nonzero]):
            break
        pattern = new_pattern
    else:
        raise SignConditionFailed(f"sign pattern not stable after {cfg.max_sign_rounds} rounds")
    flips = int(np.count_nonzero(sgn(u)[nonzero] != np.sign(grid.x[nonzero])))
    if flips:
        raise SignConditionFailed(f"stage-1 profile changes sign at {flips} nodes away from x=0")

    residual_field = apply_L(u_p, p).samples() - p.alpha * sgn(u)
    residual = l2_norm(residual_field, grid)
    if residual > cfg.residual_tol:
        raise ResidualTooLarge(f"stage-1 residual {residual:.3e} > {cfg.residual_tol:.1e}")

    du = u_p.derivative_samples(1)
    rho0, x_m = sign_margin_constant(u, du, grid)
    sup_r, sup_dr = sup_norms(r)
    b_sup, b_dsup = _corrector_bounds(p.c2)
    s = math.sqrt(math.pi / 2)
    diag = {
        "sign_rounds": rounds,
        "projection_defect": defect,
        "analytic_sin_moment": analytic_moment,
        "deflation_residue": inv.deflation_residue,
        "residual_l2": residual,
        "r_h2": h2_norm(r),
        "sup_r": sup_r,
        "sup_dr": sup_dr,
        "amp_sup_r": s * sup_r,
        "amp_sup_dr": s * sup_dr,
        "amp_bound_r": b_sup,
        "amp_bound_dr": b_dsup,
        "amp_r_ok": s * sup_r < b_sup,
        "amp_dr_ok": s * sup_dr < b_dsup,
        "slope_at_zero": float(du[grid.n // 2]),
        "rho0": rho0,
        "x_margin": x_m,
        "heteroclinic_fit": _heteroclinic_fit(u, grid),
        "tail_r": r.tail_max(),
    }
    return Stage1Solution(p, grid, u_p, r, rho0, x_m, diag)


@lru_cache(maxsize=16)
def _stage1_cached(c: float, grid: Grid, cfg: SolverConfig) -> Stage1Solution:
    return solve_stage1(Params(c), grid, cfg)


def stage1_for(p: Params, grid: Grid | None = None, cfg: SolverConfig | None = None) -> Stage1Solution:
    """Memoized stage 1 (it depends only on ``c``, the grid and the config)."""
    sol = _stage1_cached(p.c, grid or solver_grid(), cfg or SolverConfig())
    return sol if sol.p == p else replace(sol, p=p)


# -- stage 2 ----------------------------------------------------------------

class _Stage2Context:
    """Grid samples reused by every Picard step."""

    def __init__(self, stage1: Stage1Solution, p: Params, cfg: SolverConfig, force: str):
        if force not in ("psi", "sgn"):
            raise ValueError("force must be 'psi' or 'sgn'")
        g = stage1.grid
        self.g, self.p, self.cfg, self.force = g, p, cfg, force
        self.x = g.x
        self.sin = np.sin(K0 * g.x)
        self.up = stage1.samples
        self.Lup = stage1.L_samples
        self.uodd = u_odd(g.x)
        self.Luodd = L_analytic(u_odd_analytic(), p)(g.x)
        # trapezoid value of -int L u_odd sin; equals 2(c^2 k0 - 1) up to O(h^2)
        self.denominator = -g.h * float(np.dot(self.Luodd, self.sin))
        self.base = self.up + p.gamma * self.sin

    def force_term(self, v: np.ndarray) -> np.ndarray:
        if self.force == "sgn":
            return np.where(np.abs(self.x) <= 1.0, sgn(v), np.sign(self.x))
        return Psi_partial1(v, self.x, self.p.epsilon)

    def argument(self, beta: float, r: np.ndarray) -> np.ndarray:
        xi, _, _ = xi_saturate(beta, self.cfg.beta_max)
        return self.base + xi * self.uodd - r

    def moment_rest(self, beta: float, r: np.ndarray) -> float:
        f = self.Lup - self.p.alpha * self.force_term(self.argument(beta, r))
        return self.g.h * float(np.dot(f, self.sin))


def beta_of_r(r: CompositeField | np.ndarray, stage1: Stage1Solution, p: Params, cfg: SolverConfig | None = None,
              *, force: str = "psi", _ctx: _Stage2Context | None = None) -> tuple[float, int, float]:
    """Solve the scalar moment equation for ``beta`` by fixed-point iteration from 0.

    Returns ``(beta, iterations, lipschitz)``, the last being the largest
    observed ratio of successive increments.
    """
    cfg = cfg or SolverConfig()
    ctx = _ctx or _Stage2Context(stage1, p, cfg, force)
    rv = r.grid_part if isinstance(r, CompositeField) else np.asarray(r)
    beta, prev_step, lip = 0.0, None, 0.0
    for it in range(1, cfg.beta_inner_max + 1):
        new = ctx.moment_rest(beta, rv) / ctx.denominator
        step = abs(new - beta)
        if prev_step is not None and prev_step > 100 * cfg.beta_inner_tol:
            ratio = step / prev_step
            lip = max(lip, ratio)
            if ratio >= 1.0:
                raise NonContraction(f"beta iteration ratio {ratio:.3g} >= 1")
        beta = new
        if step < cfg.beta_inner_tol:
            return beta, it, lip
        prev_step = step
    raise IterationCapExceeded(f"beta iteration did not reach {cfg.beta_inner_tol:.1e} in {cfg.beta_inner_max} steps")


def assemble_Q(r, beta: float, stage1: Stage1Solution, p: Params, cfg: SolverConfig | None = None,
               *, force: str = "psi", _ctx: _Stage2Context | None = None) -> CompositeField:
    """Right-hand side ``beta L u_odd + L u_p - alpha d1Psi(u_p + xi(beta) u_odd + gamma sin - r, x)``."""
    cfg = cfg or SolverConfig()
    ctx = _ctx or _Stage2Context(stage1, p, cfg, force)
    rv = r.grid_part if isinstance(r, CompositeField) else np.asarray(r)
    q = beta * ctx.Luodd + ctx.Lup - p.alpha * ctx.force_term(ctx.argument(beta, rv))
    Q = CompositeField(ctx.g, q, None, "odd")
    m = discrete_moment(Q, "sin")
    if abs(m) > 1e-10 * max(1.0, l2_norm(Q)):
        raise MomentViolated(f"sin-moment of assembled Q is {m:.3e}")
    return Q


@dataclass(frozen=True, eq=False)
class WaveSolution:
    p: Params
    grid: Grid
    stage1: Stage1Solution
    r: CompositeField
    beta: float
    gamma: float
    u: CompositeField
    rho: float
    force: str
    clamped: bool
    iterations: int
    history: list
    diagnostics: dict

    @cached_property
    def samples(self) -> np.ndarray:
        return self.u.samples()


def assemble_u(stage1: Stage1Solution, r: CompositeField, beta: float, gamma: float) -> CompositeField:
    a = stage1.u_p.analytic + beta * u_odd_analytic()
    if gamma:
        a = a + gamma * mode("sin")
    return CompositeField(stage1.grid, stage1.u_p.grid_part - r.grid_part, a, "odd")


def full_residual(u: CompositeField, p: Params, force: str = "psi") -> np.ndarray:
    """Pointwise ``c^2 u'' - Delta_D u + alpha u - alpha psi'(u)``, recomputed from scratch."""
    v = u.samples()
    f = sgn(v) if force == "sgn" else psi_eps_prime(v, p.epsilon)
    return apply_L(u, p).samples() - p.alpha * f


def solve_stage2(p: Params, grid: Grid | None = None, cfg: SolverConfig | None = None,
                 stage1: Stage1Solution | None = None, *, force: str = "psi") -> WaveSolution:
    """Mollified wave by damped Picard iteration on the corrector ``r``."""
    cfg = cfg or SolverConfig()
    stage1 = stage1 or stage1_for(p, grid, cfg)
    g = stage1.grid
    if force == "psi" and not p.epsilon < stage1.rho0 / 6:
        raise InvalidParams(f"epsilon={p.epsilon} must be below rho0/6={stage1.rho0 / 6:.4g}")
    rho = p.rho if p.rho is not None else cfg.rho_fraction * stage1.rho0
    if rho >= stage1.rho0:
        raise InvalidParams(f"rho={rho:.4g} must be below rho0={stage1.rho0:.4g}")
    ctx = _Stage2Context(stage1, p, cfg, force)

    r = CompositeField.zeros(g, "odd")
    omega = cfg.omega
    history = []
    prev_inc = None
    converged = False
    beta = 0.0
    for n in range(1, cfg.max_outer + 1):
        beta, inner_it, lip = beta_of_r(r, stage1, p, cfg, _ctx=ctx)
        Q = assemble_Q(r, beta, stage1, p, cfg, _ctx=ctx)
        inv = invert_L_detailed(Q, p, "odd", tail_tol=cfg.tail_tol)
        inc_field = inv.r - r
        inc = h2_norm(inc_field)
        if prev_inc is not None and omega > cfg.omega_fallback:
            alternating = float(np.dot(inc_field.grid_part, prev_inc.grid_part)) < 0
            if alternating and inc >= 0.5 * h2_norm(prev_inc):
                omega = cfg.omega_fallback
        r = (r * (1.0 - omega) + inv.r * omega).symmetrized("odd")
        r_h2 = h2_norm(r)
        history.append({"iteration": n, "increment_h2": inc, "r_h2": r_h2, "beta": beta,
                        "beta_inner_iterations": inner_it, "beta_lipschitz": lip, "omega": omega,
                        "deflation_residue": inv.deflation_residue})
        if r_h2 >= rho:
            raise BallEscaped(f"||r||_H2 = {r_h2:.4g} >= rho = {rho:.4g} at iteration {n}")
        prev_inc = inc_field
        if inc < cfg.outer_tol:
            beta, inner_it, lip = beta_of_r(r, stage1, p, cfg, _ctx=ctx)
            u = assemble_u(stage1, r, beta, p.gamma)
            res = l2_norm(full_residual(u, p, force), g)
            history[-1]["residual_l2"] = res
            if res < cfg.residual_tol:
                converged = True
                break
    if not converged:
        raise IterationCapExceeded(f"Picard iteration did not converge in {cfg.max_outer} steps")

    _, _, clamped = xi_saturate(beta, cfg.beta_max)
    if clamped:
        raise BetaClampActive(f"|beta|={abs(beta):.3g} exceeds beta_max={cfg.beta_max}")
    v = u.samples()
    up = stage1.samples
    nz = up != 0
    margin = float(np.min(np.abs(v[nz]) / np.abs(up[nz])))
    if margin < 1.0 / 3.0:
        raise SignConditionFailed(f"min |u|/|u_p| = {margin:.4g} < 1/3")
    localized = float(np.max(np.abs(ctx.force_term(v) - (sgn(v) if force == "sgn" else psi_eps_prime(v, p.epsilon)))))
    sup_r, sup_dr = sup_norms(r)
    diag = {
        "residual_l2": res,
        "r_h2": h2_norm(r),
        "sup_r": sup_r,
        "sup_dr": sup_dr,
        "rho": rho,
        "rho0": stage1.rho0,
        "beta": beta,
        "beta_inner_iterations": inner_it,
        "beta_lipschitz": lip,
        "beta_denominator_discrete": ctx.denominator,
        "beta_denominator_exact": p.orthogonality_gap,
        "sign_margin_ratio": margin,
        "localization_gap": localized,
        "omega_final": omega,
        "first_step_increment": history[0]["increment_h2"],
        "sup_u_minus_up": float(np.max(np.abs(v - up))),
        "mu_envelope": psi_envelope_constant(p.epsilon) if force == "psi" else None,
        "tail_r": r.tail_max(),
    }
    return WaveSolution(p, g, stage1, r, beta, p.gamma, u, rho, force, clamped, len(history), history, diag)


# -- condition checks ---------------------------------------------------------

@dataclass(frozen=True)
class ConditionReport:
    c1_value: float
    c1_sample_max: float
    c1_threshold: float
    c1_envelope_bound: float
    c1_pass: bool
    c2p_sgn_term: float
    c2p_perturbation_term: float
    c2p_left: float
    c2p_right: float
    c2p_pass: bool
    c2_direct_left: float
    c2_direct_right: float
    bound_factor: float
    Luodd_weighted: float
    window_halfwidth: float

    @property
    def passed(self) -> bool:
        return self.c1_pass and self.c2p_pass

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def check_conditions(sol: WaveSolution, stage1: Stage1Solution | None = None, p: Params | None = None,
                     cfg: SolverConfig | None = None, n_beta_samples: int = 41) -> ConditionReport:
    """Evaluate the contraction condition for ``beta`` and the sufficient ball condition at a solution."""
    stage1 = stage1 or sol.stage1
    p = p or sol.p
    cfg = cfg or SolverConfig()
    g = stage1.grid
    x, h = g.x, g.h
    ctx = _Stage2Context(stage1, p, cfg, "psi")
    rv = sol.r.grid_part
    weight = 1.0 + x**2

    def c1_at(b):
        xi, dxi, _ = xi_saturate(b, cfg.beta_max)
        v = ctx.base + xi * ctx.uodd - rv
        return abs(h * float(np.dot(p.alpha * Psi_partial11(v, x, p.epsilon) * dxi * ctx.uodd, ctx.sin)))

    c1 = c1_at(sol.beta)
    samples = np.append(np.linspace(-2 * cfg.beta_max, 2 * cfg.beta_max, n_beta_samples), sol.beta)
    c1_max = max(c1_at(b) for b in samples)
    threshold = p.orthogonality_gap
    slope = stage1.slope_at_zero
    halfwidth = 6 * p.epsilon / slope
    _, dxi, _ = xi_saturate(sol.beta, cfg.beta_max)
    c1_bound = p.alpha * 2 / p.epsilon * dxi * float(np.max(np.abs(ctx.uodd))) * K0 * halfwidth**2

    up = stage1.samples
    a = p.alpha
    d1_up = Psi_partial1(up, x, p.epsilon)
    term_sgn = l2_norm(weight * a * (sgn(up) - d1_up), g)
    term_pert = l2_norm(weight * a * (d1_up - ctx.force_term(ctx.argument(sol.beta, rv))), g)
    left = term_sgn + term_pert
    consts = inversion_constants(p)
    luodd_w = weighted_norm(CompositeField(g, ctx.Luodd), 1)
    right = (sol.rho / consts.bound_factor) / (luodd_w * math.sqrt(math.pi / 8) / (p.c2 * K0 - 1) + 1)
    Q = assemble_Q(sol.r, sol.beta, stage1, p, cfg, _ctx=ctx)
    return ConditionReport(
        c1_value=c1,
        c1_sample_max=c1_max,
        c1_threshold=threshold,
        c1_envelope_bound=c1_bound,
        c1_pass=c1_max < threshold,
        c2p_sgn_term=term_sgn,
        c2p_perturbation_term=term_pert,
        c2p_left=left,
        c2p_right=right,
        c2p_pass=left < right,
        c2_direct_left=weighted_norm(Q, 1),
        c2_direct_right=sol.rho / consts.bound_factor,
        bound_factor=consts.bound_factor,
        Luodd_weighted=luodd_w,
        window_halfwidth=halfwidth,
    )


def beta_scaling(c2: float = 0.9, eps_values=(0.04, 0.02, 0.01, 0.005), grid: Grid | None = None,
                 cfg: SolverConfig | None = None) -> dict:
    """Solve across ``eps`` and fit the log-log slope of ``|beta|``."""
    betas = []
    for e in eps_values:
        sol = solve_stage2(Params.from_c2(c2, epsilon=e), grid, cfg)
        betas.append(sol.beta)
    slope = float(np.polyfit(np.log(eps_values), np.log(np.abs(betas)), 1)[0])
    return {"c2": c2, "epsilon": list(eps_values), "beta": betas, "slope": slope}
