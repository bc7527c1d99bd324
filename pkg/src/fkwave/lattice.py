"""Time-domain check on the chain ``u_k'' = u_{k+1} - 2u_k + u_{k-1} - alpha u_k + alpha psi'(u_k)``.

A travelling wave ``u(x)`` should propagate as ``u_k(t) = u(k - c t)``.  The
chain is integrated with velocity Verlet; the outer bands of sites are
driven with the exact translate (the waves do not decay, so any other
truncation would reflect).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dispersion import K0, Params
from .errors import BlowUp, DomainTooSmall, InvalidParams
from .fields import CompositeField
from .profiles import psi_eps, psi_eps_prime

BAND = 4
BLOWUP_CAP = 1e3
MAX_DT = 0.05


@dataclass
class ChainState:
    positions: np.ndarray
    velocities: np.ndarray
    time: float = 0.0
    driven: np.ndarray = field(default=None)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.positions.shape != self.velocities.shape or self.positions.ndim != 1:
            raise ValueError("positions and velocities must be 1-d arrays of equal length")
        if self.driven is None:
            n = self.positions.size
            self.driven = np.zeros(n, dtype=bool)
            self.driven[:BAND] = True
            self.driven[n - BAND:] = True


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    max_error: np.ndarray
    energy: np.ndarray

    @property
    def final_error(self) -> float:
        return float(self.max_error[-1]) if self.max_error.size else 0.0

    def error_growth_ratio(self) -> float:
        """``max_error(T) / max_error(T/2)``; about 2 for linear growth."""
        half = np.searchsorted(self.t, self.t[-1] / 2)
        e_half = float(np.max(self.max_error[: half + 1]))
        return float(np.max(self.max_error)) / e_half if e_half > 0 else math.inf


@dataclass(frozen=True)
class SimulationResult:
    max_error: float
    trajectory: Trajectory
    final_state: ChainState
    steps: int
    dt: float


def _force_fn(force: str, p: Params):
    a = p.alpha
    if force == "sgn":
        return lambda q: a * np.sign(q) - a * q
    if force == "psi_eps":
        return lambda q: a * psi_eps_prime(q, p.epsilon) - a * q
    if force == "linear":
        return lambda q: -a * q
    raise InvalidParams(f"unknown force {force!r}")


def _laplacian(q):
    out = np.zeros_like(q)
    out[1:-1] = q[2:] - 2 * q[1:-1] + q[:-2]
    return out


def _potential(q, force: str, p: Params):
    a = p.alpha
    if force == "sgn":
        on_site = 0.5 * a * q**2 - a * np.abs(q)
    elif force == "psi_eps":
        on_site = 0.5 * a * q**2 - a * psi_eps(q, p.epsilon)
    else:
        on_site = 0.5 * a * q**2
    return on_site


def chain_energy(state: ChainState, force: str, p: Params) -> float:
    """Kinetic + spring + on-site energy (bonds between all neighbouring sites)."""
    q, v = state.positions, state.velocities
    return float(0.5 * np.sum(v**2) + 0.5 * np.sum(np.diff(q) ** 2) + np.sum(_potential(q, force, p)))


def simulate(u, p: Params, K: int = 64, T: float = 20.0, dt: float = 0.01, force: str = "psi_eps",
             record_every: int = 10, check_domain: bool = True) -> SimulationResult:
    """Integrate the chain from ``u_k(0) = u(k)``, ``u_k'(0) = -c u'(k)``.

    ``u`` is a :class:`CompositeField` or a callable ``u(y, d)``.  Sites run
    over ``k in [-K, K]`` plus one ghost site each side; the outer ``BAND``
    sites of each end are driven by the exact translate ``u(k - ct)``.
    """
    if not 0 < dt <= MAX_DT:
        raise InvalidParams(f"dt must lie in (0, {MAX_DT}]")
    if K <= 2 * BAND:
        raise InvalidParams("K too small for the driven bands")
    if isinstance(u, CompositeField):
        if check_domain:
            reach = K + 1 + math.ceil(p.c * T)
            if reach > u.grid.X and u.tail_max() > 1e-9:
                raise DomainTooSmall(f"profile needed on |x| <= {reach}, grid half-length is {u.grid.X}")
        ufun = u.evaluate
    else:
        ufun = u
    c = p.c
    k = np.arange(-K - 1, K + 2, dtype=float)
    state = ChainState(ufun(k, 0).astype(float), -c * ufun(k, 1).astype(float))
    drv = state.driven
    interior = ~drv
    F = _force_fn(force, p)

    def accel(q):
        return _laplacian(q) + F(q)

    n_steps = int(round(T / dt))
    a = accel(state.positions)
    ts, errs, ens = [0.0], [0.0], [chain_energy(state, force, p)]
    err_max = 0.0
    q, v = state.positions, state.velocities
    for i in range(1, n_steps + 1):
        v += 0.5 * dt * a
        q += dt * v
        t = i * dt
        y = k[drv] - c * t
        q[drv] = ufun(y, 0)
        a = accel(q)
        v += 0.5 * dt * a
        v[drv] = -c * ufun(y, 1)
        if not np.all(np.abs(q) < BLOWUP_CAP):
            raise BlowUp(f"|u_k| exceeded {BLOWUP_CAP:g} at t={t:.3f}")
        if i % record_every == 0 or i == n_steps:
            e = float(np.max(np.abs(q[interior] - ufun(k[interior] - c * t, 0))))
            err_max = max(err_max, e)
            ts.append(t)
            errs.append(err_max)
            ens.append(chain_energy(state, force, p))
    state.time = n_steps * dt
    traj = Trajectory(np.array(ts), np.array(errs), np.array(ens))
    return SimulationResult(err_max, traj, state, n_steps, dt)


def kernel_mode_wave(amplitude: float = 1e-3):
    """``amplitude * sin(k0 x)``; it propagates exactly on the linear chain ``u'' = Delta u - alpha u``."""
    def fn(y, d=0):
        y = np.asarray(y, dtype=float)
        return amplitude * K0**d * np.sin(K0 * y + d * np.pi / 2)
    return fn


def linear_convergence(p: Params, dts=(0.02, 0.01), K: int = 32, T: float = 20.0, amplitude: float = 1e-3) -> dict:
    """Translation error of the kernel mode for two step sizes and their ratio."""
    errs = [simulate(kernel_mode_wave(amplitude), p, K, T, dt, force="linear").max_error for dt in dts]
    return {"dt": list(dts), "max_error": errs, "ratio": errs[0] / errs[1]}


def clamped_energy_drift(p: Params, n_sites: int = 64, T: float = 20.0, dt: float = 0.01, seed: int = 0) -> float:
    """Max ``|E(t) - E(0)| / T`` for the harmonic chain with fixed ends."""
    rng = np.random.default_rng(seed)
    q = np.zeros(n_sites + 2)
    q[1:-1] = 1e-2 * rng.standard_normal(n_sites)
    v = np.zeros_like(q)
    v[1:-1] = 1e-2 * rng.standard_normal(n_sites)
    alpha = p.alpha

    def accel(q):
        a = _laplacian(q) - alpha * q
        a[0] = a[-1] = 0.0
        return a

    def energy(q, v):
        return 0.5 * np.sum(v**2) + 0.5 * np.sum(np.diff(q) ** 2) + 0.5 * alpha * np.sum(q**2)

    e0 = energy(q, v)
    a = accel(q)
    drift = 0.0
    for _ in range(int(round(T / dt))):
        v += 0.5 * dt * a
        q += dt * v
        a = accel(q)
        v += 0.5 * dt * a
        drift = max(drift, abs(energy(q, v) - e0))
    return drift / T
