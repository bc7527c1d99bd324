"""Functions on the truncated real line.

A :class:`CompositeField` is the sum of a closed-form :class:`Analytic` part
(non-decaying profiles, kernel modes; evaluated exactly anywhere, including
at ``x +- 1`` beyond the grid) and a gridded part that must decay before the
edge of the periodic grid.  Only the gridded part ever sees the periodic
wrap, so ``sgn``-like profiles never produce an artificial jump at ``+-X``.

Fourier conventions follow the unitary transform
``f^(k) = (2 pi)^(-1/2) \\int f(x) e^{-ikx} dx``; discrete norms are the
h-weighted Riemann sums on the grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .dispersion import K0, Params
from .errors import InvalidParams, NonDecayingInput, TailTooLarge

TAIL_TOL = 1e-9
TAIL_MARGIN = 4.0
PARITY_TOL = 1e-12

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(20)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid ``x_j = -X + j/m`` on ``[-X, X)``.

    ``X`` is even so that ``+-k0 = +-pi/2`` are exact grid wavenumbers
    (index ``X/2``), and a unit shift is exactly ``m`` samples.
    """

    X: int = 64
    m: int = 16

    def __post_init__(self):
        if int(self.X) != self.X or self.X <= 0 or self.X % 2:
            raise InvalidParams(f"half_length X must be a positive even integer, got {self.X!r}")
        if int(self.m) != self.m or self.m <= 0:
            raise InvalidParams(f"points_per_unit m must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "X", int(self.X))
        object.__setattr__(self, "m", int(self.m))

    @property
    def n(self) -> int:
        return 2 * self.X * self.m

    @property
    def h(self) -> float:
        return 1.0 / self.m

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.X + np.arange(self.n) / self.m
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumbers in numpy FFT order; ``k_j = pi j / X``."""
        k = 2 * np.pi * np.fft.fftfreq(self.n, d=self.h)
        k.flags.writeable = False
        return k

    @cached_property
    def reflect_index(self) -> np.ndarray:
        """Index map ``j -> j'`` with ``x_{j'} = -x_j`` (mod the period)."""
        return (-np.arange(self.n)) % self.n

    @property
    def kernel_index(self) -> tuple[int, int]:
        """FFT indices of ``+k0`` and ``-k0``."""
        j = self.X // 2
        return j, self.n - j

    @property
    def dk(self) -> float:
        return math.pi / self.X

    def index_of(self, x0: float) -> int:
        j = (x0 + self.X) * self.m
        if abs(j - round(j)) > 1e-9 or not 0 <= round(j) < self.n:
            raise ValueError(f"{x0} is not a grid node")
        return int(round(j))

    def edge_mask(self, margin: float = TAIL_MARGIN) -> np.ndarray:
        return np.abs(self.x) > self.X - margin

    def as_dict(self) -> dict:
        return {"X": self.X, "m": self.m, "n": self.n, "h": self.h}


def solver_grid(X: int = 64, m: int = 1024) -> Grid:
    """Grid used by the nonlinear solvers.

    ``m = 1024`` puts several nodes inside the mollification window
    ``|x| < eps / u_p'(0)`` down to ``eps = 0.005``.
    """
    return Grid(X, m)


class Analytic:
    """Closed-form function with exact derivatives up to ``max_order``.

    ``fn(x, d)`` returns the ``d``-th derivative at the points ``x``.
    Kinks are only allowed at integers; :func:`kernel_moment` integrates
    these parts piecewise over unit intervals.
    """

    __slots__ = ("_fn", "max_order", "label")

    def __init__(self, fn: Callable[[np.ndarray, int], np.ndarray], max_order: int = 2, label: str = ""):
        self._fn = fn
        self.max_order = max_order
        self.label = label

    def __call__(self, x, d: int = 0) -> np.ndarray:
        if d > self.max_order:
            raise ValueError(f"{self.label or 'analytic part'} provides derivatives up to {self.max_order}")
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self._fn(x, d), x.shape).astype(float)

    def __repr__(self):
        return f"Analytic({self.label!r}, max_order={self.max_order})"

    def __add__(self, other):
        if other is None:
            return self
        if not isinstance(other, Analytic):
            return NotImplemented
        f, g = self._fn, other._fn
        return Analytic(lambda x, d: f(x, d) + g(x, d), min(self.max_order, other.max_order),
                        f"({self.label} + {other.label})")

    __radd__ = __add__

    def __neg__(self):
        f = self._fn
        return Analytic(lambda x, d: -f(x, d), self.max_order, f"-{self.label}")

    def __sub__(self, other):
        if other is None:
            return self
        return self + (-other)

    def __mul__(self, other):
        f = self._fn
        if isinstance(other, Analytic):
            g = other._fn

            def prod(x, d):
                # Leibniz rule
                return sum(math.comb(d, i) * f(x, i) * g(x, d - i) for i in range(d + 1))

            return Analytic(prod, min(self.max_order, other.max_order), f"{self.label}*{other.label}")
        a = float(other)
        return Analytic(lambda x, d: a * f(x, d), self.max_order, f"{a:g}*{self.label}")

    __rmul__ = __mul__

    def shift(self, s: float) -> Analytic:
        """``x -> f(x - s)``."""
        f = self._fn
        return Analytic(lambda x, d: f(x - s, d), self.max_order, f"{self.label}(x-{s:g})")

    def reflect(self) -> Analytic:
        """``x -> f(-x)``."""
        f = self._fn
        return Analytic(lambda x, d: (-1) ** d * f(-x, d), self.max_order, f"{self.label}(-x)")


def mode(kind: str) -> Analytic:
    """Kernel mode ``sin(k0 x)`` or ``cos(k0 x)``."""
    if kind == "sin":
        def fn(x, d):
            return K0**d * np.sin(K0 * x + d * np.pi / 2)
    elif kind == "cos":
        def fn(x, d):
            return K0**d * np.cos(K0 * x + d * np.pi / 2)
    else:
        raise ValueError(f"mode must be 'sin' or 'cos', got {kind!r}")
    return Analytic(fn, max_order=4, label=kind)


def _check_parity_label(parity):
    if parity not in (None, "odd", "even"):
        raise ValueError(f"parity must be 'odd', 'even' or None, got {parity!r}")


@dataclass(frozen=True, eq=False)
class CompositeField:
    grid: Grid
    grid_part: np.ndarray
    analytic: Analytic | None = None
    parity: str | None = None

    def __post_init__(self):
        _check_parity_label(self.parity)
        v = np.asarray(self.grid_part, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"grid_part has shape {v.shape}, expected ({self.grid.n},)")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "grid_part", v)

    @classmethod
    def zeros(cls, grid: Grid, parity=None) -> CompositeField:
        return cls(grid, np.zeros(grid.n), None, parity)

    @classmethod
    def from_analytic(cls, grid: Grid, a: Analytic, parity=None) -> CompositeField:
        return cls(grid, np.zeros(grid.n), a, parity)

    @classmethod
    def from_function(cls, grid: Grid, fn, parity=None) -> CompositeField:
        """Grid-only field from samples of ``fn`` (symmetrized if ``parity``)."""
        f = cls(grid, fn(grid.x), None, parity)
        return f.symmetrized() if parity else f

    @property
    def is_grid_only(self) -> bool:
        return self.analytic is None

    def analytic_samples(self, d: int = 0) -> np.ndarray:
        if self.analytic is None:
            return np.zeros(self.grid.n)
        return self.analytic(self.grid.x, d)

    def samples(self) -> np.ndarray:
        """Total value at the grid nodes."""
        return self.analytic_samples() + self.grid_part

    def derivative_samples(self, order: int = 1) -> np.ndarray:
        return self.analytic_samples(order) + spectral_derivative(self.grid_part, self.grid, order)

    @cached_property
    def _splines(self):
        g = self.grid
        xs = np.append(g.x, g.X)
        ys = np.append(self.grid_part, self.grid_part[0])
        return CubicSpline(xs, ys, bc_type="periodic")

    def evaluate(self, y, d: int = 0) -> np.ndarray:
        """Value (or ``d``-th derivative) at arbitrary points.

        The grid part is zero outside ``[-X, X)`` (it is required to have
        decayed there) and is interpolated by a periodic cubic spline in
        between; nodes are returned exactly.
        """
        y = np.asarray(y, dtype=float)
        out = self.analytic(y, d) if self.analytic is not None else np.zeros(y.shape)
        g = self.grid
        inside = (y >= -g.X) & (y < g.X)
        if np.any(inside):
            yi = y[inside]
            j = (yi + g.X) * g.m
            on_node = np.abs(j - np.round(j)) < 1e-9
            vals = np.empty(yi.shape)
            if np.any(on_node):
                node_vals = self.grid_part if d == 0 else spectral_derivative(self.grid_part, g, d)
                vals[on_node] = node_vals[np.round(j[on_node]).astype(int) % g.n]
            if np.any(~on_node):
                vals[~on_node] = self._splines(yi[~on_node], d)
            out = out.copy()
            out[inside] += vals
        return out

    def tail_max(self, margin: float = TAIL_MARGIN) -> float:
        return float(np.max(np.abs(self.grid_part[self.grid.edge_mask(margin)])))

    def check_tail(self, tol: float = TAIL_TOL, what: str = "grid part", exc=TailTooLarge) -> None:
        t = self.tail_max()
        if t > tol:
            raise exc(f"{what}: max |f| over |x| > X-{TAIL_MARGIN:g} is {t:.3e} > tail_tol {tol:.1e}")

    def _combine(self, other, sign):
        if isinstance(other, CompositeField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            if other.analytic is None:
                a = self.analytic
            elif self.analytic is None:
                a = other.analytic if sign > 0 else -other.analytic
            else:
                a = self.analytic + other.analytic if sign > 0 else self.analytic - other.analytic
            parity = self.parity if self.parity == other.parity else None
            return CompositeField(self.grid, self.grid_part + sign * other.grid_part, a, parity)
        if isinstance(other, Analytic):
            a = other if sign > 0 else -other
            return CompositeField(self.grid, self.grid_part, a + self.analytic if self.analytic else a, None)
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, s):
        s = float(s)
        a = None if self.analytic is None else s * self.analytic
        return CompositeField(self.grid, s * self.grid_part, a, self.parity)

    __rmul__ = __mul__

    def with_parity(self, parity) -> CompositeField:
        return CompositeField(self.grid, self.grid_part, self.analytic, parity)

    def reflect(self) -> CompositeField:
        """``x -> f(-x)``."""
        a = None if self.analytic is None else self.analytic.reflect()
        return CompositeField(self.grid, self.grid_part[self.grid.reflect_index], a, self.parity)

    def symmetrized(self, parity: str | None = None) -> CompositeField:
        """Project the grid part onto the declared parity."""
        parity = parity or self.parity
        _check_parity_label(parity)
        if parity is None:
            return self
        v = self.grid_part
        w = v[self.grid.reflect_index]
        v = 0.5 * (v - w) if parity == "odd" else 0.5 * (v + w)
        return CompositeField(self.grid, v, self.analytic, parity)

    def parity_defect(self, parity: str | None = None) -> float:
        parity = parity or self.parity
        # the analytic part is reflected exactly; only the grid part uses the
        # periodic index map (x = -X has no partner on the grid otherwise)
        s = self.samples()
        s_ref = self.grid_part[self.grid.reflect_index]
        if self.analytic is not None:
            s_ref = s_ref + self.analytic(-self.grid.x)
        if parity == "odd":
            return float(np.max(np.abs(s + s_ref)))
        if parity == "even":
            return float(np.max(np.abs(s - s_ref)))
        return 0.0

    def folded(self) -> CompositeField:
        """Grid-only copy with the analytic part sampled into the grid."""
        return CompositeField(self.grid, self.samples(), None, self.parity)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Unitary Fourier coefficients ``f^(k_j)`` of a grid part.

    ``deflated_modes`` maps an FFT index to ``(removed, replacement)``: the
    coefficient found at a kernel mode and the value put in its place.
    """

    grid: Grid
    coefficients: np.ndarray
    deflated_modes: dict = field(default_factory=dict)

    def parity_defect(self, parity: str) -> float:
        c = self.coefficients
        if parity == "odd":
            return float(np.max(np.abs(c.real)))
        if parity == "even":
            return float(np.max(np.abs(c.imag)))
        raise ValueError(parity)

    def conjugate_symmetry_defect(self) -> float:
        c = self.coefficients
        return float(np.max(np.abs(c - np.conj(c[self.grid.reflect_index]))))


def _phase(grid: Grid) -> np.ndarray:
    # x_0 = -X: continuous-transform phase relative to numpy's fft
    return np.exp(1j * grid.k * grid.X)


def to_spectral(f: CompositeField | np.ndarray, grid: Grid | None = None) -> SpectralField:
    if isinstance(f, CompositeField):
        grid, values = f.grid, f.grid_part
    else:
        values = np.asarray(f, dtype=float)
    coef = np.fft.fft(values) * _phase(grid) * (grid.h / math.sqrt(2 * math.pi))
    return SpectralField(grid, coef)


def from_spectral(sf: SpectralField, parity=None) -> CompositeField:
    g = sf.grid
    values = np.fft.ifft(sf.coefficients / _phase(g) * (math.sqrt(2 * math.pi) / g.h)).real
    return CompositeField(g, values, None, parity)


def spectral_derivative(values: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    if order == 0:
        return np.array(values, dtype=float)
    k = grid.k.copy()
    if order % 2:
        k[grid.n // 2] = 0.0
    return np.fft.ifft((1j * k) ** order * np.fft.fft(values)).real


def discrete_laplacian(values: np.ndarray, grid: Grid) -> np.ndarray:
    """``u(x+1) - 2u(x) + u(x-1)`` by exact index shifts (periodic wrap)."""
    m = grid.m
    return np.roll(values, -m) - 2.0 * values + np.roll(values, m)


def L_grid(values: np.ndarray, grid: Grid, p: Params) -> np.ndarray:
    """``L`` on a decaying grid array (spectral second derivative)."""
    return p.c2 * spectral_derivative(values, grid, 2) - discrete_laplacian(values, grid) + p.alpha * values


def L_analytic(a: Analytic, p: Params) -> Analytic:
    """Closed-form ``L a``; values only."""
    c2, alpha = p.c2, p.alpha

    def fn(x, d):
        return c2 * a(x, 2) - (a(x + 1.0) - 2.0 * a(x) + a(x - 1.0)) + alpha * a(x)

    return Analytic(fn, max_order=0, label=f"L[{a.label}]")


def apply_L(f: CompositeField, p: Params, tail_tol: float = TAIL_TOL) -> CompositeField:
    """``L f = c^2 f'' - Delta_D f + alpha f``.

    The analytic part maps to a closed-form callable, the grid part is
    treated spectrally with exact unit shifts.
    """
    if np.any(f.grid_part):
        f.check_tail(tail_tol, "apply_L input")
    a = None if f.analytic is None else L_analytic(f.analytic, p)
    return CompositeField(f.grid, L_grid(f.grid_part, f.grid, p), a, f.parity)


def _as_field(f, grid=None) -> CompositeField:
    if isinstance(f, CompositeField):
        return f
    if grid is None:
        raise TypeError("grid required for array input")
    return CompositeField(grid, np.asarray(f, dtype=float))


def _analytic_tail(a: Analytic, grid: Grid, margin: float = TAIL_MARGIN) -> float:
    xs = grid.x[grid.edge_mask(margin)]
    return float(np.max(np.abs(a(xs))))


def kernel_moment(f: CompositeField, kind: str, tail_tol: float = TAIL_TOL) -> float:
    """``\\int_{-X}^{X} f(x) mode(k0 x) dx``.

    The analytic part is integrated by 20-point Gauss-Legendre on every unit
    interval (its kinks sit at integers), the grid part by the trapezoid rule
    on the periodic grid.  Both parts must have decayed near ``+-X``.
    """
    md = mode(kind)
    g = f.grid
    total = 0.0
    if np.any(f.grid_part):
        f.check_tail(tail_tol, "kernel_moment grid part")
        total += g.h * float(np.dot(f.grid_part, md(g.x)))
    if f.analytic is not None:
        t = _analytic_tail(f.analytic, g)
        if t > tail_tol:
            raise TailTooLarge(f"kernel_moment analytic part is {t:.3e} near the edge")
        left = np.arange(-g.X, g.X, dtype=float)
        xs = (left[:, None] + 0.5 * (_GAUSS_NODES[None, :] + 1.0)).ravel()
        ws = np.tile(0.5 * _GAUSS_WEIGHTS, left.size)
        total += float(np.dot(ws, f.analytic(xs) * md(xs)))
    return total


def discrete_moment(f, kind: str, grid: Grid | None = None) -> float:
    """Trapezoid moment of the total samples against a kernel mode.

    This equals (up to phase) the discrete Fourier coefficient at ``+-k0``,
    the quantity the spectral inversion actually needs to vanish.
    """
    f = _as_field(f, grid)
    g = f.grid
    return g.h * float(np.dot(f.samples(), mode(kind)(g.x)))


def l2_norm(f, grid: Grid | None = None) -> float:
    f = _as_field(f, grid)
    return math.sqrt(f.grid.h * float(np.sum(f.samples() ** 2)))


def h2_norm(f: CompositeField) -> float:
    """``||(1 + k^2) f^||`` with the unitary transform, discrete sum over ``k_j``."""
    if not f.is_grid_only:
        raise NonDecayingInput("h2_norm needs a grid-only field")
    c = to_spectral(f).coefficients
    w = 1.0 + f.grid.k**2
    return math.sqrt(f.grid.dk * float(np.sum(np.abs(w * c) ** 2)))


def weighted_norm(f, weight_power: float = 1.0, grid: Grid | None = None, tail_tol: float | None = None) -> float:
    """``||(1+x^2) f||_{L^2}`` (power 1) or ``||(1+x^2)^{3/2} f||_inf`` (power 3/2).

    With ``tail_tol`` set, the total field must have decayed below it near
    the edges (the weight reaches ``~X^2`` there).
    """
    f = _as_field(f, grid)
    g = f.grid
    s = f.samples()
    if tail_tol is not None:
        t = float(np.max(np.abs(s[g.edge_mask()])))
        if t > tail_tol:
            raise TailTooLarge(f"weighted_norm input is {t:.3e} near the edge")
    if weight_power == 1:
        return math.sqrt(g.h * float(np.sum(((1 + g.x**2) * s) ** 2)))
    if weight_power == 1.5:
        return float(np.max(np.abs((1 + g.x**2) ** 1.5 * s)))
    raise ValueError("weight_power must be 1 or 3/2")


def sup_norms(f: CompositeField) -> tuple[float, float]:
    if not f.is_grid_only:
        raise NonDecayingInput("sup_norms needs a grid-only field")
    d1 = spectral_derivative(f.grid_part, f.grid, 1)
    return float(np.max(np.abs(f.grid_part))), float(np.max(np.abs(d1)))


def random_decaying_field(grid: Grid, rng: np.random.Generator, parity: str | None = None,
                          n_bumps: int = 5) -> CompositeField:
    """Random smooth field: Gaussian bumps, some modulated, within ``|x| < 12``."""
    x = grid.x
    v = np.zeros(grid.n)
    for _ in range(n_bumps):
        x_c = rng.uniform(-8, 8)
        width = rng.uniform(0.4, 2.5)
        amp = rng.normal()
        omega = rng.uniform(0, 4) if rng.random() < 0.5 else 0.0
        phase = rng.uniform(0, 2 * np.pi)
        v += amp * np.exp(-(((x - x_c) / width) ** 2)) * np.cos(omega * x + phase)
    return CompositeField(grid, v, None, parity).symmetrized() if parity else CompositeField(grid, v)


def save_field(path, f: CompositeField, **metadata) -> tuple[Path, Path]:
    """Write ``x, analytic, grid, total`` CSV plus a JSON sidecar."""
    path = Path(path)
    a = f.analytic_samples()
    data = np.column_stack([f.grid.x, a, f.grid_part, a + f.grid_part])
    np.savetxt(path, data, delimiter=",", header="x,analytic,grid,total", comments="", fmt="%.17g")
    side = path.with_suffix(".json")
    meta = {"grid": f.grid.as_dict(), "parity": f.parity,
            "analytic": None if f.analytic is None else f.analytic.label,
            "columns": ["x", "analytic", "grid", "total"]}
    meta.update(metadata)
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, side


@dataclass(frozen=True)
class FieldRecord:
    grid: Grid
    parity: str | None
    analytic: np.ndarray
    grid_part: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.analytic + self.grid_part

    def grid_field(self) -> CompositeField:
        return CompositeField(self.grid, self.grid_part, None, self.parity)


def load_field(path) -> FieldRecord:
    """Read back a field written by :func:`save_field` (analytic part as samples)."""
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    grid = Grid(meta["grid"]["X"], meta["grid"]["m"])
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (grid.n, 4):
        raise ValueError(f"{path}: expected {grid.n} rows of 4 columns, got {data.shape}")
    return FieldRecord(grid, meta["parity"], data[:, 1], data[:, 2])
