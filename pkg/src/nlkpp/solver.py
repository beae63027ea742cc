"""Method-of-lines integrator for the nonlocal Fisher-KPP equation.

Fixed frame::

    u_t = int J(t, y) [u(x - y) - u(x)] dy + a(t) u (1 - u)

Moving frame (x -> x - C(t)) adds the advection term ``c(t; mu) v_x``.  The
line is truncated to [-L, L]; outside it the field is continued by an
:class:`Extension` (constant, or exponential with a given decay rate anchored
at the boundary node).  Time stepping is classical RK4 with a fixed step on a
global lattice ``t = k * dt`` so that split runs reproduce a single run
bitwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache

import numpy as np
from scipy import signal

from . import kernels
from .drivers import CoefficientPath
from .errors import ConfigurationError, StepSizeError
from .kernels import KernelSpec
from .speed import SpeedFunction

INTERVAL_SLACK = 1e-9
CFL_LIMIT = 0.9


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-L, L] with N nodes."""

    L: float
    N: int

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ConfigurationError(f"grid half-width must be positive, got {self.L!r}")
        if int(self.N) != self.N or self.N < 16:
            raise ConfigurationError(f"grid needs N >= 16 nodes, got {self.N!r}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.N - 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = np.linspace(-self.L, self.L, self.N)
        x.setflags(write=False)
        return x


@dataclass(frozen=True)
class Extension:
    """Continuation of a field beyond one end of the grid.

    ``constant``: u = value.  ``exponential``: u = u_boundary * exp(-rate (x - x_b)),
    anchored at the current boundary node value.  ``edge``: u = u_boundary.
    """

    mode: str = "constant"
    value: float = 0.0
    rate: float = 0.0

    def __post_init__(self):
        if self.mode not in ("constant", "exponential", "edge"):
            raise ConfigurationError(f"unknown extension mode {self.mode!r}")

    def ghosts(self, boundary_value, distances):
        if self.mode == "constant":
            return np.full(distances.shape, float(self.value))
        if self.mode == "edge":
            return np.full(distances.shape, float(boundary_value))
        return boundary_value * np.exp(-self.rate * distances)


@dataclass(frozen=True, eq=False)
class Field:
    """Snapshot u(t, .) on a grid together with its boundary extensions."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0
    left: Extension = Extension("constant", 1.0)
    right: Extension = Extension("constant", 0.0)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.N,):
            raise ConfigurationError(f"field needs {self.grid.N} values, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def x(self):
        return self.grid.x

    def evolve_to(self, values, time) -> "Field":
        return replace(self, values=values, time=time)

    @classmethod
    def homogeneous(cls, grid, value, time=0.0):
        """Spatially constant data continued by the boundary values."""
        ext = Extension("edge")
        return cls(grid, np.full(grid.N, float(value)), time, ext, ext)

    @classmethod
    def front(cls, grid, values, mu=None, time=0.0):
        """Front data: 1 on the left; exponential tail of rate mu (else 0) on the right."""
        right = Extension("exponential", 0.0, mu) if mu else Extension("constant", 0.0)
        return cls(grid, values, time, Extension("constant", 1.0), right)


@lru_cache(maxsize=64)
def _discrete_kernel(spec: KernelSpec, h: float):
    return kernels.discretize(spec, h)


def _padded(values, grid, left, right, K):
    if K == 0:
        return values
    dist = grid.h * np.arange(K, 0, -1)
    lg = left.ghosts(values[0], -dist)
    rg = right.ghosts(values[-1], grid.h * np.arange(1, K + 1))
    return np.concatenate([lg, values, rg])


def _convolve(ext, w, method):
    if method == "fft":
        return signal.oaconvolve(ext, w, mode="valid")
    return np.convolve(ext, w, mode="valid")


def nonlocal_term(f: Field, kernel: KernelSpec, t: float, method: str = "direct") -> np.ndarray:
    """Discrete int J(t, y)[u(x - y) - u(x)] dy with boundary extensions."""
    dk = _discrete_kernel(kernel, f.grid.h)
    if dk.radius > f.grid.L:
        warnings.warn("kernel truncation radius exceeds the grid half-width", RuntimeWarning, stacklevel=2)
    return _nonlocal(f.values, f.grid, f.left, f.right, dk, float(kernel.modulation_value(t)), method)


def _nonlocal(values, grid, left, right, dk, m_t, method):
    K = dk.half_width
    ext = _padded(values, grid, left, right, K)
    conv = _convolve(ext, dk.weights, method)
    return m_t * (conv - dk.weights.sum() * values)


def fitted_factors(rate: float, h: float):
    """Scalings that make one-sided differences exact on exp(-rate x)."""
    z = rate * h
    if z == 0:
        return 1.0, 1.0
    return z / -math.expm1(-z), z / math.expm1(z)


def _advection(values, grid, left, right, c, factors):
    """c * v_x by one-sided (upwind) differences, scaled by the fitting factors."""
    h = grid.h
    if c >= 0:
        nxt = right.ghosts(values[-1], np.array([h]))
        fwd = np.diff(np.concatenate([values, nxt])) / h
        return c * factors[0] * fwd
    prv = left.ghosts(values[0], np.array([-h]))
    bwd = np.diff(np.concatenate([prv, values])) / h
    return c * factors[1] * bwd


def stability_dt(kernel: KernelSpec, a_path: CoefficientPath) -> float:
    """Explicit budget 0.5 / (2 * mass_max + a_max)."""
    return 0.5 / (2.0 * kernel.mass_bounds()[1] + a_path.bounds[1])


def max_speed(kernel: KernelSpec, a_path: CoefficientPath, mu: float) -> float:
    """Upper bound on |c(t; mu)| from the mass and coefficient bounds."""
    m_hi = kernel.mass_bounds()[1]
    return (m_hi * (kernels.unit_moment(kernel, mu) - 1.0) + a_path.bounds[1]) / mu


def cfl_dt(kernel: KernelSpec, a_path: CoefficientPath, mu: float, h: float) -> float:
    return CFL_LIMIT * h / max_speed(kernel, a_path, mu)


@dataclass
class Scheme:
    """Right-hand side and RK4 stepper for one (kernel, coefficient, frame) setup.

    ``mode`` is ``"fixed"`` or ``"moving"``; the moving frame needs ``mu``.
    ``advection`` is ``"fitted"`` (default; upwind differences rescaled to be
    exact on exp(-fit_rate x), fit_rate defaulting to mu) or ``"upwind"``.
    ``frame_speed="discrete"`` (default) moves the frame with c(t; mu)
    computed from the lattice kernel's moment, so that e^{-mu x} is an exact
    steady state of the discrete linearization; ``"exact"`` uses the closed form.
    """

    grid: Grid
    kernel: KernelSpec
    a_path: CoefficientPath
    mode: str = "fixed"
    mu: float | None = None
    method: str = "direct"
    advection: str = "fitted"
    fit_rate: float | None = None
    frame_speed: str = "discrete"
    speed: SpeedFunction | None = field(default=None, init=False)

    def __post_init__(self):
        if self.mode not in ("fixed", "moving"):
            raise ConfigurationError(f"unknown frame {self.mode!r}")
        if self.method not in ("direct", "fft"):
            raise ConfigurationError(f"unknown convolution method {self.method!r}")
        self._dk = _discrete_kernel(self.kernel, self.grid.h)
        self._speed_shift = 0.0
        if self.mode == "moving":
            if self.mu is None:
                raise ConfigurationError("moving frame needs mu")
            self.speed = SpeedFunction(self.kernel, self.a_path, self.mu)
            if self.advection == "fitted":
                rate = self.mu if self.fit_rate is None else self.fit_rate
                self._factors = fitted_factors(rate, self.grid.h)
            elif self.advection == "upwind":
                self._factors = (1.0, 1.0)
            else:
                raise ConfigurationError(f"unknown advection scheme {self.advection!r}")
            if self.frame_speed == "discrete":
                exact = self.kernel.mass * (kernels.unit_moment(self.kernel, self.mu) - 1.0)
                lattice = self._dk.moment(self.mu) - float(self._dk.weights.sum())
                self._speed_shift = (lattice - exact) / self.mu
            elif self.frame_speed != "exact":
                raise ConfigurationError(f"unknown frame speed {self.frame_speed!r}")
        if self._dk.radius > self.grid.L:
            warnings.warn("kernel truncation radius exceeds the grid half-width", RuntimeWarning, stacklevel=2)
        self._modulated = self.kernel.modulation is not None

    def dt_budget(self) -> float:
        dt = stability_dt(self.kernel, self.a_path)
        if self.mode == "moving":
            dt = min(dt, self.cfl_budget())
        return dt

    def cfl_budget(self) -> float:
        m_hi = self.kernel.mass_bounds()[1] / self.kernel.mass
        cmax = float(np.max(np.abs(self.speed.path.values))) + m_hi * abs(self._speed_shift)
        return CFL_LIMIT * self.grid.h / cmax

    def check_dt(self, dt: float):
        budget = stability_dt(self.kernel, self.a_path)
        if dt > budget * (1 + 1e-12):
            raise StepSizeError(f"dt={dt:.6g} exceeds the explicit stability budget", budget)
        if self.mode == "moving":
            cfl = self.cfl_budget()
            if dt > cfl * (1 + 1e-12):
                raise StepSizeError(f"dt={dt:.6g} violates the CFL limit {CFL_LIMIT}", cfl)

    def frame_c(self, t: float, m_t: float | None = None) -> float:
        """Speed of the moving frame at time t."""
        if m_t is None:
            m_t = float(self.kernel.modulation_value(t)) if self._modulated else 1.0
        return float(self.speed(t)) + m_t * self._speed_shift

    def rhs(self, t: float, v: np.ndarray, left: Extension, right: Extension) -> np.ndarray:
        m_t = float(self.kernel.modulation_value(t)) if self._modulated else 1.0
        out = _nonlocal(v, self.grid, left, right, self._dk, m_t, self.method)
        out += float(self.a_path(t)) * v * (1.0 - v)
        if self.mode == "moving":
            c = self.frame_c(t, m_t)
            out += _advection(v, self.grid, left, right, c, self._factors)
        return out

    def step(self, f: Field, dt: float, t: float | None = None) -> Field:
        """One RK4 step from ``f`` (at time ``t``, default ``f.time``)."""
        t = f.time if t is None else t
        v = f.values
        L, R = f.left, f.right
        k1 = self.rhs(t, v, L, R)
        k2 = self.rhs(t + 0.5 * dt, v + 0.5 * dt * k1, L, R)
        k3 = self.rhs(t + 0.5 * dt, v + 0.5 * dt * k2, L, R)
        k4 = self.rhs(t + dt, v + dt * k3, L, R)
        new = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return f.evolve_to(new, t + dt)


def step_fixed(f: Field, kernel: KernelSpec, a_path: CoefficientPath, dt: float, method="direct") -> Field:
    """One RK4 step of the fixed-frame equation (refuses dt above budget)."""
    scheme = Scheme(f.grid, kernel, a_path, "fixed", method=method)
    scheme.check_dt(dt)
    return scheme.step(f, dt)


def step_moving(f: Field, kernel: KernelSpec, a_path: CoefficientPath, mu: float, dt: float,
                method="direct", advection="fitted") -> Field:
    """One RK4 step in the frame moving with C(t; mu)."""
    scheme = Scheme(f.grid, kernel, a_path, "moving", mu, method, advection)
    scheme.check_dt(dt)
    return scheme.step(f, dt)


def front_position(f, level: float = 0.5, x=None):
    """Rightmost linearly interpolated crossing of ``level``; None when absent."""
    if isinstance(f, Field):
        x, u = f.x, f.values
    else:
        u = np.asarray(f, dtype=float)
    a = u[:-1] - level
    b = u[1:] - level
    idx = np.nonzero(((a >= 0) & (b < 0)) | ((a < 0) & (b >= 0)) | ((a > 0) & (b <= 0)))[0]
    if idx.size == 0:
        return None
    i = int(idx[-1])
    if a[i] == b[i]:
        return float(x[i])
    w = a[i] / (a[i] - b[i])
    return float(x[i] + w * (x[i + 1] - x[i]))


@dataclass(eq=False)
class Trajectory:
    """Snapshots of a run and per-snapshot diagnostics.

    ``values`` is None when the run was made with ``keep_values=False``.
    """

    grid: Grid
    times: np.ndarray
    values: np.ndarray | None
    front_pos: np.ndarray
    mass: np.ndarray
    vmin: np.ndarray
    vmax: np.ndarray
    final: Field
    dt: float
    excursion: float = 0.0

    def __len__(self):
        return self.times.size

    def field(self, i) -> Field:
        if self.values is None:
            raise ConfigurationError("trajectory was recorded without snapshot values")
        return self.final.evolve_to(self.values[i], float(self.times[i]))

    def diagnostics(self) -> np.ndarray:
        """Columns t, front_pos, mass, min, max."""
        return np.column_stack([self.times, self.front_pos, self.mass, self.vmin, self.vmax])


def lattice_dt(budget: float) -> float:
    """Largest 1/k (k integer) not above ``budget``; such steps tile integer times."""
    return 1.0 / math.ceil(1.0 / budget - 1e-12)


def _lattice_index(t, dt):
    k = t / dt
    r = round(k)
    return int(r) if abs(k - r) <= 1e-9 * max(1.0, abs(k)) else None


def evolve(
    f0: Field,
    kernel: KernelSpec,
    a_path: CoefficientPath,
    mode: str = "fixed",
    t0: float | None = None,
    t1: float = 0.0,
    dt: float = 0.01,
    snapshot_every: float | None = None,
    mu: float | None = None,
    level: float = 0.5,
    method: str = "direct",
    advection: str = "fitted",
    callback=None,
    scheme: Scheme | None = None,
    keep_values: bool = True,
) -> Trajectory:
    """Integrate from ``t0`` (default ``f0.time``) to ``t1`` with fixed RK4 steps.

    ``mode`` is ``"fixed"`` or ``"moving"`` (then ``mu`` is required).  Steps
    sit on the lattice k*dt when t0 does; (t1 - t0)/dt must be an integer.
    ``callback(field)`` is invoked at every snapshot, including the first.
    """
    t0 = f0.time if t0 is None else t0
    if scheme is None:
        scheme = Scheme(f0.grid, kernel, a_path, mode, mu, method, advection)
    scheme.check_dt(dt)
    span = (t1 - t0) / dt
    n_steps = int(round(span))
    if n_steps < 0 or abs(span - n_steps) > 1e-6 * max(1.0, abs(span)):
        raise ConfigurationError(f"(t1 - t0)/dt = {span:.9g} is not a non-negative integer")
    every = max(1, n_steps) if snapshot_every is None else max(1, int(round(snapshot_every / dt)))
    k0 = _lattice_index(t0, dt)

    def time_of(k):
        if k == n_steps:
            return float(t1)
        return (k0 + k) * dt if k0 is not None else t0 + k * dt

    x = f0.grid.x
    h = f0.grid.h
    snaps, rows = [], []
    excursion = 0.0

    def record(fld):
        v = fld.values
        p = front_position(v, level, x)
        rows.append((fld.time, np.nan if p is None else p, h * v.sum(), v.min(), v.max()))
        if keep_values:
            snaps.append(v)
        if callback is not None:
            callback(fld)

    f = f0.evolve_to(f0.values, float(t0))
    record(f)
    for k in range(n_steps):
        f = scheme.step(f, dt, time_of(k))
        f = f.evolve_to(f.values, time_of(k + 1))
        lo, hi = float(f.values.min()), float(f.values.max())
        excursion = max(excursion, -lo, hi - 1.0)
        if (k + 1) % every == 0 or k + 1 == n_steps:
            record(f)
    if excursion > INTERVAL_SLACK:
        warnings.warn(f"solution left [0, 1] by {excursion:.3g}", RuntimeWarning, stacklevel=2)
    diag = np.array(rows, dtype=float)
    return Trajectory(
        grid=f0.grid,
        times=diag[:, 0],
        values=np.array(snaps) if keep_values else None,
        front_pos=diag[:, 1],
        mass=diag[:, 2],
        vmin=diag[:, 3],
        vmax=diag[:, 4],
        final=f,
        dt=dt,
        excursion=max(0.0, excursion),
    )
