"""Independent numerical checks: discrete comparison, the G-residual and time-Lipschitz bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import solver, waves
from .drivers import CoefficientPath
from .errors import ArityError, ConfigurationError
from .kernels import KernelSpec
from .speed import SpeedFunction

ORDER_SLACK = 1e-8


@dataclass(frozen=True)
class ToleranceModel:
    """Scheme tolerance C1 h + C2 dt^2 attached to every inequality check."""

    C1: float
    C2: float

    def __call__(self, h: float, dt: float) -> float:
        return self.C1 * h + self.C2 * dt * dt


# Calibrated with calibrate_tolerance() on the Gaussian(s=1), a = 1 front
# (measured C1 ~ 1.6e-5, C2 ~ 3.3e-4) and frozen with a safety factor >= 10.
SCHEME_TOLERANCE = ToleranceModel(C1=2e-4, C2=5e-3)


def calibrate_tolerance(h: float = 0.1, dt: float = 0.1, horizon: float = 10.0, L: float = 40.0):
    """Measure (C1, C2) from space-only and time-only refinement of a front run.

    C1 = |u_h - u_{h/2}|_inf / h at fixed dt, C2 = |u_dt - u_{dt/2}|_inf / dt^2
    at fixed h, both for Gaussian(s=1), a = 1, data min(1, e^{-x}).
    """
    from . import drivers
    from .kernels import KernelSpec

    K = KernelSpec.gaussian(1.0)
    a = drivers.sample_path(drivers.Constant(1.0), 0.0, horizon, horizon)

    def run(hh, tt):
        g = solver.Grid(L, int(round(2 * L / hh)) + 1)
        f = solver.Field.front(g, np.minimum(1.0, np.exp(-g.x)), 1.0)
        return g.x, solver.evolve(f, K, a, t0=0.0, t1=horizon, dt=tt, keep_values=False).final.values

    x1, u1 = run(h, dt)
    x2, u2 = run(h / 2, dt)
    _, u3 = run(h, dt / 2)
    e_h = float(np.max(np.abs(u1 - u2[::2])))
    e_dt = float(np.max(np.abs(u1 - u3)))
    return e_h / h, e_dt / dt**2


@dataclass
class CheckResult:
    """One verdict: name, pass flag and signed margin (>= 0 means satisfied)."""

    name: str
    passed: bool
    margin: float
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{self.name},{'pass' if self.passed else 'fail'},{self.margin:.6g}"


def comparison_check(
    lower0: solver.Field,
    upper0: solver.Field,
    kernel: KernelSpec,
    a_path: CoefficientPath,
    mode: str = "fixed",
    horizon: float = 10.0,
    dt: float | None = None,
    mu: float | None = None,
    tolerance: ToleranceModel = SCHEME_TOLERANCE,
) -> CheckResult:
    """Evolve ordered data side by side; pass iff upper - lower >= -(1e-8 + tol) throughout.

    The margin is the smallest value of upper - lower + (1e-8 + tol); the
    first violating (t, x) is reported in ``detail``.
    """
    lo, hi = lower0.values, upper0.values
    if np.any(lo > hi):
        raise ConfigurationError("comparison needs lower0 <= upper0 nodewise")
    if lo.min() < 0 or hi.max() > 1:
        raise ConfigurationError("comparison data must lie in [0, 1]")
    grid = lower0.grid
    scheme = solver.Scheme(grid, kernel, a_path, mode, mu)
    if dt is None:
        dt = solver.lattice_dt(scheme.dt_budget())
    scheme.check_dt(dt)
    tol = ORDER_SLACK + tolerance(grid.h, dt)
    n = int(round(horizon / dt))
    t0 = lower0.time
    lf, uf = lower0, upper0
    worst = float(np.min(hi - lo))
    first = None
    for k in range(n):
        t = t0 + k * dt
        lf = scheme.step(lf, dt, t)
        uf = scheme.step(uf, dt, t)
        gap = uf.values - lf.values
        g = float(gap.min())
        if g < worst:
            worst = g
        if first is None and g < -tol:
            i = int(np.argmin(gap))
            first = (t + dt, float(grid.x[i]))
    return CheckResult(
        "comparison", first is None, worst + tol,
        {"min_gap": worst, "tol": tol, "first_violation": first, "dt": dt},
    )


def sample_fields(fn, grid: solver.Grid, times, left=None, right=None):
    """Fields of a closed-form v(t, x) at the given times."""
    left = left or solver.Extension("constant", 1.0)
    right = right or solver.Extension("constant", 0.0)
    return [solver.Field(grid, fn(float(t), grid.x), float(t), left, right) for t in times]


@dataclass
class Residual:
    times: np.ndarray
    values: np.ndarray
    one_sided: np.ndarray


def residual_G(v, kernel: KernelSpec, a_path: CoefficientPath, mu: float, method="direct") -> Residual:
    """v_t - N[v] - c(t; mu) v_x - a v (1 - v) on each snapshot.

    ``v`` is a Trajectory (with values) or a sequence of Fields with
    increasing times.  v_t uses second-order central differences at interior
    snapshots and first-order one-sided ones at the ends (flagged in
    ``one_sided``); v_x is the central difference with the boundary
    extensions supplying the ghost values.
    """
    fields = [v.field(i) for i in range(len(v))] if isinstance(v, solver.Trajectory) else list(v)
    if len(fields) < 2:
        raise ArityError("the residual needs at least two snapshots")
    t = np.array([f.time for f in fields])
    if np.any(np.diff(t) <= 0):
        raise ConfigurationError("snapshot times must increase")
    V = np.array([f.values for f in fields])
    vt = np.empty_like(V)
    vt[1:-1] = (V[2:] - V[:-2]) / (t[2:] - t[:-2])[:, None]
    vt[0] = (V[1] - V[0]) / (t[1] - t[0])
    vt[-1] = (V[-1] - V[-2]) / (t[-1] - t[-2])
    flags = np.zeros(len(fields), dtype=bool)
    flags[[0, -1]] = True
    sf = SpeedFunction(kernel, a_path, mu)
    out = np.empty_like(V)
    for i, f in enumerate(fields):
        h = f.grid.h
        ghost_l = f.left.ghosts(f.values[0], np.array([-h]))
        ghost_r = f.right.ghosts(f.values[-1], np.array([h]))
        ext = np.concatenate([ghost_l, f.values, ghost_r])
        vx = (ext[2:] - ext[:-2]) / (2 * h)
        nl = solver.nonlocal_term(f, kernel, f.time, method)
        a = float(a_path(f.time))
        out[i] = vt[i] - nl - sf(f.time) * vx - a * f.values * (1.0 - f.values)
    return Residual(t, out, flags)


def _front_ext(mu):
    return solver.Extension("constant", 1.0), solver.Extension("exponential", 0.0, mu)


def residual_phi_plus(kernel: KernelSpec, a_path: CoefficientPath, mu: float, grid: solver.Grid,
                      t: float = 0.0, dt_fd: float = 0.01,
                      tolerance: ToleranceModel = SCHEME_TOLERANCE) -> CheckResult:
    """Super-solution sign: G[phi_plus] >= -tol at every node at time t."""
    F = sample_fields(lambda s, x: waves.phi_plus(mu, x), grid, [t - dt_fd, t, t + dt_fd], *_front_ext(mu))
    g = residual_G(F, kernel, a_path, mu).values[1]
    tol = tolerance(grid.h, dt_fd)
    return CheckResult("residual_phi_plus", bool(g.min() >= -tol), float(g.min() + tol),
                       {"min": float(g.min()), "tol": tol})


def residual_phi_minus(kernel: KernelSpec, a_path: CoefficientPath, params, grid: solver.Grid,
                       t: float = 0.0, dt_fd: float = 0.01,
                       tolerance: ToleranceModel = SCHEME_TOLERANCE) -> CheckResult:
    """Sub-solution sign: G[phi_minus] <= tol right of the peak at time t."""
    mu = params.mu
    F = sample_fields(lambda s, x: waves.phi_minus(params, s, x), grid, [t - dt_fd, t, t + dt_fd],
                      *_front_ext(mu))
    g = residual_G(F, kernel, a_path, mu).values[1]
    right = grid.x >= waves.x_peak(params, t)
    tol = tolerance(grid.h, dt_fd)
    top = float(g[right].max())
    return CheckResult("residual_phi_minus", bool(top <= tol), float(tol - top), {"max": top, "tol": tol})


@dataclass
class LipschitzReport:
    measured: float
    derived_bound: float
    literal_bound: float | None
    tol: float

    @property
    def passed(self) -> bool:
        ok = self.measured <= self.derived_bound + self.tol
        if self.literal_bound is not None:
            ok = ok and self.measured <= self.literal_bound + self.tol
        return ok


def lipschitz_check(traj: solver.Trajectory, kernel: KernelSpec, a_path: CoefficientPath,
                    tolerance: ToleranceModel = SCHEME_TOLERANCE) -> LipschitzReport:
    """Max nodewise |du/dt| between snapshots against 2 mass + a_max/4.

    The constant 2 mass + 1 is also checked when a_max <= 4.
    """
    if traj.values is None or len(traj) < 3:
        raise ArityError("the Lipschitz check needs at least three stored snapshots")
    gaps = np.diff(traj.times)
    if np.ptp(gaps) > 1e-9 * max(1.0, gaps.max()):
        raise ConfigurationError("snapshots must be uniformly spaced")
    rate = float(np.max(np.abs(np.diff(traj.values, axis=0)))) / float(gaps[0])
    m_hi = kernel.mass_bounds()[1]
    a_max = float(a_path.bounds[1])
    literal = 2.0 * m_hi + 1.0 if a_max <= 4.0 else None
    return LipschitzReport(rate, 2.0 * m_hi + a_max / 4.0, literal, tolerance(traj.grid.h, traj.dt))


def random_case(seed: int, L: float = 25.0, N: int = 1001):
    """A random ordered pair with a kernel and driver drawn from the built-in menu.

    Returns (lower0, upper0, kernel, a_path, mode, mu).  Data are monotone
    fronts; ``lower0 = min(upper0, g)`` keeps the order by construction.
    """
    from . import drivers
    from .kernels import KernelSpec

    rng = drivers.make_rng(seed, 3)
    mass = rng.uniform(0.5, 1.5)
    shape = rng.integers(3)
    if shape == 0:
        K = KernelSpec.gaussian(rng.uniform(0.5, 1.5), mass)
    elif shape == 1:
        K = KernelSpec.laplace(rng.uniform(1.5, 3.0), mass)
    else:
        K = KernelSpec.tent(rng.uniform(0.5, 2.0), mass)
    kind = rng.integers(3)
    if kind == 0:
        spec = drivers.Constant(rng.uniform(0.5, 1.5))
    elif kind == 1:
        a0 = rng.uniform(0.8, 1.2)
        spec = drivers.Periodic(a0, 0.5 * a0 * rng.uniform(), rng.uniform(2.0, 8.0))
    else:
        spec = drivers.Telegraph(0.5, 1.5, rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), seed=seed)
    horizon = 5.0
    a_path = drivers.sample_path(spec, 0.0, horizon, 0.05 if kind else horizon)
    grid = solver.Grid(L, N)
    x = grid.x
    up = np.minimum(1.0, np.exp(-rng.uniform(0.3, 1.5) * (x - rng.uniform(-5, 5))))
    theta = rng.uniform(0.0, 1.0)
    g = theta / (1.0 + np.exp(rng.uniform(0.3, 2.0) * (x - rng.uniform(-8, 8))))
    lo = np.minimum(up, g)
    edge = solver.Extension("edge")
    mode = "moving" if rng.uniform() < 0.5 else "fixed"
    mu = None
    if mode == "moving":
        sigma = K.param if K.shape == "laplace" else 2.0
        mu = rng.uniform(0.2, 0.9) * min(sigma, 2.0)
    lower0 = solver.Field(grid, lo, 0.0, edge, edge)
    upper0 = solver.Field(grid, up, 0.0, edge, edge)
    return lower0, upper0, K, a_path, mode, mu
