"""Perturbed fronts: ratio distance to the constructed wave and the alpha(t) contraction."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import drivers, solver
from .errors import ConfigurationError, DomainError, TailConditionError
from .waves import WaveProfile

RATIO_FLOOR = 1e-6
TAIL_TOL = 0.01
CAP = 1.0 - 1e-6


@dataclass(frozen=True)
class PerturbationSpec:
    """Initial perturbation of a front.

    ``bump``: u0 = U (1 + amplitude exp(-((x - center)/width)^2)).
    ``scale``: u0 = alpha0 U.
    ``noise``: u0 = U (1 + amplitude xi(x) exp(-rate max(x - center, 0))) with
    xi uniform on [-1, 1] drawn from ``seed`` and ``rate`` defaulting to mu~ - mu
    so the perturbation decays like the sub-solution correction.
    """

    kind: str
    amplitude: float = 0.0
    width: float = 1.0
    center: float = 0.0
    alpha0: float = 1.0
    rate: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("bump", "scale", "noise"):
            raise ConfigurationError(f"unknown perturbation {self.kind!r}")
        if self.kind == "scale" and not self.alpha0 > 0:
            raise ConfigurationError("scale factor must be positive")
        if self.kind == "bump" and not (self.width > 0 and self.amplitude > -1):
            raise ConfigurationError("bump needs width > 0 and amplitude > -1")
        if self.kind == "noise" and not 0 <= self.amplitude < 1:
            raise ConfigurationError("noise amplitude must lie in [0, 1)")

    @classmethod
    def bump(cls, amplitude, width, center=0.0):
        return cls("bump", amplitude=amplitude, width=width, center=center)

    @classmethod
    def scale(cls, alpha0):
        return cls("scale", alpha0=alpha0)

    @classmethod
    def noise(cls, amplitude, seed=0, center=0.0, rate=None):
        return cls("noise", amplitude=amplitude, center=center, rate=rate, seed=seed)


def _factor(spec: PerturbationSpec, x, wave: WaveProfile):
    if spec.kind == "scale":
        return np.full(x.shape, spec.alpha0)
    if spec.kind == "bump":
        return 1.0 + spec.amplitude * np.exp(-(((x - spec.center) / spec.width) ** 2))
    rate = spec.rate if spec.rate is not None else wave.params.mu_tilde - wave.mu
    xi = drivers.make_rng(spec.seed, 0).uniform(-1.0, 1.0, x.size)
    return 1.0 + spec.amplitude * xi * np.exp(-rate * np.maximum(x - spec.center, 0.0))


def make_initial(wave: WaveProfile, spec: PerturbationSpec, tail_start: float | None = None) -> solver.Field:
    """Perturbed data u0 clipped to (0, 1], checked against the tail condition.

    Rejects u0 when |u0/U - 1| >= 0.01 somewhere on [tail_start, L] where U
    is above the ratio floor (default tail start 5/mu).
    """
    x = wave.x
    U = wave.profile
    u0 = U * _factor(spec, x, wave)
    cap = 1.0 if spec.kind != "scale" or spec.alpha0 <= 1 else CAP
    clipped = int(np.count_nonzero((u0 > cap) | (u0 <= 0)))
    u0 = np.clip(u0, np.finfo(float).tiny, cap)
    if clipped and spec.kind != "scale":
        warnings.warn(f"clipped {clipped} nodes of the perturbed data into (0, 1]", RuntimeWarning, stacklevel=2)
    start = 5.0 / wave.mu if tail_start is None else tail_start
    m = (x >= start) & (U > RATIO_FLOOR)
    if np.any(m):
        dev = np.abs(u0[m] / U[m] - 1.0)
        if dev.max() >= TAIL_TOL:
            bad = x[m][dev >= TAIL_TOL]
            raise TailConditionError(
                f"|u0/U - 1| reaches {dev.max():.3g} beyond x={start:.4g}", (float(bad[0]), float(bad[-1]))
            )
    return solver.Field.front(wave.grid, u0, wave.mu, float(wave.times[0]))


def ratio_window(U: np.ndarray, floor: float = RATIO_FLOOR) -> np.ndarray:
    """Mask of nodes with floor <= U <= 1 - floor."""
    return (U >= floor) & (U <= 1.0 - floor)


def _values(f):
    return f.values if isinstance(f, solver.Field) else np.asarray(f, dtype=float)


def _window(U, window, floor):
    m = ratio_window(U, floor) if window is None else np.asarray(window, dtype=bool)
    low = m & (U < floor)
    if np.any(low):
        warnings.warn("window shrunk where U is below the floor", RuntimeWarning, stacklevel=3)
        m = m & ~low
    if not np.any(m):
        raise DomainError("empty ratio window")
    return m


def ratio_distance(u, U_shifted, window=None, floor: float = RATIO_FLOOR) -> float:
    """sup over the window of |u/U - 1|."""
    u, U = _values(u), _values(U_shifted)
    m = _window(U, window, floor)
    return float(np.max(np.abs(u[m] / U[m] - 1.0)))


def alpha_of(u, U_shifted, window=None, floor: float = RATIO_FLOOR) -> float:
    """Smallest alpha >= 1 with 1/alpha <= u/U <= alpha on the window."""
    u, U = _values(u), _values(U_shifted)
    m = _window(U, window, floor)
    r = u[m] / U[m]
    return float(max(r.max(), 1.0 / r.min(), 1.0))


@dataclass
class StabilityResult:
    times: np.ndarray
    distance: np.ndarray
    alpha: np.ndarray
    tail: np.ndarray
    sandwich_gap: np.ndarray
    delta: float
    delta_residual: float
    d_fit: float
    target: float
    monotone_tol: float = 1e-3
    meta: dict = field(default_factory=dict)

    @property
    def alpha_monotone(self) -> bool:
        return bool(np.all(np.diff(self.alpha) <= self.monotone_tol))

    @property
    def converged(self) -> bool:
        return bool(self.distance[-1] < self.target)

    @property
    def passed(self) -> bool:
        return self.alpha_monotone and self.converged

    def table(self) -> np.ndarray:
        return np.column_stack([self.times, self.distance, self.alpha])


def fit_contraction(times, alpha, a_path, t0=0.0, floor=1e-10):
    """delta from least squares of log(alpha - 1) against int_{t0}^t a; with the fit residual."""
    times, alpha = np.asarray(times), np.asarray(alpha)
    m = alpha - 1.0 > floor
    if m.sum() < 3:
        return math.nan, math.nan
    s = np.asarray(a_path.integral(t0, times[m]))
    y = np.log(alpha[m] - 1.0)
    coef, res, *_ = np.polyfit(s, y, 1, full=True)
    rms = math.sqrt(float(res[0]) / m.sum()) if res.size else 0.0
    return float(-coef[0]), rms


def run_stability(
    wave: WaveProfile,
    spec: PerturbationSpec,
    horizon: float = 60.0,
    dt: float | None = None,
    snapshot_every: float = 1.0,
    target: float = 0.01,
    eps_tail: float = 0.1,
    floor: float = RATIO_FLOOR,
) -> StabilityResult:
    """Evolve the perturbed data and the front together in the moving frame.

    Records the ratio distance, alpha, the tail deviation |u/e^{-mu x} - 1|
    on [5/mu, 8/mu], and the smallest gap to the tail sandwich
    (1 -/+ eps) e^{-mu x} -/+ d e^{k A(t) - mu~ x} in ratio form, with d fitted
    from the initial data.  delta is fitted from log(alpha - 1) against the
    integral of a.
    """
    a_path = wave.path
    est = drivers.mean_estimate(a_path) if not drivers.is_autonomous(wave.meta.get("driver")) else None
    a_least = est.least if est is not None else float(a_path.values.min())
    if not a_least > 0:
        raise DomainError("least mean of the coefficient must be positive")
    t0 = float(wave.times[0])
    t1 = t0 + horizon
    if not a_path.covers(t0, t1):
        raise DomainError(
            f"wave path covers [{a_path.t_start:.6g}, {a_path.t_end:.6g}], need [{t0:.6g}, {t1:.6g}]; "
            "build the wave with a larger reach"
        )
    grid, mu, p = wave.grid, wave.mu, wave.params
    x = grid.x
    scheme = solver.Scheme(grid, wave.kernel, a_path, "moving", mu)
    dt = dt or wave.dt
    scheme.check_dt(dt)
    n_steps = int(round(horizon / dt))
    if abs(n_steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ConfigurationError("horizon must be a multiple of dt")
    every = max(1, int(round(snapshot_every / dt)))

    u = make_initial(wave, spec)
    U = wave.field(0)
    tail_mask = (x >= 5.0 / mu) & (x <= 8.0 / mu)
    e_mu = np.exp(-mu * x[tail_mask])
    xt = x[tail_mask]

    def rel_tail(v):
        return v[tail_mask] / e_mu - 1.0

    corr0 = np.exp(p.k * p.A_at(t0) - (p.mu_tilde - mu) * xt)
    excess = np.maximum(np.abs(rel_tail(u.values)) - eps_tail, 0.0) / corr0
    d_fit = max(float(excess.max()), p.d)

    rows = []
    k0 = round(t0 / dt)

    def record(t, uf, Uf):
        a = alpha_of(uf, Uf, ratio_window(Uf.values, floor))
        dist = ratio_distance(uf, Uf, ratio_window(Uf.values, floor))
        rt = rel_tail(uf.values)
        corr = d_fit * np.exp(p.k * p.A_at(t) - (p.mu_tilde - mu) * xt)
        gap = float(np.min(eps_tail + corr - np.abs(rt)))
        rows.append((t, dist, a, float(np.max(np.abs(rt))), gap))

    record(t0, u, U)
    for k in range(n_steps):
        t = (k0 + k) * dt
        u = scheme.step(u, dt, t)
        U = scheme.step(U, dt, t)
        if (k + 1) % every == 0 or k + 1 == n_steps:
            record((k0 + k + 1) * dt, u, U)
    r = np.array(rows)
    delta, resid = fit_contraction(r[:, 0], r[:, 2], a_path, t0)
    return StabilityResult(
        times=r[:, 0], distance=r[:, 1], alpha=r[:, 2], tail=r[:, 3], sandwich_gap=r[:, 4],
        delta=delta, delta_residual=resid, d_fit=d_fit, target=target,
        meta={"spec": spec, "dt": dt, "eps_tail": eps_tail, "least_mean_a": a_least},
    )
