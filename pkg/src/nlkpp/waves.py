"""Super/sub-solutions and the limiting construction of transition fronts.

In the frame moving with C(t; mu) the front profile is squeezed between

    phi_plus(x)  = min(1, e^{-mu x})
    phi_sub(t,x) = e^{-mu x} - d exp((mu~/mu - 1) A(t) - mu~ x)

where A is a bounded corrector absorbing the time fluctuations of
f(t) = mu~ (c(t; mu) - c(t; mu~)).  The front itself is the limit, as n grows,
of moving-frame solutions started from phi_plus at time -n and read at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import drivers, solver
from .drivers import CoefficientPath
from .errors import ConfigurationError, DomainError, EstimationError, NonConvergenceError
from .kernels import KernelSpec, abscissa
from .speed import SpeedFunction, critical_mu, position_C

DEFAULT_SCHEDULE = (5, 10, 20, 40)
DEFAULT_TOL = 1e-4
PATH_DT = 0.05


# -- exponential barriers ----------------------------------------------------


def phi_plus(mu, x):
    """min(1, e^{-mu x})."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-mu * np.maximum(x, 0.0))
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class Corrector:
    """Bounded A(t) built from the block decomposition of f = mu~ (c(mu) - c(mu~)).

    A = -B_f / k with k = mu~/mu - 1 and B_f the block corrector of f, so that
    k A' + f equals the block average beta_k of f on every block.
    """

    block: drivers.BlockDecomposition
    k: float

    def __call__(self, t):
        out = -np.asarray(self.block.A(t)) / self.k
        return out if out.ndim else float(out)

    @property
    def margins(self) -> np.ndarray:
        return self.block.alphas

    def sup_norm(self) -> float:
        return self.block.sup_norm() / self.k


def _norm(A) -> float:
    if A is None:
        return 0.0
    if isinstance(A, (int, float)):
        return abs(float(A))
    return float(A.sup_norm())


def _A_at(A, t):
    if A is None:
        return np.zeros(np.shape(t)) if np.ndim(t) else 0.0
    if isinstance(A, (int, float)):
        return np.full(np.shape(t), float(A)) if np.ndim(t) else float(A)
    return A(t)


def d_min(mu, mu_tilde, eps, A, a_max) -> float:
    """(a_max / (eps e^{|A|}))^{(mu~ - mu)/mu}; ``A`` is a sup-norm or a corrector."""
    if not eps > 0:
        raise ConfigurationError("eps must be positive")
    return (a_max / (eps * math.exp(_norm(A)))) ** ((mu_tilde - mu) / mu)


def d_required(mu, mu_tilde, eps, A, a_max) -> float:
    """(a_max e^{|A|} / eps)^{(mu~ - mu)/mu}: the size that makes phi_sub a sub-solution.

    Coincides with :func:`d_min` when A vanishes.
    """
    if not eps > 0:
        raise ConfigurationError("eps must be positive")
    return (a_max * math.exp(_norm(A)) / eps) ** ((mu_tilde - mu) / mu)


@dataclass(frozen=True, eq=False)
class SubSuperParams:
    """Parameters of the sub-solution: rates, size d, margin eps and corrector A.

    ``A`` is None (A = 0), a float (constant A) or a :class:`Corrector`.
    """

    mu: float
    mu_tilde: float
    d: float
    eps: float
    A: object = None
    T_block: float = 1.0
    a_max: float = 1.0
    mu_star: float = math.inf

    def __post_init__(self):
        if not 0 < self.mu < self.mu_tilde < min(2 * self.mu, self.mu_star):
            raise DomainError(
                f"need 0 < mu < mu~ < min(2 mu, mu*), got mu={self.mu}, mu~={self.mu_tilde}, "
                f"mu*={self.mu_star}"
            )
        if not (self.d > 0 and self.eps > 0):
            raise ConfigurationError("d and eps must be positive")

    @property
    def k(self) -> float:
        return self.mu_tilde / self.mu - 1.0

    def A_at(self, t):
        return _A_at(self.A, t)

    def margin_ok(self) -> bool:
        """eps below every block average of f (the margin inequality)."""
        if isinstance(self.A, Corrector):
            return bool(np.all(self.A.margins >= self.eps))
        return True


def phi_sub(params: SubSuperParams, t, x):
    """e^{-mu x} - d exp(k A(t) - mu~ x)."""
    x = np.asarray(x, dtype=float)
    expo = params.k * params.A_at(t) - params.mu_tilde * x
    out = np.exp(-params.mu * x) - params.d * np.exp(expo)
    return out if out.ndim else float(out)


def x_peak(params: SubSuperParams, t):
    """Maximizer of phi_sub(t, .)."""
    mu, mt = params.mu, params.mu_tilde
    base = (math.log(params.d) + math.log(mt) - math.log(mu)) / (mt - mu)
    return base + params.A_at(t) / mu


def x_zero(params: SubSuperParams, t):
    """Zero of phi_sub(t, .); phi_sub > 0 to its right."""
    return (math.log(params.d) + params.k * params.A_at(t)) / (params.mu_tilde - params.mu)


def phi_minus(params: SubSuperParams, t, x, t0_shift=0.0):
    """phi_sub right of its peak, the peak value to the left (evaluated at t + t0_shift)."""
    s = t + t0_shift
    xp = x_peak(params, s)
    x = np.asarray(x, dtype=float)
    top = phi_sub(params, s, xp)
    out = np.where(x <= xp, top, phi_sub(params, s, np.maximum(x, xp)))
    return out if out.ndim else float(out)


def default_mu_tilde(mu, mu_star):
    return min(1.5 * mu, 0.5 * (mu + mu_star))


def f_path(kernel: KernelSpec, path: CoefficientPath, mu, mu_tilde) -> CoefficientPath:
    """f(t) = mu~ (c(t; mu) - c(t; mu~)) on the samples of ``path``."""
    c1 = SpeedFunction(kernel, path, mu).path
    c2 = SpeedFunction(kernel, path, mu_tilde).path
    vals = mu_tilde * (c1.values - c2.values)
    return CoefficientPath(
        path.base_times, vals, path.interpolation, path.dt,
        (float(vals.min()), float(vals.max())), None, path.offset,
    )


def sub_super_params(
    kernel: KernelSpec,
    path: CoefficientPath,
    mu: float,
    mu_star: float,
    mu_tilde: float | None = None,
    T: float = 1.0,
    d_factor: float = 1.0,
    eps: float | None = None,
) -> SubSuperParams:
    """Choose (mu~, eps, A, d) for a sampled path covering an integer number of blocks.

    eps defaults to half the smallest block average of f; d is
    ``d_factor * max(d_min, d_required)``.
    """
    if mu_tilde is None:
        mu_tilde = default_mu_tilde(mu, mu_star)
    fp = f_path(kernel, path, mu, mu_tilde)
    block = drivers.block_decomposition(fp, T)
    if float(block.alphas.min()) <= 0:
        raise DomainError("block averages of mu~ (c(mu) - c(mu~)) are not positive; mu too close to mu*")
    k = mu_tilde / mu - 1.0
    A = Corrector(block, k)
    if eps is None:
        eps = 0.5 * float(block.alphas.min())
    a_max = float(path.bounds[1])
    d = d_factor * max(d_min(mu, mu_tilde, eps, A, a_max), d_required(mu, mu_tilde, eps, A, a_max))
    return SubSuperParams(mu, mu_tilde, d, eps, A, T, a_max, mu_star)


# -- limiting construction ----------------------------------------------------


@dataclass(eq=False)
class WaveProfile:
    """Front profile U(x, theta_t omega) in the moving frame, with its position C(t)."""

    grid: solver.Grid
    times: np.ndarray
    U: np.ndarray
    C: np.ndarray
    mu: float
    params: SubSuperParams
    kernel: KernelSpec
    path: CoefficientPath
    dt: float
    n_used: int
    distances: list
    construction: str = "pullback"
    sandwich_violations: int = 0
    sandwich_margin: float = math.inf
    meta: dict = field(default_factory=dict)

    @property
    def x(self):
        return self.grid.x

    @property
    def profile(self) -> np.ndarray:
        """U at time 0."""
        return self.U[0]

    def field(self, i=0) -> solver.Field:
        return solver.Field.front(self.grid, self.U[i], self.mu, float(self.times[i]))

    def tail_deviation(self, window=None, i=0) -> float:
        """sup over the window of |U / e^{-mu x} - 1| (default window [5/mu, 8/mu])."""
        lo, hi = window or (5.0 / self.mu, 8.0 / self.mu)
        m = (self.x >= lo) & (self.x <= hi)
        return float(np.max(np.abs(self.U[i][m] * np.exp(self.mu * self.x[m]) - 1.0)))

    def left_min(self, window=None, i=0) -> float:
        """min of U over the left window (default the outer half [-L, -L/2])."""
        lo, hi = window or (-self.grid.L, -0.5 * self.grid.L)
        m = (self.x >= lo) & (self.x <= hi)
        return float(self.U[i][m].min())


def _block_window(lo, hi, T):
    """Smallest [T*i, T*j] containing [lo, hi] with at least one block."""
    i = math.floor(lo / T + 1e-9)
    j = max(math.ceil(hi / T - 1e-9), i + 1)
    return i * T, j * T


def _driver_path(driver, t0, t1, dt=PATH_DT):
    step = (t1 - t0) if drivers.is_autonomous(driver) else dt
    return drivers.sample_path(driver, t0, t1, step)


def _snapshot_dt(budget, every):
    """Largest 1/k below ``budget`` whose multiples hit every snapshot time, when one exists nearby."""
    k = math.ceil(1.0 / budget - 1e-12)
    for kk in range(k, 4 * k + 1):
        n = every * kk
        if abs(n - round(n)) < 1e-9 and round(n) > 0:
            return 1.0 / kk
    return 1.0 / k


def default_grid(kernel: KernelSpec, mu: float, h: float = 0.05) -> solver.Grid:
    """L = 40 max(1/mu, kernel scale), spacing about h (and at most scale/4)."""
    L = 40.0 * max(1.0 / mu, kernel.length_scale)
    h = min(h, kernel.length_scale / 4.0)
    N = int(math.ceil(2 * L / h)) + 1
    return solver.Grid(L, N)


class _Sandwich:
    """Counts snapshots where v leaves [phi_minus - tol, phi_plus + tol]."""

    def __init__(self, params, grid, tol):
        self.params = params
        self.x = grid.x
        self.upper = phi_plus(params.mu, self.x)
        self.tol = tol
        self.violations = 0
        self.margin = math.inf
        self.checked = 0

    def __call__(self, f):
        lower = phi_minus(self.params, f.time, self.x)
        gap = min(float(np.min(f.values - lower)), float(np.min(self.upper - f.values)))
        self.margin = min(self.margin, gap + self.tol)
        self.checked += 1
        if gap < -self.tol:
            self.violations += 1


def build_wave(
    kernel: KernelSpec,
    driver,
    mu: float,
    grid: solver.Grid | None = None,
    n_schedule=DEFAULT_SCHEDULE,
    dt: float | None = None,
    tol: float = DEFAULT_TOL,
    construction: str = "pullback",
    mu_tilde: float | None = None,
    mu_star: float | None = None,
    profile_horizon: float = 0.0,
    profile_every: float = 1.0,
    check_every: float | None = None,
    strict: bool = True,
    reach: float = 0.0,
) -> WaveProfile:
    """Construct the front U^mu as the limit of moving-frame Cauchy problems.

    ``pullback``: for each n, start from phi_plus at time -n and read the
    solution at time 0.  ``forward``: start at 0 and read at time n (the
    profiles then sit in different environments, so convergence is only
    expected for autonomous drivers).  Sandwich bounds phi_minus <= v <=
    phi_plus are checked at every ``check_every`` (default every step) with
    tolerance 10 h mu.  After convergence the limit is evolved over
    ``profile_horizon`` and stored every ``profile_every``.  The sampled
    coefficient extends ``max(profile_horizon, reach)`` past the read-out
    time so later runs (e.g. stability) can reuse it.
    """
    if construction not in ("pullback", "forward"):
        raise ConfigurationError(f"unknown construction {construction!r}")
    schedule = sorted(int(n) for n in n_schedule)
    if len(schedule) < 2 or schedule[0] <= 0:
        raise ConfigurationError("n_schedule needs at least two positive entries")
    if not mu < abscissa(kernel):
        raise DomainError(f"mu={mu} is not below the abscissa {abscissa(kernel)}")
    grid = grid or default_grid(kernel, mu)
    T = drivers.default_block_length(driver)
    n_max = schedule[-1]
    autonomous = drivers.is_autonomous(driver)
    single_run = autonomous or construction == "forward"
    ahead = max(profile_horizon, reach)
    if construction == "pullback":
        lo, hi = _block_window(-n_max, (n_max if autonomous else 0) + ahead, T)
    else:
        lo, hi = _block_window(0.0, n_max + ahead, T)
    path = _driver_path(driver, lo, hi)
    if mu_star is None:
        probe = path if drivers.is_autonomous(driver) else path.restrict(lo, hi)
        mu_star = critical_mu(kernel, driver, horizon=probe.horizon, path=probe).mu_star
    if not mu < mu_star:
        raise DomainError(f"mu={mu} must be below mu*={mu_star:.6g}")
    params = sub_super_params(kernel, path, mu, mu_star, mu_tilde, T)

    scheme = solver.Scheme(grid, kernel, path, "moving", mu)
    if dt is None:
        dt = _snapshot_dt(scheme.dt_budget(), profile_every)
    sandwich = _Sandwich(params, grid, 10.0 * grid.h * mu)
    every = dt if check_every is None else check_every
    u0 = phi_plus(mu, grid.x)

    profiles = {}
    if single_run:
        # one run suffices: profile at duration n is read at time n (forward)
        # and, by autonomy, equals the pullback profile at time 0
        marks = set(schedule)

        def grab(f):
            sandwich(f)
            k = round(f.time)
            if abs(f.time - k) < 1e-9 and k in marks:
                profiles[k] = f.values

        f0 = solver.Field.front(grid, u0, mu, 0.0)
        solver.evolve(f0, kernel, path, "moving", 0.0, float(n_max), dt, every, mu=mu,
                      callback=grab, scheme=scheme, keep_values=False)
    else:
        for n in schedule:
            f0 = solver.Field.front(grid, u0, mu, float(-n))
            tr = solver.evolve(f0, kernel, path, "moving", float(-n), 0.0, dt, every, mu=mu,
                               callback=sandwich, scheme=scheme, keep_values=False)
            profiles[n] = tr.final.values
    seq = [profiles[n] for n in schedule]
    distances = [float(np.max(np.abs(b - a))) for a, b in zip(seq, seq[1:])]
    if strict and not distances[-1] < tol:
        raise NonConvergenceError(
            f"sup-distance {distances[-1]:.3g} did not fall below {tol:g} along n={schedule}", distances
        )

    start = float(n_max) if single_run else 0.0
    t_read = 0.0 if construction == "pullback" else start
    limit = solver.Field.front(grid, seq[-1], mu, start)
    if profile_horizon > 0:
        tr = solver.evolve(limit, kernel, path, "moving", start, start + profile_horizon, dt,
                           profile_every, mu=mu, callback=sandwich, scheme=scheme)
        U = tr.values
        times = tr.times - start + t_read
    else:
        U = seq[-1][None, :]
        times = np.array([t_read])
    sf = SpeedFunction(kernel, path, mu)
    C = np.asarray(position_C(sf, times), dtype=float)
    return WaveProfile(
        grid=grid, times=times, U=np.array(U), C=C, mu=mu, params=params, kernel=kernel,
        path=path, dt=dt, n_used=n_max, distances=distances, construction=construction,
        sandwich_violations=sandwich.violations, sandwich_margin=sandwich.margin,
        meta={"n_schedule": tuple(schedule), "mu_star": mu_star, "tol": tol,
              "sandwich_checks": sandwich.checked, "driver": driver},
    )


def construction_gap(kernel: KernelSpec, driver, mu: float, **kwargs) -> float:
    """sup |U_pullback - U_forward| for the same driver; zero when the driver is autonomous.

    The forward profile is read at time n_max, so for periodic drivers the two
    agree when n_max is a multiple of the period and differ otherwise.
    """
    kwargs = {**kwargs, "strict": False, "profile_horizon": 0.0}
    back = build_wave(kernel, driver, mu, construction="pullback", **kwargs)
    fwd = build_wave(kernel, driver, mu, construction="forward", **kwargs)
    return float(np.max(np.abs(back.profile - fwd.profile)))


# -- long-time quantities -----------------------------------------------------


@dataclass(frozen=True)
class SpeedEstimate:
    slope: float
    quarter_slope: float
    consistency: float
    t_fit: tuple


def measure_c_star(record, times=None, min_horizon: float = 0.0) -> SpeedEstimate:
    """Least-squares slope of a position record over the trailing half of its horizon.

    ``record`` is a WaveProfile (uses C), a Trajectory (uses front positions)
    or an array of positions with ``times``.  The trailing-quarter slope is
    returned as a consistency diagnostic.
    """
    if isinstance(record, WaveProfile):
        t, y = record.times, record.C
    elif isinstance(record, solver.Trajectory):
        t, y = record.times, record.front_pos
    else:
        t, y = np.asarray(times, dtype=float), np.asarray(record, dtype=float)
    ok = np.isfinite(y)
    t, y = t[ok], y[ok]
    if t.size < 4:
        raise EstimationError("need at least four finite positions", float(np.ptp(t)) if t.size else 0.0)
    H = float(t[-1] - t[0])
    if H <= 0 or H < min_horizon:
        raise EstimationError(f"horizon {H:.6g} below the required {min_horizon:.6g}", H)

    def fit(frac):
        m = t >= t[-1] - frac * H
        if m.sum() < 2:
            raise EstimationError("too few samples in the fit window", H)
        return float(np.polyfit(t[m], y[m], 1)[0])

    half, quarter = fit(0.5), fit(0.25)
    return SpeedEstimate(half, quarter, abs(half - quarter), (float(t[-1] - 0.5 * H), float(t[-1])))


def time_average_profile(wave: WaveProfile, horizon: float) -> np.ndarray:
    """Nodewise (1/H) int_0^H U(x, theta_s omega) ds by the trapezoid rule on snapshots."""
    t = wave.times - wave.times[0]
    if not horizon > 0:
        raise ConfigurationError("horizon must be positive")
    if t[-1] < horizon - 1e-9 or wave.U.shape[0] < 2:
        if wave.U.shape[0] == 1 and drivers.is_autonomous(wave.meta.get("driver")):
            return wave.U[0].copy()
        raise EstimationError(f"snapshots span {t[-1]:.6g} < horizon {horizon:.6g}", float(t[-1]))
    m = t <= horizon + 1e-9
    return np.trapezoid(wave.U[m], t[m], axis=0) / float(t[m][-1])
