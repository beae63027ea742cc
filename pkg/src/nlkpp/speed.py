"""Speed functional c(t; mu), its integral C(t; mu) and the critical decay rate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import drivers
from .drivers import CoefficientPath
from .errors import DomainError, NonUnimodalError
from .kernels import KernelSpec, abscissa, moment_L, total_mass, unit_moment

MU_FLOOR = 1e-3
MU_CAP = 10.0
SIGMA_FRACTION = 0.95


@dataclass(frozen=True, eq=False)
class SpeedFunction:
    """c(t; mu) = (L(t, mu) - mass(t) + a(t)) / mu along a sampled coefficient path."""

    kernel: KernelSpec
    coeff: CoefficientPath
    mu: float

    def __post_init__(self):
        sigma = abscissa(self.kernel)
        if not 0 < self.mu < sigma:
            raise DomainError(f"mu must lie in (0, sigma={sigma!r}), got {self.mu!r}")

    def __call__(self, t):
        return speed_c(self, t)

    @cached_property
    def path(self) -> CoefficientPath:
        """c sampled on the coefficient's sample times, same interpolation."""
        times = self.coeff.sample_times
        m = self.kernel.mass * np.asarray(self.kernel.modulation_value(times), dtype=float)
        excess = unit_moment(self.kernel, self.mu) - 1.0
        c = (m * excess + self.coeff.values) / self.mu
        return CoefficientPath(
            self.coeff.base_times, c, self.coeff.interpolation, self.coeff.dt,
            (float(c.min()), float(c.max())), None, self.coeff.offset,
        )


def speed_c(sf: SpeedFunction, t):
    """Instantaneous speed c(t; mu) at time(s) t."""
    a = sf.coeff(t)
    out = (moment_L(sf.kernel, t, sf.mu) - total_mass(sf.kernel, t) + a) / sf.mu
    return out if np.ndim(out) else float(out)


def position_C(sf: SpeedFunction, t):
    """C(t) = int_0^t c(s) ds, exact for the path's interpolant of c."""
    return sf.path.integral(0.0, t)


def shifted(sf: SpeedFunction, s: float) -> SpeedFunction:
    """The speed function along theta_s of the same realization."""
    return SpeedFunction(sf.kernel, drivers.shift(sf.coeff, s), sf.mu)


def mean_speed_of_path(kernel: KernelSpec, path: CoefficientPath, mu: float, r_min=None):
    est = drivers.mean_estimate(SpeedFunction(kernel, path, mu).path, r_min)
    return est.least, est.upper


def mean_speed(kernel: KernelSpec, driver, mu: float, horizon: float, dt: float = 0.05, r_min=None):
    """(least mean, upper mean) of t -> c(t; mu) over one sampled realization."""
    path = drivers.sample_path(driver, 0.0, horizon, dt)
    return mean_speed_of_path(kernel, path, mu, r_min)


@dataclass(frozen=True)
class CriticalSpeed:
    mu_star: float
    c_star: float
    censored: bool
    bracket: tuple
    mus: np.ndarray
    curve: np.ndarray


def least_mean_curve(kernel: KernelSpec, path: CoefficientPath, mus):
    return np.array([mean_speed_of_path(kernel, path, float(m))[0] for m in mus])


def critical_mu(
    kernel: KernelSpec,
    driver,
    horizon: float = 200.0,
    tol: float = 1e-7,
    dt: float = 0.05,
    mu_cap: float = MU_CAP,
    path: CoefficientPath | None = None,
    n_diagnostic: int = 41,
) -> CriticalSpeed:
    """Minimizer mu* of mu -> least mean of c(.; mu), by golden-section search.

    The bracket is [1e-3, min(0.95 sigma, mu_cap)].  Unimodality is checked
    afterwards on an ``n_diagnostic``-point grid; a minimizer at the upper end
    of the bracket is reported as censored.
    """
    if path is None:
        step = horizon if drivers.is_autonomous(driver) else dt
        path = drivers.sample_path(driver, 0.0, horizon, step)
    lo = MU_FLOOR
    hi = min(SIGMA_FRACTION * abscissa(kernel), mu_cap)

    def f(m):
        return mean_speed_of_path(kernel, path, m)[0]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    mu_star = 0.5 * (a + b)
    c_star = f(mu_star)

    mus = np.linspace(lo, hi, n_diagnostic)
    curve = least_mean_curve(kernel, path, mus)
    slack = 1e-9 * np.maximum(1.0, np.abs(curve))
    k = int(np.argmin(curve))
    before = np.diff(curve[: k + 1])
    after = np.diff(curve[k:])
    if np.any(before > slack[1 : k + 1]) or np.any(after < -slack[k + 1 :]):
        raise NonUnimodalError("least-mean speed curve is not unimodal on the bracket", mus, curve)
    censored = bool(hi - mu_star <= 10 * tol)
    return CriticalSpeed(mu_star, c_star, censored, (lo, hi), mus, curve)
