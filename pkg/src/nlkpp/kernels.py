"""Dispersal kernels J(t, y) = mass * m(t) * j(y) and their exponential moments."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DivergenceError

SHAPES = ("gaussian", "laplace", "tent")

# distinguished value for kernels whose exponential moments exist for every mu
INFINITE_ABSCISSA = math.inf

# kernels are truncated where the density drops below this fraction of its peak
TRUNCATION_RATIO = 1e-14


@dataclass(frozen=True)
class KernelSpec:
    """A symmetric dispersal kernel family.

    ``param`` is the length scale ``s`` for a Gaussian, the inverse length
    ``beta`` for a Laplace kernel and the support radius ``R`` for a tent.
    ``modulation`` is an optional driver spec (see :mod:`nlkpp.drivers`) whose
    value m(t) multiplies the mass; its lower bound must be positive.
    """

    shape: str
    param: float
    mass: float = 1.0
    modulation: object = None

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigurationError(f"unknown kernel shape {self.shape!r}; expected one of {SHAPES}")
        if not (math.isfinite(self.param) and self.param > 0):
            raise ConfigurationError(f"kernel parameter must be positive, got {self.param!r}")
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise ConfigurationError(f"kernel mass must be positive, got {self.mass!r}")
        if self.modulation is not None:
            lo, hi = self.modulation.bounds()
            if not (lo > 0 and math.isfinite(hi)):
                raise ConfigurationError("kernel modulation must stay in (0, inf)")

    @classmethod
    def gaussian(cls, s=1.0, mass=1.0, modulation=None):
        return cls("gaussian", float(s), float(mass), modulation)

    @classmethod
    def laplace(cls, beta=1.0, mass=1.0, modulation=None):
        return cls("laplace", float(beta), float(mass), modulation)

    @classmethod
    def tent(cls, R=1.0, mass=1.0, modulation=None):
        return cls("tent", float(R), float(mass), modulation)

    @property
    def length_scale(self) -> float:
        return 1.0 / self.param if self.shape == "laplace" else self.param

    @property
    def truncation_radius(self) -> float:
        log_ratio = -math.log(TRUNCATION_RATIO)
        if self.shape == "gaussian":
            return self.param * math.sqrt(2.0 * log_ratio)
        if self.shape == "laplace":
            return log_ratio / self.param
        return self.param

    def modulation_value(self, t):
        if self.modulation is None:
            return np.ones(np.shape(t)) if np.ndim(t) else 1.0
        return self.modulation.value(t)

    def mass_bounds(self):
        if self.modulation is None:
            return (self.mass, self.mass)
        lo, hi = self.modulation.bounds()
        return (self.mass * lo, self.mass * hi)


def _unit_density(shape, p, y):
    y = np.asarray(y, dtype=float)
    if shape == "gaussian":
        return np.exp(-0.5 * (y / p) ** 2) / (p * math.sqrt(2.0 * math.pi))
    if shape == "laplace":
        return 0.5 * p * np.exp(-p * np.abs(y))
    return np.maximum(0.0, 1.0 - np.abs(y) / p) / p


def _unit_moment(shape, p, mu):
    if shape == "gaussian":
        return math.exp(0.5 * (mu * p) ** 2)
    if shape == "laplace":
        return p * p / (p * p - mu * mu)
    z = mu * p
    if abs(z) < 1e-4:
        return 1.0 + z * z / 12.0 + z**4 / 360.0
    return 2.0 * (math.cosh(z) - 1.0) / (z * z)


def kernel_eval(spec: KernelSpec, t, y):
    """J(t, y) >= 0."""
    return spec.mass * spec.modulation_value(t) * _unit_density(spec.shape, spec.param, y)


def total_mass(spec: KernelSpec, t):
    """int J(t, y) dy = mass * m(t)."""
    return spec.mass * spec.modulation_value(t)


def abscissa(spec: KernelSpec) -> float:
    """Abscissa of convergence of y -> int J e^{mu y} dy."""
    if spec.shape == "laplace":
        return spec.param
    return INFINITE_ABSCISSA


def moment_L(spec: KernelSpec, t, mu: float):
    """L(t, mu) = int J(t, y) e^{mu y} dy.

    The built-in kernels are even, so L(t, -mu) = L(t, mu); only |mu| is
    checked against the abscissa.
    """
    sigma = abscissa(spec)
    if abs(mu) >= sigma:
        raise DivergenceError(mu, sigma)
    return total_mass(spec, t) * _unit_moment(spec.shape, spec.param, float(mu))


def unit_moment(spec: KernelSpec, mu: float) -> float:
    """L(t, mu) / (mass * m(t)); time-independent by construction."""
    sigma = abscissa(spec)
    if abs(mu) >= sigma:
        raise DivergenceError(mu, sigma)
    return _unit_moment(spec.shape, spec.param, float(mu))


def moment_quadrature(spec: KernelSpec, t, mu: float, h: float, radius: float) -> float:
    """Trapezoid approximation of L(t, mu) on the lattice h*Z cut at |y| <= radius."""
    n = int(math.floor(radius / h))
    y = h * np.arange(-n, n + 1)
    vals = kernel_eval(spec, t, y) * np.exp(mu * y)
    return float(h * (vals.sum() - 0.5 * (vals[0] + vals[-1])))


@dataclass(frozen=True, eq=False)
class DiscreteKernel:
    """Lattice weights w_j ~ h J(jh) for unit modulation, j = -K..K."""

    spec: KernelSpec
    h: float
    weights: np.ndarray
    raw_mass: float

    @property
    def half_width(self) -> int:
        return (self.weights.size - 1) // 2

    @property
    def radius(self) -> float:
        return self.half_width * self.h

    @property
    def offsets(self) -> np.ndarray:
        return self.h * np.arange(-self.half_width, self.half_width + 1)

    def moment(self, mu: float) -> float:
        """Discrete analogue of L(0, mu)."""
        return float(np.dot(self.weights, np.exp(mu * self.offsets)))


def discretize(spec: KernelSpec, h: float) -> DiscreteKernel:
    """Trapezoid weights on spacing h, truncated at the density cut-off.

    The weights are rescaled so they sum exactly to ``spec.mass``; the
    nonlocal operator then annihilates constants up to rounding.
    """
    if not h > 0:
        raise ConfigurationError("grid spacing must be positive")
    if h > spec.length_scale / 4.0:
        warnings.warn(
            f"kernel under-resolved: h={h:.4g} > length scale/4={spec.length_scale / 4:.4g}",
            RuntimeWarning,
            stacklevel=2,
        )
    K = int(math.floor(spec.truncation_radius / h))
    y = h * np.arange(-K, K + 1)
    w = h * spec.mass * _unit_density(spec.shape, spec.param, y)
    raw = float(w.sum())
    w = w * (spec.mass / raw)
    w.setflags(write=False)
    return DiscreteKernel(spec, h, w, raw)


def kernel_table(spec: KernelSpec, h: float, t: float = 0.0):
    """(y, J(t, y)) on the truncated lattice, for inspection dumps."""
    K = int(math.floor(spec.truncation_radius / h))
    y = h * np.arange(-K, K + 1)
    return y, kernel_eval(spec, t, y)
