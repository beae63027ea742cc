"""Random and deterministic coefficient processes t -> a(theta_t omega).

A driver spec is a small immutable description of a bounded positive process
(constant, periodic, quasiperiodic or a two-state telegraph chain).  Sampling a
spec over a window yields a :class:`CoefficientPath`, an interpolated record
whose integrals are evaluated exactly for its interpolation rule.  The time
shift theta_s acts on paths by relabelling time, ``shift(p, s)(t) = p(t + s)``.

Least and upper means are finite-horizon estimates of the liminf / limsup of
window averages; see :func:`mean_estimate` for the estimator.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import ClassVar, Union

import numpy as np

from .errors import ConfigurationError, DomainError, EstimationError, TruncationError

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0

# counter-based generator, keyed by (seed, stream); bumping the version changes paths
RNG_NAME = "philox4x64-keyed-v1"

_STREAM_INITIAL = 0
_STREAM_FORWARD = 1
_STREAM_BACKWARD = 2
_CHUNK = 4096


def make_rng(seed: int, stream: int) -> np.random.Generator:
    """Portable generator for one (seed, stream) pair."""
    return np.random.Generator(np.random.Philox(key=[int(seed) % 2**64, int(stream)]))


def _check_positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise ConfigurationError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class Constant:
    a0: float
    seed: int = 0

    kind: ClassVar[str] = "constant"
    interpolation: ClassVar[str] = "linear"

    def __post_init__(self):
        _check_positive("a0", self.a0)

    def bounds(self):
        return (float(self.a0), float(self.a0))

    def value(self, t):
        return np.full(np.shape(t), float(self.a0))


@dataclass(frozen=True)
class Periodic:
    """``a0 + amplitude * sin(2 pi t / period)``."""

    a0: float
    amplitude: float
    period: float
    seed: int = 0

    kind: ClassVar[str] = "periodic"
    interpolation: ClassVar[str] = "linear"

    def __post_init__(self):
        _check_positive("a0", self.a0)
        _check_positive("period", self.period)
        if abs(self.amplitude) >= self.a0:
            raise ConfigurationError(
                f"periodic driver needs |amplitude| < a0 (got {self.amplitude!r} >= {self.a0!r})"
            )

    def bounds(self):
        amp = abs(self.amplitude)
        return (self.a0 - amp, self.a0 + amp)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return self.a0 + self.amplitude * np.sin(2.0 * np.pi * t / self.period)


@dataclass(frozen=True)
class Quasiperiodic:
    """``a0 + amp1 sin(freq1 t) + amp2 sin(freq2 t)``; freq2 defaults to golden * freq1."""

    a0: float
    amp1: float
    freq1: float
    amp2: float
    freq2: float | None = None
    seed: int = 0

    kind: ClassVar[str] = "quasiperiodic"
    interpolation: ClassVar[str] = "linear"

    def __post_init__(self):
        _check_positive("a0", self.a0)
        _check_positive("freq1", self.freq1)
        if self.freq2 is None:
            object.__setattr__(self, "freq2", GOLDEN_RATIO * self.freq1)
        _check_positive("freq2", self.freq2)
        if abs(self.amp1) + abs(self.amp2) >= self.a0:
            raise ConfigurationError("quasiperiodic driver needs |amp1| + |amp2| < a0")

    def bounds(self):
        amp = abs(self.amp1) + abs(self.amp2)
        return (self.a0 - amp, self.a0 + amp)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return self.a0 + self.amp1 * np.sin(self.freq1 * t) + self.amp2 * np.sin(self.freq2 * t)


@dataclass(frozen=True)
class Telegraph:
    """Stationary two-state Markov chain switching between ``a_lo`` and ``a_hi``.

    ``rate_up`` is the lo -> hi rate, ``rate_down`` the hi -> lo rate.  The
    state at t = 0 is drawn from the stationary law; holding times forward and
    backward from 0 are exponential (the chain is reversible), each direction
    drawn from its own counter-based stream so that ``value`` is a fixed
    function of time for a given seed, whatever window is requested.
    """

    a_lo: float
    a_hi: float
    rate_up: float
    rate_down: float
    seed: int = 0

    kind: ClassVar[str] = "telegraph"
    interpolation: ClassVar[str] = "constant"

    def __post_init__(self):
        _check_positive("a_lo", self.a_lo)
        _check_positive("a_hi", self.a_hi)
        _check_positive("rate_up", self.rate_up)
        _check_positive("rate_down", self.rate_down)
        if self.a_hi < self.a_lo:
            raise ConfigurationError("telegraph driver needs a_lo <= a_hi")

    def bounds(self):
        return (float(self.a_lo), float(self.a_hi))

    @property
    def stationary_mean(self):
        p_hi = self.rate_up / (self.rate_up + self.rate_down)
        return (1.0 - p_hi) * self.a_lo + p_hi * self.a_hi

    def initial_state(self) -> int:
        p_hi = self.rate_up / (self.rate_up + self.rate_down)
        return int(make_rng(self.seed, _STREAM_INITIAL).random() < p_hi)

    def switch_times(self, reach: float, direction: int) -> np.ndarray:
        """Cumulative switch distances from 0 covering at least ``reach``."""
        return _TELEGRAPH_CACHE.switches(self, reach, direction)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        s0 = self.initial_state()
        out = np.empty(t.shape)
        pos = t >= 0
        levels = np.array([self.a_lo, self.a_hi])
        if np.any(pos):
            fwd = self.switch_times(float(np.max(t[pos])), +1)
            n = np.searchsorted(fwd, t[pos], side="right")
            out[pos] = levels[(s0 + n) % 2]
        if np.any(~pos):
            bwd = self.switch_times(float(np.max(-t[~pos])), -1)
            n = np.searchsorted(bwd, -t[~pos], side="left")
            out[~pos] = levels[(s0 + n) % 2]
        return out


class _SwitchCache:
    """Lazily extended switch-time sequences, shared across calls."""

    def __init__(self):
        self._lock = threading.Lock()
        self._store = {}

    def switches(self, spec: Telegraph, reach: float, direction: int) -> np.ndarray:
        key = (spec, direction)
        with self._lock:
            arr, gen, state = self._store.get(key, (None, None, None))
            if arr is None:
                stream = _STREAM_FORWARD if direction > 0 else _STREAM_BACKWARD
                gen = make_rng(spec.seed, stream)
                state = spec.initial_state()
                arr = np.empty(0)
            while arr.size == 0 or arr[-1] <= reach:
                u = gen.random(_CHUNK)
                # alternate states: holding rate depends on the current state
                states = (state + np.arange(_CHUNK)) % 2
                rates = np.where(states == 0, spec.rate_up, spec.rate_down)
                holds = -np.log1p(-u) / rates
                start = arr[-1] if arr.size else 0.0
                arr = np.concatenate([arr, start + np.cumsum(holds)])
                state = (state + _CHUNK) % 2
            self._store[key] = (arr, gen, state)
            return arr


_TELEGRAPH_CACHE = _SwitchCache()

DriverSpec = Union[Constant, Periodic, Quasiperiodic, Telegraph]


@dataclass(frozen=True, eq=False)
class CoefficientPath:
    """Sampled realization of a scalar function of time.

    ``base_times``/``values`` are the raw samples; the represented time is
    ``t = base_time - offset`` so that shifts compose exactly.  Interpolation is
    ``"linear"`` (piecewise linear) or ``"constant"`` (value of the left sample,
    right-continuous).  ``bounds`` are the declared (a_min, a_max).
    """

    base_times: np.ndarray
    values: np.ndarray
    interpolation: str = "linear"
    dt: float = math.inf
    bounds: tuple = (-math.inf, math.inf)
    spec: object = None
    offset: float = 0.0
    _primitive: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        times = np.asarray(self.base_times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ConfigurationError("path needs matching 1-D times/values with >= 2 samples")
        if np.any(np.diff(times) <= 0):
            raise ConfigurationError("sample times must be strictly increasing")
        if self.interpolation not in ("linear", "constant"):
            raise ConfigurationError(f"unknown interpolation {self.interpolation!r}")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "base_times", times)
        object.__setattr__(self, "values", values)
        widths = np.diff(times)
        if self.interpolation == "linear":
            pieces = 0.5 * widths * (values[:-1] + values[1:])
        else:
            pieces = widths * values[:-1]
        prim = np.concatenate([[0.0], np.cumsum(pieces)])
        prim.setflags(write=False)
        object.__setattr__(self, "_primitive", prim)

    @classmethod
    def from_function(cls, fn, t0, t1, dt, interpolation="linear", bounds=None):
        n = max(1, int(math.ceil((t1 - t0) / dt - 1e-9)))
        times = np.linspace(t0, t1, n + 1)
        values = np.asarray(fn(times), dtype=float)
        if bounds is None:
            bounds = (float(values.min()), float(values.max()))
        return cls(times, values, interpolation, dt, bounds)

    @property
    def sample_times(self) -> np.ndarray:
        return self.base_times - self.offset

    @property
    def t_start(self) -> float:
        return float(self.base_times[0] - self.offset)

    @property
    def t_end(self) -> float:
        return float(self.base_times[-1] - self.offset)

    @property
    def horizon(self) -> float:
        return float(self.base_times[-1] - self.base_times[0])

    def covers(self, t0, t1, slack=1e-9) -> bool:
        return t0 >= self.t_start - slack and t1 <= self.t_end + slack

    def _locate(self, tau):
        idx = np.searchsorted(self.base_times, tau, side="right") - 1
        return np.clip(idx, 0, self.base_times.size - 2)

    def _check_support(self, tau):
        lo, hi = self.base_times[0], self.base_times[-1]
        slack = 1e-9 * max(1.0, abs(lo), abs(hi))
        if np.any(tau < lo - slack) or np.any(tau > hi + slack):
            raise DomainError(
                f"time outside path support [{self.t_start:.6g}, {self.t_end:.6g}]"
            )

    def __call__(self, t):
        tau = np.asarray(t, dtype=float) + self.offset
        self._check_support(tau)
        i = self._locate(tau)
        if self.interpolation == "constant":
            out = self.values[i]
            # right endpoint belongs to the last sample
            out = np.where(tau >= self.base_times[-1], self.values[-1], out)
            return out if np.ndim(t) else float(out)
        t0 = self.base_times[i]
        w = (tau - t0) / (self.base_times[i + 1] - t0)
        out = self.values[i] + w * (self.values[i + 1] - self.values[i])
        return out if np.ndim(t) else float(out)

    def primitive(self, t):
        """Exact integral of the interpolant from the first sample to ``t``."""
        tau = np.asarray(t, dtype=float) + self.offset
        self._check_support(tau)
        i = self._locate(tau)
        t0 = self.base_times[i]
        s = tau - t0
        v0 = self.values[i]
        if self.interpolation == "constant":
            out = self._primitive[i] + v0 * s
        else:
            slope = (self.values[i + 1] - v0) / (self.base_times[i + 1] - t0)
            out = self._primitive[i] + v0 * s + 0.5 * slope * s * s
        return out if np.ndim(t) else float(out)

    def integral(self, t0, t1):
        """``int_{t0}^{t1}`` of the interpolant (vectorized)."""
        return self.primitive(t1) - self.primitive(t0)

    def map_values(self, fn, bounds=None) -> "CoefficientPath":
        """Path of ``fn(values)`` on the same samples (no spec: not regenerable)."""
        values = np.asarray(fn(self.values), dtype=float)
        if bounds is None:
            bounds = (float(values.min()), float(values.max()))
        return CoefficientPath(
            self.base_times, values, self.interpolation, self.dt, bounds, None, self.offset
        )

    def restrict(self, t0, t1) -> "CoefficientPath":
        """Sub-path on [t0, t1] (endpoints inserted exactly)."""
        if not self.covers(t0, t1):
            raise DomainError("restriction window outside path support")
        inner = self.sample_times
        keep = (inner > t0) & (inner < t1)
        times = np.concatenate([[t0], inner[keep], [t1]])
        values = np.asarray(self(times), dtype=float)
        return CoefficientPath(
            times + self.offset, values, self.interpolation, self.dt, self.bounds,
            self.spec, self.offset,
        )


def sample_path(spec: DriverSpec, t0: float, t1: float, dt: float) -> CoefficientPath:
    """Sample one realization of ``spec`` on [t0, t1] with spacing at most ``dt``.

    Telegraph paths additionally carry their exact switch times, so the
    piecewise-constant interpolant is the realization itself.
    """
    if not t0 < t1:
        raise ConfigurationError(f"need t0 < t1, got [{t0!r}, {t1!r}]")
    _check_positive("dt", dt)
    n = max(1, int(math.ceil((t1 - t0) / dt - 1e-9)))
    times = np.linspace(t0, t1, n + 1)
    if isinstance(spec, Telegraph):
        jumps = []
        if t1 > 0:
            fwd = spec.switch_times(t1, +1)
            jumps.append(fwd[(fwd > t0) & (fwd < t1)])
        if t0 < 0:
            bwd = -spec.switch_times(-t0, -1)
            jumps.append(bwd[(bwd > t0) & (bwd < t1)])
        if jumps:
            times = np.unique(np.concatenate([times, *jumps]))
    values = spec.value(times)
    lo, hi = spec.bounds()
    return CoefficientPath(times, values, spec.interpolation, dt, (lo, hi), spec, 0.0)


def shift(path: CoefficientPath, s: float, window=None) -> CoefficientPath:
    """theta_s acting on a path: ``shift(path, s)(t) == path(t + s)``.

    Without ``window`` the whole support is relabelled (exact, composes
    additively).  With ``window=(t0, t1)`` the shifted path is returned on that
    window, regenerated from the path's spec when the original samples do not
    reach [t0 + s, t1 + s].
    """
    moved = CoefficientPath(
        path.base_times, path.values, path.interpolation, path.dt, path.bounds,
        path.spec, path.offset + s,
    )
    if window is None:
        return moved
    t0, t1 = window
    if moved.covers(t0, t1):
        return moved.restrict(t0, t1)
    if path.spec is None:
        raise DomainError(
            f"shift by {s!r} needs [{t0 + s:.6g}, {t1 + s:.6g}] but path covers "
            f"[{path.t_start:.6g}, {path.t_end:.6g}] and has no spec to regenerate"
        )
    fresh = sample_path(path.spec, t0 + s + path.offset, t1 + s + path.offset, path.dt)
    return CoefficientPath(
        fresh.base_times, fresh.values, fresh.interpolation, fresh.dt, fresh.bounds,
        fresh.spec, path.offset + s,
    )


@dataclass(frozen=True)
class MeanEstimate:
    least: float
    upper: float
    least_spread: float
    upper_spread: float
    window: float
    ladder: tuple


MAX_WINDOW_STARTS = 20000


def _window_extremes(path: CoefficientPath, r: float, n_lengths: int):
    """inf / sup of window averages over lengths in [r, 2r) (sampled)."""
    starts = path.sample_times
    if starts.size > MAX_WINDOW_STARTS:
        stride = int(math.ceil(starts.size / MAX_WINDOW_STARTS))
        starts = starts[::stride]
    t_end = path.t_end
    lo, hi = math.inf, -math.inf
    prim_starts = path.primitive(starts)
    for k in range(n_lengths):
        length = r * (1.0 + k / n_lengths)
        ok = starts + length <= t_end + 1e-12 * max(1.0, abs(t_end))
        if not np.any(ok):
            continue
        ends = np.minimum(starts[ok] + length, t_end)
        avg = (path.primitive(ends) - prim_starts[ok]) / length
        lo = min(lo, float(avg.min()))
        hi = max(hi, float(avg.max()))
    return lo, hi


def mean_estimate(path: CoefficientPath, r_min: float | None = None, n_lengths: int = 8) -> MeanEstimate:
    """Least / upper mean of a path from window averages.

    For each r on the ladder {H/16, H/8, H/4, H/2} (H = horizon) the inf and
    sup of (1/(t-s)) int_s^t a over windows with t - s in [r, 2r) are formed;
    longer windows are convex combinations of these, so nothing is lost.  The
    reported values are those at r = H/2; the spread across the ladder is the
    uncertainty.
    """
    horizon = path.horizon
    r_top = horizon / 2.0
    if r_min is not None and r_top < r_min:
        raise EstimationError(
            f"horizon {horizon:.6g} only reaches averaging window {r_top:.6g} < r_min={r_min:.6g}",
            attained=r_top,
        )
    ladder = tuple(horizon / q for q in (16, 8, 4, 2))
    lows, highs = [], []
    for r in ladder:
        lo, hi = _window_extremes(path, r, n_lengths)
        lows.append(lo)
        highs.append(hi)
    return MeanEstimate(
        least=lows[-1],
        upper=highs[-1],
        least_spread=max(lows) - min(lows),
        upper_spread=max(highs) - min(highs),
        window=r_top,
        ladder=ladder,
    )


def least_mean(path: CoefficientPath, r_min: float | None = None) -> float:
    return mean_estimate(path, r_min).least


def upper_mean(path: CoefficientPath, r_min: float | None = None) -> float:
    return mean_estimate(path, r_min).upper


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    """Block averages alpha_k and the bounded corrector A with a - A' = alpha_k.

    Blocks are [t0 + kT, t0 + (k+1)T].  ``A`` vanishes at every block
    boundary and is continuous, piecewise C^1.
    """

    path: CoefficientPath
    T: float
    t0: float
    alphas: np.ndarray

    @property
    def n_blocks(self) -> int:
        return int(self.alphas.size)

    @property
    def t1(self) -> float:
        return self.t0 + self.n_blocks * self.T

    def block_index(self, t):
        k = np.floor((np.asarray(t, dtype=float) - self.t0) / self.T).astype(int)
        return np.clip(k, 0, self.n_blocks - 1)

    def alpha_at(self, t):
        return self.alphas[self.block_index(t)]

    def A(self, t):
        t = np.asarray(t, dtype=float)
        k = self.block_index(t)
        left = self.t0 + k * self.T
        out = self.path.integral(left, t) - self.alphas[k] * (t - left)
        return out if out.ndim else float(out)

    def dA(self, t):
        """A'(t) = a(t) - alpha_k on block interiors."""
        out = self.path(t) - self.alpha_at(t)
        return out if np.ndim(out) else float(out)

    def sup_norm(self) -> float:
        """max |A| over samples, block boundaries and interior stationary points."""
        times = self.path.sample_times
        times = times[(times >= self.t0) & (times <= self.t1)]
        pts = [times, self.t0 + self.T * np.arange(self.n_blocks + 1)]
        if self.path.interpolation == "linear" and times.size > 1:
            # A' = a - alpha_k is linear on each segment: add its roots
            v = np.asarray(self.path(times))
            mid = 0.5 * (times[:-1] + times[1:])
            alpha = self.alpha_at(mid)
            g0 = v[:-1] - alpha
            g1 = v[1:] - alpha
            cross = (g0 * g1 < 0)
            frac = g0[cross] / (g0[cross] - g1[cross])
            pts.append(times[:-1][cross] + frac * np.diff(times)[cross])
        allpts = np.clip(np.concatenate(pts), self.t0, self.t1)
        return float(np.max(np.abs(self.A(allpts))))


def block_decomposition(path: CoefficientPath, T: float) -> BlockDecomposition:
    """Split ``path`` into blocks of length T and build (alpha_k, A)."""
    _check_positive("T", T)
    nb = path.horizon / T
    k = int(round(nb))
    if k < 1 or abs(nb - k) > 1e-9 * max(1.0, nb):
        raise TruncationError(
            f"path horizon {path.horizon:.9g} is not an integer multiple of T={T:.9g}"
        )
    t0 = path.t_start
    edges = t0 + T * np.arange(k + 1)
    edges[-1] = path.t_end
    alphas = np.diff(path.primitive(edges)) / np.diff(edges)
    alphas.setflags(write=False)
    return BlockDecomposition(path, float(T), t0, alphas)


def default_block_length(spec) -> float:
    """Block size used when building correctors for a given driver."""
    if isinstance(spec, Periodic):
        return float(spec.period)
    if isinstance(spec, Quasiperiodic):
        return float(2.0 * np.pi / spec.freq1)
    if isinstance(spec, Telegraph):
        return 10.0 / max(spec.rate_up, spec.rate_down)
    return 1.0


def is_autonomous(spec) -> bool:
    return isinstance(spec, Constant)
