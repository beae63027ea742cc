"""Run configuration: INI sections, validation and a normalized dump.

Example::

    [kernel]
    shape = gaussian
    s = 1.0

    [driver]
    kind = constant
    a0 = 1.0

    [wave]
    mu = 0.5
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import drivers, kernels, solver
from .errors import ConfigurationError

KERNEL_PARAM = {"gaussian": "s", "laplace": "beta", "tent": "R"}
DRIVER_KEYS = {
    "constant": ("a0",),
    "periodic": ("a0", "amplitude", "period"),
    "quasiperiodic": ("a0", "amp1", "freq1", "amp2", "freq2"),
    "telegraph": ("a_lo", "a_hi", "rate_up", "rate_down"),
}
SUBCOMMANDS = ("means", "speed", "simulate", "build-wave", "stability", "verify")


@dataclass(frozen=True)
class KernelConfig:
    shape: str = "gaussian"
    param: float = 1.0
    mass: float = 1.0
    modulation: str = "none"
    modulation_amplitude: float = 0.0
    modulation_period: float = 2 * math.pi

    def spec(self) -> kernels.KernelSpec:
        mod = None
        if self.modulation == "periodic":
            mod = drivers.Periodic(1.0, self.modulation_amplitude, self.modulation_period)
        return kernels.KernelSpec(self.shape, self.param, self.mass, mod)


@dataclass(frozen=True)
class DriverConfig:
    kind: str = "constant"
    params: tuple = (("a0", 1.0),)

    def get(self, key, default=None):
        return dict(self.params).get(key, default)

    def spec(self, seed: int = 0):
        p = dict(self.params)
        if self.kind == "constant":
            return drivers.Constant(p.get("a0", 1.0), seed)
        if self.kind == "periodic":
            return drivers.Periodic(p.get("a0", 1.0), p.get("amplitude", 0.5), p.get("period", 2 * math.pi), seed)
        if self.kind == "quasiperiodic":
            return drivers.Quasiperiodic(
                p.get("a0", 1.0), p.get("amp1", 0.25), p.get("freq1", 1.0),
                p.get("amp2", 0.25), p.get("freq2"), seed,
            )
        return drivers.Telegraph(
            p.get("a_lo", 0.5), p.get("a_hi", 1.5), p.get("rate_up", 1.0), p.get("rate_down", 1.0), seed
        )


@dataclass(frozen=True)
class GridConfig:
    L: float | None = None
    N: int | None = None


@dataclass(frozen=True)
class TimeConfig:
    dt: float | None = None
    horizon: float = 40.0
    snapshot_every: float = 1.0
    path_dt: float = 0.05


@dataclass(frozen=True)
class WaveConfig:
    mu: float | None = None
    mu_sweep: tuple = ()
    n_schedule: tuple = (5, 10, 20, 40)
    tol: float = 1e-4
    construction: str = "pullback"
    profile_horizon: float = 0.0
    level: float = 0.5


@dataclass(frozen=True)
class StabilityConfig:
    kind: str = "bump"
    amplitude: float = 0.3
    width: float = 5.0
    center: float = 0.0
    alpha0: float = 1.0
    horizon: float = 60.0
    target: float = 0.01


@dataclass(frozen=True)
class RunSection:
    seeds: tuple = (0,)
    pairs: int = 50


@dataclass(frozen=True)
class OutputConfig:
    dir: str | None = None
    figures: bool = True


@dataclass(frozen=True)
class RunConfig:
    kernel: KernelConfig = field(default_factory=KernelConfig)
    driver: DriverConfig = field(default_factory=DriverConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    wave: WaveConfig = field(default_factory=WaveConfig)
    stability: StabilityConfig = field(default_factory=StabilityConfig)
    run: RunSection = field(default_factory=RunSection)
    output: OutputConfig = field(default_factory=OutputConfig)

    def kernel_spec(self) -> kernels.KernelSpec:
        return self.kernel.spec()

    def driver_spec(self, seed: int | None = None):
        return self.driver.spec(self.run.seeds[0] if seed is None else seed)

    def with_seeds(self, seeds) -> "RunConfig":
        return replace(self, run=replace(self.run, seeds=tuple(int(s) for s in seeds)))

    def grid_for(self, mu: float) -> solver.Grid:
        from .waves import default_grid

        if self.grid.L is None and self.grid.N is None:
            return default_grid(self.kernel_spec(), mu)
        L = self.grid.L if self.grid.L is not None else 40.0 * max(1.0 / mu, self.kernel_spec().length_scale)
        N = self.grid.N if self.grid.N is not None else int(math.ceil(2 * L / 0.05)) + 1
        return solver.Grid(L, N)


# -- parsing ------------------------------------------------------------------

_SIMPLE = {
    "grid": (GridConfig, {"L": float, "N": int}),
    "time": (TimeConfig, {"dt": float, "horizon": float, "snapshot_every": float, "path_dt": float}),
    "wave": (WaveConfig, {
        "mu": float, "mu_sweep": "floats", "n_schedule": "ints", "tol": float,
        "construction": str, "profile_horizon": float, "level": float,
    }),
    "stability": (StabilityConfig, {
        "kind": str, "amplitude": float, "width": float, "center": float, "alpha0": float,
        "horizon": float, "target": float,
    }),
    "run": (RunSection, {"seeds": "ints", "pairs": int}),
    "output": (OutputConfig, {"dir": str, "figures": "bool"}),
}


def _convert(kind, raw):
    raw = raw.strip()
    if kind == "floats":
        return tuple(float(v) for v in raw.replace(",", " ").split())
    if kind == "ints":
        return tuple(int(v) for v in raw.replace(",", " ").split())
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw


def _parser():
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.optionxform = str
    return cp


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate; every violation is collected before raising."""
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"parse error: {exc}") from exc
    errors: list[str] = []
    sections = {}

    known = {"kernel", "driver", *_SIMPLE}
    for name in cp.sections():
        if name not in known:
            errors.append(f"[{name}]: unknown section")

    # kernel
    kernel = KernelConfig()
    if cp.has_section("kernel"):
        sec = dict(cp["kernel"])
        shape = sec.pop("shape", "gaussian").strip()
        if shape not in KERNEL_PARAM:
            errors.append(f"[kernel] shape: unknown shape {shape!r}")
            shape = "gaussian"
        pkey = KERNEL_PARAM[shape]
        vals = {"shape": shape}
        spec_keys = {pkey: "param", "mass": "mass", "modulation": "modulation",
                     "modulation_amplitude": "modulation_amplitude", "modulation_period": "modulation_period"}
        for key, raw in sec.items():
            if key not in spec_keys:
                errors.append(f"[kernel] {key}: not applicable to shape {shape!r}")
                continue
            try:
                vals[spec_keys[key]] = raw.strip() if key == "modulation" else float(raw)
            except ValueError:
                errors.append(f"[kernel] {key}: not a number: {raw!r}")
        kernel = KernelConfig(**vals)
        if kernel.modulation not in ("none", "periodic"):
            errors.append(f"[kernel] modulation: expected none or periodic, got {kernel.modulation!r}")
            kernel = replace(kernel, modulation="none")

    # driver
    driver = DriverConfig()
    if cp.has_section("driver"):
        sec = dict(cp["driver"])
        kind = sec.pop("kind", "constant").strip()
        if kind not in DRIVER_KEYS:
            errors.append(f"[driver] kind: unknown driver {kind!r}")
            kind = "constant"
        params = []
        for key, raw in sec.items():
            if key not in DRIVER_KEYS[kind]:
                errors.append(f"[driver] {key}: not applicable to driver {kind!r}")
                continue
            try:
                params.append((key, float(raw)))
            except ValueError:
                errors.append(f"[driver] {key}: not a number: {raw!r}")
        driver = DriverConfig(kind, tuple(sorted(params)))

    for name, (cls, schema) in _SIMPLE.items():
        vals = {}
        if cp.has_section(name):
            for key, raw in cp[name].items():
                if key not in schema:
                    errors.append(f"[{name}] {key}: unknown key")
                    continue
                try:
                    vals[key] = _convert(schema[key], raw)
                except ValueError:
                    errors.append(f"[{name}] {key}: cannot parse {raw!r}")
        sections[name] = cls(**vals)

    cfg = RunConfig(kernel, driver, **sections)
    errors.extend(validate(cfg))
    if errors:
        raise ConfigurationError(f"{len(errors)} configuration violation(s):\n  " + "\n  ".join(errors),)
    return cfg


def validate(cfg: RunConfig) -> list[str]:
    """All rule violations of an assembled config, each tagged with its owning module."""
    errs = []
    K = None
    try:
        K = cfg.kernel_spec()
    except ConfigurationError as exc:
        errs.append(f"kernels: {exc}")
    a_spec = None
    try:
        a_spec = cfg.driver_spec()
    except ConfigurationError as exc:
        errs.append(f"ergodic_driver: {exc}")
    if not cfg.run.seeds:
        errs.append("run: seeds must not be empty")
    if cfg.run.pairs < 1:
        errs.append("run: pairs must be positive")
    t = cfg.time
    for key in ("horizon", "snapshot_every", "path_dt"):
        if not getattr(t, key) > 0:
            errs.append(f"time: {key} must be positive")
    if t.dt is not None and not t.dt > 0:
        errs.append("time: dt must be positive")
    w = cfg.wave
    mus = ([w.mu] if w.mu is not None else []) + list(w.mu_sweep)
    if K is not None:
        sigma = kernels.abscissa(K)
        for mu in mus:
            if not 0 < mu < sigma:
                errs.append(
                    f"kernels: mu={mu:g} must lie in (0, abscissa={sigma:g}) "
                    "(exponential moments must be finite)"
                )
    sched = list(w.n_schedule)
    if len(sched) < 2 or any(n <= 0 for n in sched) or sched != sorted(set(sched)):
        errs.append("wave_construction: n_schedule needs >= 2 increasing positive entries")
    if w.construction not in ("pullback", "forward"):
        errs.append(f"wave_construction: unknown construction {w.construction!r}")
    if not 0 < w.level < 1:
        errs.append("nonlocal_solver: level must lie in (0, 1)")
    if not w.tol > 0:
        errs.append("wave_construction: tol must be positive")
    if w.profile_horizon < 0:
        errs.append("wave_construction: profile_horizon must be >= 0")
    s = cfg.stability
    if s.kind not in ("bump", "scale", "noise"):
        errs.append(f"stability_lab: unknown perturbation {s.kind!r}")
    if not (s.horizon > 0 and s.target > 0 and s.width > 0):
        errs.append("stability_lab: horizon, target and width must be positive")
    g = cfg.grid
    if g.L is not None and not g.L > 0:
        errs.append("nonlocal_solver: grid L must be positive")
    if g.N is not None and g.N < 16:
        errs.append("nonlocal_solver: grid needs N >= 16")
    if K is not None and g.L is not None and g.N is not None and g.L > 0 and g.N >= 16:
        h = 2 * g.L / (g.N - 1)
        if not h < K.length_scale / 4:
            errs.append(f"nonlocal_solver: h={h:.4g} must be below kernel length scale/4={K.length_scale / 4:.4g}")
    if K is not None and a_spec is not None and t.dt is not None and t.dt > 0:
        budget = 0.5 / (2 * K.mass_bounds()[1] + a_spec.bounds()[1])
        if t.dt > budget * (1 + 1e-12):
            errs.append(f"nonlocal_solver: dt={t.dt:g} exceeds the stability budget; suggested dt <= {budget:.6g}")
    return errs


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    return parse_config(path.read_text(), str(path))


# -- dumping ------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: RunConfig) -> str:
    """Normalized INI text with every default filled in (None values omitted)."""
    cp = _parser()
    k = cfg.kernel
    cp["kernel"] = {"shape": k.shape, KERNEL_PARAM[k.shape]: _fmt(k.param), "mass": _fmt(k.mass),
                    "modulation": k.modulation}
    if k.modulation != "none":
        cp["kernel"]["modulation_amplitude"] = _fmt(k.modulation_amplitude)
        cp["kernel"]["modulation_period"] = _fmt(k.modulation_period)
    cp["driver"] = {"kind": cfg.driver.kind, **{key: _fmt(v) for key, v in cfg.driver.params}}
    for name in _SIMPLE:
        sec = getattr(cfg, name)
        cp[name] = {f.name: _fmt(getattr(sec, f.name)) for f in fields(sec) if getattr(sec, f.name) is not None}
    import io

    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
