"""Command-line entry point: ``nlkpp <subcommand> --config run.ini``.

Exit codes: 0 success, 1 a check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, drivers, io, solver, speed, stability, verification, waves
from .config import SUBCOMMANDS, RunConfig, dump_config, load_config
from .errors import ConfigurationError, EstimationError, NlkppError

ENV_OUT = "NLKPP_OUT"
DEFAULT_OUT = "nlkpp-out"


class Context:
    """Resolved config, output directory and CSV metadata for one invocation."""

    def __init__(self, cfg: RunConfig, out: Path, command: str, threads: int):
        self.cfg = cfg
        self.out = out
        self.command = command
        self.threads = max(1, threads)
        self.text = dump_config(cfg)
        self.hash = io.config_hash(self.text)
        self.figures = cfg.output.figures

    def meta(self, seed=None):
        m = {"config_sha256": self.hash, "command": self.command, "rng": drivers.RNG_NAME}
        if seed is not None:
            m["seed"] = seed
        return m

    def csv(self, name, columns, rows, seed=None):
        return io.write_csv(self.out / name, columns, rows, self.meta(seed))

    def per_seed(self, fn):
        seeds = list(self.cfg.run.seeds)
        if self.threads == 1 or len(seeds) == 1:
            return [fn(s) for s in seeds]
        with ThreadPoolExecutor(self.threads) as pool:
            return list(pool.map(fn, seeds))

    def figure(self, plot, name, *args, **kwargs):
        if self.figures:
            from . import plotting

            getattr(plotting, plot)(self.out / name, *args, **kwargs)


def _path(cfg: RunConfig, spec, t0, t1):
    step = (t1 - t0) if drivers.is_autonomous(spec) else cfg.time.path_dt
    return drivers.sample_path(spec, t0, t1, step)


def _mu(ctx: Context, spec):
    if ctx.cfg.wave.mu is not None:
        return ctx.cfg.wave.mu
    raise ConfigurationError(f"{ctx.command} needs [wave] mu")


def _suffix(ctx, seed):
    return "" if len(ctx.cfg.run.seeds) == 1 else f"_seed{seed}"


# -- subcommands -----------------------------------------------------------------


def cmd_means(ctx: Context) -> int:
    cfg = ctx.cfg
    H = cfg.time.horizon

    def one(seed):
        spec = cfg.driver_spec(seed)
        path = _path(cfg, spec, 0.0, H)
        est = drivers.mean_estimate(path)
        T = drivers.default_block_length(spec)
        nb = math.floor(H / T + 1e-9)
        if nb >= 1:
            blk = drivers.block_decomposition(path.restrict(0.0, nb * T), T)
            a_sup, bound = blk.sup_norm(), 2 * T * est.upper
        else:
            a_sup, bound = math.nan, math.nan
        return seed, path, est, a_sup, bound

    rows, ok = [], True
    for seed, path, est, a_sup, bound in ctx.per_seed(one):
        rows.append((seed, est.least, est.upper, est.least_spread, est.upper_spread, a_sup, bound))
        ok &= est.least <= est.upper and not (a_sup > bound)
        io.path_csv(ctx.out / f"path{_suffix(ctx, seed)}.csv", path, ctx.meta(seed))
        ctx.figure("plot_path", f"path{_suffix(ctx, seed)}.png", path, est)
        print(f"seed={seed} least_mean={est.least:.6g} upper_mean={est.upper:.6g} A_sup={a_sup:.6g}")
    ctx.csv("means.csv", ["seed", "least", "upper", "least_spread", "upper_spread", "A_sup", "A_bound"], rows)
    return 0 if ok else 1


def cmd_speed(ctx: Context) -> int:
    cfg = ctx.cfg
    K = cfg.kernel_spec()
    H = cfg.time.horizon

    def one(seed):
        spec = cfg.driver_spec(seed)
        path = _path(cfg, spec, 0.0, H)
        cs = speed.critical_mu(K, spec, horizon=H, path=path)
        mus = np.array(cfg.wave.mu_sweep) if cfg.wave.mu_sweep else cs.mus
        vals = np.array([speed.mean_speed_of_path(K, path, float(m)) for m in mus])
        return seed, cs, mus, vals

    summary = []
    for seed, cs, mus, vals in ctx.per_seed(one):
        sfx = _suffix(ctx, seed)
        ctx.csv(f"speed{sfx}.csv", ["mu", "least_mean_c", "upper_mean_c"], np.column_stack([mus, vals]), seed)
        ctx.figure("plot_speed_curve", f"speed{sfx}.png", mus, vals[:, 0], vals[:, 1], cs.mu_star, cs.c_star)
        summary.append((seed, cs.mu_star, cs.c_star, float(cs.censored)))
        print("mu_star,c_star")
        print(f"{cs.mu_star:.10g},{cs.c_star:.10g}" + (" (censored)" if cs.censored else ""))
    ctx.csv("summary.csv", ["seed", "mu_star", "c_star", "censored"], summary)
    return 0


def cmd_simulate(ctx: Context) -> int:
    cfg = ctx.cfg
    K = cfg.kernel_spec()
    H = cfg.time.horizon

    def one(seed):
        spec = cfg.driver_spec(seed)
        path = _path(cfg, spec, 0.0, H)
        mu_star = speed.critical_mu(K, spec, horizon=H, path=path).mu_star
        mu = cfg.wave.mu if cfg.wave.mu is not None else mu_star
        grid = cfg.grid_for(mu)
        f0 = solver.Field.front(grid, waves.phi_plus(mu, grid.x), mu)
        dt = cfg.time.dt or solver.lattice_dt(solver.stability_dt(K, path))
        tr = solver.evolve(f0, K, path, "fixed", 0.0, H, dt, cfg.time.snapshot_every, level=cfg.wave.level)
        try:
            est = waves.measure_c_star(tr)
        except EstimationError as exc:
            print(f"seed={seed}: no speed estimate ({exc})", file=sys.stderr)
            est = waves.SpeedEstimate(math.nan, math.nan, math.nan, (math.nan, math.nan))
        theory = speed.mean_speed_of_path(K, path, min(mu, mu_star))[0]
        return seed, tr, est, theory

    rows = []
    for seed, tr, est, theory in ctx.per_seed(one):
        sfx = _suffix(ctx, seed)
        io.snapshot_csv(ctx.out / f"snapshot{sfx}.csv", tr.final, ctx.meta(seed))
        io.diagnostics_csv(ctx.out / f"diagnostics{sfx}.csv", tr, ctx.meta(seed))
        ctx.figure("plot_snapshots", f"simulate{sfx}.png", tr)
        rows.append((seed, est.slope, est.quarter_slope, theory))
        print(f"seed={seed} front_speed={est.slope:.6g} theory={theory:.6g}")
    ctx.csv("summary.csv", ["seed", "front_speed", "quarter_speed", "theory"], rows)
    return 0


def _build(cfg: RunConfig, seed, mu, reach=0.0, profile_horizon=None):
    K = cfg.kernel_spec()
    spec = cfg.driver_spec(seed)
    ph = cfg.wave.profile_horizon if profile_horizon is None else profile_horizon
    return waves.build_wave(
        K, spec, mu, grid=cfg.grid_for(mu), n_schedule=cfg.wave.n_schedule, dt=cfg.time.dt,
        tol=cfg.wave.tol, construction=cfg.wave.construction, profile_horizon=ph,
        profile_every=cfg.time.snapshot_every, reach=reach, strict=False,
    )


def cmd_build_wave(ctx: Context) -> int:
    cfg = ctx.cfg
    mu = _mu(ctx, None)
    ph = cfg.wave.profile_horizon or cfg.time.horizon

    def one(seed):
        return seed, _build(cfg, seed, mu, profile_horizon=ph)

    rows, ok = [], True
    for seed, w in ctx.per_seed(one):
        sfx = _suffix(ctx, seed)
        x = w.x
        pp = waves.phi_plus(mu, x)
        pm = waves.phi_minus(w.params, float(w.times[0]), x)
        ctx.csv(f"profile{sfx}.csv", ["x", "U", "phi_plus", "phi_minus"], np.column_stack([x, w.profile, pp, pm]), seed)
        sched = w.meta["n_schedule"]
        ctx.csv(f"convergence{sfx}.csv", ["n", "sup_distance"], np.column_stack([sched[1:], w.distances]), seed)
        pos = np.array([solver.front_position(u, cfg.wave.level, x) or np.nan for u in w.U]) + w.C
        measured = waves.measure_c_star(pos, w.times).slope
        # ergodic limit of C(t)/t, estimated by the average of c over the stored window
        theory = float((w.C[-1] - w.C[0]) / (w.times[-1] - w.times[0]))
        rows.append((mu, measured, theory))
        ctx.figure("plot_wave", f"wave{sfx}.png", x, w.profile, pp, pm, w.distances, sched)
        monotone = all(b <= a for a, b in zip(w.distances, w.distances[1:]))
        good = w.sandwich_violations == 0 and monotone and w.distances[-1] < cfg.wave.tol
        ok &= good
        print(f"seed={seed} mu={mu:g} c_star_measured={measured:.6g} c_star_theory={theory:.6g} "
              f"final_distance={w.distances[-1]:.3g} sandwich_violations={w.sandwich_violations}"
              + ("" if good else " FAILED"))
    ctx.csv("summary.csv", ["mu", "c_star_measured", "c_star_theory"], rows)
    return 0 if ok else 1


def _perturbation(cfg: RunConfig, seed):
    s = cfg.stability
    return stability.PerturbationSpec(s.kind, s.amplitude, s.width, s.center, s.alpha0, None, seed)


def cmd_stability(ctx: Context) -> int:
    cfg = ctx.cfg
    mu = _mu(ctx, None)

    def one(seed):
        w = _build(cfg, seed, mu, reach=cfg.stability.horizon, profile_horizon=0.0)
        res = stability.run_stability(
            w, _perturbation(cfg, seed), cfg.stability.horizon, snapshot_every=cfg.time.snapshot_every,
            target=cfg.stability.target,
        )
        return seed, res

    rows, ok = [], True
    for seed, res in ctx.per_seed(one):
        sfx = _suffix(ctx, seed)
        ctx.csv(f"stability{sfx}.csv", ["t", "distance", "alpha"], res.table(), seed)
        ctx.figure("plot_stability", f"stability{sfx}.png", res.times, res.distance, res.alpha)
        rows.append((seed, res.distance[-1], res.alpha[-1], res.delta, float(res.passed)))
        ok &= res.passed
        print(f"seed={seed} final_distance={res.distance[-1]:.3g} final_alpha={res.alpha[-1]:.6g} "
              f"delta={res.delta:.4g} {'pass' if res.passed else 'FAILED'}")
    ctx.csv("summary.csv", ["seed", "final_distance", "final_alpha", "delta", "passed"], rows)
    return 0 if ok else 1


def verification_suite(cfg: RunConfig, seed: int = 0) -> list:
    """The checks behind ``verify``: comparison pairs, residual signs, Lipschitz bound."""
    K = cfg.kernel_spec()
    spec = cfg.driver_spec(seed)
    out = []
    worst, fails = math.inf, 0
    for i in range(cfg.run.pairs):
        lo, up, k2, a2, mode, mu2 = verification.random_case(seed * 100003 + i)
        r = verification.comparison_check(lo, up, k2, a2, mode, horizon=5.0, mu=mu2)
        worst = min(worst, r.margin)
        fails += not r.passed
    out.append(verification.CheckResult(f"comparison_{cfg.run.pairs}_pairs", fails == 0, worst))
    lo, up, k2, a2, mode, mu2 = verification.random_case(seed)
    r = verification.comparison_check(up, up, k2, a2, mode, horizon=5.0, mu=mu2)
    out.append(verification.CheckResult("comparison_equal_pair", abs(r.detail["min_gap"]) <= 1e-12,
                                        1e-12 - abs(r.detail["min_gap"])))

    path = _path(cfg, spec, -1.0, 1.0)
    mu_star = speed.critical_mu(K, spec, horizon=cfg.time.horizon).mu_star
    mu = cfg.wave.mu if cfg.wave.mu is not None else 0.5 * mu_star
    grid = cfg.grid_for(mu)
    out.append(verification.residual_phi_plus(K, path, mu, grid))

    T = drivers.default_block_length(spec)
    bpath = _path(cfg, spec, -T, T)
    p = waves.sub_super_params(K, bpath, mu, mu_star, T=T, d_factor=1.01)
    out.append(verification.residual_phi_minus(K, bpath, p, grid))

    fpath = _path(cfg, spec, 0.0, 10.0)
    f0 = solver.Field.front(grid, waves.phi_plus(mu, grid.x), mu)
    dt = cfg.time.dt or solver.lattice_dt(solver.stability_dt(K, fpath))
    tr = solver.evolve(f0, K, fpath, "fixed", 0.0, 10.0, dt, dt)
    lip = verification.lipschitz_check(tr, K, fpath)
    out.append(verification.CheckResult("lipschitz_derived", lip.measured <= lip.derived_bound + lip.tol,
                                        lip.derived_bound + lip.tol - lip.measured))
    if lip.literal_bound is not None:
        out.append(verification.CheckResult("lipschitz_literal", lip.measured <= lip.literal_bound + lip.tol,
                                            lip.literal_bound + lip.tol - lip.measured))
    out.append(verification.CheckResult("invariant_interval", tr.excursion <= solver.INTERVAL_SLACK,
                                        solver.INTERVAL_SLACK - tr.excursion))
    return out


def cmd_verify(ctx: Context) -> int:
    checks = []
    for seed in ctx.cfg.run.seeds:
        checks += [(seed, c) for c in verification_suite(ctx.cfg, seed)]
    ctx.out.mkdir(parents=True, exist_ok=True)
    lines = [f"# nlkpp {__version__}"] + [f"# {k}: {v}" for k, v in ctx.meta().items()]
    lines.append("seed,name,verdict,margin")
    for seed, c in checks:
        lines.append(f"{seed},{c.line()}")
        print(c.line())
    (ctx.out / "verify.csv").write_text("\n".join(lines) + "\n")
    return 0 if all(c.passed for _, c in checks) else 1


COMMANDS = {
    "means": cmd_means,
    "speed": cmd_speed,
    "simulate": cmd_simulate,
    "build-wave": cmd_build_wave,
    "stability": cmd_stability,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlkpp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"nlkpp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI run configuration")
        p.add_argument("--seed", type=int, help="override the configured seed list with one seed")
        p.add_argument("--out", help=f"output directory (default: config, then ${ENV_OUT}, then ./{DEFAULT_OUT})")
        p.add_argument("--threads", type=int, default=1, help="workers for seed ensembles")
    return ap


def resolve_out(args, cfg: RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.output.dir:
        return Path(cfg.output.dir)
    return Path(os.environ.get(ENV_OUT, DEFAULT_OUT)) / args.command


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seeds([args.seed])
        out = resolve_out(args, cfg)
        ctx = Context(cfg, out, args.command, args.threads)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(ctx.text)
        return COMMANDS[args.command](ctx)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NlkppError as exc:
        print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
