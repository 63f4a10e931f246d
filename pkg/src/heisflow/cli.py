"""Config-driven experiment runner.

Usage: heisflow <subcommand> [--config FILE] [--key value ...] --out DIR

Subcommands: groundstate, evolve-limit, evolve-heis, distance, stability-sweep,
rate-study, oracle-check.  Every run writes its CSV outputs plus manifest.json
(config echo, tolerances with sources, timings, per-check pass/fail) into the
output directory; exit status is 0 iff all configured checks pass, 2 on
configuration errors, 3 on numerical failures.
"""

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import bergman, collocation, experiments, groundstate, hardy, modulation, spectral
from .config import ConfigError, RunConfig, RunManifest
from .evolve import IntegratorConfig, evolve_heis, evolve_limit
from .grids import FrequencyGrid, RadialSpectralGrid
from .symmetry import SymmetryElement, apply_symmetry, gap_closed_form


def _hardy_grid(cfg):
    return FrequencyGrid(cfg.get("grid.eps"), cfg.get("grid.M"), cfg.get("grid.N"))


def _radial_grid(cfg):
    return RadialSpectralGrid(delta=1.0 / cfg.get("rgrid.delta_inv"),
                              p_lo=cfg.get("rgrid.p_lo"), p_hi=cfg.get("rgrid.p_hi"),
                              k_max=cfg.get("rgrid.k_max"), n_s=cfg.get("rgrid.n_s"))


def _workers():
    return max(1, int(os.environ.get("HEISFLOW_WORKERS", "1")))


def cmd_groundstate(cfg, out_dir, manifest):
    grid = _radial_grid(cfg)
    betas = cfg.float_list("run.betas")
    tol = cfg.get("run.tol")
    manifest.tolerance("solver_residual", tol,
                       "config" if "run.tol" in cfg.values else "default")
    table = groundstate.continuation_sweep(betas, grid, cfg.get("run.n"), tol=tol)
    path = os.path.join(out_dir, "groundstates.csv")
    table.to_csv(path)
    manifest.output(path)
    for row in table.rows:
        manifest.check(f"residual_beta_{row['beta']:g}", row["residual"] <= tol,
                       f"residual={row['residual']:.3e}")
    if table.dist_slope is not None:
        manifest.derived("dist_slope", table.dist_slope)
        manifest.derived("r_slope", table.r_slope)
    return table


def cmd_rate_study(cfg, out_dir, manifest):
    table = cmd_groundstate(cfg, out_dir, manifest)
    lo, hi = cfg.get("run.slope_window_lo"), cfg.get("run.slope_window_hi")
    floor = cfg.get("run.r_slope_floor")
    manifest.tolerance("dist_slope_window", [lo, hi])
    manifest.tolerance("r_slope_floor", floor)
    if table.dist_slope is None:
        manifest.check("slopes_available", False, "need at least two betas")
        return
    manifest.check("dist_slope_in_window", lo <= table.dist_slope <= hi,
                   f"slope={table.dist_slope:.3f}")
    manifest.check("r_slope_above_floor", table.r_slope >= floor,
                   f"slope={table.r_slope:.3f}")
    c3 = table.bootstrap_constants()
    manifest.derived("bootstrap_constants", c3)
    if c3:
        manifest.check("bootstrap_stable", max(c3) <= 5.0 * min(c3),
                       f"C3 range [{min(c3):.3g}, {max(c3):.3g}]")


def _build_limit_initial(cfg, grid):
    src = cfg.get("run.input")
    if src is not None:
        return hardy.load_csv(src)
    profile, _, _, _ = groundstate.traveling_profile(grid)
    r2 = cfg.get("run.r2")
    seed = cfg.get("run.seed")
    if seed is None or r2 == 0.0:
        return profile
    return profile + experiments.band_limited_hardy_perturbation(grid, seed, r2)


def cmd_evolve_limit(cfg, out_dir, manifest):
    grid = _hardy_grid(cfg)
    u0 = _build_limit_initial(cfg, grid)
    icfg = IntegratorConfig(dt=cfg.get("run.dt"), t_final=cfg.get("run.t_final"),
                            sample_every=cfg.get("run.sample_every"))
    traj = evolve_limit(u0, icfg)
    ctol = cfg.get("run.conservation_tol")
    manifest.tolerance("conservation_drift", ctol)
    for name in ("momentum", "energy"):
        series = traj.series[name]
        drift = float(np.max(np.abs(series - series[0])) / abs(series[0]))
        manifest.check(f"{name}_conserved", drift <= ctol, f"drift={drift:.3e}")
    path = os.path.join(out_dir, "series.csv")
    traj.write_series(path)
    manifest.output(path)
    snap_path = os.path.join(out_dir, "snapshot_final.csv")
    hardy.save_csv(traj.snapshots[-1], snap_path)
    manifest.output(snap_path)
    return traj


def cmd_evolve_heis(cfg, out_dir, manifest):
    grid = _radial_grid(cfg)
    beta = cfg.require("run.beta")
    gammas = (cfg.float_list("run.gammas") if cfg.get("run.gammas")
              else [beta])
    if any(g < beta for g in gammas):
        raise ConfigError("every gamma must satisfy gamma >= beta")
    n = cfg.get("run.n")
    tol = cfg.get("run.tol")
    q_beta, res, _ = groundstate.solve_ground_state(
        beta, grid, n, groundstate.limit_profile_lattice(grid)[1], tol=tol)
    manifest.derived("residual_beta", res)
    seed = cfg.get("run.seed")
    u0 = q_beta
    if seed is not None and cfg.get("run.r") > 0.0:
        u0 = q_beta + experiments.mixed_perturbation(grid, seed, cfg.get("run.r"))
    icfg = IntegratorConfig(dt=cfg.get("run.dt"), t_final=cfg.get("run.t_final"),
                            scheme="IFRK4", sample_every=cfg.get("run.sample_every"))
    ctol = cfg.get("run.conservation_tol")
    manifest.tolerance("conservation_drift", ctol)

    def run_one(gamma):
        ug = experiments.initial_family(u0, beta, gamma, grid)
        return gamma, evolve_heis(ug, gamma, n, icfg)

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        results = list(pool.map(run_one, sorted(gammas)))
    for gamma, traj in results:
        tag = f"{gamma:g}".replace(".", "p")
        path = os.path.join(out_dir, f"series_gamma_{tag}.csv")
        traj.write_series(path)
        manifest.output(path)
        for name in ("momentum", "energy"):
            series = traj.series[name]
            ref = abs(series[0]) if series[0] != 0 else 1.0
            drift = float(np.max(np.abs(series - series[0])) / ref)
            manifest.check(f"{name}_conserved_gamma_{gamma:g}", drift <= ctol,
                           f"drift={drift:.3e}")
        manifest.derived(f"sup_w_over_sqrt_gamma_{gamma:g}",
                         float(np.nanmax(traj.series["w_norm"]))
                         / np.sqrt(1.0 - gamma))
    return results


def cmd_distance(cfg, out_dir, manifest):
    grid = _hardy_grid(cfg)
    src = cfg.get("run.input")
    if src is not None:
        u = hardy.load_csv(src)
    else:
        x = SymmetryElement(cfg.get("run.x_s"), cfg.get("run.x_theta"),
                            cfg.get("run.x_alpha"))
        u = apply_symmetry(hardy.ground_state_profile(grid), x)
    fit = modulation.distance_to_orbit(u)
    delta = modulation.delta_functional(u)
    manifest.derived("distance", fit.distance)
    manifest.derived("delta", delta)
    manifest.derived("x_star", list(fit.x_star.as_tuple()))
    manifest.derived("evaluations", fit.evaluations)
    manifest.check("fit_converged", fit.converged)
    path = os.path.join(out_dir, "distance.csv")
    with open(path, "w") as fh:
        fh.write("distance,delta,x_s,x_theta,x_alpha,evaluations\n")
        fh.write(f"{fit.distance:.17g},{delta:.17g},{fit.x_star.s0:.17g},"
                 f"{fit.x_star.theta:.17g},{fit.x_star.alpha:.17g},{fit.evaluations}\n")
    manifest.output(path)
    return fit


def cmd_stability_sweep(cfg, out_dir, manifest):
    mode = cfg.get("run.mode")
    seed = cfg.require("run.seed")
    if mode == "ratio":
        r_values = cfg.float_list("run.r_values")
        report = modulation.stability_ratio_experiment(
            r_values, cfg.get("run.samples"), seed, grid=_hardy_grid(cfg))
        path = os.path.join(out_dir, "stability_ratios.csv")
        with open(path, "w") as fh:
            fh.write("r,sup_ratio,mean_ratio,samples,excluded\n")
            for r in r_values:
                row = report[r]
                fh.write(f"{r:.17g},{row['sup']:.17g},{row['mean']:.17g},"
                         f"{row['count']},{row['excluded']}\n")
        manifest.output(path)
        sups = [report[r]["sup"] for r in sorted(r_values)]
        manifest.derived("sup_ratios", dict(zip(map(str, sorted(r_values)), sups)))
        manifest.check("ratios_finite", all(np.isfinite(s) for s in sups))
        manifest.check("sup_non_increasing_to_zero",
                       all(sups[i] <= 1.1 * sups[-1] for i in range(len(sups))),
                       f"sups={sups}")
        return report

    beta = cfg.get("run.beta")
    cap = cfg.get("run.dist_cap")
    manifest.tolerance("sup_distance_cap", cap)
    if beta is None:
        result = experiments.tube_experiment_limit(
            _hardy_grid(cfg), cfg.get("run.r2"), cfg.get("run.t_final"),
            cfg.get("run.dt"), seed, threshold=cfg.get("run.threshold"),
            sample_every=cfg.get("run.sample_every"))
        sup_d = result["sup_dist"]
    else:
        result = experiments.tube_experiment_heis(
            _radial_grid(cfg), beta, cfg.get("run.r2"), cfg.get("run.t_final"),
            cfg.get("run.dt"), seed, n=cfg.get("run.n"),
            threshold=cfg.get("run.threshold"),
            sample_every=cfg.get("run.sample_every"))
        sup_d = result["sup_dist_plus"]
        manifest.derived("sup_w", result["sup_w"])
    traj = result.pop("trajectory")
    path = os.path.join(out_dir, "series.csv")
    traj.write_series(path)
    manifest.output(path)
    manifest.derived("sup_distance", sup_d)
    manifest.derived("max_anchor_gap", result["max_anchor_gap"])
    manifest.check("distance_capped", sup_d <= cap, f"sup_d={sup_d:.4f}")
    manifest.check("anchor_gaps_bounded", result["max_anchor_gap"] <= 10.0,
                   f"max_gap={result['max_anchor_gap']:.3f}")
    return result


def cmd_oracle_check(cfg, out_dir, manifest):
    # trilinear kernel vs half-plane brute force on a smooth bump
    ogrid = bergman.lattice_grid(1.0 / 16, 8, 80)   # [0.5, 5]
    rng = np.random.default_rng(cfg.get("run.seed", 1234) or 1234)
    c = np.exp(-0.5 * ((ogrid.nodes - 2.0) / 0.35) ** 2) * (1.0 + 0.3j)
    c += 0.4 * np.exp(-0.5 * ((ogrid.nodes - 3.1) / 0.3) ** 2) * (0.5 - 0.8j)
    u = hardy.HardyFunction(ogrid, c)
    direct = hardy.cubic_projection(u)
    brute, est = bergman.bergman_project_bruteforce(u, oversample=4)
    scale = float(np.max(np.abs(direct.coeffs)))
    dev = float(np.max(np.abs(direct.coeffs - brute.coeffs))) / scale
    manifest.derived("bergman_oracle_deviation", dev)
    manifest.derived("bergman_oracle_error_estimate", est)
    manifest.check("bergman_oracle", dev <= max(1e-2, 5.0 * est), f"dev={dev:.2e}")

    # kernel identity on the ground state
    grid = _hardy_grid(cfg)
    fq = hardy.ground_state_profile(grid)
    p = hardy.cubic_projection(fq)
    target = grid.nodes * fq.coeffs
    linf = float(np.max(np.abs(p.coeffs - target)) / np.max(np.abs(target)))
    manifest.check("ground_state_identity", linf <= 1e-2, f"Linf={linf:.2e}")

    # spectral vs collocation Parseval and the plus-sector nonlinearity match
    rgrid = RadialSpectralGrid(delta=1.0 / 16, p_lo=1, p_hi=96, k_max=4, n_s=512)
    lat = FrequencyGrid(rgrid.sigma_min, rgrid.sigma_max, rgrid.n_sigma)
    f_lat = hardy.ground_state_profile(lat)
    emb = spectral.embed_hardy(f_lat, rgrid)
    h0_spec = spectral.hsobolev2(emb, 0)
    h0_coll = collocation.l2_collocation(emb)
    parseval = abs(h0_spec - h0_coll) / h0_spec
    manifest.check("parseval", parseval <= 1e-10, f"rel={parseval:.2e}")
    nl = collocation.cubic_truncated(emb)
    p_heis = spectral.extract_hardy(spectral.split_plus(nl)[0], require_pure=False)
    p_rect = groundstate._RectKernel(lat).apply(f_lat.coeffs)
    agree = (float(np.max(np.abs(p_heis.coeffs - p_rect)))
             / float(np.max(np.abs(p_rect))))
    manifest.check("plus_sector_nonlinearity", agree <= 1e-10, f"rel={agree:.2e}")

    # symmetry stack: closed-form gap vs discrete gap, unitarity
    wide = FrequencyGrid(1e-4, 40.0, 4096)
    fq_w = hardy.ground_state_profile(wide)
    worst = 0.0
    for s0, theta, alpha in ((1.5, 0.7, 1.3), (-2.0, 2.5, 0.8), (0.3, -1.2, 1.9)):
        x = SymmetryElement(s0, theta, alpha)
        tx = apply_symmetry(fq_w, x)
        d2 = hardy.sobolev2(tx - fq_w, 1)
        worst = max(worst, abs(d2 - gap_closed_form(x)) / gap_closed_form(x))
    manifest.check("gap_closed_form", worst <= 1e-3, f"rel={worst:.2e}")
    uni = abs(hardy.sobolev2(apply_symmetry(fq_w, SymmetryElement(0.5, 0.3, 1.4)), 1)
              - hardy.sobolev2(fq_w, 1)) / hardy.sobolev2(fq_w, 1)
    manifest.check("symmetry_unitary", uni <= 1e-6, f"rel={uni:.2e}")
    path = os.path.join(out_dir, "oracle_checks.csv")
    with open(path, "w") as fh:
        fh.write("check,pass,detail\n")
        for name, c in manifest.data["checks"].items():
            fh.write(f"{name},{int(c['pass'])},{c['detail']}\n")
    manifest.output(path)


_COMMANDS = {
    "groundstate": cmd_groundstate,
    "rate-study": cmd_rate_study,
    "evolve-limit": cmd_evolve_limit,
    "evolve-heis": cmd_evolve_heis,
    "distance": cmd_distance,
    "stability-sweep": cmd_stability_sweep,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="heisflow",
        description="Spectral experiments for the radial Heisenberg Schrodinger "
                    "flow and its Hardy-space limit.")
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("--config", default=None, help="sectioned key=value file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (section.key=value; bare keys "
                             "default to the run section); repeatable")
    args, extra = parser.parse_known_args(argv)

    overrides = list(args.set)
    i = 0
    while i < len(extra):     # accept "--key value" style overrides too
        tok = extra[i]
        if tok.startswith("--") and i + 1 < len(extra):
            overrides.append(f"{tok[2:]}={extra[i + 1]}")
            i += 2
        else:
            print(f"error: unrecognized argument {tok!r}", file=sys.stderr)
            return 2
    try:
        cfg = RunConfig.load(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    os.makedirs(args.out, exist_ok=True)
    manifest = RunManifest(args.subcommand, cfg)
    t0 = time.time()
    try:
        _COMMANDS[args.subcommand](cfg, args.out, manifest)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:   # numerical failure: record and exit 3
        manifest.check("run_completed", False, f"{type(exc).__name__}: {exc}")
        manifest.timing("command_wall_s", time.time() - t0)
        manifest.write(args.out)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    manifest.timing("command_wall_s", time.time() - t0)
    manifest.write(args.out)
    if not manifest.all_passed:
        print(f"failed checks: {', '.join(manifest.failing())}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
