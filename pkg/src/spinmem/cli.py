"""Command-line surface: rates, simulate, sweep, hopfield, oracle.

Every run writes its data CSV plus a JSON manifest (config echo, seeds,
wall time, version) into the output directory.  Feeding the manifest back
through --config replays the run and reproduces the CSV byte for byte.

Exit codes: 0 success, 1 usage/validation problem (or a failed oracle
check), 2 runtime failure.
"""

import argparse
import dataclasses
import sys
import time
from pathlib import Path

import numpy as np

from . import ensemble, hopfield, kmc, model, rates
from .config import ConfigError, RunConfig, load_config
from .ensemble import derive_seed
from .output import write_csv, write_manifest

_COMMANDS = ("rates", "simulate", "sweep", "hopfield", "oracle")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of calling sys.exit."""

    def error(self, message):
        raise _UsageError("%s\n%s" % (self.format_usage().rstrip(), message))


def build_parser():
    parser = _Parser(prog="spinmem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="|".join(_COMMANDS))
    for name, doc in (
        ("rates", "tabulate the flip-rate kernel over an energy window"),
        ("simulate", "sample overlap trajectories for one coupling draw"),
        ("sweep", "disorder-averaged order parameter against eta"),
        ("hopfield", "thermal Hopfield baseline against temperature"),
        ("oracle", "check the simulator against the exact tiny-system law"),
    ):
        p = sub.add_parser(name, help=doc, description=doc)
        p.add_argument("--config", help="key=value file or a replay manifest")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", help="override the output directory")
    return parser


def _model_params(cfg, eta):
    return model.ModelParams(
        num_spins=cfg.N,
        num_patterns=cfg.M,
        eta=eta,
        theta=cfg.theta,
        omega=cfg.omega,
        coupling_width=cfg.s,
        drive=cfg.drive,
    )


def _ensemble_spec(cfg, eta_grid):
    return ensemble.EnsembleSpec(
        params=_model_params(cfg, eta_grid[0]),
        n_traj=cfg.n_traj,
        n_distr=cfg.n_distr,
        eta_grid=eta_grid,
        initial=ensemble.InitialCondition(
            kind=cfg.init,
            pattern=cfg.init_pattern,
            target_overlap=cfg.init_overlap,
        ),
        master_seed=cfg.seed,
        window=ensemble.StationarityWindow(cfg.burn_in, cfg.window, cfg.drift_tol),
        t_end=cfg.t_end,
        n_samples=cfg.n_samples,
        workers=cfg.workers,
    )


def _run_rates(cfg, out_dir):
    kp = rates.KernelParams(
        eta=cfg.eta, theta=cfg.theta, omega=cfg.omega, drive_sq=cfg.drive**2
    )
    table = rates.build_rate_table(
        cfg.g_sq, kp, (cfg.de_min, cfg.de_max), grid_step=cfg.grid_step
    )
    csv_path = out_dir / "rates.csv"
    write_csv(
        csv_path,
        ["delta_e", "rate"],
        [(float(x), float(w)) for x, w in zip(table.grid, table.rates)],
    )
    seeds = {"master_seed": cfg.seed, "note": "rates are deterministic"}
    return 0, seeds, {"csv": csv_path.name}


def _run_simulate(cfg, out_dir):
    spec = _ensemble_spec(cfg, (cfg.eta,))
    params = spec.params
    coupling_seed = derive_seed(cfg.seed, ensemble._NS_COUPLINGS, 0)
    couplings = model.sample_couplings(params, coupling_seed)
    patterns = model.extract_patterns(couplings)
    kp = rates.KernelParams.from_model(params)
    tables = rates.build_tables(couplings, kp)

    init_seeds = [
        derive_seed(cfg.seed, ensemble._NS_INITIAL, 0, 0, ti)
        for ti in range(cfg.n_traj)
    ]
    sigma0s = [
        ensemble._initial_configuration(patterns, spec.initial, s)
        for s in init_seeds
    ]
    t_end = cfg.t_end
    if t_end is None:
        t_end = ensemble._default_t_end(couplings, tables, sigma0s)
    grid = np.linspace(0.0, t_end, cfg.n_samples)

    header = ["traj", "time"] + ["m_%d" % (mu + 1) for mu in range(cfg.M)]
    rows = []
    traj_seeds = []
    for ti in range(cfg.n_traj):
        seed = derive_seed(cfg.seed, ensemble._NS_TRAJECTORY, 0, 0, ti)
        traj_seeds.append(seed)
        record = kmc.run_trajectory(
            couplings, sigma0s[ti], tables, t_end, grid, seed
        )
        for k, t in enumerate(grid):
            rows.append([ti, float(t)] + [float(v) for v in record.overlaps[k]])
    csv_path = out_dir / "simulate.csv"
    write_csv(csv_path, header, rows)
    seeds = {
        "master_seed": cfg.seed,
        "coupling_seed": coupling_seed,
        "initial_seeds": init_seeds,
        "trajectory_seeds": traj_seeds,
    }
    return 0, seeds, {"csv": csv_path.name}


def _run_sweep(cfg, out_dir):
    spec = _ensemble_spec(cfg, tuple(cfg.eta_grid))
    result = ensemble.disorder_sweep(spec)
    for failure in result.failures:
        print("warning: %s" % failure, file=sys.stderr)
    csv_path = out_dir / "sweep.csv"
    write_csv(
        csv_path,
        ["eta", "s", "mean_M", "std_M", "n_traj", "n_distr", "t_end"],
        [
            (
                result.axis[k],
                cfg.s,
                float(result.mean_m[k]),
                float(result.std_m[k]),
                cfg.n_traj,
                cfg.n_distr,
                float(result.t_end[k]),
            )
            for k in range(len(result.axis))
        ],
    )
    seeds = {
        "master_seed": cfg.seed,
        "coupling_seeds": list(result.coupling_seeds),
        "derivation": "SeedSequence(master, spawn_key=(namespace, indices...))",
    }
    return 0, seeds, {"csv": csv_path.name, "failures": list(result.failures)}


def _run_hopfield(cfg, out_dir):
    chain_cfg = hopfield.ThermalChainConfig(
        beta=1.0, sweeps=cfg.sweeps, burn_in=cfg.burn_in
    )
    result = hopfield.temperature_sweep(
        cfg.N, cfg.M, cfg.s, tuple(cfg.T_grid), chain_cfg, cfg.n_distr, cfg.seed
    )
    csv_path = out_dir / "hopfield.csv"
    write_csv(
        csv_path,
        ["T", "s", "mean_M", "std_M", "n_disorder"],
        [
            (
                result.axis[k],
                cfg.s,
                float(result.mean_m[k]),
                float(result.std_m[k]),
                cfg.n_distr,
            )
            for k in range(len(result.axis))
        ],
    )
    seeds = {
        "master_seed": cfg.seed,
        "pattern_seeds": list(result.coupling_seeds),
    }
    return 0, seeds, {"csv": csv_path.name}


def _run_oracle(cfg, out_dir):
    if cfg.N > 12:
        raise ConfigError(["oracle: N must be <= 12 for exact enumeration"])
    params = _model_params(cfg, cfg.eta)
    coupling_seed = derive_seed(cfg.seed, ensemble._NS_COUPLINGS, 0)
    couplings = model.sample_couplings(params, coupling_seed)
    kp = rates.KernelParams.from_model(params)
    tables = rates.build_tables(couplings, kp)
    generator = kmc.exact_generator(couplings, tables=tables)
    exact = kmc.stationary_distribution(generator)
    sigma0 = model.random_configuration(
        cfg.N, derive_seed(cfg.seed, ensemble._NS_INITIAL, 0, 0, 0)
    )
    empirical = kmc.occupancy_distribution(
        couplings, sigma0, tables,
        n_jumps=cfg.n_jumps,
        seed=derive_seed(cfg.seed, ensemble._NS_TRAJECTORY, 0, 0, 0),
    )
    tv = 0.5 * float(np.abs(exact - empirical).sum())
    csv_path = out_dir / "oracle.csv"
    write_csv(
        csv_path,
        ["state", "exact", "empirical"],
        [(k, float(exact[k]), float(empirical[k])) for k in range(exact.size)],
    )
    print("TV distance (exact vs %d jumps): %.5f" % (cfg.n_jumps, tv))
    seeds = {"master_seed": cfg.seed, "coupling_seed": coupling_seed}
    outputs = {"csv": csv_path.name, "tv_distance": tv}
    return (0 if tv < 0.02 else 1), seeds, outputs


_RUNNERS = {
    "rates": _run_rates,
    "simulate": _run_simulate,
    "sweep": _run_sweep,
    "hopfield": _run_hopfield,
    "oracle": _run_oracle,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1

    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, out_dir=args.out)
    except ConfigError as exc:
        for line in exc.violations:
            print("config error: %s" % line, file=sys.stderr)
        return 1
    except OSError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 1

    out_dir = Path(cfg.out_dir)
    started = time.perf_counter()
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        code, seeds, outputs = _RUNNERS[args.command](cfg, out_dir)
    except ConfigError as exc:
        for line in exc.violations:
            print("config error: %s" % line, file=sys.stderr)
        return 1
    except ValueError as exc:
        print("validation error: %s" % exc, file=sys.stderr)
        return 1
    except (
        rates.NonConvergedQuadrature,
        rates.NegativeRate,
        rates.OutOfBounds,
        kmc.ZeroTotalRate,
        ensemble.NotConverged,
        OSError,
    ) as exc:
        print("runtime failure: %s" % exc, file=sys.stderr)
        return 2
    wall = time.perf_counter() - started
    write_manifest(
        out_dir / ("%s_manifest.json" % args.command),
        args.command, cfg, seeds, outputs, wall,
    )
    return code


def entry():
    raise SystemExit(main(sys.argv[1:]))
