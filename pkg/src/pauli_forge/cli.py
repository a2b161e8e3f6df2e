"""Command-line front end tying the modules into reproducible runs.

Subcommands: reconstruct (alias: partners), mubs, basin, bifurcate,
verify-mubs.  Option precedence is flags > config file > defaults; every
command writes a run record next to its outputs with input digests and the
resolved configuration.  Exit codes: 0 success, 1 bad input, 2 unreliable
or failed verification.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import backend
from .basin_mapper import export_basin_csv, export_basin_image, map_basins
from .core import Distribution, PureState, computational_basis, fourier_basis
from .imposition import IterationConfig, iterate
from .io_formats import (
    RunRecord,
    bifurcation_to_obj,
    load_bases,
    load_config_file,
    load_state,
    load_targets,
    mub_set_to_obj,
    partner_set_to_obj,
    sha256_file,
    write_json,
)
from .mub_pipeline import MubSearchOptions, find_mubs, find_mubs_prime_power, verify_mub_set
from .partner_search import (
    DEFAULT_SEED,
    ReconstructionProblem,
    build_seeds,
    default_strategy,
    enumerate_partners,
    interpolate_states,
    parse_strategy,
    scan_bifurcations,
    synthesize_problem,
)

DEFAULTS = {
    "tol": 1e-10,
    "cycle-window": 8,
    "dedup-tol": 1e-6,
    "seed": DEFAULT_SEED,
    "points": 50,
    "budget": None,
    "verify-tol": 1e-6,
}


class _Options:
    """Resolved option lookup: flag > config file > default."""

    def __init__(self, args):
        self.args = args
        self.cfg = load_config_file(args.config) if getattr(args, "config", None) else {}
        self.resolved: dict = {}

    def get(self, name: str, cast, default):
        value = getattr(self.args, name.replace("-", "_"), None)
        if value is None and name in self.cfg:
            try:
                value = cast(self.cfg[name])
            except (TypeError, ValueError):
                raise ValueError(f"config {name}: cannot parse {self.cfg[name]!r}")
        if value is None:
            value = default
        self.resolved[name] = value
        return value


def _iteration_config(opts: _Options, dim: int, n_bases: int) -> IterationConfig:
    tol = opts.get("tol", float, DEFAULTS["tol"])
    max_iter = opts.get("max-iter", int, 1000 * dim * n_bases)
    window = opts.get("cycle-window", int, DEFAULTS["cycle-window"])
    return IterationConfig(max_iter=max_iter, tol=tol, cycle_window=window)


def _apply_threads(opts: _Options) -> int:
    threads = opts.get("threads", int, backend.thread_count())
    backend.set_thread_count(threads)
    return threads


def _write_record(opts: _Options, argv: list[str], inputs: list[str],
                  outputs: list[str], started: float, record_path) -> None:
    record = RunRecord(
        command=argv,
        config={k: v for k, v in sorted(opts.resolved.items())
                if not isinstance(v, (list, tuple, dict)) or v is None},
        inputs={p: sha256_file(p) for p in inputs},
        outputs=list(outputs),
        duration_s=time.time() - started,
        backend=backend.active_backend(),
        threads=backend.thread_count(),
        seed=opts.resolved.get("seed", DEFAULT_SEED),
    )
    write_json(record.to_obj(), record_path)


def cmd_reconstruct(args, argv) -> int:
    started = time.time()
    opts = _Options(args)
    _apply_threads(opts)

    if bool(args.generator) == bool(args.targets):
        raise ValueError("exactly one of --generator and --targets is required")
    bases = load_bases(args.bases)
    inputs = [args.bases]
    if args.generator:
        generator = load_state(args.generator)
        problem = synthesize_problem(generator, bases)
        inputs.append(args.generator)
    else:
        targets = load_targets(args.targets, bases[0].dim, len(bases))
        problem = ReconstructionProblem(tuple(bases), tuple(targets))
        inputs.append(args.targets)

    seed = opts.get("seed", int, DEFAULTS["seed"])
    strategy_text = opts.get("strategy", str, None)
    strategy = parse_strategy(strategy_text, seed) if strategy_text else None
    config = _iteration_config(opts, problem.dim, len(problem))
    dedup_tol = opts.get("dedup-tol", float, DEFAULTS["dedup-tol"])

    result = enumerate_partners(problem, strategy, config, dedup_tol)

    out = opts.get("out", str, "partners.json")
    write_json(partner_set_to_obj(result, problem), out)
    outputs = [out]

    if args.trace:
        seeds = build_seeds(problem, strategy or default_strategy(problem.dim))
        trace_rows: list = []
        iterate(problem.to_chain(), PureState.from_vector(seeds[0]), config, trace_rows)
        with open(args.trace, "w") as fh:
            fh.write("iteration,residual,step\n")
            for it, resid, step in trace_rows:
                fh.write(f"{it},{resid:.17g},{step:.17g}\n")
        outputs.append(args.trace)

    print(f"partners = {result.count}")
    if result.pauli_unique:
        print("Pauli unique")
    print(f"undesirables = {len(result.undesirables)}, "
          f"unresolved = {result.unresolved}/{result.seeds_run}")

    _write_record(opts, argv, inputs, outputs, started, out + ".run.json")
    if not result.reliable:
        print("warning: unreliable run (more than 5% of seeds unresolved)",
              file=sys.stderr)
        return 2
    return 0


def cmd_mubs(args, argv) -> int:
    started = time.time()
    opts = _Options(args)
    _apply_threads(opts)

    if bool(args.dim) == bool(args.prime_power):
        raise ValueError("exactly one of --dim and --prime-power is required")

    seed = opts.get("seed", int, DEFAULTS["seed"])
    strategy_text = opts.get("strategy", str, None)
    budget = opts.get("budget", float, DEFAULTS["budget"])
    options = MubSearchOptions(
        strategy=parse_strategy(strategy_text, seed) if strategy_text else None,
        budget_s=budget,
        seed=seed,
    )
    if args.dim:
        result = find_mubs(args.dim, options)
    else:
        p, r = args.prime_power
        result = find_mubs_prime_power(p, r, options)

    out = opts.get("out", str, "mubs.json")
    write_json(mub_set_to_obj(result), out)

    print(f"bases = {result.count} (dim {result.dim})")
    print(f"max_unbias_error = {result.max_unbias_error:.3e}, "
          f"max_ortho_error = {result.max_ortho_error:.3e}")
    print(result.note)

    _write_record(opts, argv, [], [out], started, out + ".run.json")
    return 0


def cmd_basin(args, argv) -> int:
    started = time.time()
    opts = _Options(args)
    _apply_threads(opts)

    inputs = []
    if args.bases:
        bases = load_bases(args.bases)
        inputs.append(args.bases)
    else:
        bases = None

    if bool(args.flat) == bool(args.generator):
        raise ValueError("exactly one of --flat and --generator is required")
    if args.flat:
        if bases is None:
            bases = [computational_basis(3), fourier_basis(3)]
        flat = Distribution.flat(bases[0].dim)
        problem = ReconstructionProblem(tuple(bases), tuple(flat for _ in bases))
    else:
        generator = load_state(args.generator)
        inputs.append(args.generator)
        if bases is None:
            bases = [computational_basis(generator.dim), fourier_basis(generator.dim)]
        problem = synthesize_problem(generator, bases)

    resolution = opts.get("resolution", int, 300)
    config = _iteration_config(opts, problem.dim, len(problem))
    dedup_tol = opts.get("dedup-tol", float, DEFAULTS["dedup-tol"])
    opts.get("seed", int, DEFAULTS["seed"])

    grid = map_basins(problem, resolution, config, dedup_tol)

    prefix = opts.get("out", str, "basin")
    csv_path, ppm_path = prefix + ".csv", prefix + ".ppm"
    export_basin_csv(grid, csv_path)
    export_basin_image(grid, ppm_path)

    print(f"partners = {len(grid.partners)}")
    for label in sorted(grid.areas):
        name = {-1: "undesirable", -2: "unresolved"}.get(label, f"partner {label}")
        print(f"area[{name}] = {grid.areas[label]:.5f}")
    if grid.flagged:
        print(f"warning: {grid.unresolved_fraction:.2%} of cells unresolved "
              "(above the 0.5% flag level)", file=sys.stderr)

    _write_record(opts, argv, inputs, [csv_path, ppm_path], started,
                  prefix + ".run.json")
    return 0


def cmd_bifurcate(args, argv) -> int:
    started = time.time()
    opts = _Options(args)
    _apply_threads(opts)

    start = load_state(args.from_state)
    end = load_state(args.to_state)
    inputs = [args.from_state, args.to_state]
    if args.bases:
        bases = load_bases(args.bases)
        inputs.append(args.bases)
    else:
        bases = [computational_basis(start.dim), fourier_basis(start.dim)]

    points = opts.get("points", int, DEFAULTS["points"])
    seed = opts.get("seed", int, DEFAULTS["seed"])
    strategy_text = opts.get("strategy", str, None)
    strategy = parse_strategy(strategy_text, seed) if strategy_text else None
    config = _iteration_config(opts, start.dim, len(bases))
    dedup_tol = opts.get("dedup-tol", float, DEFAULTS["dedup-tol"])

    path = interpolate_states(start, end, points)
    scan = scan_bifurcations(path, bases, strategy, config, dedup_tol)

    out = opts.get("out", str, "bifurcation.json")
    write_json(bifurcation_to_obj(scan), out)

    counts = scan.partner_counts
    print(f"endpoint counts: {counts[0]} -> {counts[-1]}")
    print(f"bifurcation intervals: {len(scan.bifurcation_intervals)}")
    for lo, hi in scan.bifurcation_intervals:
        print(f"  t in [{lo:.4f}, {hi:.4f}]")

    _write_record(opts, argv, inputs, [out], started, out + ".run.json")
    return 0


def cmd_verify_mubs(args, argv) -> int:
    opts = _Options(args)
    bases = load_bases(args.bases)
    tol = opts.get("tol", float, DEFAULTS["verify-tol"])
    report = verify_mub_set(bases, tol)
    print(f"ok = {report.ok}")
    print(f"max_unbias_error = {report.max_unbias_error:.3e}, "
          f"max_ortho_error = {report.max_ortho_error:.3e}")
    for kind, bi, vi, bj, vj, value in report.violations[:50]:
        print(f"violation: {kind} bases[{bi}][{vi}] vs bases[{bj}][{vj}] "
              f"deviation {value:.3e}")
    if len(report.violations) > 50:
        print(f"... and {len(report.violations) - 50} more")
    return 0 if report.ok else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pauli-forge",
        description="Reconstruct pure states from eigenvalue distributions, "
                    "enumerate Pauli partners, recover MUB sets, map basins.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file (flags win)")
        p.add_argument("--threads", type=int, help="worker thread cap "
                       "(default: PAULI_FORGE_THREADS or all cores)")
        p.add_argument("--seed", type=int, help="RNG seed for random strategies")
        p.add_argument("--tol", type=float, help="convergence tolerance")
        p.add_argument("--max-iter", type=int, dest="max_iter")
        p.add_argument("--cycle-window", type=int, dest="cycle_window")
        p.add_argument("--dedup-tol", type=float, dest="dedup_tol")

    for name in ("reconstruct", "partners"):
        p = sub.add_parser(name, help="enumerate the Pauli partners of a problem")
        p.add_argument("--bases", required=True, help="JSON array of basis objects")
        p.add_argument("--generator", help="state file to synthesize targets from")
        p.add_argument("--targets", help="JSON array of probability arrays")
        p.add_argument("--strategy", help="grid:K or random:COUNT")
        p.add_argument("--out", help="output JSON (default partners.json)")
        p.add_argument("--trace", help="dump the first seed's iteration trace CSV")
        common(p)
        p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("mubs", help="reconstruct a maximal set of MUBs")
    p.add_argument("--dim", type=int, help="dimension (computational + Fourier inputs)")
    p.add_argument("--prime-power", nargs=2, type=int, metavar=("P", "R"),
                   dest="prime_power", help="dimension P**R with the tensor second basis")
    p.add_argument("--budget", type=float, help="wall-clock budget in seconds")
    p.add_argument("--strategy", help="grid:K or random:COUNT")
    p.add_argument("--out", help="output JSON (default mubs.json)")
    common(p)
    p.set_defaults(func=cmd_mubs)

    p = sub.add_parser("basin", help="map basins of attraction (dimension 3)")
    p.add_argument("--flat", action="store_true", help="flat targets over the inputs")
    p.add_argument("--generator", help="generator state file")
    p.add_argument("--bases", help="JSON array of basis objects "
                   "(default: computational + Fourier)")
    p.add_argument("--resolution", type=int, help="cells per phase axis (default 300)")
    p.add_argument("--out", help="output prefix (default 'basin')")
    common(p)
    p.set_defaults(func=cmd_basin)

    p = sub.add_parser("bifurcate", help="scan partner counts along a generator path")
    p.add_argument("--from", dest="from_state", required=True, help="start state file")
    p.add_argument("--to", dest="to_state", required=True, help="end state file")
    p.add_argument("--points", type=int, help="path points (default 50)")
    p.add_argument("--bases", help="JSON array of basis objects "
                   "(default: computational + Fourier)")
    p.add_argument("--strategy", help="grid:K or random:COUNT")
    p.add_argument("--out", help="output JSON (default bifurcation.json)")
    common(p)
    p.set_defaults(func=cmd_bifurcate)

    p = sub.add_parser("verify-mubs", help="check a basis set for mutual unbiasedness")
    p.add_argument("--bases", required=True, help="JSON array of basis objects")
    p.add_argument("--tol", type=float, help="violation threshold (default 1e-6)")
    p.add_argument("--config", help="flat key = value config file (flags win)")
    p.set_defaults(func=cmd_verify_mubs)

    return parser


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, ["pauli-forge"] + list(argv))
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
