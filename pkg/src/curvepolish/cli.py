"""Command line: ``curvepolish {funcs,elites,polish,bench,curve} ...``.

Exit codes: 0 success, 1 partial failures, 2 invalid configuration.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path


from . import funcs
from .bench import OUTPUT_ENV, BenchConfig, run_benchmark
from .curve_gen import generate_multipoint_curve, generate_propeller_curve
from .elites import EliteGenConfig, EliteGenerationError, generate_elite_solutions, load_elites
from .line_walker import write_walk_log
from .polish import STRATEGIES, PolishConfig, default_n_between, polish
from .qp_curve import Box, PinSchedule, QpSettings, solve_curve_qp, write_curve_csv

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2

EXAMPLE_PINS = [(0, 0), (3, 1), (0, 0), (3, 3), (0, 0)]


class ConfigError(Exception):
    pass


def _cmd_funcs_list(args):
    sys.stdout.write(funcs.list_csv(args.dims))
    return EXIT_OK


def _cmd_funcs_verify(args):
    report = funcs.verify_registry()
    for name, d, check, expected, got, ok in report.rows:
        if args.verbose or not ok:
            print(f"{'ok  ' if ok else 'FAIL'} {name:<26} D={d:<2} {check:<9} {expected:.10g} {got:.10g}")
    print("registry verified" if report.ok else f"{len(report.failures())} checks failed")
    return EXIT_OK if report.ok else EXIT_PARTIAL


def _get_function(name, dim):
    try:
        return funcs.get(name, dim)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_elites(args):
    f = _get_function(args.function, args.dim)
    try:
        cfg = EliteGenConfig(
            K=args.K, seed=args.seed, solver=args.solver, method=args.method,
            grid_resolution=args.grid_resolution,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        run = generate_elite_solutions(f, cfg)
    except EliteGenerationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    run.save(args.out)
    print(f"{len(run.elites)} elites for {f.name} D={f.dimension}, {run.evaluations} evaluations -> {args.out}")
    return EXIT_OK


def _cmd_polish(args):
    elites, meta = load_elites(args.elites)
    f = _get_function(meta["function"], int(meta["dimension"]))
    try:
        cfg = PolishConfig(strategy=args.strategy, fval_max=args.fval_max, seed=args.seed, n_between=args.n_between)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    t0 = time.perf_counter()
    out = polish(elites, cfg, f)
    artifacts = []
    if args.dump_dir:
        dump = Path(args.dump_dir)
        dump.mkdir(parents=True, exist_ok=True)
        for k, grid in enumerate(out.curves):
            path = dump / f"{args.strategy}_curve_{k}.csv"
            write_curve_csv(grid, path)
            artifacts.append(str(path))
        for k, entries in enumerate(out.walk_logs):
            path = dump / f"{args.strategy}_walk_{k}.csv"
            _write_log(entries, path)
            artifacts.append(str(path))
    record = {
        "function": f.name,
        "D": f.dimension,
        "strategy": args.strategy,
        "seed": args.seed,
        "f_before": out.f_before,
        "f_after": out.f_after,
        "f_true": f.f_true,
        "evals_used": out.evaluations_used,
        "elapsed": time.perf_counter() - t0,
        "artifacts": artifacts,
    }
    text = json.dumps(record, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def _write_log(entries, path):
    class _R:  # write_walk_log only needs .log
        log = entries

    write_walk_log(_R, path)


def _cmd_bench(args):
    try:
        if args.config:
            cfg = BenchConfig.from_file(args.config)
        else:
            cfg = BenchConfig()
        overrides = {
            "functions": args.functions, "dimensions": args.dims, "seeds": args.seeds,
            "strategies": args.strategies, "output_dir": args.out, "workers": args.workers,
        }
        data = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
        data.update({k: v for k, v in overrides.items() if v is not None})
        cfg = BenchConfig.from_dict(data)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    records, _ = run_benchmark(cfg)
    failed = sum(r.error is not None for r in records)
    print(f"{len(records)} runs, {failed} failed -> {cfg.resolved_output_dir()}")
    return EXIT_PARTIAL if failed else EXIT_OK


def _cmd_curve(args):
    qp = QpSettings(length_penalty=args.length_penalty)
    if args.kind == "example":
        box = Box.cube(-10, 10, 2)
        grid = solve_curve_qp(PinSchedule.equally_spaced(EXAMPLE_PINS, args.points - 1), box, qp)
    else:
        if not args.elites:
            raise ConfigError("--elites is required for multipoint and propeller curves")
        elites, meta = load_elites(args.elites)
        f = _get_function(meta["function"], int(meta["dimension"]))
        n = args.n_between or default_n_between(args.kind, len(elites), f.dimension)
        if args.kind == "multipoint":
            grid = generate_multipoint_curve(elites, n, f.box, qp)
        else:
            grid = generate_propeller_curve(elites.best, n, f.box, qp)
    write_curve_csv(grid, args.out)
    print(f"{len(grid)} points -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvepolish", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="group", required=True)

    g = sub.add_parser("funcs").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("list", help="name, D, bounds and optimum as CSV")
    c.add_argument("--dims", type=int, nargs="+", default=[2, 4, 8, 16])
    c.set_defaults(func=_cmd_funcs_list)
    c = g.add_parser("verify", help="check optima at known minimizers")
    c.set_defaults(func=_cmd_funcs_verify)

    g = sub.add_parser("elites").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("generate")
    c.add_argument("--function", required=True)
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--K", type=int, default=5)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--solver", choices=["pso", "pattern"], default="pso")
    c.add_argument("--method", choices=["multistart", "swarm"], default="multistart")
    c.add_argument("--grid-resolution", type=int, default=3201)
    c.add_argument("--out", required=True)
    c.set_defaults(func=_cmd_elites)

    g = sub.add_parser("polish").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("run")
    c.add_argument("--elites", required=True, help="JSON written by 'elites generate'")
    c.add_argument("--strategy", choices=STRATEGIES, required=True)
    c.add_argument("--fval-max", type=int, default=290)
    c.add_argument("--n-between", type=int)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.add_argument("--dump-dir", help="write curve and walk-log CSVs here")
    c.set_defaults(func=_cmd_polish)

    g = sub.add_parser("bench").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("sweep")
    c.add_argument("--config", help="JSON file with BenchConfig fields")
    c.add_argument("--functions", nargs="+")
    c.add_argument("--dims", type=int, nargs="+")
    c.add_argument("--seeds", type=int)
    c.add_argument("--strategies", nargs="+")
    c.add_argument("--workers", type=int)
    c.add_argument("--out", help=f"output directory (overridden by ${OUTPUT_ENV})")
    c.set_defaults(func=_cmd_bench)

    g = sub.add_parser("curve").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("dump")
    c.add_argument("--kind", choices=["example", "multipoint", "propeller"], default="example")
    c.add_argument("--points", type=int, default=300, help="grid size for --kind example")
    c.add_argument("--elites")
    c.add_argument("--n-between", type=int)
    c.add_argument("--length-penalty", type=float, default=1e-3)
    c.add_argument("--out", required=True)
    c.set_defaults(func=_cmd_curve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
