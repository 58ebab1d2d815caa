"""Command-line interface: ``ctop gen | solve | oracle | bench | tune | plot``.

Exit codes: 0 success, 1 infeasible input (e.g. a budget that cannot even
cover the start-finish leg), 2 usage or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import ORACLE_MAX_VERTICES, aggregate, run_benchmark, write_csv
from .ga import METHODS, GaParams, solve
from .instance import InvalidParameterError, ProblemInstance, budget_for_team, build_grid_instance
from .oracle import OracleConfig, solve_exact
from .plot import render_svg
from .solution import TeamSolution
from .tuner import SPEED_EVALUATIONS, SPEED_WALL, Problem, TunerConfig, default_suite, tune

log = logging.getLogger("ctop")

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise CliError(f"cannot write {path}: {e}")


def _load_instance(path: str) -> ProblemInstance:
    try:
        return ProblemInstance.load(path)
    except FileNotFoundError:
        raise CliError(f"instance file not found: {path}")
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as e:
        raise CliError(f"cannot read instance {path}: {e}")


def _load_params(path: str | None, method: str, seed: int) -> GaParams:
    if path is None:
        return GaParams.tuned(method, seed=seed)
    try:
        d = json.loads(Path(path).read_text())
        # a tuning report carries its configuration under this key
        d = d.get("best_configuration", d)
        d.update(generation_method=method, seed=seed)
        return GaParams.from_dict(d)
    except FileNotFoundError:
        raise CliError(f"params file not found: {path}")
    except (OSError, ValueError, TypeError, json.JSONDecodeError) as e:
        raise CliError(f"invalid params file {path}: {e}")


def cmd_gen(args) -> int:
    try:
        inst = build_grid_instance(
            args.rows, args.cols, args.spacing, args.noise, args.kernel_length, args.seed,
            neighbour_radius=args.radius, squared_kernel=args.squared_kernel,
        )
    except InvalidParameterError as e:
        raise CliError(str(e))
    text = json.dumps(inst.to_dict(args.with_travel_cost), indent=1) + "\n"
    _write_text(args.output, text)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    params = _load_params(args.params, args.method, args.seed)
    try:
        budgets = budget_for_team(inst, args.robots, args.budget_frac)
    except InvalidParameterError as e:
        raise CliError(str(e))
    sol = solve(inst, budgets, params)
    d = sol.to_dict()
    if args.omit_timing:
        d.pop("wall_time_s", None)
    if not args.history:
        d.pop("best_utility_history", None)
    _write_text(args.output, json.dumps(d, indent=1) + "\n")
    if "diagnostic" in sol.extra:
        print(sol.extra["diagnostic"], file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = _load_instance(args.instance)
    n = len(inst.sampling_ids)
    if n > ORACLE_MAX_VERTICES and not args.force:
        raise CliError(f"exact search on {n} sampling vertices may run for a very long time; "
                       f"use at most {ORACLE_MAX_VERTICES} vertices, set --node-limit/--time-limit, "
                       f"or pass --force")
    try:
        budgets = budget_for_team(inst, args.robots, args.budget_frac)
        cfg = OracleConfig(args.gap, args.node_limit, args.time_limit)
    except InvalidParameterError as e:
        raise CliError(str(e))
    res = solve_exact(inst, budgets, cfg)
    _write_text(args.output, json.dumps(res.to_dict(), indent=1) + "\n")
    if "diagnostic" in res.solution.extra:
        print(res.solution.extra["diagnostic"], file=sys.stderr)
        return EXIT_INFEASIBLE
    if res.limit_reached:
        print(f"limit reached: proven gap {res.proven_gap:.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    inst = _load_instance(args.instance)
    params = None
    if args.params:
        params = _load_params(args.params, "nnrasp", 0).to_dict()
    try:
        rows = run_benchmark(inst, args.sweep, args.runs, tuple(args.methods), args.seed, args.gap,
                             params, robots=args.robots, fraction=args.budget_frac,
                             threads=args.threads, force_oracle=args.force)
    except ValueError as e:
        raise CliError(str(e))
    rows = rows + aggregate(rows)
    if args.output == "-":
        write_csv(rows, sys.stdout)
    else:
        try:
            with open(args.output, "w", newline="") as fh:
                write_csv(rows, fh)
        except OSError as e:
            raise CliError(f"cannot write {args.output}: {e}")
    return EXIT_OK


def cmd_tune(args) -> int:
    if args.instances:
        suite = []
        for spec in args.instances:
            path, _, robots = spec.partition(":")
            suite.append(Problem(_load_instance(path), int(robots or 3), args.budget_frac, path))
    else:
        sizes = tuple(args.sizes)
        suite = default_suite(args.seed, sizes=sizes, robots=tuple(args.team_sizes), fraction=args.budget_frac)
    cfg = TunerConfig(
        suite, population=args.population, max_trials=args.trials, num_games=args.games,
        generation_method=args.method, seed=args.seed, speed_measure=args.speed_measure,
    )
    report = tune(cfg)
    _write_text(args.output, json.dumps(report.to_dict(), indent=1) + "\n")
    return EXIT_OK


def cmd_plot(args) -> int:
    inst = _load_instance(args.instance)
    try:
        sol = TeamSolution.load(args.solution)
    except FileNotFoundError:
        raise CliError(f"solution file not found: {args.solution}")
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as e:
        raise CliError(f"cannot read solution {args.solution}: {e}")
    _write_text(args.output, render_svg(inst, sol, args.title))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ctop", description="Correlated team orienteering planner.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a grid or noisy-grid instance")
    g.add_argument("--rows", type=int, required=True)
    g.add_argument("--cols", type=int, required=True)
    g.add_argument("--spacing", type=float, default=1.0)
    g.add_argument("--noise", type=float, default=0.0, help="uniform noise amplitude per axis")
    g.add_argument("--kernel-length", type=float, default=1.0)
    g.add_argument("--radius", type=float, default=None, help="neighbour radius (default 1.5 x spacing)")
    g.add_argument("--squared-kernel", action="store_true", help="use exp(-d^2/2l^2)")
    g.add_argument("--with-travel-cost", action="store_true", help="store the cost matrix too")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="plan with the genetic algorithm")
    s.add_argument("-i", "--instance", required=True)
    s.add_argument("--robots", type=int, default=3)
    s.add_argument("--budget-frac", type=float, default=1.0)
    s.add_argument("--method", choices=METHODS, default="nnrasp")
    s.add_argument("--params", help="GA parameter JSON (or a tuning report)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--omit-timing", action="store_true", help="leave wall_time_s out for byte-stable output")
    s.add_argument("--history", action="store_true", help="include best utility per generation")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="exact solution by bounded enumeration (small instances)")
    o.add_argument("-i", "--instance", required=True)
    o.add_argument("--robots", type=int, default=2)
    o.add_argument("--budget-frac", type=float, default=1.0)
    o.add_argument("--gap", type=float, default=0.0)
    o.add_argument("--node-limit", type=int)
    o.add_argument("--time-limit", type=float)
    o.add_argument("--force", action="store_true")
    o.add_argument("-o", "--output", required=True)
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="robot-count or budget sweep to CSV")
    b.add_argument("-i", "--instance", required=True)
    b.add_argument("--sweep", choices=("robots", "budget"), required=True)
    b.add_argument("--runs", type=int, default=1000)
    b.add_argument("--methods", nargs="+", default=["ga-random", "ga-nnrasp"],
                   choices=("ga-random", "ga-nnrasp", "oracle"))
    b.add_argument("--robots", type=int, default=3, help="team size for the budget sweep")
    b.add_argument("--budget-frac", type=float, default=1.0, help="budget fraction for the robot sweep")
    b.add_argument("--gap", type=float, default=0.05, help="oracle stopping gap")
    b.add_argument("--params", help="GA parameter JSON used for both GA methods")
    b.add_argument("--seed", type=int, default=0, help="first seed; runs use seed..seed+runs-1")
    b.add_argument("--threads", type=int, help="worker processes (default: CTOP_THREADS or CPU count)")
    b.add_argument("--force", action="store_true", help="allow the oracle on large instances")
    b.add_argument("-o", "--output", default="-")
    b.set_defaults(func=cmd_bench)

    t = sub.add_parser("tune", help="chess-rating parameter tuning")
    t.add_argument("--instances", nargs="*", help="PATH[:ROBOTS] entries; default is the generated suite")
    t.add_argument("--sizes", type=int, nargs="+", default=[5, 7, 9])
    t.add_argument("--team-sizes", type=int, nargs="+", default=[3, 5])
    t.add_argument("--budget-frac", type=float, default=0.75)
    t.add_argument("--population", type=int, default=100)
    t.add_argument("--trials", type=int, default=10)
    t.add_argument("--games", type=int, default=10)
    t.add_argument("--method", choices=METHODS, default="nnrasp")
    t.add_argument("--speed-measure", choices=(SPEED_WALL, SPEED_EVALUATIONS), default=SPEED_WALL)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("-o", "--output", default="tuning_report.json")
    t.set_defaults(func=cmd_tune)

    p = sub.add_parser("plot", help="draw a solution as SVG")
    p.add_argument("-i", "--instance", required=True)
    p.add_argument("-s", "--solution", required=True)
    p.add_argument("--title", default="")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as e:
        print(f"ctop {args.command}: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
