"""Robot-count and budget sweeps, written as CSV rows."""

from __future__ import annotations

import csv
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from .ga import NNRASP, RANDOM, GaParams, solve
from .instance import BudgetSpec, ProblemInstance, max_single_robot_budget
from .oracle import OracleConfig, solve_exact

COLUMNS = ("scenario", "method", "robots", "budget_fraction", "seed", "utility", "wall_time_s", "feasible")
METHODS = ("ga-random", "ga-nnrasp", "oracle")
ROBOT_SWEEP = (2, 3, 4, 5)
BUDGET_SWEEP = (1.0, 0.75, 0.5, 0.25)
ORACLE_MAX_VERTICES = 20


@dataclass
class BenchmarkRow:
    scenario: str
    method: str
    robots: int
    budget_fraction: float
    seed: int | str
    utility: float
    wall_time_s: float
    feasible: bool


def scenarios(sweep: str, robots: int = 3, fraction: float = 1.0):
    """(scenario id, robots, budget fraction) for one sweep."""
    if sweep == "robots":
        return [(f"robots-{m}", m, fraction) for m in ROBOT_SWEEP]
    if sweep == "budget":
        return [(f"budget-{fr:g}", robots, fr) for fr in BUDGET_SWEEP]
    raise ValueError(f"unknown sweep {sweep!r}")


def threads_from_env() -> int:
    raw = os.environ.get("CTOP_THREADS")
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def _run_one(job):
    inst, scen, method, m, frac, budgets, seed, params, gap = job
    if method == "oracle":
        res = solve_exact(inst, budgets, OracleConfig(gap=gap))
        sol, wall = res.solution, res.wall_time_s
    else:
        sol = solve(inst, budgets, GaParams.from_dict({**params, "seed": seed}))
        wall = sol.extra["wall_time_s"]
    return BenchmarkRow(scen, method, m, frac, seed, sol.utility, max(wall, 1e-9), sol.feasible)


def run_benchmark(instance: ProblemInstance, sweep: str, runs: int, methods=("ga-random", "ga-nnrasp"),
                  base_seed: int = 0, gap: float = 0.05, params: dict | None = None,
                  robots: int = 3, fraction: float = 1.0, threads: int | None = None,
                  force_oracle: bool = False) -> list[BenchmarkRow]:
    """One row per (method, scenario, seed), ordered by method, sweep value, seed."""
    for meth in methods:
        if meth not in METHODS:
            raise ValueError(f"unknown method {meth!r}")
    if "oracle" in methods and len(instance.sampling_ids) > ORACLE_MAX_VERTICES and not force_oracle:
        raise ValueError(f"oracle refused on {len(instance.sampling_ids)} sampling vertices "
                         f"(limit {ORACLE_MAX_VERTICES}); use a smaller instance or force it")
    full = max_single_robot_budget(instance)
    jobs = []
    for meth in methods:
        if meth == "oracle":
            p = None
        else:
            gen = RANDOM if meth == "ga-random" else NNRASP
            p = GaParams.tuned(gen).to_dict() if params is None else {**params, "generation_method": gen}
        for scen, m, frac in sorted(scenarios(sweep, robots, fraction), key=lambda t: (t[1], t[2])):
            budgets = BudgetSpec.uniform(m, frac * full / m)
            for r in range(runs):
                jobs.append((instance, scen, meth, m, frac, budgets, base_seed + r, p, gap))
    threads = threads or threads_from_env()
    if threads <= 1 or len(jobs) <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(_run_one, jobs))


def aggregate(rows: list[BenchmarkRow]) -> list[BenchmarkRow]:
    """Mean and standard deviation rows per (method, scenario)."""
    groups: dict[tuple, list[BenchmarkRow]] = {}
    for r in rows:
        groups.setdefault((r.method, r.scenario, r.robots, r.budget_fraction), []).append(r)
    out = []
    for (meth, scen, m, frac), rs in groups.items():
        u = [r.utility for r in rs]
        t = [r.wall_time_s for r in rs]
        feas = all(r.feasible for r in rs)
        out.append(BenchmarkRow(scen, meth, m, frac, "mean", statistics.fmean(u), statistics.fmean(t), feas))
        sd_u = statistics.stdev(u) if len(u) > 1 else 0.0
        sd_t = statistics.stdev(t) if len(t) > 1 else 0.0
        out.append(BenchmarkRow(scen, meth, m, frac, "std", sd_u, sd_t, feas))
    return out


def write_csv(rows: list[BenchmarkRow], fh) -> None:
    w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        d = asdict(r)
        d["utility"] = repr(float(d["utility"]))
        d["wall_time_s"] = repr(float(d["wall_time_s"]))
        w.writerow(d)


def read_csv(fh) -> list[BenchmarkRow]:
    rows = []
    for d in csv.DictReader(fh):
        seed = d["seed"]
        rows.append(BenchmarkRow(
            d["scenario"], d["method"], int(d["robots"]), float(d["budget_fraction"]),
            int(seed) if seed.lstrip("-").isdigit() else seed,
            float(d["utility"]), float(d["wall_time_s"]), d["feasible"] == "True",
        ))
    return rows

