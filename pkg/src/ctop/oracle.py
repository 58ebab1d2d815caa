"""Exact CTOP solver for small instances: depth-first enumeration with bounding.

Robots are planned one after another. Every search node is itself a complete
plan (close the current path, leave later robots idle), so the incumbent is
updated at every node. A node is cut when its optimistic bound cannot beat
the incumbent by more than the requested gap.

Bound admissibility: adding a set S of vertices to a visited set V changes
the utility by at most sum over v in S of (r_v + sum_{j in N_v} r_j w_vj),
because the only negative terms are bonuses lost by already-visited
neighbours. Summing that per-vertex ceiling over every free vertex that some
robot could still reach therefore never underestimates what a subtree holds.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .instance import BudgetSpec, InvalidParameterError, ProblemInstance
from .solution import BUDGET_TOL, TeamSolution

_EPS = 1e-12


@dataclass
class OracleConfig:
    gap: float = 0.0
    node_limit: int | None = None
    time_limit: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.gap < 1.0:
            raise InvalidParameterError("gap must lie in [0, 1)")


@dataclass
class OracleResult:
    solution: TeamSolution
    bound: float
    proven_gap: float
    nodes_expanded: int
    wall_time_s: float
    limit_reached: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def utility(self) -> float:
        return self.solution.utility

    def to_dict(self) -> dict:
        d = self.solution.to_dict()
        d.update(bound=self.bound, proven_gap=self.proven_gap, nodes_expanded=self.nodes_expanded,
                 wall_time_s=self.wall_time_s, limit_reached=self.limit_reached)
        return d


class _Stop(Exception):
    pass


def solve_exact(instance: ProblemInstance, budgets: BudgetSpec, config: OracleConfig | None = None) -> OracleResult:
    config = config or OracleConfig()
    t0 = time.perf_counter()
    inst = instance
    d, c, r = inst.dist, inst.sensing, inst.rewards
    bonus_out, loss_in = inst.bonus_out, inst.loss_in
    s, f = inst.start_id, inst.finish_id
    B = budgets.budgets
    m = budgets.num_robots
    sampling = inst.sampling_ids
    metric = inst.is_metric()
    keep = 1.0 - config.gap

    ceiling = {v: r[v] + sum(rw for _, rw in bonus_out[v]) for v in sampling}
    # best budget left to any later robot, for the reachability test
    later_max = [max(B[k + 1:], default=-math.inf) for k in range(m)]
    solo = {v: d[s][v] + c[v] + d[v][f] for v in sampling}

    if any(b < d[s][f] - BUDGET_TOL for b in B):
        sol = TeamSolution.empty(inst, budgets, diagnostic="budget below start-finish travel cost")
        return OracleResult(sol, 0.0, 0.0, 0, time.perf_counter() - t0)

    state = {
        "best": 0.0,
        "best_paths": [[s, f] for _ in range(m)],
        "pruned_max": 0.0,
        "open_max": 0.0,
        "nodes": 0,
        "stopped": False,
    }
    visited: set[int] = set()
    paths: list[list[int]] = [[s] for _ in range(m)]

    def gain(v):
        g = r[v]
        for j, rw in bonus_out[v]:
            if j not in visited:
                g += rw
        for i, lw in loss_in[v]:
            if i in visited:
                g -= lw
        return g

    def bound_of(k, last, run, util):
        total = util
        for v in sampling:
            if v in visited:
                continue
            if metric:
                ok = run + d[last][v] + c[v] + d[v][f] <= B[k] + BUDGET_TOL or solo[v] <= later_max[k] + BUDGET_TOL
                if not ok:
                    continue
            total += ceiling[v]
        return total

    def record(util):
        if util > state["best"]:
            state["best"] = util
            state["best_paths"] = [p + [f] for p in paths]

    def check_limits():
        if config.node_limit is not None and state["nodes"] >= config.node_limit:
            raise _Stop
        if config.time_limit is not None and time.perf_counter() - t0 >= config.time_limit:
            raise _Stop

    def children(k, run, util):
        """(bound, kind, payload) for every move out of the current node."""
        path = paths[k]
        last = path[-1]
        out = []
        lower = None
        if len(path) == 1 and k > 0 and B[k] == B[k - 1]:
            prev = paths[k - 1]
            # interchangeable robots: first vertices strictly increase, idle robots go last
            lower = prev[1] if len(prev) > 1 else math.inf
        for v in sampling:
            if v in visited:
                continue
            if lower is not None and not v > lower:
                continue
            new_run = run + d[last][v] + c[v]
            if new_run + d[v][f] > B[k] + BUDGET_TOL:
                continue
            g = gain(v)
            visited.add(v)
            b = bound_of(k, v, new_run, util + g)
            visited.discard(v)
            out.append((b, 0, v, new_run, util + g))
        if k + 1 < m:
            out.append((bound_of(k + 1, s, 0.0, util), 1, None, 0.0, util))
        out.sort(key=lambda t: (-t[0], t[1], -1 if t[2] is None else t[2]))
        return out

    def dfs(k, run, util, node_bound):
        state["nodes"] += 1
        record(util)
        try:
            check_limits()
        except _Stop:
            state["open_max"] = max(state["open_max"], node_bound)
            raise
        kids = children(k, run, util)
        for idx, (b, kind, v, new_run, new_util) in enumerate(kids):
            if b * keep <= state["best"] + _EPS:
                state["pruned_max"] = max(state["pruned_max"], b)
                continue
            try:
                if kind == 0:
                    paths[k].append(v)
                    visited.add(v)
                    try:
                        dfs(k, new_run, new_util, b)
                    finally:
                        visited.discard(v)
                        paths[k].pop()
                else:
                    dfs(k + 1, 0.0, new_util, b)
            except _Stop:
                rest = [t[0] for t in kids[idx + 1:]]
                state["open_max"] = max([state["open_max"], *rest])
                raise

    root_bound = bound_of(0, s, 0.0, 0.0)
    try:
        dfs(0, 0.0, 0.0, root_bound)
    except _Stop:
        state["stopped"] = True

    sol = TeamSolution.from_paths(state["best_paths"], inst, budgets)
    incumbent = sol.utility
    # everything not searched was cut (pruned_max) or left open by a limit (open_max)
    bound = max(incumbent, state["pruned_max"], state["open_max"])
    gap = (bound - incumbent) / bound if bound > 0 else 0.0
    wall = time.perf_counter() - t0
    sol.extra.update(bound=bound, proven_gap=gap, nodes_expanded=state["nodes"], wall_time_s=wall)
    return OracleResult(sol, bound, gap, state["nodes"], wall, state["stopped"])
