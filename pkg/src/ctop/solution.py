"""Paths, team solutions, the CTOP objective and constraint checking."""

from __future__ import annotations

import json
from functools import lru_cache
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .instance import BudgetSpec, ProblemInstance

IMPROVEMENT_EPS = 1e-9
BUDGET_TOL = 1e-9
# below this many interior vertices the pure-Python 2-opt scan beats numpy
_VECTOR_TWO_OPT_MIN = 8


class InvalidInputError(ValueError):
    pass


def path_cost(path, instance: ProblemInstance) -> float:
    """Travel plus sensing cost: sum over legs (i, j) of c_ij + c_i."""
    if len(path) < 2:
        raise InvalidInputError("a path needs at least a start and a finish vertex")
    n = instance.num_vertices
    for v in path:
        if not (isinstance(v, (int, np.integer)) and 0 <= v < n):
            raise InvalidInputError(f"unknown vertex id {v!r}")
    return _path_cost(path, instance.dist, instance.sensing)


def _path_cost(path, d, c) -> float:
    total = 0.0
    prev = path[0]
    for v in path[1:]:
        total += d[prev][v] + c[prev]
        prev = v
    return total


def visited_set(paths, instance: ProblemInstance) -> set[int]:
    depots = (instance.start_id, instance.finish_id)
    return {v for p in paths for v in p if v not in depots}


def team_utility(paths, instance: ProblemInstance) -> float:
    """Collected reward plus correlated reward from unvisited neighbours."""
    depots = (instance.start_id, instance.finish_id)
    seen: set[int] = set()
    for p in paths:
        for v in p[1:-1]:
            if v in depots:
                continue
            if v in seen:
                raise InvalidInputError(f"vertex {v} is visited more than once")
            seen.add(v)
    return utility_of_set(seen, instance)


def utility_of_set(visited, instance: ProblemInstance) -> float:
    r = instance.rewards
    bonus = instance.bonus_out
    total = 0.0
    for i in sorted(visited):
        total += r[i]
        for j, rw in bonus[i]:
            if j not in visited:
                total += rw
    return total


def vertex_bonus(v: int, visited, instance: ProblemInstance) -> float:
    """Correlated reward v collects from its currently unvisited neighbours."""
    return sum(rw for j, rw in instance.bonus_out[v] if j not in visited)


def marginal_gain(v: int, visited, instance: ProblemInstance) -> float:
    """Change in team utility from visiting v (v not in ``visited``).

    Also equals the utility lost when removing v, evaluated with v excluded.
    """
    g = instance.rewards[v]
    for j, rw in instance.bonus_out[v]:
        if j not in visited:
            g += rw
    for i, lw in instance.loss_in[v]:
        if i in visited:
            g -= lw
    return g


def gene_reward(path, visited, instance: ProblemInstance) -> float:
    """Share of the team utility earned by the interior vertices of ``path``."""
    r = instance.rewards
    bonus = instance.bonus_out
    total = 0.0
    for i in path[1:-1]:
        total += r[i]
        for j, rw in bonus[i]:
            if j not in visited:
                total += rw
    return total


@dataclass
class FeasibilityReport:
    feasible: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.feasible


def check_feasibility(paths, instance: ProblemInstance, budgets: BudgetSpec) -> FeasibilityReport:
    """Check every team-plan constraint; violations come back as data.

    Identifiers: ``robot-count``, ``start(k)``, ``finish(k)``, ``unknown-vertex(v)``,
    ``depot-interior(k)``, ``repeat(k,v)``, ``duplicate-visit(v)``, ``budget(k)``.
    Subtours and cross-robot hand-offs cannot be expressed by a path list, so
    those constraints hold by construction once the checks above pass.
    """
    out: list[str] = []
    if len(paths) != budgets.num_robots:
        out.append("robot-count")
    n = instance.num_vertices
    s, f = instance.start_id, instance.finish_id
    owner: dict[int, int] = {}
    dupes: set[int] = set()
    for k, p in enumerate(paths):
        p = list(p)
        if len(p) < 2 or p[0] != s:
            out.append(f"start({k})")
        if len(p) < 2 or p[-1] != f:
            out.append(f"finish({k})")
        bad = [v for v in p if not (isinstance(v, (int, np.integer)) and 0 <= v < n)]
        if bad:
            out.extend(f"unknown-vertex({v})" for v in bad)
            continue
        inner = p[1:-1]
        if any(v in (s, f) for v in inner):
            out.append(f"depot-interior({k})")
        local: set[int] = set()
        for v in inner:
            if v in (s, f):
                continue
            if v in local:
                out.append(f"repeat({k},{v})")
                continue
            local.add(v)
            if v in owner:
                dupes.add(v)
            else:
                owner[v] = k
        if len(p) >= 2 and k < budgets.num_robots:
            if _path_cost(p, instance.dist, instance.sensing) > budgets.budgets[k] + BUDGET_TOL:
                out.append(f"budget({k})")
    out.extend(f"duplicate-visit({v})" for v in sorted(dupes))
    return FeasibilityReport(not out, out)


def two_opt(path, instance: ProblemInstance) -> list[int]:
    """Reverse interior segments while any reversal shortens the path.

    First improvement over (i, j) in lexicographic order, rescanning from the
    top after every accepted move. Endpoints stay fixed.
    """
    p = list(path)
    if len(p) - 2 < 2:
        return p
    if len(p) - 2 < _VECTOR_TWO_OPT_MIN:
        return _two_opt_scalar(p, instance.dist)
    return _two_opt_numpy(p, instance.travel_cost)


def _two_opt_scalar(p, d):
    last = len(p) - 2
    improved = True
    while improved:
        improved = False
        for i in range(1, last):
            a, b = p[i - 1], p[i]
            dab = d[a][b]
            da = d[a]
            db = d[b]
            for j in range(i + 1, last + 1):
                c, e = p[j], p[j + 1]
                if da[c] + db[e] - dab - d[c][e] < -IMPROVEMENT_EPS:
                    p[i:j + 1] = p[i:j + 1][::-1]
                    improved = True
                    break
            if improved:
                break
    return p


@lru_cache(maxsize=None)
def _upper_mask(m: int) -> np.ndarray:
    return np.triu(np.ones((m, m), dtype=bool), k=1)


def _two_opt_numpy(p, D):
    arr = np.array(p)
    m = len(arr) - 2
    upper = _upper_mask(m)
    while True:
        prev, cur, nxt = arr[:-2], arr[1:-1], arr[2:]
        # delta[i, j]: reverse cur[i..j] -> edges (prev[i], cur[j]) and (cur[i], nxt[j])
        delta = (D[prev[:, None], cur[None, :]] + D[cur[:, None], nxt[None, :]]
                 - D[prev, cur][:, None] - D[cur, nxt][None, :])
        hits = np.flatnonzero((delta < -IMPROVEMENT_EPS) & upper)
        if hits.size == 0:
            return arr.tolist()
        i, j = divmod(int(hits[0]), m)
        arr[i + 1:j + 2] = arr[i + 1:j + 2][::-1].copy()


@dataclass
class TeamSolution:
    paths: list[list[int]]
    utility: float
    per_robot_cost: list[float]
    feasible: bool
    violations: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_paths(cls, paths, instance: ProblemInstance, budgets: BudgetSpec, **extra) -> "TeamSolution":
        paths = [[int(v) for v in p] for p in paths]
        report = check_feasibility(paths, instance, budgets)
        try:
            util = team_utility(paths, instance)
        except InvalidInputError:
            util = utility_of_set(visited_set(paths, instance), instance)
        costs = [_path_cost(p, instance.dist, instance.sensing) if len(p) >= 2 else 0.0 for p in paths]
        return cls(paths, util, costs, report.feasible, report.violations, dict(extra))

    @classmethod
    def empty(cls, instance: ProblemInstance, budgets: BudgetSpec, **extra) -> "TeamSolution":
        paths = [[instance.start_id, instance.finish_id] for _ in range(budgets.num_robots)]
        return cls.from_paths(paths, instance, budgets, **extra)

    def to_dict(self) -> dict:
        d = {
            "paths": self.paths,
            "utility": self.utility,
            "per_robot_cost": self.per_robot_cost,
            "feasible": self.feasible,
            "violations": self.violations,
        }
        d.update(self.extra)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TeamSolution":
        core = {"paths", "utility", "per_robot_cost", "feasible", "violations"}
        return cls(
            [list(map(int, p)) for p in d["paths"]], float(d["utility"]),
            [float(c) for c in d["per_robot_cost"]], bool(d["feasible"]),
            list(d.get("violations", [])), {k: v for k, v in d.items() if k not in core},
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "TeamSolution":
        return cls.from_dict(json.loads(Path(path).read_text()))


class Gene:
    """One robot's path with cached cost and fitness.

    ``settled`` marks a path that is already 2-opt stable; anything that edits
    ``path`` must clear it.
    """

    __slots__ = ("robot", "path", "cost", "fitness", "reward", "settled")

    def __init__(self, robot: int, path: list[int], cost: float = 0.0, fitness: float = 0.0,
                 reward: float = 0.0, settled: bool = False):
        self.robot = robot
        self.path = path
        self.cost = cost
        self.fitness = fitness
        self.reward = reward
        self.settled = settled

    @property
    def interior(self) -> list[int]:
        return self.path[1:-1]

    def copy(self) -> "Gene":
        return Gene(self.robot, self.path[:], self.cost, self.fitness, self.reward, self.settled)

    def __repr__(self):
        return f"Gene(robot={self.robot}, path={self.path}, cost={self.cost:.4g}, fitness={self.fitness:.4g})"


class Chromosome:
    """A team plan: one gene per robot, plus cached fitness and utility."""

    __slots__ = ("genes", "fitness", "utility")

    def __init__(self, genes: list[Gene], fitness: float = 0.0, utility: float = 0.0):
        self.genes = genes
        self.fitness = fitness
        self.utility = utility

    @property
    def paths(self) -> list[list[int]]:
        return [g.path for g in self.genes]

    def visited(self) -> set[int]:
        return {v for g in self.genes for v in g.path[1:-1]}

    def copy(self) -> "Chromosome":
        return Chromosome([g.copy() for g in self.genes], self.fitness, self.utility)

    def __repr__(self):
        return f"Chromosome(fitness={self.fitness:.4g}, utility={self.utility:.4g}, paths={self.paths})"
