"""Genetic algorithm for the correlated team orienteering problem."""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .instance import BudgetSpec, InvalidParameterError, ProblemInstance
from .solution import (
    BUDGET_TOL,
    Chromosome,
    Gene,
    TeamSolution,
    _path_cost,
    gene_reward,
    two_opt,
)

RANDOM = "random"
NNRASP = "nnrasp"
METHODS = (RANDOM, NNRASP)

SWAP_COST_RATIO = 0.95
MIN_SAVED_COST = 1e-9
STALL_EPS = 1e-9


@dataclass
class GaParams:
    population_size: int = 250
    max_generations: int = 50
    tournament_size: int = 5
    cx_probability: float = 0.9
    mutation_probability: float = 0.7
    elite_fraction: float = 0.03
    num_mutations: int = 10
    add_probability: float = 0.9
    stall_generations: int = 10
    generation_method: str = NNRASP
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.generation_method not in METHODS:
            raise InvalidParameterError(f"generation_method must be one of {METHODS}")
        if self.population_size < 2:
            raise InvalidParameterError("population_size must be at least 2")
        if not 1 <= self.tournament_size <= self.population_size:
            raise InvalidParameterError("tournament_size must lie in [1, population_size]")
        for name in ("cx_probability", "mutation_probability", "elite_fraction", "add_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidParameterError(f"{name} must lie in [0, 1]")
        if self.max_generations < 0 or self.num_mutations < 0 or self.stall_generations < 1:
            raise InvalidParameterError("generation and mutation counts must be nonnegative")

    @classmethod
    def tuned(cls, method: str = NNRASP, **overrides) -> "GaParams":
        """Tuned settings for each population generation method."""
        if method == RANDOM:
            base = dict(population_size=300, max_generations=40, tournament_size=6,
                        cx_probability=0.7, mutation_probability=0.6, elite_fraction=0.19)
        elif method == NNRASP:
            base = dict(population_size=250, max_generations=50, tournament_size=5,
                        cx_probability=0.9, mutation_probability=0.7, elite_fraction=0.03)
        else:
            raise InvalidParameterError(f"unknown generation method {method!r}")
        base.update(generation_method=method)
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GaParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidParameterError(f"unknown GA parameters: {sorted(unknown)}")
        return cls(**d)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "GaParams":
        return cls.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# gene generation

def _random_path(inst: ProblemInstance, budget: float, avail: list[int], rng: random.Random) -> list[int]:
    d, c = inst.dist, inst.sensing
    s, f = inst.start_id, inst.finish_id
    path = [s]
    # cost so far, including the sensing cost of the current last vertex
    run = 0.0
    while avail:
        k = rng.randrange(len(avail))
        v = avail[k]
        new_run = run + d[path[-1]][v] + c[v]
        if new_run + d[v][f] <= budget + BUDGET_TOL:
            path.append(v)
            run = new_run
            avail.pop(k)
        else:
            break
    path.append(f)
    return path


def random_gene(instance: ProblemInstance, budget: float, available, rng: random.Random, robot: int = 0):
    """Grow a path from the start by uniform random draws until one does not fit."""
    avail = sorted(available)
    path = _random_path(instance, budget, avail, rng)
    g = Gene(robot, path, _path_cost(path, instance.dist, instance.sensing))
    return g, set(avail)


def _start_candidates(inst: ProblemInstance, free: set[int]) -> list[int]:
    # the depot has no correlation neighbours: offer the free vertices in the
    # band [dmin, dmin + radius] around it instead
    ds = inst.dist[inst.start_id]
    if not free:
        return []
    dmin = min(ds[v] for v in free)
    lim = dmin + inst.neighbour_radius + 1e-12
    return sorted(v for v in free if ds[v] <= lim)


def _nnrasp_path(inst: ProblemInstance, budget: float, free: set[int], rng: random.Random) -> list[int]:
    d, c = inst.dist, inst.sensing
    D = inst.travel_cost
    nbrs = inst.correlation.neighbours
    s, f = inst.start_id, inst.finish_id
    # min distance from every vertex to the vertices already taken, not counting
    # the current path end
    mind = np.full(inst.num_vertices, np.inf)
    taken = [v for v in inst.sampling_ids if v not in free]
    if taken:
        mind = D[taken].min(axis=0)
    path = [s]
    run = 0.0
    cands = _start_candidates(inst, free)
    while cands:
        if len(cands) == 1:
            nv = cands[0]
        else:
            dw = mind[cands]
            top = dw.max()
            dw = dw / top if np.isfinite(top) and top > 0 else np.ones(len(cands))
            nw = np.array([1 + sum(1 for j in nbrs[n] if j in free) for n in cands], dtype=float)
            w = dw * (nw / nw.max())
            tot = w.sum()
            if tot > 0:
                nv = rng.choices(cands, cum_weights=np.cumsum(w).tolist())[0]
            else:
                nv = cands[rng.randrange(len(cands))]
        last = path[-1]
        new_run = run + d[last][nv] + c[nv]
        if new_run + d[nv][f] > budget + BUDGET_TOL:
            break
        if last != s:
            np.minimum(mind, D[last], out=mind)
        path.append(nv)
        run = new_run
        free.discard(nv)
        cands = [j for j in nbrs[nv] if j in free]
    path.append(f)
    return path


def nnrasp_gene(instance: ProblemInstance, budget: float, available, rng: random.Random, robot: int = 0):
    """Grow a path by sampling among the free neighbours of its last vertex.

    Candidates far from already-taken vertices and with many free neighbours of
    their own are favoured.
    """
    free = set(available)
    path = _nnrasp_path(instance, budget, free, rng)
    g = Gene(robot, path, _path_cost(path, instance.dist, instance.sensing))
    return g, free


def _new_chromosome(inst: ProblemInstance, budgets: BudgetSpec, method: str, rng: random.Random) -> Chromosome:
    genes = []
    if method == RANDOM:
        avail = list(inst.sampling_ids)
        for k, b in enumerate(budgets.budgets):
            p = _random_path(inst, b, avail, rng)
            genes.append(Gene(k, p))
    else:
        free = set(inst.sampling_ids)
        for k, b in enumerate(budgets.budgets):
            p = _nnrasp_path(inst, b, free, rng)
            genes.append(Gene(k, p))
    return Chromosome(genes)


# ---------------------------------------------------------------------------
# evaluation

def _gene_fitness(reward: float, cost: float) -> float:
    return reward ** 3 / cost if cost > 0 else 0.0


def _removal_score(path, k, G, V, inst) -> tuple[float, float]:
    """(reward lost by the gene, cost saved) when removing path[k]."""
    d, c = inst.dist, inst.sensing
    a, v, b = path[k - 1], path[k], path[k + 1]
    saved = d[a][v] + d[v][b] - d[a][b] + c[v]
    return _gene_delta(v, V, G, inst), saved


def _min_loss_index(path, G, V, inst) -> int:
    best_k, best = -1, math.inf
    for k in range(1, len(path) - 1):
        lost, saved = _removal_score(path, k, G, V, inst)
        score = lost / max(saved, MIN_SAVED_COST)
        if score < best:
            best, best_k = score, k
    return best_k


def _trim_to_budget(g: Gene, budget: float, V: set[int], inst: ProblemInstance) -> None:
    G = set(g.path[1:-1])
    while g.cost > budget + BUDGET_TOL and len(g.path) > 2:
        k = _min_loss_index(g.path, G, V, inst)
        v = g.path.pop(k)
        g.settled = False
        G.discard(v)
        V.discard(v)
        g.cost = _path_cost(g.path, inst.dist, inst.sensing)


def evaluate_chromosome(chrom: Chromosome, instance: ProblemInstance, budgets: BudgetSpec) -> float:
    """2-opt each gene, drop vertices claimed by earlier genes, then score.

    Gene fitness is reward**3 / cost, where reward is the gene's share of the
    team utility; a zero-cost gene scores 0.
    """
    inst = instance
    d, c = inst.dist, inst.sensing
    seen: set[int] = set()
    for g in chrom.genes:
        p = g.path if g.settled else two_opt(g.path, inst)
        g.settled = True
        inner = p[1:-1]
        if any(v in seen for v in inner):
            p = [p[0]] + [v for v in inner if v not in seen] + [p[-1]]
            g.settled = False
        g.path = p
        g.cost = _path_cost(p, d, c)
        seen.update(p[1:-1])
        if g.cost > budgets.budgets[g.robot] + BUDGET_TOL:
            # only reachable on non-metric cost matrices
            _trim_to_budget(g, budgets.budgets[g.robot], seen, inst)
    total_fit = 0.0
    total_util = 0.0
    for g in chrom.genes:
        g.reward = gene_reward(g.path, seen, inst)
        g.fitness = _gene_fitness(g.reward, g.cost)
        total_fit += g.fitness
        total_util += g.reward
    chrom.fitness = total_fit
    chrom.utility = total_util
    return total_fit


# ---------------------------------------------------------------------------
# selection and crossover

def _n_elite(fraction: float, n: int) -> int:
    return min(n, math.ceil(fraction * n - 1e-9))


def select_population(population: list[Chromosome], params: GaParams, rng: random.Random) -> list[Chromosome]:
    """Elites first (by fitness), then tournament winners for the remaining slots."""
    n = len(population)
    order = sorted(range(n), key=lambda i: -population[i].fitness)
    n_el = _n_elite(params.elite_fraction, n)
    new = [population[i].copy() for i in order[:n_el]]
    t = params.tournament_size
    for _ in range(n - n_el):
        best = None
        for _ in range(t):
            cand = population[rng.randrange(n)]
            if best is None or cand.fitness > best.fitness:
                best = cand
        new.append(best.copy())
    return new


def _splice_out(g: Gene, drop: set[int], inst: ProblemInstance) -> bool:
    inner = g.path[1:-1]
    if not any(v in drop for v in inner):
        return False
    g.path = [g.path[0]] + [v for v in inner if v not in drop] + [g.path[-1]]
    g.settled = False
    g.cost = _path_cost(g.path, inst.dist, inst.sensing)
    return True


def _rescore(genes: list[Gene], context: set[int], stale, inst: ProblemInstance) -> None:
    for g in genes:
        if stale(g):
            vis = context.union(g.path[1:-1])
            g.reward = gene_reward(g.path, vis, inst)
            g.fitness = _gene_fitness(g.reward, g.cost)
    genes.sort(key=lambda g: -g.fitness)


def crossover(parent1: Chromosome, parent2: Chromosome, num_robots: int, rng: random.Random,
              instance: ProblemInstance, budgets: BudgetSpec) -> tuple[Chromosome, Chromosome]:
    """Build two children by repeatedly taking the best remaining gene of a random parent.

    After each pick the picked vertices are removed from every gene left in
    both working parents, which are then rescored against the child so far.
    """
    inst = instance
    nbrs = inst.correlation.neighbours
    sorted1 = sorted(parent1.genes, key=lambda g: -g.fitness)
    sorted2 = sorted(parent2.genes, key=lambda g: -g.fitness)
    children = []
    for _ in range(2):
        work = [[g.copy() for g in sorted1], [g.copy() for g in sorted2]]
        child: list[Gene] = []
        taken: set[int] = set()
        while len(child) < num_robots:
            which = rng.randrange(2)
            if not work[which]:
                which = 1 - which
            if not work[which]:
                break
            g = work[which].pop(0)
            g.robot = len(child)
            child.append(g)
            picked = set(g.path[1:-1])
            taken |= picked
            # only genes that lost vertices or border the picked ones change score
            near = {j for v in picked for j in nbrs[v]}
            first = len(child) == 1
            for side in work:
                changed = {id(h) for h in side if _splice_out(h, picked, inst)}
                _rescore(side, taken,
                         lambda h: first or id(h) in changed or any(v in near for v in h.path[1:-1]), inst)
        while len(child) < num_robots:
            child.append(Gene(len(child), [inst.start_id, inst.finish_id]))
        for g in child:
            b = budgets.budgets[g.robot]
            if g.cost > b + BUDGET_TOL:
                _trim_to_budget(g, b, taken, inst)
        ch = Chromosome(child)
        evaluate_chromosome(ch, inst, budgets)
        children.append(ch)
    return children[0], children[1]


# ---------------------------------------------------------------------------
# mutation

def _gene_delta(v: int, V: set[int], G: set[int], inst: ProblemInstance) -> float:
    """Gene reward gained by taking free vertex v, or lost by dropping its vertex v.

    Both directions share one expression: v's own reward and bonus, minus the
    bonus that gene members adjacent to v draw from v while it is unvisited.
    """
    g = inst.rewards[v]
    for j, rw in inst.bonus_out[v]:
        if j not in V:
            g += rw
    for i, lw in inst.loss_in[v]:
        if i in G:
            g -= lw
    return g


def _swap_delta(v: int, n: int, V: set[int], G: set[int], inst: ProblemInstance) -> float:
    """Change in gene reward when its vertex v is replaced by the free vertex n."""
    lost = _gene_delta(v, V, G, inst)
    gain = inst.rewards[n]
    for j, rw in inst.bonus_out[n]:
        if j == v or j not in V:
            gain += rw
    for i, lw in inst.loss_in[n]:
        if i != v and i in G:
            gain -= lw
    return gain - lost


def _mutate_gene(g: Gene, budget: float, V: set[int], params: GaParams,
                 inst: ProblemInstance, rng: random.Random) -> None:
    d, c = inst.dist, inst.sensing
    nbrs = inst.correlation.neighbours
    sampling = inst.sampling_ids
    path = g.path
    before = path[:]
    G = set(path[1:-1])
    reward = gene_reward(path, V, inst)
    cost = g.cost
    for _ in range(params.num_mutations):
        if rng.random() <= params.add_probability:
            if cost >= SWAP_COST_RATIO * budget:
                if len(path) <= 2:
                    continue
                k = rng.randrange(1, len(path) - 1)
                v = path[k]
                a, b = path[k - 1], path[k + 1]
                base = d[a][v] + d[v][b] + c[v]
                cur_fit = _gene_fitness(reward, cost)
                best = None
                for n in nbrs[v]:
                    if n in V:
                        continue
                    new_cost = cost - base + d[a][n] + d[n][b] + c[n]
                    if new_cost > budget + BUDGET_TOL:
                        continue
                    new_reward = reward + _swap_delta(v, n, V, G, inst)
                    fit = _gene_fitness(new_reward, new_cost)
                    if best is None or fit > best[0]:
                        best = (fit, n, new_cost, new_reward)
                if best is not None and cur_fit <= best[0]:
                    _, n, cost, reward = best
                    path[k] = n
                    G.discard(v)
                    V.discard(v)
                    G.add(n)
                    V.add(n)
            else:
                free = [u for u in sampling if u not in V]
                if not free:
                    continue
                v = free[rng.randrange(len(free))]
                cv = c[v]
                best_k, best_inc = -1, math.inf
                for k in range(1, len(path)):
                    a, b = path[k - 1], path[k]
                    inc = d[a][v] + d[v][b] - d[a][b] + cv
                    if inc < best_inc:
                        best_inc, best_k = inc, k
                if cost + best_inc <= budget + BUDGET_TOL:
                    reward += _gene_delta(v, V, G, inst)
                    path.insert(best_k, v)
                    cost += best_inc
                    G.add(v)
                    V.add(v)
        else:
            if len(path) <= 2:
                continue
            k = _min_loss_index(path, G, V, inst)
            v = path[k]
            reward -= _gene_delta(v, V, G, inst)
            a, b = path[k - 1], path[k + 1]
            cost -= d[a][v] + d[v][b] - d[a][b] + c[v]
            path.pop(k)
            G.discard(v)
            V.discard(v)
    if path != before:
        g.settled = False
    g.cost = _path_cost(path, d, c)


def mutate(chromosome: Chromosome, instance: ProblemInstance, budgets: BudgetSpec,
           params: GaParams, rng: random.Random) -> Chromosome:
    """Add / swap / remove moves on every gene, then re-evaluate (in place)."""
    V = chromosome.visited()
    for g in chromosome.genes:
        _mutate_gene(g, budgets.budgets[g.robot], V, params, instance, rng)
    evaluate_chromosome(chromosome, instance, budgets)
    return chromosome


# ---------------------------------------------------------------------------
# main loop

def init_population(instance: ProblemInstance, budgets: BudgetSpec, params: GaParams,
                    rng: random.Random) -> list[Chromosome]:
    pop = []
    for _ in range(params.population_size):
        ch = _new_chromosome(instance, budgets, params.generation_method, rng)
        evaluate_chromosome(ch, instance, budgets)
        pop.append(ch)
    return pop


def solve(instance: ProblemInstance, budgets: BudgetSpec, params: GaParams | None = None) -> TeamSolution:
    """Run the GA and return the best-utility plan seen in any generation."""
    params = params or GaParams.tuned()
    t0 = time.perf_counter()
    inst = instance
    s, f = inst.start_id, inst.finish_id
    if any(b < inst.dist[s][f] - BUDGET_TOL for b in budgets.budgets):
        sol = TeamSolution.empty(inst, budgets, generations_run=0, seed=params.seed,
                                 diagnostic="budget below start-finish travel cost")
        sol.extra["wall_time_s"] = time.perf_counter() - t0
        return sol

    rng = random.Random(params.seed)
    m = budgets.num_robots
    pop = init_population(inst, budgets, params, rng)
    evaluations = len(pop)
    best = max(pop, key=lambda ch: ch.utility).copy()
    history = [best.utility]
    gen = 0
    stall = 0
    n_el = _n_elite(params.elite_fraction, len(pop))
    while gen < params.max_generations and stall < params.stall_generations:
        pop = select_population(pop, params, rng)
        rest = list(range(n_el, len(pop)))
        rng.shuffle(rest)
        for a, b in zip(rest[0::2], rest[1::2]):
            if rng.random() < params.cx_probability:
                pop[a], pop[b] = crossover(pop[a], pop[b], m, rng, inst, budgets)
                evaluations += 2
        for i in range(n_el, len(pop)):
            if rng.random() < params.mutation_probability:
                mutate(pop[i], inst, budgets, params, rng)
                evaluations += 1
        gen += 1
        leader = max(pop, key=lambda ch: ch.utility)
        if leader.utility > best.utility + STALL_EPS:
            best = leader.copy()
            stall = 0
        else:
            stall += 1
        history.append(best.utility)

    wall = time.perf_counter() - t0
    return TeamSolution.from_paths(
        best.paths, inst, budgets,
        generations_run=gen, wall_time_s=wall, seed=params.seed,
        evaluations=evaluations, fitness=best.fitness, best_utility_history=history,
    )
