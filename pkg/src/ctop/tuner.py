"""Chess-rating tuning of GA parameters.

Parameter sets play each other on a suite of problems; game outcomes feed a
Glicko-2 rating, the best-rated sets become parents, and the rest of the next
population is bred from them by uniform crossover and single-knob mutation.
"""

from __future__ import annotations

import json
import logging
import random
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ga import NNRASP, GaParams, solve
from .glicko2 import Glicko2State, update
from .instance import BudgetSpec, ProblemInstance, budget_for_team, build_grid_instance

log = logging.getLogger(__name__)

PARAM_GRID: dict[str, tuple] = {
    "population_size": tuple(range(25, 501, 25)),
    "max_generations": tuple(range(5, 51, 5)),
    "tournament_size": tuple(range(3, 11)),
    "cx_probability": tuple(round(0.1 * i, 1) for i in range(10)),
    "mutation_probability": tuple(round(0.1 * i, 1) for i in range(10)),
    "elite_fraction": tuple(round(0.01 * i, 2) for i in range(1, 21)),
}
KNOBS = tuple(PARAM_GRID)

SPEED_WALL = "wall"
SPEED_EVALUATIONS = "evaluations"


def random_config(rng: random.Random) -> dict:
    return {k: rng.choice(PARAM_GRID[k]) for k in KNOBS}


def on_grid(config: dict) -> bool:
    return set(config) == set(KNOBS) and all(config[k] in PARAM_GRID[k] for k in KNOBS)


def to_params(config: dict, method: str = NNRASP, seed: int = 0) -> GaParams:
    return GaParams(generation_method=method, seed=seed, **config)


@dataclass
class Problem:
    instance: ProblemInstance
    robots: int
    budget_fraction: float = 0.75
    name: str = ""
    _budgets: BudgetSpec | None = field(default=None, repr=False)

    @property
    def budgets(self) -> BudgetSpec:
        if self._budgets is None:
            self._budgets = budget_for_team(self.instance, self.robots, self.budget_fraction)
        return self._budgets


def default_suite(seed: int = 0, sizes=(5, 7, 9), robots=(3, 5), fraction: float = 0.75) -> list[Problem]:
    """The twelve-problem suite: sizes x {grid, noisy grid} x team sizes."""
    suite = []
    for n in sizes:
        for noisy in (False, True):
            inst = build_grid_instance(n, n, noise_amplitude=0.3 if noisy else 0.0, seed=seed)
            for m in robots:
                kind = "noisy" if noisy else "grid"
                suite.append(Problem(inst, m, fraction, f"{n}x{n}-{kind}-m{m}"))
    return suite


@dataclass
class TunerConfig:
    problem_suite: list[Problem]
    population: int = 100
    max_trials: int = 10
    num_games: int = 10
    speed_bonus: float = 0.1
    parent_uniform_cx_prob: float = 0.5
    parent_mutation_prob: float = 0.8
    tau: float = 0.5
    generation_method: str = NNRASP
    seed: int = 0
    # "wall" compares measured GA run time; "evaluations" compares the GA's
    # chromosome-evaluation count, which keeps a run bit-reproducible
    speed_measure: str = SPEED_WALL
    num_leaders: int = 10

    def __post_init__(self):
        if not self.problem_suite:
            raise ValueError("problem suite must not be empty")
        for name in ("parent_uniform_cx_prob", "parent_mutation_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if self.speed_measure not in (SPEED_WALL, SPEED_EVALUATIONS):
            raise ValueError(f"unknown speed measure {self.speed_measure!r}")


@dataclass
class ScoreTable:
    """Per (config, problem, game) results; arrays of shape (C, P, G)."""

    utility: np.ndarray
    wall_time: np.ndarray
    effort: np.ndarray

    def speed(self, measure: str) -> np.ndarray:
        return self.wall_time if measure == SPEED_WALL else self.effort


def game_seed(master: int, trial: int, config: int, problem: int, game: int) -> int:
    ss = np.random.SeedSequence([master, trial, config, problem, game])
    return int(ss.generate_state(1)[0])


def play_games(configs: list[dict], suite: list[Problem], num_games: int, method: str = NNRASP,
               master_seed: int = 0, trial: int = 0) -> ScoreTable:
    shape = (len(configs), len(suite), num_games)
    util = np.zeros(shape)
    wall = np.zeros(shape)
    effort = np.zeros(shape)
    for ci, cfg in enumerate(configs):
        for pi, prob in enumerate(suite):
            for g in range(num_games):
                params = to_params(cfg, method, game_seed(master_seed, trial, ci, pi, g))
                t0 = time.perf_counter()
                try:
                    sol = solve(prob.instance, prob.budgets, params)
                    util[ci, pi, g] = sol.utility if sol.feasible else 0.0
                    effort[ci, pi, g] = sol.extra.get("evaluations", 0)
                except Exception:  # a crashed game scores zero instead of ending the trial
                    log.exception("GA run failed (config %d, problem %d, game %d)", ci, pi, g)
                wall[ci, pi, g] = time.perf_counter() - t0
    return ScoreTable(util, wall, effort)


def game_score(util_a: float, util_b: float, speed_a: float, speed_b: float, bonus: float = 0.1,
               tie_tol: float = 1e-9) -> float:
    """Score of A against B: win/draw/loss on utility, +-bonus for speed, clamped to [0, 1]."""
    if util_a > util_b + tie_tol:
        s = 1.0
    elif util_b > util_a + tie_tol:
        s = 0.0
    else:
        s = 0.5
    if speed_a < speed_b:
        s += bonus
    elif speed_a > speed_b:
        s -= bonus
    return min(1.0, max(0.0, s))


def rate_configurations(table: ScoreTable, states: list[Glicko2State], speed_bonus: float = 0.1,
                        tau: float = 0.5, speed_measure: str = SPEED_WALL) -> list[Glicko2State]:
    """One Glicko-2 rating period covering every pairwise game in ``table``."""
    util = table.utility
    speed = table.speed(speed_measure)
    n = len(states)
    new = []
    for a in range(n):
        results = []
        for b in range(n):
            if a == b:
                continue
            opp = states[b]
            for p in range(util.shape[1]):
                for g in range(util.shape[2]):
                    s = game_score(util[a, p, g], util[b, p, g], speed[a, p, g], speed[b, p, g], speed_bonus)
                    results.append((opp.rating, opp.deviation, s))
        new.append(update(states[a], results, tau=tau))
    return new


def performs_close(candidate: Glicko2State, reference: Glicko2State) -> bool:
    """Whether two rating intervals (rating +- 2 deviations) overlap."""
    lo_c, hi_c = candidate.interval()
    lo_r, hi_r = reference.interval()
    return lo_c <= hi_r and lo_r <= hi_c


def select_parents(states: list[Glicko2State], configs: list[dict], num_leaders: int = 10,
                   cap: int | None = None) -> list[int]:
    """Indices of parents: the leaders plus anyone rated close to the last leader.

    Returned best-rated first, at most ``cap`` (default half the population).
    """
    n = len(states)
    if cap is None:
        cap = max(1, n // 2)
    order = sorted(range(n), key=lambda i: (-states[i].rating, i))
    k = min(num_leaders, n)
    chosen = order[:k]
    ref = states[order[k - 1]]
    chosen += [i for i in order[k:] if performs_close(states[i], ref)]
    return chosen[:cap]


def next_generation(parents: list[dict], population_size: int, config: TunerConfig,
                    rng: random.Random) -> list[dict]:
    new = [dict(p) for p in parents]
    while len(new) < population_size:
        a = rng.choice(parents)
        b = rng.choice(parents)
        if rng.random() < config.parent_uniform_cx_prob:
            child = {k: (a[k] if rng.random() < 0.5 else b[k]) for k in KNOBS}
        else:
            child = dict(a)
        if rng.random() < config.parent_mutation_prob:
            knob = rng.choice(KNOBS)
            child[knob] = rng.choice(PARAM_GRID[knob])
        new.append(child)
    return new


@dataclass
class TuneReport:
    best: dict
    best_state: Glicko2State
    trials: list[dict]
    generation_method: str

    def best_params(self, seed: int = 0) -> GaParams:
        return to_params(self.best, self.generation_method, seed)

    def to_dict(self) -> dict:
        return {
            "best_configuration": self.best_params().to_dict(),
            "best_rating": {"rating": self.best_state.rating, "deviation": self.best_state.deviation,
                            "volatility": self.best_state.volatility},
            "trials": self.trials,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


def tune(config: TunerConfig) -> TuneReport:
    rng = random.Random(config.seed)
    configs = [random_config(rng) for _ in range(config.population)]
    states = [Glicko2State() for _ in configs]
    trials = []
    best_i = 0
    for trial in range(config.max_trials):
        table = play_games(configs, config.problem_suite, config.num_games,
                           config.generation_method, config.seed, trial)
        states = rate_configurations(table, states, config.speed_bonus, config.tau, config.speed_measure)
        ranking = sorted(range(len(configs)), key=lambda i: (-states[i].rating, i))
        best_i = ranking[0]
        trials.append({
            "trial": trial,
            "ratings": [
                {"config": configs[i], "rating": states[i].rating, "deviation": states[i].deviation,
                 "volatility": states[i].volatility, "mean_utility": float(table.utility[i].mean()),
                 "mean_wall_time_s": float(table.wall_time[i].mean())}
                for i in ranking
            ],
        })
        log.info("trial %d: best rating %.1f with %s", trial, states[best_i].rating, configs[best_i])
        if trial == config.max_trials - 1:
            break
        parent_idx = select_parents(states, configs, config.num_leaders, max(1, config.population // 2))
        parents = [configs[i] for i in parent_idx]
        parent_states = [states[i] for i in parent_idx]
        configs = next_generation(parents, config.population, config, rng)
        states = parent_states + [Glicko2State() for _ in range(len(configs) - len(parents))]
    return TuneReport(dict(configs[best_i]), states[best_i], trials, config.generation_method)
