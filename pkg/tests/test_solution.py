import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctop.instance import BudgetSpec, ProblemInstance, build_grid_instance
from ctop.solution import (
    InvalidInputError,
    TeamSolution,
    check_feasibility,
    gene_reward,
    marginal_gain,
    path_cost,
    team_utility,
    two_opt,
    utility_of_set,
)
from oracles import is_two_opt_stable, naive_path_cost, naive_utility


@pytest.fixture(scope="module")
def grid3():
    return build_grid_instance(3, 3, 1.0, 0.0)


@pytest.fixture(scope="module")
def noisy5():
    return build_grid_instance(5, 5, 1.0, 0.3, seed=4)


def test_path_cost_direct_leg(grid3):
    s, f = grid3.start_id, grid3.finish_id
    # start and finish are co-located
    assert path_cost([s, f], grid3) == 0.0


def test_path_cost_with_sensing():
    inst = ProblemInstance.from_points([(3, 0), (3, 4)], (0, 0), sensing_costs=[0.5, 0.25])
    s = inst.start_id
    assert path_cost([s, 0, 1, s], inst) == pytest.approx(3 + 4 + 5 + 0.5 + 0.25)
    assert path_cost([s, 1, 0, s], inst) == pytest.approx(5 + 4 + 3 + 0.25 + 0.5)


def test_path_cost_rejects_bad_ids(grid3):
    with pytest.raises(InvalidInputError):
        path_cost([grid3.start_id, 99, grid3.finish_id], grid3)
    with pytest.raises(InvalidInputError):
        path_cost([grid3.start_id], grid3)


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_path_cost_matches_naive(rnd):
    inst = build_grid_instance(4, 4, 1.0, 0.3, seed=rnd.randrange(1000))
    inner = rnd.sample(list(inst.sampling_ids), rnd.randint(0, 16))
    p = [inst.start_id, *inner, inst.finish_id]
    assert path_cost(p, inst) == pytest.approx(naive_path_cost(p, inst), rel=1e-12, abs=1e-12)


def test_centre_only_utility(grid3):
    s, f = grid3.start_id, grid3.finish_id
    # frozen from a standalone script: kernel weights rescaled so every
    # neighbour column sums to at most one, then the centre's share added up
    u = team_utility([[s, 4, f]], grid3)
    assert u == pytest.approx(3.020696258929427, rel=1e-12)
    assert u < 1 + 4 * math.exp(-0.5) + 4 * math.exp(-1)


def test_all_visited_equals_reward_sum(grid3):
    s, f = grid3.start_id, grid3.finish_id
    assert team_utility([[s, *range(5), f], [s, *range(5, 9), f]], grid3) == pytest.approx(9.0)


def test_empty_plan_is_zero(grid3):
    s, f = grid3.start_id, grid3.finish_id
    assert team_utility([[s, f], [s, f]], grid3) == 0.0


def test_utility_rejects_duplicates(grid3):
    s, f = grid3.start_id, grid3.finish_id
    with pytest.raises(InvalidInputError):
        team_utility([[s, 1, f], [s, 1, f]], grid3)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.3, 3.0))
def test_utility_bounds_and_naive_formula(seed, l):
    rnd = random.Random(seed)
    inst = build_grid_instance(4, 4, 1.0, 0.3, l, seed)
    visited = set(rnd.sample(list(inst.sampling_ids), rnd.randint(0, 16)))
    u = utility_of_set(visited, inst)
    assert u == pytest.approx(naive_utility(visited, inst), rel=1e-12, abs=1e-12)
    total = sum(inst.vertices[v].reward for v in inst.sampling_ids)
    assert sum(inst.vertices[v].reward for v in visited) - 1e-12 <= u <= total + 1e-12


def test_utility_monotone_under_additions(noisy5):
    rnd = random.Random(0)
    ids = list(noisy5.sampling_ids)
    for _ in range(1000):
        visited = set(rnd.sample(ids, rnd.randint(0, len(ids) - 1)))
        v = rnd.choice([x for x in ids if x not in visited])
        before = utility_of_set(visited, noisy5)
        after = utility_of_set(visited | {v}, noisy5)
        assert after >= before - 1e-12
        assert after - before == pytest.approx(marginal_gain(v, visited, noisy5), abs=1e-12)


def test_gene_rewards_sum_to_team_utility(noisy5):
    rnd = random.Random(3)
    s, f = noisy5.start_id, noisy5.finish_id
    for _ in range(50):
        ids = rnd.sample(list(noisy5.sampling_ids), 12)
        paths = [[s, *ids[:4], f], [s, *ids[4:9], f], [s, *ids[9:], f]]
        vis = set(ids)
        shares = sum(gene_reward(p, vis, noisy5) for p in paths)
        assert shares == pytest.approx(team_utility(paths, noisy5), rel=1e-12)


def test_feasible_plan(grid3):
    s, f = grid3.start_id, grid3.finish_id
    rep = check_feasibility([[s, 0, 1, f], [s, 3, f]], grid3, BudgetSpec.uniform(2, 100.0))
    assert rep.feasible and rep.violations == []
    assert bool(rep)


def test_budget_violation_identified(grid3):
    s, f = grid3.start_id, grid3.finish_id
    rep = check_feasibility([[s, 0, 1, f], [s, 8, f]], grid3, BudgetSpec((2), (100.0, 1.0)))
    assert not rep.feasible
    assert rep.violations == ["budget(1)"]


@pytest.mark.parametrize("paths,expected", [
    ([[9, 0, 10], [9, 0, 10]], "duplicate-visit(0)"),
    ([[9, 0, 0, 10], [9, 10]], "repeat(0,0)"),
    ([[0, 1, 10], [9, 10]], "start(0)"),
    ([[9, 1, 9], [9, 10]], "finish(0)"),
    ([[9, 42, 10], [9, 10]], "unknown-vertex(42)"),
    ([[9, 10, 1, 10], [9, 10]], "depot-interior(0)"),
    ([[9, 10]], "robot-count"),
])
def test_violation_ids(grid3, paths, expected):
    assert grid3.start_id == 9 and grid3.finish_id == 10
    rep = check_feasibility(paths, grid3, BudgetSpec.uniform(2, 100.0))
    assert not rep.feasible
    assert expected in rep.violations


def test_two_opt_uncrosses_square():
    inst = ProblemInstance.from_points([(0, 0), (1, 0), (0, 1), (1, 1)], (-1, 0))
    s = inst.start_id
    crossed = [s, 0, 3, 1, 2, s]
    out = two_opt(crossed, inst)
    assert path_cost(out, inst) == pytest.approx(5.414213562373095, abs=1e-12)
    assert path_cost(out, inst) < path_cost(crossed, inst)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_two_opt_short_paths_untouched(grid3, k):
    p = [grid3.start_id, *range(k), grid3.finish_id]
    assert two_opt(p, grid3) == p


def _random_paths(inst, count, seed, max_len):
    rnd = random.Random(seed)
    ids = list(inst.sampling_ids)
    for _ in range(count):
        inner = rnd.sample(ids, rnd.randint(0, min(max_len, len(ids))))
        yield [inst.start_id, *inner, inst.finish_id]


@pytest.mark.parametrize("max_len", [7, 25])
def test_two_opt_properties(noisy5, max_len):
    # both the scalar and the vectorised branch
    for p in _random_paths(noisy5, 150, max_len, max_len):
        q = two_opt(p, noisy5)
        assert q[0] == p[0] and q[-1] == p[-1]
        assert sorted(q) == sorted(p)
        assert path_cost(q, noisy5) <= path_cost(p, noisy5) + 1e-9
        assert is_two_opt_stable(q, noisy5)
        assert two_opt(q, noisy5) == q


def test_two_opt_branches_agree(noisy5):
    from ctop.solution import _two_opt_numpy, _two_opt_scalar
    for p in _random_paths(noisy5, 60, 11, 20):
        assert _two_opt_scalar(list(p), noisy5.dist) == _two_opt_numpy(list(p), noisy5.travel_cost)


def test_solution_round_trip(tmp_path, grid3):
    s, f = grid3.start_id, grid3.finish_id
    sol = TeamSolution.from_paths([[s, 4, 1, f], [s, 7, f]], grid3, BudgetSpec.uniform(2, 50.0), seed=3)
    assert sol.feasible and sol.utility == pytest.approx(team_utility(sol.paths, grid3))
    assert sol.per_robot_cost[1] == pytest.approx(path_cost([s, 7, f], grid3))
    p = tmp_path / "sol.json"
    sol.save(p)
    back = TeamSolution.load(p)
    assert back.paths == sol.paths and back.utility == sol.utility
    assert json.loads(p.read_text())["seed"] == 3
