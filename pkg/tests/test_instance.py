import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctop.instance import (
    BudgetSpec,
    InvalidParameterError,
    ProblemInstance,
    budget_for_team,
    build_correlation,
    build_grid_instance,
    kernel_weight,
    max_single_robot_budget,
)
from oracles import naive_path_cost, shortest_order_cost


@pytest.mark.parametrize("l", [0.1, 1.0, 7.5])
def test_kernel_zero_distance(l):
    assert kernel_weight(0.0, l) == 1.0


def test_kernel_values():
    assert kernel_weight(2.0, 1.0) == pytest.approx(math.exp(-1), rel=1e-12)
    assert kernel_weight(1.0, 0.5) == pytest.approx(math.exp(-2), rel=1e-12)
    assert kernel_weight(1.0, 0.5) == pytest.approx(0.135335, abs=1e-6)
    assert kernel_weight(2.0, 1.0, squared=True) == pytest.approx(math.exp(-2), rel=1e-12)


@pytest.mark.parametrize("l", [0.0, -1.0, float("nan"), float("inf")])
def test_kernel_rejects_bad_length(l):
    with pytest.raises(InvalidParameterError):
        kernel_weight(1.0, l)


@given(st.floats(0, 50), st.floats(0.01, 50), st.floats(0.01, 10))
def test_kernel_monotone(d, gap, l):
    assert kernel_weight(d + gap, l) < kernel_weight(d, l) or kernel_weight(d, l) == 0.0
    if d > 0:
        assert kernel_weight(d, l + gap) >= kernel_weight(d, l)


def test_grid_3x3_geometry():
    inst = build_grid_instance(3, 3, 1.0, 0.0)
    assert len(inst.sampling_ids) == 9
    assert inst.num_vertices == 11
    pos = {tuple(inst.vertices[v].position) for v in inst.sampling_ids}
    assert pos == {(float(x), float(y)) for x in range(3) for y in range(3)}
    assert inst.travel_cost[0, 8] == pytest.approx(math.sqrt(8))
    assert inst.vertices[inst.start_id].position == (-1.0, 1.0)
    for v in inst.sampling_ids:
        assert inst.vertices[v].reward == 1.0
    for v in (inst.start_id, inst.finish_id):
        assert inst.vertices[v].reward == 0.0 and inst.vertices[v].sensing_cost == 0.0
        assert inst.correlation.neighbours[v] == ()


def test_grid_single_vertex():
    inst = build_grid_instance(1, 1)
    assert inst.sampling_ids == (0,)
    assert inst.correlation.neighbours[0] == ()
    assert inst.correlation.weights == {}


def test_grid_9x9_size():
    assert len(build_grid_instance(9, 9).sampling_ids) == 81


@pytest.mark.parametrize("rows,cols", [(0, 3), (3, 0)])
def test_grid_rejects_empty(rows, cols):
    with pytest.raises(InvalidParameterError):
        build_grid_instance(rows, cols)


def test_neighbourhood_counts_on_canonical_grid():
    inst = build_grid_instance(3, 3, 1.0, 0.0)
    nb = inst.correlation.neighbours
    assert len(nb[4]) == 8
    for corner in (0, 2, 6, 8):
        assert len(nb[corner]) == 3


def test_two_vertex_weights():
    corr = build_correlation([(0, 0), (1, 0)], [0, 1], 1.0, 1.5)
    # hand evaluation: exp(-1/2); column sums are below one so no rescaling
    assert corr.weights[(0, 1)] == pytest.approx(0.6065306597126334, rel=1e-12)
    assert corr.weights[(1, 0)] == pytest.approx(0.6065306597126334, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.floats(0, 0.45), st.integers(0, 10**6),
       st.floats(0.3, 3.0), st.floats(0.5, 2.5))
def test_correlation_invariants(rows, cols, noise, seed, l, radius):
    inst = build_grid_instance(rows, cols, 1.0, noise, l, seed, neighbour_radius=radius)
    nb = inst.correlation.neighbours
    w = inst.correlation.weights
    for i in range(inst.num_vertices):
        assert i not in nb[i]
        for j in nb[i]:
            assert i in nb[j]
            assert 0.0 <= w[(i, j)] <= 1.0
    for j in inst.sampling_ids:
        assert sum(w[(i, j)] for i in nb[j]) <= 1.0 + 1e-12
    for v in (inst.start_id, inst.finish_id):
        assert nb[v] == ()
    c = inst.travel_cost
    assert np.allclose(np.diag(c), 0) and np.array_equal(c, c.T)
    assert inst.is_metric()


def test_noise_free_ignores_seed():
    a = build_grid_instance(4, 5, 1.0, 0.0, seed=1)
    b = build_grid_instance(4, 5, 1.0, 0.0, seed=99)
    assert a.to_dict() == b.to_dict()
    assert np.array_equal(a.travel_cost, b.travel_cost)


def test_noise_is_bounded_and_seeded():
    a = build_grid_instance(4, 4, 2.0, 0.6, seed=5)
    b = build_grid_instance(4, 4, 2.0, 0.6, seed=5)
    assert a.to_dict() == b.to_dict()
    for v in a.sampling_ids:
        x, y = a.vertices[v].position
        r, c = divmod(v, 4)
        assert abs(x - 2.0 * c) <= 0.6 and abs(y - 2.0 * r) <= 0.6


def test_json_round_trip_is_exact(tmp_path):
    inst = build_grid_instance(4, 3, 1.3, 0.4, 0.7, seed=11)
    p = tmp_path / "inst.json"
    inst.save(p, include_travel_cost=True)
    back = ProblemInstance.load(p)
    assert back.to_dict(True) == inst.to_dict(True)
    assert np.array_equal(back.travel_cost, inst.travel_cost)
    assert back.correlation.weights == inst.correlation.weights
    p2 = tmp_path / "again.json"
    back.save(p2, include_travel_cost=True)
    assert p.read_bytes() == p2.read_bytes()


def test_single_vertex_budget():
    inst = ProblemInstance.from_points([(3.0, 4.0)], (0.0, 0.0), sensing_costs=[0.25])
    assert inst.start_id == inst.finish_id
    assert max_single_robot_budget(inst) == pytest.approx(5.0 + 5.0 + 0.25)


def test_2x2_budget_matches_brute_force():
    inst = ProblemInstance.from_points([(0, 0), (1, 0), (0, 1), (1, 1)], (-1, 0))
    # every order of the four vertices tried by hand-rolled enumeration
    assert max_single_robot_budget(inst) == pytest.approx(5.414213562373095, abs=1e-12)
    assert max_single_robot_budget(inst) == pytest.approx(shortest_order_cost(inst, inst.sampling_ids))


def test_3x3_budget_within_5pct_of_optimum():
    inst = build_grid_instance(3, 3)
    # optimum over all 9! orders, computed once by exhaustive enumeration
    optimum = 10.82842712474619
    b = max_single_robot_budget(inst)
    assert optimum - 1e-9 <= b <= 1.05 * optimum


def test_budget_is_a_real_tour():
    inst = build_grid_instance(4, 4, 1.0, 0.3, seed=2)
    b = max_single_robot_budget(inst)
    lower = naive_path_cost([inst.start_id, inst.finish_id], inst)
    assert b >= lower


def test_budget_for_team():
    inst = build_grid_instance(3, 3)
    full = max_single_robot_budget(inst)
    assert budget_for_team(inst, 1, 1.0).budgets == (full,)
    three = budget_for_team(inst, 3, 1.0)
    assert three.num_robots == 3
    assert all(b == pytest.approx(full / 3) for b in three.budgets)
    quarter = budget_for_team(inst, 3, 0.25)
    assert all(b == pytest.approx(0.25 * full / 3) for b in quarter.budgets)


@given(st.floats(0.01, 0.5))
@settings(max_examples=30, deadline=None)
def test_budget_scales_linearly(frac):
    inst = build_grid_instance(3, 3)
    a = budget_for_team(inst, 2, frac).budgets
    b = budget_for_team(inst, 2, 2 * frac).budgets
    assert all(y == pytest.approx(2 * x, rel=1e-12) for x, y in zip(a, b))


@pytest.mark.parametrize("frac", [0.0, -0.5, 1.01])
def test_budget_fraction_range(frac):
    with pytest.raises(InvalidParameterError):
        budget_for_team(build_grid_instance(2, 2), 2, frac)


def test_budget_spec_validation():
    with pytest.raises(InvalidParameterError):
        BudgetSpec(2, (1.0,))
    with pytest.raises(InvalidParameterError):
        BudgetSpec(1, (0.0,))
