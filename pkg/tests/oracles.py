"""Independent reference implementations used as test oracles.

Nothing here shares code paths with the solver: costs walk the raw matrix,
utility is evaluated term by term from the 0/1 visit vector, and the exact
optimum comes from exhaustive enumeration of visit sets and robot assignments.
"""

import itertools
import math
from functools import lru_cache


def naive_path_cost(path, inst):
    c = inst.travel_cost
    total = 0.0
    for a, b in zip(path[:-1], path[1:]):
        total += float(c[a, b]) + inst.vertices[a].sensing_cost
    return total


def naive_utility(visited, inst):
    """Sum_i r_i x_i + sum_{j in N_i} r_j w_ij x_i (x_i - x_j) over all vertices."""
    x = [1 if v in visited else 0 for v in range(inst.num_vertices)]
    total = 0.0
    for i in range(inst.num_vertices):
        total += inst.vertices[i].reward * x[i]
        for j in inst.correlation.neighbours[i]:
            total += inst.vertices[j].reward * inst.correlation.weights[(i, j)] * x[i] * (x[i] - x[j])
    return total


def is_two_opt_stable(path, inst, eps=1e-9):
    c = inst.travel_cost
    base = naive_path_cost(path, inst)
    for i in range(1, len(path) - 1):
        for j in range(i + 1, len(path) - 1):
            q = path[:i] + path[i:j + 1][::-1] + path[j + 1:]
            if naive_path_cost(q, inst) < base - eps:
                return False
    return True


def shortest_order_cost(inst, vertices):
    """Cheapest start -> all of ``vertices`` -> finish, by trying every order."""
    s, f = inst.start_id, inst.finish_id
    best = math.inf
    for order in itertools.permutations(vertices):
        best = min(best, naive_path_cost([s, *order, f], inst))
    return best


def brute_force_optimum(inst, budgets):
    """Exact optimum utility and a witness plan, by exhaustive enumeration.

    Every subset of sampling vertices is a candidate visit set; it is feasible
    if some assignment of its vertices to robots lets each robot tour its share
    within budget (tour cost from trying every order).
    """
    sampling = list(inst.sampling_ids)
    m = budgets.num_robots

    @lru_cache(maxsize=None)
    def tour(sub):
        return shortest_order_cost(inst, sub)

    def feasible(S):
        for assign in itertools.product(range(m), repeat=len(S)):
            ok = True
            for k in range(m):
                share = tuple(v for v, a in zip(S, assign) if a == k)
                if tour(share) > budgets.budgets[k] + 1e-9:
                    ok = False
                    break
            if ok:
                return True
        return False

    best, best_set = 0.0, ()
    for size in range(len(sampling) + 1):
        for S in itertools.combinations(sampling, size):
            u = naive_utility(set(S), inst)
            if u <= best:
                continue
            if feasible(S):
                best, best_set = u, S
    return best, best_set
