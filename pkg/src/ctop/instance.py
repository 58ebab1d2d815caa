"""CTOP problem instances: vertices, travel costs, and the correlation graph."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class InvalidParameterError(ValueError):
    """Raised when a generator or kernel receives an out-of-range parameter."""


@dataclass(frozen=True)
class Vertex:
    id: int
    x: float
    y: float
    reward: float = 1.0
    sensing_cost: float = 0.0

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class CorrelationGraph:
    """Neighbourhoods ``neighbours[i]`` and weights ``weights[(i, j)]`` for j in N_i.

    ``weights[(i, j)]`` is the share of vertex j's reward credited to a visited
    vertex i while j itself stays unvisited.
    """

    neighbours: tuple[tuple[int, ...], ...]
    weights: dict[tuple[int, int], float]

    def weight(self, i: int, j: int) -> float:
        return self.weights.get((i, j), 0.0)


@dataclass(frozen=True)
class BudgetSpec:
    num_robots: int
    budgets: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "budgets", tuple(float(b) for b in self.budgets))
        if self.num_robots < 1:
            raise InvalidParameterError("num_robots must be positive")
        if len(self.budgets) != self.num_robots:
            raise InvalidParameterError("need one budget per robot")
        if any(not b > 0 for b in self.budgets):
            raise InvalidParameterError("budgets must be positive")

    @classmethod
    def uniform(cls, num_robots: int, budget: float) -> "BudgetSpec":
        return cls(num_robots, (budget,) * num_robots)


def kernel_weight(distance: float, l: float, squared: bool = False) -> float:
    """Correlation between two points ``distance`` apart: exp(-d / (2 l^2)).

    With ``squared=True`` the usual squared-exponential form exp(-d^2 / (2 l^2))
    is used instead.
    """
    if not (isinstance(l, (int, float)) and math.isfinite(l) and l > 0):
        raise InvalidParameterError(f"kernel length must be finite and positive, got {l!r}")
    if not distance >= 0:
        raise InvalidParameterError(f"distance must be nonnegative, got {distance!r}")
    d = distance * distance if squared else distance
    return math.exp(-d / (2.0 * l * l))


def build_correlation(
    positions,
    sampling_ids,
    kernel_length: float,
    neighbour_radius: float,
    squared_kernel: bool = False,
    num_vertices: int | None = None,
) -> CorrelationGraph:
    """Radius neighbourhoods among sampling vertices with column-normalized kernel weights.

    Raw weights come from :func:`kernel_weight`; column j is then divided by
    ``max(1, sum_i raw[i, j])`` so that an unvisited vertex never hands out more
    than its own reward.
    """
    if not neighbour_radius > 0:
        raise InvalidParameterError("neighbour_radius must be positive")
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    n = len(pos) if num_vertices is None else num_vertices
    ids = sorted(int(i) for i in sampling_ids)
    nbrs: list[list[int]] = [[] for _ in range(n)]
    raw: dict[tuple[int, int], float] = {}
    for a, i in enumerate(ids):
        for j in ids[a + 1:]:
            d = math.dist(pos[i], pos[j])
            if d <= neighbour_radius:
                w = kernel_weight(d, kernel_length, squared_kernel)
                nbrs[i].append(j)
                nbrs[j].append(i)
                raw[(i, j)] = w
                raw[(j, i)] = w
    col_sum = [0.0] * n
    for (i, j), w in raw.items():
        col_sum[j] += w
    weights = {(i, j): w / max(1.0, col_sum[j]) for (i, j), w in raw.items()}
    return CorrelationGraph(tuple(tuple(sorted(ns)) for ns in nbrs), weights)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    vertices: tuple[Vertex, ...]
    travel_cost: np.ndarray
    correlation: CorrelationGraph
    start_id: int
    finish_id: int
    kernel_length: float
    neighbour_radius: float
    squared_kernel: bool = False
    # derived lookup tables, filled in __post_init__
    dist: list = field(init=False, repr=False, compare=False)
    rewards: list = field(init=False, repr=False, compare=False)
    sensing: list = field(init=False, repr=False, compare=False)
    sampling_ids: tuple = field(init=False, repr=False, compare=False)
    bonus_out: tuple = field(init=False, repr=False, compare=False)
    loss_in: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.vertices)
        for k, v in enumerate(self.vertices):
            if v.id != k:
                raise ValueError(f"vertex ids must be 0..n-1 in order (got {v.id} at {k})")
            if v.reward < 0 or v.sensing_cost < 0:
                raise ValueError(f"vertex {k}: reward and sensing cost must be nonnegative")
        for name in ("start_id", "finish_id"):
            if not 0 <= getattr(self, name) < n:
                raise ValueError(f"{name} out of range")
        for k in {self.start_id, self.finish_id}:
            if self.vertices[k].sensing_cost != 0:
                raise ValueError("start and finish vertices must have zero sensing cost")
        tc = np.array(self.travel_cost, dtype=float)
        if tc.shape != (n, n):
            raise ValueError(f"travel_cost must be {n}x{n}")
        if np.any(tc < 0) or np.any(np.diag(tc) != 0) or not np.array_equal(tc, tc.T):
            raise ValueError("travel_cost must be symmetric, nonnegative, zero diagonal")
        tc.setflags(write=False)
        object.__setattr__(self, "travel_cost", tc)
        depots = {self.start_id, self.finish_id}
        object.__setattr__(self, "sampling_ids", tuple(k for k in range(n) if k not in depots))
        object.__setattr__(self, "dist", tc.tolist())
        object.__setattr__(self, "rewards", [v.reward for v in self.vertices])
        object.__setattr__(self, "sensing", [v.sensing_cost for v in self.vertices])
        r = self.rewards
        w = self.correlation.weights
        nb = self.correlation.neighbours
        # bonus_out[v]: (j, r_j * w_vj) credited to v while j is unvisited
        # loss_in[v]:   (i, r_v * w_iv) credited to i while v is unvisited
        object.__setattr__(self, "bonus_out", tuple(tuple((j, r[j] * w[(v, j)]) for j in nb[v]) for v in range(n)))
        object.__setattr__(self, "loss_in", tuple(tuple((i, r[v] * w[(i, v)]) for i in nb[v]) for v in range(n)))

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def positions(self) -> np.ndarray:
        return np.array([v.position for v in self.vertices], dtype=float)

    def is_metric(self, tol: float = 1e-9) -> bool:
        """True if travel costs satisfy the triangle inequality."""
        c = self.travel_cost
        return bool(np.all(c[:, None, :] <= c[:, :, None] + c[None, :, :] + tol))

    @classmethod
    def from_points(
        cls,
        points,
        start,
        finish=None,
        rewards=None,
        sensing_costs=None,
        kernel_length: float = 1.0,
        neighbour_radius: float = 1.5,
        squared_kernel: bool = False,
    ) -> "ProblemInstance":
        """Euclidean instance from sampling points plus depot position(s).

        The start vertex gets id ``len(points)``. If ``finish`` is None the
        start vertex doubles as the finish; otherwise the finish gets the next id.
        """
        pts = [tuple(map(float, p)) for p in points]
        n = len(pts)
        rewards = [1.0] * n if rewards is None else [float(x) for x in rewards]
        sensing_costs = [0.0] * n if sensing_costs is None else [float(x) for x in sensing_costs]
        verts = [Vertex(k, x, y, rewards[k], sensing_costs[k]) for k, (x, y) in enumerate(pts)]
        verts.append(Vertex(n, float(start[0]), float(start[1]), 0.0, 0.0))
        finish_id = n
        if finish is not None:
            verts.append(Vertex(n + 1, float(finish[0]), float(finish[1]), 0.0, 0.0))
            finish_id = n + 1
        return cls._assemble(verts, n, finish_id, kernel_length, neighbour_radius, squared_kernel)

    @classmethod
    def _assemble(cls, verts, start_id, finish_id, kernel_length, neighbour_radius, squared_kernel, travel_cost=None):
        pos = np.array([v.position for v in verts], dtype=float)
        if travel_cost is None:
            travel_cost = euclidean_matrix(pos)
        depots = {start_id, finish_id}
        sampling = [v.id for v in verts if v.id not in depots]
        corr = build_correlation(pos, sampling, kernel_length, neighbour_radius, squared_kernel, len(verts))
        return cls(tuple(verts), travel_cost, corr, start_id, finish_id,
                   float(kernel_length), float(neighbour_radius), bool(squared_kernel))

    def to_dict(self, include_travel_cost: bool = False) -> dict:
        d = {
            "vertices": [
                {"id": v.id, "x": v.x, "y": v.y, "reward": v.reward, "sensing_cost": v.sensing_cost}
                for v in self.vertices
            ],
            "start_id": self.start_id,
            "finish_id": self.finish_id,
            "kernel_length": self.kernel_length,
            "neighbour_radius": self.neighbour_radius,
            "squared_kernel": self.squared_kernel,
        }
        if include_travel_cost:
            d["travel_cost"] = self.travel_cost.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemInstance":
        verts = [
            Vertex(int(v["id"]), float(v["x"]), float(v["y"]),
                   float(v.get("reward", 1.0)), float(v.get("sensing_cost", 0.0)))
            for v in sorted(d["vertices"], key=lambda v: int(v["id"]))
        ]
        tc = d.get("travel_cost")
        return cls._assemble(
            verts, int(d["start_id"]), int(d["finish_id"]), float(d["kernel_length"]),
            float(d["neighbour_radius"]), bool(d.get("squared_kernel", False)),
            None if tc is None else np.array(tc, dtype=float),
        )

    def save(self, path, include_travel_cost: bool = False) -> None:
        # json writes floats with repr(), which round-trips bit-exactly
        Path(path).write_text(json.dumps(self.to_dict(include_travel_cost), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "ProblemInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))


def euclidean_matrix(pos: np.ndarray) -> np.ndarray:
    diff = pos[:, None, :] - pos[None, :, :]
    c = np.sqrt((diff ** 2).sum(axis=-1))
    # exact symmetry regardless of rounding in the subtraction order
    return np.minimum(c, c.T)


def build_grid_instance(
    rows: int,
    cols: int,
    spacing: float = 1.0,
    noise_amplitude: float = 0.0,
    kernel_length: float = 1.0,
    seed: int = 0,
    neighbour_radius: float | None = None,
    squared_kernel: bool = False,
) -> ProblemInstance:
    """Grid (or noisy grid) of unit-reward sampling points with an off-grid depot.

    Sampling vertex ``row * cols + col`` sits at ``(col * spacing, row * spacing)``
    plus uniform noise in ``[-noise_amplitude, noise_amplitude]`` per axis. The
    start vertex sits one spacing left of the grid at mid height, and a separate
    finish vertex is placed at the same point.
    """
    if rows < 1 or cols < 1:
        raise InvalidParameterError("rows and cols must be positive")
    if not spacing > 0:
        raise InvalidParameterError("spacing must be positive")
    if not noise_amplitude >= 0:
        raise InvalidParameterError("noise_amplitude must be nonnegative")
    if neighbour_radius is None:
        neighbour_radius = 1.5 * spacing
    kernel_weight(0.0, kernel_length)  # validates kernel_length
    pts = np.array([(c * spacing, r * spacing) for r in range(rows) for c in range(cols)], dtype=float)
    if noise_amplitude > 0:
        rng = np.random.default_rng(seed)
        pts = pts + rng.uniform(-noise_amplitude, noise_amplitude, size=pts.shape)
    depot = (-spacing, (rows - 1) * spacing / 2.0)
    return ProblemInstance.from_points(
        pts.tolist(), depot, depot, kernel_length=kernel_length,
        neighbour_radius=neighbour_radius, squared_kernel=squared_kernel,
    )


def max_single_robot_budget(instance: ProblemInstance) -> float:
    """Cost of one start-to-finish tour through every sampling vertex.

    Built by nearest neighbour from the start and polished with 2-opt.
    """
    from .solution import path_cost, two_opt

    if not instance.sampling_ids:
        raise InvalidParameterError("instance has no sampling vertices")
    d = instance.dist
    todo = set(instance.sampling_ids)
    path = [instance.start_id]
    while todo:
        last = path[-1]
        nxt = min(todo, key=lambda v: (d[last][v], v))
        path.append(nxt)
        todo.remove(nxt)
    path.append(instance.finish_id)
    return path_cost(two_opt(path, instance), instance)


def budget_for_team(instance: ProblemInstance, num_robots: int, fraction: float) -> BudgetSpec:
    if not (0 < fraction <= 1):
        raise InvalidParameterError(f"budget fraction must lie in (0, 1], got {fraction}")
    if num_robots < 1:
        raise InvalidParameterError("num_robots must be positive")
    full = max_single_robot_budget(instance)
    return BudgetSpec.uniform(num_robots, fraction * full / num_robots)
