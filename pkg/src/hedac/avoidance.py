"""Escape-route collision avoidance.

Each agent keeps two clearance circles of radius ``R + delta`` centered on
its hardest left and right turn circles. A maneuver (vector of turning
angles for one step) is feasible when, after the step, some choice of one
circle per agent has zero total overlap with the other chosen circles and
with the outside of the domain. Bit ``i`` of a combination index selects
the right-turn circle (0) or the left-turn circle (1) of cluster member
``i``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from hedac.dubins import AgentState, arc_step
from hedac.geometry import AREA_FLOOR, DomainGeometry, circles_outside_domain_area, lens_area

MAX_CLUSTER = 16
GSS_ITERATIONS = 20
MAX_SWEEPS = 5
# Clearance circles are grown by this much when computing collision areas. An
# area at the feasibility floor then still leaves the true circles disjoint
# from the boundary and from each other (a 1e-9 m^2 sliver is ~1e-6 m deep).
CLEARANCE_MARGIN = 1e-5
SWEEP_TOL = 1e-12
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class ClusterTooLargeError(ValueError):
    pass


class InfeasibleManeuverError(RuntimeError):
    """The optimizer returned a maneuver with positive collision area."""

    def __init__(self, message: str, dump: dict):
        super().__init__(message)
        self.dump = dump


@dataclass(frozen=True)
class EscapeRoutes:
    f_minus: tuple[float, float]
    f_plus: tuple[float, float]
    clearance_radius: float


def turn_centers(x: float, y: float, theta: float, R: float):
    """Right (minus) and left (plus) minimum-radius turn centers at a pose."""
    nx, ny = -math.sin(theta), math.cos(theta)
    return (x - R * nx, y - R * ny), (x + R * nx, y + R * ny)


def escape_routes_after(agent: AgentState, dtheta: float, dt: float) -> EscapeRoutes:
    """Clearance circles after turning by ``dtheta`` over one step of length ``dt``."""
    if abs(dtheta) > agent.max_turn(dt) * (1 + 1e-12):
        raise ValueError(f"agent {agent.id}: turning angle {dtheta:.6g} exceeds the per-step limit")
    x, y, theta = arc_step(agent.x, agent.y, agent.theta, agent.v, dtheta / dt, dt)
    minus, plus = turn_centers(x, y, theta, agent.R)
    return EscapeRoutes(minus, plus, agent.R + agent.delta)


@lru_cache(maxsize=None)
def combination_bits(n: int) -> np.ndarray:
    """Row ``j`` holds the ``n``-bit binary representation of ``j`` (bit ``i`` in column ``i``)."""
    j = np.arange(2**n, dtype=np.int64)[:, None]
    bits = ((j >> np.arange(n)) & 1).astype(np.intp)
    bits.setflags(write=False)
    return bits


class _AreaTable:
    """Domain and pairwise overlap areas for one cluster's candidate circles.

    ``outside[i, s]`` is the area of member ``i``'s circle ``s`` outside the
    domain and ``overlap[i, k, s, t]`` the lens area of circle ``s`` of ``i``
    with circle ``t`` of ``k``.
    """

    def __init__(self, geom: DomainGeometry, centers: np.ndarray, radii: np.ndarray):
        self.geom = geom
        self.centers = centers.copy()
        self.radii = np.asarray(radii, dtype=float) + CLEARANCE_MARGIN
        n = len(radii)
        self.outside = np.zeros((n, 2))
        self.overlap = np.zeros((n, n, 2, 2))
        for i in range(n):
            self._fill_row(i)

    def _fill_row(self, i: int) -> None:
        c, r = self.centers, self.radii
        self.outside[i] = circles_outside_domain_area(self.geom, c[i], r[i])
        if len(r) > 1:
            ci = c[i]
            d = np.hypot(
                ci[:, None, None, 0] - c[None, :, :, 0],
                ci[:, None, None, 1] - c[None, :, :, 1],
            )  # (side of i, k, side of k)
            lens = lens_area(d, r[i], r[None, :, None])
            lens[:, i, :] = 0.0
            self.overlap[i] = lens.transpose(1, 0, 2)
            self.overlap[:, i] = lens.transpose(1, 2, 0)

    def replaced(self, i: int, centers_i: np.ndarray) -> _AreaTable:
        t = object.__new__(_AreaTable)
        t.geom, t.radii = self.geom, self.radii
        t.centers = self.centers.copy()
        t.centers[i] = centers_i
        t.outside = self.outside.copy()
        t.overlap = self.overlap.copy()
        t._fill_row(i)
        return t

    def combination_areas(self) -> np.ndarray:
        n = len(self.radii)
        if n == 1:
            return self.outside[0].copy()
        bits = combination_bits(n)
        areas = np.zeros(len(bits))
        rows = np.nonzero(self.outside.any(axis=1))[0]
        for i in rows:
            areas += self.outside[i, bits[:, i]]
        ii, kk = np.nonzero(np.triu(self.overlap.any(axis=(2, 3)), k=1))
        for i, k in zip(ii, kk):
            areas += self.overlap[i, k, bits[:, i], bits[:, k]]
        return areas

    def minimum(self) -> tuple[float, int]:
        areas = self.combination_areas()
        j = int(np.argmin(areas))
        return float(areas[j]), j


def _centers_after(agents: Sequence[AgentState], dtheta, dt: float) -> np.ndarray:
    out = np.empty((len(agents), 2, 2))
    for i, (a, dth) in enumerate(zip(agents, dtheta)):
        x, y, theta = arc_step(a.x, a.y, a.theta, a.v, dth / dt, dt)
        out[i] = turn_centers(x, y, theta, a.R)
    return out


def _centers_now(agents: Sequence[AgentState]) -> np.ndarray:
    return np.array([turn_centers(a.x, a.y, a.theta, a.R) for a in agents])


@dataclass
class ManeuverProblem:
    """Turning-angle optimization for one cluster of agents.

    ``dtheta_h`` are the angles the potential field asks for; each variable
    is bounded by ``omega_max * dt``.
    """

    agents: tuple[AgentState, ...]
    dtheta_h: np.ndarray
    dt: float
    geom: DomainGeometry
    dtheta: np.ndarray = field(default=None)

    def __post_init__(self):
        self.agents = tuple(self.agents)
        if not self.agents:
            raise ValueError("cluster must not be empty")
        if len(self.agents) > MAX_CLUSTER:
            raise ClusterTooLargeError(
                f"cluster of {len(self.agents)} agents exceeds the limit of {MAX_CLUSTER}; "
                "spread the agents or reduce their clearance"
            )
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        self.dtheta_h = np.clip(np.asarray(self.dtheta_h, dtype=float), -self.bounds, self.bounds)
        if self.dtheta is None:
            self.dtheta = self.dtheta_h.copy()
        else:
            self.dtheta = np.asarray(self.dtheta, dtype=float)
            if np.any(np.abs(self.dtheta) > self.bounds * (1 + 1e-12)):
                raise ValueError("turning angles exceed their bounds")

    @property
    def size(self) -> int:
        return len(self.agents)

    @property
    def bounds(self) -> np.ndarray:
        return np.array([a.max_turn(self.dt) for a in self.agents])

    @property
    def radii(self) -> np.ndarray:
        return np.array([a.R + a.delta for a in self.agents])

    def objective(self, dtheta) -> float:
        return float(np.sum((self.dtheta_h - np.asarray(dtheta)) ** 2))

    def table(self, dtheta=None) -> _AreaTable:
        dtheta = self.dtheta if dtheta is None else dtheta
        return _AreaTable(self.geom, _centers_after(self.agents, dtheta, self.dt), self.radii)


def routes_for(problem: ManeuverProblem, dtheta=None) -> list[EscapeRoutes]:
    dtheta = problem.dtheta if dtheta is None else dtheta
    return [escape_routes_after(a, float(d), problem.dt) for a, d in zip(problem.agents, dtheta)]


def _table_from_routes(problem: ManeuverProblem, routes: Sequence[EscapeRoutes]) -> _AreaTable:
    centers = np.array([[r.f_minus, r.f_plus] for r in routes], dtype=float)
    radii = np.array([r.clearance_radius for r in routes])
    return _AreaTable(problem.geom, centers, radii)


def combination_area(problem: ManeuverProblem, routes: Sequence[EscapeRoutes], j: int) -> float:
    """Total collision area ``A_j`` of combination ``j`` for the given routes."""
    n = len(routes)
    if not 0 <= j < 2**n:
        raise ValueError(f"combination index {j} outside 0..{2**n - 1}")
    return float(_table_from_routes(problem, routes).combination_areas()[j])


def minimal_collision_area(problem: ManeuverProblem, routes: Sequence[EscapeRoutes]) -> tuple[float, int]:
    """``(A_min, best_j)`` over all ``2^n`` combinations; ties go to the lowest ``j``."""
    if len(routes) > MAX_CLUSTER:
        raise ClusterTooLargeError(f"cannot enumerate escape combinations for {len(routes)} agents")
    return _table_from_routes(problem, routes).minimum()


def current_collision_area(agents: Sequence[AgentState], geom: DomainGeometry) -> tuple[float, int]:
    """``(A_min, best_j)`` of the clearance circles at the agents' present poses.

    These circles are exactly the post-step circles when every agent turns at
    its bound, so zero here means a feasible bound maneuver exists.
    """
    radii = np.array([a.R + a.delta for a in agents])
    return _AreaTable(geom, _centers_now(agents), radii).minimum()


def cluster_agents(agents: Sequence[AgentState], dt: float) -> list[list[int]]:
    """Connected components of the "may interact within one step" graph."""
    n = len(agents)
    if n == 0:
        return []
    z = np.array([[a.x, a.y] for a in agents])
    reach = np.array([2 * a.R + a.delta + a.v * dt for a in agents])
    dist = np.hypot(z[:, None, 0] - z[None, :, 0], z[:, None, 1] - z[None, :, 1])
    adj = dist <= reach[:, None] + reach[None, :]
    n_comp, labels = connected_components(coo_matrix(adj), directed=False)
    clusters: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        clusters.setdefault(int(lab), []).append(i)
    return sorted(clusters.values(), key=lambda c: c[0])


def _quantize(area: float) -> float:
    return 0.0 if area <= AREA_FLOOR else area


def better(a: tuple[float, float], b: tuple[float, float]) -> bool:
    """Constraint-aware comparison of ``(area, objective)`` trial values.

    Equal collision areas compare by objective, otherwise the smaller area wins.
    """
    area_a, area_b = _quantize(a[0]), _quantize(b[0])
    if area_a == area_b:
        return a[1] < b[1]
    return area_a < area_b


@dataclass
class ManeuverResult:
    dtheta: np.ndarray
    area: float
    best_j: int
    objective: float
    evaluations: int
    sweeps: int


def bound_maneuver(problem: ManeuverProblem, j: int) -> np.ndarray:
    """Turning angles that hold every member on the circle chosen by combination ``j``."""
    bits = combination_bits(problem.size)[j]
    return np.where(bits == 1, problem.bounds, -problem.bounds)


def solve_maneuver(problem: ManeuverProblem) -> ManeuverResult:
    """Closest feasible turning angles to the desired ones (cyclic coordinate search).

    The search starts from the better of the desired angles and the bound
    maneuver that keeps the currently clear escape circles, so a feasible
    answer is never lost. Each coordinate is refined by a golden section
    search using :func:`better` as the comparison.
    """
    n = problem.size
    lo, hi = -problem.bounds, problem.bounds
    h = problem.dtheta_h
    evaluations = 0

    def evaluate(x: np.ndarray, table: _AreaTable | None = None):
        nonlocal evaluations
        evaluations += 1
        table = table if table is not None else problem.table(x)
        area, j = table.minimum()
        return (area, problem.objective(x)), j, table

    _, j_now = current_collision_area(problem.agents, problem.geom)
    x_safe = bound_maneuver(problem, j_now)
    best_x = h.copy()
    best_f, best_j, best_table = evaluate(best_x)
    f_safe, j_safe, t_safe = evaluate(x_safe)
    if better(f_safe, best_f):
        best_x, best_f, best_j, best_table = x_safe, f_safe, j_safe, t_safe

    sweeps = 0
    searched_at: list[np.ndarray | None] = [None] * n
    if _quantize(best_f[0]) > 0 or best_f[1] > 0:
        for sweeps in range(1, MAX_SWEEPS + 1):
            start_f = best_f
            for i in range(n):
                # The line search is deterministic: same point, same answer.
                if searched_at[i] is not None and np.array_equal(searched_at[i], best_x):
                    continue
                cache: dict[float, tuple] = {}

                def trial(xi: float):
                    if xi in cache:
                        return cache[xi]
                    x = best_x.copy()
                    x[i] = xi
                    centers_i = _centers_after(problem.agents[i:i + 1], x[i:i + 1], problem.dt)[0]
                    f, j, t = evaluate(x, best_table.replaced(i, centers_i))
                    cache[xi] = (f, j, t, x)
                    return cache[xi]

                cand = [(best_f, best_j, best_table, best_x)]
                for xi in (lo[i], hi[i], min(max(h[i], lo[i]), hi[i])):
                    cand.append(trial(float(xi)))
                a, b = lo[i], hi[i]
                c, d = b - _INV_PHI * (b - a), a + _INV_PHI * (b - a)
                fc, fd = trial(c), trial(d)
                cand += [fc, fd]
                for _ in range(GSS_ITERATIONS):
                    if better(fc[0], fd[0]):
                        b, d, fd = d, c, fc
                        c = b - _INV_PHI * (b - a)
                        fc = trial(c)
                        cand.append(fc)
                    else:
                        a, c, fc = c, d, fd
                        d = a + _INV_PHI * (b - a)
                        fd = trial(d)
                        cand.append(fd)
                winner = cand[0]
                for other in cand[1:]:
                    if better(other[0], winner[0]):
                        winner = other
                best_f, best_j, best_table, best_x = winner
                searched_at[i] = best_x.copy()
            improved_area = _quantize(best_f[0]) < _quantize(start_f[0])
            if not improved_area and start_f[1] - best_f[1] <= SWEEP_TOL:
                break

    area = best_f[0]
    if area > AREA_FLOOR:
        dump = {
            "agents": [asdict(a) for a in problem.agents],
            "dtheta_h": h.tolist(),
            "dtheta": best_x.tolist(),
            "area": area,
            "combination_areas": best_table.combination_areas().tolist(),
        }
        raise InfeasibleManeuverError(
            f"maneuver for agents {[a.id for a in problem.agents]} still collides (area {area:.3g} m^2)", dump
        )
    problem.dtheta = best_x
    return ManeuverResult(best_x, area, best_j, best_f[1], evaluations, sweeps)


@dataclass
class ClusterPlan:
    members: list[int]
    area_desired: float
    result: ManeuverResult


def plan_maneuvers(agents: Sequence[AgentState], dtheta_h, dt: float, geom: DomainGeometry,
                   clusters: list[list[int]] | None = None) -> tuple[np.ndarray, list[ClusterPlan]]:
    """Turning angles for the whole swarm, optimizing only clusters whose desired turns collide.

    ``clusters`` defaults to :func:`cluster_agents`; passing one cluster with
    every index forces the unpartitioned problem.
    """
    dtheta_h = np.asarray(dtheta_h, dtype=float)
    dtheta = dtheta_h.copy()
    plans = []
    for members in cluster_agents(agents, dt) if clusters is None else clusters:
        problem = ManeuverProblem([agents[i] for i in members], dtheta_h[members], dt, geom)
        area_h, _ = problem.table().minimum()
        if area_h <= 0.0:
            continue
        res = solve_maneuver(problem)
        dtheta[members] = res.dtheta
        plans.append(ClusterPlan(list(members), area_h, res))
    return dtheta, plans
