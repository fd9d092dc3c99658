import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hedac.avoidance import (
    CLEARANCE_MARGIN,
    MAX_CLUSTER,
    ClusterTooLargeError,
    InfeasibleManeuverError,
    ManeuverProblem,
    better,
    cluster_agents,
    combination_area,
    escape_routes_after,
    minimal_collision_area,
    plan_maneuvers,
    routes_for,
    solve_maneuver,
)
from hedac.coverage import SensingFunction
from hedac.dubins import AgentState, step_agent
from hedac.geometry import (
    AREA_FLOOR,
    circle_circle_intersection_area,
    circle_outside_domain_area,
    distance_to_boundary,
    geometry_from_mesh,
    structured_rectangle,
)

PHI = SensingFunction.gaussian(1.5, 0.1)
BOX = geometry_from_mesh(structured_rectangle(0.0, 0.0, 10.0, 10.0, 2, 2))


def make(i, x, y, theta, v=1.0, omega_max=1.0, delta=0.1):
    return AgentState(i, x, y, theta, v, omega_max, delta, PHI)


def problem(agents, dtheta_h=None, dt=1.0, geom=BOX):
    dtheta_h = np.zeros(len(agents)) if dtheta_h is None else dtheta_h
    return ManeuverProblem(agents, dtheta_h, dt, geom)


def segment_lens(r1, r2, d):
    """Lens area as the sum of two circular segments cut by the radical line."""
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        return math.pi * min(r1, r2) ** 2
    a = (d * d + r1 * r1 - r2 * r2) / (2 * d)
    b = d - a

    def segment(r, h):
        t = math.acos(h / r)
        return r * r * t - h * math.sqrt(r * r - h * h)

    return segment(r1, a) + segment(r2, b)


def test_escape_centers_example():
    r = escape_routes_after(make(0, 0.0, 0.0, 0.0), 0.0, 1.0)
    assert r.f_plus == pytest.approx((1.0, 1.0))
    assert r.f_minus == pytest.approx((1.0, -1.0))
    assert r.clearance_radius == pytest.approx(1.1)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-math.pi, math.pi), st.floats(-0.4, 0.4))
def test_escape_centers_mirror(x, y, theta, dtheta):
    a = escape_routes_after(make(0, x, y, theta), dtheta, 0.4)
    b = escape_routes_after(make(0, -x, y, math.pi - theta), -dtheta, 0.4)
    # Reflection about the y axis swaps left and right.
    assert b.f_plus == pytest.approx((-a.f_minus[0], a.f_minus[1]), abs=1e-12)
    assert b.f_minus == pytest.approx((-a.f_plus[0], a.f_plus[1]), abs=1e-12)


def test_bound_turn_keeps_active_center():
    a = make(0, 2.0, 3.0, 0.7, v=0.5, omega_max=2.0)
    now = escape_routes_after(a, 0.0, 1e-300)
    for dt in (0.1, 0.4, 1.0):
        left = escape_routes_after(a, a.max_turn(dt), dt)
        right = escape_routes_after(a, -a.max_turn(dt), dt)
        assert left.f_plus == pytest.approx(now.f_plus, abs=1e-12)
        assert right.f_minus == pytest.approx(now.f_minus, abs=1e-12)


def test_escape_rejects_excess_turn():
    with pytest.raises(ValueError):
        escape_routes_after(make(0, 0, 0, 0), 1.5, 1.0)


def test_single_agent_mid_domain_clear():
    p = problem([make(0, 5.0, 5.0, 0.0)])
    routes = routes_for(p)
    assert combination_area(p, routes, 0) == 0.0
    assert combination_area(p, routes, 1) == 0.0
    assert minimal_collision_area(p, routes) == (0.0, 0)
    with pytest.raises(ValueError):
        combination_area(p, routes, 2)


def test_coincident_pair_matches_lens():
    a, b = make(0, 5.0, 5.0, 0.0), make(1, 5.0, 5.0, 0.0)
    p = problem([a, b])
    routes = routes_for(p)
    r = routes[0].clearance_radius
    r += CLEARANCE_MARGIN  # the area table works on slightly enlarged circles
    full = math.pi * r * r
    cross = segment_lens(r, r, 2.0)  # left and right centers are 2R apart
    expected = {0: full, 1: cross, 2: cross, 3: full}
    for j, area in expected.items():
        assert combination_area(p, routes, j) == pytest.approx(area, rel=1e-12)


def test_wall_on_one_side():
    # Heading +x along the bottom wall: the right circle crosses it, the left is clear.
    a = make(0, 5.0, 0.5, 0.0)
    p = problem([a])
    routes = routes_for(p)
    r = routes[0].clearance_radius
    d = -routes[0].f_minus[1]  # center lies this far below the wall y = 0
    inside = r * r * math.acos(d / r) - d * math.sqrt(r * r - d * d)
    segment = math.pi * r * r - inside
    assert combination_area(p, routes, 0) == pytest.approx(segment, rel=1e-2)
    assert combination_area(p, routes, 1) == 0.0
    assert minimal_collision_area(p, routes) == (0.0, 1)


def brute_force(geom, routes):
    """Direct enumeration of every combination with plain loops."""
    n = len(routes)
    best = (math.inf, -1)
    for j, bits in enumerate(itertools.product((0, 1), repeat=n)):
        bits = bits[::-1]  # bit i of j belongs to agent i
        circles = [(routes[i].f_plus if bits[i] else routes[i].f_minus, routes[i].clearance_radius) for i in range(n)]
        total = 0.0
        for i in range(n):
            total += circle_outside_domain_area(geom, *circles[i])
            for k in range(i + 1, n):
                total += circle_circle_intersection_area(circles[i][0], circles[i][1], circles[k][0], circles[k][1])
        if total < best[0]:
            best = (total, j)
    return best


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(1.5, 8.5), st.floats(1.5, 8.5), st.floats(-math.pi, math.pi)), min_size=3, max_size=3))
def test_three_agents_against_enumeration(poses):
    agents = [make(i, *p, v=0.5, omega_max=1.0, delta=0.2) for i, p in enumerate(poses)]
    p = problem(agents, dt=0.4)
    routes = routes_for(p)
    area, j = minimal_collision_area(p, routes)
    ref_area, ref_j = brute_force(BOX, routes)
    # Circles are inflated by 1e-5 m inside the optimizer's area table.
    slack = 2 * math.pi * 0.7 * 1e-5 * 6
    assert area == pytest.approx(ref_area, abs=slack)
    if ref_area == 0.0:
        assert area <= slack
    for jj in range(8):
        assert combination_area(p, routes, jj) >= area


def test_head_on_pair_takes_opposite_sides():
    R, delta = 1.0, 0.1
    gap = 2 * (R + delta) + 0.01
    a = make(0, 5.0 - gap / 2, 5.0, 0.0)
    b = make(1, 5.0 + gap / 2, 5.0, math.pi)
    p = problem([a, b], dt=0.01)
    routes = routes_for(p)
    area, j = minimal_collision_area(p, routes)
    assert area == 0.0
    ca = routes[0].f_plus if j & 1 else routes[0].f_minus
    cb = routes[1].f_plus if j & 2 else routes[1].f_minus
    assert (ca[1] - 5.0) * (cb[1] - 5.0) < 0


def test_clustering_examples():
    far = [make(0, 1.0, 1.0, 0.0, v=0.1), make(1, 9.0, 9.0, 0.0, v=0.1)]
    assert cluster_agents(far, 0.4) == [[0], [1]]
    # Reach per agent is 2R + delta + v dt = 0.2 + 0.1 + 0.04; neighbours within 0.68 link.
    chain = [make(i, 1.0 + 0.6 * i, 5.0, 0.0, v=0.1) for i in range(4)] + [make(4, 8.0, 8.0, 0.0, v=0.1)]
    assert cluster_agents(chain, 0.4) == [[0, 1, 2, 3], [4]]
    assert cluster_agents([], 0.4) == []


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10), st.floats(-math.pi, math.pi)), min_size=2, max_size=6),
       st.randoms(use_true_random=False))
def test_partition_is_sound(poses, rnd):
    dt = 0.4
    agents = [make(i, *p, v=0.3, omega_max=1.0, delta=0.1) for i, p in enumerate(poses)]
    clusters = cluster_agents(agents, dt)
    label = {i: c for c, members in enumerate(clusters) for i in members}
    for _ in range(5):
        turns = [rnd.uniform(-1, 1) * a.max_turn(dt) for a in agents]
        routes = [escape_routes_after(a, t, dt) for a, t in zip(agents, turns)]
        after = [step_agent(a, t / dt, dt) for a, t in zip(agents, turns)]
        for i, k in itertools.combinations(range(len(agents)), 2):
            if label[i] == label[k]:
                continue
            # Agents in different clusters cannot touch, whatever circles they pick.
            ri, rk = routes[i], routes[k]
            for ci in (ri.f_minus, ri.f_plus):
                for ck in (rk.f_minus, rk.f_plus):
                    assert math.dist(ci, ck) > ri.clearance_radius + rk.clearance_radius
            assert math.dist((after[i].x, after[i].y), (after[k].x, after[k].y)) > 0.2


def test_spread_agents_are_singletons():
    agents = [make(i, 0.6 + (i % 5) * 2.0, 1.0 + (i // 5) * 7.0, 0.0, v=0.1) for i in range(10)]
    assert cluster_agents(agents, 0.4) == [[i] for i in range(10)]


def test_better_ordering():
    assert better((0.0, 5.0), (1e-3, 0.0))
    assert better((0.0, 1.0), (5e-10, 2.0))  # both below the floor: objective decides
    assert not better((1e-3, 0.0), (0.0, 5.0))
    assert better((0.1, 9.0), (0.2, 0.0))


def test_feasible_request_unchanged():
    p = problem([make(0, 5.0, 5.0, 0.0)], dtheta_h=[0.3])
    res = solve_maneuver(p)
    assert res.dtheta == pytest.approx([0.3])
    assert res.objective == 0.0
    assert res.area == 0.0


def test_agent_aimed_at_wall_turns_away():
    # Heading straight at the right wall 1.5 m away with R = 1.
    a = make(0, 8.5, 5.0, 0.0, v=0.5, omega_max=0.5)
    p = problem([a], dtheta_h=[0.0])
    assert minimal_collision_area(p, routes_for(p))[0] > 0
    res = solve_maneuver(p)
    assert res.area <= AREA_FLOOR
    assert minimal_collision_area(p, routes_for(p, res.dtheta))[0] <= AREA_FLOOR
    assert abs(res.dtheta[0]) > 0


def test_symmetric_head_on_pair():
    a = make(0, 3.0, 5.0, 0.0, v=0.5, omega_max=0.5)
    b = make(1, 7.0, 5.0, math.pi, v=0.5, omega_max=0.5)
    p = problem([a, b])
    res = solve_maneuver(p)
    assert res.area <= AREA_FLOOR
    after = [step_agent(x, t, 1.0) for x, t in zip((a, b), res.dtheta)]
    assert math.dist((after[0].x, after[0].y), (after[1].x, after[1].y)) >= 0.2
    for s in after:
        assert distance_to_boundary(BOX, (s.x, s.y)) >= 0.1


def test_partition_matches_monolithic_feasibility():
    rng = np.random.default_rng(4)
    dt = 0.4
    for _ in range(5):
        pos = rng.uniform(1.0, 9.0, size=(6, 2))
        agents = [make(i, *pos[i], rng.uniform(-math.pi, math.pi), v=0.3, omega_max=1.0) for i in range(6)]
        if any(math.dist(pos[i], pos[k]) < 0.3 for i, k in itertools.combinations(range(6), 2)):
            continue
        h = rng.uniform(-0.4, 0.4, 6)
        whole = solve_maneuver(problem(agents, h, dt))
        assert whole.area <= AREA_FLOOR
        for members in cluster_agents(agents, dt):
            part = solve_maneuver(problem([agents[i] for i in members], h[members], dt))
            assert part.area <= AREA_FLOOR


def test_cluster_cap():
    agents = [make(i, 1.0 + 0.3 * i, 5.0, 0.0, v=0.1) for i in range(MAX_CLUSTER + 1)]
    with pytest.raises(ClusterTooLargeError):
        problem(agents, dt=0.4)
    problem(agents[:MAX_CLUSTER], dt=0.4)


def test_infeasible_start_raises_with_dump():
    # Every circle of an agent sitting on the wall crosses it.
    a = make(0, 5.0, 0.05, 0.0, v=0.5, omega_max=1.0, delta=0.1)
    with pytest.raises(InfeasibleManeuverError) as info:
        solve_maneuver(problem([a], dt=0.4))
    assert info.value.dump["area"] > AREA_FLOOR
    assert "dtheta_h" in info.value.dump


def spread_with_one_at_wall():
    # Ten agents far apart; only agent 0 heads into the bottom wall.
    agents = [make(0, 1.0, 0.22, -math.pi / 2, v=0.1)]
    for i in range(1, 10):
        agents.append(make(i, 1.0 + (i % 5) * 2.0, 2.0 + (i // 5) * 5.0, 0.3 * i, v=0.1))
    return agents


def test_partitioned_planning_does_less_work():
    agents = spread_with_one_at_wall()
    dt, h = 0.4, np.zeros(10)
    assert cluster_agents(agents, dt) == [[i] for i in range(10)]
    d_part, plans = plan_maneuvers(agents, h, dt, BOX)
    d_whole, whole = plan_maneuvers(agents, h, dt, BOX, clusters=[list(range(10))])
    # Only the agent heading into the wall is optimized after partitioning.
    assert [p.members for p in plans] == [[0]]
    assert np.all(d_part[1:] == 0.0)
    assert plans[0].result.area <= AREA_FLOOR and whole[0].result.area <= AREA_FLOOR
    assert whole[0].result.evaluations >= 5 * plans[0].result.evaluations
