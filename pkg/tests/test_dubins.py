import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hedac.coverage import SensingFunction
from hedac.dubins import (
    AgentState,
    arc_step,
    curvature_radius,
    desired_turn_rate,
    step_agent,
    wrap_angle,
)

PHI = SensingFunction.gaussian(1.5, 0.1)


def make(x=0.0, y=0.0, theta=0.0, v=1.0, omega_max=1.0, delta=0.1):
    return AgentState(0, x, y, theta, v, omega_max, delta, PHI)


def test_agent_invariants():
    a = make(v=0.1, omega_max=1.0, theta=3 * math.pi)
    assert a.R * a.omega_max == pytest.approx(a.v, abs=1e-9)
    assert a.theta == pytest.approx(math.pi)
    assert make(theta=-math.pi).theta == math.pi
    with pytest.raises(ValueError):
        make(v=0.0)
    with pytest.raises(ValueError):
        make(delta=-1.0)
    with pytest.raises(ValueError):
        make(x=float("nan"))


@given(st.floats(-50, 50))
def test_wrap_range(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


def test_desired_turn_examples():
    a = make(omega_max=1.0)
    assert desired_turn_rate(a, (2.0, 0.0), 0.4) == 0.0
    assert desired_turn_rate(a, (0.0, 1.0), 0.4) == 1.0  # clamp active
    assert desired_turn_rate(a, (0.0, -1.0), 0.4) == -1.0
    assert desired_turn_rate(a, (math.cos(0.1), math.sin(0.1)), 1.0) == pytest.approx(0.1)
    assert desired_turn_rate(a, (-1.0, 0.0), 0.4) == 1.0  # antiparallel turns left
    assert desired_turn_rate(a, (1e-13, 0.0), 0.4) == 0.0
    with pytest.raises(ValueError):
        desired_turn_rate(a, (1.0, 0.0), 0.0)


@given(st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi), st.floats(1e-6, 1e6))
def test_desired_turn_scale_invariant(theta, angle, scale):
    a = make(theta=theta, omega_max=2.0)
    g = np.array([math.cos(angle), math.sin(angle)])
    assert desired_turn_rate(a, g, 0.5) == pytest.approx(desired_turn_rate(a, scale * g, 0.5), abs=1e-9)


def test_straight_step():
    a = step_agent(make(), 0.0, 1.0)
    assert (a.x, a.y, a.theta) == (1.0, 0.0, 0.0)


@pytest.mark.parametrize("k", [1, 4, 17, 100])
def test_full_circle_returns_home(k):
    a = make(x=0.3, y=-0.2, theta=0.4, v=0.1, omega_max=1.0)
    dt = 2 * math.pi / a.omega_max / k
    b = a
    for _ in range(k):
        b = step_agent(b, a.omega_max, dt)
    assert math.hypot(b.x - a.x, b.y - a.y) <= 1e-9 * k
    assert abs(wrap_angle(b.theta - a.theta)) <= 1e-9 * k


def test_half_turn_chord():
    v, omega = 2.0, 0.5
    x, y, th = arc_step(0.0, 0.0, 0.0, v, omega, math.pi / omega)
    assert th == pytest.approx(math.pi)
    assert x == pytest.approx(0.0, abs=1e-12)
    assert y == pytest.approx(2 * v / omega)


def test_step_rejects_excess_turn():
    with pytest.raises(ValueError):
        step_agent(make(omega_max=1.0), 1.01, 0.4)
    with pytest.raises(ValueError):
        step_agent(make(), 0.0, 0.0)


def test_curvature_radius():
    a = make(v=0.1, omega_max=1.0)
    assert curvature_radius(a.omega_max, a.v) == a.R
    assert curvature_radius(0.0, a.v) == math.inf
    assert curvature_radius(-0.5, a.v) == pytest.approx(2 * a.R)


pose = st.tuples(st.floats(-10, 10), st.floats(-10, 10), st.floats(-math.pi, math.pi))


@given(pose, st.floats(-1.0, 1.0), st.floats(0.01, 2.0))
def test_mirror_symmetry(p, omega, dt):
    x, y, th = p
    a = arc_step(x, y, th, 0.7, omega, dt)
    b = arc_step(-x, y, math.pi - th, 0.7, -omega, dt)
    assert b[0] == pytest.approx(-a[0], abs=1e-12)
    assert b[1] == pytest.approx(a[1], abs=1e-12)
    assert math.cos(b[2]) == pytest.approx(-math.cos(a[2]), abs=1e-12)
    assert math.sin(b[2]) == pytest.approx(math.sin(a[2]), abs=1e-12)


@given(pose, st.floats(-1.0, 1.0), st.floats(0.01, 2.0))
def test_composition(p, omega, dt):
    once = arc_step(*p, 0.7, omega, 2 * dt)
    twice = arc_step(*arc_step(*p, 0.7, omega, dt), 0.7, omega, dt)
    assert twice[0] == pytest.approx(once[0], abs=1e-12)
    assert twice[1] == pytest.approx(once[1], abs=1e-12)
    assert abs(wrap_angle(twice[2] - once[2])) < 1e-12


@given(pose, st.floats(-1.0, 1.0), st.floats(0.01, 2.0))
def test_step_length_and_radius(p, omega, dt):
    # Chord length of an arc of length v dt and radius v/|omega|.
    x, y, th = arc_step(*p, 0.7, omega, dt)
    chord = math.hypot(x - p[0], y - p[1])
    phi = abs(omega) * dt
    expected = 0.7 * dt if phi < 1e-9 else 2 * 0.7 / abs(omega) * math.sin(phi / 2)
    assert chord == pytest.approx(expected, abs=1e-9)
