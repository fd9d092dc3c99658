"""Constant-speed, bounded-turn-rate agents with exact arc integration."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from hedac.coverage import SensingFunction

GRADIENT_FLOOR = 1e-12
STRAIGHT_OMEGA = 1e-9


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.remainder(a, 2 * math.pi)
    return math.pi if a == -math.pi else a


@dataclass(frozen=True)
class AgentState:
    id: int
    x: float
    y: float
    theta: float
    v: float
    omega_max: float
    delta: float
    sensing: SensingFunction

    def __post_init__(self):
        if not (self.v > 0 and self.omega_max > 0 and self.delta > 0):
            raise ValueError(f"agent {self.id}: v, omega_max and delta must be positive")
        if not all(math.isfinite(t) for t in (self.x, self.y, self.theta)):
            raise ValueError(f"agent {self.id}: pose must be finite")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def R(self) -> float:
        """Minimum turning radius."""
        return self.v / self.omega_max

    @property
    def z(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def max_turn(self, dt: float) -> float:
        return self.omega_max * dt


def desired_turn_rate(agent: AgentState, grad_u, dt: float) -> float:
    """Turn rate that aligns the heading with ``grad_u`` in one step, clamped.

    Exactly opposite gradients turn left; a vanishing gradient holds heading.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    gx, gy = float(grad_u[0]), float(grad_u[1])
    if math.hypot(gx, gy) < GRADIENT_FLOOR:
        return 0.0
    c, s = math.cos(agent.theta), math.sin(agent.theta)
    dot = c * gx + s * gy
    cross = c * gy - s * gx
    psi = math.pi if (cross == 0.0 and dot < 0) else math.atan2(cross, dot)
    return min(max(psi / dt, -agent.omega_max), agent.omega_max)


def arc_step(x: float, y: float, theta: float, v: float, omega: float, dt: float):
    """Exact pose after moving at speed ``v`` and turn rate ``omega`` for ``dt``.

    Written as a chord of length ``v dt sinc(phi / 2)`` along the mean heading,
    which equals ``(v / omega) (sin th' - sin th, cos th - cos th')`` but stays
    accurate as ``omega`` approaches zero.
    """
    phi = omega * dt
    half = 0.5 * phi
    chord = v * dt * (math.sin(half) / half if half != 0.0 else 1.0)
    mid = theta + half
    return x + chord * math.cos(mid), y + chord * math.sin(mid), wrap_angle(theta + phi)


def step_agent(agent: AgentState, omega: float, dt: float) -> AgentState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if abs(omega) > agent.omega_max * (1 + 1e-12):
        raise ValueError(f"agent {agent.id}: |omega|={abs(omega):.6g} exceeds omega_max={agent.omega_max:.6g}")
    x, y, theta = arc_step(agent.x, agent.y, agent.theta, agent.v, omega, dt)
    return replace(agent, x=x, y=y, theta=theta)


def curvature_radius(omega: float, v: float) -> float:
    """Path radius ``v/|omega|``; ``inf`` for straight motion."""
    if abs(omega) <= STRAIGHT_OMEGA:
        return math.inf
    return v / abs(omega)
