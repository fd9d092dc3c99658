"""Sensing footprints, coverage accumulation and the target density."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from hedac.geometry import TriMesh

# Camera amplitude is not given for the rectangular footprint; this default
# yields coverage of order 0.1 per pass at multirotor speeds. Scenarios
# normally state the amplitude explicitly.
DEFAULT_RECT_AMPLITUDE = 0.005


@dataclass(frozen=True)
class SensingFunction:
    """An agent's instantaneous footprint in its body frame (x forward, y left).

    ``kind`` is one of ``"gaussian"``, ``"rect"`` or ``"sector"``; only the
    parameters of that kind are meaningful. A rectangle is ``width`` across
    the heading and ``height`` along it, centered on the agent.
    """

    kind: str
    amplitude: float
    sigma: float = 0.0
    width: float = 0.0
    height: float = 0.0
    half_angle: float = 0.0
    range: float = 0.0
    cutoff_radius: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("sensing amplitude must be non-negative")
        if self.kind == "gaussian":
            if self.sigma <= 0:
                raise ValueError("gaussian sigma must be positive")
            if self.cutoff_radius <= 0:
                object.__setattr__(self, "cutoff_radius", 4.0 * self.sigma)
        elif self.kind == "rect":
            if self.width <= 0 or self.height <= 0:
                raise ValueError("rectangle width and height must be positive")
            object.__setattr__(self, "cutoff_radius", 0.5 * math.hypot(self.width, self.height))
        elif self.kind == "sector":
            if not 0 < self.half_angle <= math.pi:
                raise ValueError("sector half angle must lie in (0, pi]")
            if self.range <= 0:
                raise ValueError("sector range must be positive")
            object.__setattr__(self, "cutoff_radius", float(self.range))
        else:
            raise ValueError(f"unknown sensing kind {self.kind!r}")

    @classmethod
    def gaussian(cls, amplitude: float, sigma: float, cutoff_radius: float = 0.0) -> SensingFunction:
        return cls("gaussian", amplitude, sigma=sigma, cutoff_radius=cutoff_radius)

    @classmethod
    def rectangle(cls, width: float, height: float, amplitude: float = DEFAULT_RECT_AMPLITUDE) -> SensingFunction:
        return cls("rect", amplitude, width=width, height=height)

    @classmethod
    def sector(cls, half_angle: float, range: float, peak: float) -> SensingFunction:
        return cls("sector", peak, half_angle=half_angle, range=range)

    @classmethod
    def parse(cls, text: str) -> SensingFunction:
        """Parse ``gaussian <amp> <sigma>``, ``rect <w> <h> [<amp>]`` or
        ``sector <half_angle_deg> <range> <peak>``."""
        parts = text.split()
        if not parts:
            raise ValueError("empty sensing specification")
        kind, args = parts[0], [float(a) for a in parts[1:]]
        if kind == "gaussian" and len(args) == 2:
            return cls.gaussian(args[0], args[1])
        if kind == "rect" and len(args) in (2, 3):
            return cls.rectangle(*args)
        if kind == "sector" and len(args) == 3:
            return cls.sector(math.radians(args[0]), args[1], args[2])
        raise ValueError(f"bad sensing specification {text!r}")

    def __call__(self, r_local) -> np.ndarray:
        """Intensity at body-frame offsets ``r_local`` of shape (..., 2)."""
        r = np.asarray(r_local, dtype=float)
        rx, ry = r[..., 0], r[..., 1]
        dist = np.hypot(rx, ry)
        if self.kind == "gaussian":
            val = self.amplitude * np.exp(-(dist * dist) / (2 * self.sigma**2))
        elif self.kind == "rect":
            inside = (np.abs(ry) <= 0.5 * self.width) & (np.abs(rx) <= 0.5 * self.height)
            val = np.where(inside, self.amplitude, 0.0)
        else:
            bearing = np.arctan2(ry, rx)
            inside = (dist <= self.range) & (np.abs(bearing) <= self.half_angle)
            val = np.where(inside, self.amplitude * (1.0 - dist / self.range), 0.0)
        return np.where(dist <= self.cutoff_radius, val, 0.0)


def sensing_value(phi: SensingFunction, r_local) -> float:
    return float(phi(r_local))


def to_local(z, theta: float, points: np.ndarray) -> np.ndarray:
    """Body-frame coordinates of world ``points`` seen from pose ``(z, theta)``."""
    c, s = math.cos(theta), math.sin(theta)
    d = np.asarray(points, dtype=float) - np.asarray(z, dtype=float)
    return np.stack([c * d[..., 0] + s * d[..., 1], -s * d[..., 0] + c * d[..., 1]], axis=-1)


@dataclass
class TargetDensity:
    """Initial density ``m0``, coverage ``c`` and current density ``m = m0 exp(-c)``."""

    m0: np.ndarray
    c: np.ndarray
    m: np.ndarray

    @classmethod
    def from_initial(cls, m0: np.ndarray) -> TargetDensity:
        m0 = np.asarray(m0, dtype=float).copy()
        return cls(m0, np.zeros_like(m0), m0.copy())


def accumulate_coverage(density: TargetDensity, mesh: TriMesh, agents: Iterable, dt: float) -> None:
    """Add ``phi_i(local(x_node)) * dt`` for every agent to nodes within its cutoff."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    tree = mesh.node_tree
    for agent in agents:
        phi = agent.sensing
        idx = tree.query_ball_point((agent.x, agent.y), phi.cutoff_radius, return_sorted=True)
        if not idx:
            continue
        idx = np.asarray(idx)
        r = to_local((agent.x, agent.y), agent.theta, mesh.nodes[idx])
        density.c[idx] += phi(r) * dt


def update_density(density: TargetDensity) -> None:
    np.multiply(density.m0, np.exp(-density.c), out=density.m)


def accomplishment(density: TargetDensity, system) -> float:
    """Surveying accomplishment ``1 - integral of m``."""
    return 1.0 - system.integrate(density.m)


def normalize_initial_density(m0_raw: np.ndarray, system) -> np.ndarray:
    m0_raw = np.asarray(m0_raw, dtype=float)
    if np.any(m0_raw < 0) or not np.all(np.isfinite(m0_raw)):
        raise ValueError("initial density must be finite and non-negative")
    total = system.integrate(m0_raw)
    if not total > 0:
        raise ValueError("initial density integrates to zero")
    return m0_raw / total


def initial_density(spec: str, mesh: TriMesh) -> np.ndarray:
    """Raw (unnormalized) nodal density for ``uniform`` or ``gaussian cx cy sigma``."""
    parts = spec.split()
    if parts == ["uniform"]:
        return np.ones(mesh.node_count)
    if len(parts) == 4 and parts[0] == "gaussian":
        cx, cy, sigma = (float(v) for v in parts[1:])
        if sigma <= 0:
            raise ValueError("density sigma must be positive")
        d2 = (mesh.nodes[:, 0] - cx) ** 2 + (mesh.nodes[:, 1] - cy) ** 2
        return np.exp(-d2 / (2 * sigma**2))
    raise ValueError(f"bad density specification {spec!r}")
