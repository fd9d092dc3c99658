"""Scenario files: flat ``key = value`` text with repeated ``[agent]`` blocks.

::

    hedac-scenario v1
    mesh = meshes/case1.mesh        # relative to the scenario file
    alpha = 0.2
    beta = 0.5
    dt = 0.4
    t_end = 600
    density = uniform               # or: gaussian <cx> <cy> <sigma>
    snapshot_every = 60             # optional, seconds; 0 = first and last only

    [agent]
    x = 1.0
    y = 2.0
    theta = 0.0                     # radians from +x
    v = 0.1
    omega_max = 1.0
    delta = 0.1
    sensing = gaussian 1.5 0.1      # | rect <w> <h> [<amp>] | sector <half_deg> <range> <peak>
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from hedac.avoidance import MAX_CLUSTER, cluster_agents, current_collision_area
from hedac.coverage import SensingFunction
from hedac.dubins import AgentState
from hedac.geometry import AREA_FLOOR, DomainGeometry, TriMesh, distance_to_boundary, load_mesh, locate_point

HEADER = "hedac-scenario v1"
_GLOBAL_REQUIRED = ("mesh", "alpha", "beta", "dt", "t_end", "density")
_GLOBAL_OPTIONAL = ("snapshot_every",)
_AGENT_KEYS = ("x", "y", "theta", "v", "omega_max", "delta", "sensing")
CLEARANCE_TOL = 1e-9


class ScenarioError(ValueError):
    """Malformed or invalid scenario."""


@dataclass
class ScenarioConfig:
    mesh_path: Path
    alpha: float
    beta: float
    dt: float
    t_end: float
    density: str
    agents: list[AgentState]
    snapshot_every: float = 0.0
    source: Path | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise ScenarioError("dt must be positive")
        if not self.t_end >= self.dt:
            raise ScenarioError("t_end must be at least dt")
        if not (self.alpha > 0 and self.beta > 0):
            raise ScenarioError("alpha and beta must be positive")
        if self.snapshot_every < 0:
            raise ScenarioError("snapshot_every must be non-negative")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def with_overrides(self, **kw) -> ScenarioConfig:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _float(key: str, value: str, lineno: int) -> float:
    try:
        out = float(value)
    except ValueError:
        raise ScenarioError(f"line {lineno}: {key} must be a number, got {value!r}") from None
    if not np.isfinite(out):
        raise ScenarioError(f"line {lineno}: {key} must be finite")
    return out


def parse_scenario(text: str, base_dir: Path = Path(".")) -> ScenarioConfig:
    glob: dict[str, tuple[str, int]] = {}
    blocks: list[dict[str, tuple[str, int]]] = []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not header_seen:
            if line != HEADER:
                raise ScenarioError(f"line {lineno}: expected header '{HEADER}'")
            header_seen = True
            continue
        if line == "[agent]":
            blocks.append({})
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        target = blocks[-1] if blocks else glob
        allowed = _AGENT_KEYS if blocks else _GLOBAL_REQUIRED + _GLOBAL_OPTIONAL
        if key not in allowed:
            where = "agent block" if blocks else "scenario"
            raise ScenarioError(f"line {lineno}: unknown {where} key {key!r}")
        if key in target:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        target[key] = (value, lineno)
    if not header_seen:
        raise ScenarioError("empty scenario file")
    missing = [k for k in _GLOBAL_REQUIRED if k not in glob]
    if missing:
        raise ScenarioError(f"missing scenario keys: {', '.join(missing)}")
    if not blocks:
        raise ScenarioError("scenario defines no agents")

    agents = []
    for i, block in enumerate(blocks):
        missing = [k for k in _AGENT_KEYS if k not in block]
        if missing:
            raise ScenarioError(f"agent {i}: missing keys {', '.join(missing)}")
        nums = {k: _float(k, *block[k]) for k in _AGENT_KEYS if k != "sensing"}
        try:
            sensing = SensingFunction.parse(block["sensing"][0])
            agents.append(AgentState(id=i, sensing=sensing, **nums))
        except ValueError as exc:
            raise ScenarioError(f"agent {i} (line {block['sensing'][1]}): {exc}") from None

    density = glob["density"][0]
    if density.split()[0] not in ("uniform", "gaussian"):
        raise ScenarioError(f"line {glob['density'][1]}: density must be 'uniform' or 'gaussian cx cy sigma'")
    return ScenarioConfig(
        mesh_path=(base_dir / glob["mesh"][0]),
        alpha=_float("alpha", *glob["alpha"]),
        beta=_float("beta", *glob["beta"]),
        dt=_float("dt", *glob["dt"]),
        t_end=_float("t_end", *glob["t_end"]),
        density=density,
        agents=agents,
        snapshot_every=_float("snapshot_every", *glob["snapshot_every"]) if "snapshot_every" in glob else 0.0,
    )


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    config = parse_scenario(text, path.parent)
    config.source = path
    return config


def check_initial_state(config: ScenarioConfig, geom: DomainGeometry, mesh: TriMesh) -> None:
    """Raise :class:`ScenarioError` unless every start pose is inside, clear and escapable."""
    for a in config.agents:
        if locate_point(mesh, (a.x, a.y)) is None:
            raise ScenarioError(f"agent {a.id} starts outside the domain at ({a.x}, {a.y})")
        d = distance_to_boundary(geom, (a.x, a.y))
        if d < a.delta - CLEARANCE_TOL:
            raise ScenarioError(f"agent {a.id} starts {d:.4g} m from the boundary, clearance is {a.delta}")
    agents = config.agents
    for i in range(len(agents)):
        for k in range(i + 1, len(agents)):
            a, b = agents[i], agents[k]
            d = float(np.hypot(a.x - b.x, a.y - b.y))
            if d < a.delta + b.delta - CLEARANCE_TOL:
                raise ScenarioError(f"agents {a.id} and {b.id} start {d:.4g} m apart")
    for cluster in cluster_agents(agents, config.dt):
        if len(cluster) > MAX_CLUSTER:
            raise ScenarioError(f"agents {cluster} start in one cluster larger than {MAX_CLUSTER}")
        area, _ = current_collision_area([agents[i] for i in cluster], geom)
        if area > AREA_FLOOR:
            raise ScenarioError(
                f"agents {cluster} start with no collision-free escape circle combination (area {area:.3g} m^2)"
            )


def validate_scenario(config: ScenarioConfig) -> tuple[DomainGeometry, TriMesh]:
    """Load the mesh and check the initial state; returns the loaded mesh."""
    try:
        geom, mesh = load_mesh(config.mesh_path)
    except OSError as exc:
        raise ScenarioError(f"cannot read mesh {config.mesh_path}: {exc}") from None
    check_initial_state(config, geom, mesh)
    return geom, mesh
