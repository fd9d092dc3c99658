"""The closed control loop: density update, potential solve, steering, avoidance, motion, coverage."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from hedac.avoidance import plan_maneuvers
from hedac.coverage import (
    TargetDensity,
    accomplishment,
    accumulate_coverage,
    initial_density,
    normalize_initial_density,
    update_density,
)
from hedac.dubins import AgentState, curvature_radius, desired_turn_rate, step_agent
from hedac.fem import HelmholtzSystem, assemble, eval_gradient, factorize, solve_potential
from hedac.geometry import DomainGeometry, TriMesh, distance_to_boundary
from hedac.scenario import CLEARANCE_TOL, ScenarioConfig, validate_scenario

TRAJECTORY_COLUMNS = ("t", "agent_id", "x", "y", "theta", "omega")
METRIC_COLUMNS = (
    "t", "eta", "min_radius", "min_boundary_clearance", "min_agent_distance",
    "t_coverage", "t_solve", "t_maneuver",
)
FIELD_COLUMNS = ("node_id", "u", "m", "c")


class InvariantViolation(RuntimeError):
    """A safety constraint failed during the run; ``dump`` holds the offending state."""

    def __init__(self, message: str, dump: dict):
        super().__init__(message)
        self.dump = dump


@dataclass
class Snapshot:
    t: float
    u: np.ndarray
    m: np.ndarray
    c: np.ndarray


@dataclass
class SimRecord:
    """Per-step history; row ``k`` describes the state at ``t[k] = (k + 1) * dt``."""

    agent_ids: list[int]
    eta0: float = 0.0
    t: list[float] = field(default_factory=list)
    x: list[np.ndarray] = field(default_factory=list)
    y: list[np.ndarray] = field(default_factory=list)
    theta: list[np.ndarray] = field(default_factory=list)
    omega: list[np.ndarray] = field(default_factory=list)
    eta: list[float] = field(default_factory=list)
    min_radius: list[float] = field(default_factory=list)
    min_boundary_clearance: list[float] = field(default_factory=list)
    min_agent_distance: list[float] = field(default_factory=list)
    t_coverage: list[float] = field(default_factory=list)
    t_solve: list[float] = field(default_factory=list)
    t_maneuver: list[float] = field(default_factory=list)
    maneuvers: list[dict] = field(default_factory=list)
    snapshots: list[Snapshot] = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return len(self.t)

    def array(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)

    @property
    def step_time(self) -> np.ndarray:
        return self.array("t_coverage") + self.array("t_solve") + self.array("t_maneuver")


class Simulation:
    """Stepwise driver; :func:`run_simulation` is the usual entry point."""

    def __init__(self, config: ScenarioConfig, geom: DomainGeometry | None = None, mesh: TriMesh | None = None):
        if geom is None or mesh is None:
            geom, mesh = validate_scenario(config)
        self.config = config
        self.geom = geom
        self.mesh = mesh
        self.dt = config.dt
        self.system: HelmholtzSystem = assemble(mesh, config.alpha, config.beta)
        factorize(self.system)
        m0 = normalize_initial_density(initial_density(config.density, mesh), self.system)
        self.density = TargetDensity.from_initial(m0)
        self.agents: list[AgentState] = list(config.agents)
        self.step_index = 0
        self.u = solve_potential(self.system, self.density.m)
        self.record = SimRecord(agent_ids=[a.id for a in self.agents], eta0=accomplishment(self.density, self.system))

    @property
    def t(self) -> float:
        return self.step_index * self.dt

    def snapshot(self) -> Snapshot:
        d = self.density
        return Snapshot(self.t, self.u.copy(), d.m.copy(), d.c.copy())

    def _dump(self, reason: str, **extra) -> dict:
        return {"reason": reason, "t": self.t, "agents": [asdict(a) for a in self.agents], **extra}

    def desired_turns(self) -> np.ndarray:
        out = np.empty(len(self.agents))
        for i, a in enumerate(self.agents):
            grad = eval_gradient(self.mesh, self.u, (a.x, a.y))
            out[i] = desired_turn_rate(a, grad, self.dt) * self.dt
        return out

    def plan(self, dtheta_h: np.ndarray) -> np.ndarray:
        """Turning angles after collision avoidance, cluster by cluster."""
        dtheta, plans = plan_maneuvers(self.agents, dtheta_h, self.dt, self.geom)
        for p in plans:
            self.record.maneuvers.append({
                "t": self.t,
                "agents": [self.agents[i].id for i in p.members],
                "area_desired": p.area_desired,
                "area": p.result.area,
                "objective": p.result.objective,
                "evaluations": p.result.evaluations,
            })
        return dtheta

    def check_invariants(self, omegas: np.ndarray) -> tuple[float, float, float]:
        agents = self.agents
        radii = [curvature_radius(w, a.v) for w, a in zip(omegas, agents)]
        for a, r in zip(agents, radii):
            if r < a.R * (1 - 1e-12):
                raise InvariantViolation(f"agent {a.id} turned with radius {r:.6g} < {a.R:.6g}", self._dump("radius"))
        clear = []
        for a in agents:
            d = distance_to_boundary(self.geom, (a.x, a.y))
            if not self.geom.contains((a.x, a.y)) or d < a.delta - CLEARANCE_TOL:
                raise InvariantViolation(
                    f"agent {a.id} at ({a.x:.6g}, {a.y:.6g}) is {d:.6g} m from the boundary (clearance {a.delta})",
                    self._dump("boundary", agent=a.id, distance=d),
                )
            clear.append(d)
        min_pair = math.inf
        for i in range(len(agents)):
            for k in range(i + 1, len(agents)):
                a, b = agents[i], agents[k]
                d = math.hypot(a.x - b.x, a.y - b.y)
                if d < a.delta + b.delta - CLEARANCE_TOL:
                    raise InvariantViolation(
                        f"agents {a.id} and {b.id} are {d:.6g} m apart", self._dump("separation", pair=[a.id, b.id])
                    )
                min_pair = min(min_pair, d)
        return min(radii), min(clear), min_pair

    def step(self) -> None:
        dt = self.dt
        t0 = time.perf_counter()
        update_density(self.density)
        self.u = solve_potential(self.system, self.density.m)
        dtheta_h = self.desired_turns()
        t1 = time.perf_counter()
        dtheta = self.plan(dtheta_h)
        t2 = time.perf_counter()
        omegas = dtheta / dt
        self.agents = [step_agent(a, w, dt) for a, w in zip(self.agents, omegas)]
        self.step_index += 1
        t3 = time.perf_counter()
        accumulate_coverage(self.density, self.mesh, self.agents, dt)
        update_density(self.density)
        eta = accomplishment(self.density, self.system)
        t4 = time.perf_counter()
        min_radius, min_clear, min_pair = self.check_invariants(omegas)

        rec = self.record
        rec.t.append(self.t)
        rec.x.append(np.array([a.x for a in self.agents]))
        rec.y.append(np.array([a.y for a in self.agents]))
        rec.theta.append(np.array([a.theta for a in self.agents]))
        rec.omega.append(omegas)
        rec.eta.append(eta)
        rec.min_radius.append(min_radius)
        rec.min_boundary_clearance.append(min_clear)
        rec.min_agent_distance.append(min_pair)
        rec.t_coverage.append(t4 - t3)
        rec.t_solve.append(t1 - t0)
        rec.t_maneuver.append((t2 - t1) + (t3 - t2))

    def run(self, n_steps: int | None = None, snapshot_every: float | None = None) -> SimRecord:
        n_steps = self.config.n_steps if n_steps is None else n_steps
        every = self.config.snapshot_every if snapshot_every is None else snapshot_every
        stride = max(1, int(round(every / self.dt))) if every > 0 else None
        self.record.snapshots.append(self.snapshot())
        for k in range(1, n_steps + 1):
            self.step()
            if (stride and k % stride == 0) or k == n_steps:
                self.u = solve_potential(self.system, self.density.m)
                self.record.snapshots.append(self.snapshot())
        return self.record


def run_simulation(config: ScenarioConfig, snapshot_every: float | None = None) -> SimRecord:
    return Simulation(config).run(snapshot_every=snapshot_every)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_outputs(record: SimRecord, out_dir, timings: bool = False) -> None:
    """Write trajectories.csv, metrics.csv and snapshots/field_<t>.csv.

    Timing columns hold ``nan`` unless ``timings`` is set, so repeated runs are
    byte-identical by default.
    """
    out = Path(out_dir)
    try:
        (out / "snapshots").mkdir(parents=True, exist_ok=True)
        with open(out / "trajectories.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAJECTORY_COLUMNS)
            for k, t in enumerate(record.t):
                for i, aid in enumerate(record.agent_ids):
                    w.writerow([_fmt(t), aid, _fmt(record.x[k][i]), _fmt(record.y[k][i]),
                                _fmt(record.theta[k][i]), _fmt(record.omega[k][i])])
        with open(out / "metrics.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(METRIC_COLUMNS)
            for k, t in enumerate(record.t):
                times = [record.t_coverage[k], record.t_solve[k], record.t_maneuver[k]] if timings else [math.nan] * 3
                w.writerow([_fmt(t), _fmt(record.eta[k]), _fmt(record.min_radius[k]),
                            _fmt(record.min_boundary_clearance[k]), _fmt(record.min_agent_distance[k]),
                            *map(_fmt, times)])
        for snap in record.snapshots:
            with open(out / "snapshots" / f"field_{snap.t:010.3f}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(FIELD_COLUMNS)
                for n in range(len(snap.u)):
                    w.writerow([n, _fmt(snap.u[n]), _fmt(snap.m[n]), _fmt(snap.c[n])])
    except OSError as exc:
        raise OSError(f"cannot write outputs to {out}: {exc}") from exc


def write_failure(out_dir, message: str, dump: dict) -> Path:
    path = Path(out_dir) / "failure.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"message": message, **dump}, indent=2, default=_jsonable))
    return path


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return str(obj)
