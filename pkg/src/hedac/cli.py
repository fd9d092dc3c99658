"""Command line entry point: ``hedac run | validate | mesh-info``.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 runtime
invariant violation.
"""

from __future__ import annotations

import argparse
import os
import sys
from contextlib import nullcontext
from pathlib import Path

from hedac.avoidance import ClusterTooLargeError, InfeasibleManeuverError
from hedac.geometry import MeshError, load_mesh
from hedac.scenario import ScenarioError, load_scenario, validate_scenario
from hedac.simulation import InvariantViolation, Simulation, write_failure, write_outputs

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hedac", description="Constrained multi-agent area surveying simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a scenario and write CSV outputs")
    run.add_argument("scenario", type=Path)
    run.add_argument("--out", type=Path, default=None, help="output directory (default: runs/<scenario name>)")
    run.add_argument("--snapshot-every", type=float, default=None, metavar="S",
                     help="seconds between field snapshots (0: first and last only)")
    run.add_argument("--t-end", type=float, default=None, help="override the scenario end time")
    run.add_argument("--timings", action="store_true",
                     help="write measured phase times to metrics.csv (otherwise nan, for reproducible files)")
    run.add_argument("-q", "--quiet", action="store_true")

    val = sub.add_parser("validate", help="load a scenario and check its initial state")
    val.add_argument("scenario", type=Path)

    info = sub.add_parser("mesh-info", help="print mesh counts and domain area")
    info.add_argument("mesh", type=Path)
    return parser


def _thread_limit():
    n = os.environ.get("HEDAC_THREADS")
    if not n:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(n))


def cmd_mesh_info(args) -> int:
    try:
        geom, mesh = load_mesh(args.mesh)
    except (MeshError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"nodes: {mesh.node_count}")
    print(f"corner nodes: {len(mesh.corner_nodes)}")
    print(f"elements: {mesh.element_count}")
    print(f"boundary edges: {len(mesh.boundary_edges)}")
    print(f"obstacles: {geom.n_obstacles}")
    print(f"area: {geom.area:.6f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        config = load_scenario(args.scenario)
        validate_scenario(config)
    except (ScenarioError, MeshError, ClusterTooLargeError) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"{args.scenario}: ok ({len(config.agents)} agents, {config.n_steps} steps)")
    return EXIT_OK


def cmd_run(args) -> int:
    out = args.out or Path("runs") / args.scenario.stem
    try:
        config = load_scenario(args.scenario).with_overrides(t_end=args.t_end)
        geom, mesh = validate_scenario(config)
    except (ScenarioError, MeshError, ClusterTooLargeError) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    sim = Simulation(config, geom, mesh)
    try:
        record = sim.run(snapshot_every=args.snapshot_every)
    except (InvariantViolation, InfeasibleManeuverError) as exc:
        path = write_failure(out, str(exc), exc.dump)
        print(f"run aborted at t={sim.t:.3f}: {exc} (state dumped to {path})", file=sys.stderr)
        return EXIT_RUNTIME
    except ClusterTooLargeError as exc:
        print(f"run aborted at t={sim.t:.3f}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    write_outputs(record, out, timings=args.timings)
    if not args.quiet:
        eta = record.eta[-1] if record.eta else record.eta0
        print(f"{record.n_steps} steps, eta={eta:.4f}, {len(record.maneuvers)} maneuvers, outputs in {out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "validate": cmd_validate, "mesh-info": cmd_mesh_info}[args.command]
    with _thread_limit():
        return handler(args)


if __name__ == "__main__":
    sys.exit(main())
