"""Generate the shipped survey meshes under scenarios/meshes/.

Needs the ``triangle`` package (``pip install triangle``); the simulator
itself only reads the resulting ``hedac-mesh v1`` files.

    python scripts/make_meshes.py [--only case1 ...]
"""

import argparse
import math
from pathlib import Path

import numpy as np
import shapely
import triangle
from shapely import affinity
from shapely.geometry import LineString, Point, box
from shapely.geometry import Polygon as ShapelyPolygon

from hedac.geometry import (
    TriMesh,
    boundary_edges_of,
    geometry_from_mesh,
    structured_rectangle,
    tag_boundary_loops,
    validate_mesh,
    write_mesh,
)

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "scenarios" / "meshes"
CASE1_AREA = 64.903


def disk(cx, cy, r, seg_len):
    n = max(12, int(math.ceil(2 * math.pi * r / seg_len)))
    t = 2 * np.pi * np.arange(n) / n
    return ShapelyPolygon(np.column_stack([cx + r * np.cos(t), cy + r * np.sin(t)]))


def densify(poly, seg_len):
    return shapely.segmentize(poly, seg_len)


def triangulate(domain, max_area, min_angle=30):
    """Quality triangulation of a shapely polygon with holes -> P2 TriMesh."""
    domain = shapely.set_precision(domain, 1e-9)
    verts, segs, holes = [], [], []
    rings = [domain.exterior] + list(domain.interiors)
    for k, ring in enumerate(rings):
        pts = np.asarray(ring.coords)[:-1]
        base = len(verts)
        verts.extend(pts.tolist())
        n = len(pts)
        segs.extend([base + i, base + (i + 1) % n] for i in range(n))
        if k > 0:
            holes.append(ShapelyPolygon(ring).representative_point().coords[0])
    pslg = {"vertices": np.array(verts), "segments": np.array(segs)}
    if holes:
        pslg["holes"] = np.array(holes)
    out = triangle.triangulate(pslg, f"pq{min_angle}a{max_area}")
    points, tris = out["vertices"], out["triangles"]
    used = np.unique(tris)
    remap = np.full(len(points), -1)
    remap[used] = np.arange(len(used))
    points, tris = points[used], remap[tris]
    edges = boundary_edges_of(tris)
    tags = tag_boundary_loops(points, edges)
    return TriMesh.from_linear(points, tris, edges, tags)


def case1_domain(width):
    """Rectangle with a square spiral maze, five round obstacles and a horseshoe."""
    h = 7.0
    cx = 0.5 * width
    outer = box(0, 0, width, h)
    outer = outer.difference(disk(cx, 0.0, 0.7, 0.05)).difference(disk(cx, h, 0.7, 0.05))
    pitch, wall = 0.8, 0.1
    pts = [(2.2, 3.5)]
    dirs = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    for k in range(7):
        length = pitch * (k // 2 + 1)
        dx, dy = dirs[k % 4]
        x, y = pts[-1]
        pts.append((x + dx * length, y + dy * length))
    maze = LineString(pts).buffer(wall / 2, cap_style="flat", join_style="mitre")
    ys = np.linspace(0.7, h - 0.7, 7)[1:-1]
    circles = [disk(cx, y, 0.2, 0.04) for y in ys]
    arc_t = np.radians(np.linspace(50, 310, 60))
    hx, hy, hr = width - 2.4, 3.5, 1.2
    shoe = LineString(np.column_stack([hx + hr * np.cos(arc_t), hy + hr * np.sin(arc_t)]))
    shoe = shoe.buffer(0.07, cap_style="round", quad_segs=6)
    holes = [maze, *circles, shoe]
    dom = outer
    for hole in holes:
        dom = dom.difference(hole)
    return densify(dom, 0.08)


def case1_mesh():
    lo, hi = 9.0, 11.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if case1_domain(mid).area < CASE1_AREA:
            lo = mid
        else:
            hi = mid
    dom = case1_domain(0.5 * (lo + hi))
    return triangulate(dom, 0.0080), f"Case-1-style synthetic domain, width {0.5 * (lo + hi):.6f} m"


def box2(*holes, seg=0.04):
    dom = box(0, 0, 2, 2)
    for hole in holes:
        dom = dom.difference(hole)
    return densify(dom, seg)


def narrow_gap_mesh():
    # Two wall segments separated by a 0.12 m gap: narrower than 2 * clearance.
    left = box(0.35, 0.95, 0.94, 1.05)
    right = box(1.06, 0.95, 1.65, 1.05)
    return triangulate(box2(left, right, seg=0.02), 0.0012), "2x2 box, two walls with a 0.12 m gap at x=1"


def wide_slot_mesh():
    outer = ShapelyPolygon(
        [(0, 0), (2, 0), (2, 1.2), (1.25, 1.2), (1.25, 2.0), (0.75, 2.0), (0.75, 1.2), (0, 1.2)]
    )
    return triangulate(densify(outer, 0.04), 0.0015), "open area with a 0.5 m wide, 0.8 m deep slot"


def box2_open_mesh():
    return structured_rectangle(0, 0, 2, 2, 40, 40, mirror=True), "2x2 box, structured, mirror-symmetric about x=1"


def square_obstacle_mesh():
    hole = box(0.4, 0.4, 0.6, 0.6)
    return triangulate(densify(box(0, 0, 1, 1).difference(hole), 0.05), 0.004), "unit square with a 0.2 m square hole"


def island_mesh():
    """Stand-in for an island survey: irregular coast, many small structures."""
    t = np.linspace(0, 2 * np.pi, 90, endpoint=False)
    r = 1.0 + 0.08 * np.sin(3 * t) + 0.05 * np.cos(5 * t + 0.4)
    coast = ShapelyPolygon(np.column_stack([220 * r * np.cos(t), 140 * r * np.sin(t)]))
    coast = affinity.rotate(coast, 20, origin=(0, 0))
    holes = [box(30, 20, 70, 60)]  # fort-like square courtyard block
    for i, (x, y) in enumerate([(-120, -20), (-60, 50), (-30, -60), (90, -40), (140, 30), (0, 90), (-150, 60)]):
        holes.append(affinity.rotate(box(x - 8, y - 6, x + 8, y + 6), 15 * i, origin=(x, y)))
    for k in range(8):
        holes.append(disk(-90 + 14 * k, -90 + 3 * k, 3.0, 1.5))
    dom = coast
    for hole in holes:
        dom = dom.difference(hole)
    return triangulate(densify(dom, 6.0), 22.0), "reduced-scale island stand-in (8 structures, 8 posts)"


def archipelago_mesh():
    """Stand-in for a sea archipelago: open square water area with islands."""
    rng = np.random.default_rng(7)
    islands = []
    for cx, cy, size in [
        (-450, 300, 120), (-200, 480, 60), (100, 380, 150), (420, 420, 80), (-480, -150, 90),
        (-150, -20, 70), (250, 50, 110), (480, -250, 70), (-300, -450, 110), (120, -420, 90),
    ]:
        t = np.linspace(0, 2 * np.pi, 14, endpoint=False)
        rr = size * (0.75 + 0.5 * rng.random(14))
        islands.append(ShapelyPolygon(np.column_stack([cx + rr * np.cos(t), cy + rr * np.sin(t)])).convex_hull)
    dom = box(-750, -750, 750, 750)
    for isl in islands:
        dom = dom.difference(isl)
    return triangulate(densify(dom, 20.0), 200.0), "reduced-scale archipelago stand-in (10 islands)"


def two_element_square():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    tris = np.array([[0, 1, 2], [0, 2, 3]])
    edges = boundary_edges_of(tris)
    return TriMesh.from_linear(pts, tris, edges, np.zeros(len(edges), dtype=np.int64)), "unit square, two P2 elements"


BUILDERS = {
    "case1": case1_mesh,
    "narrow_gap": narrow_gap_mesh,
    "wide_slot": wide_slot_mesh,
    "box2": box2_open_mesh,
    "square_hole": square_obstacle_mesh,
    "island": island_mesh,
    "archipelago": archipelago_mesh,
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--only", nargs="*", choices=sorted(BUILDERS))
    args = parser.parse_args()
    OUT.mkdir(parents=True, exist_ok=True)
    for name in args.only or BUILDERS:
        mesh, comment = BUILDERS[name]()
        validate_mesh(mesh)
        geom = geometry_from_mesh(mesh)
        geom.validate()
        path = OUT / f"{name}.mesh"
        write_mesh(path, mesh, comment)
        print(
            f"{path.relative_to(ROOT)}: {mesh.node_count} nodes ({len(mesh.corner_nodes)} corners), "
            f"{mesh.element_count} elements, {geom.n_obstacles} obstacles, area {geom.area:.4f}"
        )
    mesh, comment = two_element_square()
    write_mesh(ROOT / "tests" / "data" / "square_2el.mesh", mesh, comment)


if __name__ == "__main__":
    main()
