"""Survey domain, quadratic triangle mesh and the geometric queries on them.

Coordinates are plain ``(x, y)`` pairs in meters. The mesh file format is a
small line-oriented text format::

    hedac-mesh v1
    NODES n
    id x y                      (n lines, ids 1-based)
    ELEMENTS m
    id n1 n2 n3 n4 n5 n6        (corners, then midsides opposite n1, n2, n3)
    BOUNDARY k
    node_a node_b tag           (corner nodes of a boundary edge; 0 = outer)

Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np
import shapely
from scipy.sparse import coo_matrix
from scipy.spatial import cKDTree
from scipy.sparse.csgraph import connected_components

Point2 = tuple[float, float]

MIDSIDE_TOL = 1e-9
# Trial areas below this are treated as zero when testing feasibility.
AREA_FLOOR = 1e-9
CIRCLE_SEGMENTS = 64

# Local edge k of a P2 element joins these corners; its midside node is k + 3.
EDGE_CORNERS = ((1, 2), (2, 0), (0, 1))


class MeshError(ValueError):
    """Base class for mesh loading problems."""


class MeshParseError(MeshError):
    """Malformed mesh file."""


class MeshValidationError(MeshError):
    """Mesh parsed but violates a structural invariant."""


def signed_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@dataclass(frozen=True)
class Polygon:
    """Simple closed polygon; the last vertex connects back to the first."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least 3 (x, y) vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("polygon vertices must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def signed_area(self) -> float:
        return signed_area(self.vertices)

    @property
    def orientation(self) -> str:
        return "ccw" if self.signed_area > 0 else "cw"

    def oriented(self, orientation: str) -> Polygon:
        if self.orientation == orientation:
            return self
        return Polygon(self.vertices[::-1].copy())

    def segments(self) -> np.ndarray:
        """Edges as an ``(k, 4)`` array of ``x0, y0, x1, y1``."""
        v = self.vertices
        return np.hstack([v, np.roll(v, -1, axis=0)])


@dataclass(frozen=True)
class DomainGeometry:
    """Outer boundary (counter-clockwise) with obstacle holes (clockwise)."""

    outer: Polygon
    obstacles: tuple[Polygon, ...] = ()
    _segments: np.ndarray = field(init=False, repr=False, compare=False)
    _seg_terms: tuple = field(init=False, repr=False, compare=False)
    _shape: shapely.Polygon = field(init=False, repr=False, compare=False)
    _boundary: shapely.MultiLineString = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "outer", self.outer.oriented("ccw"))
        object.__setattr__(
            self, "obstacles", tuple(p.oriented("cw") for p in self.obstacles)
        )
        segs = np.vstack([self.outer.segments()] + [p.segments() for p in self.obstacles])
        segs.setflags(write=False)
        object.__setattr__(self, "_segments", segs)
        object.__setattr__(self, "_seg_terms", _segment_terms(segs))
        shape = shapely.Polygon(self.outer.vertices, [p.vertices for p in self.obstacles])
        shapely.prepare(shape)
        object.__setattr__(self, "_shape", shape)
        boundary = shapely.MultiLineString([s.reshape(2, 2) for s in segs])
        shapely.prepare(boundary)
        object.__setattr__(self, "_boundary", boundary)

    @property
    def n_obstacles(self) -> int:
        return len(self.obstacles)

    @property
    def area(self) -> float:
        return self.outer.signed_area + sum(p.signed_area for p in self.obstacles)

    @property
    def segments(self) -> np.ndarray:
        return self._segments

    @property
    def shape(self) -> shapely.Polygon:
        return self._shape

    def validate(self) -> None:
        """Raise :class:`MeshValidationError` unless obstacles are disjoint and interior."""
        outer = shapely.Polygon(self.outer.vertices)
        if not outer.is_valid:
            raise MeshValidationError("outer boundary is not a simple polygon")
        holes = [shapely.Polygon(p.vertices) for p in self.obstacles]
        for j, hole in enumerate(holes, start=1):
            if not hole.is_valid:
                raise MeshValidationError(f"obstacle {j} is not a simple polygon")
            if not outer.contains(hole) or hole.boundary.intersects(outer.boundary):
                raise MeshValidationError(f"obstacle {j} is not strictly inside the outer boundary")
        for j in range(len(holes)):
            for k in range(j + 1, len(holes)):
                if holes[j].intersects(holes[k]):
                    raise MeshValidationError(f"obstacles {j + 1} and {k + 1} overlap")
        if not self.shape.is_valid:
            raise MeshValidationError("domain is not a valid polygon with holes")

    def contains(self, p: Point2) -> bool:
        """Even-odd point-in-domain test (points on the boundary are ambiguous)."""
        x, y = p
        s = self._segments
        y0, y1 = s[:, 1], s[:, 3]
        straddle = (y0 > y) != (y1 > y)
        if not straddle.any():
            return False
        s = s[straddle]
        x_cross = s[:, 0] + (y - s[:, 1]) * (s[:, 2] - s[:, 0]) / (s[:, 3] - s[:, 1])
        return bool(np.count_nonzero(x_cross > x) % 2)


def _segment_terms(segs: np.ndarray) -> tuple:
    ax, ay = segs[:, 0].copy(), segs[:, 1].copy()
    dx, dy = segs[:, 2] - ax, segs[:, 3] - ay
    len2 = dx * dx + dy * dy
    inv = np.divide(1.0, len2, out=np.zeros_like(len2), where=len2 > 0)
    return ax, ay, dx, dy, inv


def _segment_distances(terms: tuple, x, y) -> np.ndarray:
    """Distances from the points ``(x, y)`` (any broadcastable shape + segment axis last)."""
    ax, ay, dx, dy, inv = terms
    x = np.asarray(x, dtype=float)[..., None]
    y = np.asarray(y, dtype=float)[..., None]
    t = np.clip(((x - ax) * dx + (y - ay) * dy) * inv, 0.0, 1.0)
    return np.hypot(ax + t * dx - x, ay + t * dy - y)


def distance_to_boundary(geom: DomainGeometry, p: Point2) -> float:
    """Euclidean distance from ``p`` to the nearest boundary segment of any loop."""
    return float(_segment_distances(geom._seg_terms, float(p[0]), float(p[1])).min())


def lens_area(d, r1, r2):
    """Vectorized intersection area of two disks with center separation ``d``."""
    d, r1, r2 = np.broadcast_arrays(
        np.asarray(d, dtype=float), np.asarray(r1, dtype=float), np.asarray(r2, dtype=float)
    )
    out = np.zeros(d.shape)
    rmin = np.minimum(r1, r2)
    # Near-coincident centers count as containment (avoids 0/0 for equal radii).
    contained = d <= np.maximum(np.abs(r1 - r2), 1e-12 * np.maximum(r1, r2))
    out[contained] = math.pi * rmin[contained] ** 2
    partial = ~contained & (d < r1 + r2)
    if partial.any():
        dd, a, b = d[partial], r1[partial], r2[partial]
        ca = np.clip((dd * dd + a * a - b * b) / (2 * dd * a), -1.0, 1.0)
        cb = np.clip((dd * dd + b * b - a * a) / (2 * dd * b), -1.0, 1.0)
        kite = (-dd + a + b) * (dd + a - b) * (dd - a + b) * (dd + a + b)
        area = a * a * np.arccos(ca) + b * b * np.arccos(cb) - 0.5 * np.sqrt(np.maximum(kite, 0.0))
        out[partial] = np.clip(area, 0.0, math.pi * rmin[partial] ** 2)
    return out


def circle_circle_intersection_area(c1: Point2, r1: float, c2: Point2, r2: float) -> float:
    if r1 <= 0 or r2 <= 0:
        raise ValueError("radii must be positive")
    d = math.hypot(c2[0] - c1[0], c2[1] - c1[1])
    return float(lens_area(d, r1, r2))


_UNIT_GON = np.column_stack(
    [
        np.cos(2 * np.pi * np.arange(CIRCLE_SEGMENTS) / CIRCLE_SEGMENTS),
        np.sin(2 * np.pi * np.arange(CIRCLE_SEGMENTS) / CIRCLE_SEGMENTS),
    ]
)
# Circumscribed, so a disk that touches the boundary always clips the polygon.
_UNIT_GON /= math.cos(math.pi / CIRCLE_SEGMENTS)
_UNIT_GON_AREA = CIRCLE_SEGMENTS * math.tan(math.pi / CIRCLE_SEGMENTS)


def circle_outside_domain_area(geom: DomainGeometry, c: Point2, r: float) -> float:
    """Area of the disk ``(c, r)`` lying outside the domain.

    The disk is replaced by a circumscribed 64-gon for clipping and the
    clipped fraction is rescaled to the true disk area. A disk clear of the
    boundary gives exactly 0, one fully outside exactly ``pi r^2``, and any
    disk crossing the boundary a positive area.
    """
    return float(circles_outside_domain_area(geom, np.array([c], dtype=float), np.array([r], dtype=float))[0])


def circles_outside_domain_area(geom: DomainGeometry, centers: np.ndarray, radii) -> np.ndarray:
    """Vectorized :func:`circle_outside_domain_area` for ``centers`` of shape (k, 2)."""
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    radii = np.asarray(radii, dtype=float)
    if radii.ndim == 0:
        radii = np.full(len(centers), float(radii))
    if not (radii > 0).all():
        raise ValueError("radius must be positive")
    disk = np.pi * radii * radii
    dist = shapely.distance(shapely.points(centers), geom._boundary)
    clear = dist >= radii
    out = np.zeros(len(centers))
    if clear.any():
        inside = shapely.contains_xy(geom.shape, centers[clear, 0], centers[clear, 1])
        out[clear] = np.where(inside, 0.0, disk[clear])
    cross = np.nonzero(~clear)[0]
    if len(cross):
        r = radii[cross]
        gons = shapely.polygons(_UNIT_GON[None] * r[:, None, None] + centers[cross, None, :])
        kept = shapely.area(shapely.intersection(gons, geom.shape))
        frac = 1.0 - kept / (_UNIT_GON_AREA * r * r)
        out[cross] = np.clip(frac, 0.0, 1.0) * disk[cross]
    return out


class Location(NamedTuple):
    element: int
    bary: np.ndarray


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Six-node (P2) triangulation with tagged boundary edges.

    ``elements`` rows are ``(c1, c2, c3, m1, m2, m3)`` with ``m_k`` the
    midside node of the edge opposite corner ``c_k``; indices are 0-based.
    ``boundary_edges`` holds the two corner nodes of each boundary edge and
    ``boundary_tags`` its loop tag (0 for the outer boundary).
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    _bary: np.ndarray = field(init=False, repr=False)
    _grid: tuple = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        elements = np.ascontiguousarray(self.elements, dtype=np.int64)
        bedges = np.asarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        btags = np.asarray(self.boundary_tags, dtype=np.int64).ravel()
        for name, arr in (("nodes", nodes), ("elements", elements), ("boundary_edges", bedges), ("boundary_tags", btags)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if elements.ndim != 2 or elements.shape[1] != 6:
            raise MeshValidationError("elements must have 6 nodes each")
        if elements.size and (elements.min() < 0 or elements.max() >= len(nodes)):
            bad = int(np.nonzero((elements < 0).any(1) | (elements >= len(nodes)).any(1))[0][0])
            raise MeshValidationError(f"element {bad + 1} references a node outside 1..{len(nodes)}")
        object.__setattr__(self, "_bary", _barycentric_maps(nodes, elements))
        object.__setattr__(self, "_grid", _build_grid(nodes, elements))

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def element_count(self) -> int:
        return len(self.elements)

    @cached_property
    def node_tree(self) -> cKDTree:
        return cKDTree(self.nodes)

    @property
    def corner_nodes(self) -> np.ndarray:
        return np.unique(self.elements[:, :3])

    @property
    def element_areas(self) -> np.ndarray:
        p = self.nodes[self.elements[:, :3]]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def area(self) -> float:
        return float(self.element_areas.sum())

    def barycentric(self, element: int, p: Point2) -> np.ndarray:
        return self._bary[element] @ np.array([p[0], p[1], 1.0])

    @property
    def lambda_gradient_table(self) -> np.ndarray:
        return self._bary[:, :, :2]

    def lambda_gradients(self, element: int) -> np.ndarray:
        """Constant gradients of the three barycentric coordinates, shape (3, 2)."""
        return self._bary[element][:, :2]

    @classmethod
    def from_linear(cls, points, triangles, segments, tags) -> TriMesh:
        """Build a P2 mesh from a linear triangulation by inserting edge midpoints.

        ``segments``/``tags`` list the boundary edges (corner pairs) and their
        loop tags. Triangles are reoriented counter-clockwise.
        """
        points = np.asarray(points, dtype=float)
        tri = np.array(triangles, dtype=np.int64)
        p = points[tri]
        det = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
        flip = det < 0
        tri[flip] = tri[flip][:, [0, 2, 1]]
        edges = np.concatenate([tri[:, [a, b]] for a, b in EDGE_CORNERS])
        keys = np.sort(edges, axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        mids = 0.5 * (points[uniq[:, 0]] + points[uniq[:, 1]])
        mid_ids = len(points) + inverse.reshape(3, len(tri)).T
        elements = np.hstack([tri, mid_ids])
        nodes = np.vstack([points, mids])
        return cls(nodes, elements, np.asarray(segments, dtype=np.int64), np.asarray(tags, dtype=np.int64))


def _barycentric_maps(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    """Per element, the 3x3 matrix mapping ``(x, y, 1)`` to barycentric coordinates."""
    p = nodes[elements[:, :3]]
    a = np.ones((len(elements), 3, 3))
    a[:, 0, :] = p[:, :, 0]
    a[:, 1, :] = p[:, :, 1]
    det = np.linalg.det(a) if len(elements) else np.zeros(0)
    out = np.full((len(elements), 3, 3), np.nan)
    ok = np.abs(det) > 0
    out[ok] = np.linalg.inv(a[ok])
    return out


def _build_grid(nodes: np.ndarray, elements: np.ndarray):
    if len(elements) == 0:
        return (np.zeros(2), 1.0, (1, 1), np.zeros(2, np.int64), np.zeros(0, np.int64))
    p = nodes[elements[:, :3]]
    lo, hi = p.min(axis=1), p.max(axis=1)
    origin = lo.min(axis=0)
    extent = hi.max(axis=0) - origin
    area = float(np.prod(np.maximum(extent, 1e-12)))
    cell = math.sqrt(area / len(elements)) * 1.5
    shape = (int(extent[0] // cell) + 1, int(extent[1] // cell) + 1)
    i0 = ((lo - origin) // cell).astype(np.int64)
    i1 = ((hi - origin) // cell).astype(np.int64)
    cells, owners = [], []
    for e in range(len(elements)):
        xs = np.arange(i0[e, 0], i1[e, 0] + 1)
        ys = np.arange(i0[e, 1], i1[e, 1] + 1)
        ids = (xs[:, None] * shape[1] + ys[None, :]).ravel()
        cells.append(ids)
        owners.append(np.full(len(ids), e, dtype=np.int64))
    cells = np.concatenate(cells)
    owners = np.concatenate(owners)
    order = np.argsort(cells, kind="stable")
    start = np.searchsorted(cells[order], np.arange(shape[0] * shape[1] + 1))
    return (origin, cell, shape, start, owners[order])


def _candidates(mesh: TriMesh, p: Point2):
    origin, cell, shape, start, owners = mesh._grid
    ix = int(math.floor((p[0] - origin[0]) / cell))
    iy = int(math.floor((p[1] - origin[1]) / cell))
    if not (0 <= ix < shape[0] and 0 <= iy < shape[1]):
        return owners[:0], np.zeros((0, 3))
    k = ix * shape[1] + iy
    cand = owners[start[k]:start[k + 1]]
    return cand, mesh._bary[cand] @ np.array([p[0], p[1], 1.0])


def _location(element, lam) -> Location:
    b = np.clip(lam, 0.0, 1.0)
    return Location(int(element), b / b.sum())


def locate_point(mesh: TriMesh, p: Point2, tol: float = 1e-10) -> Location | None:
    """Containing element and barycentric coordinates of ``p``, or ``None`` outside."""
    cand, lam = _candidates(mesh, p)
    if len(cand) == 0:
        return None
    worst = lam.min(axis=1)
    best = int(np.argmax(worst))
    if not worst[best] >= -tol:
        return None
    return _location(cand[best], lam[best])


def locate_all(mesh: TriMesh, p: Point2, tol: float = 1e-12) -> list[Location]:
    """Every element containing ``p`` (several on shared edges and vertices), by element id."""
    cand, lam = _candidates(mesh, p)
    hits = np.nonzero(lam.min(axis=1) >= -tol)[0] if len(cand) else []
    return sorted((_location(cand[h], lam[h]) for h in hits), key=lambda loc: loc.element)


def _chain_loop(edges: np.ndarray, tag: int) -> list[int]:
    nxt: dict[int, list[int]] = {}
    for a, b in edges:
        nxt.setdefault(int(a), []).append(int(b))
        nxt.setdefault(int(b), []).append(int(a))
    if any(len(v) != 2 for v in nxt.values()):
        raise MeshValidationError(f"boundary tag {tag} does not form a single closed loop")
    start = int(edges[0, 0])
    loop, prev, cur = [start], None, start
    while True:
        a, b = nxt[cur]
        step = b if a == prev else a
        if step == start:
            break
        loop.append(step)
        prev, cur = cur, step
        if len(loop) > len(nxt):
            break
    if len(loop) != len(nxt):
        raise MeshValidationError(f"boundary tag {tag} does not form a single closed loop")
    return loop


def geometry_from_mesh(mesh: TriMesh) -> DomainGeometry:
    tags = np.unique(mesh.boundary_tags)
    if 0 not in tags:
        raise MeshValidationError("mesh has no outer boundary (tag 0)")
    if not np.array_equal(tags, np.arange(len(tags))):
        raise MeshValidationError(f"boundary tags must be 0..n_o without gaps, got {tags.tolist()}")
    loops = []
    for tag in tags:
        loop = _chain_loop(mesh.boundary_edges[mesh.boundary_tags == tag], int(tag))
        loops.append(Polygon(mesh.nodes[loop]))
    return DomainGeometry(loops[0], tuple(loops[1:]))


def validate_mesh(mesh: TriMesh) -> None:
    """Check midside placement, conformity, boundary tagging and connectivity."""
    el = mesh.elements
    nodes = mesh.nodes
    if len(el) == 0:
        raise MeshValidationError("mesh has no elements")
    corners = set(np.unique(el[:, :3]).tolist())
    mids = set(np.unique(el[:, 3:]).tolist())
    if corners & mids:
        raise MeshValidationError("a node is used both as corner and midside")
    unused = len(nodes) - len(corners | mids)
    if unused:
        raise MeshValidationError(f"{unused} nodes are not referenced by any element")

    for k, (a, b) in enumerate(EDGE_CORNERS):
        expected = 0.5 * (nodes[el[:, a]] + nodes[el[:, b]])
        err = np.abs(nodes[el[:, k + 3]] - expected).max(axis=1)
        if err.max() > MIDSIDE_TOL:
            bad = int(np.argmax(err))
            raise MeshValidationError(
                f"element {bad + 1}: midside node {el[bad, k + 3] + 1} is {err[bad]:.3g} m off its edge midpoint"
            )

    edges = np.concatenate([el[:, [a, b]] for a, b in EDGE_CORNERS])
    mid = np.concatenate([el[:, k + 3] for k in range(3)])
    keys = np.sort(edges, axis=1)
    uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    if counts.max() > 2:
        raise MeshValidationError("an edge is shared by more than two elements")
    first_mid = np.full(len(uniq), -1)
    first_mid[inverse[::-1]] = mid[::-1]
    if np.any(first_mid[inverse] != mid):
        raise MeshValidationError("non-conforming mesh: neighbouring elements disagree on a midside node")

    boundary = {tuple(e) for e in uniq[counts == 1].tolist()}
    tagged = {}
    for (a, b), tag in zip(np.sort(mesh.boundary_edges, axis=1).tolist(), mesh.boundary_tags.tolist()):
        if (a, b) in tagged:
            raise MeshValidationError(f"boundary edge {a + 1}-{b + 1} is tagged more than once")
        tagged[(a, b)] = tag
    missing = boundary - tagged.keys()
    if missing:
        a, b = sorted(missing)[0]
        raise MeshValidationError(f"boundary edge {a + 1}-{b + 1} carries no boundary tag")
    extra = tagged.keys() - boundary
    if extra:
        a, b = sorted(extra)[0]
        raise MeshValidationError(f"tagged edge {a + 1}-{b + 1} is not on the mesh boundary")

    ne = len(el)
    interior = np.nonzero(counts == 2)[0]
    owner = np.tile(np.arange(ne), 3)
    order = np.argsort(inverse, kind="stable")
    pos = np.searchsorted(inverse[order], interior)
    e1, e2 = owner[order[pos]], owner[order[pos + 1]]
    adj = coo_matrix((np.ones(len(e1)), (e1, e2)), shape=(ne, ne))
    n_comp, _ = connected_components(adj, directed=False)
    if n_comp != 1:
        raise MeshValidationError(f"domain is not connected ({n_comp} components)")


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield lineno, line.split()


def _read_section(lines, name: str, width: int, dtype):
    try:
        lineno, head = next(lines)
    except StopIteration:
        raise MeshParseError(f"missing {name} section") from None
    if len(head) != 2 or head[0] != name:
        raise MeshParseError(f"line {lineno}: expected '{name} <count>'")
    try:
        count = int(head[1])
    except ValueError:
        raise MeshParseError(f"line {lineno}: bad {name} count {head[1]!r}") from None
    rows = np.empty((count, width), dtype=dtype)
    for i in range(count):
        try:
            lineno, parts = next(lines)
        except StopIteration:
            raise MeshParseError(f"{name}: expected {count} rows, file ended after {i}") from None
        if len(parts) != width:
            raise MeshParseError(f"line {lineno}: expected {width} fields, got {len(parts)}")
        try:
            rows[i] = [dtype(v) for v in parts]
        except ValueError:
            raise MeshParseError(f"line {lineno}: non-numeric field") from None
    return rows


def parse_mesh(text: str) -> TriMesh:
    lines = _content_lines(text)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MeshParseError("empty mesh file") from None
    if header != ["hedac-mesh", "v1"]:
        raise MeshParseError(f"line {lineno}: expected header 'hedac-mesh v1'")
    node_rows = _read_section(lines, "NODES", 3, float)
    elem_rows = _read_section(lines, "ELEMENTS", 7, int)
    bnd_rows = _read_section(lines, "BOUNDARY", 3, int)
    leftover = next(lines, None)
    if leftover is not None:
        raise MeshParseError(f"line {leftover[0]}: unexpected content after BOUNDARY section")

    n = len(node_rows)
    ids = node_rows[:, 0]
    if not np.array_equal(ids, np.arange(1, n + 1)):
        raise MeshParseError("node ids must run 1..n in order")
    if not np.all(np.isfinite(node_rows[:, 1:])):
        raise MeshValidationError("non-finite node coordinates")
    if not np.array_equal(elem_rows[:, 0], np.arange(1, len(elem_rows) + 1)):
        raise MeshParseError("element ids must run 1..m in order")
    if bnd_rows.size and (bnd_rows[:, :2].min() < 1 or bnd_rows[:, :2].max() > n):
        raise MeshValidationError("boundary edge references a node outside 1..n")
    return TriMesh(node_rows[:, 1:], elem_rows[:, 1:] - 1, bnd_rows[:, :2] - 1, bnd_rows[:, 2])


def load_mesh(path) -> tuple[DomainGeometry, TriMesh]:
    """Read, validate and return ``(geometry, mesh)`` from a ``hedac-mesh v1`` file."""
    path = Path(path)
    mesh = parse_mesh(path.read_text())
    validate_mesh(mesh)
    geom = geometry_from_mesh(mesh)
    geom.validate()
    return geom, mesh


def write_mesh(path, mesh: TriMesh, comment: str | None = None) -> None:
    out = ["hedac-mesh v1"]
    if comment:
        out.extend(f"# {line}" for line in comment.splitlines())
    out.append(f"NODES {mesh.node_count}")
    out.extend(f"{i} {x!r} {y!r}" for i, (x, y) in enumerate(mesh.nodes.tolist(), start=1))
    out.append(f"ELEMENTS {mesh.element_count}")
    out.extend(
        f"{i} " + " ".join(str(v + 1) for v in row)
        for i, row in enumerate(mesh.elements.tolist(), start=1)
    )
    out.append(f"BOUNDARY {len(mesh.boundary_edges)}")
    out.extend(
        f"{a + 1} {b + 1} {t}"
        for (a, b), t in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags.tolist())
    )
    Path(path).write_text("\n".join(out) + "\n")


def boundary_edges_of(elements: np.ndarray) -> np.ndarray:
    """Corner pairs of edges owned by exactly one element."""
    edges = np.concatenate([elements[:, [a, b]] for a, b in EDGE_CORNERS])
    keys = np.sort(edges, axis=1)
    uniq, counts = np.unique(keys, axis=0, return_counts=True)
    return uniq[counts == 1]


def tag_boundary_loops(nodes: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Tag boundary edges by loop: 0 for the loop enclosing the largest area."""
    n = int(edges.max()) + 1
    adj = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    comp = labels[edges[:, 0]]
    comps = np.unique(comp)
    areas = []
    for c in comps:
        loop = _chain_loop(edges[comp == c], int(c))
        areas.append(abs(signed_area(nodes[loop])))
    order = comps[np.argsort(areas)[::-1]]
    remap = {int(c): t for t, c in enumerate(order)}
    return np.array([remap[int(c)] for c in comp], dtype=np.int64)


def structured_rectangle(
    x0: float, y0: float, x1: float, y1: float, nx: int, ny: int, mirror: bool = False
) -> TriMesh:
    """Uniform P2 mesh of a rectangle, each grid cell split along a diagonal.

    With ``mirror`` (``nx`` even) the right half is the exact reflection of the
    left half about the vertical center line. Intended for tests and quick
    experiments; survey meshes come from files.
    """
    if mirror:
        if nx % 2:
            raise ValueError("mirror needs an even nx")
        left = np.linspace(x0, 0.5 * (x0 + x1), nx // 2 + 1)
        xs = np.concatenate([left, (x0 + x1) - left[-2::-1]])
    else:
        xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    idx = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    a, b = idx[:-1, :-1], idx[1:, :-1]
    c, d = idx[1:, 1:], idx[:-1, 1:]
    flip = np.zeros((nx, ny), dtype=bool)
    if mirror:
        flip[nx // 2:, :] = True
    keep = ~flip
    tris = np.vstack(
        [
            np.column_stack([a[keep], b[keep], c[keep]]),
            np.column_stack([a[keep], c[keep], d[keep]]),
            np.column_stack([a[flip], b[flip], d[flip]]),
            np.column_stack([b[flip], c[flip], d[flip]]),
        ]
    )
    edges = boundary_edges_of(tris)
    return TriMesh.from_linear(pts, tris, edges, np.zeros(len(edges), dtype=np.int64))
