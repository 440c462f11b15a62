"""Polygonal meshes with star-center sub-triangulation and adaptive refinement.

A mesh is a conforming decomposition of a 2D domain into simple polygons: any
two polygons share whole edges and vertices only.  Vertices with interior
angle pi (hanging nodes) are genuine cycle members and carry ordinary degrees
of freedom.  Refinement splits a marked polygon into quadrilaterals by
connecting edge midpoints to the centroid; a closure pass keeps at most one
hanging node per straight polygon side.
"""

import numpy as np

# Absolute tolerance for signed-area style predicates on unit-scaled coordinates.
GEOM_TOL = 1e-12
# Normalized collinearity threshold (sine of the turn angle).  Looser than
# GEOM_TOL because repeated midpoint subdivision accumulates one rounding per
# level; genuine corners on admissible meshes have |sin| well above 1e-6.
COLLINEAR_TOL = 1e-9


class MeshError(ValueError):
    """Raised when mesh input or a mesh invariant is invalid."""


def _signed_area(coords):
    x, y = coords[:, 0], coords[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def _area_centroid(coords):
    x, y = coords[:, 0], coords[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * np.sum(cross)
    cx = np.sum((x + xn) * cross) / (6.0 * area)
    cy = np.sum((y + yn) * cross) / (6.0 * area)
    return area, np.array([cx, cy])


class PolygonGeometry:
    """Immutable per-polygon geometry used by the element and quadrature layers.

    Attributes
    ----------
    coords : (N, 2) array
        Vertex coordinates in CCW cycle order.
    vertex_ids, edge_ids : (N,) int arrays
        Global ids; edge k joins cycle vertices k and k+1 (mod N).
    edge_signs : (N,) int array
        +1 where the cycle traverses the stored global edge orientation.
    normals, tangents : (N, 2) arrays
        Outward unit normals and cycle-direction unit tangents per edge.
    """

    def __init__(self, pid, coords, vertex_ids, edge_ids, edge_signs):
        self.id = pid
        self.coords = coords
        self.vertex_ids = vertex_ids
        self.edge_ids = edge_ids
        self.edge_signs = edge_signs
        self.n_vertices = len(coords)
        vecs = np.roll(coords, -1, axis=0) - coords
        self.edge_lengths = np.hypot(vecs[:, 0], vecs[:, 1])
        self.tangents = vecs / self.edge_lengths[:, None]
        # outward normal for a CCW cycle: rotate the tangent by -90 degrees
        self.normals = np.column_stack([self.tangents[:, 1], -self.tangents[:, 0]])
        self.edge_midpoints = 0.5 * (coords + np.roll(coords, -1, axis=0))
        area, centroid = _area_centroid(coords)
        self.area = area
        self.centroid = centroid
        self.star_center = centroid
        diff = coords[:, None, :] - coords[None, :, :]
        self.diameter = np.sqrt(np.max(np.sum(diff**2, axis=2)))

    def subtriangles(self):
        """Star sub-triangulation (star_center, z_j, z_{j+1}) as an (N, 3, 2) array."""
        n = self.n_vertices
        tris = np.empty((n, 3, 2))
        tris[:, 0] = self.star_center
        tris[:, 1] = self.coords
        tris[:, 2] = np.roll(self.coords, -1, axis=0)
        return tris

    def subtriangle_areas(self):
        tris = self.subtriangles()
        u = tris[:, 1] - tris[:, 0]
        v = tris[:, 2] - tris[:, 0]
        return 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])


def subtriangulate(polygon):
    """Sub-triangulate a polygon from its star center.

    Returns the (N, 3, 2) triangle array.  Raises MeshError if any triangle is
    degenerate, which signals a star-shapedness failure.
    """
    areas = polygon.subtriangle_areas()
    if np.any(areas <= GEOM_TOL * max(polygon.area, GEOM_TOL)):
        raise MeshError(
            f"polygon {polygon.id} is not star-shaped w.r.t. its star center "
            f"(min sub-triangle area {areas.min():.3e})"
        )
    return polygon.subtriangles()


class Mesh:
    """Polygonal mesh with full vertex/edge/polygon adjacency.

    Construct through :func:`build_mesh`.  A built mesh is immutable; the
    refinement functions return new meshes.
    """

    def __init__(self, vertices, cycles, edges, edge_polygons, polygon_edges,
                 polygon_edge_signs):
        self.vertices = vertices
        self.cycles = cycles
        self.edges = edges
        self.edge_polygons = edge_polygons
        self.polygon_edges = polygon_edges
        self.polygon_edge_signs = polygon_edge_signs
        self.n_vertices = len(vertices)
        self.n_edges = len(edges)
        self.n_polygons = len(cycles)
        self.boundary_edge = edge_polygons[:, 1] < 0
        self.boundary_vertex = np.zeros(self.n_vertices, dtype=bool)
        self.boundary_vertex[self.edges[self.boundary_edge].ravel()] = True
        vecs = vertices[edges[:, 1]] - vertices[edges[:, 0]]
        self.edge_lengths = np.hypot(vecs[:, 0], vecs[:, 1])
        self.edge_tangents = vecs / self.edge_lengths[:, None]
        self.edge_normals = np.column_stack(
            [self.edge_tangents[:, 1], -self.edge_tangents[:, 0]]
        )
        self._polygons = [None] * self.n_polygons

    def polygon(self, pid):
        """PolygonGeometry view of polygon ``pid`` (cached)."""
        poly = self._polygons[pid]
        if poly is None:
            cycle = self.cycles[pid]
            poly = PolygonGeometry(
                pid,
                self.vertices[cycle],
                cycle,
                self.polygon_edges[pid],
                self.polygon_edge_signs[pid],
            )
            self._polygons[pid] = poly
        return poly

    @property
    def areas(self):
        return np.array([self.polygon(p).area for p in range(self.n_polygons)])

    @property
    def diameters(self):
        return np.array([self.polygon(p).diameter for p in range(self.n_polygons)])

    @property
    def min_edge_ratio(self):
        """min over polygons of (shortest edge length) / diameter, a rho estimate."""
        return min(
            self.polygon(p).edge_lengths.min() / self.polygon(p).diameter
            for p in range(self.n_polygons)
        )

    def total_area(self):
        return sum(self.polygon(p).area for p in range(self.n_polygons))

    def edge_neighbor(self, eid, pid):
        """The polygon on the other side of edge ``eid``, or -1 on the boundary."""
        a, b = self.edge_polygons[eid]
        return b if a == pid else a


def build_mesh(vertices, polygon_cycles, validate=True):
    """Build a Mesh from vertex coordinates and CCW polygon vertex cycles.

    Parameters
    ----------
    vertices : (nv, 2) array_like
    polygon_cycles : sequence of int sequences
        Each cycle lists vertex ids counterclockwise around one polygon.
    validate : bool
        Check CCW orientation, conformity, manifoldness and star-shapedness.

    Raises
    ------
    MeshError
        On non-CCW cycles, duplicate polygons, non-manifold edges (more than
        two adjacent polygons) or star-shapedness violations.
    """
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshError("vertices must be an (nv, 2) array")
    if not np.all(np.isfinite(vertices)):
        raise MeshError("vertex coordinates must be finite")
    cycles = [np.asarray(c, dtype=int) for c in polygon_cycles]

    if validate:
        seen = set()
        for pid, cycle in enumerate(cycles):
            if len(cycle) < 3:
                raise MeshError(f"polygon {pid} has fewer than 3 vertices")
            if len(set(cycle.tolist())) != len(cycle):
                raise MeshError(f"polygon {pid} repeats a vertex")
            if cycle.min() < 0 or cycle.max() >= len(vertices):
                raise MeshError(f"polygon {pid} references an unknown vertex")
            key = frozenset(cycle.tolist())
            if key in seen:
                raise MeshError(f"duplicate polygon {pid}")
            seen.add(key)
            coords = vertices[cycle]
            vecs = np.roll(coords, -1, axis=0) - coords
            lengths = np.hypot(vecs[:, 0], vecs[:, 1])
            if np.any(lengths <= 0.0):
                raise MeshError(f"polygon {pid} has a zero-length edge")
            if _signed_area(coords) <= GEOM_TOL * lengths.max() ** 2:
                raise MeshError(f"polygon {pid} is not counterclockwise")

    edge_index = {}
    edges = []
    edge_polygons = []
    polygon_edges = []
    polygon_edge_signs = []
    for pid, cycle in enumerate(cycles):
        n = len(cycle)
        eids = np.empty(n, dtype=int)
        signs = np.empty(n, dtype=int)
        for k in range(n):
            a, b = int(cycle[k]), int(cycle[(k + 1) % n])
            key = (a, b) if a < b else (b, a)
            eid = edge_index.get(key)
            if eid is None:
                eid = len(edges)
                edge_index[key] = eid
                edges.append(key)
                edge_polygons.append([pid, -1])
            else:
                if edge_polygons[eid][1] != -1:
                    raise MeshError(
                        f"edge {key} is adjacent to more than two polygons"
                    )
                edge_polygons[eid][1] = pid
            eids[k] = eid
            signs[k] = 1 if a < b else -1
        polygon_edges.append(eids)
        polygon_edge_signs.append(signs)

    mesh = Mesh(
        vertices,
        cycles,
        np.array(edges, dtype=int).reshape(-1, 2),
        np.array(edge_polygons, dtype=int).reshape(-1, 2),
        polygon_edges,
        polygon_edge_signs,
    )

    if validate:
        for pid in range(mesh.n_polygons):
            subtriangulate(mesh.polygon(pid))
    return mesh


def _turn_sines(coords):
    """sin and cos of the turn angle at every cycle vertex (normalized)."""
    prev = coords - np.roll(coords, 1, axis=0)
    nxt = np.roll(coords, -1, axis=0) - coords
    lp = np.hypot(prev[:, 0], prev[:, 1])
    ln = np.hypot(nxt[:, 0], nxt[:, 1])
    cross = (prev[:, 0] * nxt[:, 1] - prev[:, 1] * nxt[:, 0]) / (lp * ln)
    dot = (prev[:, 0] * nxt[:, 0] + prev[:, 1] * nxt[:, 1]) / (lp * ln)
    return cross, dot


def hanging_vertex_mask(mesh, pid):
    """Boolean mask over the cycle of ``pid``: True at interior-angle-pi vertices."""
    cross, dot = _turn_sines(mesh.polygon(pid).coords)
    return (np.abs(cross) <= COLLINEAR_TOL) & (dot > 0.0)


def _collinear_runs(mesh, pid):
    """Maximal straight sides of a polygon as lists of cycle positions.

    Each run [j0, ..., j1] spans consecutive collinear edges; positions
    strictly inside a run are hanging vertices.
    """
    hanging = hanging_vertex_mask(mesh, pid)
    n = len(hanging)
    corners = [j for j in range(n) if not hanging[j]]
    runs = []
    for a, b in zip(corners, corners[1:] + [corners[0] + n]):
        runs.append([(a + s) % n for s in range(b - a + 1)])
    return runs


def max_hanging_per_side(mesh):
    """Largest number of hanging vertices on any straight polygon side."""
    worst = 0
    for pid in range(mesh.n_polygons):
        for run in _collinear_runs(mesh, pid):
            worst = max(worst, len(run) - 2)
    return worst


def _edge_run_has_hanging(mesh, pid, eid):
    """True if the straight side of ``pid`` containing edge ``eid`` already
    carries a hanging vertex."""
    eids = mesh.polygon_edges[pid]
    pos = int(np.nonzero(eids == eid)[0][0])
    for run in _collinear_runs(mesh, pid):
        # run of cycle positions [j0..j1]; edge at position j joins j, j+1
        if pos in run[:-1]:
            return len(run) > 2
    raise MeshError(f"edge {eid} not found on polygon {pid}")  # pragma: no cover


def refine(mesh, marked):
    """Refine the marked polygons by midpoint-to-centroid subdivision.

    Each marked polygon with N cycle vertices is replaced by N quadrilaterals
    (z_j, mid E(j), centroid, mid E(j-1)).  Unmarked neighbors gain split-edge
    midpoints as hanging vertices.  Closure: a neighbor whose straight side
    would end up with two hanging nodes is marked as well, iterated to a fixed
    point.

    Returns a new Mesh; ``refine(mesh, [])`` returns ``mesh`` itself.
    """
    marked = set(int(p) for p in marked)
    if not marked:
        return mesh
    if not marked <= set(range(mesh.n_polygons)):
        raise MeshError("marked set contains unknown polygon ids")

    for _ in range(mesh.n_polygons + 1):
        grown = False
        for pid in list(marked):
            for eid in mesh.polygon_edges[pid]:
                qid = mesh.edge_neighbor(eid, pid)
                if qid < 0 or qid in marked:
                    continue
                if _edge_run_has_hanging(mesh, qid, eid):
                    marked.add(qid)
                    grown = True
        if not grown:
            break
    else:  # pragma: no cover - guarded against corrupt adjacency
        raise MeshError("hanging-node closure did not terminate")

    split = np.zeros(mesh.n_edges, dtype=bool)
    for pid in marked:
        split[mesh.polygon_edges[pid]] = True

    new_vertices = [mesh.vertices]
    midpoint_id = np.full(mesh.n_edges, -1, dtype=int)
    nid = mesh.n_vertices
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    for eid in np.nonzero(split)[0]:
        midpoint_id[eid] = nid
        nid += 1
    new_vertices.append(mids[split])
    centroid_id = {}
    for pid in sorted(marked):
        centroid_id[pid] = nid
        nid += 1
        new_vertices.append(mesh.polygon(pid).centroid[None, :])
    vertices = np.vstack(new_vertices)

    new_cycles = []
    for pid in range(mesh.n_polygons):
        cycle = mesh.cycles[pid]
        eids = mesh.polygon_edges[pid]
        n = len(cycle)
        if pid in marked:
            cid = centroid_id[pid]
            for j in range(n):
                new_cycles.append(
                    np.array(
                        [cycle[j], midpoint_id[eids[j]], cid,
                         midpoint_id[eids[j - 1]]],
                        dtype=int,
                    )
                )
        else:
            out = []
            for j in range(n):
                out.append(cycle[j])
                if split[eids[j]]:
                    out.append(midpoint_id[eids[j]])
            new_cycles.append(np.array(out, dtype=int))

    return build_mesh(vertices, new_cycles)


def uniform_refine(mesh):
    """Refine every polygon; creates no hanging nodes when the input has none."""
    return refine(mesh, range(mesh.n_polygons))


# ---------------------------------------------------------------------------
# mesh generators for the benchmark domains and tests

def square_grid_mesh(n, lo=(0.0, 0.0), hi=(1.0, 1.0)):
    """n-by-n grid of quadrilaterals on the axis-aligned rectangle [lo, hi]."""
    xs = np.linspace(lo[0], hi[0], n + 1)
    ys = np.linspace(lo[1], hi[1], n + 1)
    xv, yv = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.column_stack([xv.ravel(), yv.ravel()])

    def vid(i, j):
        return i * (n + 1) + j

    cycles = [
        [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]
        for i in range(n)
        for j in range(n)
    ]
    return build_mesh(vertices, cycles)


def perturbed_grid_mesh(n, amplitude=0.1, seed=0):
    """Unit-square grid with interior vertices shifted by up to amplitude*h."""
    mesh = square_grid_mesh(n)
    rng = np.random.default_rng(seed)
    h = 1.0 / n
    shift = rng.uniform(-amplitude * h, amplitude * h, size=(mesh.n_vertices, 2))
    shift[mesh.boundary_vertex] = 0.0
    return build_mesh(mesh.vertices + shift, mesh.cycles)


def lshape_mesh():
    """Three unit squares covering (-1,1)^2 minus the fourth quadrant."""
    vertices = np.array(
        [
            [0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0],
            [-1.0, 1.0], [-1.0, 0.0], [-1.0, -1.0], [0.0, -1.0],
        ]
    )
    cycles = [
        [0, 1, 2, 3],   # first quadrant
        [5, 0, 3, 4],   # second quadrant
        [6, 7, 0, 5],   # third quadrant
    ]
    return build_mesh(vertices, cycles)


def zshape_mesh():
    """Hexagonal domain (0,0),(1,0),(1,1),(-1,1),(-1,-1),(1,-1): three unit
    squares plus the triangle below the re-entrant diagonal."""
    vertices = np.array(
        [
            [0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0],
            [-1.0, 1.0], [-1.0, 0.0], [-1.0, -1.0], [0.0, -1.0],
            [1.0, -1.0],
        ]
    )
    cycles = [
        [0, 1, 2, 3],
        [5, 0, 3, 4],
        [6, 7, 0, 5],
        [7, 8, 0],     # triangle (0,-1),(1,-1),(0,0)
    ]
    return build_mesh(vertices, cycles)


# ---------------------------------------------------------------------------
# plain-text mesh file format: "nv np", nv lines "x y", np lines "N v1 ... vN"

def write_mesh_file(mesh, path):
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_polygons}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x!r} {y!r}\n")
        for cycle in mesh.cycles:
            fh.write(f"{len(cycle)} " + " ".join(str(v) for v in cycle) + "\n")


def read_mesh_file(path):
    with open(path) as fh:
        tokens = fh.read().split()
    it = iter(tokens)
    nv, npoly = int(next(it)), int(next(it))
    vertices = np.array(
        [[float(next(it)), float(next(it))] for _ in range(nv)]
    )
    cycles = []
    for _ in range(npoly):
        n = int(next(it))
        cycles.append([int(next(it)) for _ in range(n)])
    return build_mesh(vertices, cycles)


def flip_edge_orientation(mesh, eid):
    """Copy of the mesh with the stored orientation of one edge reversed.

    Verification utility for the sign-convention gauge invariance: solving on
    the flipped mesh must reproduce the same piecewise projection Gu_h.
    """
    edges = mesh.edges.copy()
    edges[eid] = edges[eid, ::-1]
    signs = [s.copy() for s in mesh.polygon_edge_signs]
    for pid in mesh.edge_polygons[eid]:
        if pid >= 0:
            k = int(np.nonzero(mesh.polygon_edges[pid] == eid)[0][0])
            signs[pid][k] = -signs[pid][k]
    return Mesh(
        mesh.vertices,
        mesh.cycles,
        edges,
        mesh.edge_polygons,
        mesh.polygon_edges,
        signs,
    )
