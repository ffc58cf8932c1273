"""Domain catalogue, exact metrics, and boundary-graded triangulations.

Domains carry exact closed-form metrics (area, perimeter, curvature
integral, corner angles); meshes are piecewise-linear P1 triangulations
whose boundary nodes lie exactly on the domain boundary. Disk and annulus
are meshed with concentric rings whose angular counts grow with radius;
regular polygons reuse the ring construction with the rings scaled onto
shrunken copies of the polygon; rectangles and the L-shape are graded
tensor grids; imported polygons are ear-clipped and refined.

Boundary grading is geometric with ratio 0.5 per layer and at most 12
layers, sized so the first layer is at most a quarter of the requested
boundary-layer width.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, MeshResourceError

_MAX_GRADING_LEVELS = 12
_DEFAULT_NODE_CAP = 500_000


# ---------------------------------------------------------------------------
# domains and exact metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """Geometric descriptor; build through the factory classmethods."""

    kind: str
    params: tuple = ()
    vertices: tuple = ()  # only for kind == "polygon", ((x, y), ...)

    @classmethod
    def disk(cls, radius):
        if radius <= 0:
            raise GeometryError("disk radius must be positive")
        return cls("disk", (float(radius),))

    @classmethod
    def annulus(cls, outer, inner):
        if not 0 < inner < outer:
            raise GeometryError("annulus requires 0 < inner radius < outer radius")
        return cls("annulus", (float(outer), float(inner)))

    @classmethod
    def rectangle(cls, a, b):
        if a <= 0 or b <= 0:
            raise GeometryError("rectangle side lengths must be positive")
        return cls("rectangle", (float(a), float(b)))

    @classmethod
    def regular_polygon(cls, n, circumradius):
        if int(n) != n or n < 3:
            raise GeometryError("regular polygon needs an integer n >= 3")
        if circumradius <= 0:
            raise GeometryError("circumradius must be positive")
        return cls("ngon", (int(n), float(circumradius)))

    @classmethod
    def lshape(cls, a=1.0, b=1.0):
        if a <= 0 or b <= 0:
            raise GeometryError("L-shape arm lengths must be positive")
        return cls("lshape", (float(a), float(b)))

    @classmethod
    def polygon(cls, vertices):
        verts = tuple((float(x), float(y)) for x, y in vertices)
        if len(verts) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        if _signed_area(verts) <= 0:
            verts = verts[::-1]
        if _signed_area(verts) <= 0:
            raise GeometryError("polygon must enclose positive area")
        if not _is_simple_polygon(verts):
            raise GeometryError("polygon must be simple (non-self-intersecting)")
        return cls("polygon", (), verts)

    def __str__(self):
        if self.kind == "polygon":
            return f"polygon[{len(self.vertices)}]"
        return self.kind + ":" + ",".join(f"{p:g}" for p in self.params)


@dataclass(frozen=True)
class DomainMetrics:
    """Exact closed-form invariants of a domain."""

    volume: float
    perimeter: float
    curvature_integral: float
    corner_angles: tuple = ()


def _signed_area(verts):
    s = 0.0
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def _segments_intersect(p, q, r, s):
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(v) < 1e-14:
            return 0
        return 1 if v > 0 else -1

    o1, o2 = orient(p, q, r), orient(p, q, s)
    o3, o4 = orient(r, s, p), orient(r, s, q)
    return o1 != o2 and o3 != o4


def _is_simple_polygon(verts):
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            c, d = verts[j], verts[(j + 1) % n]
            if _segments_intersect(a, b, c, d):
                return False
    return True


def _polygon_interior_angles(verts):
    n = len(verts)
    angles = []
    for i in range(n):
        prev = np.asarray(verts[i - 1])
        cur = np.asarray(verts[i])
        nxt = np.asarray(verts[(i + 1) % n])
        u = prev - cur
        v = nxt - cur
        ang = math.atan2(v[1], v[0]) - math.atan2(u[1], u[0])
        ang = ang % (2.0 * math.pi)
        # interior is to the left of the CCW boundary; the angle from the
        # outgoing to the incoming edge measured through the interior
        ang = 2.0 * math.pi - ang
        angles.append(ang)
    return tuple(a for a in angles if abs(a - math.pi) > 1e-12)


def metrics(domain):
    """Exact DomainMetrics for ``domain`` (closed form, never mesh-derived)."""
    kind = domain.kind
    if kind == "disk":
        (radius,) = domain.params
        return DomainMetrics(math.pi * radius**2, 2 * math.pi * radius, 2 * math.pi)
    if kind == "annulus":
        outer, inner = domain.params
        # each boundary circle contributes its full turning angle 2*pi
        return DomainMetrics(
            math.pi * (outer**2 - inner**2),
            2 * math.pi * (outer + inner),
            4 * math.pi,
        )
    if kind == "rectangle":
        a, b = domain.params
        return DomainMetrics(a * b, 2 * (a + b), 0.0, (math.pi / 2,) * 4)
    if kind == "ngon":
        n, radius = domain.params
        area = 0.5 * n * radius**2 * math.sin(2 * math.pi / n)
        perim = 2 * n * radius * math.sin(math.pi / n)
        gamma = math.pi * (n - 2) / n
        return DomainMetrics(area, perim, 0.0, (gamma,) * int(n))
    if kind == "lshape":
        a, b = domain.params
        angles = (math.pi / 2,) * 5 + (3 * math.pi / 2,)
        return DomainMetrics(3 * a * b, 4 * (a + b), 0.0, angles)
    if kind == "polygon":
        verts = domain.vertices
        area = _signed_area(verts)
        perim = sum(
            math.dist(verts[i], verts[(i + 1) % len(verts)])
            for i in range(len(verts))
        )
        return DomainMetrics(area, perim, 0.0, _polygon_interior_angles(verts))
    raise GeometryError(f"unknown domain kind {kind!r}")


# ---------------------------------------------------------------------------
# mesh container
# ---------------------------------------------------------------------------

class Mesh:
    """Immutable P1 triangulation with tagged, oriented boundary edges.

    Attributes
    ----------
    nodes : (N, 2) float array
    triangles : (T, 3) int array, counterclockwise
    boundary_edges : (B, 2) int array, oriented with the domain on the left
    boundary_weights : (B,) float array of edge lengths
    boundary_nodes : sorted int array of boundary node indices
    h_interior, h_boundary : characteristic spacings
    boundary_layer_width : grading width the mesh was generated with
    """

    def __init__(self, nodes, triangles, h_interior, h_boundary=None,
                 boundary_layer_width=0.0, validate=True):
        self.nodes = np.ascontiguousarray(nodes, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.h_interior = float(h_interior)
        self.boundary_layer_width = float(boundary_layer_width)
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise GeometryError("nodes must be an (N, 2) array")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise GeometryError("triangles must be a (T, 3) array")
        self.boundary_edges, self.boundary_weights = self._extract_boundary()
        self.boundary_nodes = np.unique(self.boundary_edges)
        if h_boundary is None:
            h_boundary = self._boundary_height()
        self.h_boundary = float(h_boundary)
        if validate:
            self._validate()

    # -- derived quantities -------------------------------------------------

    def triangle_areas(self):
        p = self.nodes
        t = self.triangles
        d1 = p[t[:, 1]] - p[t[:, 0]]
        d2 = p[t[:, 2]] - p[t[:, 0]]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def area(self):
        return float(self.triangle_areas().sum())

    def boundary_length(self):
        return float(self.boundary_weights.sum())

    def boundary_node_weights(self):
        """Lumped (trapezoidal) boundary weight per boundary node."""
        w = np.zeros(len(self.nodes))
        np.add.at(w, self.boundary_edges[:, 0], 0.5 * self.boundary_weights)
        np.add.at(w, self.boundary_edges[:, 1], 0.5 * self.boundary_weights)
        return w[self.boundary_nodes]

    def boundary_loops(self):
        """Boundary node loops in orientation order, deterministic start."""
        nxt = {}
        for (a, b) in self.boundary_edges:
            nxt[int(a)] = int(b)
        loops = []
        seen = set()
        for start in sorted(nxt):
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            cur = nxt[start]
            while cur != start:
                loop.append(cur)
                seen.add(cur)
                cur = nxt[cur]
            loops.append(loop)
        return loops

    # -- construction helpers -----------------------------------------------

    def _extract_boundary(self):
        edge_count = {}
        edge_oriented = {}
        for ti, (i, j, k) in enumerate(self.triangles):
            for a, b in ((i, j), (j, k), (k, i)):
                key = (min(a, b), max(a, b))
                edge_count[key] = edge_count.get(key, 0) + 1
                edge_oriented[key] = (int(a), int(b))
        edges = []
        for key in sorted(edge_count):
            c = edge_count[key]
            if c == 1:
                edges.append(edge_oriented[key])
            elif c > 2:
                raise GeometryError(
                    f"edge {key} shared by {c} triangles; mesh is not a manifold"
                )
        edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
        weights = np.linalg.norm(
            self.nodes[edges[:, 1]] - self.nodes[edges[:, 0]], axis=1
        )
        return edges, weights

    def _boundary_height(self):
        """Largest normal height of any boundary-edge triangle.

        This is the spacing the boundary-layer resolution cap compares
        against, so it must not understate the coarsest boundary cell.
        """
        edge_to_tri = {}
        for ti, (i, j, k) in enumerate(self.triangles):
            for a, b in ((i, j), (j, k), (k, i)):
                edge_to_tri[(min(a, b), max(a, b))] = ti
        areas = self.triangle_areas()
        worst = 0.0
        for (a, b), w in zip(self.boundary_edges, self.boundary_weights):
            ti = edge_to_tri[(min(a, b), max(a, b))]
            worst = max(worst, 2.0 * areas[ti] / w)
        return worst if worst > 0 else self.h_interior

    def _validate(self):
        areas = self.triangle_areas()
        bad = np.where(areas <= 0)[0]
        if bad.size:
            raise GeometryError(
                f"triangle {int(bad[0])} has non-positive area {areas[bad[0]]:g}"
            )
        # boundary edges must chain into closed loops: one successor per node
        outdeg = {}
        for a, _ in self.boundary_edges:
            outdeg[int(a)] = outdeg.get(int(a), 0) + 1
        if any(v != 1 for v in outdeg.values()):
            raise GeometryError("boundary edges do not form closed loops")

    # -- plain-text exchange format ------------------------------------------

    def save(self, path):
        """Write the mesh in the plain-text exchange format.

        Header line with the three counts ``N T B``, then N node lines
        ``x y``, T triangle lines ``i j k``, B boundary-edge lines ``i j``,
        all 0-based.
        """
        with open(path, "w") as fh:
            fh.write(f"{len(self.nodes)} {len(self.triangles)} "
                     f"{len(self.boundary_edges)}\n")
            for x, y in self.nodes:
                fh.write(f"{float(x)!r} {float(y)!r}\n")
            for i, j, k in self.triangles:
                fh.write(f"{i} {j} {k}\n")
            for i, j in self.boundary_edges:
                fh.write(f"{i} {j}\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            tokens = fh.read().split()
        if len(tokens) < 3:
            raise GeometryError(f"mesh file {path} is truncated")
        n, t, b = (int(v) for v in tokens[:3])
        need = 3 + 2 * n + 3 * t + 2 * b
        if len(tokens) < need:
            raise GeometryError(f"mesh file {path} is truncated")
        vals = tokens[3:]
        nodes = np.array(vals[: 2 * n], dtype=float).reshape(n, 2)
        tris = np.array(vals[2 * n: 2 * n + 3 * t], dtype=np.int64).reshape(t, 3)
        return cls(nodes, tris, _median_edge_length(nodes, tris))


def _median_edge_length(nodes, tris):
    p = np.asarray(nodes, float)
    t = np.asarray(tris)
    e = np.concatenate([
        p[t[:, 1]] - p[t[:, 0]],
        p[t[:, 2]] - p[t[:, 1]],
        p[t[:, 0]] - p[t[:, 2]],
    ])
    return float(np.median(np.linalg.norm(e, axis=1)))


# ---------------------------------------------------------------------------
# graded 1D point sets
# ---------------------------------------------------------------------------

def _grading_ladder(h, layer_width):
    """Spacings from the wall outward: hb, 2 hb, ... capped below h."""
    if layer_width <= 0 or layer_width / 4.0 >= h:
        return []
    levels = math.ceil(math.log2(h / (layer_width / 4.0)))
    if levels > _MAX_GRADING_LEVELS:
        raise MeshResourceError(
            f"boundary grading would need {levels} geometric layers; "
            f"the cap is {_MAX_GRADING_LEVELS}"
        )
    hb = h / 2.0**levels
    return [hb * 2.0**k for k in range(levels)]


def _graded_1d(length, h, w_left, w_right):
    """Points 0 .. length with spacing <= ~h, geometrically graded ends."""
    left = _grading_ladder(h, w_left)
    right = _grading_ladder(h, w_right)
    rem = length - sum(left) - sum(right)
    while (left or right) and rem < 0.25 * h:
        if left and (not right or left[-1] >= right[-1]):
            rem += left.pop()
        else:
            rem += right.pop()
    if rem <= 0:
        raise GeometryError(
            f"domain extent {length:g} too small for target spacing {h:g}"
        )
    n_mid = max(1, math.ceil(rem / h))
    spacings = left + [rem / n_mid] * n_mid + right[::-1]
    pts = np.concatenate([[0.0], np.cumsum(spacings)])
    pts[-1] = length
    return pts


# ---------------------------------------------------------------------------
# ring meshes: disk, annulus, regular polygon
# ---------------------------------------------------------------------------

def _zip_band(inner_ids, inner_ang, outer_ids, outer_ang):
    """Triangulate the band between two concentric node rings.

    Both rings are sorted by angle with the same origin; triangles come out
    counterclockwise. Produces len(inner) + len(outer) triangles.
    """
    na, nb = len(inner_ids), len(outer_ids)
    two_pi = 2.0 * math.pi

    def ang(arr, k):
        return arr[k % len(arr)] + two_pi * (k // len(arr))

    tris = []
    i = j = 0
    while i < na or j < nb:
        if i < na and (j >= nb or ang(inner_ang, i + 1) <= ang(outer_ang, j + 1)):
            tris.append((inner_ids[i % na], outer_ids[j % nb],
                         inner_ids[(i + 1) % na]))
            i += 1
        else:
            tris.append((inner_ids[i % na], outer_ids[j % nb],
                         outer_ids[(j + 1) % nb]))
            j += 1
    return tris


def _ring_counts(radii, h, base=6, multiple_of=1):
    """Angular node count per ring, proportional to radius.

    Rings closer than 0.6 h (the graded zone) copy the previous count so
    thin bands stay aligned quads.
    """
    counts = []
    for k, r in enumerate(radii):
        m = max(base, int(round(2.0 * math.pi * r / h)))
        if multiple_of > 1:
            m = multiple_of * max(1, int(round(m / multiple_of)))
        if counts and (r - radii[k - 1]) < 0.6 * h:
            m = counts[-1]
        counts.append(m)
    return counts


def _ring_mesh(radii, counts, point_of, h, h_boundary, layer_width,
               with_center, node_cap):
    """Assemble a ring-structured mesh; ``point_of(r, theta)`` places nodes."""
    n_nodes = (1 if with_center else 0) + sum(counts)
    if n_nodes > node_cap:
        raise MeshResourceError(
            f"ring mesh needs {n_nodes} nodes, node cap is {node_cap}"
        )
    nodes = []
    ring_ids = []
    ring_angles = []
    if with_center:
        nodes.append(point_of(0.0, 0.0))
    for r, m in zip(radii, counts):
        base = len(nodes)
        ang = 2.0 * math.pi * np.arange(m) / m
        ring_ids.append(list(range(base, base + m)))
        ring_angles.append(ang)
        for th in ang:
            nodes.append(point_of(r, th))
    tris = []
    if with_center:
        ids0 = ring_ids[0]
        m = len(ids0)
        for k in range(m):
            tris.append((0, ids0[k], ids0[(k + 1) % m]))
    for band in range(len(radii) - 1):
        tris.extend(_zip_band(ring_ids[band], ring_angles[band],
                              ring_ids[band + 1], ring_angles[band + 1]))
    return Mesh(np.array(nodes), np.array(tris), h, h_boundary, layer_width)


def _disk_mesh(radius, h, layer_width, node_cap):
    radii = _graded_1d(radius, h, 0.0, layer_width)[1:]
    hb = radii[-1] - radii[-2] if len(radii) > 1 else radii[-1]
    counts = _ring_counts(radii, h)
    return _ring_mesh(
        radii, counts,
        lambda r, th: (r * math.cos(th), r * math.sin(th)),
        h, min(h, hb), layer_width, True, node_cap,
    )


def _annulus_mesh(outer, inner, h, layer_width, node_cap):
    pts = _graded_1d(outer - inner, h, layer_width, layer_width)
    radii = inner + pts
    spac = np.diff(radii)
    hb = min(spac[0], spac[-1])
    counts = _ring_counts(radii, h)
    return _ring_mesh(
        radii, counts,
        lambda r, th: (r * math.cos(th), r * math.sin(th)),
        h, min(h, hb), layer_width, False, node_cap,
    )


def _ngon_mesh(n_sides, circumradius, h, layer_width, node_cap):
    apothem = circumradius * math.cos(math.pi / n_sides)
    depth = _graded_1d(apothem, h, 0.0, layer_width)[1:]
    hb = depth[-1] - depth[-2] if len(depth) > 1 else depth[-1]
    sector = 2.0 * math.pi / n_sides

    def boundary_radius(theta):
        # vertices sit at multiples of the sector angle, which every ring's
        # angle set contains because counts are multiples of n_sides
        local = (theta % sector) - sector / 2.0
        return apothem / math.cos(local)

    counts = _ring_counts(depth, h, base=n_sides, multiple_of=n_sides)

    def point_of(d, th):
        t = d / apothem
        rho = t * boundary_radius(th)
        return (rho * math.cos(th), rho * math.sin(th))

    return _ring_mesh(depth, counts, point_of, h, min(h, hb), layer_width,
                      True, node_cap)


# ---------------------------------------------------------------------------
# tensor meshes: rectangle, L-shape
# ---------------------------------------------------------------------------

def _grid_block(xs, ys):
    """Structured triangulation of a tensor grid; nodes as (x, y) tuples."""
    nx, ny = len(xs), len(ys)
    nodes = [(x, y) for j in range(ny) for x in xs for y in [ys[j]]]
    tris = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            n00 = j * nx + i
            n10 = n00 + 1
            n01 = n00 + nx
            n11 = n01 + 1
            tris.append((n00, n10, n11))
            tris.append((n00, n11, n01))
    return nodes, tris


def _rectangle_mesh(a, b, h, layer_width, node_cap):
    xs = _graded_1d(a, h, layer_width, layer_width)
    ys = _graded_1d(b, h, layer_width, layer_width)
    if len(xs) * len(ys) > node_cap:
        raise MeshResourceError(
            f"rectangle mesh needs {len(xs) * len(ys)} nodes, cap {node_cap}"
        )
    hb = min(np.diff(xs).min(), np.diff(ys).min()) if layer_width > 0 else h
    nodes, tris = _grid_block(xs, ys)
    return Mesh(np.array(nodes), np.array(tris), h, min(h, hb), layer_width)


def _lshape_mesh(a, b, h, layer_width, node_cap):
    # union of [0,a]x[0,b], [a,2a]x[0,b], [0,a]x[b,2b]; every 1D grid graded
    # at both ends so all boundary pieces, including the re-entrant edges
    # through (a, b), get layers
    xs1 = _graded_1d(a, h, layer_width, layer_width)
    xs2 = a + _graded_1d(a, h, layer_width, layer_width)
    ys1 = _graded_1d(b, h, layer_width, layer_width)
    ys2 = b + _graded_1d(b, h, layer_width, layer_width)
    blocks = [(xs1, ys1), (xs2, ys1), (xs1, ys2)]
    node_id = {}
    nodes = []
    tris = []
    for xs, ys in blocks:
        local_nodes, local_tris = _grid_block(xs, ys)
        remap = []
        for p in local_nodes:
            if p not in node_id:
                node_id[p] = len(nodes)
                nodes.append(p)
            remap.append(node_id[p])
        tris.extend((remap[i], remap[j], remap[k]) for i, j, k in local_tris)
        if len(nodes) > node_cap:
            raise MeshResourceError(
                f"L-shape mesh exceeded the node cap {node_cap}"
            )
    spacing = [np.diff(g).min() for g in (xs1, xs2, ys1, ys2)]
    hb = min(spacing) if layer_width > 0 else h
    return Mesh(np.array(nodes), np.array(tris), h, min(h, hb), layer_width)


# ---------------------------------------------------------------------------
# imported polygons: ear clipping + refinement
# ---------------------------------------------------------------------------

def _ear_clip(verts):
    """Triangulate a simple CCW polygon by ear clipping."""
    idx = list(range(len(verts)))
    pts = [np.asarray(v, float) for v in verts]
    tris = []

    def cross(o, p, q):
        return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])

    def inside(p, a, b, c):
        # inclusive: a vertex exactly on the closing edge must block the ear
        d1 = cross(a, b, p)
        d2 = cross(b, c, p)
        d3 = cross(c, a, p)
        return d1 >= -1e-13 and d2 >= -1e-13 and d3 >= -1e-13

    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * len(verts) ** 2:
            raise GeometryError("ear clipping failed; polygon may be degenerate")
        n = len(idx)
        clipped = False
        for k in range(n):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % n]
            a, b, c = pts[i0], pts[i1], pts[i2]
            if cross(a, b, c) <= 1e-14:
                continue
            if any(inside(pts[m], a, b, c) for m in idx
                   if m not in (i0, i1, i2)):
                continue
            tris.append((i0, i1, i2))
            idx.pop(k)
            clipped = True
            break
        if not clipped:
            raise GeometryError("ear clipping failed; polygon may be degenerate")
    tris.append(tuple(idx))
    return tris


def _red_refine(nodes, tris):
    """Split every triangle into four via edge midpoints."""
    nodes = list(map(tuple, nodes))
    node_id = {p: i for i, p in enumerate(nodes)}
    mid_cache = {}

    def midpoint(a, b):
        key = (min(a, b), max(a, b))
        if key not in mid_cache:
            p = (
                0.5 * (nodes[a][0] + nodes[b][0]),
                0.5 * (nodes[a][1] + nodes[b][1]),
            )
            if p not in node_id:
                node_id[p] = len(nodes)
                nodes.append(p)
            mid_cache[key] = node_id[p]
        return mid_cache[key]

    out = []
    for i, j, k in tris:
        m_ij = midpoint(i, j)
        m_jk = midpoint(j, k)
        m_ki = midpoint(k, i)
        out.extend([
            (i, m_ij, m_ki), (j, m_jk, m_ij), (k, m_ki, m_jk),
            (m_ij, m_jk, m_ki),
        ])
    return nodes, out


def _longest_edge_bisection(nodes, tris, size_of, node_cap):
    """Rivara longest-edge bisection until every triangle meets its size."""
    nodes = [tuple(p) for p in nodes]
    tris = [tuple(t) for t in tris]

    def longest_edge(t):
        best = None
        best_len = -1.0
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            d = math.dist(nodes[a], nodes[b])
            if d > best_len:
                best_len = d
                best = (a, b)
        return best, best_len

    def centroid(t):
        return (
            (nodes[t[0]][0] + nodes[t[1]][0] + nodes[t[2]][0]) / 3.0,
            (nodes[t[0]][1] + nodes[t[1]][1] + nodes[t[2]][1]) / 3.0,
        )

    for _ in range(200):
        marked = [
            i for i, t in enumerate(tris)
            if longest_edge(t)[1] > size_of(centroid(t))
        ]
        if not marked:
            break
        # bisect by splitting the longest edge of every marked triangle;
        # repeat with compatibility passes so hanging nodes vanish
        split_edges = {}
        for i in marked:
            (a, b), _ = longest_edge(tris[i])
            split_edges[(min(a, b), max(a, b))] = None
        changed = True
        while changed:
            changed = False
            for i, t in enumerate(tris):
                for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                    key = (min(a, b), max(a, b))
                    if key in split_edges:
                        (la, lb), _ = longest_edge(t)
                        lkey = (min(la, lb), max(la, lb))
                        if lkey not in split_edges:
                            split_edges[lkey] = None
                            changed = True
        for key in split_edges:
            a, b = key
            p = (0.5 * (nodes[a][0] + nodes[b][0]),
                 0.5 * (nodes[a][1] + nodes[b][1]))
            split_edges[key] = len(nodes)
            nodes.append(p)
            if len(nodes) > node_cap:
                raise MeshResourceError(
                    f"bisection grading exceeded the node cap {node_cap}"
                )
        new_tris = []
        stack = list(tris)
        while stack:
            t = stack.pop()
            cut = [
                (a, b) for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0]))
                if (min(a, b), max(a, b)) in split_edges
            ]
            if not cut:
                new_tris.append(t)
                continue
            (la, lb), _ = longest_edge(t)
            if (min(la, lb), max(la, lb)) not in split_edges:
                la, lb = cut[0]
            mid = split_edges[(min(la, lb), max(la, lb))]
            other = [v for v in t if v not in (la, lb)][0]
            pos = t.index(la)
            if t[(pos + 1) % 3] == lb:
                stack.append((la, mid, other))
                stack.append((mid, lb, other))
            else:
                stack.append((lb, mid, other))
                stack.append((mid, la, other))
        tris = new_tris
    return nodes, tris


def _polygon_mesh(verts, h, layer_width, node_cap):
    nodes = [tuple(v) for v in verts]
    tris = _ear_clip(nodes)

    def max_edge(ns, ts):
        return max(
            math.dist(ns[a], ns[b])
            for t in ts
            for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0]))
        )

    while max_edge(nodes, tris) > h:
        nodes, tris = _red_refine(nodes, tris)
        if len(nodes) > node_cap:
            raise MeshResourceError(
                f"polygon refinement exceeded the node cap {node_cap}"
            )
    if layer_width > 0:
        ladder = _grading_ladder(h, layer_width)
        if ladder:
            hb = ladder[0]
            segs = [
                (np.asarray(verts[i], float),
                 np.asarray(verts[(i + 1) % len(verts)], float))
                for i in range(len(verts))
            ]

            def dist_to_boundary(p):
                p = np.asarray(p)
                best = math.inf
                for a, b in segs:
                    ab = b - a
                    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
                    best = min(best, float(np.linalg.norm(p - (a + t * ab))))
                return best

            def size_of(p):
                return max(hb, min(h, 0.5 * dist_to_boundary(p)))

            nodes, tris = _longest_edge_bisection(nodes, tris, size_of,
                                                  node_cap)
    # boundary spacing measured from the actual mesh
    return Mesh(np.array(nodes), np.array(tris), h, None, layer_width)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def generate_mesh(domain, target_h, boundary_layer_width=0.0,
                  node_cap=_DEFAULT_NODE_CAP):
    """Generate a mesh for ``domain`` with interior spacing ``target_h``.

    If ``boundary_layer_width`` is positive, spacing normal to the boundary
    is geometrically graded so the first layer is at most a quarter of that
    width.

    Raises
    ------
    MeshResourceError
        If the node cap or the 12-layer grading cap would be exceeded.
    """
    if target_h <= 0:
        raise GeometryError("target_h must be positive")
    if boundary_layer_width < 0:
        raise GeometryError("boundary_layer_width must be non-negative")
    kind = domain.kind
    if kind == "disk":
        return _disk_mesh(domain.params[0], target_h, boundary_layer_width,
                          node_cap)
    if kind == "annulus":
        return _annulus_mesh(*domain.params, target_h, boundary_layer_width,
                             node_cap)
    if kind == "rectangle":
        return _rectangle_mesh(*domain.params, target_h, boundary_layer_width,
                               node_cap)
    if kind == "ngon":
        return _ngon_mesh(*domain.params, target_h, boundary_layer_width,
                          node_cap)
    if kind == "lshape":
        return _lshape_mesh(*domain.params, target_h, boundary_layer_width,
                            node_cap)
    if kind == "polygon":
        return _polygon_mesh(domain.vertices, target_h, boundary_layer_width,
                             node_cap)
    raise GeometryError(f"unknown domain kind {kind!r}")


def parse_domain(spec):
    """Parse the CLI mini-grammar: disk:R, annulus:R,r, rect:a,b, ngon:n,R,
    lshape, lshape:a,b."""
    spec = spec.strip()
    if spec == "lshape":
        return Domain.lshape()
    if spec == "square":
        return Domain.rectangle(1.0, 1.0)
    if ":" not in spec:
        raise GeometryError(f"cannot parse domain spec {spec!r}")
    kind, _, rest = spec.partition(":")
    try:
        params = [float(p) for p in rest.split(",") if p]
    except ValueError:
        raise GeometryError(f"non-numeric parameter in domain spec {spec!r}")
    if kind == "disk" and len(params) == 1:
        return Domain.disk(params[0])
    if kind == "annulus" and len(params) == 2:
        return Domain.annulus(params[0], params[1])
    if kind == "rect" and len(params) == 2:
        return Domain.rectangle(params[0], params[1])
    if kind == "ngon" and len(params) == 2:
        return Domain.regular_polygon(int(params[0]), params[1])
    if kind == "lshape" and len(params) == 2:
        return Domain.lshape(params[0], params[1])
    raise GeometryError(f"cannot parse domain spec {spec!r}")
