"""Model surfaces with computable intrinsic metrics.

Two families of hosts live here: convex polyhedral 2-spheres (exact cone
angles at vertices, geodesics by graph search plus unfolding refinement) and
analytic flat cones (closed-form distances, the calibration oracle for the
mesh engine).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from .metric import FiniteMetricSpace, MetricError

GAUSS_BONNET_TOL = 1e-9
NET_SIZE_CAP = 50_000


class SurfaceError(ValueError):
    """Raised for invalid surface constructions or queries."""


# ---------------------------------------------------------------------------
# Analytic flat cones
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlatCone:
    """Metric cone over a circle, with total angle in (0, 2*pi].

    Points are (radius, angular coordinate in [0, total_angle)).  The cone
    over a circle of radius rho has total angle 2*pi*rho.
    """

    total_angle: float

    def __post_init__(self):
        if not (0.0 < self.total_angle <= 2.0 * math.pi + 1e-12):
            raise SurfaceError("total angle must lie in (0, 2*pi]")

    @classmethod
    def over_circle(cls, rho: float) -> "FlatCone":
        return cls(2.0 * math.pi * rho)

    @property
    def rho(self) -> float:
        return self.total_angle / (2.0 * math.pi)

    def sep_angle(self, phi1: float, phi2: float) -> float:
        t = abs(phi1 - phi2) % self.total_angle
        return min(t, self.total_angle - t)

    def distance(self, p1: tuple, p2: tuple) -> float:
        r1, a1 = p1
        r2, a2 = p2
        if r1 == 0.0 or r2 == 0.0:
            return r1 + r2
        sep = self.sep_angle(a1, a2)
        if sep >= math.pi:
            return r1 + r2
        return math.sqrt(max(r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * math.cos(sep), 0.0))

    def distance_hp(self, p1: tuple, p2: tuple, dps: int = 40):
        """High-precision distance via mpmath, for certificate regression."""
        import mpmath as mp
        with mp.workdps(dps):
            r1, a1 = mp.mpf(p1[0]), mp.mpf(p1[1])
            r2, a2 = mp.mpf(p2[0]), mp.mpf(p2[1])
            theta = mp.mpf(self.total_angle)
            t = abs(a1 - a2) % theta
            sep = min(t, theta - t)
            if sep >= mp.pi or r1 == 0 or r2 == 0:
                return r1 + r2
            return mp.sqrt(r1 ** 2 + r2 ** 2 - 2 * r1 * r2 * mp.cos(sep))

    def induce(self, base: tuple, x: tuple, arclen: float) -> tuple:
        """Point at the given arc length along the fixed geodesic base -> x.

        For a tip base the geodesics are radial rays; otherwise the geodesic
        is a straight segment in the development (total angle <= 2*pi means
        no geodesic between off-tip points passes through the tip).
        """
        rb, ab = base
        rx, ax = x
        total = self.distance(base, x)
        if arclen <= 0.0:
            return base
        if arclen >= total:
            return x
        if rb == 0.0:
            return (arclen, ax)
        if rx == 0.0:
            return (rb - arclen, ab) if arclen <= rb else (arclen - rb, ab)
        # signed development offset of x relative to the base, short way
        delta = (ax - ab + 0.5 * self.total_angle) % self.total_angle \
            - 0.5 * self.total_angle
        bx, by = rb, 0.0
        xx, xy = rx * math.cos(delta), rx * math.sin(delta)
        t = arclen / total
        zx, zy = bx + t * (xx - bx), by + t * (xy - by)
        rad = math.hypot(zx, zy)
        ang = (ab + math.atan2(zy, zx)) % self.total_angle
        return (rad, ang)


# ---------------------------------------------------------------------------
# Convex polyhedral surfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfacePoint:
    """A point on a PolySurface: face id plus barycentric coordinates."""
    face: int
    bary: tuple


class PolySurface:
    """Triangulated boundary of a convex body, a closed 2-sphere complex.

    Carries per-vertex cone angles (sums of incident face angles) and their
    deficits 2*pi - theta_v, whose total is exactly 4*pi on any valid
    instance (discrete Gauss-Bonnet).
    """

    def __init__(self, vertices: np.ndarray, faces: np.ndarray, validate: bool = True):
        self.vertices = np.asarray(vertices, dtype=float)
        self.faces = np.asarray(faces, dtype=int)
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise SurfaceError("faces must be triangles")
        self._build_topology()
        self._build_geometry()
        if validate:
            self.validate()

    # -- construction helpers ------------------------------------------------

    def _build_topology(self):
        edge_map: dict[tuple, list] = {}
        for fi, (a, b, c) in enumerate(self.faces):
            for u, v in ((a, b), (b, c), (c, a)):
                key = (min(u, v), max(u, v))
                edge_map.setdefault(key, []).append(fi)
        for key, fs in edge_map.items():
            if len(fs) != 2:
                raise SurfaceError(f"edge {key} belongs to {len(fs)} faces; "
                                   "surface is not a closed complex")
        self.edges = np.array(sorted(edge_map.keys()), dtype=int)
        self.edge_faces = np.array([edge_map[tuple(e)] for e in self.edges], dtype=int)
        self._edge_index = {tuple(e): i for i, e in enumerate(map(tuple, self.edges))}
        incident: list[list[int]] = [[] for _ in range(len(self.vertices))]
        for fi, f in enumerate(self.faces):
            for v in f:
                incident[v].append(fi)
        self.vertex_faces = incident

    def _build_geometry(self):
        v = self.vertices
        f = self.faces
        p0, p1, p2 = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
        cross = np.cross(p1 - p0, p2 - p0)
        self.face_areas = 0.5 * np.linalg.norm(cross, axis=1)
        if np.any(self.face_areas < 1e-14):
            raise SurfaceError("degenerate (zero-area) face")
        ang = np.zeros((len(f), 3))
        corners = (p0, p1, p2)
        for k in range(3):
            a = corners[k]
            b = corners[(k + 1) % 3]
            c = corners[(k + 2) % 3]
            u = b - a
            w = c - a
            cosv = np.einsum("ij,ij->i", u, w) / (
                np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1))
            ang[:, k] = np.arccos(np.clip(cosv, -1.0, 1.0))
        self.face_angles = ang
        theta = np.zeros(len(v))
        for k in range(3):
            np.add.at(theta, f[:, k], ang[:, k])
        self.cone_angles = theta

    # -- invariants -----------------------------------------------------------

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.faces)

    def deficits(self) -> np.ndarray:
        return 2.0 * math.pi - self.cone_angles

    def total_deficit(self) -> float:
        return float(self.deficits().sum())

    def validate(self):
        if self.euler_characteristic() != 2:
            raise SurfaceError(f"Euler characteristic {self.euler_characteristic()}, "
                               "expected 2")
        if np.any(self.cone_angles > 2.0 * math.pi + 1e-9):
            worst = int(np.argmax(self.cone_angles))
            raise SurfaceError(f"vertex {worst} has cone angle "
                               f"{self.cone_angles[worst]:.12f} > 2*pi; "
                               "vertex set is not in convex position")
        gb = abs(self.total_deficit() - 4.0 * math.pi)
        if gb > GAUSS_BONNET_TOL:
            raise SurfaceError(f"Gauss-Bonnet defect {gb:.3e} exceeds "
                               f"{GAUSS_BONNET_TOL:.1e}")

    # -- queries ----------------------------------------------------------------

    def cone_angle(self, v: int) -> float:
        if not (0 <= v < len(self.vertices)):
            raise SurfaceError(f"unknown vertex {v}")
        return float(self.cone_angles[v])

    def point_position(self, pt) -> np.ndarray:
        if isinstance(pt, (int, np.integer)):
            return self.vertices[int(pt)]
        b = np.asarray(pt.bary, dtype=float)
        tri = self.vertices[self.faces[pt.face]]
        return b @ tri

    def point_faces(self, pt) -> tuple:
        if isinstance(pt, (int, np.integer)):
            return tuple(self.vertex_faces[int(pt)])
        b = np.asarray(pt.bary, dtype=float)
        zero = np.isclose(b, 0.0, atol=1e-12)
        if zero.sum() == 0:
            return (pt.face,)
        f = self.faces[pt.face]
        if zero.sum() == 1:
            k = int(np.argmax(zero))
            u, v = f[(k + 1) % 3], f[(k + 2) % 3]
            e = self._edge_index[(min(u, v), max(u, v))]
            return tuple(self.edge_faces[e])
        k = int(np.argmax(~zero))
        return tuple(self.vertex_faces[f[k]])

    def min_vertex_separation(self) -> float:
        v = self.vertices
        n = len(v)
        d = np.linalg.norm(v[:, None, :] - v[None, :, :], axis=2)
        return float(d[~np.eye(n, dtype=bool)].min())

    def stats_report(self, bins: int = 12) -> dict:
        deficits = self.deficits()
        hist, edges = np.histogram(deficits, bins=bins)
        return {
            "vertex_count": int(len(self.vertices)),
            "face_count": int(len(self.faces)),
            "edge_count": int(len(self.edges)),
            "euler_characteristic": self.euler_characteristic(),
            "total_angle_deficit": self.total_deficit(),
            "angle_deficit_histogram": {
                "bin_edges": [float(x) for x in edges],
                "counts": [int(c) for c in hist]},
            "min_vertex_separation": self.min_vertex_separation(),
        }


def build_convex_surface(points: Iterable) -> PolySurface:
    """Triangulated boundary of the convex hull of a 3D point cloud.

    Interior and otherwise non-extreme points are dropped; triangle winding
    is fixed so normals point outward.
    """
    from scipy.spatial import ConvexHull, QhullError

    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 4:
        raise SurfaceError("need at least four 3D points")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise SurfaceError(f"degenerate input (coplanar or duplicate): {exc}") from exc
    keep = hull.vertices
    remap = -np.ones(len(pts), dtype=int)
    remap[keep] = np.arange(len(keep))
    verts = pts[keep]
    faces = remap[hull.simplices]
    # orient consistently with the outward facet normals
    normals = hull.equations[:, :3]
    p0 = verts[faces[:, 0]]
    p1 = verts[faces[:, 1]]
    p2 = verts[faces[:, 2]]
    fn = np.cross(p1 - p0, p2 - p0)
    flip = np.einsum("ij,ij->i", fn, normals) < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return PolySurface(verts, faces)


# ---------------------------------------------------------------------------
# OBJ import / export
# ---------------------------------------------------------------------------

def save_obj(surface: PolySurface, path: str) -> None:
    with open(path, "w") as fh:
        for v in surface.vertices:
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for f in surface.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def load_obj(path: str) -> PolySurface:
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                ids = [int(tok.split("/")[0]) - 1 for tok in parts[1:]]
                if len(ids) != 3:
                    raise SurfaceError("OBJ import supports triangles only")
                faces.append(ids)
    return PolySurface(np.array(verts), np.array(faces, dtype=int))


# ---------------------------------------------------------------------------
# Mesh distance engine
# ---------------------------------------------------------------------------

class MeshGraph:
    """Shortest-path scaffold on a surface: vertices, edge subdivision points
    and optional face samples, with complete intra-face connections.

    The graph metric overestimates the intrinsic distance; the unfolding
    refinement in :func:`intrinsic_distance` tightens the winning path.
    """

    def __init__(self, surface: PolySurface, edge_subdiv: int = 4,
                 face_samples: dict | None = None):
        self.surface = surface
        self.edge_subdiv = edge_subdiv
        pos = [surface.vertices[i] for i in range(len(surface.vertices))]
        kind = [("v", i) for i in range(len(surface.vertices))]
        slide = [None] * len(surface.vertices)
        # per-edge subdivision proportional to length: edge_subdiv points on
        # the longest edge sets the target spacing
        lengths = np.linalg.norm(surface.vertices[surface.edges[:, 0]]
                                 - surface.vertices[surface.edges[:, 1]],
                                 axis=1)
        spacing = lengths.max() / (edge_subdiv + 1)
        self.edge_nodes: list[list[int]] = []
        for ei, (u, v) in enumerate(surface.edges):
            ids = []
            pu, pv = surface.vertices[u], surface.vertices[v]
            n_e = max(1, int(math.ceil(lengths[ei] / spacing)) - 1)
            for k in range(n_e):
                t = (k + 1) / (n_e + 1)
                ids.append(len(pos))
                pos.append(pu + t * (pv - pu))
                kind.append(("e", ei))
                slide.append((pu, pv))
            self.edge_nodes.append(ids)
        self.sample_nodes: dict[int, list[int]] = {}
        if face_samples:
            for fi, barys in face_samples.items():
                tri = surface.vertices[surface.faces[fi]]
                ids = []
                for b in barys:
                    ids.append(len(pos))
                    pos.append(np.asarray(b, dtype=float) @ tri)
                    kind.append(("s", fi, tuple(b)))
                    slide.append(None)
                self.sample_nodes[fi] = ids
        self.positions = np.array(pos)
        self.kinds = kind
        self.slide = slide
        self.face_node_lists = []
        for fi, (a, b, c) in enumerate(surface.faces):
            ids = [a, b, c]
            for u, v in ((a, b), (b, c), (c, a)):
                ids.extend(self.edge_nodes[surface._edge_index[(min(u, v), max(u, v))]])
            ids.extend(self.sample_nodes.get(fi, []))
            self.face_node_lists.append(ids)
        self._build_csr()
        self.node_faces = [[] for _ in range(len(self.positions))]
        for fi, ids in enumerate(self.face_node_lists):
            for i in ids:
                self.node_faces[i].append(fi)

    def _build_csr(self):
        rows, cols = [], []
        for ids in self.face_node_lists:
            arr = np.array(ids)
            ii, jj = np.meshgrid(arr, arr, indexing="ij")
            mask = ii < jj
            rows.append(ii[mask])
            cols.append(jj[mask])
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        n = len(self.positions)
        key = rows * n + cols
        _, uniq = np.unique(key, return_index=True)
        rows, cols = rows[uniq], cols[uniq]
        vals = np.linalg.norm(self.positions[rows] - self.positions[cols], axis=1)
        self.graph = csr_matrix(
            (np.concatenate([vals, vals]),
             (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
            shape=(n, n))

    def __len__(self):
        return len(self.positions)

    def dijkstra(self, sources: Sequence[int], with_pred: bool = False):
        return _csgraph_dijkstra(self.graph, directed=False, indices=list(sources),
                                 return_predecessors=with_pred)

    def node_path(self, predecessors: np.ndarray, target: int) -> list[int]:
        path = [target]
        while predecessors[path[-1]] >= 0:
            path.append(int(predecessors[path[-1]]))
        return path[::-1]

    def attach_points(self, points: Sequence[tuple]) -> csr_matrix:
        """Augmented graph with one extra node per (position, faces) pair.

        Extra nodes connect to every node of their containing faces and to
        other extra points sharing a face.
        """
        n = len(self.positions)
        k = len(points)
        rows, cols, vals = [], [], []
        face_sets = [set(fs) for _, fs in points]
        for a, (p, fs) in enumerate(points):
            p = np.asarray(p)
            seen = set()
            for fi in fs:
                for j in self.face_node_lists[fi]:
                    if j in seen:
                        continue
                    seen.add(j)
                    rows.append(n + a)
                    cols.append(j)
                    vals.append(float(np.linalg.norm(p - self.positions[j])))
            for b in range(a + 1, k):
                if face_sets[a] & face_sets[b]:
                    rows.append(n + a)
                    cols.append(n + b)
                    vals.append(float(np.linalg.norm(p - np.asarray(points[b][0]))))
        from scipy.sparse import coo_matrix
        extra = coo_matrix((vals + vals, (rows + cols, cols + rows)),
                           shape=(n + k, n + k)).tocsr()
        from scipy.sparse import bmat
        base = bmat([[self.graph, None], [None, csr_matrix((k, k))]]).tocsr()
        return base + extra

    def pairwise_attached(self, points: Sequence[tuple]) -> np.ndarray:
        """Graph distances between attached extra points."""
        k = len(points)
        if k == 0:
            return np.zeros((0, 0))
        g = self.attach_points(points)
        n = len(self.positions)
        idx = list(range(n, n + k))
        d = _csgraph_dijkstra(g, directed=False, indices=idx)
        return d[:, idx]


def _slide_optimum(a: np.ndarray, b: np.ndarray, u: np.ndarray,
                   v: np.ndarray) -> np.ndarray:
    """Exact minimizer of |a - x| + |x - b| for x on segment [u, v].

    Unfolds b across the edge line into the plane of (a, u, v); the optimum
    is where the straightened segment crosses the edge (clamped to it).
    """
    e = v - u
    elen = float(np.linalg.norm(e))
    if elen < 1e-15:
        return u.copy()
    e = e / elen
    au = a - u
    bu = b - u
    a1 = float(au @ e)
    b1 = float(bu @ e)
    a_perp = au - a1 * e
    b_perp = bu - b1 * e
    a2 = float(np.linalg.norm(a_perp))
    b2 = float(np.linalg.norm(b_perp))
    if a2 + b2 < 1e-18:
        t = 0.5 * (a1 + b1)
    else:
        # in the unfolding a sits at (a1, a2), b at (b1, -b2)
        t = a1 + (b1 - a1) * a2 / (a2 + b2)
    t = min(max(t / elen, 0.0), 1.0)
    return u + (t * elen) * e


def _refine_path(positions: list[np.ndarray], slides: list,
                 sweeps: int = 2000, rel_tol: float = 1e-14) -> float:
    """Shorten a polyline by sliding interior nodes along their mesh edges.

    For a fixed crossing-edge sequence the length is convex in the sliding
    parameters and each coordinate step has the closed-form unfolding
    optimum, so Gauss-Seidel sweeps converge to the strip minimum.
    """
    pts = [np.asarray(p, dtype=float) for p in positions]

    def seg_len():
        return sum(float(np.linalg.norm(pts[i + 1] - pts[i]))
                   for i in range(len(pts) - 1))

    total = seg_len()
    for _ in range(sweeps):
        improved = 0.0
        for i in range(1, len(pts) - 1):
            sl = slides[i]
            if sl is None:
                continue
            u, v = np.asarray(sl[0], dtype=float), np.asarray(sl[1], dtype=float)
            a, b = pts[i - 1], pts[i + 1]
            x = _slide_optimum(a, b, u, v)
            old = float(np.linalg.norm(a - pts[i]) + np.linalg.norm(pts[i] - b))
            new = float(np.linalg.norm(a - x) + np.linalg.norm(x - b))
            if new < old:
                improved += old - new
                pts[i] = x
        total -= improved
        if improved <= rel_tol * max(total, 1e-30):
            break
    return seg_len()


@dataclass
class DistanceResult:
    value: float
    graph_value: float
    achieved_tol: float
    converged: bool


def intrinsic_distance_ex(surface: PolySurface, a, b,
                          graph: MeshGraph | None = None,
                          edge_subdiv: int = 8) -> DistanceResult:
    """Intrinsic distance with refinement diagnostics.

    Runs Dijkstra on the subdivided graph, then slides the winning path's
    crossing points along their edges (local unfolding refinement).  The
    achieved-tolerance estimate is the relative gap closed by refinement,
    which calibrates against analytic cones.
    """
    g = graph or MeshGraph(surface, edge_subdiv=edge_subdiv)
    pa = (surface.point_position(a), surface.point_faces(a))
    pb = (surface.point_position(b), surface.point_faces(b))
    if np.allclose(pa[0], pb[0]):
        return DistanceResult(0.0, 0.0, 0.0, True)
    if set(pa[1]) & set(pb[1]):
        val = float(np.linalg.norm(pa[0] - pb[0]))
        return DistanceResult(val, val, 0.0, True)
    aug = g.attach_points([pa, pb])
    n = len(g.positions)
    dist, pred = _csgraph_dijkstra(aug, directed=False, indices=[n],
                                   return_predecessors=True)
    graph_val = float(dist[0, n + 1])
    if not np.isfinite(graph_val):
        raise SurfaceError("mesh graph disconnected")
    path = [n + 1]
    while pred[0, path[-1]] >= 0:
        path.append(int(pred[0, path[-1]]))
    path = path[::-1]
    positions, slides = [], []
    for node in path:
        if node == n:
            positions.append(pa[0]); slides.append(None)
        elif node == n + 1:
            positions.append(pb[0]); slides.append(None)
        else:
            positions.append(g.positions[node])
            slides.append(g.slide[node])
    refined = _refine_path(positions, slides)
    refined = min(refined, graph_val)
    gap = (graph_val - refined) / max(refined, 1e-30)
    return DistanceResult(refined, graph_val, gap, True)


def intrinsic_distance(surface: PolySurface, a, b, tol: float = 1e-3,
                       graph: MeshGraph | None = None,
                       edge_subdiv: int = 8) -> float:
    return intrinsic_distance_ex(surface, a, b, graph=graph,
                                 edge_subdiv=edge_subdiv).value


# ---------------------------------------------------------------------------
# Nets
# ---------------------------------------------------------------------------

def _face_sample_barys(surface: PolySurface, fi: int, h: float) -> list[tuple]:
    tri = surface.vertices[surface.faces[fi]]
    emax = max(np.linalg.norm(tri[1] - tri[0]),
               np.linalg.norm(tri[2] - tri[1]),
               np.linalg.norm(tri[0] - tri[2]))
    m = max(1, int(math.ceil(emax / (0.7 * h))))
    out = []
    for i in range(1, m):
        for j in range(1, m - i):
            k = m - i - j
            out.append((i / m, j / m, k / m))
    return out


def sample_net(surface: PolySurface, h: float,
               edge_subdiv: int | None = None) -> tuple[FiniteMetricSpace, MeshGraph]:
    """Net of the surface at density h with graph-metric distances.

    Net points are the vertices, edge subdivision points and face-interior
    lattice samples; every surface point lies within h of a net point.  The
    returned distances are the subdivided-graph shortest paths, which satisfy
    the triangle inequality exactly.
    """
    if h <= 0:
        raise SurfaceError("h must be positive")
    edge_len = np.linalg.norm(
        surface.vertices[surface.edges[:, 0]] - surface.vertices[surface.edges[:, 1]],
        axis=1)
    if edge_subdiv is None:
        edge_subdiv = int(max(1, math.ceil(edge_len.max() / (0.7 * h)) - 1))
    samples = {fi: _face_sample_barys(surface, fi, h) for fi in range(len(surface.faces))}
    samples = {fi: b for fi, b in samples.items() if b}
    g = MeshGraph(surface, edge_subdiv=edge_subdiv, face_samples=samples)
    if len(g) > NET_SIZE_CAP:
        raise SurfaceError(f"net of {len(g)} points exceeds cap {NET_SIZE_CAP}")
    idx = list(range(len(g)))
    dist = g.dijkstra(idx)
    labels = {i: {"kind": g.kinds[i], "pos": tuple(float(x) for x in g.positions[i])}
              for i in idx}
    space = FiniteMetricSpace(tuple(idx), dist, labels=labels)
    return space, g


def net_coverage_gap(surface: PolySurface, net_positions: np.ndarray,
                     n_samples: int = 10_000, seed: int = 0) -> float:
    """Largest distance from a random surface point to the net (3D chordal,
    a lower bound for the intrinsic gap; used for coverage audits)."""
    rng = np.random.default_rng(seed)
    areas = surface.face_areas / surface.face_areas.sum()
    fids = rng.choice(len(surface.faces), size=n_samples, p=areas)
    r1 = rng.random(n_samples)
    r2 = rng.random(n_samples)
    s = np.sqrt(r1)
    b0, b1 = 1 - s, s * (1 - r2)
    b2 = 1 - (1 - s) - b1
    tris = surface.vertices[surface.faces[fids]]
    pts = (b0[:, None] * tris[:, 0] + b1[:, None] * tris[:, 1]
           + b2[:, None] * tris[:, 2])
    from scipy.spatial import cKDTree
    tree = cKDTree(net_positions)
    gaps, _ = tree.query(pts)
    return float(gaps.max())


# ---------------------------------------------------------------------------
# Geodesic families
# ---------------------------------------------------------------------------

class GeodesicOracle:
    """Fixed family of geodesic realizations from one base point.

    For a given (p, R) the family is built once and reused for every smaller
    radius: the inducing map phi^R_r is evaluated by walking the stored
    polylines.  Mesh families come from the Dijkstra tree; cone families are
    analytic.
    """

    def __init__(self, base, R: float):
        self.base = base
        self.R = R

    def distance_to_base(self, x) -> float:
        raise NotImplementedError

    def induce(self, x, arclen: float):
        raise NotImplementedError

    def pairwise_distances(self, pts: Sequence) -> np.ndarray:
        raise NotImplementedError


class ConeGeodesics(GeodesicOracle):
    def __init__(self, cone: FlatCone, base: tuple, R: float):
        super().__init__(base, R)
        self.cone = cone

    def distance_to_base(self, x) -> float:
        return self.cone.distance(self.base, x)

    def induce(self, x, arclen: float):
        return self.cone.induce(self.base, x, arclen)

    def pairwise_distances(self, pts: Sequence) -> np.ndarray:
        theta = self.cone.total_angle
        r = np.array([q[0] for q in pts])
        a = np.array([q[1] for q in pts])
        sep = np.abs(a[:, None] - a[None, :]) % theta
        sep = np.minimum(np.minimum(sep, theta - sep), math.pi)
        d2 = r[:, None] ** 2 + r[None, :] ** 2 - 2.0 * np.outer(r, r) * np.cos(sep)
        d = np.sqrt(np.maximum(d2, 0.0))
        np.fill_diagonal(d, 0.0)
        return d


class MeshGeodesics(GeodesicOracle):
    """Geodesic family on a mesh graph from a base node.

    ``induce`` walks the tree polyline to the requested arc length and
    returns a (position, faces) pair; such points attach back to the graph
    for distance evaluation.  Unresolvable targets (disconnected nodes) are
    reported in ``unresolved``.
    """

    def __init__(self, graph: MeshGraph, base_node: int, R: float):
        super().__init__(base_node, R)
        self.graph = graph
        dist, pred = graph.dijkstra([base_node], with_pred=True)
        self.dist = dist[0]
        self.pred = pred[0]
        self.unresolved = [i for i in range(len(graph)) if not np.isfinite(self.dist[i])]

    def distance_to_base(self, x) -> float:
        return float(self.dist[x])

    def path_points(self, x) -> list[int]:
        return self.graph.node_path(self.pred, x)

    def induce(self, x, arclen: float):
        g = self.graph
        path = self.path_points(x)
        if arclen <= 0:
            node = path[0]
            return (g.positions[node], tuple(g.node_faces[node]))
        acc = 0.0
        for i in range(len(path) - 1):
            p0 = g.positions[path[i]]
            p1 = g.positions[path[i + 1]]
            seg = float(np.linalg.norm(p1 - p0))
            if acc + seg >= arclen - 1e-15:
                t = 0.0 if seg == 0 else (arclen - acc) / seg
                pos = p0 + t * (p1 - p0)
                fs = set(g.node_faces[path[i]]) & set(g.node_faces[path[i + 1]])
                if not fs:
                    fs = set(g.node_faces[path[i]])
                return (pos, tuple(sorted(fs)))
            acc += seg
        node = path[-1]
        return (g.positions[node], tuple(g.node_faces[node]))

    def pairwise_distances(self, pts: Sequence) -> np.ndarray:
        return self.graph.pairwise_attached(list(pts))


def geodesic_family(surface: PolySurface, graph: MeshGraph, p: int,
                    R: float) -> MeshGeodesics:
    """Fix the geodesic family out of node p at outer radius R."""
    return MeshGeodesics(graph, p, R)


# ---------------------------------------------------------------------------
# Canonical constructions used across tests
# ---------------------------------------------------------------------------

def regular_tetrahedron(edge: float = 1.0) -> np.ndarray:
    a = edge
    pts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return pts * (a / (2.0 * math.sqrt(2.0)))


def meshed_cone(total_angle: float, n_seg: int = 64,
                slant: float = 1.0) -> PolySurface:
    """Closed polyhedral solid cone whose apex has the requested cone angle.

    The lateral fan of isoceles triangles realizes the angle exactly; a flat
    base closes the surface.  Points on the lateral part at radius below the
    rim are intrinsically identical to the analytic flat cone.
    """
    if not (0 < total_angle < 2 * math.pi):
        raise SurfaceError("total angle must lie in (0, 2*pi)")
    half = total_angle / (2 * n_seg)
    rc = slant * math.sin(half) / math.sin(math.pi / n_seg)
    if rc >= slant:
        raise SurfaceError("angle too close to 2*pi for this segment count")
    h = math.sqrt(slant ** 2 - rc ** 2)
    pts = [np.array([0.0, 0.0, h])]
    for i in range(n_seg):
        a = 2 * math.pi * i / n_seg
        pts.append(np.array([rc * math.cos(a), rc * math.sin(a), 0.0]))
    return build_convex_surface(np.array(pts))


def lateral_point(surface: PolySurface, cone: FlatCone, radius: float,
                  phi: float, n_seg: int) -> SurfacePoint:
    """Surface point on a meshed cone matching analytic coordinates (radius,
    phi) of the flat cone it realizes; phi in cone-angle units."""
    theta = cone.total_angle
    sector = theta / n_seg
    k = int(phi // sector) % n_seg
    local = phi - k * sector
    # face k has apex 0 and rim vertices k+1, k+2 (apex angle = sector)
    # develop: apex at origin, rim edge k+1 at angle 0
    fidx = None
    apex = 0
    for fi, f in enumerate(surface.faces):
        s = set(f)
        if apex in s and (k + 1) in s and (k + 2 if k + 2 <= n_seg else 1) in s:
            fidx = fi
            break
    if fidx is None:
        raise SurfaceError("lateral face not found")
    f = surface.faces[fidx]
    va = surface.vertices[0]
    v1 = surface.vertices[k + 1]
    v2 = surface.vertices[k + 2 if k + 2 <= n_seg else 1]
    slant = np.linalg.norm(v1 - va)
    # planar coordinates within the face: apex origin, v1 at angle 0
    e1 = (v1 - va) / slant
    n = np.cross(v1 - va, v2 - va)
    e2 = np.cross(n / np.linalg.norm(n), e1)
    target = va + radius * (math.cos(local) * e1 + math.sin(local) * e2)
    tri = np.array([va, v1, v2])
    bary = _barycentric(tri, target)
    order = [int(np.where(f == idx)[0][0]) for idx in
             (0, k + 1, k + 2 if k + 2 <= n_seg else 1)]
    b = [0.0, 0.0, 0.0]
    for slot, val in zip(order, bary):
        b[slot] = val
    return SurfacePoint(fidx, tuple(b))


def _barycentric(tri: np.ndarray, p: np.ndarray) -> tuple:
    a, b, c = tri
    v0, v1, v2 = b - a, c - a, p - a
    d00 = v0 @ v0
    d01 = v0 @ v1
    d11 = v1 @ v1
    d20 = v2 @ v0
    d21 = v2 @ v1
    den = d00 * d11 - d01 * d01
    w1 = (d11 * d20 - d01 * d21) / den
    w2 = (d00 * d21 - d01 * d20) / den
    return (1.0 - w1 - w2, w1, w2)
