"""Hosts: model spaces presenting a uniform interface to the detectors.

A host serves net approximations of metric balls, fixed geodesic families
from base points, and the induced-subpacking step used by the scale traces.
Two implementations: analytic flat cones (exact distances, scale-covariant
polar nets) and polyhedral surfaces.  Mesh balls switch to exact analytic
templates wherever the local geometry allows it: a ball around a vertex that
contains no other vertex is a flat-cone ball of the vertex angle, and a ball
around any other point that contains no vertex at all is a flat disk.  The
remaining coarse-scale balls use graph-metric subnets at scale-matched
resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .metric import FiniteMetricSpace, MetricError
from .surfaces import (ConeGeodesics, FlatCone, GeodesicOracle, MeshGeodesics,
                       MeshGraph, PolySurface, _face_sample_barys)


@dataclass(frozen=True)
class BallNet:
    """Finite net of a closed metric ball.

    ``resolution`` is the generation-reported point spacing; ``drift_floor``
    is the additive noise floor for asymmetry functionals on this net and
    ``margin`` the noise floor for strainer-excess decisions (tiny on
    analytic nets, where optimal configurations are lattice-realizable).
    """

    space: FiniteMetricSpace
    center: Any
    radius: float
    resolution: float
    drift_floor: float
    margin: float = 0.0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.space)


class _IdOracle(GeodesicOracle):
    """Adapter: a geodesic oracle keyed by ball-net ids instead of raw points."""

    def __init__(self, inner: GeodesicOracle, id_to_point):
        super().__init__(inner.base, inner.R)
        self.inner = inner
        self.id_to_point = id_to_point

    def distance_to_base(self, x):
        return self.inner.distance_to_base(self.id_to_point(x))

    def induce(self, x, arclen):
        return self.inner.induce(self.id_to_point(x), arclen)

    def pairwise_distances(self, pts):
        return self.inner.pairwise_distances(pts)


# ---------------------------------------------------------------------------
# Analytic cone host
# ---------------------------------------------------------------------------

class ConeHost:
    """Flat cone with analytic distances; points are (radius, angle) pairs."""

    def __init__(self, cone: FlatCone, m_radial: int = 16, m_angular: int = 48):
        self.cone = cone
        self.m_radial = m_radial
        self.m_angular = m_angular
        self.name = f"cone(theta={cone.total_angle:.6g})"
        self.dim = 2

    def distance(self, a: tuple, b: tuple) -> float:
        return self.cone.distance(a, b)

    def distance_matrix(self, pts: list[tuple]) -> np.ndarray:
        theta = self.cone.total_angle
        r = np.array([q[0] for q in pts])
        a = np.array([q[1] for q in pts])
        sep = np.abs(a[:, None] - a[None, :]) % theta
        sep = np.minimum(sep, theta - sep)
        sep = np.minimum(sep, math.pi)
        d2 = r[:, None] ** 2 + r[None, :] ** 2 \
            - 2.0 * np.outer(r, r) * np.cos(sep)
        d = np.sqrt(np.maximum(d2, 0.0))
        np.fill_diagonal(d, 0.0)
        return d

    def tip(self) -> tuple:
        return (0.0, 0.0)

    def ball_net(self, p: tuple, s: float, m_radial: int | None = None,
                 m_angular: int | None = None) -> BallNet:
        """Polar net of the closed ball B_s(p).

        Tip-centered and development-disk nets are exactly scale covariant,
        which is what keeps packing traces flat on exactly conical windows.
        """
        mr = m_radial or self.m_radial
        ma = m_angular or self.m_angular
        theta = self.cone.total_angle
        d, phi0 = p
        pts: list[tuple] = []
        wrap_radius = 2.0 * d * math.sin(min(theta / 4.0, math.pi / 2.0))
        if d <= 1e-15 * max(s, 1.0):
            # tip ball: exactly scale covariant polar net
            radial = [s * j / mr for j in range(1, mr + 1)]
            angles = [theta * i / ma for i in range(ma)]
            pts.append((0.0, 0.0))
            for r in radial:
                for a in angles:
                    pts.append((r, a))
            rad_step = s / mr
            arc_step = theta * s / ma
        elif s <= 0.9 * min(wrap_radius, d):
            # development disk around p: membership and distances exact in
            # development coordinates, exactly scale covariant
            m_dev = ma
            rad_step = s / mr
            arc_step = 2.0 * math.pi * s / m_dev
            dev = [(0.0, 0.0)]
            for j in range(1, mr + 1):
                rr = s * j / mr
                for i in range(m_dev):
                    a = 2.0 * math.pi * i / m_dev
                    dev.append((rr * math.cos(a), rr * math.sin(a)))
            pts = [p]
            for zx, zy in dev[1:]:
                wx, wy = d + zx, zy
                pts.append((math.hypot(wx, wy),
                            (phi0 + math.atan2(wy, wx)) % theta))
            xy = np.array(dev)
            dmat = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2))
            np.fill_diagonal(dmat, 0.0)
            ids = tuple(range(len(pts)))
            labels = {i: pts[i] for i in range(len(pts))}
            space = FiniteMetricSpace(ids, dmat, base=0, labels=labels)
            return BallNet(space, 0, s, max(rad_step, arc_step),
                           4.0 * arc_step, margin=1e-9 * s,
                           meta={"kind": "cone-development"})
        else:
            # wrapped or tip-containing ball: tip-centered polar band with a
            # radial step proportional to the scale, anchored at the center
            lo = max(0.0, d - s)
            hi = d + s
            rad_step = s / max(mr // 2, 1)
            radial = [d + k * rad_step
                      for k in range(-int((d - lo) / rad_step) - 1,
                                     int((hi - d) / rad_step) + 2)]
            radial = [r for r in radial if lo - 1e-15 <= r <= hi + 1e-15]
            alim = math.asin(min(1.0, s / d)) * 1.02 + 1e-9 if s < d else theta
            if alim >= theta / 2.0:
                angles = [phi0 + theta * i / ma for i in range(ma)]
                arc_step = theta * hi / ma
                if lo == 0.0:
                    pts.append((0.0, 0.0))
            else:
                n_ang = ma + 1 if ma % 2 == 0 else ma
                angles = [phi0 - alim + 2 * alim * i / (n_ang - 1)
                          for i in range(n_ang)]
                arc_step = 2 * alim * hi / (n_ang - 1)
            for r in radial:
                if r <= 0.0:
                    continue
                for a in angles:
                    pts.append((r, a % theta))
        pts = [q for q in pts if self.cone.distance(p, q) <= s * (1 + 1e-12)]
        # the center is always a net point, exactly
        pts = [p] + [q for q in pts if q != p]
        n = len(pts)
        dmat = self.distance_matrix(pts)
        ids = tuple(range(n))
        labels = {i: pts[i] for i in range(n)}
        space = FiniteMetricSpace(ids, dmat, base=0, labels=labels)
        return BallNet(space, 0, s, max(rad_step, arc_step),
                       4.0 * arc_step, margin=1e-9 * s,
                       meta={"kind": "cone-polar"})

    def sphere_net(self, p: tuple, R: float, n_points: int = 96) -> FiniteMetricSpace:
        """Net of the distance sphere {y : d(p, y) = R} (analytic solve)."""
        theta = self.cone.total_angle
        d, phi0 = p
        pts = []
        if d <= 1e-15:
            for i in range(n_points):
                pts.append((R, theta * i / n_points))
        else:
            for i in range(n_points):
                a = -theta / 2 + theta * i / n_points
                sep = abs(a)
                if sep >= math.pi:
                    continue
                disc = d * d * math.cos(sep) ** 2 - (d * d - R * R)
                if disc < 0:
                    continue
                root = math.sqrt(disc)
                for r in (d * math.cos(sep) + root, d * math.cos(sep) - root):
                    if r > 1e-12:
                        pts.append((r, (phi0 + a) % theta))
        if not pts:
            raise MetricError("empty sphere net")
        dmat = self.distance_matrix(pts)
        return FiniteMetricSpace(tuple(range(len(pts))), dmat,
                                 labels={i: pts[i] for i in range(len(pts))})

    def geodesics(self, ball: BallNet) -> GeodesicOracle:
        p = ball.space.labels[ball.center]
        inner = ConeGeodesics(self.cone, p, ball.radius)
        return _IdOracle(inner, lambda i: ball.space.labels[i])

    def vertex_like_points(self) -> list:
        return [self.tip()]

    def vertex_angle(self, p) -> float | None:
        if p == (0.0, 0.0):
            return self.cone.total_angle
        return None


# ---------------------------------------------------------------------------
# Mesh host
# ---------------------------------------------------------------------------

SUBNET_RESOLUTION_FACTOR = 0.12   # subnet spacing <= factor * ball radius
ANALYTIC_CLEARANCE = 0.35         # analytic-ball radius <= factor * vertex gap


class MeshHost:
    """Polyhedral surface host.

    Serves three kinds of ball nets: exact vertex-fan cones (ball around a
    vertex containing no other vertex), exact flat disks (ball containing no
    vertex at all), and graph-metric subnets at scale-matched resolution for
    the coarse scales.  Per-point Dijkstra rows and per-level subnets are
    cached; nothing holds a global all-pairs matrix.
    """

    def __init__(self, surface: PolySurface, net_h: float = 0.035,
                 fan_resolution: tuple = (16, 48)):
        self.surface = surface
        self.net_h = net_h
        samples = {fi: _face_sample_barys(surface, fi, net_h)
                   for fi in range(len(surface.faces))}
        samples = {fi: b for fi, b in samples.items() if b}
        edge_len = np.linalg.norm(
            surface.vertices[surface.edges[:, 0]]
            - surface.vertices[surface.edges[:, 1]], axis=1)
        subdiv = int(max(1, math.ceil(edge_len.max() / (0.7 * net_h)) - 1))
        self.graph = MeshGraph(surface, edge_subdiv=subdiv, face_samples=samples)
        self.n_vertices = len(surface.vertices)
        self.name = f"mesh(V={self.n_vertices},h={net_h:g})"
        self.dim = 2
        self.fan_resolution = fan_resolution
        self._rows: dict[int, np.ndarray] = {}
        self._geo: dict[int, MeshGeodesics] = {}
        self._fan: dict[int, ConeHost] = {}
        self._flat = ConeHost(FlatCone(2.0 * math.pi), *fan_resolution)
        self._subnets: dict[int, tuple] = {}

    # -- caches ---------------------------------------------------------------

    def _row(self, p: int) -> np.ndarray:
        if p not in self._rows:
            self._rows[p] = self.graph.dijkstra([p])[0]
        return self._rows[p]

    def _geodesics_from(self, p: int) -> MeshGeodesics:
        if p not in self._geo:
            self._geo[p] = MeshGeodesics(self.graph, p, R=1.0)
        return self._geo[p]

    def _fan_host(self, v: int) -> ConeHost:
        if v not in self._fan:
            mr, ma = self.fan_resolution
            self._fan[v] = ConeHost(FlatCone(self.surface.cone_angle(v)),
                                    m_radial=mr, m_angular=ma)
        return self._fan[v]

    def _subnet(self, level: int) -> tuple:
        """(node ids, pairwise graph distances) at spacing ~ 2^-level / 8."""
        if level not in self._subnets:
            spacing = max(self.net_h,
                          SUBNET_RESOLUTION_FACTOR * 2.0 ** (-level))
            pos = self.graph.positions
            chosen = [0]
            mind = np.linalg.norm(pos - pos[0], axis=1)
            while mind.max() > spacing:
                j = int(np.argmax(mind))
                chosen.append(j)
                np.minimum(mind, np.linalg.norm(pos - pos[j], axis=1), out=mind)
            ids = sorted(chosen)
            mat = self.graph.dijkstra(ids)[:, ids]
            self._subnets[level] = (np.array(ids), mat)
        return self._subnets[level]

    def _subnet_level_for(self, s: float) -> int:
        # finest level whose spacing still exceeds the net_h floor; deeper
        # requests canonicalize to the floor level so the cache is shared
        floor_level = max(0, int(math.ceil(
            math.log2(SUBNET_RESOLUTION_FACTOR / self.net_h))))
        want = max(0, int(math.ceil(-math.log2(max(s, 1e-12)))))
        return min(want, floor_level)

    # -- host interface ---------------------------------------------------------

    def distance(self, a: int, b: int) -> float:
        return float(self._row(a)[b])

    def vertex_gap(self, p: int) -> float:
        """Distance from p to the nearest vertex other than itself."""
        row = self._row(p)
        d = [row[v] for v in range(self.n_vertices) if v != p]
        return float(min(d)) if d else math.inf

    def ball_net(self, p: int, s: float, prefer_fan: bool = True) -> BallNet:
        if prefer_fan:
            gap = self.vertex_gap(p)
            if p < self.n_vertices and s <= ANALYTIC_CLEARANCE * gap:
                bn = self._fan_host(p).ball_net((0.0, 0.0), s)
                meta = dict(bn.meta)
                meta.update({"kind": "vertex-fan", "vertex": p})
                return BallNet(bn.space, bn.center, s, bn.resolution,
                               bn.drift_floor, margin=bn.margin, meta=meta)
            if p >= self.n_vertices and s <= ANALYTIC_CLEARANCE * gap:
                bn = self._flat.ball_net((0.0, 0.0), s)
                meta = dict(bn.meta)
                meta.update({"kind": "flat-disk", "node": p})
                return BallNet(bn.space, bn.center, s, bn.resolution,
                               bn.drift_floor, margin=bn.margin, meta=meta)
        row = self._row(p)
        ids, mat = self._subnet(self._subnet_level_for(s))
        inside = ids[row[ids] <= s]
        sel = [int(i) for i in inside if i != p]
        pts = [p] + sel
        n = len(pts)
        d = np.zeros((n, n))
        pos = {int(i): k for k, i in enumerate(ids)}
        if sel:
            kk = [pos[i] for i in sel]
            d[1:, 1:] = mat[np.ix_(kk, kk)]
            d[0, 1:] = row[sel]
            d[1:, 0] = row[sel]
        labels = {i: {"node": i} for i in pts}
        space = FiniteMetricSpace(tuple(pts), d, base=p, labels=labels)
        h = max(self.net_h, SUBNET_RESOLUTION_FACTOR * s)
        return BallNet(space, p, s, h, 4.0 * h, margin=4.0 * h,
                       meta={"kind": "mesh-subnet"})

    def sphere_net(self, p: int, R: float, band: float = 0.08) -> FiniteMetricSpace:
        row = self._row(p)
        ids, mat = self._subnet(self._subnet_level_for(R))
        mask = np.abs(row[ids] - R) <= band * R
        sel = [int(i) for i in ids[mask]]
        if not sel:
            raise MetricError("empty sphere net; refine the host net")
        kk = [int(np.where(ids == i)[0][0]) for i in sel]
        sub = mat[np.ix_(kk, kk)]
        return FiniteMetricSpace(tuple(sel), sub,
                                 labels={i: {"node": i} for i in sel})

    def geodesics(self, ball: BallNet) -> GeodesicOracle:
        kind = ball.meta.get("kind", "")
        if kind == "vertex-fan":
            v = ball.meta["vertex"]
            inner = ConeGeodesics(self._fan_host(v).cone, (0.0, 0.0),
                                  ball.radius)
            return _IdOracle(inner, lambda i: ball.space.labels[i])
        if kind == "flat-disk":
            inner = ConeGeodesics(self._flat.cone, (0.0, 0.0), ball.radius)
            return _IdOracle(inner, lambda i: ball.space.labels[i])
        inner = self._geodesics_from(ball.center)

        class _NodeOracle(GeodesicOracle):
            def __init__(self):
                super().__init__(ball.center, ball.radius)

            def distance_to_base(self, x):
                return inner.distance_to_base(x)

            def induce(self, x, arclen):
                return inner.induce(x, arclen)

            def pairwise_distances(self, pts):
                return inner.pairwise_distances(pts)

        return _NodeOracle()

    def vertex_like_points(self) -> list:
        return list(range(self.n_vertices))

    def vertex_angle(self, p: int) -> float | None:
        if p < self.n_vertices:
            return self.surface.cone_angle(p)
        return None

    def sample_nodes(self, count: int, seed: int = 0,
                     include_vertices: bool = True) -> list[int]:
        """Deterministic sample of graph nodes for censuses."""
        rng = np.random.default_rng(seed)
        n = len(self.graph)
        picks = sorted(set(int(x) for x in
                           rng.choice(n, size=min(count, n), replace=False)))
        if include_vertices:
            verts = list(range(self.n_vertices))
            picks = sorted(set(verts + picks))[:max(count, len(verts))]
        return picks
