import math

import numpy as np
import pytest

from conelab.metric import FiniteMetricSpace
from conelab.surfaces import (DistanceResult, FlatCone, MeshGraph, PolySurface,
                              SurfaceError, SurfacePoint, build_convex_surface,
                              geodesic_family, intrinsic_distance,
                              intrinsic_distance_ex, lateral_point, load_obj,
                              meshed_cone, net_coverage_gap,
                              regular_tetrahedron, sample_net, save_obj)

FOUR_PI = 4.0 * math.pi


class TestBuildConvexSurface:
    def test_regular_tetrahedron(self):
        surf = build_convex_surface(regular_tetrahedron(1.0))
        assert len(surf.faces) == 4
        assert np.allclose(surf.cone_angles, math.pi)
        assert abs(surf.total_deficit() - FOUR_PI) < 1e-12

    def test_unit_cube(self):
        pts = [(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)]
        surf = build_convex_surface(np.array(pts, float))
        assert len(surf.vertices) == 8
        assert len(surf.faces) == 12
        assert np.allclose(surf.cone_angles, 1.5 * math.pi)
        assert abs(surf.total_deficit() - 8 * (math.pi / 2)) < 1e-12

    def test_tetra_plus_bump(self):
        tet = regular_tetrahedron(1.0)
        centroid = tet[[0, 1, 2]].mean(axis=0)
        normal = np.cross(tet[1] - tet[0], tet[2] - tet[0])
        normal /= np.linalg.norm(normal)
        if np.dot(normal, centroid - tet.mean(axis=0)) < 0:
            normal = -normal
        surf = build_convex_surface(np.vstack([tet, centroid + 0.05 * normal]))
        assert len(surf.faces) == 6
        assert abs(surf.total_deficit() - FOUR_PI) < 1e-9

    def test_coplanar_rejected(self):
        pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.0]])
        with pytest.raises(SurfaceError, match="degenerate"):
            build_convex_surface(pts)

    def test_interior_point_dropped(self):
        pts = np.vstack([regular_tetrahedron(1.0), [[0, 0, 0]]])
        surf = build_convex_surface(pts)
        assert len(surf.vertices) == 4


class TestConeAngle:
    def test_flat_subdivision_vertex(self):
        # subdivide one tetra face at its centroid: the new vertex is flat
        tet = regular_tetrahedron(1.0)
        surf = build_convex_surface(tet)
        f = surf.faces[0]
        centroid = surf.vertices[f].mean(axis=0)
        verts = np.vstack([surf.vertices, centroid])
        c = len(verts) - 1
        faces = [list(ff) for i, ff in enumerate(surf.faces) if i != 0]
        a, b, d = f
        faces += [[a, b, c], [b, d, c], [d, a, c]]
        sub = PolySurface(verts, np.array(faces))
        assert sub.cone_angle(c) == pytest.approx(2 * math.pi)
        assert abs(sub.total_deficit() - FOUR_PI) < 1e-9

    def test_unknown_vertex(self):
        surf = build_convex_surface(regular_tetrahedron(1.0))
        with pytest.raises(SurfaceError):
            surf.cone_angle(99)


class TestFlatCone:
    def test_plane_is_euclidean(self):
        cone = FlatCone(2 * math.pi)
        d = cone.distance((1.0, 0.0), (1.0, math.pi / 2))
        assert d == pytest.approx(math.sqrt(2.0))

    def test_through_tip_when_wide(self):
        cone = FlatCone(2 * math.pi)
        assert cone.distance((1.0, 0.0), (2.0, math.pi)) == pytest.approx(3.0)

    def test_paper_thin_cone_chord(self):
        cone = FlatCone.over_circle(1.0 / 20.0)
        assert cone.total_angle == pytest.approx(math.pi / 10)
        d = cone.distance((1.0, 0.0), (1.0, math.pi / 20))
        assert d == pytest.approx(2 * math.sin(math.pi / 40))

    def test_high_precision_agrees(self):
        cone = FlatCone.over_circle(1.0 / 20.0)
        a, b = (0.7, 0.01), (0.4, 0.12)
        assert float(cone.distance_hp(a, b)) == pytest.approx(
            cone.distance(a, b), abs=1e-15)

    def test_induce_identity(self):
        cone = FlatCone(math.pi / 2)
        base, x = (0.5, 0.1), (0.9, 0.3)
        total = cone.distance(base, x)
        mid = cone.induce(base, x, 0.5 * total)
        assert cone.distance(base, mid) == pytest.approx(0.5 * total)
        assert cone.distance(mid, x) == pytest.approx(0.5 * total)


def unfolding_oracle_midpoints():
    """Distance between midpoints of two opposite edges of the unit regular
    tetrahedron, through an explicit two-face unfolding."""
    # faces (0,1,2) and (1,2,3) share edge (1,2); unfold across it
    # in the plane: 1=(0,0), 2=(1,0), 0 above, 3 below
    h = math.sqrt(3) / 2
    p0 = np.array([0.5, h])
    p3 = np.array([0.5, -h])
    m01 = (np.array([0.0, 0.0]) + p0) / 2.0     # midpoint of edge (0,1)
    m23 = (np.array([1.0, 0.0]) + p3) / 2.0     # midpoint of edge (2,3)
    return float(np.linalg.norm(m01 - m23))


class TestIntrinsicDistance:
    def test_same_face_straight(self):
        surf = build_convex_surface(regular_tetrahedron(1.0))
        a = SurfacePoint(0, (0.6, 0.2, 0.2))
        b = SurfacePoint(0, (0.1, 0.7, 0.2))
        pa, pb = surf.point_position(a), surf.point_position(b)
        assert intrinsic_distance(surf, a, b) == pytest.approx(
            float(np.linalg.norm(pa - pb)))

    def test_adjacent_vertices_edge_length(self):
        surf = build_convex_surface(regular_tetrahedron(1.0))
        assert intrinsic_distance(surf, 0, 1) == pytest.approx(1.0, rel=1e-6)

    def test_two_face_unfolding_oracle(self):
        surf = build_convex_surface(regular_tetrahedron(1.0))
        # find the face pair sharing an edge and take opposite edge midpoints
        # via barycentric placement on the actual mesh
        f = surf.faces
        # mesh vertices 0..3; edges (0,1) and (2,3) are opposite
        def face_with(u, v):
            for fi, ff in enumerate(f):
                if u in ff and v in ff:
                    return fi
            raise AssertionError
        fi = face_with(0, 1)
        fj = face_with(2, 3)
        bi = [0.0, 0.0, 0.0]
        for slot, vid in enumerate(f[fi]):
            if vid in (0, 1):
                bi[slot] = 0.5
        bj = [0.0, 0.0, 0.0]
        for slot, vid in enumerate(f[fj]):
            if vid in (2, 3):
                bj[slot] = 0.5
        a = SurfacePoint(fi, tuple(bi))
        b = SurfacePoint(fj, tuple(bj))
        got = intrinsic_distance_ex(surf, a, b, edge_subdiv=10)
        assert got.value == pytest.approx(unfolding_oracle_midpoints(),
                                          rel=1e-6)

    @pytest.mark.parametrize("theta", [math.pi / 10, math.pi / 2,
                                       1.5 * math.pi])
    def test_meshed_cone_matches_analytic(self, theta):
        cone = FlatCone(theta)
        surf = meshed_cone(theta, n_seg=64)
        g = MeshGraph(surf, edge_subdiv=6)
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(6):
            r1, r2 = rng.uniform(0.2, 0.8, 2)
            a1, a2 = rng.uniform(0, theta, 2)
            p1 = lateral_point(surf, cone, r1, a1, 64)
            p2 = lateral_point(surf, cone, r2, a2, 64)
            exact = cone.distance((r1, a1), (r2, a2))
            got = intrinsic_distance_ex(surf, p1, p2, graph=g).value
            worst = max(worst, abs(got - exact) / exact)
        assert worst <= 1e-3

    def test_triangle_inequality_sampled(self):
        surf = meshed_cone(math.pi / 2, n_seg=32)
        cone = FlatCone(math.pi / 2)
        g = MeshGraph(surf, edge_subdiv=5)
        rng = np.random.default_rng(1)
        pts = [lateral_point(surf, cone, float(rng.uniform(0.2, 0.8)),
                             float(rng.uniform(0, math.pi / 2)), 32)
               for _ in range(6)]
        d = np.zeros((6, 6))
        for i in range(6):
            for j in range(i + 1, 6):
                d[i, j] = d[j, i] = intrinsic_distance(surf, pts[i], pts[j],
                                                       graph=g)
        tol = 2e-3
        for k in range(6):
            assert (d - (d[:, k][:, None] + d[k, :][None, :])).max() <= 2 * tol


class TestSampleNet:
    def test_coarse_net_vertices_only(self):
        surf = build_convex_surface(regular_tetrahedron(1.0))
        space, g = sample_net(surf, h=5.0)
        # only vertices (edge subdivision minimum of one interior point)
        assert len(space) <= 4 + len(surf.edges)

    def test_coverage_audit(self):
        surf = build_convex_surface(regular_tetrahedron(1.0))
        space, g = sample_net(surf, h=0.2)
        gap = net_coverage_gap(surf, g.positions, n_samples=10_000)
        assert gap <= 0.2

    def test_symmetric_zero_diagonal(self):
        surf = build_convex_surface(regular_tetrahedron(1.0))
        space, _ = sample_net(surf, h=0.4)
        assert np.allclose(space.dist, space.dist.T)
        assert np.allclose(np.diag(space.dist), 0.0)
        space.validate(tol_tri=1e-9)


class TestGeodesicFamily:
    def test_cone_tip_radial_scaling(self):
        from conelab.surfaces import ConeGeodesics
        cone = FlatCone(math.pi / 10)
        geo = ConeGeodesics(cone, (0.0, 0.0), 1.0)
        x = (0.8, 0.05)
        phi = geo.induce(x, 0.25 * geo.distance_to_base(x))
        assert phi[0] == pytest.approx(0.2)
        assert phi[1] == pytest.approx(0.05)

    def test_mesh_induce_identity(self):
        surf = build_convex_surface(regular_tetrahedron(1.0))
        space, g = sample_net(surf, h=0.25)
        fam = geodesic_family(surf, g, 0, R=1.0)
        for x in range(5, len(g), max(1, len(g) // 6)):
            dpx = fam.distance_to_base(x)
            if dpx <= 0 or not np.isfinite(dpx):
                continue
            pos, faces = fam.induce(x, 0.5 * dpx)
            back = fam.pairwise_distances([(g.positions[0],
                                            tuple(range(len(surf.faces)))),
                                           (pos, faces)])
            assert back[0, 1] <= 0.5 * dpx * (1 + 1e-6) + 1e-9


class TestObjRoundtrip:
    def test_roundtrip(self, tmp_path):
        surf = build_convex_surface(regular_tetrahedron(1.0))
        path = tmp_path / "tetra.obj"
        save_obj(surf, str(path))
        surf2 = load_obj(str(path))
        assert np.allclose(surf2.vertices, surf.vertices)
        assert np.array_equal(np.sort(surf2.faces, axis=None),
                              np.sort(surf.faces, axis=None))

    def test_stats_report_keys(self):
        surf = build_convex_surface(regular_tetrahedron(1.0))
        rep = surf.stats_report()
        assert rep["vertex_count"] == 4
        assert rep["face_count"] == 4
        assert rep["euler_characteristic"] == 2
        assert "angle_deficit_histogram" in rep
        assert rep["min_vertex_separation"] == pytest.approx(1.0)
