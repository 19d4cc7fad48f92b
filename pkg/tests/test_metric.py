import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conelab.metric import (FiniteMetricSpace, MetricError, Packing, ball,
                            cone_over, cross_section_metric, exact_packing_number,
                            exhaustive_gh, gh_certificate, greedy_packing,
                            induced_subpacking, intersection_number,
                            packing_number, path_metric)
from conelab.surfaces import ConeGeodesics, FlatCone


def line_net(n=101, length=1.0):
    xs = np.linspace(0.0, length, n)
    d = np.abs(xs[:, None] - xs[None, :])
    return FiniteMetricSpace(tuple(range(n)), d)


def planar_space(pts):
    pts = np.asarray(pts, float)
    d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
    return FiniteMetricSpace(tuple(range(len(pts))), d)


# -- brute-force oracles ------------------------------------------------------

def brute_packing_number(space, eps):
    """Independent oracle: exhaustive subset search."""
    n = len(space)
    sep = eps * space.diameter() * (1 - 1e-9)
    best = 0
    for mask in range(1, 1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        ok = all(space.dist[i, j] >= sep
                 for i, j in itertools.combinations(idx, 2))
        if ok:
            best = max(best, len(idx))
    return best


def brute_gh(X, Y):
    """Independent oracle: every correspondence with full projections."""
    nx, ny = len(X), len(Y)
    pairs = [(i, j) for i in range(nx) for j in range(ny)]
    best = math.inf
    for mask in range(1, 1 << len(pairs)):
        sel = [pairs[t] for t in range(len(pairs)) if mask >> t & 1]
        if len({i for i, _ in sel}) < nx or len({j for _, j in sel}) < ny:
            continue
        dis = max(abs(X.dist[i1, i2] - Y.dist[j1, j2])
                  for (i1, j1) in sel for (i2, j2) in sel)
        best = min(best, dis)
    return best / 2.0


# -- FiniteMetricSpace --------------------------------------------------------

class TestFiniteMetricSpace:
    def test_validation_passes(self):
        line_net(20).validate()

    def test_asymmetric_rejected(self):
        d = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(MetricError):
            FiniteMetricSpace((0, 1), d).validate()

    def test_triangle_violation_caught(self):
        d = np.array([[0, 1, 1], [1, 0, 5], [1, 5, 0.0]])
        with pytest.raises(MetricError, match="triangle"):
            FiniteMetricSpace((0, 1, 2), d).validate()

    def test_json_roundtrip(self):
        s = line_net(7)
        s2 = FiniteMetricSpace.from_json(s.to_json())
        assert s2.points == s.points
        assert np.allclose(s2.dist, s.dist)

    def test_unknown_point(self):
        with pytest.raises(MetricError):
            line_net(5).index("nope")


class TestBall:
    def test_two_point_small_radius(self):
        s = planar_space([[0, 0], [1, 0]])
        assert ball(s, 0, 0.5).points == (0,)

    def test_closed_ball_includes_boundary(self):
        s = planar_space([[0, 0], [1, 0]])
        assert len(ball(s, 0, 1.0)) == 2

    def test_net_ball_window(self):
        s = line_net(101)
        b = ball(s, 50, 0.25)
        assert b.points == tuple(range(25, 76))
        assert len(b) == 51
        assert b.base == 50


# -- packings ----------------------------------------------------------------

class TestGreedyPacking:
    def test_single_point(self):
        s = FiniteMetricSpace((7,), np.zeros((1, 1)))
        pk = greedy_packing(s, 0.5)
        assert pk.centers == (7,)

    def test_unit_interval_half(self):
        pk = greedy_packing(line_net(101), 0.5)
        assert pk.centers == (0, 100, 50)
        assert pk.check_separation() and pk.check_density()

    def test_two_points_eps_one(self):
        s = planar_space([[0, 0], [1, 0]])
        pk = greedy_packing(s, 1.0)
        assert set(pk.centers) == {0, 1}

    def test_kind_is_packing(self):
        assert greedy_packing(line_net(31), 0.3).kind == "packing"


class TestExactPackingNumber:
    def test_single_point_any_eps(self):
        s = FiniteMetricSpace((0,), np.zeros((1, 1)))
        assert exact_packing_number(s, 0.7) == 1

    def test_coarse_interval_vs_oracle(self):
        s = line_net(11)          # spacing 0.1 on [0, 1]
        expected = brute_packing_number(s, 0.5)
        assert exact_packing_number(s, 0.5) == expected == 3

    def test_eps_monotone_on_fine_net(self):
        s = line_net(101)
        p_half = exact_packing_number(s.restrict(tuple(range(0, 101, 5))), 0.5)
        p_quarter = exact_packing_number(s.restrict(tuple(range(0, 101, 5))), 0.25)
        assert p_quarter >= p_half
        assert p_quarter == 5 and p_half == 3

    def test_cap_enforced(self):
        with pytest.raises(MetricError, match="cap"):
            exact_packing_number(line_net(40), 0.5)

    def test_matches_oracle_random(self):
        rng = np.random.default_rng(3)
        for _ in range(8):
            pts = rng.random((rng.integers(3, 10), 2))
            s = planar_space(pts)
            eps = float(rng.uniform(0.2, 0.9))
            assert exact_packing_number(s, eps) == brute_packing_number(s, eps)

    def test_witness_is_dense(self):
        s = line_net(21)
        n, pk = exact_packing_number(s, 0.4, return_witness=True)
        assert len(pk) == n
        assert pk.kind == "cardinality-maximal"
        assert pk.check_separation()
        assert pk.check_density()


@st.composite
def random_planar_spaces(draw):
    n = draw(st.integers(min_value=2, max_value=9))
    coords = draw(st.lists(
        st.tuples(st.floats(-1, 1, allow_nan=False, width=32),
                  st.floats(-1, 1, allow_nan=False, width=32)),
        min_size=n, max_size=n))
    pts = np.asarray(coords, dtype=float)
    if np.linalg.norm(pts - pts[0], axis=1).max() < 1e-3:
        pts = pts + np.arange(n)[:, None] * [0.1, 0.0]
    return planar_space(pts)


class TestPackingProperties:
    @given(random_planar_spaces(),
           st.floats(0.1, 1.0, allow_nan=False),
           st.floats(0.1, 1.0, allow_nan=False))
    @settings(max_examples=60, deadline=None)
    def test_eps_monotonicity(self, s, e1, e2):
        lo, hi = min(e1, e2), max(e1, e2)
        assert exact_packing_number(s, lo) >= exact_packing_number(s, hi)

    @given(random_planar_spaces(), st.floats(0.1, 1.0, allow_nan=False))
    @settings(max_examples=60, deadline=None)
    def test_greedy_at_most_exact_and_valid(self, s, eps):
        pk = greedy_packing(s, eps)
        assert len(pk) <= exact_packing_number(s, eps)
        assert pk.check_separation(slack=1e-9 * s.diameter())
        assert pk.check_density(slack=1e-9 * s.diameter())


# -- induced subpackings -------------------------------------------------------

class TestInducedSubpacking:
    def _cone_ball_packing(self, cone, radius, eps, n=40):
        pts = [(0.0, 0.0)] + [(radius * (0.2 + 0.8 * i / n),
                               cone.total_angle * ((i * 7) % n) / n)
                              for i in range(n)]
        geo = ConeGeodesics(cone, (0.0, 0.0), radius)
        d = geo.pairwise_distances(pts)
        space = FiniteMetricSpace(tuple(range(len(pts))), d, base=0,
                                  labels={i: p for i, p in enumerate(pts)})
        pk = greedy_packing(space, eps)
        centers = tuple(c for c in pk.centers if c != 0)
        return space, Packing(space, pk.subset_diam, eps, centers), pts

    def test_plane_homothety_exact(self):
        cone = FlatCone(2 * math.pi)
        space, pk, pts = self._cone_ball_packing(cone, 1.0, 0.3)

        class Geo(ConeGeodesics):
            def __init__(self):
                super().__init__(cone, (0.0, 0.0), 1.0)

            def distance_to_base(self, x):
                return cone.distance((0.0, 0.0), pts[x])

            def induce(self, x, arclen):
                return cone.induce((0.0, 0.0), pts[x], arclen)

        ind = induced_subpacking(Geo(), 0, 1.0, 0.5, pk)
        assert np.allclose(ind.rescaled_to, ind.rescaled_from, atol=1e-12)

    def test_thin_cone_homothety_exact(self):
        cone = FlatCone(math.pi / 10)
        space, pk, pts = self._cone_ball_packing(cone, 1.0, 0.3)

        class Geo(ConeGeodesics):
            def __init__(self):
                super().__init__(cone, (0.0, 0.0), 1.0)

            def distance_to_base(self, x):
                return cone.distance((0.0, 0.0), pts[x])

            def induce(self, x, arclen):
                return cone.induce((0.0, 0.0), pts[x], arclen)

        ind = induced_subpacking(Geo(), 0, 1.0, 0.5, pk)
        assert np.allclose(ind.rescaled_to, ind.rescaled_from, atol=1e-12)

    def test_base_point_rejected(self):
        cone = FlatCone(2 * math.pi)
        space, pk, pts = self._cone_ball_packing(cone, 1.0, 0.3)
        bad = Packing(space, pk.subset_diam, pk.eps, (0,) + pk.centers)

        class Geo(ConeGeodesics):
            def __init__(self):
                super().__init__(cone, (0.0, 0.0), 1.0)

            def distance_to_base(self, x):
                return cone.distance((0.0, 0.0), pts[x])

        with pytest.raises(MetricError, match="geodesic unavailable"):
            induced_subpacking(Geo(), 0, 1.0, 0.5, bad)


# -- GH machinery --------------------------------------------------------------

class TestGHCertificate:
    def test_identity_matching(self):
        s = line_net(11)
        pk = greedy_packing(s, 0.3)
        matching = [(c, c) for c in pk.centers]
        cert = gh_certificate(s, s, pk, pk, matching)
        assert cert.max_distortion == 0.0
        assert math.isclose(cert.gh_upper_bound, 4 * 0.3 * s.diameter())

    def test_requires_dense(self):
        s = line_net(11)
        pk = greedy_packing(s, 0.3)
        sub = Packing(s, pk.subset_diam, pk.eps, pk.centers,
                      kind="subpacking")
        matching = [(c, c) for c in pk.centers]
        with pytest.raises(MetricError, match="dense"):
            gh_certificate(s, s, sub, pk, matching)

    def test_size_mismatch(self):
        s = line_net(11)
        pk = greedy_packing(s, 0.3)
        with pytest.raises(MetricError, match="size"):
            gh_certificate(s, s, pk, pk, [])

    def test_distortion_bound_rule(self):
        s = line_net(11)
        t = s.rescale(0.9)
        pk_s = greedy_packing(s, 0.3)
        pk_t = greedy_packing(t, 0.3)
        matching = list(zip(pk_s.centers, pk_t.centers))
        cert = gh_certificate(s, t, pk_s, pk_t, matching)
        assert cert.gh_upper_bound >= exhaustive_gh(
            s.restrict(pk_s.centers), t.restrict(pk_t.centers))


class TestExhaustiveGH:
    def test_identical_spaces(self):
        s = line_net(5)
        assert exhaustive_gh(s, s) == 0.0

    def test_point_vs_pair(self):
        one = FiniteMetricSpace((0,), np.zeros((1, 1)))
        two = planar_space([[0, 0], [1, 0]])
        assert exhaustive_gh(one, two) == pytest.approx(0.5)

    def test_matches_full_enumeration(self):
        rng = np.random.default_rng(11)
        for _ in range(6):
            X = planar_space(rng.random((int(rng.integers(1, 4)), 2)))
            Y = planar_space(rng.random((int(rng.integers(1, 4)), 2)))
            assert exhaustive_gh(X, Y) == pytest.approx(brute_gh(X, Y))

    def test_enumeration_order_invariance(self):
        rng = np.random.default_rng(5)
        pts = rng.random((4, 2))
        X = planar_space(pts)
        Y = planar_space(pts * 0.9)
        v1 = exhaustive_gh(X, Y)
        perm = [2, 0, 3, 1]
        Xp = X.restrict(tuple(perm))
        assert exhaustive_gh(Xp, Y) == pytest.approx(v1)
        assert v1 > 0

    def test_cap(self):
        with pytest.raises(MetricError):
            exhaustive_gh(line_net(7), line_net(7))


# -- cross sections and cones ---------------------------------------------------

class TestCrossSection:
    def circle_net(self, n=360, R=1.0):
        ang = 2 * math.pi * np.arange(n) / n
        pts = R * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return planar_space(pts), ang

    def test_arc_length_approximation(self):
        s, ang = self.circle_net()
        cs = cross_section_metric(s, 1.0, link=0.1)
        i, j = 0, 60    # 60 degrees apart
        arc = 2 * math.pi * 60 / 360
        assert abs(cs.d(i, j) - arc) / arc < 1e-3

    def test_antipodal_close_to_pi(self):
        s, ang = self.circle_net()
        cs = cross_section_metric(s, 1.0, link=0.1)
        assert abs(cs.d(0, 180) - math.pi) < 5e-3
        assert abs(s.d(0, 180) - 2.0) < 1e-12

    def test_single_point_net(self):
        s = FiniteMetricSpace((0,), np.zeros((1, 1)))
        assert len(cross_section_metric(s, 1.0, link=0.1)) == 1

    def test_disconnected_reported(self):
        s = planar_space([[0, 0], [10, 0]])
        with pytest.raises(MetricError, match="disconnected"):
            path_metric(s, 1.0)

    def test_exact_triangle_inequality(self):
        s, _ = self.circle_net(72)
        cs = cross_section_metric(s, 1.0, link=0.2)
        d = cs.dist
        n = len(cs)
        for k in range(0, n, 7):
            assert (d - (d[:, k][:, None] + d[k, :][None, :])).max() <= 1e-12


class TestConeOver:
    def circle_space(self, rho, R, n=48):
        # exact chain metric on the cross section at radius R: arc lengths
        ang = 2 * math.pi * np.arange(n) / n
        sep = np.abs(ang[:, None] - ang[None, :])
        sep = np.minimum(sep, 2 * math.pi - sep)
        d = R * rho * sep          # arc length on the circle of radius rho*R
        return FiniteMetricSpace(tuple(range(n)), d), ang

    def test_reproduces_flat_cone(self):
        rho = 1.0 / 20.0
        R = 1.0
        sigma, ang = self.circle_space(rho, R)
        model = cone_over(sigma, R, radial_levels=6)
        cone = FlatCone.over_circle(rho)
        for (i, li), (j, lj) in [((0, 2), (5, 4)), ((3, 1), (20, 6)),
                                 ((10, 3), (40, 5))]:
            # cone coordinates: radius = level fraction * R, angle = rho * ang
            pa = (li / 6.0 * R, rho * ang[i])
            pb = (lj / 6.0 * R, rho * ang[j])
            got = model.d((i, li), (j, lj))
            want = cone.distance(pa, pb)
            assert abs(got - want) <= 1e-9

    def test_single_point_sigma_is_segment(self):
        sigma = FiniteMetricSpace(("w",), np.zeros((1, 1)))
        model = cone_over(sigma, 1.0, radial_levels=4)
        assert model.d(("w", 1), ("w", 3)) == pytest.approx(0.5)

    def test_tip_distances_are_radii(self):
        sigma, _ = self.circle_space(0.25, 2.0, n=12)
        model = cone_over(sigma, 2.0, radial_levels=4)
        for j in range(1, 5):
            assert model.d("tip", (0, j)) == pytest.approx(2.0 * j / 4)

    def test_triangle_inequality(self):
        sigma, _ = self.circle_space(0.3, 1.0, n=16)
        model = cone_over(sigma, 1.0, radial_levels=3)
        model.validate(tol_tri=1e-9)


# -- intersection numbers --------------------------------------------------------

def brute_intersection_number(balls):
    """Independent oracle: exhaustive subset feasibility for small families."""
    from conelab.metric import _balls_have_common_point
    centers = np.array([np.atleast_1d(np.asarray(c, float)) for c, _ in balls])
    radii = np.array([r for _, r in balls])
    best = 0
    n = len(balls)
    for mask in range(1, 1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        if len(idx) <= best:
            continue
        if _balls_have_common_point(centers[idx], radii[idx]):
            best = len(idx)
    return best


class TestIntersectionNumber:
    def test_disjoint(self):
        balls = [((0.0,), 0.4), ((1.0,), 0.4), ((2.0,), 0.4)]
        assert intersection_number(balls) == 1

    def test_concentric(self):
        balls = [((0.0, 0.0), r) for r in (1.0, 2.0, 3.0)]
        assert intersection_number(balls) == 3

    def test_intervals_vs_brute(self):
        rng = np.random.default_rng(2)
        balls = [((float(rng.uniform(0, 1)),), float(rng.uniform(0.02, 0.2)))
                 for _ in range(50)]
        got = intersection_number(balls)
        # sweep oracle: depth at every interval endpoint
        events = sorted([(c[0] - r, 0) for c, r in balls]
                        + [(c[0] + r, 1) for c, r in balls])
        depth = best = 0
        for _, kind in events:
            depth += 1 if kind == 0 else -1
            best = max(best, depth)
        assert got == best

    def test_disks_vs_brute(self):
        rng = np.random.default_rng(4)
        balls = [(tuple(rng.uniform(0, 1, 2)), float(rng.uniform(0.1, 0.4)))
                 for _ in range(7)]
        assert intersection_number(balls) == brute_intersection_number(balls)

    def test_three_dim_quadruple(self):
        balls = [((0.0, 0, 0), 1.0), ((1.0, 0, 0), 1.0),
                 ((0.0, 1, 0), 1.0), ((0.0, 0, 1), 1.0)]
        assert intersection_number(balls) == 4
