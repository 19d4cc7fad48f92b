"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Every tolerance is pinned here, from the contract.  Set CONELAB_ACCEPT_FAST=1
to shrink the sampled censuses during development; the shipped defaults run
the full sizes.
"""

import math
import os

import numpy as np
import pytest

import conelab as cl
from conelab.constructions import (angle_singular_count, layered_deficit_sum,
                                   middle_thirds_arcs, spike_sphere)
from conelab.detectors import (bad_free_windows, bad_scales,
                               deficit_to_detector_eps, strong_singular,
                               uniform_symmetry_test)
from conelab.experiments import (run_bad_scale_census, run_cantor_verification,
                                 run_inclusion_audit)
from conelab.hosts import ConeHost, MeshHost
from conelab.metric import (FiniteMetricSpace, Packing, cone_over,
                            exact_packing_number, gh_certificate,
                            greedy_packing, exhaustive_gh)
from conelab.surfaces import (FlatCone, MeshGraph, build_convex_surface,
                              intrinsic_distance_ex, lateral_point,
                              meshed_cone, regular_tetrahedron)

FOUR_PI = 4.0 * math.pi
FAST = os.environ.get("CONELAB_ACCEPT_FAST") == "1"


def report(criterion: str, ok: bool, detail: str = ""):
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion} {detail}")
    assert ok, f"{criterion}: {detail}"


@pytest.fixture(scope="module")
def spike_family():
    return {k: spike_sphere(k)[0] for k in range(1, 6)}


def test_criterion_1_gauss_bonnet_exactness(spike_family):
    """Total deficit is 4*pi within 1e-9 on every generated convex sphere."""
    import time
    t0 = time.perf_counter()
    hosts = [("tetra", build_convex_surface(regular_tetrahedron(1.0)))]
    cube = [(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)]
    hosts.append(("cube", build_convex_surface(np.array(cube, float))))
    hosts += [(f"spike:{k}", s) for k, s in spike_family.items()]
    worst = max(abs(s.total_deficit() - FOUR_PI) for _, s in hosts)
    elapsed = time.perf_counter() - t0
    report("criterion 1 (Gauss-Bonnet exactness)",
           worst <= 1e-9 and elapsed < 5.0,
           f"worst defect {worst:.2e}, {elapsed:.2f}s")


def test_criterion_2_singular_count_bound(spike_family):
    """Angle-oracle counts obey 4*pi/eps while the complex keeps growing."""
    import time
    t0 = time.perf_counter()
    ok = True
    details = []
    prev = None
    for k in range(1, 6):
        surf = spike_family[k]
        for eps in (0.2, 0.5, 1.0):
            c = angle_singular_count(surf, eps)
            if c > FOUR_PI / eps + 1e-12:
                ok = False
                details.append(f"k={k} eps={eps} count={c}")
        if prev is not None:
            # growth: faces exactly triple; vertices at least double (the
            # construction adds one apex per face: V_{k+1} = V_k + F_k)
            if len(surf.faces) != 3 * len(prev.faces):
                ok = False
                details.append(f"k={k} face growth")
            if len(surf.vertices) < 2 * len(prev.vertices):
                ok = False
                details.append(f"k={k} vertex growth")
        prev = surf
    elapsed = time.perf_counter() - t0
    report("criterion 2 (singular count bound + growth)",
           ok and elapsed < 60.0, f"{details} {elapsed:.2f}s")


def test_criterion_3_layered_sum(spike_family):
    """Sum of eps_{i+1} * |layer_i| stays below the 4*pi budget exactly."""
    worst = max(layered_deficit_sum(s, levels=10)
                for s in spike_family.values())
    report("criterion 3 (layered deficit sum)", worst <= FOUR_PI + 1e-12,
           f"worst sum {worst:.6f} <= 4pi")


def test_criterion_4_packing_number_laws(spike_family):
    """Exact packing numbers: monotone in scale and in eps, greedy <= exact,
    on 200 random (p, r <= R, eps) triples over spike hosts."""
    host = MeshHost(spike_family[3], net_h=0.08,
                    fan_resolution=(4, 6))        # <= 25-point exact nets
    rng = np.random.default_rng(0)
    nodes = host.sample_nodes(60, seed=1)
    violations = []
    trials = 40 if FAST else 200
    done = 0
    i = 0
    while done < trials:
        p = nodes[int(rng.integers(0, len(nodes)))]
        gap = host.vertex_gap(p)
        i += 1
        if i > 20 * trials:
            break
        if not np.isfinite(gap) or gap <= 0:
            continue
        R = float(rng.uniform(0.1, 0.35)) * gap
        r = R * float(rng.uniform(0.3, 0.95))
        eps = float(rng.uniform(0.25, 0.9))
        eps2 = eps * float(rng.uniform(0.4, 0.95))
        big = host.ball_net(p, R)
        small = host.ball_net(p, r)
        if len(big) > 25 or len(small) > 25:
            continue
        pR = exact_packing_number(big.space, eps)
        pr = exact_packing_number(small.space, eps)
        pe2 = exact_packing_number(big.space, eps2)
        g = len(greedy_packing(big.space, eps))
        if pr < pR:
            violations.append(("scale", p, r, R, eps, pr, pR))
        if pe2 < pR:
            violations.append(("eps", p, eps2, eps, pe2, pR))
        if g > pR:
            violations.append(("greedy", p, eps, g, pR))
        done += 1
    report("criterion 4 (packing-number laws)",
           done >= trials and not violations,
           f"{done} triples, violations: {violations[:3]}")


def test_criterion_5_gh_oracle_equivalence():
    """Certificate upper bounds dominate the exact GH value; the finite cone
    model reproduces the analytic flat cone to 1e-9."""
    import time
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    pairs = 20 if FAST else 100
    bad = []
    for t in range(pairs):
        n = int(rng.integers(2, 7))
        pts = rng.random((n, 2))
        X = FiniteMetricSpace(tuple(range(n)),
                              np.linalg.norm(pts[:, None] - pts[None, :],
                                             axis=2))
        mode = t % 3
        if mode == 0:
            Y = X.rescale(float(rng.uniform(0.7, 1.3)))
        elif mode == 1:
            q = pts + rng.normal(0, 0.05, pts.shape)
            Y = FiniteMetricSpace(tuple(range(n)),
                                  np.linalg.norm(q[:, None] - q[None, :],
                                                 axis=2))
        else:
            q = rng.random((n, 2))
            Y = FiniteMetricSpace(tuple(range(n)),
                                  np.linalg.norm(q[:, None] - q[None, :],
                                                 axis=2))
        exact = exhaustive_gh(X, Y)
        epsX = max(_min_sep(X) / max(X.diameter(), 1e-12), 1e-9)
        epsY = max(_min_sep(Y) / max(Y.diameter(), 1e-12), 1e-9)
        pkX = Packing(X, X.diameter(), min(1.0, epsX), X.points, "packing")
        pkY = Packing(Y, Y.diameter(), min(1.0, epsY), Y.points, "packing")
        cert = gh_certificate(X, Y, pkX, pkY, list(zip(X.points, Y.points)))
        if cert.gh_upper_bound < exact - 1e-12:
            bad.append((t, cert.gh_upper_bound, exact))
    # analytic cone reproduction
    rho, R = 1.0 / 20.0, 1.0
    m = 48
    ang = 2 * math.pi * np.arange(m) / m
    sep = np.abs(ang[:, None] - ang[None, :])
    sep = np.minimum(sep, 2 * math.pi - sep)
    sigma = FiniteMetricSpace(tuple(range(m)), R * rho * sep)
    model = cone_over(sigma, R, radial_levels=6)
    cone = FlatCone.over_circle(rho)
    worst = 0.0
    for i, li in ((0, 1), (7, 3), (25, 6)):
        for j, lj in ((3, 2), (40, 5), (12, 4)):
            got = model.d((i, li), (j, lj))
            want = cone.distance((li / 6.0, rho * ang[i]),
                                 (lj / 6.0, rho * ang[j]))
            worst = max(worst, abs(got - want))
    elapsed = time.perf_counter() - t0
    report("criterion 5 (GH machinery oracle equivalence)",
           not bad and worst <= 1e-9 and elapsed < 120.0,
           f"{pairs} pairs, cone err {worst:.2e}, {elapsed:.1f}s")


def _min_sep(space):
    n = len(space)
    if n <= 1:
        return 0.0
    off = space.dist[~np.eye(n, dtype=bool)]
    return float(off.min())


def test_criterion_6_geodesic_calibration():
    """Meshed flat cones against analytic distances: relative error at most
    1e-3 at the documented subdivision, no triangle violations at 2*tol."""
    tol = 1e-3
    ok = True
    details = []
    for theta in (math.pi / 10, math.pi / 2, 1.5 * math.pi):
        cone = FlatCone(theta)
        surf = meshed_cone(theta, n_seg=64)
        g = MeshGraph(surf, edge_subdiv=6)
        rng = np.random.default_rng(0)
        pts, vals = [], {}
        for _ in range(6):
            r, a = float(rng.uniform(0.2, 0.8)), float(rng.uniform(0, theta))
            pts.append((r, a))
        n = len(pts)
        d = np.zeros((n, n))
        worst = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                exact = cone.distance(pts[i], pts[j])
                got = intrinsic_distance_ex(
                    surf, lateral_point(surf, cone, *pts[i], 64),
                    lateral_point(surf, cone, *pts[j], 64), graph=g).value
                d[i, j] = d[j, i] = got
                worst = max(worst, abs(got - exact) / exact)
        tri = max(float((d - (d[:, k][:, None] + d[k, :][None, :])).max())
                  for k in range(n))
        if worst > tol or tri > 2 * tol:
            ok = False
        details.append(f"theta={theta:.2f}: err={worst:.1e} tri={tri:.1e}")
    report("criterion 6 (geodesic engine calibration)", ok,
           "; ".join(details))


def test_criterion_7_bad_scale_census():
    """Max census over sampled points identical within 1 across spike
    iterations {3,4,5} and depth caps {8,12,16}; cone tip census exactly 0."""
    cfg = {"points": 30 if FAST else 200,
           "alpha_maxes": [8, 12] if FAST else [8, 12, 16],
           "spike_iterations": [3, 4] if FAST else [3, 4, 5],
           "eps": 0.1, "delta": 0.3}
    rep = run_bad_scale_census(cfg)
    report("criterion 7 (bad-scale census boundedness)", rep.passed,
           f"maxima {rep.measured['maxima']}, failing {rep.failing_records()}")


def test_criterion_8_recursion_soundness():
    """Every bad-scale-free determinate window on every computed record
    re-tests to a uniformly conical verdict, zero exceptions."""
    hosts = []
    cone = ConeHost(FlatCone.over_circle(1.0 / 20.0))
    rng = np.random.default_rng(0)
    cone_pts = [(0.0, 0.0)] + [(float(rng.uniform(0.05, 1.0)),
                                float(rng.uniform(0, cone.cone.total_angle)))
                               for _ in range(9)]
    hosts.append((cone, cone_pts))
    surf, _ = spike_sphere(3)
    mesh = MeshHost(surf, net_h=0.05)
    hosts.append((mesh, mesh.sample_nodes(8 if FAST else 25, seed=3)))
    exceptions = []
    windows = 0
    for host, pts in hosts:
        cache = {}
        for p in pts:
            rec = bad_scales(host, p, 0.1, alpha_max=10, delta=0.3,
                             trace_cache=cache)
            for ac, af in bad_free_windows(rec):
                windows += 1
                res = uniform_symmetry_test(host, p, rec.trace.scale(af),
                                            rec.trace.scale(ac), 0.1,
                                            delta=0.3, trace_cache=cache)
                if res.verdict != 0:
                    exceptions.append((getattr(host, "name", "?"), p, ac, af))
    report("criterion 8 (recursion soundness)",
           windows > 0 and not exceptions,
           f"{windows} windows, exceptions: {exceptions[:3]}")


def test_criterion_9_detector_oracle_agreement():
    """Strong-singular detector against the angle criterion on spike-sphere
    vertices at r = 0.1 * min vertex separation: at least 95% agreement,
    with the calibration table emitted."""
    table = []
    agree = total = 0
    for k in (3, 4):
        surf, _ = spike_sphere(k)
        host = MeshHost(surf, net_h=0.08)
        r = 0.1 * surf.min_vertex_separation()
        for eps_prime in (0.3, 0.6, 1.0):
            eps_det = deficit_to_detector_eps(eps_prime)
            row_agree = row_total = 0
            for v in range(len(surf.vertices)):
                det = strong_singular(host, v, 0, eps_det, r)
                if det is None:
                    continue
                oracle = (2 * math.pi - surf.cone_angle(v)) >= eps_prime
                row_total += 1
                row_agree += (det == oracle)
            table.append({"k": k, "eps_prime": eps_prime,
                          "eps_detector": eps_det,
                          "agreement": row_agree / max(row_total, 1)})
            agree += row_agree
            total += row_total
    frac = agree / max(total, 1)
    print("calibration table (eps_prime -> eps_detector = (eps'/4)^2):")
    for row in table:
        print(f"  k={row['k']} eps'={row['eps_prime']:.2f} "
              f"eps={row['eps_detector']:.4f} "
              f"agreement={row['agreement']:.3f}")
    report("criterion 9 (detector-oracle agreement)", frac >= 0.95,
           f"agreement {frac:.3f} over {total} verdicts")


def test_criterion_10_inclusion_audit():
    """Definitional inclusions pointwise with zero exceptions over the grid."""
    rep = run_inclusion_audit({"points": 8 if FAST else 12,
                               "eps": [0.05, 0.1, 0.2],
                               "r": [2.0 ** -3, 2.0 ** -4, 2.0 ** -5]})
    ok = rep.verdicts["weak-subset-strong"] and \
        rep.verdicts["weak-subset-symmetric"]
    report("criterion 10 (inclusion audit)", ok,
           f"exceptions: {rep.measured['exceptions']}, "
           f"delta table {rep.measured['delta_of_eps']}")


def test_criterion_11_cantor_construction():
    """Generation-4 middle-thirds crease set: classification matches the
    prescribed set under refinement, smoothing is convexity-certified on
    1000 random chords, fat input keeps positive measure."""
    rep = run_cantor_verification({"chords": 200 if FAST else 1000})
    report("criterion 11 (Cantor construction)", rep.passed,
           f"mis={rep.measured['misclassification']:.4f} "
           f"refined={rep.measured['misclassification_refined']:.4f} "
           f"chord failures={rep.measured['chord_failures']} "
           f"fat measure={rep.measured['fat_crease_measure']:.3f}")


def test_criterion_12_counterexample_family():
    """Thin-cone family x_i at 3^-i with r_i = 3^-i/2: detector-certified
    strong membership at eps = 1/400 at every depth, so the unqualified
    disjoint-ball count grows without bound."""
    host = ConeHost(FlatCone.over_circle(1.0 / 20.0))
    depth = 10
    misses = []
    for i in range(depth + 1):
        x = (3.0 ** -i, 0.1)
        v = strong_singular(host, x, 0, 1.0 / 400.0, 0.5 * 3.0 ** -i)
        if v is not True:
            misses.append((i, v))
    report("criterion 12 (counterexample reproduction)", not misses,
           f"depths 0..{depth}, misses: {misses}")
