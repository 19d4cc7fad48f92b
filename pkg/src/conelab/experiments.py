"""Experiment runners: quantitative censuses over the model-space families,
with deterministic JSON reports.

Experiments never assert the theory's existential constants numerically;
they assert the exactly provable bounds (the 4*pi budget, the 4*pi/eps
count, definitional inclusions) and stability of the measured constants
across refinement.  Every verdict is recomputable from the raw records
embedded in the same report.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .constructions import (ConcaveSubgraphSpec, DoubledSpace,
                            angle_singular_count, convexity_check_1d,
                            fat_cantor_arcs, layered_deficit_sum,
                            middle_thirds_arcs, spike_sphere,
                            subgraph_boundary, RHO_CREASE, CLASS_CREASE,
                            CLASS_HALFSPACE)
from .detectors import (bad_scales, deficit_to_detector_eps,
                        singularity_report, strong_singular,
                        symmetric_singular, weak_singular)
from .hosts import ConeHost, MeshHost
from .metric import FiniteMetricSpace
from .surfaces import FlatCone, build_convex_surface, regular_tetrahedron

SCHEMA_VERSION = 1
FOUR_PI = 4.0 * math.pi


# ---------------------------------------------------------------------------
# Canonical reporting
# ---------------------------------------------------------------------------

def canonical_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    pad = " " * indent
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        inner = ",\n".join(f'{pad}  "{k}": {canonical_json(v, indent + 2)}'
                           for k, v in items)
        return "{\n" + inner + "\n" + pad + "}" if items else "{}"
    if isinstance(obj, (list, tuple)):
        inner = ", ".join(canonical_json(v, indent) for v in obj)
        return "[" + inner + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if math.isnan(obj) or math.isinf(obj):
            return json.dumps(str(obj))
        return f"{float(obj):.17g}"
    return json.dumps(str(obj))


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    records: list = field(default_factory=list)
    measured: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    runtime_seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.verdicts.values())

    def payload(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "experiment": self.experiment,
                "config": self.config, "records": self.records,
                "measured": self.measured, "verdicts": self.verdicts,
                "passed": self.passed}

    def to_json(self, with_runtime: bool = False) -> str:
        doc = self.payload()
        if with_runtime:
            doc["runtime_seconds"] = self.runtime_seconds
        return canonical_json(doc)

    def save(self, path: str, with_runtime: bool = False) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json(with_runtime=with_runtime))
            fh.write("\n")

    def failing_records(self) -> list:
        return [k for k, v in self.verdicts.items() if not v]


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        rep = fn(*args, **kwargs)
        rep.runtime_seconds = time.perf_counter() - t0
        return rep
    return wrapper


# ---------------------------------------------------------------------------
# Host builders
# ---------------------------------------------------------------------------

def build_host(spec: str, net_h: float = 0.035, sigma: float = 0.3):
    """Host from a short spec string: 'spike:K', 'cone:RHO', 'cube', 'tetra'."""
    if spec.startswith("spike:"):
        k = int(spec.split(":", 1)[1])
        surf, _ = spike_sphere(k, sigma=sigma)
        return MeshHost(surf, net_h=net_h)
    if spec.startswith("cone:"):
        rho = float(spec.split(":", 1)[1])
        return ConeHost(FlatCone.over_circle(rho))
    if spec == "tetra":
        return MeshHost(build_convex_surface(regular_tetrahedron(1.0)),
                        net_h=net_h)
    if spec == "cube":
        pts = [(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)]
        return MeshHost(build_convex_surface(np.array(pts, float)),
                        net_h=net_h)
    raise ValueError(f"unknown host spec {spec!r}")


def _surfaces_for(config: dict):
    out = [("tetra", build_convex_surface(regular_tetrahedron(1.0)))]
    cube = [(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)]
    out.append(("cube", build_convex_surface(np.array(cube, float))))
    for k in config.get("spike_iterations", range(1, 6)):
        surf, heights = spike_sphere(int(k), sigma=config.get("sigma", 0.3))
        out.append((f"spike:{k}", surf))
    return out


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

@_timed
def run_gauss_bonnet(config: dict | None = None) -> ExperimentReport:
    """Total angle deficit equals 4*pi on every generated convex sphere, and
    the layered deficit sums stay below the 4*pi budget."""
    config = dict(config or {})
    rep = ExperimentReport("gauss-bonnet", config)
    for name, surf in _surfaces_for(config):
        total = surf.total_deficit()
        layered = layered_deficit_sum(surf, levels=config.get("levels", 10))
        rec = {"host": name, "vertices": len(surf.vertices),
               "faces": len(surf.faces), "total_deficit": total,
               "layered_sum": layered}
        rep.records.append(rec)
        rep.verdicts[f"{name}:deficit=4pi"] = abs(total - FOUR_PI) <= 1e-9
        rep.verdicts[f"{name}:layered<=4pi"] = layered <= FOUR_PI + 1e-12
    return rep


@_timed
def run_singular_count(config: dict | None = None) -> ExperimentReport:
    """Angle-oracle singular counts obey count <= 4*pi/eps at every epsilon
    while the complex grows: faces exactly triple per iteration and the
    vertex count at least doubles."""
    config = dict(config or {})
    epss = config.get("eps", [0.2, 0.5, 1.0])
    iters = list(config.get("spike_iterations", range(1, 6)))
    rep = ExperimentReport("singular-count", config)
    prev_counts = None
    for k in iters:
        surf, _ = spike_sphere(int(k), sigma=config.get("sigma", 0.3))
        counts = {}
        for eps in epss:
            c = angle_singular_count(surf, eps)
            counts[eps] = c
            rep.verdicts[f"k={k},eps={eps}:count<=4pi/eps"] = \
                c <= FOUR_PI / eps + 1e-12
        rec = {"k": k, "vertices": len(surf.vertices),
               "faces": len(surf.faces),
               "counts": {str(e): counts[e] for e in epss}}
        rep.records.append(rec)
        if prev_counts is not None:
            rep.verdicts[f"k={k}:faces-triple"] = \
                rec["faces"] == 3 * prev_counts["faces"]
            rep.verdicts[f"k={k}:vertices-grow"] = \
                rec["vertices"] >= 2 * prev_counts["vertices"]
        prev_counts = rec
    rep.verdicts["eps=2pi:no-vertex"] = all(
        angle_singular_count(spike_sphere(k)[0], 2 * math.pi) == 0
        for k in iters[:1])
    return rep


@_timed
def run_packing_sum(config: dict | None = None) -> ExperimentReport:
    """Disjoint-ball counts over detector-certified singular points: stable
    across spike iterations with the scale qualification, unbounded on the
    thin-cone family without it."""
    config = dict(config or {})
    eps = config.get("eps", 0.5)
    beta = config.get("beta", 0.25)
    r = config.get("r", 0.05)
    iters = list(config.get("spike_iterations", [2, 3, 4, 5]))
    rep = ExperimentReport("packing-sum", config)
    counts = []
    for k in iters:
        surf, _ = spike_sphere(int(k), sigma=config.get("sigma", 0.3))
        host = MeshHost(surf, net_h=config.get("net_h", 0.035))
        centers = []
        for v in range(len(surf.vertices)):
            verdict = strong_singular(host, v, 0,
                                      deficit_to_detector_eps(eps), beta * r)
            if verdict is True:
                centers.append(v)
        # greedy Vitali disjointification at uniform radius r
        chosen = []
        for v in centers:
            if all(host.distance(v, w) > 2 * r for w in chosen):
                chosen.append(v)
        counts.append(len(chosen))
        rep.records.append({"host": f"spike:{k}", "eps": eps, "r": r,
                            "beta": beta, "certified": len(centers),
                            "disjoint_count": len(chosen)})
    rep.measured["counts"] = counts
    rep.measured["C"] = max(counts) if counts else 0
    spread = max(counts) - min(counts) if counts else 0
    rep.verdicts["count-stable"] = spread <= max(2, 0.25 * max(counts))
    # counterexample family: no scale qualification, depth-indexed radii
    depth = config.get("counterexample_depth", 10)
    cone = ConeHost(FlatCone.over_circle(1.0 / 20.0))
    member = []
    for i in range(depth + 1):
        xi = (3.0 ** (-i), 0.1)
        ri = 0.5 * 3.0 ** (-i)
        member.append(strong_singular(cone, xi, 0, 1.0 / 400.0, ri) is True)
    rep.records.append({"host": "cone:0.05", "family": "3^-i",
                        "memberships": member})
    rep.measured["counterexample_count"] = int(sum(member))
    rep.verdicts["counterexample-all-singular"] = all(member)
    rep.verdicts["counterexample-count-grows"] = sum(member) == depth + 1
    return rep


@_timed
def run_volume_estimate(config: dict | None = None) -> ExperimentReport:
    """Area of the r-neighborhood of the detected 0-singular set scales like
    r^2 (exponent fitted over dyadic radii, expected >= 1.8)."""
    config = dict(config or {})
    k = config.get("spike_iteration", 4)
    eps = config.get("eps", 0.5)
    radii = config.get("radii", [2.0 ** (-a) for a in range(2, 7)])
    rep = ExperimentReport("volume-estimate", config)
    surf, _ = spike_sphere(int(k), sigma=config.get("sigma", 0.3))
    host = MeshHost(surf, net_h=config.get("net_h", 0.035))
    singular = [v for v in range(len(surf.vertices))
                if 2 * math.pi - surf.cone_angle(v) >= eps]
    # node area weights: each face spreads its area over its nodes
    weights = np.zeros(len(host.graph))
    for fi, nodes in enumerate(host.graph.face_node_lists):
        weights[nodes] += surf.face_areas[fi] / len(nodes)
    gaps = {v: host.vertex_gap(v) for v in singular}
    rows = {v: host.graph.dijkstra([v])[0] for v in singular}
    areas = []
    for r in radii:
        # below the fan clearance the ball around an isolated cone vertex
        # has exact area theta * r^2 / 2; coarser balls use node weights
        fine = [v for v in singular if r <= 0.4 * gaps[v]]
        coarse = [v for v in singular if v not in fine]
        a = sum(0.5 * surf.cone_angle(v) * r * r for v in fine)
        if coarse:
            dmin = np.min([rows[v] for v in coarse], axis=0)
            a += float(weights[dmin <= r].sum())
        areas.append(a)
        rep.records.append({"r": r, "area": a, "fine_vertices": len(fine),
                            "coarse_vertices": len(coarse)})
    if singular and all(a > 0 for a in areas):
        logs = np.log(np.array(areas))
        logr = np.log(np.array(radii))
        slope = float(np.polyfit(logr, logs, 1)[0])
    else:
        slope = float("nan")
    rep.measured["exponent"] = slope
    rep.measured["singular_count"] = len(singular)
    rep.verdicts["exponent>=1.8"] = bool(slope >= 1.8)
    rep.verdicts["exponent<=2.4"] = bool(slope <= 2.4)
    return rep


@_timed
def run_bad_scale_census(config: dict | None = None) -> ExperimentReport:
    """Max bad-scale census over sampled points: stable across spike
    iterations and across the dyadic depth cap; zero at the cone tip."""
    config = dict(config or {})
    eps = config.get("eps", 0.1)
    delta = config.get("delta", 0.3)
    alpha_maxes = config.get("alpha_maxes", [8, 12, 16])
    iters = list(config.get("spike_iterations", [3, 4, 5]))
    n_points = config.get("points", 200)
    seed = config.get("seed", 0)
    rep = ExperimentReport("bad-scale-census", config)
    maxima = {}
    for k in iters:
        surf, _ = spike_sphere(int(k), sigma=config.get("sigma", 0.3))
        host = MeshHost(surf, net_h=config.get("net_h", 0.035))
        pts = host.sample_nodes(n_points, seed=seed)
        cache = {}
        per_alpha = {}
        for am in sorted(alpha_maxes):
            census = []
            for p in pts:
                rec = bad_scales(host, p, eps, alpha_max=am, delta=delta,
                                 trace_cache=cache)
                census.append(rec.census())
            per_alpha[am] = max(census)
            rep.records.append({"host": f"spike:{k}", "alpha_max": am,
                                "max_census": max(census),
                                "mean_census": float(np.mean(census)),
                                "points": len(pts)})
        maxima[k] = per_alpha
    for k, per_alpha in maxima.items():
        vals = list(per_alpha.values())
        rep.verdicts[f"k={k}:alpha-max-invariant"] = max(vals) - min(vals) <= 1
    across = [max(per.values()) for per in maxima.values()]
    if across:
        rep.verdicts["iteration-stable"] = max(across) - min(across) <= 1
    cone = ConeHost(FlatCone.over_circle(1.0 / 20.0))
    tip_rec = bad_scales(cone, (0.0, 0.0), eps, alpha_max=max(alpha_maxes),
                         delta=delta)
    rep.records.append({"host": "cone-tip", "bad": tip_rec.bad_alphas,
                        "flagged": tip_rec.flagged_alphas})
    rep.verdicts["cone-tip-census-zero"] = tip_rec.census() == 0
    rep.measured["maxima"] = {str(k): {str(a): int(v) for a, v in per.items()}
                              for k, per in maxima.items()}
    return rep


@_timed
def run_inclusion_audit(config: dict | None = None) -> ExperimentReport:
    """Definitional inclusions of the singular-set detectors, pointwise, plus
    the measured quality table for the nontrivial direction."""
    config = dict(config or {})
    epss = config.get("eps", [0.05, 0.1, 0.2])
    rs = config.get("r", [2.0 ** (-a) for a in (3, 4, 5)])
    ks = config.get("k", [0])
    rep = ExperimentReport("inclusion-audit", config)
    host = ConeHost(FlatCone.over_circle(config.get("rho", 1.0 / 20.0)))
    rng = np.random.default_rng(config.get("seed", 0))
    pts = [(0.0, 0.0)]
    for _ in range(config.get("points", 12) - 1):
        pts.append((float(rng.uniform(0.05, 1.0)),
                    float(rng.uniform(0, host.cone.total_angle))))
    report = singularity_report(host, pts, ks, epss, rs)
    weak_in_strong = strong_in_weak_delta = 0
    exceptions = []
    determinate = 0
    for ent in report.entries:
        for v in ent["verdicts"]:
            s, w, sym = v["strong"], v["weak"], v["symmetric"]
            if w is True and s is not None:
                determinate += 1
                if s is not True:
                    exceptions.append(("weak-not-strong", ent["point"], v))
            if w is True and sym is not None:
                if sym is not True:
                    exceptions.append(("weak-not-symmetric", ent["point"], v))
            rep.records.append({"point": ent["point"], **{kk: vv for kk, vv
                                in v.items()}})
    rep.verdicts["weak-subset-strong"] = not any(
        e[0] == "weak-not-strong" for e in exceptions)
    rep.verdicts["weak-subset-symmetric"] = not any(
        e[0] == "weak-not-symmetric" for e in exceptions)
    rep.measured["exceptions"] = [e[0] for e in exceptions]
    # measured delta(eps): largest delta <= eps with strong(eps) within
    # weak(delta) on the grid, scanned downward per eps
    table = {}
    for eps in epss:
        best = None
        for frac in (1.0, 0.5, 0.25, 0.125):
            delta = eps * frac
            ok = True
            for ent, p in zip(report.entries, pts):
                for v in ent["verdicts"]:
                    if v["eps"] != eps:
                        continue
                    if v["strong"] is True:
                        wd = weak_singular(host, p, v["k"], delta, v["r"])
                        if wd is False:
                            ok = False
                            break
                if not ok:
                    break
            if ok:
                best = delta
                break
        table[str(eps)] = best
    rep.measured["delta_of_eps"] = table
    vals = [v for v in table.values() if v is not None]
    rep.verdicts["delta-table-populated"] = len(vals) == len(epss)
    rep.verdicts["delta-monotone"] = all(a <= b + 1e-12 for a, b in
                                         zip(vals, vals[1:]))
    return rep


@_timed
def run_cantor_verification(config: dict | None = None) -> ExperimentReport:
    """The crease-set construction: classification matches the prescribed
    closed set, smoothing is convex-certified, fat input keeps measure."""
    config = dict(config or {})
    gen = config.get("generation", 4)
    delta = config.get("delta", 0.5)
    n_chords = config.get("chords", 1000)
    n_samples = config.get("boundary_samples", 720)
    seed = config.get("seed", 0)
    rep = ExperimentReport("cantor-verification", config)

    spec = ConcaveSubgraphSpec(delta=delta, arcs=middle_thirds_arcs(gen),
                               state="f1")
    _, cls = subgraph_boundary(spec, n_samples=n_samples)
    mis = cls.misclassification_rate()
    rep.measured["misclassification"] = mis
    rep.verdicts["misclassification<1%"] = mis < 0.01
    half = [s for s in cls.samples if not s["over_T"]]
    ok_half = sum(1 for s in half if s["class"] == CLASS_HALFSPACE)
    rep.measured["smoothed_halfspace_fraction"] = ok_half / max(len(half), 1)
    crease = [s for s in cls.samples if s["over_T"]]
    ok_crease = sum(1 for s in crease if s["class"] == CLASS_CREASE)
    rep.verdicts["T-points-crease"] = ok_crease == len(crease)
    # refinement step: double the sampling, compare
    _, cls2 = subgraph_boundary(spec, n_samples=2 * n_samples)
    mis2 = cls2.misclassification_rate()
    rep.measured["misclassification_refined"] = mis2
    rep.verdicts["refined-misclassification<1%"] = mis2 < 0.01

    # chord convexity of the smoothed profile (convex side)
    rng = np.random.default_rng(seed)
    fails = 0
    for _ in range(n_chords):
        ang = rng.uniform(0, 2 * math.pi, size=2)
        rad = np.sqrt(rng.uniform(0, 1, size=2))
        a = rad[0] * np.array([math.cos(ang[0]), math.sin(ang[0])])
        b = rad[1] * np.array([math.cos(ang[1]), math.sin(ang[1])])
        ts = np.linspace(0.0, 1.0, config.get("chord_samples", 120))
        vals = []
        for t in ts:
            z = a + t * (b - a)
            vals.append(-spec.smoothed.value_cartesian(z[0], z[1]))
        ok, _w = convexity_check_1d(vals, ts=ts,
                                    tol=config.get("chord_tol", 1e-9))
        fails += (not ok)
    rep.measured["chord_failures"] = fails
    rep.verdicts["chords-convex"] = fails == 0

    # fat Cantor input keeps positive crease measure
    fat = ConcaveSubgraphSpec(delta=delta, arcs=fat_cantor_arcs(gen),
                              state="f1")
    _, fat_cls = subgraph_boundary(fat, n_samples=n_samples)
    measure = fat_cls.crease_measure()
    removed = sum(b - a for a, b in fat.arcs)
    expected = (2 * math.pi - removed) * RHO_CREASE
    rep.measured["fat_crease_measure"] = measure
    rep.measured["fat_expected_measure"] = expected
    rep.verdicts["fat-measure-positive"] = measure > 0.5 * expected > 0

    # degenerate inputs: full circle kept, and nothing kept
    full = ConcaveSubgraphSpec(delta=delta, arcs=[], state="f1")
    _, full_cls = subgraph_boundary(full, n_samples=180)
    rep.verdicts["full-T-all-crease"] = all(
        s["class"] == CLASS_CREASE for s in full_cls.samples)
    empty = ConcaveSubgraphSpec(delta=delta,
                                arcs=[(0.0, math.pi), (math.pi, 2 * math.pi)],
                                state="f1")
    _, empty_cls = subgraph_boundary(empty, n_samples=180)
    crease_left = sum(1 for s in empty_cls.samples
                      if s["class"] == CLASS_CREASE)
    rep.measured["two-halfcircle-crease-samples"] = crease_left
    rep.verdicts["near-empty-T-no-crease"] = crease_left <= 4
    return rep


EXPERIMENTS = {
    "gauss-bonnet": run_gauss_bonnet,
    "singular-count": run_singular_count,
    "packing-sum": run_packing_sum,
    "volume": run_volume_estimate,
    "bad-scale-census": run_bad_scale_census,
    "inclusion-audit": run_inclusion_audit,
    "cantor": run_cantor_verification,
}


def run_experiment(name: str, config: dict | None = None) -> ExperimentReport:
    if name not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {name!r}; "
                       f"available: {sorted(EXPERIMENTS)}")
    return EXPERIMENTS[name](config)
