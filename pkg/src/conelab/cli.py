"""Command-line interface: generate model surfaces, analyze singular
structure, verify exact invariants and run the experiment suite.

Exit codes: 0 on success, 1 on verification failure (failing record names on
stderr), 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .constructions import (ConcaveSubgraphSpec, middle_thirds_arcs,
                            spike_sphere, fat_cantor_arcs, _subgraph_mesh)
from .detectors import (bad_scales, deficit_to_detector_eps, strong_singular,
                        weak_singular)
from .experiments import (EXPERIMENTS, ExperimentReport, build_host,
                          canonical_json, run_experiment)
from .hosts import ConeHost, MeshHost
from .metric import greedy_packing, packing_number
from .surfaces import (FlatCone, PolySurface, SurfaceError,
                       build_convex_surface, load_obj, meshed_cone, save_obj)

USAGE_ERROR = 2
VERIFY_ERROR = 1


def _fail_usage(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return USAGE_ERROR


def _write_report(report: ExperimentReport, path: str | None,
                  with_runtime: bool) -> None:
    text = report.to_json(with_runtime=with_runtime)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_mesh_or_host(args):
    if getattr(args, "mesh", None):
        return MeshHost(load_obj(args.mesh), net_h=args.net_h)
    if getattr(args, "host", None):
        return build_host(args.host, net_h=args.net_h)
    raise SurfaceError("need --mesh or --host")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.what == "spike":
        surf, heights = spike_sphere(args.iters, sigma=args.sigma,
                                     seed=args.seed,
                                     randomize=args.seed is not None)
        save_obj(surf, args.out)
        stats = surf.stats_report()
        stats["max_apex_heights"] = heights
    elif args.what == "cone":
        surf = meshed_cone(args.angle, n_seg=args.segments)
        save_obj(surf, args.out)
        stats = surf.stats_report()
    elif args.what == "subgraph":
        arcs = middle_thirds_arcs(args.cantor_gen) if args.arcs_file is None \
            else [tuple(a) for a in json.load(open(args.arcs_file))]
        if args.fat:
            arcs = fat_cantor_arcs(args.cantor_gen)
        spec = ConcaveSubgraphSpec(delta=args.delta, arcs=arcs,
                                   state=args.state)
        verts, faces = _subgraph_mesh(spec)
        with open(args.out, "w") as fh:
            for v in verts:
                fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
            for f in faces:
                fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")
        stats = {"spec": spec.to_json(), "vertices": len(verts),
                 "faces": len(faces)}
    else:
        return _fail_usage(f"unknown generator {args.what!r}")
    if args.stats:
        with open(args.stats, "w") as fh:
            fh.write(canonical_json(stats) + "\n")
    print(f"wrote {args.out}")
    return 0


def cmd_analyze(args) -> int:
    host = _load_mesh_or_host(args)
    records = []
    if args.what == "singular":
        points = host.vertex_like_points()
        for p in points:
            ang = host.vertex_angle(p)
            verdict = strong_singular(host, p, args.k, args.eps, args.r)
            records.append({"point": str(p), "cone_angle": ang,
                            "deficit": None if ang is None
                            else 2 * math.pi - ang,
                            "strong_singular": verdict})
        doc = {"analysis": "singular", "eps": args.eps, "r": args.r,
               "k": args.k, "records": records}
    elif args.what == "bad-scales":
        rng = np.random.default_rng(args.seed)
        if isinstance(host, ConeHost):
            pts = [(0.0, 0.0)] + [
                (float(rng.uniform(0.05, 1.0)),
                 float(rng.uniform(0, host.cone.total_angle)))
                for _ in range(max(0, args.points - 1))]
        else:
            pts = host.sample_nodes(args.points, seed=args.seed)
        cache = {}
        for p in pts:
            rec = bad_scales(host, p, args.eps, alpha_max=args.alpha_max,
                             delta=args.delta, trace_cache=cache)
            records.append(rec.to_json())
        doc = {"analysis": "bad-scales", "eps": args.eps, "delta": args.delta,
               "alpha_max": args.alpha_max, "records": records}
    elif args.what == "packings":
        if isinstance(host, ConeHost):
            p = (0.0, 0.0)
        else:
            p = 0
        for a in range(args.alpha_max + 1):
            s = 2.0 ** (-a)
            ball = host.ball_net(p, s)
            n, exact = packing_number(ball.space, args.eps)
            records.append({"scale": s, "points": len(ball),
                            "packing_number": n, "exact": exact})
        doc = {"analysis": "packings", "eps": args.eps, "records": records}
    else:
        return _fail_usage(f"unknown analysis {args.what!r}")
    text = canonical_json(doc)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_verify(args) -> int:
    failures = []
    if args.what == "gauss-bonnet":
        surf = load_obj(args.mesh) if args.mesh else spike_sphere(3)[0]
        defect = abs(surf.total_deficit() - 4 * math.pi)
        if defect > 1e-9:
            failures.append(f"gauss-bonnet defect {defect:.3e}")
        print(f"total deficit defect: {defect:.3e}")
    elif args.what == "inclusions":
        rep = run_experiment("inclusion-audit", {"points": args.points,
                                                 "seed": args.seed})
        failures = rep.failing_records()
        print(f"inclusion audit verdicts: {rep.verdicts}")
    elif args.what == "oracle-agreement":
        host = _load_mesh_or_host(args)
        if not isinstance(host, MeshHost):
            return _fail_usage("oracle-agreement needs a mesh host")
        surf = host.surface
        r = 0.1 * surf.min_vertex_separation()
        agree = tot = 0
        for v in range(len(surf.vertices)):
            deficit = 2 * math.pi - surf.cone_angle(v)
            det = strong_singular(host, v, 0,
                                  deficit_to_detector_eps(args.eps), r)
            if det is None:
                continue
            tot += 1
            agree += (det == (deficit >= args.eps))
        frac = agree / max(tot, 1)
        print(f"agreement {agree}/{tot} = {frac:.3f}")
        if frac < 0.95:
            failures.append(f"agreement {frac:.3f} below 0.95")
    else:
        return _fail_usage(f"unknown verification {args.what!r}")
    if failures:
        for f in failures:
            print(f"FAIL {f}", file=sys.stderr)
        return VERIFY_ERROR
    return 0


def cmd_run(args) -> int:
    config = {}
    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)
    if args.seed is not None:
        config["seed"] = args.seed
    if args.eps is not None:
        config["eps"] = args.eps
    if args.points is not None:
        config["points"] = args.points
    try:
        rep = run_experiment(args.experiment, config)
    except KeyError as e:
        return _fail_usage(str(e))
    _write_report(rep, args.report, with_runtime=args.timings)
    if not rep.passed:
        for f in rep.failing_records():
            print(f"FAIL {f}", file=sys.stderr)
        return VERIFY_ERROR
    return 0


def cmd_export(args) -> int:
    surf = load_obj(args.mesh)
    host = MeshHost(surf, net_h=args.net_h)
    sidecar = {}
    r = args.r if args.r else 0.1 * surf.min_vertex_separation()
    for v in range(len(surf.vertices)):
        theta = surf.cone_angle(v)
        sidecar[str(v)] = {
            "cone_angle": theta,
            "deficit": 2 * math.pi - theta,
            "strong_singular": strong_singular(host, v, args.k, args.eps, r)}
    save_obj(surf, args.out)
    with open(args.out + ".annotations.json", "w") as fh:
        fh.write(canonical_json({"eps": args.eps, "r": r, "k": args.k,
                                 "vertices": sidecar}) + "\n")
    print(f"wrote {args.out} and {args.out}.annotations.json")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conelab",
                                 description="packings, cone tests and "
                                             "singular-set detectors on "
                                             "model surfaces")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a model surface")
    g.add_argument("what", choices=["spike", "cone", "subgraph"])
    g.add_argument("--iters", type=int, default=3)
    g.add_argument("--sigma", type=float, default=0.3)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--angle", type=float, default=math.pi / 2)
    g.add_argument("--segments", type=int, default=64)
    g.add_argument("--delta", type=float, default=0.5)
    g.add_argument("--cantor-gen", type=int, default=4)
    g.add_argument("--fat", action="store_true")
    g.add_argument("--arcs-file", default=None)
    g.add_argument("--state", default="f1", choices=["f0", "f1", "f2"])
    g.add_argument("--out", required=True)
    g.add_argument("--stats", default=None)
    g.set_defaults(fn=cmd_gen)

    a = sub.add_parser("analyze", help="run a detector analysis")
    a.add_argument("what", choices=["singular", "bad-scales", "packings"])
    a.add_argument("--mesh", default=None)
    a.add_argument("--host", default=None)
    a.add_argument("--net-h", type=float, default=0.035, dest="net_h")
    a.add_argument("--eps", type=float, default=0.1)
    a.add_argument("--delta", type=float, default=0.3)
    a.add_argument("--r", type=float, default=0.05)
    a.add_argument("--k", type=int, default=0)
    a.add_argument("--alpha-max", type=int, default=12, dest="alpha_max")
    a.add_argument("--points", type=int, default=20)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--mode", default="surrogate",
                   choices=["surrogate", "explicit"])
    a.add_argument("--report", default=None)
    a.set_defaults(fn=cmd_analyze)

    v = sub.add_parser("verify", help="verify exact invariants")
    v.add_argument("what", choices=["gauss-bonnet", "inclusions",
                                    "oracle-agreement"])
    v.add_argument("--mesh", default=None)
    v.add_argument("--host", default=None)
    v.add_argument("--net-h", type=float, default=0.035, dest="net_h")
    v.add_argument("--eps", type=float, default=0.5)
    v.add_argument("--points", type=int, default=8)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(fn=cmd_verify)

    r = sub.add_parser("run", help="run an experiment by id")
    r.add_argument("experiment", choices=sorted(EXPERIMENTS))
    r.add_argument("--config", default=None)
    r.add_argument("--report", default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--eps", type=float, default=None)
    r.add_argument("--points", type=int, default=None)
    r.add_argument("--timings", action="store_true",
                   help="include runtime in the report (breaks byte-for-byte "
                        "determinism)")
    r.set_defaults(fn=cmd_run)

    e = sub.add_parser("export", help="annotated mesh export")
    e.add_argument("--mesh", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--net-h", type=float, default=0.035, dest="net_h")
    e.add_argument("--eps", type=float, default=0.5)
    e.add_argument("--r", type=float, default=None)
    e.add_argument("--k", type=int, default=0)
    e.set_defaults(fn=cmd_export)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (SurfaceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
