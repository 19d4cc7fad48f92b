"""Quantitative singularity detectors: splitting tests, uniform cone tests,
bad scales and the dimension-reduction probes.

Verdicts are three-valued: True / False / None, where None means the net
resolution cannot support the requested quality ("indeterminate").  A None
is never silently collapsed to False; reports carry it through.

Detector calibration constants (the excess threshold eps*r/4, the angle
window eps/2, the band-drift threshold eps*r plus a net-noise floor) are
desk-scale choices documented here and exercised by the oracle-agreement
experiment, which emits the measured detector-vs-angle calibration table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .hosts import BallNet, ConeHost
from .metric import (FiniteMetricSpace, MetricError, Packing, cone_over,
                     cross_section_metric, gh_certificate, greedy_packing,
                     induced_subpacking, packing_number)

EXCESS_FRACTION = 0.25      # strainer excess threshold = eps * r * EXCESS_FRACTION
ANGLE_FRACTION = 0.5        # comparison-angle window = eps * ANGLE_FRACTION
DRIFT_FRACTION = 1.0        # band-drift threshold = eps * r * DRIFT_FRACTION
MIN_BALL_POINTS = 8
DIM3_EPS_FLOOR = 0.1


def deficit_to_detector_eps(deficit: float) -> float:
    """Calibration: a cone vertex of the given angle deficit stops admitting
    1-strainers at detector quality about (deficit/4)^2 (the excess of the
    best pair with legs r/4 is (r/2)(1 - cos(deficit/4)))."""
    return (deficit / 4.0) ** 2


# ---------------------------------------------------------------------------
# Splitting test
# ---------------------------------------------------------------------------

@dataclass
class SplitResult:
    verdict: bool | None
    witness: dict

    def __bool__(self):
        raise TypeError("three-valued verdict; compare explicitly")


def _spread_subset(dist: np.ndarray, idx: np.ndarray, cap: int) -> np.ndarray:
    """Deterministic well-spread subsample by farthest-point insertion."""
    if len(idx) <= cap:
        return idx
    chosen = [0]
    sub = dist[np.ix_(idx, idx)]
    mind = sub[0].copy()
    while len(chosen) < cap:
        j = int(np.argmax(mind))
        chosen.append(j)
        np.minimum(mind, sub[j], out=mind)
    return idx[np.array(sorted(chosen))]


def _band_extent(dist: np.ndarray, u: np.ndarray,
                 members: np.ndarray) -> float | None:
    """Transverse extent of a u-band: the largest pairwise distance with the
    axis component removed."""
    if len(members) < 3:
        return None
    sub = dist[np.ix_(members, members)]
    du = u[members][:, None] - u[members][None, :]
    return float(np.sqrt(np.maximum(sub * sub - du * du, 0.0)).max())


def _drift(dist: np.ndarray, u: np.ndarray, u0: float, r: float) -> float | None:
    """Reflection asymmetry of the transverse band extents along u.

    In a ball of a product line x Z the extent profile is symmetric about
    the center level; a cone collar (wrapped annulus) is monotone instead
    and shows up as a positive drift.  Only the middle bands are compared:
    the rim band's extent is too sensitive to net quantization.
    """
    w = r / 4.0
    worst = None
    for j in (1, 2):
        lo, hi = j * w, (j + 1) * w
        plus = np.where((u - u0 >= lo) & (u - u0 < hi))[0]
        minus = np.where((u0 - u >= lo) & (u0 - u < hi))[0]
        ep = _band_extent(dist, u, plus)
        em = _band_extent(dist, u, minus)
        if ep is None or em is None:
            continue
        val = abs(ep - em)
        worst = val if worst is None else max(worst, val)
    return worst


def splitting_test(ball: BallNet, k: int, eps: float) -> SplitResult:
    """Is the ball (k+1, eps)-splitting, witnessed by a calibrated strainer?

    A (k+1)-strainer of quality eps at the center: pairs (a_i, b_i) with leg
    lengths in [r/4, r], excess d(a,p)+d(p,b)-d(a,b) <= eps*r/4 and pairwise
    comparison angles within eps/2 of a right angle.  Candidate strainers are
    additionally validated for uniformity across the ball (band-drift check
    for codimension, coordinate-residual check in full dimension); a bare
    strainer over-accepts on wrapped cone collars.
    """
    space = ball.space
    p = space.base
    r = ball.radius
    n = len(space)
    if n < MIN_BALL_POINTS:
        return SplitResult(None, {"reason": "ball too sparse", "points": n})
    if k + 1 >= 3:
        if eps < DIM3_EPS_FLOOR:
            return SplitResult(False, {"reason": "dimension cap",
                                       "detail": "2-dimensional host"})
        inner = splitting_test(ball, 1, eps)
        w = dict(inner.witness)
        w["reason"] = "dimension cap with flatness check"
        return SplitResult(inner.verdict, w)

    pi = space.index(p)
    dp = space.dist[pi]
    ann = np.where((dp >= r / 4.0) & (dp <= r * (1 + 1e-12)) & (dp > 0))[0]
    if len(ann) < 2 * (k + 1):
        return SplitResult(None, {"reason": "annulus too sparse",
                                  "points": int(len(ann))})
    cand = _spread_subset(space.dist, ann, 48)
    exc_thresh = eps * r * EXCESS_FRACTION
    margin = ball.margin if ball.margin > 0 else 4.0 * ball.resolution

    da = dp[cand]
    pairmat = da[:, None] + da[None, :] - space.dist[np.ix_(cand, cand)]
    iu = np.triu_indices(len(cand), k=1)
    excesses = pairmat[iu]
    order = np.argsort(excesses, kind="stable")
    best_excess = float(excesses[order[0]]) if len(order) else math.inf

    good_pairs = [(int(cand[iu[0][t]]), int(cand[iu[1][t]]), float(excesses[t]))
                  for t in order if excesses[t] <= exc_thresh]

    if not good_pairs:
        if best_excess <= exc_thresh + margin:
            return SplitResult(None, {"reason": "marginal excess",
                                      "best_excess": best_excess,
                                      "threshold": exc_thresh})
        return SplitResult(False, {"reason": "no strainer",
                                   "best_excess": best_excess,
                                   "threshold": exc_thresh})

    drift_thresh = eps * r * DRIFT_FRACTION + ball.drift_floor

    if k + 1 == 1:
        # uniformity stage: every long balanced low-excess axis must show a
        # reflection-symmetric transverse profile.  On a product ball every
        # such pair is nearly aligned with the line factor and symmetric;
        # a wrapped collar has zero-excess radial axes whose transverse
        # extent grows monotonically with the level, a positive drift.
        long_pairs = [(int(cand[iu[0][t]]), int(cand[iu[1][t]]),
                       float(excesses[t]))
                      for t in order
                      if excesses[t] <= eps * r
                      and da[iu[0][t]] >= 0.7 * r and da[iu[1][t]] >= 0.7 * r]
        if not long_pairs:
            return SplitResult(False, {"reason": "no uniform axis",
                                       "detail": "no long balanced pair with "
                                                 "excess <= eps*r"})
        worst_drift = 0.0
        witness_pair = long_pairs[0]
        for a, b, exc in long_pairs[:40]:
            u = 0.5 * (space.dist[a] - space.dist[b])
            drift = _drift(space.dist, u, u[pi], r)
            if drift is None:
                drift = 0.0
            if drift > worst_drift:
                worst_drift = drift
                witness_pair = (a, b, exc)
        if worst_drift <= drift_thresh:
            a, b, exc = long_pairs[0]     # long axes make better witnesses
            return SplitResult(True, {
                "strainer": [(space.points[a], space.points[b])],
                "excess": exc, "drift": worst_drift})
        if worst_drift <= drift_thresh + 0.5 * ball.drift_floor:
            return SplitResult(None, {"reason": "marginal drift",
                                      "drift": worst_drift,
                                      "threshold": drift_thresh})
        a, b, exc = witness_pair
        return SplitResult(False, {"reason": "strainer fails uniformity",
                                   "drift": worst_drift,
                                   "threshold": drift_thresh,
                                   "pair": (space.points[a], space.points[b])})

    # k + 1 == 2: two near-orthogonal pairs plus a polar-coordinate check
    # (comparison-angle coordinates develop the ball into the plane; the
    # development is an exact isometry precisely on flat balls)
    ang_win = eps * ANGLE_FRACTION
    sample = _spread_subset(space.dist, np.arange(n), 120)
    top = good_pairs[:60]
    best_resid = math.inf
    found_orth = False
    for i1 in range(len(top)):
        a1, b1, e1 = top[i1]
        for i2 in range(i1 + 1, len(top)):
            a2, b2, e2 = top[i2]
            if len({a1, b1, a2, b2}) < 4:
                continue
            if not _orthogonal(space.dist, pi, (a1, b1), (a2, b2), ang_win):
                continue
            found_orth = True
            resid = _polar_residual(space.dist, pi, a1, a2, sample)
            best_resid = min(best_resid, resid)
            if resid <= eps * r + ball.drift_floor:
                return SplitResult(True, {
                    "strainer": [(space.points[a1], space.points[b1]),
                                 (space.points[a2], space.points[b2])],
                    "excess": max(e1, e2), "coord_residual": resid})
    if not found_orth:
        return SplitResult(False, {"reason": "no orthogonal second pair",
                                   "pairs_tried": len(top)})
    if best_resid <= eps * r + ball.drift_floor + margin:
        return SplitResult(None, {"reason": "marginal coordinate residual",
                                  "residual": best_resid})
    return SplitResult(False, {"reason": "coordinate residual too large",
                               "residual": best_resid})


def _polar_residual(dist, pi, a1, a2, sample) -> float:
    """Distortion of the comparison-angle development anchored at two
    near-orthogonal direction points."""
    dp = dist[pi, sample]
    cos1 = np.array([_comparison_cos(dist, pi, a1, y) for y in sample])
    cos2 = np.array([_comparison_cos(dist, pi, a2, y) for y in sample])
    theta = np.arccos(np.clip(cos1, -1.0, 1.0))
    sign = np.where(cos2 >= 0.0, 1.0, -1.0)
    xy = np.stack([dp * np.cos(theta), dp * sign * np.sin(theta)], axis=1)
    model = np.linalg.norm(xy[:, None, :] - xy[None, :, :], axis=2)
    actual = dist[np.ix_(sample, sample)]
    return float(np.abs(actual - model).max())


def _orthogonal(dist, pi, pair1, pair2, window) -> bool:
    for x in pair1:
        for y in pair2:
            c = _comparison_cos(dist, pi, x, y)
            if abs(math.acos(max(-1.0, min(1.0, c))) - math.pi / 2.0) > window:
                return False
    return True


def _comparison_cos(dist, pi, x, y) -> float:
    a, b, c = dist[pi, x], dist[pi, y], dist[x, y]
    if a == 0 or b == 0:
        return 1.0
    return (a * a + b * b - c * c) / (2.0 * a * b)


# ---------------------------------------------------------------------------
# Strong / weak / symmetric membership
# ---------------------------------------------------------------------------

def _not(v):
    return None if v is None else (not v)


def strong_singular(host, p, k: int, eps: float, r: float,
                    prefer_fan: bool = True) -> bool | None:
    """Membership in the r-scale strong singular set: the r-ball at p is not
    (k+1, eps)-splitting."""
    ball = host.ball_net(p, r) if not hasattr(host, "surface") else \
        host.ball_net(p, r, prefer_fan=prefer_fan)
    return _not(splitting_test(ball, k, eps).verdict)


def dyadic_scales(r: float, top: float = 1.0) -> list[float]:
    """Dyadic grid in [r, top]; the scale r itself is included so that the
    weak set is contained in the strong set by construction."""
    out = []
    s = top
    while s >= r * (1 - 1e-12):
        out.append(s)
        s /= 2.0
    return out


def weak_singular(host, p, k: int, eps: float, r: float,
                  top: float = 1.0) -> bool | None:
    """Membership requires non-splitting at every dyadic scale in [r, top]."""
    any_indet = False
    for s in dyadic_scales(r, top):
        v = strong_singular(host, p, k, eps, s)
        if v is False:
            return False
        if v is None:
            any_indet = True
    return None if any_indet else True


SYMMETRY_DELTA = 0.3    # desk calibration for the one-step surrogate


def single_scale_symmetric(host, p, s: float, eps: float,
                           delta: float | None = None,
                           trace_cache: dict | None = None) -> bool | None:
    """(0, eps)-symmetry of B_s(p): one-step surrogate cone test over
    [s/2, s].  The packing parameter defaults to the desk calibration
    SYMMETRY_DELTA, which nets can resolve (the proof-exact eps^10 is
    available as an override)."""
    d = SYMMETRY_DELTA if delta is None else delta
    res = uniform_symmetry_test(host, p, s / 2.0, s, eps, mode="surrogate",
                                delta=d, trace_cache=trace_cache)
    if res.verdict is None:
        return None
    return res.verdict == 0


def symmetric_singular(host, p, k: int, eps: float, r: float,
                       top: float = 1.0,
                       trace_cache: dict | None = None) -> bool | None:
    """Membership in the weak symmetric set: at every dyadic scale the ball
    fails to be (k+1, eps)-symmetric, where symmetry is tested as
    [(k+1)-splitting] AND [single-scale cone structure]."""
    any_indet = False
    for s in dyadic_scales(r, top):
        ball = host.ball_net(p, s)
        sp = splitting_test(ball, k, eps).verdict
        if sp is False:
            continue                      # not symmetric at this scale
        cone_ok = single_scale_symmetric(host, p, s, eps,
                                         trace_cache=trace_cache)
        if sp is True and cone_ok is True:
            return False                  # symmetric at s: not in the set
        if sp is None or cone_ok is None:
            any_indet = True
    return None if any_indet else True


# ---------------------------------------------------------------------------
# Scale traces and the uniform cone test
# ---------------------------------------------------------------------------

@dataclass
class ScaleTrace:
    """Per-point dyadic census backing the surrogate cone test.

    ``packing_numbers[a]`` is P_delta(p, 2^-a * top); ``step_increments[a]``
    is the clipped rescaled-distance increase of the induced subpacking over
    one dyadic step.  Window verdicts are sums over these per-step values,
    which makes window containment exact on the records.
    """

    point: Any
    delta: float
    top_scale: float
    alphas: list
    packing_numbers: list
    packing_exact: list
    step_increments: list
    scale_determinate: list
    meta: dict = field(default_factory=dict)

    def scale(self, alpha: int) -> float:
        return self.top_scale * 2.0 ** (-alpha)

    def window_verdict(self, alpha_coarse: int, alpha_fine: int,
                       delta: float | None = None):
        """T verdict over [2^-alpha_fine, 2^-alpha_coarse] (0, 1 or None)."""
        d = self.delta if delta is None else delta
        idx = list(range(alpha_coarse, alpha_fine + 1))
        if any(not self.scale_determinate[a] for a in idx):
            return None, "indeterminate scale in window"
        ns = {self.packing_numbers[a] for a in idx}
        if len(ns) > 1:
            return 1, "packing number varies"
        inc = sum(self.step_increments[a] for a in range(alpha_coarse, alpha_fine))
        if inc > d:
            return 1, f"distortion {inc:.3e} exceeds {d:.3e}"
        return 0, "uniformly conical"

    def to_json(self) -> dict:
        return {"point": _point_json(self.point), "delta": self.delta,
                "top_scale": self.top_scale, "alphas": list(self.alphas),
                "packing_numbers": list(self.packing_numbers),
                "packing_exact": list(self.packing_exact),
                "step_increments": [float(x) for x in self.step_increments],
                "scale_determinate": list(self.scale_determinate)}


def _point_json(p):
    if isinstance(p, tuple):
        return list(p)
    return p


def compute_scale_trace(host, p, delta: float, alpha_max: int,
                        top_scale: float = 1.0,
                        resolution_fraction: float = 0.5) -> ScaleTrace:
    """Build the dyadic packing / distortion trace at packing parameter delta.

    A scale is determinate when its ball net resolves separations of order
    delta * scale; packings beyond the exact cap fall back to the greedy
    count, flagged in ``packing_exact``.
    """
    alphas = list(range(alpha_max + 1))
    Ns, exact, dets, incs = [], [], [], []
    balls = []
    for a in alphas:
        s = top_scale * 2.0 ** (-a)
        ball = host.ball_net(p, s)
        balls.append(ball)
        det = (len(ball) >= 4 and
               ball.resolution <= resolution_fraction * delta * s)
        dets.append(bool(det))
        if len(ball) == 0:
            Ns.append(0); exact.append(False)
            continue
        n, ex = packing_number(ball.space, delta)
        Ns.append(int(n)); exact.append(bool(ex))
    for a in alphas[:-1]:
        s = top_scale * 2.0 ** (-a)
        ball = balls[a]
        if len(ball) < 2 or not dets[a]:
            incs.append(0.0)
            continue
        pk = greedy_packing(ball.space, delta)
        # the base has no geodesic to itself; its pairs never distort
        centers = tuple(c for c in pk.centers if c != ball.center)
        if len(centers) < 2:
            incs.append(0.0)
            continue
        pk = Packing(pk.host, pk.subset_diam, pk.eps, centers,
                     kind="subpacking")
        geo = host.geodesics(ball)
        ind = induced_subpacking(geo, ball.center, s, s / 2.0, pk)
        incs.append(max(0.0, ind.max_increment))
    return ScaleTrace(p, delta, top_scale, alphas, Ns, exact, incs, dets)


def _trace_for(host, p, delta, alpha_max, top_scale, cache):
    key = (id(host), _key(p), delta, top_scale)
    tr = None if cache is None else cache.get(key)
    if tr is None or len(tr.alphas) < alpha_max + 1:
        tr = compute_scale_trace(host, p, delta, alpha_max, top_scale)
        if cache is not None:
            cache[key] = tr
    return tr


def _key(p):
    return tuple(p) if isinstance(p, (tuple, list)) else p


@dataclass
class ConeTestResult:
    point: Any
    window: tuple
    verdict: int | None           # 0 = uniformly conical, 1 = not certified
    method: str
    reason: str
    trace: dict = field(default_factory=dict)
    certificates: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"point": _point_json(self.point), "window": list(self.window),
                "verdict": self.verdict, "method": self.method,
                "reason": self.reason, "trace": self.trace,
                "certificates": [c.to_json() if hasattr(c, "to_json") else c
                                 for c in self.certificates]}


def window_alphas(r: float, R: float, top: float = 1.0,
                  alpha_cap: int = 40) -> tuple[int, int]:
    """Dyadic indices covering [r, R]: the coarsest scale <= R and the finest
    scale >= r; degenerate windows round outward to a single dyadic step."""
    if not (0 < r <= R <= top * (1 + 1e-12)):
        raise MetricError("need 0 < r <= R <= top scale")
    ac = max(0, int(math.ceil(math.log2(top / R) - 1e-9)))
    af = int(math.floor(math.log2(top / r) + 1e-9))
    if af <= ac:
        af = ac + 1
    return ac, min(af, alpha_cap)


def uniform_symmetry_test(host, p, r: float, R: float, eps: float,
                          mode: str = "surrogate", delta: float | None = None,
                          alpha_max: int | None = None, top_scale: float = 1.0,
                          trace_cache: dict | None = None,
                          eps_pack: float | None = None,
                          radial_levels: int = 6) -> ConeTestResult:
    """T^eps_p(r, R): is one cone eps*s-close to B_s(p) at every s in [r, R]?

    Surrogate mode (default) tests packing-number stability plus induced
    rescaled-distortion growth at packing parameter delta (default the
    proof-exact eps**10; experiments override it, since that exponent is
    proof slack).  Explicit mode builds the cross-section cone at scale R
    and certifies every dyadic scale with a matched-packing GH bound.
    """
    ac, af = window_alphas(r, R, top_scale)
    if mode == "surrogate":
        d = eps ** 10 if delta is None else delta
        tr = _trace_for(host, p, d, af, top_scale, trace_cache)
        verdict, reason = tr.window_verdict(ac, af, d)
        return ConeTestResult(p, (r, R), verdict, "packing-cone-surrogate",
                              reason,
                              trace={"alphas": list(range(ac, af + 1)),
                                     "packing_numbers": tr.packing_numbers[ac:af + 1],
                                     "increments": tr.step_increments[ac:af]})
    if mode != "explicit":
        raise MetricError(f"unknown mode {mode!r}")
    return _explicit_cone_test(host, p, r, R, eps, ac, af, top_scale,
                               eps_pack=eps_pack, radial_levels=radial_levels)


def _explicit_cone_test(host, p, r, R, eps, ac, af, top_scale,
                        eps_pack=None, radial_levels=6) -> ConeTestResult:
    epk = eps / 10.0 if eps_pack is None else eps_pack
    try:
        shell = host.sphere_net(p, R)
    except MetricError as e:
        return ConeTestResult(p, (r, R), None, "explicit-cone-certificate",
                              f"no cross-section net: {e}")
    try:
        sigma = cross_section_metric(shell, R, link=0.25)
    except MetricError as e:
        return ConeTestResult(p, (r, R), None, "explicit-cone-certificate",
                              f"cross-section disconnected: {e}")
    # raw geodesic oracle from p at outer radius R; cross-section points are
    # resolved through the shell's labels (cone hosts) or node ids (meshes)
    if isinstance(host, ConeHost):
        from .surfaces import ConeGeodesics
        geo = ConeGeodesics(host.cone, p, R)

        def shell_point(w):
            return sigma.labels[w]
    else:
        geo = host._geodesics_from(p)

        def shell_point(w):
            return w
    certs = []
    for a in range(ac, af + 1):
        s = top_scale * 2.0 ** (-a)
        ball = host.ball_net(p, s)
        model = cone_over(sigma.rescale(s / R), s, radial_levels=radial_levels)
        pk_model = greedy_packing(model, epk)
        # carry the model packing over to the host along the geodesic family
        matched, host_ids = [], []
        for cid in pk_model.centers:
            if cid == "tip":
                hid = ball.center
            else:
                w, lvl = cid
                t = model.d("tip", cid)
                dw = geo.distance_to_base(shell_point(w))
                if dw is None or dw <= 0 or not np.isfinite(dw):
                    continue
                pos = geo.induce(shell_point(w), t * dw / R)
                hid = _nearest_net_id(host, ball, pos)
            if hid is None or hid in host_ids:
                continue
            host_ids.append(hid)
            matched.append((hid, cid))
        if len(matched) < len(pk_model.centers):
            certs.append({"scale": s, "ok": False,
                          "reason": "image packing collapsed"})
            return ConeTestResult(p, (r, R), 1, "explicit-cone-certificate",
                                  f"certificate failed at scale {s:g}",
                                  certificates=certs)
        sub_model = model.restrict([c for _, c in matched], base="tip")
        sub_host = ball.space.restrict(host_ids, base=ball.center
                                       if ball.center in host_ids else None)
        diam_h = ball.space.diameter()
        seps_h = _min_sep(sub_host)
        pk_host = Packing(ball.space, diam_h,
                          min(1.0, max(seps_h / diam_h, 1e-12)),
                          tuple(host_ids), kind="packing")
        try:
            cert = gh_certificate(ball.space, model, pk_host, pk_model,
                                  [(h, c) for h, c in matched])
        except MetricError as e:
            certs.append({"scale": s, "ok": False, "reason": str(e)})
            return ConeTestResult(p, (r, R), 1, "explicit-cone-certificate",
                                  f"certificate failed at scale {s:g}",
                                  certificates=certs)
        ok = cert.gh_upper_bound <= eps * s
        certs.append({"scale": s, "ok": bool(ok),
                      "bound": cert.gh_upper_bound,
                      "distortion": cert.max_distortion})
        if not ok:
            return ConeTestResult(p, (r, R), 1, "explicit-cone-certificate",
                                  f"bound {cert.gh_upper_bound:.3e} exceeds "
                                  f"{eps * s:.3e} at scale {s:g}",
                                  certificates=certs)
    return ConeTestResult(p, (r, R), 0, "explicit-cone-certificate",
                          "all scales certified", certificates=certs)


def _nearest_net_id(host, ball: BallNet, pos):
    """Snap an induced point back to the nearest ball-net id."""
    space = ball.space
    if isinstance(host, ConeHost):
        best, bid = math.inf, None
        for i in space.points:
            d = host.cone.distance(pos, space.labels[i])
            if d < best:
                best, bid = d, i
        return bid
    # mesh host: pos is (position, faces); net ids are graph nodes
    xyz = np.asarray(pos[0])
    best, bid = math.inf, None
    for i in space.points:
        q = host.graph.positions[i]
        d = float(np.linalg.norm(q - xyz))
        if d < best:
            best, bid = d, i
    return bid


def _min_sep(space: FiniteMetricSpace) -> float:
    n = len(space)
    if n <= 1:
        return space.diameter()
    off = space.dist[~np.eye(n, dtype=bool)]
    return float(off.min())


# ---------------------------------------------------------------------------
# Bad scales
# ---------------------------------------------------------------------------

@dataclass
class BadScaleRecord:
    point: Any
    eps: float
    delta: float
    alpha_max: int
    top_scale: float
    bad_alphas: list
    flagged_alphas: list
    transitions: list
    trace: ScaleTrace

    def bad_scales(self) -> list[float]:
        return [self.trace.scale(a) for a in self.bad_alphas]

    def census(self) -> int:
        return len(self.bad_alphas)

    def to_json(self) -> dict:
        return {"point": _point_json(self.point), "eps": self.eps,
                "delta": self.delta, "alpha_max": self.alpha_max,
                "top_scale": self.top_scale,
                "bad_alphas": list(self.bad_alphas),
                "flagged_alphas": list(self.flagged_alphas),
                "transitions": self.transitions,
                "trace": self.trace.to_json()}


def bad_scales(host, p, eps: float, alpha_max: int = 12,
               delta: float | None = None, top_scale: float = 1.0,
               trace_cache: dict | None = None) -> BadScaleRecord:
    """The dyadic bad-scale recursion driven by the surrogate cone test.

    From the current anchor, either the very next scale already fails the
    window test (it becomes the next bad scale) or the recursion finds the
    last scale for which the window from the anchor still passes.  Windows
    that the net cannot resolve are recorded as flagged, never censused.
    """
    if alpha_max > 20:
        raise MetricError("alpha_max capped at 20 (net-resolution bound)")
    d = eps ** 10 if delta is None else delta
    tr = _trace_for(host, p, d, alpha_max, top_scale, trace_cache)
    bad, flagged, transitions = [], [], []
    cur = 0
    while cur < alpha_max:
        v, reason = tr.window_verdict(cur, cur + 1, d)
        if v is None:
            flagged.append(cur + 1)
            transitions.append({"anchor": cur, "bad": cur + 1,
                                "flagged": True, "reason": reason})
            cur += 1
            continue
        if v == 1:
            nb = cur + 1
            fail_alpha = cur + 1
        else:
            a = cur + 1
            nb = None
            fail_alpha = None
            while a + 1 <= alpha_max:
                v2, reason2 = tr.window_verdict(cur, a + 1, d)
                if v2 is None:
                    flagged.append(a + 1)
                    transitions.append({"anchor": cur, "bad": a + 1,
                                        "flagged": True, "reason": reason2})
                    nb = a + 1
                    fail_alpha = None
                    break
                if v2 == 1:
                    nb = a
                    fail_alpha = a + 1
                    reason = reason2
                    break
                a += 1
            if nb is None:
                break                      # window test passes to the floor
        if fail_alpha is not None:
            n_anchor = tr.packing_numbers[cur]
            n_fail = tr.packing_numbers[fail_alpha]
            cum = sum(tr.step_increments[cur:fail_alpha])
            which = "packing" if n_fail != n_anchor else "distortion"
            transitions.append({"anchor": cur, "bad": nb, "flagged": False,
                                "fired": which, "reason": reason,
                                "packing_anchor": n_anchor,
                                "packing_at_failure": n_fail,
                                "cumulative_increment": float(cum)})
            bad.append(nb)
        cur = nb
    return BadScaleRecord(p, eps, d, alpha_max, top_scale, bad, flagged,
                          transitions, tr)


def bad_free_windows(record: BadScaleRecord) -> list[tuple[int, int]]:
    """Dyadic windows (alpha_coarse, alpha_fine) with fine < coarse shifted by
    at least two steps (r < R/2), no bad or flagged scale strictly inside,
    and all scales determinate."""
    out = []
    marked = set(record.bad_alphas) | set(record.flagged_alphas)
    det = record.trace.scale_determinate
    top = record.alpha_max
    for ac in range(top + 1):
        for af in range(ac + 2, top + 1):
            inside = set(range(ac + 1, af))
            if inside & marked:
                continue
            if not all(det[a] for a in range(ac, af + 1)):
                continue
            out.append((ac, af))
    return out


def good_scale_search(host, p, eps: float, lam: float, R: float,
                      record: BadScaleRecord | None = None,
                      delta: float | None = None, alpha_max: int = 12,
                      trace_cache: dict | None = None):
    """Largest dyadic r_x <= R whose [lam*r_x, r_x] window avoids every bad
    scale; returns (r_x, eta = r_x / R) or (None, None) at resolution floor."""
    if not (0.0 < lam < 0.25):
        raise MetricError("lambda must lie in (0, 1/4)")
    rec = record or bad_scales(host, p, eps, alpha_max=alpha_max, delta=delta,
                               trace_cache=trace_cache)
    marked = [rec.trace.scale(a) for a in rec.bad_alphas + rec.flagged_alphas]
    a0 = max(0, int(math.ceil(math.log2(rec.top_scale / R) - 1e-9)))
    for a in range(a0, rec.alpha_max + 1):
        r_x = rec.trace.scale(a)
        if not any(lam * r_x - 1e-15 <= b <= r_x + 1e-15 for b in marked):
            if rec.trace.scale_determinate[a]:
                return r_x, r_x / R
    return None, None


# ---------------------------------------------------------------------------
# Splitting-map and dimension-reduction probes
# ---------------------------------------------------------------------------

@dataclass
class SplittingMapProbe:
    strainer: list
    gradient_residual: float       # max |<grad u_i, grad u_j> - delta_ij|
    geodesic_residual: float       # max <up_x^y, grad u> + <up_y^x, grad u>
    product_distortion: float
    level_size: int
    samples: int
    passes: dict

    def to_json(self) -> dict:
        return {"strainer": [[_point_json(a), _point_json(b)]
                             for a, b in self.strainer],
                "gradient_residual": self.gradient_residual,
                "geodesic_residual": self.geodesic_residual,
                "product_distortion": self.product_distortion,
                "level_size": self.level_size, "samples": self.samples,
                "passes": self.passes}


def _cone_chart(cone, q):
    """Isometric development chart around q (valid away from the tip)."""
    rq, aq = q

    def chart(y):
        ry, ay = y
        delta = (ay - aq + 0.5 * cone.total_angle) % cone.total_angle \
            - 0.5 * cone.total_angle
        return np.array([ry * math.cos(delta) - rq, ry * math.sin(delta)])

    return chart


def splitting_map_probe(host, ball: BallNet, strainer: list, eps: float,
                        sample_count: int = 40, seed: int = 0,
                        level_band: float | None = None) -> SplittingMapProbe:
    """Estimate the splitting-map conditions for distance-difference maps.

    ``strainer`` holds pairs of raw host points, typically found by the
    splitting test at a scale several times the probe region's radius (the
    component maps u_i = d(a_i, .) - d(a_i, base) behave like coordinates
    only well inside the strainer scale).  Requires an analytic chart, so
    the ball must be cone-backed (flat-cone hosts or vertex-fan balls).
    Gradients come from least-squares fits of first differences over the
    nearest-neighbor stencil; the product-map conclusion is spot-checked
    with a nearest-level projection.
    """
    if not (isinstance(host, ConeHost) or ball.meta.get("kind") == "vertex-fan"):
        raise MetricError("probe requires an analytic (cone-backed) ball")
    cone = host.cone if isinstance(host, ConeHost) else None
    if cone is None:
        from .surfaces import FlatCone
        cone = FlatCone(host.surface.cone_angle(ball.meta["vertex"]))
    space = ball.space
    pi = space.index(space.base)
    pts = {i: space.labels[i] for i in space.points}
    r = ball.radius
    k = len(strainer)
    base_pt = pts[space.base]

    def uvals(i):
        a = strainer[i][0]
        return np.array([cone.distance(a, pts[q]) for q in space.points]) \
            - cone.distance(a, base_pt)

    us = [uvals(i) for i in range(k)]
    rng = np.random.default_rng(seed)
    h = max(ball.resolution, 1e-9)
    candidates = [i for i in range(len(space))
                  if pts[space.points[i]][0] > 3 * h]   # need a chart: skip tip
    rng.shuffle(candidates)

    grad_res = 0.0
    geod_res = 0.0
    grads_at = {}
    used = 0
    for ci in candidates:
        if used >= sample_count:
            break
        q = pts[space.points[ci]]
        chart = _cone_chart(cone, q)
        # small stencil: the nearest few neighbors, to keep the curvature of
        # the distance functions out of the first-difference fit
        row = space.dist[ci]
        order_nb = np.argsort(row, kind="stable")
        nb = [int(j) for j in order_nb if row[j] > 0][:8]
        if len(nb) < 4:
            continue
        X = np.array([chart(pts[space.points[j]]) for j in nb])
        grads = []
        okfit = True
        for i in range(k):
            y = np.array([us[i][j] - us[i][ci] for j in nb])
            sol, res, rank, _ = np.linalg.lstsq(X, y, rcond=None)
            if rank < 2:
                okfit = False
                break
            grads.append(sol)
        if not okfit:
            continue
        used += 1
        grads_at[ci] = (chart, grads)
        for i in range(k):
            for j in range(k):
                tgt = 1.0 if i == j else 0.0
                grad_res = max(grad_res, abs(float(grads[i] @ grads[j]) - tgt))

    sampled = list(grads_at.keys())
    for t in range(min(len(sampled), sample_count)):
        x = sampled[t]
        y = sampled[(t + 1) % len(sampled)]
        if x == y or space.dist[x, y] <= 2 * h:
            continue
        cx, gx = grads_at[x]
        cy, gy = grads_at[y]
        dirx = cx(pts[space.points[y]])
        diry = cy(pts[space.points[x]])
        nx, ny = np.linalg.norm(dirx), np.linalg.norm(diry)
        if nx == 0 or ny == 0:
            continue
        dirx, diry = dirx / nx, diry / ny
        for i in range(k):
            geod_res = max(geod_res,
                           float(dirx @ gx[i]) + float(diry @ gy[i]))

    # product-map conclusion: (u, phi) with phi the nearest-level projection
    band = level_band if level_band is not None else 2.5 * h
    u0 = np.stack(us, axis=1)
    xi = u0[pi]
    level = [i for i in range(len(space))
             if np.linalg.norm(u0[i] - xi) <= band]
    prod_dist = math.inf
    if level:
        level_arr = np.array(level)
        phi = np.array([level_arr[int(np.argmin(space.dist[i, level_arr]))]
                        for i in range(len(space))])
        sample = _spread_subset(space.dist, np.arange(len(space)), 60)
        worst = 0.0
        for ii in range(len(sample)):
            for jj in range(ii + 1, len(sample)):
                x, y = sample[ii], sample[jj]
                model = math.sqrt(float(np.sum((u0[x] - u0[y]) ** 2))
                                  + space.dist[phi[x], phi[y]] ** 2)
                worst = max(worst, abs(space.dist[x, y] - model))
        prod_dist = worst
    passes = {"gradient": grad_res <= eps + 4 * h / max(r, 1e-12),
              "geodesic": geod_res <= eps + 4 * h / max(r, 1e-12),
              "product": prod_dist <= eps * r + 2 * band + ball.drift_floor}
    return SplittingMapProbe(strainer, grad_res, geod_res, prod_dist,
                             len(level), used, passes)


def dimension_reduction_probe(host, x, y, k: int, eps: float,
                              u_values=None, delta: float | None = None,
                              trace_cache: dict | None = None,
                              beta_grid: int = 6) -> dict:
    """Empirical check of the cone-splitting dimension reduction.

    With r = d(x, y): if the window [r, 2r] at x is uniformly conical and
    the map u drops the distance by more than eps*r, balls at y should be
    one-factor-richer splitting; the largest dyadic beta for which the
    detector confirms this is measured and reported.
    """
    r = host.distance(x, y)
    if r <= 0:
        raise MetricError("x and y must be distinct")
    d = eps / 2.0 if delta is None else delta
    t = uniform_symmetry_test(host, x, r, min(2 * r, 1.0), eps,
                              mode="surrogate", delta=d,
                              trace_cache=trace_cache)
    if t.verdict != 0:
        return {"hypothesis": "vacuous",
                "reason": f"cone window not satisfied (verdict {t.verdict})",
                "r": r}
    du = 0.0
    if u_values is not None:
        ux, uy = u_values
        du = float(np.linalg.norm(np.atleast_1d(ux) - np.atleast_1d(uy)))
    drop = r - du
    if drop <= eps * r:
        return {"hypothesis": "not satisfied", "r": r, "drop": drop,
                "contrapositive_ok": abs(du - r) <= eps * r}
    beta_measured = None
    verdicts = []
    for j in range(beta_grid):
        beta = 2.0 ** (-j)
        v = splitting_test(host.ball_net(y, beta * r), k, eps).verdict
        verdicts.append({"beta": beta, "splitting": v})
        if v is True and beta_measured is None:
            beta_measured = beta
    return {"hypothesis": "satisfied", "r": r, "drop": drop,
            "beta_measured": beta_measured, "verdicts": verdicts}


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class SingularityReport:
    host_name: str
    entries: list

    def to_json(self) -> dict:
        return {"host": self.host_name, "entries": self.entries}


def singularity_report(host, points, ks: Sequence[int], epss: Sequence[float],
                       rs: Sequence[float], top: float = 1.0,
                       trace_cache: dict | None = None) -> SingularityReport:
    """Evaluate strong / weak / symmetric membership over a grid.

    The report embeds everything needed to re-verify the definitional
    inclusions offline: weak implies strong at the base scale, and weak
    implies the symmetric-set membership, pointwise.
    """
    cache = {} if trace_cache is None else trace_cache
    entries = []
    for p in points:
        ent = {"point": _point_json(p), "verdicts": []}
        ang = getattr(host, "vertex_angle", lambda _p: None)(p)
        if ang is not None:
            ent["cone_angle"] = ang
        for k in ks:
            for eps in epss:
                for r in rs:
                    strong = strong_singular(host, p, k, eps, r)
                    weak = weak_singular(host, p, k, eps, r, top=top)
                    sym = symmetric_singular(host, p, k, eps, r, top=top,
                                             trace_cache=cache)
                    ent["verdicts"].append(
                        {"k": k, "eps": eps, "r": r,
                         "strong": strong, "weak": weak, "symmetric": sym})
        entries.append(ent)
    return SingularityReport(getattr(host, "name", "host"), entries)
