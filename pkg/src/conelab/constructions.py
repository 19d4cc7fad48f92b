"""Generators for the model examples: iterated-spike convex spheres, the
concave-subgraph construction with a prescribed crease set on a circle, and
the certified convex-gluing smoothing machinery.

The smoothing is fully analytic: the radial profile is a minimum of two
smooth concave branches, the crease is the branch crossing, and each sector
replaces the hinge by a parabolic blend whose width profile follows the
exponential envelope near the sector edges.  Concavity is preserved with an
explicit margin (the width profile's curvature is capped against the base
profile's concavity) and re-certified numerically by the chord test.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .surfaces import PolySurface, SurfaceError, build_convex_surface, \
    regular_tetrahedron

RHO_CREASE = 0.75
TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Iterated spike spheres
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpikeParams:
    """Apex-height policy for one spike iteration.

    Heights are sigma times the largest value keeping each apex strictly
    beneath every other face plane; with ``randomize`` they are additionally
    scaled by seeded uniforms in [1/2, 1].
    """
    sigma: float = 0.3
    seed: int | None = None
    randomize: bool = False

    def __post_init__(self):
        if not (0.0 < self.sigma < 1.0):
            raise SurfaceError("sigma must lie in (0, 1)")


@dataclass
class SpikeResult:
    surface: PolySurface
    heights: np.ndarray
    max_height: float


def spike_iterate(surface: PolySurface, params: SpikeParams) -> SpikeResult:
    """One spike iteration: an apex over each face centroid, then re-hull.

    The output is verified to have exactly three sub-faces per input face
    and one new vertex per input face; if simultaneous apex placement breaks
    that structure the heights are halved and the step retried.
    """
    v = surface.vertices
    f = surface.faces
    p0, p1, p2 = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    normals = np.cross(p1 - p0, p2 - p0)
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    offsets = np.einsum("ij,ij->i", normals, p0)
    centroids = (p0 + p1 + p2) / 3.0
    nf = len(f)
    # plane-slack bound: largest height keeping the apex strictly beneath
    # every other face plane; unbounded when no other normal points the same
    # way (the tetrahedron), so it is capped by the face's own edge scale
    edge_min = np.minimum(np.minimum(np.linalg.norm(p1 - p0, axis=1),
                                     np.linalg.norm(p2 - p1, axis=1)),
                          np.linalg.norm(p0 - p2, axis=1))
    h_max = edge_min / 2.0
    for i in range(nf):
        dots = normals @ normals[i]
        slack = offsets - normals @ centroids[i]
        mask = (dots > 1e-12) & (np.arange(nf) != i)
        if mask.any():
            h_max[i] = min(h_max[i], np.min(slack[mask] / dots[mask]))
    if np.any(h_max <= 1e-12):
        raise SurfaceError("face too sliver-like: no convexity-preserving "
                           "apex height")
    scale = np.ones(nf)
    if params.randomize:
        rng = np.random.default_rng(params.seed)
        scale = rng.uniform(0.5, 1.0, size=nf)
    heights = params.sigma * h_max * scale
    for attempt in range(5):
        apexes = centroids + heights[:, None] * normals
        new = build_convex_surface(np.vstack([v, apexes]))
        if (len(new.faces) == 3 * nf
                and len(new.vertices) == len(v) + nf):
            return SpikeResult(new, heights, float(heights.max()))
        heights = heights / 2.0
    raise SurfaceError("spike iteration failed to preserve the face structure")


def spike_sphere(iterations: int, sigma: float = 0.3, seed: int | None = None,
                 randomize: bool = False, edge: float = 1.0):
    """The iterated-spike convex sphere family; iteration 1 is the regular
    tetrahedron, iteration k has 4 * 3^(k-1) faces.

    Returns (surface, per-iteration max apex heights).
    """
    if iterations < 1:
        raise SurfaceError("iterations must be >= 1")
    surf = build_convex_surface(regular_tetrahedron(edge))
    max_heights = []
    for k in range(iterations - 1):
        res = spike_iterate(surf, SpikeParams(sigma=sigma, seed=None if seed is None
                                              else seed + k,
                                              randomize=randomize))
        surf = res.surface
        max_heights.append(res.max_height)
    return surf, max_heights


def angle_singular_count(surface: PolySurface, eps: float) -> int:
    """Angle-oracle count of eps-singular vertices: theta <= 2*pi - eps."""
    return int(np.sum(surface.cone_angles <= TWO_PI - eps + 1e-15))


def layered_deficit_sum(surface: PolySurface, levels: int = 10) -> float:
    """Sum over i of eps_{i+1} * |layer_i| with eps_i = 2^-i, where layer_i
    collects vertices whose deficit lies in (eps_{i+1}, eps_i]."""
    deficits = surface.deficits()
    total = 0.0
    for i in range(levels + 1):
        hi = 2.0 ** (-i)
        lo = 2.0 ** (-(i + 1))
        count = int(np.sum((deficits > lo) & (deficits <= hi)))
        total += lo * count
    return total


# ---------------------------------------------------------------------------
# Arc families on the crease circle
# ---------------------------------------------------------------------------

def middle_thirds_arcs(generation: int) -> list[tuple]:
    """Open arcs removed by the middle-thirds construction on [0, 2*pi];
    generation g yields 2^g - 1 arcs and 2^g closed arcs of T."""
    if generation < 1:
        return []
    arcs = []
    intervals = [(0.0, TWO_PI)]
    for _ in range(generation):
        nxt = []
        for a, b in intervals:
            third = (b - a) / 3.0
            arcs.append((a + third, b - third))
            nxt.append((a, a + third))
            nxt.append((b - third, b))
        intervals = nxt
    return sorted(arcs)


def fat_cantor_arcs(generation: int, removed_fraction: float = 0.5) -> list[tuple]:
    """Fat (positive-measure) Cantor complement: at step n remove middle arcs
    whose total length is removed_fraction * 2^-n of the circle."""
    arcs = []
    intervals = [(0.0, TWO_PI)]
    for n in range(1, generation + 1):
        cut_total = removed_fraction * TWO_PI * 2.0 ** (-n)
        cut = cut_total / len(intervals)
        nxt = []
        for a, b in intervals:
            mid = 0.5 * (a + b)
            half = min(cut / 2.0, (b - a) / 4.0)
            arcs.append((mid - half, mid + half))
            nxt.append((a, mid - half))
            nxt.append((mid + half, b))
        intervals = nxt
    return sorted(arcs)


@dataclass(frozen=True)
class Sector:
    theta_l: float
    theta_r: float

    @property
    def width(self) -> float:
        return self.theta_r - self.theta_l

    def contains(self, theta: float) -> bool:
        t = (theta - self.theta_l) % TWO_PI
        return 0.0 < t < self.width


def sector_decomposition(arcs: list[tuple]) -> list[Sector]:
    """Disjoint open radial sectors corresponding to the open arcs.

    Arcs of angular width at least pi are split in half first (a sector must
    be convex); a full-circle arc is rejected outright.
    """
    checked = []
    for a, b in arcs:
        if b <= a:
            raise SurfaceError(f"empty or reversed arc ({a}, {b})")
        if b - a >= TWO_PI - 1e-12:
            raise SurfaceError("full-circle sector is not convex; "
                               "split the input arc")
        checked.append((a, b))
    checked.sort()
    for (a1, b1), (a2, b2) in zip(checked, checked[1:]):
        if a2 < b1 - 1e-15:
            raise SurfaceError(f"overlapping arcs ({a1},{b1}) and ({a2},{b2})")
    if checked and checked[-1][1] - TWO_PI > checked[0][0] + 1e-15:
        raise SurfaceError("overlapping arcs across the wrap point")
    out = []
    stack = list(checked)
    while stack:
        a, b = stack.pop(0)
        if b - a >= math.pi:
            mid = 0.5 * (a + b)
            stack = [(a, mid), (mid, b)] + stack
            continue
        out.append(Sector(a % TWO_PI, ((b - a) + a % TWO_PI)))
    return sorted(out, key=lambda s: s.theta_l)


def sector_of(sectors: list[Sector], theta: float) -> int | None:
    for i, s in enumerate(sectors):
        if s.contains(theta):
            return i
    return None


# ---------------------------------------------------------------------------
# Radial profile and smoothing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    """The two-branch concave profile over the unit disk.

    value(rho) = sqrt(1 - rho) close to the boundary, and the delta-damped
    branch inside; the branches cross at rho = 3/4 with matching value 1/2,
    producing the circular crease.  Globally the profile is the minimum of
    the two smooth concave branches.
    """
    delta: float

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise SurfaceError("profile delta must lie in (0, 1)")

    def g_outer(self, rho):
        return np.sqrt(np.maximum(1.0 - rho, 0.0))

    def g_inner(self, rho):
        return self.delta * np.sqrt(np.maximum(1.0 - rho, 0.0)) \
            + (1.0 - self.delta) / 2.0

    def psi(self, tau):
        """Convex hinge amplitude: (g_inner - g_outer)(rho_crease + tau)."""
        tau = np.minimum(np.maximum(tau, 0.0), 0.25)
        return (1.0 - self.delta) * (0.5 - np.sqrt(0.25 - tau))

    def value(self, rho):
        rho = np.asarray(rho, dtype=float)
        return np.minimum(self.g_outer(rho), self.g_inner(rho))

    @property
    def tip_value(self) -> float:
        return (1.0 + self.delta) / 2.0

    @property
    def crease_slope_jump(self) -> float:
        """Radial slope drop across the crease: 1 - delta in magnitude."""
        return 1.0 - self.delta


def concave_profile(delta: float) -> RadialProfile:
    return RadialProfile(delta)


def _hinge(t, w):
    """Parabolic blend of max(0, t): equals 0 for t <= -w, t for t >= w,
    and (t+w)^2/(4w) in between.  Exceeds max(0, t) by at most w/4."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    out = np.maximum(t, 0.0)
    band = (np.abs(t) < w) & (w > 0)
    if np.any(band):
        tb = t[band] if t.ndim else t
        wb = w[band] if w.ndim else w
        val = (tb + wb) ** 2 / (4.0 * wb)
        if out.ndim:
            out[band] = val
        else:
            out = val
    return out


@dataclass
class SectorSmoothing:
    """Width profile of the crease blend inside one sector.

    Near each radial edge the width follows the envelope exp(-delta_env/d);
    it exits the envelope at W1, flattens quadratically at curvature at most
    w2cap (the concavity budget) and plateaus.  Sectors too narrow to fit
    the flattening at any exit level are left unsmoothed and flagged.
    """
    sector: Sector
    delta_env: float
    w2cap: float
    W1: float = 0.0
    d1: float = 0.0
    V: float = 0.0
    plateau: float = 0.0
    smoothable: bool = True

    @classmethod
    def solve(cls, sector: Sector, delta_env: float, w2cap: float,
              W1_target: float = 1e-6) -> "SectorSmoothing":
        A = RHO_CREASE * math.sin(min(sector.width / 2.0, math.pi / 2.0)) / 1.02
        for j in range(14):
            W1 = W1_target * 10.0 ** (-j)
            L = math.log(1.0 / W1)
            d1 = delta_env / L
            V = W1 * L * L / delta_env
            span = V / w2cap
            if d1 + span <= 0.8 * A:
                plateau = W1 + V * V / (2.0 * w2cap)
                return cls(sector, delta_env, w2cap, W1, d1, V, plateau, True)
        return cls(sector, delta_env, w2cap, smoothable=False)

    def edge_distance(self, theta: float) -> float:
        """Conservative distance from the crease point at angle theta to the
        sector's complement (radial edge rays)."""
        s = self.sector
        t = (theta - s.theta_l) % TWO_PI
        if not (0.0 < t < s.width):
            return 0.0
        beta = min(t, s.width - t)
        return RHO_CREASE * math.sin(min(beta, math.pi / 2.0)) / 1.02

    def width(self, theta: float) -> float:
        d = self.edge_distance(theta)
        if d <= 0.0 or not self.smoothable:
            return 0.0
        if d <= self.d1:
            return math.exp(-self.delta_env / d)
        x = d - self.d1
        span = self.V / self.w2cap
        if x <= span:
            return self.W1 + self.V * x - 0.5 * self.w2cap * x * x
        return self.plateau


class SmoothedProfile:
    """Profile after sector smoothing (state f1) and optionally the tip cap
    (state f2): value(rho, theta) with the hinge blended at width w(theta).
    """

    def __init__(self, base: RadialProfile, smoothings: list[SectorSmoothing],
                 tip_cap_rho: float | None = None):
        self.base = base
        self.smoothings = smoothings
        self.tip_cap_rho = tip_cap_rho
        if tip_cap_rho is not None:
            rc = tip_cap_rho
            g = base.g_inner
            # quadratic cap matching value and slope at rho_c, flat at 0
            slope = float((g(rc + 1e-7) - g(rc - 1e-7)) / 2e-7)
            self._cap_b = -slope / (2.0 * rc)
            self._cap_a = float(g(rc)) + self._cap_b * rc * rc

    def width(self, theta: float) -> float:
        for sm in self.smoothings:
            if sm.sector.contains(theta % TWO_PI):
                return sm.width(theta % TWO_PI)
        return 0.0

    def value(self, rho: float, theta: float) -> float:
        w = self.width(theta)
        t = rho - RHO_CREASE
        if w > 0.0 and abs(t) < w:
            val = float(self.base.g_inner(rho) - self.base.psi(_hinge(t, w)))
        else:
            # off the blend lens the profile is bit-exactly the raw one
            val = float(self.base.value(rho))
        if self.tip_cap_rho is not None and rho < self.tip_cap_rho:
            val = self._cap_a - self._cap_b * rho * rho
        return val

    def value_cartesian(self, x: float, y: float) -> float:
        return self.value(math.hypot(x, y), math.atan2(y, x) % TWO_PI)

    def deviation(self, rho: float, theta: float) -> float:
        return abs(self.value(rho, theta) - float(self.base.value(rho)))

    def envelope(self, rho: float, theta: float) -> float:
        """Smoothing budget at the point: exp(-delta_env / d(x, outside))."""
        best = 0.0
        for sm in self.smoothings:
            if sm.sector.contains(theta % TWO_PI):
                d = sm.edge_distance(theta % TWO_PI)
                if d > 0:
                    best = math.exp(-sm.delta_env / d)
        return best


def smooth_convex_glue(profile: RadialProfile, sectors: list[Sector],
                       delta_env: float = 0.008,
                       W1_target: float = 1e-6) -> SmoothedProfile:
    """Lemma-style convex gluing, specialized to the radial crease profile.

    Works on the convex side (-f) conceptually: the crease hinge is convex
    and gets the parabolic blend; the blend width obeys the exponential
    envelope so the result equals the input off the sectors, matches
    one-sided derivatives at sector boundaries in the limit, and keeps a
    concavity margin capped by the width-profile curvature budget.
    """
    dp = profile.delta
    w2cap = min(1.5, 2.0 * dp / max(1.0 - dp, 1e-9))
    sms = [SectorSmoothing.solve(s, delta_env, w2cap, W1_target)
           for s in sectors]
    return SmoothedProfile(profile, sms)


def convexity_check_1d(values, ts=None, tol: float = 1e-9):
    """Discrete convexity of a sampled function on an interval.

    Three-point test over every sampled triple (the hat-function reduction)
    plus the one-sided-slope gluing criterion at interior knots.  Returns
    (ok, witness); the witness names the first violating triple or knot.
    """
    h = np.asarray(values, dtype=float)
    n = len(h)
    if n < 3:
        raise SurfaceError("need at least 3 samples")
    t = np.arange(n, dtype=float) if ts is None else np.asarray(ts, dtype=float)
    # all triples i < j < k: h(tj) <= interpolation + tol
    for j in range(1, n - 1):
        ti, tk = t[:j], t[j + 1:]
        hi, hk = h[:j], h[j + 1:]
        lam = (t[j] - ti[:, None]) / (tk[None, :] - ti[:, None])
        interp = hi[:, None] * (1 - lam) + hk[None, :] * lam
        bad = h[j] - interp > tol
        if bad.any():
            i, kk = np.argwhere(bad)[0]
            return False, {"triple": (int(i), j, int(j + 1 + kk)),
                           "violation": float((h[j] - interp)[i, kk])}
    slopes = np.diff(h) / np.diff(t)
    gaps = np.diff(t)
    slope_tol = tol / np.minimum(gaps[:-1], gaps[1:])
    bad = slopes[:-1] - slopes[1:] > slope_tol
    if bad.any():
        k = int(np.argmax(bad))
        return False, {"knot": k + 1,
                       "slope_drop": float(slopes[k] - slopes[k + 1])}
    return True, {}


# ---------------------------------------------------------------------------
# Subgraph spec, boundary classification, doubling
# ---------------------------------------------------------------------------

@dataclass
class ConcaveSubgraphSpec:
    """Discretized disk, concave profile, crease arcs and smoothing state."""

    delta: float
    arcs: list
    net_resolution: float = 0.02
    state: str = "f0"                      # f0 | f1 | f2
    delta_env: float = 0.008
    W1_target: float = 1e-6
    tip_cap_rho: float = 0.3
    rim_rounding: float = 0.05
    profile: RadialProfile = field(default=None, repr=False)
    sectors: list = field(default_factory=list, repr=False)
    smoothed: SmoothedProfile = field(default=None, repr=False)

    def __post_init__(self):
        self.profile = RadialProfile(self.delta)
        self.sectors = sector_decomposition([tuple(a) for a in self.arcs])
        self._apply_state()

    def _apply_state(self):
        if self.state == "f0":
            self.smoothed = SmoothedProfile(self.profile, [])
        elif self.state == "f1":
            self.smoothed = smooth_convex_glue(self.profile, self.sectors,
                                               self.delta_env, self.W1_target)
        elif self.state == "f2":
            sm = smooth_convex_glue(self.profile, self.sectors,
                                    self.delta_env, self.W1_target)
            self.smoothed = SmoothedProfile(self.profile, sm.smoothings,
                                            tip_cap_rho=self.tip_cap_rho)
        else:
            raise SurfaceError(f"unknown state {self.state!r}")

    def advance(self, state: str) -> "ConcaveSubgraphSpec":
        self.state = state
        self._apply_state()
        return self

    def over_T(self, theta: float) -> bool:
        return sector_of(self.sectors, theta % TWO_PI) is None

    def to_json(self) -> dict:
        return {"delta": self.delta, "arcs": [list(a) for a in self.arcs],
                "net_resolution": self.net_resolution, "state": self.state,
                "delta_env": self.delta_env, "W1_target": self.W1_target,
                "tip_cap_rho": self.tip_cap_rho,
                "rim_rounding": self.rim_rounding}

    @classmethod
    def from_json(cls, doc: dict) -> "ConcaveSubgraphSpec":
        return cls(delta=doc["delta"], arcs=[tuple(a) for a in doc["arcs"]],
                   net_resolution=doc.get("net_resolution", 0.02),
                   state=doc.get("state", "f0"),
                   delta_env=doc.get("delta_env", 0.008),
                   W1_target=doc.get("W1_target", 1e-6),
                   tip_cap_rho=doc.get("tip_cap_rho", 0.3),
                   rim_rounding=doc.get("rim_rounding", 0.05))


CLASS_CREASE = "crease"
CLASS_HALFSPACE = "half-space"
CLASS_OTHER = "other"


def classify_crease_point(spec: ConcaveSubgraphSpec, theta: float,
                          ladder=None) -> dict:
    """Tangent-cone class of the boundary point over the crease circle at
    angle theta, from one-sided radial slopes at an analytic step ladder.

    A persistent slope jump across the crease radius marks an R x cone
    point; a jump that melts away at fine steps marks a smooth (half-space)
    point of the graph.
    """
    prof = spec.smoothed
    ladder = ladder if ladder is not None else [10.0 ** (-j) for j in range(2, 11)]
    jumps = []
    f_c = prof.value(RHO_CREASE, theta)
    for hstep in ladder:
        f_in = prof.value(RHO_CREASE - hstep, theta)
        f_out = prof.value(RHO_CREASE + hstep, theta)
        s_in = (f_c - f_in) / hstep
        s_out = (f_out - f_c) / hstep
        jumps.append(abs(math.atan(s_in) - math.atan(s_out)))
    full_jump = abs(math.atan(-spec.delta) - math.atan(-1.0))
    threshold = 0.5 * full_jump
    if jumps[-1] >= threshold:
        cls = CLASS_CREASE
    elif jumps[-1] < threshold:
        cls = CLASS_HALFSPACE
    else:
        cls = CLASS_OTHER
    interior_dihedral = math.pi - jumps[0]
    return {"theta": theta, "class": cls, "jump_ladder": jumps,
            "crease_jump": jumps[-1], "full_jump": full_jump,
            "interior_dihedral": interior_dihedral,
            "double_cone_angle": 2.0 * (math.pi - jumps[-1]),
            "over_T": spec.over_T(theta)}


@dataclass
class BoundaryClassification:
    spec_state: str
    samples: list

    def misclassification_rate(self) -> float:
        bad = sum(1 for s in self.samples
                  if (s["class"] == CLASS_CREASE) != s["over_T"])
        return bad / max(len(self.samples), 1)

    def crease_measure(self) -> float:
        """Angular measure of crease-classified samples, scaled to the crease
        circle circumference."""
        frac = sum(1 for s in self.samples if s["class"] == CLASS_CREASE) \
            / max(len(self.samples), 1)
        return frac * TWO_PI * RHO_CREASE


def subgraph_boundary(spec: ConcaveSubgraphSpec, n_samples: int = 720,
                      ladder=None):
    """Triangulated boundary mesh of the subgraph plus the tangent-cone
    classification of the points over the crease circle."""
    mesh = _subgraph_mesh(spec)
    samples = [classify_crease_point(spec, TWO_PI * (i + 0.5) / n_samples,
                                     ladder=ladder)
               for i in range(n_samples)]
    return mesh, BoundaryClassification(spec.state, samples)


def _subgraph_mesh(spec: ConcaveSubgraphSpec, rings: int = 24,
                   segs: int = 72):
    """Vertex/face arrays of the boundary surface (top graph plus bottom
    disk, glued along the rim where the profile vanishes)."""
    prof = spec.smoothed
    verts = [(0.0, 0.0, prof.value(0.0, 0.0))]
    for j in range(1, rings + 1):
        rho = j / rings
        for i in range(segs):
            th = TWO_PI * i / segs
            verts.append((rho * math.cos(th), rho * math.sin(th),
                          prof.value(rho, th)))
    bottom_center = len(verts)
    verts.append((0.0, 0.0, 0.0))
    for j in range(1, rings):
        rho = j / rings
        for i in range(segs):
            th = TWO_PI * i / segs
            verts.append((rho * math.cos(th), rho * math.sin(th), 0.0))
    faces = []

    def top_idx(j, i):
        return 0 if j == 0 else 1 + (j - 1) * segs + (i % segs)

    def bot_idx(j, i):
        if j == 0:
            return bottom_center
        if j == rings:
            return top_idx(rings, i)     # shared rim
        return bottom_center + 1 + (j - 1) * segs + (i % segs)

    for j in range(rings):
        for i in range(segs):
            a, b = top_idx(j, i), top_idx(j, i + 1)
            c, d = top_idx(j + 1, i), top_idx(j + 1, i + 1)
            if j == 0:
                faces.append((a, c, d))
            else:
                faces.append((a, c, d))
                faces.append((a, d, b))
            a, b = bot_idx(j, i), bot_idx(j, i + 1)
            c, d = bot_idx(j + 1, i), bot_idx(j + 1, i + 1)
            if j == 0:
                faces.append((a, d, c))
            else:
                faces.append((a, d, c))
                faces.append((a, b, d))
    return np.array(verts), np.array(faces, dtype=int)


# ---------------------------------------------------------------------------
# Doubling
# ---------------------------------------------------------------------------

class UnsupportedQuery(ValueError):
    """Raised for metric queries outside the single-reflection regime."""


@dataclass
class DoubledSpace:
    """Two copies of the solid subgraph glued along the boundary.

    Supplies local metric queries only: same-copy distances are exact
    (straight chords of a convex body) and cross-copy distances go through a
    single boundary reflection, minimized over a boundary net.  Queries in
    the rim annulus (where the corner rounding lives) are refused.
    """

    spec: ConcaveSubgraphSpec
    boundary_net: int = 96

    def __post_init__(self):
        if self.spec.state != "f2":
            raise SurfaceError("double requires the fully smoothed state f2")
        prof = self.spec.smoothed
        pts = []
        rings = 20
        for j in range(rings + 1):
            rho = j / rings
            n_th = max(6, int(self.boundary_net * rho))
            for i in range(max(n_th, 1)):
                th = TWO_PI * i / max(n_th, 1)
                x, y = rho * math.cos(th), rho * math.sin(th)
                pts.append((x, y, prof.value(rho, th)))
                if 0 < rho < 1:
                    pts.append((x, y, 0.0))
        self._bnd = np.array(pts)

    def _check_point(self, p):
        (x, y, t), copy = p
        rho = math.hypot(x, y)
        if rho > 1.0 - self.spec.rim_rounding:
            raise UnsupportedQuery("query in the rim rounding annulus")
        h = self.spec.smoothed.value(rho, math.atan2(y, x) % TWO_PI)
        if not (-1e-12 <= t <= h + 1e-12):
            raise SurfaceError("point outside the body")
        return np.array([x, y, t]), copy

    def distance(self, p, q) -> float:
        """p, q are ((x, y, t), copy) with copy in {0, 1}."""
        xp, cp = self._check_point(p)
        xq, cq = self._check_point(q)
        if cp == cq:
            return float(np.linalg.norm(xp - xq))
        d = np.linalg.norm(self._bnd - xp, axis=1) \
            + np.linalg.norm(self._bnd - xq, axis=1)
        return float(d.min())

    def crease_classification(self, n_samples: int = 360) -> list:
        """Tangent cones along the crease circle in the double: the cone
        angle around the crease direction doubles the solid's interior
        dihedral angle; strictly below 2*pi exactly over T."""
        out = []
        for i in range(n_samples):
            th = TWO_PI * (i + 0.5) / n_samples
            c = classify_crease_point(self.spec, th)
            c["double_singular"] = c["double_cone_angle"] < TWO_PI - 1e-6
            out.append(c)
        return out
