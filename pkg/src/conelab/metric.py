"""Finite metric spaces, packings and Gromov-Hausdorff proximity certificates.

Everything downstream (surfaces, detectors, experiments) moves data through
the types in this module.  All types are immutable after construction and all
operations are pure functions, so callers are free to evaluate them in
parallel; nothing here keeps shared mutable state.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

DEFAULT_TRI_TOL_ANALYTIC = 1e-9
DEFAULT_TRI_TOL_MESH = 1e-6

EXACT_PACKING_CAP = 30
EXHAUSTIVE_GH_CAP = 6


class MetricError(ValueError):
    """Raised when a metric-space invariant or precondition fails."""


# ---------------------------------------------------------------------------
# FiniteMetricSpace
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteMetricSpace:
    """Point set with a symmetric distance matrix.

    ``points`` holds hashable point ids; ``dist[i, j]`` is the distance
    between ``points[i]`` and ``points[j]``.  ``base`` optionally marks a
    distinguished point (the center of a ball).  ``labels`` carries optional
    per-point metadata such as originating surface coordinates.
    """

    points: tuple
    dist: np.ndarray
    base: Any = None
    labels: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        if d.shape != (len(self.points), len(self.points)):
            raise MetricError(f"distance matrix shape {d.shape} does not match "
                              f"{len(self.points)} points")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "points", tuple(self.points))
        if self.base is not None and self.base not in self._index_map():
            raise MetricError(f"base {self.base!r} is not a point of the space")

    # -- basic accessors ----------------------------------------------------

    def _index_map(self) -> dict:
        cached = self.__dict__.get("_idx")
        if cached is None:
            cached = {p: i for i, p in enumerate(self.points)}
            self.__dict__["_idx"] = cached
        return cached

    def __len__(self) -> int:
        return len(self.points)

    def index(self, pid) -> int:
        try:
            return self._index_map()[pid]
        except KeyError:
            raise MetricError(f"unknown point id {pid!r}") from None

    def d(self, a, b) -> float:
        return float(self.dist[self.index(a), self.index(b)])

    def diameter(self) -> float:
        if len(self) <= 1:
            return 0.0
        return float(self.dist.max())

    # -- invariants ---------------------------------------------------------

    def validate(self, tol_tri: float = DEFAULT_TRI_TOL_ANALYTIC,
                 max_triples: int = 200_000) -> None:
        """Check symmetry, zero diagonal and the triangle inequality.

        The triangle check is exhaustive for small spaces and sampled above
        ``max_triples`` triples (deterministic sample).
        """
        d = self.dist
        n = len(self)
        if n == 0:
            raise MetricError("empty space")
        if not np.allclose(np.diag(d), 0.0, atol=1e-15):
            raise MetricError("nonzero diagonal")
        if not np.allclose(d, d.T, atol=1e-12, rtol=0.0):
            raise MetricError("asymmetric distance matrix")
        if d.min() < -1e-15:
            raise MetricError("negative distance")
        if n < 3:
            return
        if n ** 3 <= max_triples:
            ks = range(n)
            viol = _max_triangle_violation(d, np.arange(n))
        else:
            rng = np.random.default_rng(0)
            ks = rng.choice(n, size=max(3, max_triples // (n * n)), replace=False)
            viol = _max_triangle_violation(d, np.sort(ks))
        if viol > tol_tri:
            raise MetricError(f"triangle inequality violated by {viol:.3e} "
                              f"(tolerance {tol_tri:.1e})")

    # -- derived spaces -----------------------------------------------------

    def restrict(self, ids: Sequence, base=None) -> "FiniteMetricSpace":
        idx = [self.index(p) for p in ids]
        sub = self.dist[np.ix_(idx, idx)]
        labels = {p: self.labels[p] for p in ids if p in self.labels}
        return FiniteMetricSpace(tuple(ids), sub, base=base, labels=labels)

    def rescale(self, factor: float) -> "FiniteMetricSpace":
        return FiniteMetricSpace(self.points, self.dist * factor, base=self.base,
                                 labels=self.labels)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        n = len(self)
        tri = [float(self.dist[i, j]) for i in range(n) for j in range(i)]
        doc = {"points": list(self.points), "dist": tri,
               "base": self.base if self.base is not None else None}
        if self.labels:
            doc["labels"] = {str(k): v for k, v in self.labels.items()}
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "FiniteMetricSpace":
        pts = [tuple(p) if isinstance(p, list) else p for p in doc["points"]]
        n = len(pts)
        d = np.zeros((n, n))
        it = iter(doc["dist"])
        for i in range(n):
            for j in range(i):
                v = next(it)
                d[i, j] = d[j, i] = v
        base = doc.get("base")
        if isinstance(base, list):
            base = tuple(base)
        return cls(tuple(pts), d, base=base)


def _max_triangle_violation(d: np.ndarray, ks: np.ndarray) -> float:
    # violation of d[i,j] <= d[i,k] + d[k,j], maximized over i,j and k in ks
    best = 0.0
    for k in ks:
        slack = d - (d[:, k][:, None] + d[k, :][None, :])
        v = float(slack.max())
        if v > best:
            best = v
    return best


# ---------------------------------------------------------------------------
# Balls
# ---------------------------------------------------------------------------

def ball(space: FiniteMetricSpace, p, r: float) -> FiniteMetricSpace:
    """Closed metric ball: the restriction of ``space`` to {x : d(p,x) <= r}.

    Balls are closed by project convention, which keeps membership stable on
    meshes where points land exactly on the boundary radius.
    """
    if r <= 0:
        raise MetricError("ball radius must be positive")
    i = space.index(p)
    mask = space.dist[i] <= r
    ids = [q for q, m in zip(space.points, mask) if m]
    return space.restrict(ids, base=p)


# ---------------------------------------------------------------------------
# Packings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Packing:
    """An eps-(sub)packing of a subset: centers pairwise >= eps * subset_diam.

    ``kind`` records how the object was produced.  ``packing`` and
    ``cardinality-maximal`` additionally promise eps*subset_diam-density in
    the host subset; ``subpacking`` promises separation only.
    """

    host: FiniteMetricSpace
    subset_diam: float
    eps: float
    centers: tuple
    kind: str = "subpacking"

    def __post_init__(self):
        if self.kind not in ("subpacking", "packing", "cardinality-maximal"):
            raise MetricError(f"unknown packing kind {self.kind!r}")

    def __len__(self) -> int:
        return len(self.centers)

    @property
    def separation(self) -> float:
        return self.eps * self.subset_diam

    def center_matrix(self) -> np.ndarray:
        idx = [self.host.index(c) for c in self.centers]
        return self.host.dist[np.ix_(idx, idx)]

    def check_separation(self, slack: float = 1e-12) -> bool:
        m = self.center_matrix()
        n = len(self.centers)
        if n <= 1:
            return True
        off = m[~np.eye(n, dtype=bool)]
        return bool(off.min() >= self.separation - slack)

    def check_density(self, slack: float = 1e-12) -> bool:
        """Every host point within eps*subset_diam of some center."""
        idx = [self.host.index(c) for c in self.centers]
        nearest = self.host.dist[:, idx].min(axis=1)
        return bool(nearest.max() <= self.separation + slack)

    def to_json(self) -> dict:
        return {"eps": self.eps, "subset_diam": self.subset_diam,
                "centers": list(self.centers), "kind": self.kind,
                "host_points": len(self.host)}


REL_TIE_SLACK = 1e-9


def greedy_packing(S: FiniteMetricSpace, eps: float) -> Packing:
    """Maximal eps-packing by farthest-point insertion.

    Starts from the first point in ``S.points`` order and repeatedly inserts
    the point maximizing the minimum distance to the chosen centers, breaking
    ties by position, until no point is eps*diam(S)-far from every center.
    Maximality makes the result eps*diam-dense, hence a packing.  Separation
    comparisons carry a relative tie slack so that exact-tie nets (polar
    lattices across scales) resolve identically regardless of rounding.
    """
    if len(S) == 0:
        raise MetricError("empty space")
    if not (0.0 < eps <= 1.0):
        raise MetricError("eps must lie in (0, 1]")
    diam = S.diameter()
    sep = eps * diam * (1.0 - REL_TIE_SLACK)
    n = len(S)
    chosen = [0]
    mind = S.dist[0].copy()
    while True:
        j = int(np.argmax(mind))       # argmax returns the first (lowest) index on ties
        if mind[j] < sep or mind[j] <= 0.0:
            break
        chosen.append(j)
        np.minimum(mind, S.dist[j], out=mind)
        if len(chosen) == n:
            break
    centers = tuple(S.points[i] for i in chosen)
    return Packing(S, diam, eps, centers, kind="packing")


def _conflict_masks(d: np.ndarray, sep: float) -> list[int]:
    n = d.shape[0]
    masks = []
    for i in range(n):
        m = 0
        row = d[i]
        for j in range(n):
            if j != i and row[j] < sep:
                m |= 1 << j
        masks.append(m)
    return masks


def _max_independent_set(masks: list[int], n: int) -> int:
    """Branch-and-bound maximum independent set over conflict bitmasks."""
    best_mask = 0
    best = 0
    full = (1 << n) - 1

    def bb(cand: int, cur: int, size: int):
        nonlocal best, best_mask
        if size + cand.bit_count() <= best:
            return
        if cand == 0:
            if size > best:
                best, best_mask = size, cur
            return
        # branch on the candidate vertex with most conflicts inside cand
        v, vdeg = -1, -1
        c = cand
        while c:
            b = c & (-c)
            i = b.bit_length() - 1
            deg = (masks[i] & cand).bit_count()
            if deg > vdeg:
                v, vdeg = i, deg
            c ^= b
        vb = 1 << v
        bb(cand & ~vb & ~masks[v], cur | vb, size + 1)   # include v
        bb(cand & ~vb, cur, size)                        # exclude v

    bb(full, 0, 0)
    return best_mask


def exact_packing_number(S: FiniteMetricSpace, eps: float,
                         size_cap: int = EXACT_PACKING_CAP,
                         return_witness: bool = False):
    """Exact maximum cardinality of an eps-subpacking of S.

    Branch and bound over the conflict graph whose edges join pairs strictly
    closer than eps*diam(S).  This is the project's brute-force oracle; it
    refuses spaces above ``size_cap`` points.
    """
    n = len(S)
    if n == 0:
        raise MetricError("empty space")
    if n > size_cap:
        raise MetricError(f"space has {n} points, exact cap is {size_cap}")
    if not (0.0 < eps <= 1.0):
        raise MetricError("eps must lie in (0, 1]")
    sep = eps * S.diameter() * (1.0 - REL_TIE_SLACK)
    masks = _conflict_masks(S.dist, sep)
    sol = _max_independent_set(masks, n)
    count = sol.bit_count()
    if not return_witness:
        return count
    centers = tuple(S.points[i] for i in range(n) if sol >> i & 1)
    pk = Packing(S, S.diameter(), eps, centers, kind="cardinality-maximal")
    return count, pk


def packing_number(S: FiniteMetricSpace, eps: float,
                   size_cap: int = EXACT_PACKING_CAP) -> tuple[int, bool]:
    """(P_eps estimate, exact flag): exact below the size cap, greedy above."""
    if len(S) <= size_cap:
        return exact_packing_number(S, eps, size_cap=size_cap), True
    return len(greedy_packing(S, eps)), False


# ---------------------------------------------------------------------------
# Induced subpackings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InducedPacking:
    """Image of a packing under the radial inducing map at a smaller scale.

    ``rescaled_from[i, j]`` is R^{-1} d(x_i, x_j) and ``rescaled_to[i, j]`` is
    r^{-1} d(phi(x_i), phi(x_j)); the difference tracks the distortion used by
    the bad-scale machinery.
    """

    packing: Packing
    source_centers: tuple
    scale_from: float
    scale_to: float
    rescaled_from: np.ndarray
    rescaled_to: np.ndarray

    @property
    def max_increment(self) -> float:
        n = len(self.source_centers)
        if n <= 1:
            return 0.0
        diff = self.rescaled_to - self.rescaled_from
        return float(diff[~np.eye(n, dtype=bool)].max())


def induced_subpacking(geo, p, R: float, r: float, pk: Packing) -> InducedPacking:
    """Map packing centers of B_R(p) to B_r(p) along the fixed geodesic family.

    ``geo`` is a geodesic oracle for (p, R): ``geo.induce(x, s)`` returns the
    point at arc length s along the fixed geodesic p -> x and
    ``geo.pairwise_distances(pts)`` evaluates host distances between induced
    points.  On nonnegatively curved hosts the image is again an
    eps-subpacking and the rescaled distances are nondecreasing as the scale
    shrinks.
    """
    if not (0.0 < r < R):
        raise MetricError("need 0 < r < R")
    src = list(pk.centers)
    induced_pts = []
    for x in src:
        dpx = geo.distance_to_base(x)
        if dpx <= 0:
            raise MetricError(f"geodesic unavailable: {x!r} coincides with the base")
        induced_pts.append(geo.induce(x, (r / R) * dpx))
    dmat = np.asarray(geo.pairwise_distances(induced_pts), dtype=float)
    ids = tuple(("phi", c) for c in src)
    host = FiniteMetricSpace(ids, dmat, base=None,
                             labels={i: pt for i, pt in zip(ids, induced_pts)})
    new_pk = Packing(host, pk.subset_diam * (r / R), pk.eps, ids, kind="subpacking")
    n = len(src)
    src_idx = [pk.host.index(c) for c in src]
    from_mat = pk.host.dist[np.ix_(src_idx, src_idx)] / R
    return InducedPacking(new_pk, tuple(src), R, r, from_mat, dmat / r)


# ---------------------------------------------------------------------------
# Gromov-Hausdorff certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GHCertificate:
    matched_pairs: tuple
    max_distortion: float          # absolute length units
    gh_upper_bound: float
    denseness_check: tuple         # (X side ok, Y side ok)
    eps_effective: float           # dimensionless certificate parameter
    scale: float                   # max(diam X, diam Y)

    def to_json(self) -> dict:
        return {"matched_pairs": [list(p) for p in self.matched_pairs],
                "max_distortion": self.max_distortion,
                "gh_upper_bound": self.gh_upper_bound,
                "denseness_check": list(self.denseness_check),
                "eps_effective": self.eps_effective,
                "scale": self.scale}


def gh_certificate(X: FiniteMetricSpace, Y: FiniteMetricSpace,
                   pkX: Packing, pkY: Packing,
                   matching: Sequence[tuple]) -> GHCertificate:
    """Upper bound d_GH(X, Y) <= 4 * max(eps, distortion) * scale.

    Requires matched packings of equal size that are genuinely dense
    (kind != subpacking); the rule is the matched-packing certificate with
    distances normalized so both diameters are at most one.
    """
    if len(pkX) != len(pkY) or len(pkX) != len(matching):
        raise MetricError("matching size must equal both packing sizes")
    if pkX.kind == "subpacking" or pkY.kind == "subpacking":
        raise MetricError("certificate requires dense packings, got a subpacking")
    dense_x = pkX.check_density(slack=1e-9 * max(1.0, X.diameter()))
    dense_y = pkY.check_density(slack=1e-9 * max(1.0, Y.diameter()))
    if not (dense_x and dense_y):
        raise MetricError("packing failed the density re-check")
    scale = max(X.diameter(), Y.diameter())
    if scale == 0.0:
        return GHCertificate(tuple(matching), 0.0, 0.0, (True, True), 0.0, 0.0)
    xi = [X.index(a) for a, _ in matching]
    yi = [Y.index(b) for _, b in matching]
    dx = X.dist[np.ix_(xi, xi)]
    dy = Y.dist[np.ix_(yi, yi)]
    max_dist = float(np.abs(dx - dy).max())
    eps_eff = max(pkX.eps, pkY.eps)
    bound = 4.0 * max(eps_eff, max_dist / scale) * scale
    return GHCertificate(tuple(matching), max_dist, bound, (dense_x, dense_y),
                         eps_eff, scale)


def exhaustive_gh(X: FiniteMetricSpace, Y: FiniteMetricSpace,
                  size_cap: int = EXHAUSTIVE_GH_CAP) -> float:
    """Exact GH distance between small finite spaces.

    Uses d_GH = 1/2 min over correspondences of the distortion, with the
    minimum taken over correspondences assembled from a map X -> Y and a map
    Y -> X (every minimal correspondence contains such a pair).  Branch and
    bound on the second map keeps the enumeration tractable at the cap.
    """
    nx, ny = len(X), len(Y)
    if nx > size_cap or ny > size_cap:
        raise MetricError(f"exhaustive GH capped at {size_cap} points")
    if nx == 0 or ny == 0:
        raise MetricError("empty space")
    dX, dY = X.dist, Y.dist

    if nx == 1 and ny == 1:
        return 0.0

    # all maps f: X -> Y, their internal distortion, ascending
    f_all = np.array(list(itertools.product(range(ny), repeat=nx)), dtype=np.int64)
    iu = np.triu_indices(nx, k=1)
    if iu[0].size:
        disf = np.abs(dY[f_all[:, iu[0]], f_all[:, iu[1]]] - dX[iu]).max(axis=1)
    else:
        disf = np.zeros(len(f_all))
    order = np.argsort(disf, kind="stable")

    gu = np.triu_indices(ny, k=1)
    best = math.inf

    for fi in order:
        if disf[fi] >= best:
            break
        f = f_all[fi]
        base = float(disf[fi])
        # cross cost of assigning g(y) = x: max_x' |dX[x', x] - dY[f[x'], y]|
        cross = np.abs(dX[:, :, None] - dY[f][:, None, :]).max(axis=0)  # (x, y)

        gbest = _assign_g(dX, dY, cross, base, best, ny)
        if gbest < best:
            best = gbest
    return best / 2.0


def _assign_g(dX, dY, cross, base, best, ny):
    """Branch and bound over g: Y -> X minimizing the correspondence distortion."""
    nx = dX.shape[0]
    g = np.full(ny, -1, dtype=np.int64)
    out = best

    def rec(y, cur):
        nonlocal out
        if cur >= out:
            return
        if y == ny:
            out = cur
            return
        # candidate x values ordered by their immediate cost
        costs = []
        for x in range(nx):
            c = max(cur, cross[x, y])
            for yp in range(y):
                c = max(c, abs(dX[g[yp], x] - dY[yp, y]))
                if c >= out:
                    break
            costs.append((c, x))
        costs.sort()
        for c, x in costs:
            if c >= out:
                break
            g[y] = x
            rec(y + 1, c)
            g[y] = -1

    rec(0, base)
    return out


# ---------------------------------------------------------------------------
# Cross sections and cones
# ---------------------------------------------------------------------------

def path_metric(ambient: FiniteMetricSpace, link_length: float) -> FiniteMetricSpace:
    """All-pairs shortest paths with edges only between pairs at distance
    <= link_length, edge weight = ambient distance.

    Raises with a component report if the link graph is disconnected; that
    signals the link parameter is too small for the net.
    """
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components, shortest_path

    n = len(ambient)
    if n == 1:
        return ambient
    w = np.where(ambient.dist <= link_length, ambient.dist, 0.0)
    np.fill_diagonal(w, 0.0)
    g = csr_matrix(w)
    ncomp, lab = connected_components(g, directed=False)
    if ncomp > 1:
        sizes = np.bincount(lab)
        raise MetricError(f"link graph disconnected: {ncomp} components "
                          f"(sizes {sorted(sizes.tolist(), reverse=True)[:5]}); "
                          "increase the link parameter")
    sp = shortest_path(g, method="D", directed=False)
    return FiniteMetricSpace(ambient.points, sp, base=ambient.base,
                             labels=ambient.labels)


def cross_section_metric(ambient: FiniteMetricSpace, R: float,
                         link: float = 0.25) -> FiniteMetricSpace:
    """Chain metric on a sphere net: hops capped at link*R.

    ``ambient`` must already be restricted to the sphere net around the base
    point; the returned space carries the induced shortest-chain metric d_S.
    """
    if not (0.0 < link <= 1.0):
        raise MetricError("link must lie in (0, 1]")
    return path_metric(ambient, link * R)


def cone_over(sigma: FiniteMetricSpace, R: float,
              radial_levels: int = 8) -> FiniteMetricSpace:
    """Finite model of the closed R-ball at the tip of the metric cone C(Sigma).

    Points are the tip plus (w, s_j R) for uniform radial levels s_j = j/L.
    Cross-section distances above pi*R are clamped to the angular cutoff pi,
    which turns pairs separated by more than a half-turn into through-tip
    geodesics.
    """
    if radial_levels < 1:
        raise MetricError("need at least one radial level")
    m = len(sigma)
    levels = [(j + 1) / radial_levels for j in range(radial_levels)]
    ids = ["tip"]
    radii = [0.0]
    widx = [-1]
    for j, s in enumerate(levels):
        for i, w in enumerate(sigma.points):
            ids.append((w, j + 1))
            radii.append(s * R)
            widx.append(i)
    n = len(ids)
    d = np.zeros((n, n))
    rad = np.array(radii)
    ang = np.minimum(sigma.dist / R, math.pi)
    for a in range(n):
        for b in range(a + 1, n):
            if widx[a] < 0 or widx[b] < 0:
                val = rad[a] + rad[b]       # one endpoint is the tip
            else:
                t = ang[widx[a], widx[b]]
                val = math.sqrt(max(rad[a] ** 2 + rad[b] ** 2
                                    - 2.0 * rad[a] * rad[b] * math.cos(t), 0.0))
            d[a, b] = d[b, a] = val
    return FiniteMetricSpace(tuple(ids), d, base="tip")


# ---------------------------------------------------------------------------
# Intersection numbers of ball families
# ---------------------------------------------------------------------------

def _balls_have_common_point(centers: np.ndarray, radii: np.ndarray,
                             tol: float = 1e-9) -> bool:
    """Common-intersection test for closed Euclidean balls in R^k, k <= 3."""
    m, k = centers.shape
    if m == 1:
        return True
    # direct hits: one center inside all balls
    for i in range(m):
        if np.all(np.linalg.norm(centers - centers[i], axis=1) <= radii + tol):
            return True
    # pairwise separation is necessary
    for i in range(m):
        for j in range(i + 1, m):
            if np.linalg.norm(centers[i] - centers[j]) > radii[i] + radii[j] + tol:
                return False
    if m == 2:
        return True
    if k == 1:
        lo = float((centers[:, 0] - radii).max())
        hi = float((centers[:, 0] + radii).min())
        return lo <= hi + tol
    if k == 2:
        # candidate points: centers plus pairwise circle intersections
        cands = [centers[i] for i in range(m)]
        for i in range(m):
            for j in range(i + 1, m):
                cands.extend(_circle_circle(centers[i], radii[i],
                                            centers[j], radii[j]))
        for p in cands:
            if np.all(np.linalg.norm(centers - p, axis=1) <= radii + tol):
                return True
        return False
    # k == 3: convex minimax via SLSQP on the epigraph
    from scipy.optimize import minimize

    def fun(z):
        return z[-1]

    cons = [{"type": "ineq",
             "fun": (lambda z, c=centers[i], r=radii[i]:
                     r + z[-1] - np.linalg.norm(z[:-1] - c))}
            for i in range(m)]
    x0 = np.append(centers.mean(axis=0), max(0.0, _minimax_value(centers, radii)))
    res = minimize(fun, x0, constraints=cons, method="SLSQP",
                   options={"maxiter": 200, "ftol": 1e-12})
    val = _minimax_value(centers, radii, res.x[:-1]) if res.success else \
        _minimax_value(centers, radii)
    return val <= tol


def _minimax_value(centers, radii, x=None) -> float:
    if x is None:
        x = centers.mean(axis=0)
    return float((np.linalg.norm(centers - x, axis=1) - radii).max())


def _circle_circle(c1, r1, c2, r2):
    d = float(np.linalg.norm(c2 - c1))
    if d == 0.0 or d > r1 + r2 or d < abs(r1 - r2):
        return []
    a = (r1 ** 2 - r2 ** 2 + d ** 2) / (2 * d)
    h2 = r1 ** 2 - a ** 2
    if h2 < 0:
        return []
    h = math.sqrt(max(h2, 0.0))
    mid = c1 + a * (c2 - c1) / d
    perp = np.array([-(c2 - c1)[1], (c2 - c1)[0]]) / d
    return [mid + h * perp, mid - h * perp]


def intersection_number(balls: Sequence[tuple], tol: float = 1e-9) -> int:
    """Minimum N such that every (N+1)-subset of the balls has empty common
    intersection; equivalently the maximum number of balls through one point.

    Exact interval sweep for k = 1; for k in {2, 3} a pairwise-overlap clique
    bound refined by exact common-intersection checks on small subfamilies
    (Helly reduces everything to (k+1)-subsets, but we test whole candidate
    subsets directly).
    """
    if not balls:
        return 0
    centers = np.array([np.atleast_1d(np.asarray(c, dtype=float)) for c, _ in balls])
    radii = np.array([float(r) for _, r in balls])
    m, k = centers.shape
    if k > 3:
        raise MetricError("intersection_number supports k <= 3")
    if k == 1:
        events = []
        for c, r in zip(centers[:, 0], radii):
            events.append((c - r, 0))    # closed start sorts before end at ties
            events.append((c + r, 1))
        events.sort()
        depth = best = 0
        for _, kind in events:
            depth += 1 if kind == 0 else -1
            best = max(best, depth)
        return best
    if m > 500:
        raise MetricError("k >= 2 intersection_number capped at 500 balls")
    import networkx as nx
    g = nx.Graph()
    g.add_nodes_from(range(m))
    for i in range(m):
        for j in range(i + 1, m):
            if np.linalg.norm(centers[i] - centers[j]) <= radii[i] + radii[j] + tol:
                g.add_edge(i, j)
    best = 1
    for clique in nx.find_cliques(g):
        if len(clique) <= best:
            continue
        best = max(best, _max_feasible_subset(centers[clique], radii[clique],
                                              best, tol))
    return best


def _max_feasible_subset(centers, radii, floor, tol) -> int:
    """Largest subfamily of a clique with nonempty common intersection."""
    m = len(centers)
    if _balls_have_common_point(centers, radii, tol):
        return m
    best = floor
    # breadth-first over subset sizes, largest first
    for size in range(m - 1, floor, -1):
        for sub in itertools.combinations(range(m), size):
            if _balls_have_common_point(centers[list(sub)], radii[list(sub)], tol):
                return size
    return best
