"""k-coverage thresholds with certified error intervals.

The coverage threshold of a sample over a target set B is the max over B
of the k-th nearest-neighbor distance field.  That field is 1-Lipschitz
in the geodesic metric, so evaluating it on an h-covering grid brackets
the true threshold inside [grid max, grid max + h].  Optional refinement
re-covers only the region that can still contain the argmax, shrinking h
geometrically at near-constant cost.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import (ManifoldSpec, Metric, RegionSpec, chord_to_geodesic,
                       dist_many, dist_to_boundary_many, intrinsic_diameter)
from .grids import DEFAULT_NODE_CAP, EvalGrid, refine_nodes
from .sampling import PointCloud, DensitySpec, density_sample

# full-scan threshold: below this cloud size brute force beats a tree
_BRUTE_MAX = 32
_BRUTE_CHUNK_FLOATS = 40_000_000


class CoverageError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdEstimate:
    """Certified bracket [lo, hi] for a coverage threshold.

    lo is the exact max of the k-NN distance over the grid nodes (a valid
    lower bound since nodes lie in B); hi = lo + h by the Lipschitz/cover
    argument.  ``argmax`` is the node attaining lo.
    """

    lo: float
    hi: float
    h: float
    k: int
    metric: Metric
    argmax: tuple

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "h": self.h, "k": self.k,
                "metric": self.metric.value, "argmax": list(self.argmax)}


class KnnField:
    """Evaluates the k-th nearest-neighbor distance at many query points.

    On curved families the tree works in chord (ambient) distance, which
    is monotone in the great-circle distance, so the k-th neighbor is the
    same point; geodesic values are recovered with 2*asin(chord/2).
    """

    def __init__(self, spec: ManifoldSpec, points: np.ndarray, k: int,
                 metric: Metric):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if k < 1:
            raise CoverageError(f"k must be >= 1, got {k}")
        if len(points) < k:
            raise CoverageError(
                f"cloud has {len(points)} points, fewer than k={k}: the "
                "threshold is undefined (empty-ball convention surfaced as "
                "an error)")
        self.spec = spec
        self.k = k
        self.metric = metric
        self._points = points
        self._tree = cKDTree(points) if len(points) > _BRUTE_MAX else None

    def __call__(self, nodes: np.ndarray) -> np.ndarray:
        nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
        if len(nodes) == 0:
            return np.empty(0)
        if self._tree is not None:
            chord = self._tree.query(nodes, k=self.k)[0]
            chord = chord[:, -1] if self.k > 1 else np.ravel(chord)
        else:
            chord = self._brute(nodes)
        if self.spec.curved and self.metric is Metric.GEODESIC:
            return chord_to_geodesic(chord)
        return chord

    def _brute(self, nodes: np.ndarray) -> np.ndarray:
        pts = self._points
        chunk = max(1, _BRUTE_CHUNK_FLOATS // max(1, len(pts)))
        out = np.empty(len(nodes))
        for s in range(0, len(nodes), chunk):
            blk = nodes[s:s + chunk]
            d2 = ((blk[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
            if self.k == 1:
                out[s:s + chunk] = np.sqrt(d2.min(axis=1))
            else:
                part = np.partition(d2, self.k - 1, axis=1)[:, self.k - 1]
                out[s:s + chunk] = np.sqrt(part)
        return out


def knn_distance(x, cloud: PointCloud, k: int, metric: Metric) -> float:
    """Distance from x to its k-th nearest cloud point (ties by sort order)."""
    if k < 1:
        raise CoverageError(f"k must be >= 1, got {k}")
    if len(cloud) < k:
        raise CoverageError(f"cloud has {len(cloud)} points, fewer than k={k}")
    d = dist_many(cloud.spec, np.asarray(x, dtype=float), cloud.points, metric)
    return float(np.partition(d, k - 1)[k - 1])


def coverage_threshold(cloud: PointCloud, grid: EvalGrid, k: int,
                       metric: Metric, refine_to: float | None = None,
                       refine_factor: float = 8.0,
                       node_cap: int = DEFAULT_NODE_CAP) -> ThresholdEstimate:
    """Certified bracket for the k-coverage threshold of B.

    Without refinement the bracket is [max node value, max + grid.h].  With
    ``refine_to`` set, levels of locally regenerated grid (each `refine_factor`
    times finer) re-cover only the nodes whose value is within one covering
    radius of the running max -- the only places the true argmax can hide --
    until the covering radius reaches ``refine_to``.
    """
    field = KnnField(cloud.spec, cloud.points, k, metric)
    vals = field(grid.nodes)
    best = int(np.argmax(vals))
    lo = float(vals[best])
    arg = grid.nodes[best]
    h_cur = grid.h
    nodes_cur, vals_cur = grid.nodes, vals
    while refine_to is not None and h_cur > refine_to * (1.0 + 1e-12):
        h_next = max(refine_to, h_cur / refine_factor)
        cand = nodes_cur[vals_cur >= lo - h_cur - 1e-12]
        new_nodes = refine_nodes(cloud.spec, grid.region, cand,
                                 reach=h_cur + h_next, h=h_next,
                                 node_cap=node_cap)
        new_vals = field(new_nodes)
        if len(new_vals):
            b = int(np.argmax(new_vals))
            if new_vals[b] > lo:
                lo = float(new_vals[b])
                arg = new_nodes[b]
        nodes_cur, vals_cur, h_cur = new_nodes, new_vals, h_next
    return ThresholdEstimate(lo=lo, hi=lo + h_cur, h=h_cur, k=k,
                             metric=metric, argmax=tuple(float(v) for v in arg))


def interior_threshold(cloud: PointCloud, spec: ManifoldSpec,
                       region: RegionSpec, k: int, metric: Metric,
                       h: float | None = None, tol: float = 1e-3,
                       grid: EvalGrid | None = None,
                       refine_to: float | None = None) -> ThresholdEstimate:
    """Certified bracket for the interior coverage threshold.

    This is the smallest r such that every point of B farther than r from
    the boundary has k sample points within r.  The predicate "all grid
    nodes deeper than r are r-covered" is monotone in r, so bisection over
    [0, diam(A)] brackets it; grid discretization adds at most the grid's
    covering radius to the upper end.

    On a boundaryless shape the deep set is all of B for every r and the
    interior threshold coincides with the plain coverage threshold, which
    is returned directly (refined if ``refine_to`` is given).
    """
    if tol <= 0.0:
        raise CoverageError("tol must be > 0")
    if grid is None:
        if h is None:
            raise CoverageError("provide either h or a prebuilt grid")
        from .grids import build_grid
        grid = build_grid(spec, region, h)
    depth = dist_to_boundary_many(spec, grid.nodes)
    if np.all(np.isinf(depth)):
        return coverage_threshold(cloud, grid, k, metric, refine_to=refine_to)
    field = KnnField(spec, cloud.points, k, metric)
    vals = field(grid.nodes)

    def covered_deep(r: float) -> bool:
        sel = depth > r
        return bool(np.all(vals[sel] <= r)) if np.any(sel) else True

    hi_r = intrinsic_diameter(spec)
    if not covered_deep(hi_r):
        raise CoverageError("interior coverage predicate fails even at the "
                            "diameter; cloud too small?")
    lo_r = 0.0
    if covered_deep(0.0):
        hi_r = 0.0
    while hi_r - lo_r > tol:
        mid = 0.5 * (lo_r + hi_r)
        if covered_deep(mid):
            hi_r = mid
        else:
            lo_r = mid
    viol = (depth > lo_r) & (vals > lo_r)
    arg = grid.nodes[int(np.argmax(np.where(viol, vals, -np.inf)))] \
        if np.any(viol) else grid.nodes[int(np.argmax(vals))]
    return ThresholdEstimate(lo=lo_r, hi=hi_r + grid.h, h=grid.h, k=k,
                             metric=metric,
                             argmax=tuple(float(v) for v in arg))


def covered_region(cloud: PointCloud, grid: EvalGrid, k: int, r: float,
                   metric: Metric) -> np.ndarray:
    """Indices of grid nodes having at least k sample points within r."""
    if r < 0.0:
        raise CoverageError("radius must be >= 0")
    if len(cloud) < k:
        return np.empty(0, dtype=np.int64)
    vals = KnnField(cloud.spec, cloud.points, k, metric)(grid.nodes)
    return np.flatnonzero(vals <= r)


# ---------------------------------------------------------------------------
# packing / covering diagnostics


def packing_estimate(spec: ManifoldSpec, region: RegionSpec, r: float,
                     a: float, dens: DensitySpec | None = None,
                     candidates: np.ndarray | None = None,
                     candidate_h: float | None = None,
                     n_mc: int = 10_000, seed: int = 0) -> int:
    """Greedy lower bound for the packing number of B at radius r, mass cap a.

    Accepts candidate centers in grid order when their ball is disjoint
    from the balls already accepted and its measure under ``dens`` passes
    a Monte Carlo check with a conservative two-sigma margin (so accepted
    balls truly have mass <= a, up to MC error).
    """
    if r <= 0.0 or a <= 0.0:
        raise CoverageError("need r > 0 and a > 0")
    dens = dens or DensitySpec.uniform()
    if candidates is None:
        from .grids import build_grid
        candidate_h = candidate_h or r / 2.0
        candidates = build_grid(spec, region, candidate_h).nodes
    probe = density_sample(spec, dens, n_mc, seed).points
    accepted: list[np.ndarray] = []
    for c in candidates:
        if accepted:
            gaps = dist_many(spec, c, np.asarray(accepted), Metric.GEODESIC)
            if float(np.min(gaps)) <= 2.0 * r:
                continue
        inside = dist_many(spec, c, probe, Metric.GEODESIC) <= r
        p_hat = float(np.mean(inside))
        margin = 2.0 * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n_mc)
        if p_hat + margin <= a:
            accepted.append(np.asarray(c, dtype=float))
    return len(accepted)


def covering_estimate(spec: ManifoldSpec, setpoints: np.ndarray,
                      r: float) -> int:
    """Greedy upper bound for how many radius-r balls cover the point set.

    Classic greedy set cover with centers drawn from the set itself: each
    step opens the ball covering the most still-uncovered points (lowest
    index on ties).  The count is an upper bound for the covering number
    of the finite set, hence of the underlying region up to discretization.
    """
    if r <= 0.0:
        raise CoverageError("need r > 0")
    pts = np.atleast_2d(np.asarray(setpoints, dtype=float))
    n = len(pts)
    if n == 0:
        return 0
    # geodesic balls on the sphere are chord balls of radius 2 sin(r/2)
    r_chord = 2.0 * math.sin(min(r, math.pi) / 2.0) if spec.curved else r
    tree = cKDTree(pts)
    members = tree.query_ball_point(pts, r_chord + 1e-12)
    uncovered = np.ones(n, dtype=bool)
    # lazy greedy: counts in the heap may be stale, revalidate on pop
    heap = [(-len(m), i) for i, m in enumerate(members)]
    heapq.heapify(heap)
    count = 0
    remaining = n
    while remaining > 0:
        neg, i = heapq.heappop(heap)
        gain = int(np.count_nonzero(uncovered[members[i]]))
        if gain == 0:
            continue
        if heap and gain < -heap[0][0]:
            heapq.heappush(heap, (-gain, i))
            continue
        uncovered[members[i]] = False
        remaining -= gain
        count += 1
    return count
