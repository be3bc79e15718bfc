"""Evaluation grids with a certified covering radius.

A grid discretizes "for every x in B" into a finite max: every point of B
lies within geodesic distance h of some node, and all nodes lie in B.
Constructions are per-family (lattice for the square and cube, polar rings
for disk/sphere/cap, lattice-with-radial-projection for the solid ball)
and every one of them can also be generated *locally* around a set of
candidate points, which is what makes certified refinement of threshold
estimates cheap.

For interior-body regions the nodes are pulled a hair (1e-9) inside the
closed region so they satisfy the strict interior constraint; the slack is
absorbed into the certified radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (Family, ManifoldSpec, RegionKind, RegionSpec,
                       polar_angle)

DEFAULT_NODE_CAP = 4_000_000

# strict-interior pullback for interior_body grids
_EDGE_EPS = 1e-9


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class EvalGrid:
    """Finite node set in B whose covering radius (geodesic) is <= h."""

    spec: ManifoldSpec
    region: RegionSpec
    nodes: np.ndarray     # (N, m) ambient coordinates
    h: float

    def __len__(self) -> int:
        return len(self.nodes)


# ---------------------------------------------------------------------------
# geometry of the effective region
#
# Every supported (family, region) pair reduces to the same family shrunk
# to a sub-shape: a centered square of side c, a centered disk/ball of
# radius rho, or a cap of polar angle theta_max.  GEODESIC_BALL regions
# have no such reduction and are rejected here.


@dataclass(frozen=True)
class _EffShape:
    kind: str          # "square" | "disk" | "ball" | "polar"
    lo: float = 0.0    # square: lower corner coordinate
    size: float = 0.0  # square: side; disk/ball: radius; polar: max polar angle


def _effective_shape(spec: ManifoldSpec, region: RegionSpec) -> _EffShape:
    fam = spec.family
    if region.kind is RegionKind.GEODESIC_BALL:
        raise GridError("structured grids for geodesic-ball regions are not "
                        "supported; evaluate on an enclosing region instead")
    delta = 0.0
    if region.kind is RegionKind.INTERIOR_BODY:
        delta = region.delta + _EDGE_EPS
    if fam is Family.UNIT_SQUARE:
        side = 1.0 - 2.0 * delta
        if side <= 0.0:
            raise GridError(f"interior body delta={region.delta} empties the square")
        return _EffShape("square", lo=delta, size=side)
    if fam is Family.UNIT_DISK:
        rho = 1.0 - delta
        if rho <= 0.0:
            raise GridError(f"interior body delta={region.delta} empties the disk")
        return _EffShape("disk", size=rho)
    if fam is Family.SOLID_BALL:
        rho = 1.0 - delta
        if rho <= 0.0:
            raise GridError(f"interior body delta={region.delta} empties the ball")
        return _EffShape("ball", size=rho)
    if fam is Family.UNIT_SPHERE:
        return _EffShape("polar", size=math.pi)
    tmax = spec.alpha - delta
    if tmax <= 0.0:
        raise GridError(f"interior body delta={region.delta} empties the cap")
    return _EffShape("polar", size=tmax)


# ---------------------------------------------------------------------------
# node counting (cheap, used for the cap check before any allocation)


def _square_cells(shape: _EffShape, d: int, h: float) -> tuple[int, float]:
    """Cells per axis and their exact side for a half-diagonal <= h."""
    s_max = 2.0 * h / math.sqrt(d)
    n_cells = max(1, math.ceil(shape.size / s_max))
    return n_cells, shape.size / n_cells


def _disk_rings(rho: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    n_r = max(1, math.ceil(rho / h))
    radii = np.linspace(0.0, rho, n_r + 1)
    counts = np.maximum(1, np.ceil(2.0 * math.pi * radii / h)).astype(np.int64)
    return radii, counts


def _polar_rings(tmax: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    n_t = max(1, math.ceil(tmax / h))
    thetas = np.linspace(0.0, tmax, n_t + 1)
    counts = np.maximum(1, np.ceil(2.0 * math.pi * np.sin(thetas) / h)).astype(np.int64)
    return thetas, counts


def _ball_lattice(rho: float, h: float) -> tuple[int, float]:
    s_max = 2.0 * h / math.sqrt(3.0)
    n_cells = max(1, math.ceil(2.0 * rho / s_max))
    return n_cells, 2.0 * rho / n_cells


def _h_used(region: RegionSpec, h: float) -> float:
    # interior-body nodes sit _EDGE_EPS inside the closed region, so the
    # construction runs slightly finer to keep the certified radius <= h
    if region.kind is RegionKind.INTERIOR_BODY:
        return h - _EDGE_EPS
    return h


def estimate_node_count(spec: ManifoldSpec, region: RegionSpec, h: float) -> int:
    shape = _effective_shape(spec, region)
    h = _h_used(region, h)
    if shape.kind == "square":
        return (_square_cells(shape, spec.d, h)[0] + 1) ** spec.d
    if shape.kind == "disk":
        _, counts = _disk_rings(shape.size, h)
        return int(np.sum(counts))
    if shape.kind == "polar":
        _, counts = _polar_rings(shape.size, h)
        return int(np.sum(counts))
    n_cells, s = _ball_lattice(shape.size, h)
    # lattice nodes inside the ball plus the projected shell: ~ volume ratio
    return int(((n_cells + 1) ** 3) * 0.65) + 8


# ---------------------------------------------------------------------------
# full-region node generation


def _square_nodes(shape: _EffShape, d: int, h: float) -> np.ndarray:
    n_cells, s = _square_cells(shape, d, h)
    axis = shape.lo + np.arange(n_cells + 1) * s
    axis[-1] = shape.lo + shape.size  # exact upper face
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    return np.column_stack([g.ravel() for g in grids])


def _disk_nodes(rho: float, h: float) -> np.ndarray:
    radii, counts = _disk_rings(rho, h)
    parts = []
    for r, mcount in zip(radii, counts):
        j = np.arange(mcount)
        ang = 2.0 * math.pi * j / mcount
        parts.append(np.column_stack((r * np.cos(ang), r * np.sin(ang))))
    return np.concatenate(parts)


def _polar_nodes(tmax: float, h: float) -> np.ndarray:
    thetas, counts = _polar_rings(tmax, h)
    parts = []
    for th, mcount in zip(thetas, counts):
        j = np.arange(mcount)
        phi = 2.0 * math.pi * j / mcount
        st, ct = math.sin(th), math.cos(th)
        parts.append(np.column_stack((st * np.cos(phi), st * np.sin(phi),
                                      np.full(mcount, ct))))
    return np.concatenate(parts)


def _ball_project(q: np.ndarray, rho: float, s: float) -> np.ndarray:
    """Keep lattice corners in the ball; radially project the near shell."""
    nrm = np.linalg.norm(q, axis=1)
    inside = nrm <= rho
    shell = (~inside) & (nrm <= rho + s * math.sqrt(3.0) / 2.0 + 1e-12)
    kept = [q[inside]]
    if np.any(shell):
        kept.append(q[shell] * (rho / nrm[shell])[:, None])
    return np.concatenate(kept)


def _ball_nodes(rho: float, h: float) -> np.ndarray:
    n_cells, s = _ball_lattice(rho, h)
    axis = -rho + np.arange(n_cells + 1) * s
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    q = np.column_stack((gx.ravel(), gy.ravel(), gz.ravel()))
    return _ball_project(q, rho, s)


def build_grid(spec: ManifoldSpec, region: RegionSpec, h: float,
               node_cap: int = DEFAULT_NODE_CAP) -> EvalGrid:
    """Structured grid over B with certified covering radius <= h.

    Raises :class:`GridError` when the required node count exceeds
    ``node_cap`` (the message reports the count needed).
    """
    if h <= 0.0:
        raise GridError("covering radius h must be > 0")
    if h <= 4.0 * _EDGE_EPS:
        raise GridError(f"h={h} is below the supported resolution")
    est = estimate_node_count(spec, region, h)
    if est > node_cap:
        raise GridError(
            f"grid at h={h} needs ~{est} nodes, above the cap of {node_cap}; "
            f"raise node_cap to at least {est} or coarsen h")
    shape = _effective_shape(spec, region)
    hb = _h_used(region, h)
    if shape.kind == "square":
        nodes = _square_nodes(shape, spec.d, hb)
    elif shape.kind == "disk":
        nodes = _disk_nodes(shape.size, hb)
    elif shape.kind == "polar":
        nodes = _polar_nodes(shape.size, hb)
    else:
        nodes = _ball_nodes(shape.size, hb)
    return EvalGrid(spec=spec, region=region, nodes=nodes, h=float(h))


# ---------------------------------------------------------------------------
# local (refinement) node generation
#
# Contract: refine_nodes(spec, region, centers, reach, h) returns nodes of
# the *same* structured construction at resolution h, restricted to (at
# least) all nodes within geodesic distance `reach` of some center.
# Because the full construction is an h-cover of B, the returned set is an
# h-cover of union(B(c, reach - h)) intersect B.


def _refine_square(shape: _EffShape, d: int, centers: np.ndarray,
                   reach: float, h: float) -> np.ndarray:
    n_cells, s = _square_cells(shape, d, h)
    lo_idx = np.maximum(np.floor((centers - shape.lo - reach) / s), 0).astype(np.int64)
    hi_idx = np.minimum(np.ceil((centers - shape.lo + reach) / s), n_cells).astype(np.int64)
    keys: set[int] = set()
    strides = [(n_cells + 1) ** (d - 1 - ax) for ax in range(d)]
    for lo, hi in zip(lo_idx, hi_idx):
        ranges = [np.arange(lo[ax], hi[ax] + 1) for ax in range(d)]
        mesh = np.meshgrid(*ranges, indexing="ij")
        flat = sum(mesh[ax].ravel() * strides[ax] for ax in range(d))
        keys.update(flat.tolist())
    idx = np.fromiter(keys, dtype=np.int64, count=len(keys))
    idx.sort()
    coords = np.empty((len(idx), d))
    rem = idx
    for ax in range(d):
        q, rem = np.divmod(rem, strides[ax])
        coords[:, ax] = shape.lo + q * s
    # snap the top face exactly, matching the full construction
    top = shape.lo + shape.size
    coords[np.abs(coords - top) < 1e-12] = top
    return coords


def _ring_window(keys: set, ring_idx: int, count: int, center_angle: float,
                 half_width: float, stride: int) -> None:
    if count == 1:
        keys.add(ring_idx * stride)
        return
    step = 2.0 * math.pi / count
    j0 = int(math.floor(center_angle / step))
    w = int(math.ceil(half_width / step)) + 1
    if 2 * w + 1 >= count:
        keys.update(ring_idx * stride + j for j in range(count))
        return
    for dj in range(-w, w + 1):
        keys.add(ring_idx * stride + ((j0 + dj) % count))


def _refine_disk(rho: float, centers: np.ndarray, reach: float,
                 h: float) -> np.ndarray:
    radii, counts = _disk_rings(rho, h)
    stride = int(np.max(counts)) + 1
    c_r = np.linalg.norm(centers, axis=1)
    c_ang = np.mod(np.arctan2(centers[:, 1], centers[:, 0]), 2.0 * math.pi)
    keys: set[int] = set()
    for cr, ca in zip(c_r, c_ang):
        i_lo = np.searchsorted(radii, cr - reach, side="left")
        i_hi = np.searchsorted(radii, cr + reach, side="right") - 1
        for i in range(max(0, i_lo), min(len(radii) - 1, i_hi) + 1):
            r = radii[i]
            if r < 1e-12 or cr < 1e-12:
                _ring_window(keys, i, int(counts[i]), 0.0, math.pi + 1.0, stride)
                continue
            # chord <= reach  ->  angular half width by the law of cosines
            cosw = (r * r + cr * cr - reach * reach) / (2.0 * r * cr)
            if cosw <= -1.0:
                half = math.pi + 1.0
            elif cosw >= 1.0:
                half = 0.0
            else:
                half = math.acos(cosw)
            _ring_window(keys, i, int(counts[i]), ca, half, stride)
    return _emit_ring_nodes(keys, radii, counts, stride, flat=True)


def _refine_polar(tmax: float, centers: np.ndarray, reach: float,
                  h: float) -> np.ndarray:
    thetas, counts = _polar_rings(tmax, h)
    stride = int(np.max(counts)) + 1
    c_th = polar_angle(centers)
    c_ph = np.mod(np.arctan2(centers[:, 1], centers[:, 0]), 2.0 * math.pi)
    cos_reach = math.cos(min(reach, math.pi))
    keys: set[int] = set()
    for ct, cp in zip(c_th, c_ph):
        i_lo = np.searchsorted(thetas, ct - reach, side="left")
        i_hi = np.searchsorted(thetas, ct + reach, side="right") - 1
        for i in range(max(0, i_lo), min(len(thetas) - 1, i_hi) + 1):
            th = thetas[i]
            denom = math.sin(th) * math.sin(ct)
            if denom < 1e-12:
                _ring_window(keys, i, int(counts[i]), 0.0, math.pi + 1.0, stride)
                continue
            cosw = (cos_reach - math.cos(th) * math.cos(ct)) / denom
            if cosw <= -1.0:
                half = math.pi + 1.0
            elif cosw >= 1.0:
                half = 0.0
            else:
                half = math.acos(cosw)
            _ring_window(keys, i, int(counts[i]), cp, half, stride)
    return _emit_ring_nodes(keys, thetas, counts, stride, flat=False)


def _emit_ring_nodes(keys: set, ring_pos: np.ndarray, counts: np.ndarray,
                     stride: int, flat: bool) -> np.ndarray:
    idx = np.fromiter(keys, dtype=np.int64, count=len(keys))
    idx.sort()
    ring = idx // stride
    j = idx - ring * stride
    ang = 2.0 * math.pi * j / counts[ring]
    if flat:
        r = ring_pos[ring]
        return np.column_stack((r * np.cos(ang), r * np.sin(ang)))
    th = ring_pos[ring]
    st = np.sin(th)
    return np.column_stack((st * np.cos(ang), st * np.sin(ang), np.cos(th)))


def _refine_ball(rho: float, centers: np.ndarray, reach: float,
                 h: float) -> np.ndarray:
    n_cells, s = _ball_lattice(rho, h)
    pad = reach + s  # projection can move a corner by up to s*sqrt(3)/2
    lo_idx = np.maximum(np.floor((centers - pad + rho) / s), 0).astype(np.int64)
    hi_idx = np.minimum(np.ceil((centers + pad + rho) / s), n_cells).astype(np.int64)
    keys: set[int] = set()
    stride0 = (n_cells + 1) ** 2
    stride1 = n_cells + 1
    for lo, hi in zip(lo_idx, hi_idx):
        ii = np.arange(lo[0], hi[0] + 1)
        jj = np.arange(lo[1], hi[1] + 1)
        kk = np.arange(lo[2], hi[2] + 1)
        mi, mj, mk = np.meshgrid(ii, jj, kk, indexing="ij")
        keys.update((mi.ravel() * stride0 + mj.ravel() * stride1
                     + mk.ravel()).tolist())
    idx = np.fromiter(keys, dtype=np.int64, count=len(keys))
    idx.sort()
    i0, rem = np.divmod(idx, stride0)
    i1, i2 = np.divmod(rem, stride1)
    q = np.column_stack((-rho + i0 * s, -rho + i1 * s, -rho + i2 * s))
    return _ball_project(q, rho, s)


def refine_nodes(spec: ManifoldSpec, region: RegionSpec, centers: np.ndarray,
                 reach: float, h: float,
                 node_cap: int = DEFAULT_NODE_CAP) -> np.ndarray:
    """Nodes of the resolution-h structured grid near the given centers.

    Returns every node within geodesic distance `reach` of some center
    (possibly a few more).  Under the same contract as :func:`build_grid`,
    the result is an h-cover of {x in B : dist(x, centers) <= reach - h}.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if len(centers) == 0:
        return np.empty((0, spec.m))
    shape = _effective_shape(spec, region)
    hb = _h_used(region, h)
    if shape.kind == "square":
        nodes = _refine_square(shape, spec.d, centers, reach, hb)
    elif shape.kind == "disk":
        nodes = _refine_disk(shape.size, centers, reach, hb)
    elif shape.kind == "polar":
        nodes = _refine_polar(shape.size, centers, reach, hb)
    else:
        nodes = _refine_ball(shape.size, centers, reach, hb)
    if len(nodes) > node_cap:
        raise GridError(f"refinement produced {len(nodes)} nodes, above the "
                        f"cap of {node_cap}")
    return nodes
