"""Point-cloud downsampling via permuted Z-order curves.

Each pass sorts the surviving points along a Morton curve for one axis
permutation, then does a linear scan keeping a point only if it is more
than r_filter away from the last kept point. Running one pass per axis
permutation (k! of them, lexicographic order) makes curve-adjacency a good
proxy for spatial adjacency.

Quantization contract (pinned; the brute-force replay in `oracle` must
reproduce it bit-for-bit):
  - per pass, each axis of the surviving cloud's own AABB maps affinely
    onto [0, 2^b - 1] with b = min(21, 63 // k) bits; degenerate axes map
    to 0
  - q = floor((p - lo) / (hi - lo) * (2^b - 1)), computed in float64
  - key = interleaved bits, axis perm[0] owning the most significant bit
    of each group
  - sort key ties are broken by original point index
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .cloud import PointCloud
from .geom import Aabb

__all__ = ["MortonKey", "FilterConfig", "axis_bits", "morton_key", "morton_keys",
           "filter_cloud", "reach_filter", "safe_filter_radius"]


def axis_bits(k: int) -> int:
    """Quantized bits per axis; 21 for k <= 3, shrinking so keys fit 63 bits."""
    return min(21, 63 // k)


@dataclass(frozen=True)
class MortonKey:
    """Bit-interleaved quantized coordinates plus the permutation used."""

    key: int
    perm_id: int


@dataclass(frozen=True)
class FilterConfig:
    """Filter radius plus an optional robot-reachability constraint."""

    r_filter: float
    base: Optional[np.ndarray] = None
    max_reach: Optional[float] = None

    def __post_init__(self):
        if not (np.isfinite(self.r_filter) and self.r_filter >= 0):
            raise ValueError(f"r_filter must be >= 0, got {self.r_filter}")
        if (self.base is None) != (self.max_reach is None):
            raise ValueError("base and max_reach must be given together")
        if self.max_reach is not None and not self.max_reach > 0:
            raise ValueError("max_reach must be > 0")
        if self.base is not None:
            b = np.asarray(self.base, dtype=np.float64)
            if not np.all(np.isfinite(b)):
                raise ValueError("reach base must be finite")
            object.__setattr__(self, "base", b)


# 21-bit spread: insert two zero bits between every payload bit.
_SPREAD3_MASKS = (
    (32, 0x1F00000000FFFF),
    (16, 0x1F0000FF0000FF),
    (8, 0x100F00F00F00F00F),
    (4, 0x10C30C30C30C30C3),
    (2, 0x1249249249249249),
)


def _spread3(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.uint64)
    for shift, mask in _SPREAD3_MASKS:
        v = (v | (v << np.uint64(shift))) & np.uint64(mask)
    return v


def _spread_generic(v: np.ndarray, k: int, bits: int) -> np.ndarray:
    out = np.zeros(v.shape, dtype=np.uint64)
    v = v.astype(np.uint64)
    for b in range(bits):
        out |= ((v >> np.uint64(b)) & np.uint64(1)) << np.uint64(b * k)
    return out


def quantize(points: np.ndarray, bounds: Aabb) -> np.ndarray:
    """Affine per-axis quantization of an (m, k) array onto the integer lattice."""
    pts = np.asarray(points, dtype=np.float64)
    k = pts.shape[1]
    amax = (1 << axis_bits(k)) - 1
    lo, hi = bounds.lo, bounds.hi
    span = hi - lo
    degenerate = span == 0.0
    safe_span = np.where(degenerate, 1.0, span)
    frac = (pts - lo) / safe_span
    if np.any(frac < 0.0) or np.any(frac > 1.0):
        raise ValueError("point outside the quantization bounds")
    q = np.floor(frac * amax).astype(np.uint64)
    np.minimum(q, np.uint64(amax), out=q)
    q[:, degenerate] = 0
    return q


def morton_keys(points: np.ndarray, bounds: Aabb,
                perm: Sequence[int]) -> np.ndarray:
    """Morton keys for an (m, k) array; axis perm[0] gets the top payload bit."""
    q = quantize(points, bounds)
    k = q.shape[1]
    bits = axis_bits(k)
    keys = np.zeros(q.shape[0], dtype=np.uint64)
    for i, axis in enumerate(perm):
        if k == 3 and bits == 21:
            spread = _spread3(q[:, axis])
        else:
            spread = _spread_generic(q[:, axis], k, bits)
        keys |= spread << np.uint64(k - 1 - i)
    return keys


def _perm_id(perm: Sequence[int], k: int) -> int:
    perms = list(itertools.permutations(range(k)))
    return perms.index(tuple(perm))


def morton_key(p: np.ndarray, cloud_bounds: Aabb, perm: Sequence[int]) -> MortonKey:
    """Key of a single finite point inside `cloud_bounds` (errors otherwise)."""
    p = np.asarray(p, dtype=np.float64)
    key = int(morton_keys(p[None, :], cloud_bounds, perm)[0])
    return MortonKey(key=key, perm_id=_perm_id(perm, p.shape[0]))


def _gap_scan(pts64: np.ndarray, r_filter: float):
    """Greedy curve scan: keep a point iff it is > r_filter from the last kept.

    Returns (kept, removed, anchors): positions into the sorted order of the
    survivors, of the removed points, and of the kept point each removal was
    measured against. The first point is always kept.
    """
    coords = pts64.tolist()
    r2 = float(r_filter) * float(r_filter)
    kept = [0]
    removed = []
    anchors = []
    last = coords[0]
    last_pos = 0
    for j in range(1, len(coords)):
        c = coords[j]
        d = 0.0
        for a, b in zip(c, last):
            t = a - b
            d += t * t
        if d > r2:
            kept.append(j)
            last = c
            last_pos = j
        else:
            removed.append(j)
            anchors.append(last_pos)
    return (np.asarray(kept, dtype=np.int64),
            np.asarray(removed, dtype=np.int64),
            np.asarray(anchors, dtype=np.int64))


def reach_filter(cloud: PointCloud, base: np.ndarray, max_reach: float) -> PointCloud:
    """Keep exactly the points within `max_reach` of `base` (order preserved)."""
    if not max_reach > 0:
        raise ValueError("max_reach must be > 0")
    if len(cloud) == 0:
        return cloud
    base = np.asarray(base, dtype=np.float64)
    d = cloud.as_float64() - base
    keep = (d * d).sum(axis=1) <= float(max_reach) * float(max_reach)
    return PointCloud(cloud.points[keep])


def filter_cloud(cloud: PointCloud, cfg: FilterConfig) -> PointCloud:
    """Z-order-curve downsampling, one pass per axis permutation.

    Output is a sub-multiset of the input; every removed point has a
    survivor within cfg.r_filter of it. The scan only drops a point when a
    kept one (its anchor) sits within r_filter, but a later pass may drop
    the anchor itself; a final repair step re-adds any removed point whose
    anchor is gone and that has no other survivor in range. Deterministic
    for identical input.
    """
    if cfg.base is not None:
        cloud = reach_filter(cloud, cfg.base, cfg.max_reach)
    pts0 = cloud.points
    if len(pts0) == 0:
        return PointCloud(pts0)
    pts = pts0
    idx = np.arange(len(pts0), dtype=np.int64)
    anchor_of = np.full(len(pts0), -1, dtype=np.int64)
    k = pts0.shape[1]
    for perm in itertools.permutations(range(k)):
        if len(pts) <= 1:
            break
        bounds = Aabb(pts.min(axis=0), pts.max(axis=0))
        keys = morton_keys(pts, bounds, perm)
        order = np.lexsort((idx, keys))
        pts = pts[order]
        idx = idx[order]
        kept, removed, anchors = _gap_scan(pts.astype(np.float64), cfg.r_filter)
        anchor_of[idx[removed]] = idx[anchors]
        pts = pts[kept]
        idx = idx[kept]

    surviving = np.zeros(len(pts0), dtype=bool)
    surviving[idx] = True
    dropped = np.nonzero(~surviving)[0]
    # only points whose anchor was itself dropped can be left without a
    # survivor in range
    candidates = dropped[~surviving[anchor_of[dropped]]]
    if len(candidates):
        surv64 = pts.astype(np.float64)
        r2 = float(cfg.r_filter) * float(cfg.r_filter)
        orphan = np.zeros(len(candidates), dtype=bool)
        chunk = max(1, int(4e7) // max(1, len(surv64)))
        cand64 = pts0[candidates].astype(np.float64)
        for a in range(0, len(candidates), chunk):
            b = min(a + chunk, len(candidates))
            d = cand64[a:b, None, :] - surv64[None, :, :]
            orphan[a:b] = ~((d * d).sum(axis=-1) <= r2).any(axis=1)
        readd = candidates[orphan]
        if len(readd):
            pts = np.concatenate([pts, pts0[readd]], axis=0)
    return PointCloud(pts)


def safe_filter_radius(r_min: float, dispersion: float) -> float:
    """Advisory safe filter radius: r_min minus the cloud's dispersion proxy.

    Not enforced by `filter_cloud`; callers may instead pad query radii by
    r_filter to stay conservative at larger radii.
    """
    return max(0.0, float(r_min) - float(dispersion))
