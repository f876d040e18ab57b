"""Ground-truth referees and baselines.

Everything here is deliberately simple and computed in float64: a linear
brute-force collision scan, a classical branch-and-bound k-d tree (the
throughput baseline), nearest-neighbor dispersion statistics, and an
independent step-by-step replay of the curve filter.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud
from .geom import Sphere
from .morton import FilterConfig, axis_bits

__all__ = ["DispersionStats", "KdTree", "brute_collides", "brute_collides_many",
           "brute_nearest", "kd_nearest", "dispersion_stats", "filter_oracle"]


def brute_collides(cloud: PointCloud, s: Sphere) -> bool:
    """Linear scan in float64; true iff min distance <= radius."""
    if len(cloud) == 0:
        return False
    d = cloud.as_float64() - s.center
    return bool(((d * d).sum(axis=1) <= s.radius * s.radius).any())


def brute_collides_many(cloud: PointCloud, centers: np.ndarray,
                        radii: np.ndarray) -> np.ndarray:
    """Vectorized brute_collides for many spheres (chunked distance matrix)."""
    centers = np.asarray(centers, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    out = np.zeros(len(centers), dtype=bool)
    if len(cloud) == 0:
        return out
    pts = cloud.as_float64()
    r_sq = radii * radii
    chunk = max(1, int(4e7) // max(1, len(pts)))
    for a in range(0, len(centers), chunk):
        b = min(a + chunk, len(centers))
        d = centers[a:b, None, :] - pts[None, :, :]
        out[a:b] = ((d * d).sum(axis=-1) <= r_sq[a:b, None]).any(axis=1)
    return out


def brute_nearest(cloud: PointCloud, x: np.ndarray) -> tuple[np.ndarray, float]:
    """Exhaustive nearest neighbor; returns (point, distance)."""
    if len(cloud) == 0:
        raise ValueError("empty cloud has no nearest neighbor")
    d = cloud.as_float64() - np.asarray(x, dtype=np.float64)
    d_sq = (d * d).sum(axis=1)
    j = int(np.argmin(d_sq))
    return cloud.points[j].astype(np.float64), float(np.sqrt(d_sq[j]))


class _KdNode:
    __slots__ = ("axis", "t", "left", "right", "point")

    def __init__(self, axis=None, t=None, left=None, right=None, point=None):
        self.axis = axis
        self.t = t
        self.left = left
        self.right = right
        self.point = point


class KdTree:
    """Classical median-split k-d tree with one representative per leaf.

    Used as the sequential throughput baseline; nearest-neighbor search is
    the usual recursive branch-and-bound with backtracking.
    """

    def __init__(self, cloud: PointCloud):
        if len(cloud) == 0:
            raise ValueError("cannot build a k-d tree over an empty cloud")
        self.k = cloud.k
        self.size = len(cloud)
        pts = [tuple(map(float, row)) for row in cloud.as_float64()]
        order = sorted(range(len(pts)))
        self.root = self._build([(pts[i], i) for i in order], 0)

    def _build(self, items, depth):
        if len(items) == 1:
            return _KdNode(point=items[0][0])
        axis = depth % self.k
        items.sort(key=lambda it: (it[0][axis], it[1]))
        half = len(items) // 2
        t = items[half - 1][0][axis]
        return _KdNode(axis=axis, t=t,
                       left=self._build(items[:half], depth + 1),
                       right=self._build(items[half:], depth + 1))

    def _nn(self, node, x, best_sq, best_pt):
        if node.point is not None:
            d = 0.0
            for a, b in zip(x, node.point):
                t = a - b
                d += t * t
            if d < best_sq:
                return d, node.point
            return best_sq, best_pt
        diff = x[node.axis] - node.t
        near, far = (node.left, node.right) if diff <= 0 else (node.right, node.left)
        best_sq, best_pt = self._nn(near, x, best_sq, best_pt)
        if diff * diff < best_sq:
            best_sq, best_pt = self._nn(far, x, best_sq, best_pt)
        return best_sq, best_pt

    def nearest(self, x) -> tuple[np.ndarray, float]:
        x = tuple(map(float, np.asarray(x, dtype=np.float64)))
        d_sq, pt = self._nn(self.root, x, np.inf, None)
        return np.asarray(pt, dtype=np.float64), float(np.sqrt(d_sq))

    def collides(self, s: Sphere) -> bool:
        x = tuple(map(float, s.center))
        d_sq, _ = self._nn(self.root, x, np.inf, None)
        return d_sq <= s.radius * s.radius


def kd_nearest(tree: KdTree, x: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact nearest neighbor via branch-and-bound search."""
    return tree.nearest(x)


@dataclass(frozen=True)
class DispersionStats:
    """Summary of per-point nearest-distinct-neighbor distances (meters)."""

    mean: float
    median: float
    p95: float
    count: int


def dispersion_stats(cloud: PointCloud) -> DispersionStats:
    """Nearest-neighbor proxy for cloud dispersion.

    Requires at least two points; duplicates count as neighbors at
    distance zero.
    """
    if len(cloud) < 2:
        raise ValueError("dispersion needs at least 2 points")
    pts = cloud.as_float64()
    d, _ = cKDTree(pts).query(pts, k=2)
    nn = d[:, 1]
    return DispersionStats(
        mean=float(nn.mean()),
        median=float(np.median(nn)),
        p95=float(np.percentile(nn, 95)),
        count=len(cloud),
    )


def _oracle_morton_key(q, perm, k):
    key = 0
    bits = axis_bits(k)
    for i, axis in enumerate(perm):
        v = q[axis]
        spread = 0
        for b in range(bits):
            spread |= ((v >> b) & 1) << (b * k)
        key |= spread << (k - 1 - i)
    return key


def filter_oracle(cloud: PointCloud, cfg: FilterConfig) -> PointCloud:
    """Independent scalar replay of the curve filter.

    Same pass structure as `morton.filter_cloud` but with per-point Python
    arithmetic throughout; the outputs must agree bit-for-bit.
    """
    rows = list(cloud.points)
    if cfg.base is not None:
        reach_sq = float(cfg.max_reach) * float(cfg.max_reach)
        base = [float(v) for v in cfg.base]
        kept = []
        for row in rows:
            d = 0.0
            for a, b in zip(row, base):
                t = float(a) - b
                d += t * t
            if d <= reach_sq:
                kept.append(row)
        rows = kept
    if not rows:
        return PointCloud(np.empty((0, cloud.k), dtype=np.float32))

    k = cloud.k
    amax = (1 << axis_bits(k)) - 1
    r2 = float(cfg.r_filter) * float(cfg.r_filter)
    all_rows = rows
    idx = list(range(len(rows)))
    anchor_of = {}
    for perm in itertools.permutations(range(k)):
        if len(rows) <= 1:
            break
        lo = [float(min(row[d] for row in rows)) for d in range(k)]
        hi = [float(max(row[d] for row in rows)) for d in range(k)]
        quantized = []
        for row in rows:
            q = []
            for d in range(k):
                span = hi[d] - lo[d]
                if span == 0.0:
                    q.append(0)
                else:
                    q.append(min(int((float(row[d]) - lo[d]) / span * amax), amax))
            quantized.append(tuple(q))
        keys = [_oracle_morton_key(q, perm, k) for q in quantized]
        order = sorted(range(len(rows)), key=lambda j: (keys[j], idx[j]))
        rows = [rows[j] for j in order]
        idx = [idx[j] for j in order]
        kept_rows = [rows[0]]
        kept_idx = [idx[0]]
        last = [float(v) for v in rows[0]]
        last_idx = idx[0]
        for j in range(1, len(rows)):
            cur = [float(v) for v in rows[j]]
            d = 0.0
            for a, b in zip(cur, last):
                t = a - b
                d += t * t
            if d > r2:
                kept_rows.append(rows[j])
                kept_idx.append(idx[j])
                last = cur
                last_idx = idx[j]
            else:
                anchor_of[idx[j]] = last_idx
        rows, idx = kept_rows, kept_idx

    # repair: re-add any removed point whose anchor was removed later and
    # that has no surviving point within r_filter
    surviving = set(idx)
    survivors64 = [[float(v) for v in row] for row in rows]
    for orig in range(len(all_rows)):
        if orig in surviving or anchor_of[orig] in surviving:
            continue
        cur = [float(v) for v in all_rows[orig]]
        orphan = True
        for s in survivors64:
            d = 0.0
            for a, b in zip(cur, s):
                t = a - b
                d += t * t
            if d <= r2:
                orphan = False
                break
        if orphan:
            rows.append(all_rows[orig])
    return PointCloud(np.stack(rows).astype(np.float32))
