"""Synthetic clouds and query workloads for tests and benchmarks.

Cloud kinds: uniform cube volumes, regular grids, box surfaces, and a
shelf-like arrangement of planar panels. Workload generators produce the
three benchmark classes (all-colliding, non-colliding, mixed) with labels
guaranteed by construction; benchmarks re-verify them against the oracle
before timing.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud
from .io import QueryTraceRecord
from .tree import BuildParams

__all__ = ["CLOUD_KINDS", "WORKLOADS", "gen_cloud", "gen_queries"]

CLOUD_KINDS = ("cube", "grid", "box", "shelf")
WORKLOADS = ("colliding", "non-colliding", "mixed")


def _cube(n, rng, side):
    return rng.uniform(0.0, side, size=(n, 3))


def _grid(n, rng, side):
    per_axis = max(2, round(n ** (1 / 3)))
    axis = np.linspace(0.0, side, per_axis)
    pts = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1)
    return pts.reshape(-1, 3)


def _sample_rects(rects, n, rng):
    """Sample n points over a list of (origin, u, v) rectangles by area."""
    areas = np.array([np.linalg.norm(np.cross(u, v)) for _, u, v in rects])
    counts = rng.multinomial(n, areas / areas.sum())
    chunks = []
    for (origin, u, v), m in zip(rects, counts):
        if m == 0:
            continue
        a = rng.uniform(size=(m, 1))
        b = rng.uniform(size=(m, 1))
        chunks.append(origin + a * u + b * v)
    return np.concatenate(chunks, axis=0)


def _box_rects(lo, hi):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    d = hi - lo
    ex, ey, ez = np.diag(d)
    return [
        (lo, ex, ey), (lo + ez, ex, ey),          # bottom, top (z faces)
        (lo, ex, ez), (lo + ey, ex, ez),          # front, back (y faces)
        (lo, ey, ez), (lo + ex, ey, ez),          # left, right (x faces)
    ]


def _box(n, rng, side):
    return _sample_rects(_box_rects([0, 0, 0], [side, side, side]), n, rng)


def _shelf(n, rng, width=1.0, depth=0.4, height=2.0, boards=4):
    ex = np.array([width, 0.0, 0.0])
    ey = np.array([0.0, depth, 0.0])
    ez = np.array([0.0, 0.0, height])
    o = np.zeros(3)
    rects = [
        (o + ey, ex, ez),             # back panel
        (o, ey, ez), (o + ex, ey, ez),  # sides
        (o, ex, ey), (o + ez, ex, ey),  # bottom, top
    ]
    for i in range(1, boards + 1):
        z = height * i / (boards + 1)
        rects.append((o + np.array([0.0, 0.0, z]), ex, ey))
    return _sample_rects(rects, n, rng)


def gen_cloud(kind: str, n: int, seed: int = 0, **kw) -> PointCloud:
    """Deterministic synthetic cloud of (approximately, for grids) n points."""
    rng = np.random.default_rng(seed)
    if kind == "cube":
        pts = _cube(n, rng, kw.get("side", 1.0))
    elif kind == "grid":
        pts = _grid(n, rng, kw.get("side", 1.0))
    elif kind == "box":
        pts = _box(n, rng, kw.get("side", 1.0))
    elif kind == "shelf":
        pts = _shelf(n, rng, **{k: v for k, v in kw.items()
                                if k in ("width", "depth", "height", "boards")})
    else:
        raise ValueError(f"unknown cloud kind {kind!r}; choose from {CLOUD_KINDS}")
    return PointCloud(pts.astype(np.float32))


def _legal_radii(params, count, rng):
    # stay slightly inside the band so float32 trace round-trips remain legal
    return rng.uniform(params.r_min * (1 + 1e-4), params.r_max * (1 - 1e-4),
                       size=count)


def _colliding_spheres(cloud, params, count, rng):
    pts = cloud.as_float64()
    idx = rng.integers(0, len(pts), size=count)
    radii = _legal_radii(params, count, rng)
    direction = rng.normal(size=(count, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    offset = direction * (rng.uniform(0.0, 0.9, size=count) * radii)[:, None]
    return pts[idx] + offset, radii


def _non_colliding_spheres(cloud, params, count, rng, kd=None):
    pts = cloud.as_float64()
    if kd is None:
        kd = cKDTree(pts)
    lo = pts.min(axis=0) - 3.0 * params.r_max
    hi = pts.max(axis=0) + 3.0 * params.r_max
    min_clear = params.r_max * (1.0 + 1e-6) + 1e-9
    centers = np.empty((count, 3))
    have = 0
    while have < count:
        cand = rng.uniform(lo, hi, size=(max(count - have, 64) * 2, 3))
        d, _ = kd.query(cand)
        good = cand[d > min_clear]
        take = min(len(good), count - have)
        centers[have:have + take] = good[:take]
        have += take
    radii = _legal_radii(params, count, rng)
    return centers, radii


def gen_queries(cloud: PointCloud, params: BuildParams, count: int,
                workload: str = "mixed", batch_size: int = 8,
                mix=(1, 1, 1), seed: int = 0) -> list[QueryTraceRecord]:
    """Trace of `count` spheres grouped into batches of `batch_size`.

    Workloads: "colliding" (every sphere collides), "non-colliding" (no
    sphere collides), "mixed" (batches drawn as all-colliding,
    non-colliding, or partially colliding in the given ratio). Each
    record's expected flag is the OR over its lanes, true by construction.
    """
    if workload not in WORKLOADS:
        raise ValueError(f"unknown workload {workload!r}; choose from {WORKLOADS}")
    rng = np.random.default_rng(seed)
    n_batches = (count + batch_size - 1) // batch_size
    kd = cKDTree(cloud.as_float64()) if len(cloud) else None
    records = []
    mix = np.asarray(mix, dtype=float)
    remaining = count
    for b in range(n_batches):
        m = min(batch_size, remaining)
        remaining -= m
        if workload == "colliding":
            kind = "all"
        elif workload == "non-colliding":
            kind = "none"
        else:
            kind = ("all", "none", "partial")[rng.choice(3, p=mix / mix.sum())]
        if kind == "all":
            centers, radii = _colliding_spheres(cloud, params, m, rng)
            expected = True
        elif kind == "none":
            centers, radii = _non_colliding_spheres(cloud, params, m, rng, kd)
            expected = False
        else:
            n_hit = int(rng.integers(1, m)) if m > 1 else 1
            hit_c, hit_r = _colliding_spheres(cloud, params, n_hit, rng)
            miss_c, miss_r = _non_colliding_spheres(cloud, params, m - n_hit,
                                                    rng, kd)
            centers = np.concatenate([hit_c, miss_c], axis=0)
            radii = np.concatenate([hit_r, miss_r])
            perm = rng.permutation(m)
            centers, radii = centers[perm], radii[perm]
            expected = True
        records.append(QueryTraceRecord(
            batch_id=b,
            centers=centers.astype(np.float32),
            radii=radii.astype(np.float32),
            expected=expected,
        ))
    return records
