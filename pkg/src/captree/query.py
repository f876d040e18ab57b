"""Collision checking against a built tree.

The scalar path descends to the query's leaf, rejects via the leaf's
affordance bounding box, then scans the affordance set. The batched path
evaluates a fixed-width group of spheres in lockstep with per-lane
validity masking; it is observationally equivalent to running the scalar
path on every valid lane.

Exactness holds only for radii in [r_min, r_max]; out-of-band radii raise
rather than silently returning an unsound answer (`collides_unchecked`
skips that guard for benchmarking).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geom import Sphere
from .tree import Capt, leaf_index, leaf_indices

__all__ = ["SphereBatch", "QueryOutcome", "collides", "collides_unchecked",
           "collides_batch", "collides_any", "collides_many"]

DEFAULT_LANE_WIDTH = 8


def _check_radius(tree: Capt, r: float) -> None:
    if not (tree.r_min <= r <= tree.r_max):
        raise ValueError(
            f"radius {r} outside the tree's exactness band "
            f"[{tree.r_min}, {tree.r_max}]")


@dataclass
class SphereBatch:
    """Fixed-width group of query spheres with a per-lane validity mask.

    Centers are stored as an (L, k) array, radii as (L,). L must be a
    power of two. Invalid lanes may hold arbitrary finite data.
    """

    centers: np.ndarray
    radii: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.float64)
        self.radii = np.asarray(self.radii, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=bool)
        L = self.centers.shape[0]
        if L == 0 or L & (L - 1):
            raise ValueError(f"lane width {L} is not a power of two")
        if self.radii.shape != (L,) or self.mask.shape != (L,):
            raise ValueError("centers, radii, and mask lengths disagree")

    @property
    def width(self) -> int:
        return self.centers.shape[0]

    @classmethod
    def from_spheres(cls, spheres: Sequence[Sphere],
                     lane_width: int = DEFAULT_LANE_WIDTH) -> "SphereBatch":
        """Pack up to `lane_width` spheres; missing lanes copy the first
        sphere's data with a cleared mask so no NaN/inf enters comparisons."""
        if not spheres or len(spheres) > lane_width:
            raise ValueError("need 1..lane_width spheres")
        first = spheres[0]
        centers = np.tile(first.center, (lane_width, 1))
        radii = np.full(lane_width, first.radius, dtype=np.float64)
        mask = np.zeros(lane_width, dtype=bool)
        for i, s in enumerate(spheres):
            centers[i] = s.center
            radii[i] = s.radius
            mask[i] = True
        return cls(centers, radii, mask)


@dataclass
class QueryOutcome:
    """Result of a batched query.

    any_collision is the OR over valid lanes. lane_bits is only populated
    when requested (and then matches the scalar path lane-by-lane).
    Counters are None unless stats collection was enabled.
    """

    any_collision: bool
    lane_bits: Optional[np.ndarray] = None
    aabb_rejections: Optional[int] = None
    points_scanned: Optional[int] = None


def _scan_leaf(tree: Capt, leaf: int, center: np.ndarray, r_sq: float) -> bool:
    pts = tree.affordance_set(leaf).astype(np.float64)
    d = pts - center
    return bool(((d * d).sum(axis=1) <= r_sq).any())


def collides_unchecked(tree: Capt, s: Sphere,
                       use_aabb_prefilter: bool = True) -> bool:
    """Scalar collision check without the radius-band guard."""
    c = s.center
    r_sq = s.radius * s.radius
    leaf = leaf_index(tree, c)
    if use_aabb_prefilter:
        lo, hi = tree._aff_lo64[leaf], tree._aff_hi64[leaf]
        res = np.maximum(lo - c, 0.0)
        np.maximum(res, c - hi, out=res)
        if float((res * res).sum()) > r_sq:
            return False
    return _scan_leaf(tree, leaf, c, r_sq)


def collides(tree: Capt, s: Sphere, use_aabb_prefilter: bool = True) -> bool:
    """True iff some cloud point lies within s.radius of s.center (exact).

    Requires r_min <= s.radius <= r_max; tangency counts as collision.
    """
    _check_radius(tree, s.radius)
    return collides_unchecked(tree, s, use_aabb_prefilter=use_aabb_prefilter)


def collides_batch(tree: Capt, batch: SphereBatch,
                   use_aabb_prefilter: bool = True,
                   want_lane_bits: bool = False,
                   collect_stats: bool = False) -> QueryOutcome:
    """Evaluate all valid lanes of `batch` in lockstep.

    Lanes rejected by the affordance-box pre-filter are masked out of the
    affordance scans; if every lane is rejected no set is scanned at all.
    Without `want_lane_bits` the scan stops at the first colliding lane.
    """
    for r in batch.radii[batch.mask]:
        _check_radius(tree, float(r))
    leaves = leaf_indices(tree, batch.centers)
    r_sq = batch.radii * batch.radii
    active = batch.mask.copy()
    rejections = 0
    scanned = 0
    if use_aabb_prefilter and active.any():
        lo = tree._aff_lo64[leaves]
        hi = tree._aff_hi64[leaves]
        res = np.maximum(lo - batch.centers, 0.0)
        np.maximum(res, batch.centers - hi, out=res)
        box_hit = (res * res).sum(axis=1) <= r_sq
        rejections = int((active & ~box_hit).sum())
        active &= box_hit

    bits = np.zeros(batch.width, dtype=bool)
    for lane in np.nonzero(active)[0]:
        if collect_stats:
            scanned += tree.affordance_size(int(leaves[lane]))
        hit = _scan_leaf(tree, int(leaves[lane]), batch.centers[lane],
                         float(r_sq[lane]))
        bits[lane] = hit
        if hit and not want_lane_bits:
            break

    return QueryOutcome(
        any_collision=bool(bits.any()),
        lane_bits=bits if want_lane_bits else None,
        aabb_rejections=rejections if collect_stats else None,
        points_scanned=scanned if collect_stats else None,
    )


def collides_any(tree: Capt, spheres: Sequence[Sphere],
                 lane_width: int = DEFAULT_LANE_WIDTH,
                 use_aabb_prefilter: bool = True) -> bool:
    """OR of `collides` over a sphere list, chunked into batches with
    early termination on the first colliding batch."""
    for start in range(0, len(spheres), lane_width):
        chunk = spheres[start:start + lane_width]
        batch = SphereBatch.from_spheres(chunk, lane_width=lane_width)
        if collides_batch(tree, batch,
                          use_aabb_prefilter=use_aabb_prefilter).any_collision:
            return True
    return False


def collides_many(tree: Capt, centers: np.ndarray, radii: np.ndarray,
                  use_aabb_prefilter: bool = True,
                  check_radii: bool = True) -> np.ndarray:
    """Bulk scalar semantics: verdict[i] == collides(tree, Sphere(c_i, r_i)).

    Spheres are grouped by target leaf so each affordance set is scanned
    once as a dense distance matrix.
    """
    centers = np.asarray(centers, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    if check_radii:
        bad = (radii < tree.r_min) | (radii > tree.r_max)
        if bad.any():
            _check_radius(tree, float(radii[np.nonzero(bad)[0][0]]))
    leaves = leaf_indices(tree, centers)
    r_sq = radii * radii
    out = np.zeros(len(centers), dtype=bool)
    candidates = np.arange(len(centers))
    if use_aabb_prefilter:
        lo = tree._aff_lo64[leaves]
        hi = tree._aff_hi64[leaves]
        res = np.maximum(lo - centers, 0.0)
        np.maximum(res, centers - hi, out=res)
        keep = (res * res).sum(axis=1) <= r_sq
        candidates = candidates[keep]
    order = np.argsort(leaves[candidates], kind="stable")
    candidates = candidates[order]
    grouped = np.split(candidates,
                       np.nonzero(np.diff(leaves[candidates]))[0] + 1) \
        if len(candidates) else []
    for group in grouped:
        pts = tree.affordance_set(int(leaves[group[0]])).astype(np.float64)
        d = centers[group][:, None, :] - pts[None, :, :]
        hits = ((d * d).sum(axis=-1) <= r_sq[group][:, None]).any(axis=1)
        out[group] = hits
    return out
