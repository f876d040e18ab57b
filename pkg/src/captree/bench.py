"""Benchmark machinery: trace replay, timing protocol, and reports.

Timing protocol: one warm-up pass, then at least three timed repetitions,
reporting the median; per-query nanoseconds are total time divided by the
number of spheres replayed. Timing loops are single-threaded.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .cloud import PointCloud
from .io import QueryTraceRecord
from .oracle import KdTree, brute_collides_many
from .query import DEFAULT_LANE_WIDTH, _scan_leaf, collides_many
from .tree import Capt, leaf_indices

__all__ = ["BenchReport", "VerificationError", "median_time", "capt_verdicts",
           "kd_verdicts", "verify_trace", "oracle_check_trace", "query_phase"]


class VerificationError(Exception):
    """A replayed verdict disagreed with the trace's expected column."""


def median_time(fn, repetitions: int = 3, warmup: int = 1) -> float:
    """Median wall time of `fn` in seconds over timed repetitions."""
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(max(1, repetitions)):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def capt_verdicts(tree: Capt, records: list[QueryTraceRecord],
                  mode: str = "batch", lane_width: int = DEFAULT_LANE_WIDTH,
                  use_aabb_prefilter: bool = True) -> np.ndarray:
    """Per-record any-collision verdicts; scalar and batch modes agree.

    Batch mode runs the lockstep phases (descent, affordance-box rejection)
    over every lane of every record at once, then scans surviving lanes
    with early exit per record, same verdicts as chunking each record
    through `collides_batch`.
    """
    out = np.zeros(len(records), dtype=bool)
    if mode == "batch":
        if not records:
            return out
        centers = np.concatenate(
            [rec.centers for rec in records]).astype(np.float64)
        radii = np.concatenate(
            [rec.radii for rec in records]).astype(np.float64)
        bad = (radii < tree.r_min) | (radii > tree.r_max)
        if bad.any():
            r = float(radii[np.nonzero(bad)[0][0]])
            raise ValueError(f"radius {r} outside the tree's exactness band "
                             f"[{tree.r_min}, {tree.r_max}]")
        leaves = leaf_indices(tree, centers)
        r_sq = radii * radii
        if use_aabb_prefilter:
            lo = tree._aff_lo64[leaves]
            hi = tree._aff_hi64[leaves]
            res = np.maximum(lo - centers, 0.0)
            np.maximum(res, centers - hi, out=res)
            active = (res * res).sum(axis=1) <= r_sq
        else:
            active = np.ones(len(radii), dtype=bool)
        start = 0
        for i, rec in enumerate(records):
            stop = start + len(rec)
            for lane in range(start, stop):
                if active[lane] and _scan_leaf(tree, int(leaves[lane]),
                                               centers[lane],
                                               float(r_sq[lane])):
                    out[i] = True
                    break
            start = stop
    elif mode == "scalar":
        for i, rec in enumerate(records):
            bits = collides_many(tree, rec.centers.astype(np.float64),
                                 rec.radii.astype(np.float64),
                                 use_aabb_prefilter=use_aabb_prefilter)
            out[i] = bool(bits.any())
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return out


def kd_verdicts(kd: KdTree, records: list[QueryTraceRecord]) -> np.ndarray:
    """Sequential branch-and-bound baseline replay (early exit per record)."""
    out = np.zeros(len(records), dtype=bool)
    for i, rec in enumerate(records):
        for c, r in zip(rec.centers, rec.radii):
            x = (float(c[0]), float(c[1]), float(c[2]))
            d_sq, _ = kd._nn(kd.root, x, np.inf, None)
            if d_sq <= float(r) * float(r):
                out[i] = True
                break
    return out


def verify_trace(records: list[QueryTraceRecord], verdicts: np.ndarray) -> None:
    """Raise VerificationError naming the first mismatching batch."""
    for rec, got in zip(records, verdicts):
        if rec.expected is not None and bool(got) != rec.expected:
            raise VerificationError(
                f"batch {rec.batch_id}: expected "
                f"{rec.expected}, got {bool(got)}")


def oracle_check_trace(tree: Capt, cloud: PointCloud,
                       records: list[QueryTraceRecord],
                       use_aabb_prefilter: bool = True) -> int:
    """Brute-force cross-check of every sphere verdict; returns the number
    of spheres checked, raises VerificationError on any disagreement."""
    total = 0
    for rec in records:
        centers = rec.centers.astype(np.float64)
        radii = rec.radii.astype(np.float64)
        fast = collides_many(tree, centers, radii,
                             use_aabb_prefilter=use_aabb_prefilter)
        ref = brute_collides_many(cloud, centers, radii)
        if not np.array_equal(fast, ref):
            lane = int(np.nonzero(fast != ref)[0][0])
            raise VerificationError(
                f"batch {rec.batch_id} lane {lane}: tree says "
                f"{bool(fast[lane])}, brute force says {bool(ref[lane])}")
        total += len(radii)
    return total


@dataclass
class BenchReport:
    """Machine-readable summary of one filter -> build -> query run."""

    name: str
    cloud_size_before: int
    cloud_size_after: int
    n_leaves: int
    max_affordance: int
    mean_affordance: float
    total_stored: int
    memory_bytes: int
    lane_width: int
    mode: str
    n_batches: int
    n_spheres: int
    filter_ms: Optional[float] = None
    build_ms: Optional[float] = None
    query_ns_all: Optional[float] = None
    query_ns_colliding: Optional[float] = None
    query_ns_non_colliding: Optional[float] = None
    baseline_ns_all: Optional[float] = None
    oracle_checked: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), indent=2, **kw)


def query_phase(tree: Capt, records: list[QueryTraceRecord],
                mode: str = "batch", lane_width: int = DEFAULT_LANE_WIDTH,
                use_aabb_prefilter: bool = True,
                repetitions: int = 3) -> dict:
    """Timed replay split into the three workload classes.

    Returns nanoseconds per sphere for all records, colliding-only, and
    non-colliding-only subsets (subsets need the expected column).
    """
    def spheres_in(recs):
        return sum(len(r) for r in recs)

    def time_subset(recs):
        if not recs:
            return None
        t = median_time(
            lambda: capt_verdicts(tree, recs, mode=mode, lane_width=lane_width,
                                  use_aabb_prefilter=use_aabb_prefilter),
            repetitions=repetitions)
        return t * 1e9 / spheres_in(recs)

    colliding = [r for r in records if r.expected is True]
    non_colliding = [r for r in records if r.expected is False]
    return {
        "query_ns_all": time_subset(records),
        "query_ns_colliding": time_subset(colliding),
        "query_ns_non_colliding": time_subset(non_colliding),
    }
