"""Construction and storage of the collision-affording point tree.

The tree is implicit: a test array in Eytzinger layout (node i splits on
axis depth(i) mod k, children at 2i+1 / 2i+2), one bounding box per leaf
over that leaf's affordance set, and a ragged affordance table stored as
one contiguous buffer plus offsets. Clouds are padded with infinity points
to the next power of two; padding leaves carry the empty-at-infinity box
and therefore reject every finite query sphere.

Conventions (fixed so builds are bit-reproducible):
  - the split value is the coordinate of the rank-(m/2 - 1) element, found
    with numpy's introselect; the first m/2 elements after partitioning go
    left, ties landing on either side
  - routing is x_d > T_i -> right; a tied duplicate routed right sits at
    distance zero from the left cell and is always afforded, so queries
    stay exact
  - a subtree of all-padding points gets test value +inf, so finite
    queries always route left past padding
  - the root cell is all of R^k (never clamped to the cloud AABB)
  - affordance coordinates are stored grouped by axis within each set
    (all x's, then y's, ...) to keep distance scans contiguous
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud
from .geom import Aabb, dist_sq_points_aabb

__all__ = ["BuildParams", "BuildStats", "Capt", "construct",
           "leaf_index", "leaf_index_counted", "leaf_indices",
           "save_capt", "load_capt"]

MAGIC = b"CAPT0001"


@dataclass(frozen=True)
class BuildParams:
    """Query radius band the tree is built for."""

    r_min: float
    r_max: float

    def __post_init__(self):
        if not (np.isfinite(self.r_min) and np.isfinite(self.r_max)):
            raise ValueError("r_min and r_max must be finite")
        if not (0 < self.r_min <= self.r_max):
            raise ValueError(f"need 0 < r_min <= r_max, got ({self.r_min}, {self.r_max})")


@dataclass(frozen=True)
class BuildStats:
    """Size and memory summary of a built tree."""

    n_leaves: int
    n_points: int
    max_affordance: int
    mean_affordance: float
    total_stored: int
    memory_bytes: int


class Capt:
    """Immutable collision-affording point tree.

    Safe to share read-only across any number of concurrent query threads.
    """

    def __init__(self, k: int, n_points: int, r_min: float, r_max: float,
                 tests: np.ndarray, aff_lo: np.ndarray, aff_hi: np.ndarray,
                 offsets: np.ndarray, aff_values: np.ndarray):
        n = len(tests) + 1
        if n & (n - 1):
            raise ValueError(f"leaf count {n} is not a power of two")
        if aff_lo.shape != (n, k) or aff_hi.shape != (n, k):
            raise ValueError("affordance box arrays have wrong shape")
        if offsets.shape != (n + 1,):
            raise ValueError("offsets array has wrong shape")
        self.k = int(k)
        self.n = int(n)
        self.n_points = int(n_points)
        self.r_min = float(r_min)
        self.r_max = float(r_max)
        self.tests = np.ascontiguousarray(tests, dtype=np.float32)
        self.aff_lo = np.ascontiguousarray(aff_lo, dtype=np.float32)
        self.aff_hi = np.ascontiguousarray(aff_hi, dtype=np.float32)
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        self.aff_values = np.ascontiguousarray(aff_values, dtype=np.float32)
        self.depth = int(self.n).bit_length() - 1  # log2(n) descent steps
        # float64 copies for the hot query path (exact upcasts)
        self._tests64 = self.tests.astype(np.float64)
        self._aff_lo64 = self.aff_lo.astype(np.float64)
        self._aff_hi64 = self.aff_hi.astype(np.float64)

    def affordance_set(self, j: int) -> np.ndarray:
        """Affordance points of leaf j as an (m, k) float32 array.

        The leaf's representative point is always row 0.
        """
        a, b = self.offsets[j], self.offsets[j + 1]
        return self.aff_values[a * self.k : b * self.k].reshape(self.k, b - a).T

    def affordance_size(self, j: int) -> int:
        return int(self.offsets[j + 1] - self.offsets[j])

    def affordance_box(self, j: int) -> Aabb:
        return Aabb(self.aff_lo[j].astype(np.float64),
                    self.aff_hi[j].astype(np.float64))

    def representative(self, j: int) -> np.ndarray:
        return self.affordance_set(j)[0]

    def stats(self) -> BuildStats:
        sizes = np.diff(self.offsets)
        mem = (self.tests.nbytes + self.aff_lo.nbytes + self.aff_hi.nbytes
               + self.offsets.nbytes + self.aff_values.nbytes)
        return BuildStats(
            n_leaves=self.n,
            n_points=self.n_points,
            max_affordance=int(sizes.max()),
            mean_affordance=float(sizes.mean()),
            total_stored=int(sizes.sum()),
            memory_bytes=int(mem),
        )

    def __repr__(self) -> str:
        return (f"Capt(k={self.k}, n={self.n}, points={self.n_points}, "
                f"r_min={self.r_min}, r_max={self.r_max})")


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def construct(cloud: PointCloud, params: BuildParams,
              use_rmin_shortcut: bool = True) -> Capt:
    """Build a tree over `cloud` valid for query radii in [r_min, r_max].

    `use_rmin_shortcut=False` disables the small-cell pruning (useful for
    verifying that the shortcut never changes query verdicts).
    """
    n0 = len(cloud)
    if n0 == 0:
        raise ValueError("cannot build a tree over an empty cloud")
    k = cloud.k
    n = _next_pow2(n0)
    work = np.full((n, k), np.inf, dtype=np.float64)
    work[:n0] = cloud.as_float64()
    finite = np.zeros(n, dtype=bool)
    finite[:n0] = True

    tests = np.full(max(n - 1, 0), np.inf, dtype=np.float32)
    leaf_sets: list[np.ndarray] = [None] * n  # (m, k) float64, rep first
    leaf_lo = np.empty((n, k), dtype=np.float64)
    leaf_hi = np.empty((n, k), dtype=np.float64)
    r_min_sq = float(params.r_min) ** 2
    r_max_sq = float(params.r_max) ** 2
    inf_row = np.full((1, k), np.inf, dtype=np.float64)

    def emit_leaf(leaf: int, rep_idx: int, cell_lo: np.ndarray,
                  cell_hi: np.ndarray, z: np.ndarray) -> None:
        if not finite[rep_idx]:
            # A padding leaf can still own finite space (its cell is cut by
            # finite split walls), so it keeps the afforded candidates; the
            # small-cell shortcut can never fire for an infinite rep.
            if len(z):
                pset = np.concatenate([inf_row, z], axis=0)
            else:
                pset = inf_row
            leaf_sets[leaf] = pset
            leaf_lo[leaf] = pset.min(axis=0)
            leaf_hi[leaf] = pset.max(axis=0)
            return
        rep = work[rep_idx]
        corner = np.maximum(np.abs(rep - cell_lo), np.abs(rep - cell_hi))
        if use_rmin_shortcut and float((corner * corner).sum()) <= r_min_sq:
            pset = rep[None, :]
        elif len(z):
            pset = np.concatenate([rep[None, :], z], axis=0)
        else:
            pset = rep[None, :]
        leaf_sets[leaf] = pset
        leaf_lo[leaf] = pset.min(axis=0)
        leaf_hi[leaf] = pset.max(axis=0)

    def build(idx: np.ndarray, cell_lo: np.ndarray, cell_hi: np.ndarray,
              z: np.ndarray, node: int, depth: int) -> None:
        m = len(idx)
        if m == 1:
            emit_leaf(node - (n - 1), idx[0], cell_lo, cell_hi, z)
            return
        d = depth % k
        coords = work[idx, d]
        half = m // 2
        part = np.argpartition(coords, half - 1)
        t = coords[part[half - 1]]
        tests[node] = np.float32(t)
        left, right = idx[part[:half]], idx[part[half:]]

        lo1, hi1 = cell_lo, cell_hi.copy()
        hi1[d] = t
        lo2, hi2 = cell_lo.copy(), cell_hi
        lo2[d] = t

        def afforded(cand: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
            if not len(cand):
                return cand
            keep = dist_sq_points_aabb(cand, lo, hi) <= r_max_sq
            return cand[keep]

        b2 = work[right[finite[right]]]
        b1 = work[left[finite[left]]]
        z1 = afforded(np.concatenate([z, b2], axis=0) if len(z) else b2, lo1, hi1)
        z2 = afforded(np.concatenate([z, b1], axis=0) if len(z) else b1, lo2, hi2)
        build(left, lo1, hi1, z1, 2 * node + 1, depth + 1)
        build(right, lo2, hi2, z2, 2 * node + 2, depth + 1)

    root_lo = np.full(k, -np.inf)
    root_hi = np.full(k, np.inf)
    empty = np.empty((0, k), dtype=np.float64)
    if n == 1:
        emit_leaf(0, 0, root_lo, root_hi, empty)
    else:
        build(np.arange(n, dtype=np.int64), root_lo, root_hi, empty, 0, 0)

    sizes = np.array([len(s) for s in leaf_sets], dtype=np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    values = np.empty(int(offsets[-1]) * k, dtype=np.float32)
    for j, pset in enumerate(leaf_sets):
        a, b = offsets[j], offsets[j + 1]
        values[a * k : b * k] = pset.T.astype(np.float32).ravel()

    return Capt(k=k, n_points=n0, r_min=params.r_min, r_max=params.r_max,
                tests=tests, aff_lo=leaf_lo.astype(np.float32),
                aff_hi=leaf_hi.astype(np.float32),
                offsets=offsets, aff_values=values)


def leaf_index(tree: Capt, x: np.ndarray) -> int:
    """Branch-free descent: exactly log2(n) steps, returns a leaf in [0, n)."""
    x = np.asarray(x, dtype=np.float64)
    t = tree._tests64
    i = 0
    for step in range(tree.depth):
        i = 2 * i + 1 + int(x[step % tree.k] > t[i])
    return i - (tree.n - 1)


def leaf_index_counted(tree: Capt, x: np.ndarray) -> tuple[int, int]:
    """As `leaf_index` but also reports the number of descent steps taken."""
    x = np.asarray(x, dtype=np.float64)
    t = tree._tests64
    i = 0
    steps = 0
    for step in range(tree.depth):
        i = 2 * i + 1 + int(x[step % tree.k] > t[i])
        steps += 1
    return i - (tree.n - 1), steps


def leaf_indices(tree: Capt, centers: np.ndarray) -> np.ndarray:
    """Vectorized descent for an (m, k) array of query centers."""
    centers = np.asarray(centers, dtype=np.float64)
    t = tree._tests64
    i = np.zeros(len(centers), dtype=np.int64)
    for step in range(tree.depth):
        i = 2 * i + 1 + (centers[:, step % tree.k] > t[i])
    return i - (tree.n - 1)


_HEADER = struct.Struct("<8sIQQff")


def save_capt(tree: Capt, path) -> None:
    """Versioned little-endian binary dump (32-bit floats)."""
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, tree.k, tree.n, tree.n_points,
                             np.float32(tree.r_min), np.float32(tree.r_max)))
        f.write(tree.tests.astype("<f4").tobytes())
        f.write(tree.aff_lo.astype("<f4").tobytes())
        f.write(tree.aff_hi.astype("<f4").tobytes())
        f.write(tree.offsets.astype("<i8").tobytes())
        f.write(tree.aff_values.astype("<f4").tobytes())


def load_capt(path) -> Capt:
    """Inverse of `save_capt`; validates magic and array sizes."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated tree dump")
    magic, k, n, n_points, r_min, r_max = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}; not a tree dump")
    pos = _HEADER.size

    def take(dtype, count):
        nonlocal pos
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
        pos += arr.nbytes
        return arr

    try:
        tests = take("<f4", n - 1)
        aff_lo = take("<f4", n * k).reshape(n, k)
        aff_hi = take("<f4", n * k).reshape(n, k)
        offsets = take("<i8", n + 1).astype(np.int64)
        values = take("<f4", int(offsets[-1]) * k)
    except ValueError as exc:
        raise ValueError(f"corrupt tree dump: {exc}") from exc
    if pos != len(raw):
        raise ValueError("trailing bytes in tree dump")
    return Capt(k=k, n_points=n_points, r_min=float(r_min), r_max=float(r_max),
                tests=tests, aff_lo=aff_lo, aff_hi=aff_hi,
                offsets=offsets, aff_values=values)
