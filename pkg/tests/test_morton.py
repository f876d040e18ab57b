import itertools

import numpy as np
import pytest

from captree import FilterConfig, PointCloud, filter_cloud, reach_filter
from captree.geom import Aabb
from captree.morton import axis_bits, morton_key, morton_keys

from conftest import random_cloud


def test_key_at_bounds():
    bounds = Aabb(np.array([0.0, -1.0, 2.0]), np.array([1.0, 1.0, 5.0]))
    lo_key = morton_key(bounds.lo, bounds, (0, 1, 2))
    hi_key = morton_key(bounds.hi, bounds, (0, 1, 2))
    assert lo_key.key == 0
    assert hi_key.key == (1 << 63) - 1
    assert lo_key.perm_id == 0


def test_top_payload_bit_follows_first_permuted_axis():
    bounds = Aabb(np.zeros(3), np.ones(3))
    # flip only the most-significant quantized bit of one axis
    lo_half = 0.25  # MSB of the 21-bit lattice clear
    hi_half = 0.75  # MSB set
    for perm in itertools.permutations(range(3)):
        lead = perm[0]
        a = np.full(3, lo_half)
        b = np.full(3, lo_half)
        b[lead] = hi_half
        ka = morton_key(a, bounds, perm).key
        kb = morton_key(b, bounds, perm).key
        assert (ka >> 62) & 1 == 0
        assert (kb >> 62) & 1 == 1


def test_key_outside_bounds_errors():
    bounds = Aabb(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError):
        morton_key(np.array([1.5, 0.0, 0.0]), bounds, (0, 1, 2))


def test_keys_order_follows_axis_significance():
    bounds = Aabb(np.zeros(3), np.ones(3))
    pts = np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0], [1, 0, 0]], dtype=np.float64)
    keys = morton_keys(pts, bounds, (0, 1, 2))
    # axis 0 owns the top bit of each interleave group, then axis 1, then 2
    assert keys[0] < keys[1] < keys[2] < keys[3]


def test_axis_bits():
    assert axis_bits(3) == 21
    assert axis_bits(2) == 21
    assert axis_bits(4) == 15


def test_filter_zero_radius_collapses_duplicates_only():
    pts = np.array([[0, 0, 0], [0, 0, 0], [1, 0, 0], [0.5, 0.5, 0.5]],
                   dtype=np.float32)
    out = filter_cloud(PointCloud(pts), FilterConfig(0.0))
    assert len(out) == 3
    assert {tuple(p) for p in out.points} == {(0, 0, 0), (1, 0, 0), (0.5, 0.5, 0.5)}


def test_filter_pairwise_cull():
    pts = np.array([[0, 0, 0], [1, 0, 0]], dtype=np.float32)
    out = filter_cloud(PointCloud(pts), FilterConfig(2.0))
    assert len(out) == 1


def test_filter_subset_and_gap_bound():
    rng = np.random.default_rng(5)
    cloud = random_cloud(rng, 3000)
    for r_filter in (0.01, 0.05, 0.1):
        out = filter_cloud(cloud, FilterConfig(r_filter))
        kept = {tuple(p) for p in out.points}
        assert kept <= {tuple(p) for p in cloud.points}
        removed = np.array([p for p in cloud.points if tuple(p) not in kept])
        if len(removed) and len(out):
            d = removed[:, None, :].astype(np.float64) - \
                out.points[None, :, :].astype(np.float64)
            gaps = np.sqrt((d * d).sum(-1).min(1))
            assert gaps.max() <= r_filter + 1e-12


def test_filter_survivors_non_increasing_in_radius():
    rng = np.random.default_rng(9)
    cloud = random_cloud(rng, 2000)
    sizes = [len(filter_cloud(cloud, FilterConfig(r)))
             for r in (0.0, 0.01, 0.02, 0.05, 0.1, 0.3)]
    assert sizes == sorted(sizes, reverse=True)


def test_filter_deterministic():
    rng = np.random.default_rng(13)
    cloud = random_cloud(rng, 1500)
    a = filter_cloud(cloud, FilterConfig(0.03))
    b = filter_cloud(cloud, FilterConfig(0.03))
    assert np.array_equal(a.points, b.points)


def test_filter_empty_cloud():
    empty = PointCloud(np.empty((0, 3), dtype=np.float32))
    assert len(filter_cloud(empty, FilterConfig(0.1))) == 0


def test_reach_filter():
    pts = np.array([[0.5, 0, 0], [2, 0, 0], [0, 1, 0]], dtype=np.float32)
    cloud = PointCloud(pts)
    out = reach_filter(cloud, np.zeros(3), 1.0)
    # boundary point at distance exactly 1 is retained
    assert np.array_equal(out.points, pts[[0, 2]])
    assert len(reach_filter(cloud, np.zeros(3), 10.0)) == 3


def test_reach_filter_matches_brute_force():
    rng = np.random.default_rng(21)
    cloud = random_cloud(rng, 500, lo=-1, hi=1)
    base = np.array([0.1, -0.2, 0.3])
    out = reach_filter(cloud, base, 0.7)
    d = np.sqrt(((cloud.as_float64() - base) ** 2).sum(1))
    assert np.array_equal(out.points, cloud.points[d <= 0.7])


def test_filter_applies_reach_prefilter():
    rng = np.random.default_rng(2)
    cloud = random_cloud(rng, 400, lo=-2, hi=2)
    cfg = FilterConfig(0.05, base=np.zeros(3), max_reach=1.0)
    out = filter_cloud(cloud, cfg)
    d = np.sqrt((out.points.astype(np.float64) ** 2).sum(1))
    assert (d <= 1.0).all()


def test_filter_config_validation():
    with pytest.raises(ValueError):
        FilterConfig(-0.1)
    with pytest.raises(ValueError):
        FilterConfig(0.1, base=np.zeros(3))
    with pytest.raises(ValueError):
        FilterConfig(0.1, base=np.zeros(3), max_reach=0.0)
