import numpy as np
import pytest

from captree import (BuildParams, PointCloud, construct, leaf_index,
                     leaf_indices, load_capt, save_capt)
from captree.geom import dist_sq_points_aabb
from captree.tree import leaf_index_counted

from conftest import leaf_cells, random_cloud

PARAMS = BuildParams(0.01, 0.08)


def cloud_of(*rows):
    return PointCloud(np.asarray(rows, dtype=np.float32))


def test_build_params_validation():
    with pytest.raises(ValueError):
        BuildParams(0.0, 1.0)
    with pytest.raises(ValueError):
        BuildParams(2.0, 1.0)
    with pytest.raises(ValueError):
        BuildParams(1.0, np.inf)


def test_single_point_tree():
    tree = construct(cloud_of([0, 0, 0]), PARAMS)
    assert tree.n == 1
    assert len(tree.tests) == 0
    assert tree.affordance_size(0) == 1
    assert np.array_equal(tree.representative(0), [0, 0, 0])
    box = tree.affordance_box(0)
    assert np.array_equal(box.lo, [0, 0, 0]) and np.array_equal(box.hi, [0, 0, 0])
    assert leaf_index(tree, np.array([5.0, 5.0, 5.0])) == 0


def test_empty_cloud_errors():
    with pytest.raises(ValueError):
        construct(PointCloud(np.empty((0, 3), np.float32)), PARAMS)


def test_far_apart_points_minimal_affordance():
    # split plane passes through the first point at x=0; the far point is
    # 10 m from the left cell (> r_max) but the boundary point itself sits
    # on the closed right cell, so it is afforded there
    tree = construct(cloud_of([0, 0, 0], [10, 0, 0]), BuildParams(0.01, 1.0))
    assert tree.n == 2
    assert tree.affordance_size(0) == 1
    assert tree.affordance_size(1) == 2


def test_close_points_afford_each_other():
    tree = construct(cloud_of([0, 0, 0], [0.5, 0, 0]), BuildParams(0.01, 1.0))
    sets = [set(map(tuple, tree.affordance_set(j))) for j in range(2)]
    both = {(0.0, 0.0, 0.0), (0.5, 0.0, 0.0)}
    assert sets[0] == both and sets[1] == both


def test_two_point_routing():
    tree = construct(cloud_of([0, 0, 0], [10, 0, 0]), BuildParams(0.01, 1.0))
    t0 = float(tree.tests[0])
    assert leaf_index(tree, np.array([t0 - 1.0, 0, 0])) == 0
    assert leaf_index(tree, np.array([t0 + 1.0, 0, 0])) == 1


def test_leaf_routing_consistency(small_tree):
    cloud, tree = small_tree
    cells = leaf_cells(tree)
    rng = np.random.default_rng(0)
    queries = np.concatenate([cloud.as_float64(),
                              rng.uniform(-0.5, 1.5, (500, 3))])
    for x in queries:
        lo, hi = cells[leaf_index(tree, x)]
        assert np.all(lo <= x) and np.all(x <= hi)


def test_leaf_indices_matches_scalar(small_tree):
    _, tree = small_tree
    rng = np.random.default_rng(1)
    xs = rng.uniform(-1, 2, (300, 3))
    vec = leaf_indices(tree, xs)
    assert [leaf_index(tree, x) for x in xs] == list(vec)


def test_descent_step_count_is_depth(small_tree):
    _, tree = small_tree
    rng = np.random.default_rng(2)
    for x in rng.uniform(-1, 2, (100, 3)):
        _, steps = leaf_index_counted(tree, x)
        assert steps == tree.depth == int(np.log2(tree.n))


def test_representatives_partition_cloud(small_tree):
    cloud, tree = small_tree
    reps = [tree.representative(j) for j in range(tree.n)]
    finite = [tuple(r) for r in reps if np.all(np.isfinite(r))]
    assert sorted(finite) == sorted(map(tuple, cloud.points))
    assert len(finite) == len(cloud)


def test_affordance_completeness_and_soundness(small_tree):
    cloud, tree = small_tree
    pts = cloud.as_float64()
    r_max_sq = tree.r_max ** 2
    r_min_sq = tree.r_min ** 2
    for j, (lo, hi) in enumerate(leaf_cells(tree)):
        aset = tree.affordance_set(j).astype(np.float64)
        rep = aset[0]
        have = set(map(tuple, aset))
        if np.all(np.isfinite(rep)):
            corner = np.maximum(np.abs(rep - lo), np.abs(rep - hi))
            if (corner * corner).sum() <= r_min_sq:
                assert len(aset) == 1  # small-cell shortcut fired
                continue
        afforded = dist_sq_points_aabb(pts, lo, hi) <= r_max_sq
        # completeness: everything afforded by the cell is stored
        for p in pts[afforded]:
            assert tuple(p) in have
        # soundness: everything stored (minus the rep) is afforded
        afforded_set = set(map(tuple, pts[afforded]))
        for p in aset[1:]:
            assert tuple(p) in afforded_set
        assert np.array_equal(aset.min(axis=0), tree.affordance_box(j).lo)
        assert np.array_equal(aset.max(axis=0), tree.affordance_box(j).hi)


def test_padding_leaves_route_left():
    # finite queries only pass a +inf test value leftward
    rng = np.random.default_rng(3)
    cloud = random_cloud(rng, 100)  # pads 100 -> 128
    tree = construct(cloud, PARAMS)
    pad_tests = np.isposinf(tree.tests)
    assert pad_tests.any()
    for x in rng.uniform(0, 1, (200, 3)):
        assert np.isfinite(x).all()
        leaf = leaf_index(tree, x)
        rep = tree.representative(leaf)
        # routed leaf may be padding, but only when its cell covers finite
        # space; its affordance set then carries the nearby finite points
        if not np.all(np.isfinite(rep)):
            assert tree.affordance_size(leaf) >= 1


def test_determinism():
    rng = np.random.default_rng(4)
    cloud = random_cloud(rng, 777)
    a = construct(cloud, PARAMS)
    b = construct(cloud, PARAMS)
    assert np.array_equal(a.tests, b.tests)
    assert np.array_equal(a.offsets, b.offsets)
    assert np.array_equal(a.aff_values, b.aff_values)
    assert np.array_equal(a.aff_lo, b.aff_lo) and np.array_equal(a.aff_hi, b.aff_hi)


def test_stats():
    tree = construct(cloud_of([0, 0, 0]), PARAMS)
    s = tree.stats()
    assert s.max_affordance == 1 and s.total_stored == 1

    # widely separated diagonal points: only split-plane boundary points
    # ever cross cells, so sets stay at 1 or 2
    far = PointCloud((np.arange(16)[:, None] * np.array([10.0, 10.0, 10.0])
                      ).astype(np.float32))
    s_far = construct(far, BuildParams(0.01, 1.0)).stats()
    assert s_far.max_affordance <= 2

    # dense cluster: the shortcut caps set sizes vs a shortcut-free build
    rng = np.random.default_rng(5)
    dense = PointCloud(rng.uniform(0, 0.004, (256, 3)).astype(np.float32))
    params = BuildParams(0.01, 0.08)
    with_sc = construct(dense, params).stats()
    without_sc = construct(dense, params, use_rmin_shortcut=False).stats()
    assert with_sc.max_affordance <= without_sc.max_affordance
    assert with_sc.total_stored < without_sc.total_stored


def test_serialization_round_trip(tmp_path, small_tree):
    _, tree = small_tree
    path = tmp_path / "tree.capt"
    save_capt(tree, path)
    loaded = load_capt(path)
    assert loaded.k == tree.k and loaded.n == tree.n
    assert loaded.n_points == tree.n_points
    assert np.array_equal(loaded.tests, tree.tests)
    assert np.array_equal(loaded.offsets, tree.offsets)
    assert np.array_equal(loaded.aff_values, tree.aff_values)
    assert np.float32(loaded.r_min) == np.float32(tree.r_min)
    assert np.float32(loaded.r_max) == np.float32(tree.r_max)


def test_serialization_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.capt"
    bad.write_bytes(b"NOTCAPT!" + b"\x00" * 64)
    with pytest.raises(ValueError):
        load_capt(bad)
    bad.write_bytes(b"\x01")
    with pytest.raises(ValueError):
        load_capt(bad)


def test_generic_dimension_build():
    rng = np.random.default_rng(6)
    pts = rng.uniform(0, 1, (64, 2)).astype(np.float32)
    tree = construct(PointCloud(pts), PARAMS)
    assert tree.k == 2
    cells = leaf_cells(tree)
    for x in rng.uniform(0, 1, (50, 2)):
        lo, hi = cells[leaf_index(tree, x)]
        assert np.all(lo <= x) and np.all(x <= hi)
