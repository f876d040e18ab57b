import numpy as np
import pytest

from captree import BuildParams, PointCloud, construct


def random_cloud(rng, n, lo=0.0, hi=1.0):
    return PointCloud(rng.uniform(lo, hi, size=(n, 3)).astype(np.float32))


def leaf_cells(tree):
    """Reconstruct every leaf's cell from the test array by replaying the
    split walls top-down. Independent of the construction bookkeeping."""
    n, k = tree.n, tree.k
    t = tree.tests.astype(np.float64)
    cells = [None] * n

    def walk(node, lo, hi, depth):
        if node >= n - 1:
            cells[node - (n - 1)] = (lo, hi)
            return
        d = depth % k
        hi1 = hi.copy()
        hi1[d] = t[node]
        lo2 = lo.copy()
        lo2[d] = t[node]
        walk(2 * node + 1, lo, hi1, depth + 1)
        walk(2 * node + 2, lo2, hi, depth + 1)

    walk(0, np.full(k, -np.inf), np.full(k, np.inf), 0)
    return cells


@pytest.fixture
def small_tree():
    rng = np.random.default_rng(42)
    cloud = random_cloud(rng, 200)
    return cloud, construct(cloud, BuildParams(0.01, 0.08))
