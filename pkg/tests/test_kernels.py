import numpy as np
import pytest

from hsplit import _kernels_py as py
from hsplit import kernels

compiled = pytest.importorskip("hsplit._kernels")


def _ball_points(rng, n, dim=3, radius=0.95):
    u = rng.standard_normal((n, dim))
    u /= np.linalg.norm(u, axis=1)[:, None]
    return np.ascontiguousarray(u * radius * rng.random((n, 1)))


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("seed", range(5))
def test_scalar_kernels_agree(seed):
    rng = np.random.default_rng(seed)
    a, b = _ball_points(rng, 2)
    lam = float(rng.random())
    assert compiled.euclid_dist(a, b) == pytest.approx(py.euclid_dist(a, b), rel=1e-14)
    assert compiled.poincare_dist(a, b) == pytest.approx(py.poincare_dist(a, b), rel=1e-12)
    np.testing.assert_allclose(compiled.mobius_add(a, b), py.mobius_add(a, b), rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(compiled.poincare_geodesic(a, b, lam),
                               py.poincare_geodesic(a, b, lam), rtol=1e-12, atol=1e-14)


def test_pairwise_kernels_agree(rng):
    A = _ball_points(rng, 7)
    B = _ball_points(rng, 5)
    np.testing.assert_allclose(compiled.pairwise_sq_euclid(A, B), py.pairwise_sq_euclid(A, B),
                               rtol=1e-13)
    np.testing.assert_allclose(compiled.pairwise_sq_poincare(A, B),
                               py.pairwise_sq_poincare(A, B), rtol=1e-11)


def test_tree_kernels_agree(rng):
    from conftest import random_tree
    from hsplit.oracle import TreeRegion, sample_point
    tree = random_tree(4)
    pts = [sample_point(tree, TreeRegion(), rng) for _ in range(30)]
    A = tree.pack(pts[:17])
    B = tree.pack(pts[17:])
    np.testing.assert_allclose(compiled.pairwise_sq_tree(*A, *B, tree.D),
                               py.pairwise_sq_tree(*A, *B, tree.D), rtol=1e-14)
    for p in pts[:5]:
        for q in pts[5:10]:
            args = (p.u, p.v, p.offset, tree._len(p), q.u, q.v, q.offset, tree._len(q), tree.D)
            assert compiled.tree_dist(*args) == pytest.approx(py.tree_dist(*args), rel=1e-15)


def test_identical_points_have_zero_distance():
    a = np.array([0.3, -0.2, 0.1])
    assert compiled.poincare_dist(a, a) == 0.0
    assert py.poincare_dist(a, a) == 0.0
    np.testing.assert_array_equal(compiled.poincare_geodesic(a, a, 0.3), a)


@pytest.mark.parametrize("flag,expected", [("1", "python"), ("0", "cython"), ("", "cython")])
def test_env_switch_selects_backend(flag, expected):
    import os
    import subprocess
    import sys
    env = dict(os.environ, HS_PURE_PYTHON=flag)
    out = subprocess.run([sys.executable, "-c", "import hsplit; print(hsplit.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True).stdout.strip()
    assert out == expected
