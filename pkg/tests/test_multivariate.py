import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull, Delaunay

import oracles
from diroutlier import (
    DegenerateDataError,
    DirectionSet,
    InputDataError,
    cdo,
    do_grid,
    do_multivariate,
    do_univariate,
    generate_directions,
    sdo_multivariate,
)
from diroutlier.multivariate import default_direction_count, directions_from_indices, project


def skewed_cloud(n=300, seed=0):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, 2))
    return np.column_stack([np.exp(0.6 * z[:, 0]), z[:, 1] + 0.5 * z[:, 0]])


def test_default_count():
    assert default_direction_count(2) == 500
    X = skewed_cloud()
    assert generate_directions(X).k == 500


def test_unit_norm_and_provenance():
    X = skewed_cloud()
    dirs = generate_directions(X, 200, seed=4)
    assert np.allclose(np.linalg.norm(dirs.vectors, axis=1), 1.0, atol=1e-12)
    assert dirs.point_indices.shape == (200, 2)
    assert dirs.seed == 4


def test_direction_is_normal_to_drawn_points():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.3, 2.0]])
    dirs = directions_from_indices(X, [[0, 1]])
    assert np.allclose(np.abs(dirs.vectors[0]), [0.0, 1.0], atol=1e-15)
    X3 = np.random.default_rng(1).standard_normal((20, 3))
    d3 = generate_directions(X3, 50, 2)
    for v, idx in zip(d3.vectors, d3.point_indices):
        p = X3[idx]
        assert np.allclose((p[1:] - p[0]) @ v, 0.0, atol=1e-12)


def test_d1_directions_are_unit():
    y = np.random.default_rng(0).standard_normal(30)
    dirs = generate_directions(y[:, None], 10, 0)
    assert np.all(dirs.vectors == 1.0)
    # equal up to the summation order inside the selected half samples
    np.testing.assert_allclose(do_multivariate(y[:, None][:5], y[:, None], dirs), do_univariate(y[:5], y),
                               rtol=1e-14, atol=0)


def test_deterministic_for_seed():
    X = skewed_cloud()
    a, b = generate_directions(X, 100, 7), generate_directions(X, 100, 7)
    assert np.array_equal(a.vectors, b.vectors)
    assert not np.array_equal(a.vectors, generate_directions(X, 100, 8).vectors)


def test_rank_deficient_data_raises():
    # in 3-D, three points on a common line span no plane
    t = np.linspace(0, 1, 50)
    X = np.column_stack([t, 2 * t + 1, -t])
    with pytest.raises(DegenerateDataError):
        generate_directions(X, 10, 0)


def test_too_few_points():
    with pytest.raises(InputDataError):
        generate_directions(np.zeros((2, 2)), 5)


def test_singular_draws_are_retried():
    rng = np.random.default_rng(0)
    # many duplicated rows: plenty of singular pairs, but not only
    X = np.vstack([np.zeros((40, 2)), rng.standard_normal((5, 2))])
    dirs = generate_directions(X, 100, 3)
    pts = X[dirs.point_indices]
    assert np.all(np.linalg.norm(pts[:, 1] - pts[:, 0], axis=1) > 0)


def test_matches_loop_oracle():
    X = skewed_cloud(60, 2)
    dirs = generate_directions(X, 30, 5)
    ys = np.array([[0.0, 0.0], [3.0, 1.0], [1.0, -2.0]])
    got = do_multivariate(ys, X, dirs)
    for y, g in zip(ys, got):
        assert g == pytest.approx(oracles.do_over_directions(y, X, dirs.vectors), rel=1e-10)


def test_lower_bound_over_supplied_directions():
    X = skewed_cloud(200, 3)
    dirs = generate_directions(X, 40, 1)
    y = np.array([2.5, -1.0])
    full = do_multivariate(y, X, dirs)
    for v in dirs.vectors:
        assert full >= do_univariate(y @ v, X @ v) - 1e-12


def test_center_of_gaussian_cloud_is_not_outlying():
    X = np.random.default_rng(11).standard_normal((10_000, 2))
    assert do_multivariate(np.zeros(2), X, seed=0) < 0.1


def test_more_directions_never_decrease():
    X = skewed_cloud(150, 4)
    a = generate_directions(X, 50, 1)
    b = a.extend(generate_directions(X, 50, 2))
    ys = np.random.default_rng(0).standard_normal((20, 2)) * 3
    assert np.all(do_multivariate(ys, X, b) >= do_multivariate(ys, X, a))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_affine_invariance_with_rebuilt_directions(seed):
    rng = np.random.default_rng(seed)
    X = skewed_cloud(80, seed)
    A = rng.standard_normal((2, 2))
    if abs(np.linalg.det(A)) < 0.1:
        A += np.eye(2)
    b = rng.standard_normal(2) * 5
    dirs = generate_directions(X, 60, seed)
    Xt = X @ A.T + b
    dirs_t = dirs.rebuild(Xt)
    ys = rng.standard_normal((10, 2)) * 2
    np.testing.assert_allclose(do_multivariate(ys @ A.T + b, Xt, dirs_t), do_multivariate(ys, X, dirs),
                               rtol=1e-8, atol=1e-8)


def test_translation_invariance_with_same_directions():
    X = skewed_cloud(100, 9)
    dirs = generate_directions(X, 40, 0)
    ys = np.random.default_rng(1).standard_normal((5, 2))
    b = np.array([10.0, -3.0])
    np.testing.assert_allclose(do_multivariate(ys + b, X + b, dirs), do_multivariate(ys, X, dirs), rtol=1e-9)


def test_thread_count_does_not_change_results():
    X = skewed_cloud(300, 5)
    ys = np.random.default_rng(2).standard_normal((5000, 2))
    dirs = generate_directions(X, 100, 0)
    a = do_multivariate(ys, X, dirs, n_jobs=1)
    b = do_multivariate(ys, X, dirs, n_jobs=4)
    assert np.array_equal(a, b)


def test_project_fixed_order():
    X = np.random.default_rng(0).standard_normal((10, 3))
    V = np.random.default_rng(1).standard_normal((4, 3))
    np.testing.assert_allclose(project(X, V), X @ V.T, rtol=1e-13)


def test_degenerate_direction_gives_inf_only_beyond_constant_half():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [4.0, 1.0], [5.0, 2.0], [6.0, 3.0]])
    vertical = DirectionSet(np.array([[0.0, 1.0]]))
    assert do_multivariate([3.0, -1.0], X, vertical) == np.inf
    assert do_multivariate([3.0, 0.0], X, vertical) == 0.0
    assert np.isfinite(do_multivariate([3.0, 5.0], X, vertical))


def test_sdo_multivariate_matches_oracle():
    X = skewed_cloud(50, 1)
    dirs = generate_directions(X, 20, 1)
    y = np.array([1.0, 2.0])
    expect = max(oracles.sdo_point(float(y @ v), list(X @ v)) for v in dirs.vectors)
    assert sdo_multivariate(y, X, dirs) == pytest.approx(expect, rel=1e-12)


def test_cdo_examples():
    y1 = np.random.default_rng(0).standard_normal(41)
    assert cdo(y1[:3, None], y1[:, None]).tolist() == pytest.approx(do_univariate(y1[:3], y1).tolist(), abs=1e-12)
    X = skewed_cloud(101, 0)
    med = np.median(X, axis=0)
    assert cdo(med, X) == 0.0
    # marginal DOs 3 and 4 give 5
    sa = [oracles.half_scales(X[:, j])[1] for j in range(2)]
    y = med + np.array([3 * sa[0], 4 * sa[1]])
    assert cdo(y, X) == pytest.approx(5.0, rel=1e-9)


def test_grid_consistency_and_shift():
    X = skewed_cloud(120, 3)
    dirs = generate_directions(X, 60, 0)
    xs, ys = np.linspace(-1, 4, 7), np.linspace(-3, 3, 5)
    G = do_grid(X, xs, ys, dirs)
    assert G.shape == (5, 7)
    assert G[2, 3] == do_multivariate([xs[3], ys[2]], X, dirs)
    shift = np.array([2.0, -1.0])
    G2 = do_grid(X + shift, xs + shift[0], ys + shift[1], dirs)
    np.testing.assert_allclose(G2, G, rtol=1e-9)
    assert do_grid(X, xs[:1], ys[:1], dirs)[0, 0] == do_multivariate([xs[0], ys[0]], X, dirs)


def test_grid_sublevel_sets_are_convex():
    X = skewed_cloud(320, 6)
    dirs = generate_directions(X, 500, 0)
    xs = np.linspace(X[:, 0].min(), X[:, 0].max(), 50)
    ys = np.linspace(X[:, 1].min(), X[:, 1].max(), 50)
    G = do_grid(X, xs, ys, dirs)
    gx, gy = np.meshgrid(xs, ys)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])
    vals = G.ravel()
    for level in np.quantile(vals, [0.1, 0.3, 0.6]):
        inside = vals <= level
        hull = Delaunay(nodes[inside][ConvexHull(nodes[inside]).vertices])
        in_hull = hull.find_simplex(nodes[~inside], tol=-1e-9) >= 0
        assert not in_hull.any()
