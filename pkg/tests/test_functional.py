import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from diroutlier import (
    ConfigError,
    DegenerateDataError,
    DOMap,
    FunctionalDataset,
    InputDataError,
    cfo,
    derivative_augment_1d,
    fdo,
    flag_outliers,
    fom,
    gradient_augment_2d,
    pointwise_do_map,
    summarize,
    vdo,
)
from diroutlier.simulation import gen_functional_sine


def random_map(n=30, G=12, seed=0):
    rng = np.random.default_rng(seed)
    return DOMap(rng.exponential(size=(n, G)), (G,), "projection")


# ---- dataset construction --------------------------------------------------

def test_uniform_default_weights_and_validation():
    D = FunctionalDataset.from_curves(np.random.default_rng(0).standard_normal((5, 8)))
    assert np.allclose(D.weights, 1 / 8) and D.t[0] == 0.0 and D.t[-1] == 1.0
    with pytest.raises(InputDataError):
        FunctionalDataset.from_curves(np.full((5, 8), np.nan))
    with pytest.raises(InputDataError):
        FunctionalDataset.from_curves(np.zeros((2, 8)))
    with pytest.raises(InputDataError):
        FunctionalDataset(np.zeros((4, 3, 1)), (3,), [0.5, 0.5, 0.5])


def test_weights_renormalized_with_warning():
    w = np.r_[np.zeros(13), np.full(37, 2.0)]
    with pytest.warns(UserWarning, match="renormalized"):
        D = FunctionalDataset.from_curves(np.random.default_rng(0).standard_normal((6, 50)), weights=w)
    assert D.weights.sum() == pytest.approx(1.0)
    assert np.all(D.weights[:13] == 0)


def test_images_mask_zeroes_weights():
    Y = np.random.default_rng(0).standard_normal((4, 5, 6))
    mask = np.ones((5, 6), dtype=bool)
    mask[0] = False
    D = FunctionalDataset.from_images(Y, mask=mask)
    assert D.grid_shape == (5, 6) and D.d == 1
    assert np.all(D.weights[:6] == 0) and D.weights.sum() == pytest.approx(1.0)


# ---- pointwise map ---------------------------------------------------------

def test_constant_cross_section_is_rejected():
    Y = np.tile(np.linspace(0, 1, 10), (8, 1))
    with pytest.raises(DegenerateDataError, match="identical"):
        pointwise_do_map(FunctionalDataset.from_curves(Y))


def test_constant_cross_section_with_zero_weight_is_fine():
    rng = np.random.default_rng(1)
    Y = rng.standard_normal((8, 10))
    Y[:, 0] = 3.0
    w = np.r_[0.0, np.full(9, 1 / 9)]
    m = pointwise_do_map(FunctionalDataset.from_curves(Y, weights=w))
    assert np.all(m.values[:, 0] == 0)


def test_single_gridpoint_is_univariate_do():
    y = np.random.default_rng(2).standard_normal(25)
    m = pointwise_do_map(FunctionalDataset.from_curves(y[:, None]))
    assert m.values[:, 0] == pytest.approx([oracles.do_point(v, y) for v in y], rel=1e-12)


def test_map_matches_oracle_per_gridpoint():
    rng = np.random.default_rng(3)
    Y = rng.gamma(2.0, size=(15, 4))
    m = pointwise_do_map(FunctionalDataset.from_curves(Y))
    for g in range(4):
        assert m.values[:, g] == pytest.approx([oracles.do_point(v, Y[:, g]) for v in Y[:, g]], rel=1e-12)
    s = pointwise_do_map(FunctionalDataset.from_curves(Y), "sdo")
    assert s.values[:, 1] == pytest.approx([oracles.sdo_point(v, Y[:, 1]) for v in Y[:, 1]], rel=1e-12)


def test_bivariate_map_methods_and_thread_independence():
    rng = np.random.default_rng(4)
    Y = rng.standard_normal((40, 6, 2))
    D = FunctionalDataset.from_curves(Y)
    a = pointwise_do_map(D, "projection", k=50, seed=9, n_jobs=1)
    b = pointwise_do_map(D, "projection", k=50, seed=9, n_jobs=3)
    assert np.array_equal(a.values, b.values)
    c = pointwise_do_map(D, "componentwise")
    expect = np.hypot(*[[oracles.do_point(v, Y[:, 2, h]) for v in Y[:, 2, h]] for h in range(2)])
    assert c.values[:, 2] == pytest.approx(expect, rel=1e-12)
    with pytest.raises(ConfigError):
        pointwise_do_map(D, "bogus")


def test_shifted_sine_curve_exceeds_cross_section_cutoff():
    D, _ = gen_functional_sine(200, 50, 0.0, 0.0, seed=5, slopes=1.0)
    vals = D.values.copy()
    vals[0, :, 0] += 10 * D.t
    m = pointwise_do_map(FunctionalDataset(vals, D.grid_shape, D.weights, D.t))
    cut, _ = flag_outliers(m.values[:, -1])
    assert m.values[0, -1] > cut


# ---- fDO, vDO, CFO -----------------------------------------------------------

def test_fdo_examples():
    m = random_map()
    G = m.values.shape[1]
    w = np.zeros(G)
    w[4] = 1.0
    assert np.array_equal(fdo(m, w), m.values[:, 4])
    const = DOMap(np.repeat(np.arange(1.0, 6.0)[:, None], G, axis=1), (G,), "projection")
    assert fdo(const) == pytest.approx(np.arange(1.0, 6.0))
    with pytest.raises(InputDataError):
        fdo(m, np.full(G, 0.5))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.floats(0, 1))
def test_fdo_linear_in_weights(seed, lam):
    m = random_map(seed=seed)
    rng = np.random.default_rng(seed + 1)
    w1, w2 = rng.random(12), rng.random(12)
    w1, w2 = w1 / w1.sum(), w2 / w2.sum()
    w = lam * w1 + (1 - lam) * w2
    w = w / w.sum()
    np.testing.assert_allclose(fdo(m, w), lam * fdo(m, w1) + (1 - lam) * fdo(m, w2), rtol=1e-12, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000))
def test_permuting_gridpoints_leaves_summary_unchanged(seed):
    m = random_map(seed=seed)
    rng = np.random.default_rng(seed)
    w = rng.random(12)
    w /= w.sum()
    perm = rng.permutation(12)
    mp = DOMap(m.values[:, perm], m.grid_shape, m.method)
    a, b = summarize(m, w), summarize(mp, w[perm])
    for f in ("fdo", "vdo", "cfo"):
        np.testing.assert_allclose(getattr(a, f), getattr(b, f), rtol=1e-12)


def test_vdo_examples():
    G = 10
    m = DOMap(np.array([np.full(G, 2.0), np.linspace(0, 1, G), 2 * np.linspace(0, 1, G)]), (G,), "projection")
    f = fdo(m)
    v = vdo(m, f)
    assert v[0] == 0.0
    assert v[1] == pytest.approx(np.std(np.linspace(0, 1, G), ddof=1) / (1 + f[1]))
    # doubling every DO doubles both the spread and fDO
    assert v[2] == pytest.approx(v[1] * (1 + f[1]) / (1 + 2 * f[1]) * 2, rel=1e-14)


def test_vdo_uses_only_weighted_gridpoints():
    m = random_map(5, 8, 1)
    w = np.r_[0.0, 0.0, np.full(6, 1 / 6)]
    f = fdo(m, w)
    assert vdo(m, f, w) == pytest.approx(np.std(m.values[:, 2:], axis=1, ddof=1) / (1 + f))
    ww = vdo(m, f, w, weighted=True)
    assert ww == pytest.approx(np.std(m.values[:, 2:], axis=1, ddof=0) / (1 + f))
    with pytest.raises(InputDataError):
        vdo(m, f, np.r_[1.0, np.zeros(7)])


def test_spiked_curve_has_low_fdo_high_vdo():
    D, _ = gen_functional_sine(100, 50, 0.0, 0.0, seed=8)
    vals = D.values.copy()
    spike = np.median(vals[:, :, 0], axis=0)
    spike[25] += 3.0
    vals[0, :, 0] = spike
    s = summarize(pointwise_do_map(FunctionalDataset(vals, D.grid_shape, D.weights, D.t)), D.weights)
    assert s.fdo[0] < np.median(s.fdo)
    assert s.vdo[0] >= np.quantile(s.vdo, 0.9)


def test_cfo_examples():
    f = np.array([1.0, 2.0, 3.0])
    c = cfo(f, np.array([0.5, 1.0, 2.0]))
    assert c[1] == pytest.approx(math.sqrt(2))
    # a curve without spread sits on the fDO axis
    c = cfo(f, np.array([0.5, 1.0, 0.0]))
    assert c[2] == pytest.approx(3.0 / 2.0)
    with pytest.raises(DegenerateDataError):
        cfo(f, np.zeros(3))


def test_cfo_median_near_sqrt2_for_gaussian_functions():
    rng = np.random.default_rng(10)
    D = FunctionalDataset.from_curves(rng.standard_normal((500, 50)))
    s = summarize(pointwise_do_map(D))
    assert abs(np.median(s.cfo) / math.sqrt(2) - 1) < 0.05


# ---- cutoff -----------------------------------------------------------------

def test_flag_outliers_matches_oracle():
    v = np.random.default_rng(0).exponential(size=301)
    cut, flags = flag_outliers(v)
    assert cut == pytest.approx(oracles.log_cutoff(v), rel=1e-12)
    assert np.array_equal(flags, v > cut)


def test_flag_outliers_all_equal_is_degenerate():
    with pytest.raises(DegenerateDataError):
        flag_outliers(np.full(10, 2.0))


def test_flag_outliers_strict_boundary():
    v = np.random.default_rng(1).exponential(size=101)
    cut, _ = flag_outliers(v)
    # moving the maximum does not change med or MAD of the log values
    v[np.argmax(v)] = cut
    cut2, flags = flag_outliers(v)
    assert cut2 == cut and not flags.any()
    v[np.argmax(v)] = np.nextafter(cut, np.inf)
    assert flag_outliers(v)[1].sum() == 1


def test_infinite_values_are_flagged_not_calibrated():
    v = np.random.default_rng(2).exponential(size=50)
    w = np.r_[v, np.inf]
    cut, flags = flag_outliers(w)
    assert flags[-1]
    assert cut == pytest.approx(flag_outliers(v)[0])


def test_quantile_range_checked():
    with pytest.raises(ConfigError):
        flag_outliers(np.arange(1.0, 10.0), quantile=0.4)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 39), st.floats(0, 50))
def test_raising_a_value_never_unflags_it(seed, i, bump):
    v = np.random.default_rng(seed).exponential(size=40)
    before = flag_outliers(v)[1][i]
    v2 = v.copy()
    v2[i] += bump
    assert flag_outliers(v2)[1][i] or not before


# ---- FOM ----------------------------------------------------------------------

def test_fom_curve_geometry():
    s = summarize(random_map(50, 10, 4))
    points, curve = fom(s, 101)
    assert points.shape == (50, 2)
    assert curve[0] == pytest.approx([s.cutoff_cfo * s.med_fdo, 0.0])
    assert curve[-1] == pytest.approx([0.0, s.cutoff_cfo * s.med_vdo], abs=1e-12)
    on = np.hypot(curve[:, 0] / s.med_fdo, curve[:, 1] / s.med_vdo)
    assert on == pytest.approx(np.full(101, s.cutoff_cfo))


def test_flags_equal_outside_ellipse():
    for seed in range(10):
        s = summarize(random_map(80, 15, seed))
        outside = np.hypot(s.fdo / s.med_fdo, s.vdo / s.med_vdo) > s.cutoff_cfo
        assert np.array_equal(outside, s.flags)


def test_shifted_sine_curves_fall_outside_curve():
    D, labels = gen_functional_sine(500, 50, 0.1, 8.0, seed=2, slopes=1.0)
    s = summarize(pointwise_do_map(D), D.weights)
    assert s.flags[labels].mean() >= 0.9


# ---- derivatives ----------------------------------------------------------------

def test_derivative_1d_exact_on_lines_and_constants():
    t = np.linspace(0, 1, 11)
    Y = np.vstack([3 * t + 1, np.full(11, 2.0), -t])
    A = derivative_augment_1d(FunctionalDataset.from_curves(Y, t=t))
    assert A.d == 2
    np.testing.assert_allclose(A.values[0, :, 1], 3.0, atol=1e-12)
    np.testing.assert_allclose(A.values[1, :, 1], 0.0, atol=1e-12)
    with pytest.raises(InputDataError):
        derivative_augment_1d(FunctionalDataset.from_curves(Y[:, :2]))


def test_derivative_1d_sine_accuracy():
    t = np.linspace(0, 1, 1000)
    Y = np.vstack([np.sin(2 * np.pi * t)] * 3)
    A = derivative_augment_1d(FunctionalDataset.from_curves(Y, t=t))
    assert np.abs(A.values[0, :, 1] - 2 * np.pi * np.cos(2 * np.pi * t)).max() < 1e-4


def images(fn, J=6, K=7, n=3):
    j, k = np.meshgrid(np.arange(J, dtype=float), np.arange(K, dtype=float), indexing="ij")
    return np.stack([fn(j, k) + i for i in range(n)])


def test_gradient_exact_on_affine_and_quadratic():
    G = gradient_augment_2d(FunctionalDataset.from_images(images(lambda j, k: 2 * j + 3 * k)))
    assert G.d == 3
    v = G.values.reshape(3, 6, 7, 3)
    assert np.abs(v[..., 1] - 2).max() <= 1e-12 and np.abs(v[..., 2] - 3).max() <= 1e-12
    Q = gradient_augment_2d(FunctionalDataset.from_images(images(lambda j, k: j**2)))
    q = Q.values.reshape(3, 6, 7, 3)
    jj = np.arange(6.0)[None, :, None]
    assert np.abs(q[..., 1] - 2 * jj).max() <= 1e-12
    assert np.abs(q[..., 2]).max() <= 1e-12
    C = gradient_augment_2d(FunctionalDataset.from_images(images(lambda j, k: 0 * j)))
    assert np.abs(C.values[:, :, 1:]).max() == 0.0


def test_gradient_with_mask_uses_region_boundary():
    mask = np.zeros((8, 8), dtype=bool)
    mask[2:7, 1:6] = True
    Y = images(lambda j, k: j**2 + 0.5 * k**2, 8, 8)
    # values outside the mask must not leak into the differences
    Y[:, ~mask] = 1e6
    G = gradient_augment_2d(FunctionalDataset.from_images(Y, mask=mask), mask)
    v = G.values.reshape(3, 8, 8, 3)
    jj, kk = np.meshgrid(np.arange(8.0), np.arange(8.0), indexing="ij")
    assert np.abs(v[:, mask, 1] - 2 * jj[mask]).max() <= 1e-9
    assert np.abs(v[:, mask, 2] - kk[mask]).max() <= 1e-9
    assert np.all(v[:, ~mask, 1:] == 0)
    assert np.all(G.weights[~mask.ravel()] == 0)


def test_gradient_rejects_thin_regions():
    mask = np.zeros((6, 6), dtype=bool)
    mask[1:5, 2:4] = True  # two pixels wide along k
    with pytest.raises(InputDataError, match="thinner"):
        gradient_augment_2d(FunctionalDataset.from_images(np.random.default_rng(0).random((3, 6, 6)), mask=mask), mask)
    with pytest.raises(InputDataError):
        gradient_augment_2d(FunctionalDataset.from_images(np.random.default_rng(0).random((3, 2, 6))))


def test_summary_does_not_warn_for_default_weights():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        D = FunctionalDataset.from_images(np.random.default_rng(0).random((5, 4, 4)))
        summarize(pointwise_do_map(D), D.weights)
