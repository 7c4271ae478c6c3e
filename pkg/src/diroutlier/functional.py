"""
Functional directional outlyingness.

A functional dataset holds ``n`` functions observed on a shared grid (a 1-D
grid of ``T`` points or a ``J x K`` pixel lattice) with ``d``-variate values.
The pointwise DO of every function at every gridpoint forms a heatmap
(:class:`DOMap`); its weighted average (fDO) and relative variability (vDO)
give the coordinates of the functional outlier map, and their combination
(CFO) drives the outlier flag.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .exceptions import ConfigError, DegenerateDataError, InputDataError
from .multivariate import default_direction_count, generate_directions, project
from .scales import DEFAULT_CONFIG, Q75, RhoConfig, _column_scales, _directional, _median_axis0, _symmetric

__all__ = [
    "METHODS",
    "FunctionalDataset",
    "DOMap",
    "FunctionalSummary",
    "gridpoint_seed",
    "pointwise_do_map",
    "fdo",
    "vdo",
    "cfo",
    "flag_outliers",
    "summarize",
    "fom",
    "derivative_augment_1d",
    "gradient_augment_2d",
]

METHODS = ("projection", "componentwise", "sdo")
WEIGHT_TOL = 1e-9


def _normalize_weights(w, size, warn=True):
    if w is None:
        return np.full(size, 1.0 / size)
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size != size:
        raise InputDataError(f"expected {size} weights, got {w.size}")
    if not np.isfinite(w).all() or (w < 0).any():
        raise InputDataError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise InputDataError("weights have zero total mass")
    if abs(total - 1.0) > WEIGHT_TOL:
        if warn:
            warnings.warn(f"weights sum to {total:g}; renormalized to 1", stacklevel=3)
        w = w / total
    return w


@dataclass(eq=False)
class FunctionalDataset:
    """``n`` functions with ``d``-variate values on a 1-D or 2-D grid.

    ``values`` has shape ``(n, G, d)`` with ``G`` the number of gridpoints
    (row-major for 2-D lattices); ``weights`` has length ``G`` and sums to 1.
    """

    values: np.ndarray
    grid_shape: tuple
    weights: np.ndarray
    t: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        self.grid_shape = tuple(int(s) for s in self.grid_shape)
        if len(self.grid_shape) not in (1, 2):
            raise InputDataError("grid must be 1-D or 2-D")
        G = math.prod(self.grid_shape)
        if v.ndim == 2:
            v = v[:, :, None]
        if v.ndim != 3 or v.shape[1] != G:
            raise InputDataError(f"values must have shape (n, {G}, d), got {np.shape(self.values)}")
        if v.shape[0] < 3:
            raise InputDataError("need at least 3 functions")
        bad = ~np.isfinite(v)
        if bad.any():
            i, g, c = np.argwhere(bad)[0]
            raise InputDataError(f"non-finite value in function {i}, gridpoint {g}, channel {c}")
        self.values = v
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size != G or (w < 0).any() or not np.isfinite(w).all():
            raise InputDataError("weights must be nonnegative, finite and one per gridpoint")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise InputDataError(f"weights must sum to 1, got {w.sum():.12g}")
        self.weights = w
        if self.t is not None:
            self.t = np.asarray(self.t, dtype=float)
            if len(self.grid_shape) != 1 or self.t.shape != (G,):
                raise InputDataError("t must give one coordinate per gridpoint of a 1-D grid")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[2]

    @property
    def n_gridpoints(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_curves(cls, Y, t=None, weights=None) -> "FunctionalDataset":
        """Curves as an (n, T) or (n, T, d) array; uniform weights by default."""
        Y = np.asarray(Y, dtype=float)
        if Y.ndim not in (2, 3):
            raise InputDataError(f"curves must be (n, T) or (n, T, d), got shape {Y.shape}")
        T = Y.shape[1]
        if t is None:
            t = np.linspace(0.0, 1.0, T) if T > 1 else np.zeros(1)
        return cls(Y, (T,), _normalize_weights(weights, T), t)

    @classmethod
    def from_images(cls, Y, weights=None, mask=None) -> "FunctionalDataset":
        """Images as an (n, J, K) or (n, J, K, d) array.

        ``mask`` (J, K) booleans zero the weight of excluded pixels.
        """
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == 3:
            Y = Y[..., None]
        if Y.ndim != 4:
            raise InputDataError(f"images must be (n, J, K) or (n, J, K, d), got shape {Y.shape}")
        n, J, K, d = Y.shape
        w = np.ones(J * K) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != (J, K):
                raise InputDataError(f"mask shape {mask.shape} does not match images ({J}, {K})")
            w = w * mask.reshape(-1)
        return cls(Y.reshape(n, J * K, d), (J, K), _normalize_weights(w, J * K, warn=weights is not None))


@dataclass(eq=False)
class DOMap:
    """Pointwise outlyingness of every function at every gridpoint, shape (n, G)."""

    values: np.ndarray
    grid_shape: tuple
    method: str
    seed: int | None = None

    def as_grid(self) -> np.ndarray:
        return self.values.reshape((self.values.shape[0],) + tuple(self.grid_shape))


@dataclass(eq=False)
class FunctionalSummary:
    """Per-function fDO, vDO and CFO with the cutoffs and flags derived from them."""

    fdo: np.ndarray
    vdo: np.ndarray
    cfo: np.ndarray
    cutoff_fdo: float
    cutoff_cfo: float
    flags: np.ndarray
    flags_fdo: np.ndarray
    med_fdo: float = field(default=float("nan"))
    med_vdo: float = field(default=float("nan"))

    @property
    def n(self) -> int:
        return self.fdo.size


def gridpoint_seed(seed: int, index: int) -> int:
    """Direction seed for one gridpoint, derived from the master seed only."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1, np.uint64)[0])


def _check_cross_sections(vals, active):
    spread = vals[:, active, :].max(axis=0) - vals[:, active, :].min(axis=0)  # (G', d)
    const = (spread == 0).all(axis=1)
    if const.any():
        where = np.flatnonzero(active)[const]
        raise DegenerateDataError(
            f"{where.size} weighted gridpoint(s) have identical values for every function "
            f"(first: {where[:5].tolist()}); give them zero weight"
        )


def pointwise_do_map(D: FunctionalDataset, method: str = "projection", k: int | None = None, seed: int = 0,
                     cfg: RhoConfig = DEFAULT_CONFIG, n_jobs: int = 1) -> DOMap:
    """DO of each function at each gridpoint relative to that gridpoint's cross-section.

    ``method`` is ``projection`` (max over hyperplane directions),
    ``componentwise`` (norm of per-channel DOs) or ``sdo`` (Stahel-Donoho
    outlyingness, the symmetric comparator).  For d = 1 projection and
    componentwise coincide.  Gridpoints with zero weight are filled with 0.
    Directions at gridpoint ``g`` are drawn with ``gridpoint_seed(seed, g)``,
    so the map does not depend on ``n_jobs``.
    """
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {METHODS}")
    vals = D.values
    n, G, d = vals.shape
    active = D.weights > 0
    _check_cross_sections(vals, active)
    out = np.zeros((n, G))
    cols = np.flatnonzero(active)

    if d == 1 or method == "componentwise":
        acc = np.zeros((n, cols.size))
        for c in range(d):
            p = vals[:, cols, c]
            if method == "sdo":
                acc += _symmetric(p, p) ** 2
            else:
                med, s_a, s_b = _column_scales(p, cfg)
                acc += _directional(p, med, s_a, s_b) ** 2
        out[:, cols] = np.sqrt(acc)
        return DOMap(out, D.grid_shape, method, None)

    kk = default_direction_count(d) if k is None else int(k)

    def one(g):
        x = vals[:, g, :]
        dirs = generate_directions(x, kk, gridpoint_seed(seed, g))
        p = project(x, dirs.vectors)
        if method == "sdo":
            return _symmetric(p, p).max(axis=1)
        med, s_a, s_b = _column_scales(p, cfg)
        return _directional(p, med, s_a, s_b).max(axis=1)

    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as ex:
            cols_out = list(ex.map(one, cols))
    else:
        cols_out = [one(g) for g in cols]
    if cols_out:
        out[:, cols] = np.column_stack(cols_out)
    return DOMap(out, D.grid_shape, method, seed)


def _weights_for(map_: DOMap, weights):
    G = map_.values.shape[1]
    if weights is None:
        return np.full(G, 1.0 / G)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != G:
        raise InputDataError(f"expected {G} weights, got {w.size}")
    if (w < 0).any() or abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise InputDataError(f"weights must be nonnegative and sum to 1, got sum {w.sum():.12g}")
    return w


def fdo(map_: DOMap, weights=None) -> np.ndarray:
    """Weighted average of each function's pointwise DO."""
    w = _weights_for(map_, weights)
    act = w > 0
    return map_.values[:, act] @ w[act]


def vdo(map_: DOMap, fdo_values, weights=None, weighted: bool = False) -> np.ndarray:
    """Standard deviation of each function's DO over the gridpoints, divided by ``1 + fDO``.

    Only gridpoints with nonzero weight enter.  By default the plain sample
    standard deviation is used; ``weighted=True`` uses the weights instead.
    """
    w = _weights_for(map_, weights)
    act = w > 0
    if act.sum() < 2:
        raise InputDataError("vDO needs at least 2 gridpoints with nonzero weight")
    vals = map_.values[:, act]
    if weighted:
        ww = w[act] / w[act].sum()
        centered = vals - (vals @ ww)[:, None]
        with np.errstate(invalid="ignore"):
            sd = np.sqrt((centered**2) @ ww)
    else:
        with np.errstate(invalid="ignore"):
            sd = vals.std(axis=1, ddof=1)
    fd = np.asarray(fdo_values, dtype=float)
    with np.errstate(invalid="ignore"):
        out = sd / (1.0 + fd)
    # a function with an infinite DO somewhere is maximally variable
    return np.where(np.isinf(fd), np.inf, out)


def _finite_median(v, what):
    f = v[np.isfinite(v)]
    if f.size == 0:
        raise DegenerateDataError(f"no finite {what} values")
    return float(_median_axis0(f))


def cfo(fdo_values, vdo_values) -> np.ndarray:
    """Combined functional outlyingness, the median-scaled Euclidean norm of (fDO, vDO)."""
    f = np.asarray(fdo_values, dtype=float)
    v = np.asarray(vdo_values, dtype=float)
    mf = _finite_median(f, "fDO")
    mv = _finite_median(v, "vDO")
    if mf <= 0 or mv <= 0:
        raise DegenerateDataError(f"median fDO ({mf:g}) and median vDO ({mv:g}) must be positive")
    return np.hypot(f / mf, v / mv)


def flag_outliers(values, quantile: float = 0.995):
    """Cutoff on the log scale: flag ``v`` when ``(log(0.1+v) - med) / MAD > z_q``.

    Returns ``(cutoff, flags)`` where ``cutoff = exp(med + MAD z_q) - 0.1`` and
    ``flags = values > cutoff``.  Infinite values are left out of med/MAD and
    always flagged.
    """
    if not 0.5 < quantile < 1:
        raise ConfigError(f"cutoff quantile must lie in (0.5, 1), got {quantile}")
    v = np.asarray(values, dtype=float)
    if np.isnan(v).any() or (v < 0).any():
        raise InputDataError("outlyingness values must be nonnegative numbers")
    fin = np.isfinite(v)
    L = np.log(0.1 + v[fin])
    if L.size == 0:
        raise DegenerateDataError("no finite values to calibrate a cutoff")
    med = float(_median_axis0(L))
    s = float(_median_axis0(np.abs(L - med))) / Q75
    if not s > 0:
        raise DegenerateDataError("MAD of the log outlyingness is zero; no cutoff can be computed")
    cutoff = math.exp(med + s * norm.ppf(quantile)) - 0.1
    return cutoff, v > cutoff


def summarize(map_: DOMap, weights=None, weighted_vdo: bool = False, quantile: float = 0.995) -> FunctionalSummary:
    """fDO, vDO, CFO, their cutoffs and flags for every function of a DO map."""
    f = fdo(map_, weights)
    v = vdo(map_, f, weights, weighted_vdo)
    mf = _finite_median(f, "fDO")
    mv = _finite_median(v, "vDO")
    c = cfo(f, v)
    cut_f, flags_f = flag_outliers(f, quantile)
    cut_c, flags_c = flag_outliers(c, quantile)
    return FunctionalSummary(f, v, c, cut_f, cut_c, flags_c, flags_f, mf, mv)


def fom(summary: FunctionalSummary, n_curve: int = 200):
    """Points ``(fDO, vDO)`` and samples of the cutoff ellipse in the first quadrant.

    The curve is the locus where CFO equals the CFO cutoff.
    """
    points = np.column_stack([summary.fdo, summary.vdo])
    theta = np.linspace(0.0, np.pi / 2, n_curve)
    r = summary.cutoff_cfo
    curve = np.column_stack([r * summary.med_fdo * np.cos(theta), r * summary.med_vdo * np.sin(theta)])
    return points, curve


def derivative_augment_1d(D: FunctionalDataset) -> FunctionalDataset:
    """Append the first derivative of every channel (value dimension becomes 2d).

    Second-order central differences inside, three-point one-sided
    differences at both ends (``numpy.gradient`` with ``edge_order=2``).
    """
    if len(D.grid_shape) != 1:
        raise InputDataError("derivative augmentation needs a 1-D grid")
    if D.n_gridpoints < 3:
        raise InputDataError("derivative augmentation needs at least 3 gridpoints")
    t = D.t if D.t is not None else np.arange(D.n_gridpoints, dtype=float)
    der = np.gradient(D.values, t, axis=1, edge_order=2)
    return FunctionalDataset(np.concatenate([D.values, der], axis=2), D.grid_shape, D.weights, D.t)


def _axis_derivative(Y, inside, axis):
    """Masked three-point derivative of Y (n, J, K, d) along ``axis`` (1 or 2) in pixel units."""
    def shift(a, s, fill):
        out = np.full_like(a, fill)
        src = [slice(None)] * a.ndim
        dst = [slice(None)] * a.ndim
        ax = axis if a.ndim == Y.ndim else axis - 1
        if s > 0:
            src[ax], dst[ax] = slice(s, None), slice(None, -s)
        else:
            src[ax], dst[ax] = slice(None, s), slice(-s, None)
        out[tuple(dst)] = a[tuple(src)]
        return out

    m = inside
    p1, p2 = shift(m, 1, False), shift(m, 2, False)
    n1, n2 = shift(m, -1, False), shift(m, -2, False)
    central = m & p1 & n1
    forward = m & ~central & p1 & p2
    backward = m & ~central & ~forward & n1 & n2
    thin = m & ~(central | forward | backward)
    if thin.any():
        j, k = np.argwhere(thin)[0]
        raise InputDataError(
            f"masked region is thinner than 3 pixels along axis {'jk'[axis - 1]} at pixel ({j}, {k})"
        )
    y0 = Y
    yp1, yp2 = shift(Y, 1, 0.0), shift(Y, 2, 0.0)
    ym1, ym2 = shift(Y, -1, 0.0), shift(Y, -2, 0.0)
    out = np.zeros_like(Y)
    sel = lambda mask: mask[None, :, :, None]  # noqa: E731
    out = np.where(sel(central), (yp1 - ym1) / 2.0, out)
    out = np.where(sel(forward), (-3.0 * y0 + 4.0 * yp1 - yp2) / 2.0, out)
    out = np.where(sel(backward), (ym2 - 4.0 * ym1 + 3.0 * y0) / 2.0, out)
    return out


def gradient_augment_2d(D: FunctionalDataset, mask=None) -> FunctionalDataset:
    """Append the pixel gradient (d/dj, d/dk) of every channel (value dimension becomes 3d).

    Interior pixels use central differences, pixels at the edge of the image
    or of the ``mask`` use the three-point forward/backward formulas.  Pixels
    outside the mask get zero gradient and zero weight.
    """
    if len(D.grid_shape) != 2:
        raise InputDataError("gradient augmentation needs a 2-D grid")
    J, K = D.grid_shape
    if J < 3 or K < 3:
        raise InputDataError("gradient augmentation needs at least 3 x 3 pixels")
    inside = np.ones((J, K), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if inside.shape != (J, K):
        raise InputDataError(f"mask shape {inside.shape} does not match grid ({J}, {K})")
    Y = D.values.reshape(D.n, J, K, D.d)
    dj = _axis_derivative(Y, inside, 1)
    dk = _axis_derivative(Y, inside, 2)
    vals = np.concatenate([Y, dj, dk], axis=3).reshape(D.n, J * K, 3 * D.d)
    w = D.weights * inside.reshape(-1)
    return FunctionalDataset(vals, D.grid_shape, _normalize_weights(w, J * K, warn=False))
