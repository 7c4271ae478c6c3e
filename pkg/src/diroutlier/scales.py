"""
Univariate building blocks of directional outlyingness.

The sample is split into two half samples around its median and a one-step
Huber M-estimator of scale is computed on each of them.  The resulting scales
``s_above`` and ``s_below`` replace the single MAD of the Stahel-Donoho
outlyingness, so that points in a long tail get a smaller outlyingness than
points at the same distance in a short tail.

All heavy lifting is done column-wise on 2-D arrays (``_column_scales``) so
that projections on many directions, or many gridpoints of a functional
dataset, are handled in one vectorized call.  Order statistics are obtained
with ``numpy.partition`` (introselect), which keeps the cost O(n) per column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .exceptions import ConfigError, DegenerateDataError, InputDataError

__all__ = [
    "Q75",
    "RhoConfig",
    "ScalePair",
    "rho_c",
    "alpha_constant",
    "as_sample",
    "median",
    "mad",
    "half_scales",
    "do_univariate",
    "do_sample",
    "sdo_univariate",
    "sdo_sample",
    "depth_transform",
]

#: Phi^{-1}(0.75), makes the MAD consistent at the gaussian
Q75 = float(norm.ppf(0.75))

DEFAULT_C = 2.1


def alpha_constant(c: float) -> float:
    """Return ``alpha = int_0^inf rho_c(x) dPhi(x)`` in closed form.

    Uses ``int_0^c x^2 dPhi = Phi(c) - c phi(c) - 1/2``.
    """
    c = float(c)
    if not c > 0 or not math.isfinite(c):
        raise ConfigError(f"tuning constant c must be a positive finite number, got {c!r}")
    return (norm.cdf(c) - c * norm.pdf(c) - 0.5) / c**2 + norm.sf(c)


@dataclass(frozen=True)
class RhoConfig:
    """Huber rho tuning constant ``c`` and its consistency constant ``alpha``.

    ``alpha`` is always recomputed from ``c``; it is not a free parameter.
    """

    c: float = DEFAULT_C
    alpha: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "alpha", alpha_constant(self.c))


DEFAULT_CONFIG = RhoConfig()


@dataclass(frozen=True)
class ScalePair:
    """Median and half-sample scales of a univariate sample."""

    median: float
    s_above: float
    s_below: float
    n: int
    h: int


def rho_c(t, cfg: RhoConfig = DEFAULT_CONFIG):
    """Huber rho function for scale: ``(t/c)^2`` on ``[-c, c]``, 1 outside."""
    t = np.asarray(t, dtype=float)
    u = t / cfg.c
    out = np.where(np.abs(u) <= 1.0, u * u, 1.0)
    return out if out.ndim else float(out)


def as_sample(values, min_size: int = 3, name: str = "sample") -> np.ndarray:
    """Validate a univariate sample and return it as a float array."""
    y = np.asarray(values, dtype=float)
    if y.ndim != 1:
        raise InputDataError(f"{name} must be one-dimensional, got shape {np.shape(values)}")
    if y.size < min_size:
        raise InputDataError(f"{name} needs at least {min_size} values, got {y.size}")
    bad = ~np.isfinite(y)
    if bad.any():
        raise InputDataError(f"{name} contains non-finite values at positions {np.flatnonzero(bad)[:10].tolist()}")
    return y


def _median_axis0(a: np.ndarray) -> np.ndarray:
    # selection, not sorting
    m = a.shape[0]
    if m % 2:
        k = m // 2
        return np.partition(a, k, axis=0)[k]
    k = m // 2
    part = np.partition(a, [k - 1, k], axis=0)
    return 0.5 * (part[k - 1] + part[k])


def median(values) -> float:
    """Sample median; midpoint of the two central order statistics for even n."""
    return float(_median_axis0(np.asarray(values, dtype=float)))


def mad(values) -> float:
    """MAD normalized by ``Phi^{-1}(0.75)``."""
    y = np.asarray(values, dtype=float)
    return float(_median_axis0(np.abs(y - _median_axis0(y)))) / Q75


def _one_step(z: np.ndarray, c: float, alpha: float, h: int) -> np.ndarray:
    """One-step M-scale of the nonnegative deviations ``z`` (columns)."""
    s0 = _median_axis0(z) / Q75
    pos = s0 > 0
    safe = np.where(pos, s0, 1.0)
    # z >= 0, so clipping before squaring is rho and cannot overflow
    u = np.minimum(z / (c * safe), 1.0)
    rho = u * u
    s = safe * np.sqrt(rho.sum(axis=0) / (2.0 * alpha * h))
    return np.where(pos, s, 0.0)


def _column_scales(p: np.ndarray, cfg: RhoConfig = DEFAULT_CONFIG):
    """Median, s_above and s_below of every column of ``p`` (shape (n, k))."""
    n = p.shape[0]
    h = (n + 1) // 2
    if n % 2 == 0:
        part = np.partition(p, [h - 1, h], axis=0)
        med = 0.5 * (part[h - 1] + part[h])
        upper = part[h:]
    else:
        part = np.partition(p, h - 1, axis=0)
        med = part[h - 1]
        upper = part[h - 1:]
    lower = part[:h]
    s_a = _one_step(upper - med, cfg.c, cfg.alpha, h)
    s_b = _one_step(med - lower, cfg.c, cfg.alpha, h)
    return med, s_a, s_b


def half_scales(values, cfg: RhoConfig = DEFAULT_CONFIG) -> ScalePair:
    """Median and the above/below half-sample one-step M-scales.

    For even n the half samples are the h smallest and the h largest values;
    for odd n they share the middle observation.  A constant half sample
    yields a zero scale, which is reported rather than raised.
    """
    y = as_sample(values)
    med, s_a, s_b = _column_scales(y[:, None], cfg)
    return ScalePair(float(med[0]), float(s_a[0]), float(s_b[0]), y.size, (y.size + 1) // 2)


def _directional(y, med, s_above, s_below, strict=False):
    y = np.asarray(y, dtype=float)
    diff = y - med
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(diff >= 0, diff / s_above, -diff / s_below)
    out = np.where(diff == 0, 0.0, out)
    if strict and np.isinf(out).any():
        raise DegenerateDataError("half-sample scale is zero on the side of a point away from the median")
    return out


def do_univariate(y, values, cfg: RhoConfig = DEFAULT_CONFIG, strict: bool = False):
    """Directional outlyingness of ``y`` (scalar or array) relative to ``values``.

    Points strictly beyond the median on a side whose scale is zero get
    ``inf``; with ``strict=True`` a :class:`DegenerateDataError` is raised
    instead.
    """
    sp = half_scales(values, cfg)
    out = _directional(y, sp.median, sp.s_above, sp.s_below, strict)
    return out if out.ndim else float(out)


def do_sample(values, cfg: RhoConfig = DEFAULT_CONFIG, strict: bool = False) -> np.ndarray:
    """DO of every observation relative to its own sample."""
    y = as_sample(values)
    med, s_a, s_b = _column_scales(y[:, None], cfg)
    return _directional(y, med[0], s_a[0], s_b[0], strict)


def sdo_univariate(y, values, strict: bool = False):
    """Stahel-Donoho outlyingness ``|y - med| / MAD``."""
    v = as_sample(values)
    q = np.asarray(y, dtype=float)
    out = _symmetric(q.reshape(-1, 1), v[:, None], strict)[:, 0].reshape(q.shape)
    return out if out.ndim else float(out)


def sdo_sample(values, strict: bool = False) -> np.ndarray:
    """SDO of every observation relative to its own sample."""
    v = as_sample(values)
    return _symmetric(v[:, None], v[:, None], strict)[:, 0]


def _column_mad(p: np.ndarray):
    med = _median_axis0(p)
    return med, _median_axis0(np.abs(p - med)) / Q75


def _symmetric(q: np.ndarray, p: np.ndarray, strict=False) -> np.ndarray:
    """Column-wise SDO of query rows ``q`` relative to sample columns ``p``."""
    med, s = _column_mad(p)
    if q.ndim == 1:
        q = q[:, None]
    diff = np.abs(q - med)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(diff == 0, 0.0, diff / s)
    if strict and np.isinf(out).any():
        raise DegenerateDataError("MAD is zero")
    return out


def depth_transform(do_value):
    """Map outlyingness to depth, ``1 / (1 + DO)``."""
    d = np.asarray(do_value, dtype=float)
    if (d < 0).any():
        raise InputDataError("outlyingness values must be nonnegative")
    out = 1.0 / (1.0 + d)
    return out if out.ndim else float(out)
