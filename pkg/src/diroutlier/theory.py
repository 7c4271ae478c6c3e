"""
Bias curves and influence functions of the half-sample scale ``s_a`` and of DO.

Everything is evaluated at a symmetric unimodal model distribution, by default
the standard gaussian.  ``dist`` may be any object with ``cdf``, ``sf``,
``pdf`` and ``ppf`` (a scipy distribution, frozen or not), but only the
gaussian is exercised by the test suite.

Integrals of the Huber rho function over ``[mu, inf)`` are split at the kink
``mu + c*sigma`` before adaptive quadrature; beyond the kink rho is constant
and the integral is a survival probability.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.stats import norm

from .exceptions import ConfigError, InputDataError
from .scales import DEFAULT_CONFIG, Q75, RhoConfig, _column_scales, _median_axis0

__all__ = [
    "median_explosion",
    "soa_explosion",
    "soa_implosion",
    "implosion_bias",
    "explosion_bias",
    "explosion_point",
    "rho_integral",
    "model_scales",
    "sa_mixture",
    "mixture_quantile",
    "if_median",
    "if_s_oa",
    "if_s_a",
    "if_s_b",
    "if_do",
    "empirical_if",
]

QUAD_TOL = 1e-10
ESTIMATORS = ("median", "s_oa", "s_a", "s_b", "do")


def _check_eps(eps):
    eps = float(eps)
    if not 0 < eps < 0.25:
        raise ConfigError(f"contamination fraction must lie in (0, 0.25), got {eps}")
    return eps


def rho_integral(mu, sigma, cfg: RhoConfig = DEFAULT_CONFIG, dist=norm, tol=QUAD_TOL) -> float:
    """``int_mu^inf rho_c((x - mu) / sigma) dF(x)``."""
    kink = mu + cfg.c * sigma
    inner, _ = quad(lambda x: ((x - mu) / (cfg.c * sigma)) ** 2 * dist.pdf(x), mu, kink,
                    epsabs=tol, epsrel=tol, limit=200)
    return inner + float(dist.sf(kink))


def _rho_prime_moments(mu, sigma, cfg, dist, tol=QUAD_TOL):
    """``int rho'(u) dF`` and ``int rho'(u) (x - mu) dF`` over ``[mu, mu + c sigma]``, u = (x-mu)/sigma."""
    kink = mu + cfg.c * sigma
    c2 = cfg.c**2
    m0, _ = quad(lambda x: 2 * (x - mu) / (sigma * c2) * dist.pdf(x), mu, kink, epsabs=tol, epsrel=tol, limit=200)
    m1, _ = quad(lambda x: 2 * (x - mu) ** 2 / (sigma * c2) * dist.pdf(x), mu, kink, epsabs=tol, epsrel=tol, limit=200)
    return m0, m1


def median_explosion(eps, dist=norm) -> float:
    """Largest median reachable with a fraction ``eps`` of contamination."""
    return float(dist.ppf(1.0 / (2.0 * (1.0 - eps))))


def soa_implosion(eps, dist=norm) -> float:
    """Smallest initial scale ``s_oa`` under the least favorable contamination."""
    return float(dist.ppf((3 - 4 * eps) / (4 * (1 - eps))) - dist.ppf(1 / (2 * (1 - eps)))) / Q75


def soa_explosion(eps, dist=norm) -> float:
    """Largest initial scale ``s_oa`` under the least favorable contamination."""
    return float(dist.ppf(3 / (4 * (1 - eps))) - dist.ppf(1 / (2 * (1 - eps)))) / Q75


def implosion_bias(eps, cfg: RhoConfig = DEFAULT_CONFIG, dist=norm) -> float:
    """Infimum of ``s_a`` over all ``eps``-contaminated versions of ``dist``.

    Reached by putting the contamination at the largest attainable median.
    """
    eps = _check_eps(eps)
    m = median_explosion(eps, dist)
    s0 = soa_implosion(eps, dist)
    if s0 <= 0:
        return 0.0
    val = s0**2 / cfg.alpha * (1 - eps) * rho_integral(m, s0, cfg, dist)
    return math.sqrt(val)


def explosion_bias(eps, cfg: RhoConfig = DEFAULT_CONFIG, dist=norm) -> float:
    """Supremum of ``s_a`` over all ``eps``-contaminated versions of ``dist``.

    Reached by a point mass far enough to the right to land on the flat part
    of rho.
    """
    eps = _check_eps(eps)
    m = median_explosion(eps, dist)
    s0 = soa_explosion(eps, dist)
    val = s0**2 / cfg.alpha * ((1 - eps) * rho_integral(m, s0, cfg, dist) + eps)
    return math.sqrt(val)


def explosion_point(eps, cfg: RhoConfig = DEFAULT_CONFIG, dist=norm) -> float:
    """Threshold beyond which a point mass realizes the explosion bias."""
    return median_explosion(eps, dist) + cfg.c * soa_explosion(eps, dist)


def mixture_quantile(p, eps, z, dist=norm) -> float:
    """Lower ``p``-quantile of ``(1 - eps) F + eps Delta(z)``."""
    if (1 - eps) * dist.cdf(z) >= p:
        return float(dist.ppf(p / (1 - eps)))
    if (1 - eps) * dist.cdf(z) + eps >= p:
        return float(z)
    return float(dist.ppf((p - eps) / (1 - eps)))


def model_scales(cfg: RhoConfig = DEFAULT_CONFIG, dist=norm):
    """``(med, s_oa, s_a)`` of the model distribution itself."""
    return sa_mixture(0.0, 0.0, cfg, dist, full=True)


def sa_mixture(eps, z, cfg: RhoConfig = DEFAULT_CONFIG, dist=norm, full=False):
    """``s_a`` of the contaminated distribution ``(1 - eps) F + eps Delta(z)``.

    With ``full=True`` returns ``(med, s_oa, s_a)``.
    """
    m = mixture_quantile(0.5, eps, z, dist)
    q3 = mixture_quantile(0.75, eps, z, dist)
    s0 = (q3 - m) / Q75
    if s0 <= 0:
        return (m, 0.0, 0.0) if full else 0.0
    integral = (1 - eps) * rho_integral(m, s0, cfg, dist)
    if eps > 0 and z >= m:
        u = (z - m) / (cfg.c * s0)
        integral += eps * (u * u if u <= 1 else 1.0)
    sa = s0 * math.sqrt(integral / cfg.alpha)
    return (m, s0, sa) if full else sa


def _right(z, side):
    if side not in ("right", "left"):
        raise ConfigError("side must be 'right' or 'left'")
    return side == "right"


def if_median(z, dist=norm, side: str = "right") -> float:
    """Influence function of the median, ``sign(z - m) / (2 f(m))``; 0 at ``z = m``."""
    m = float(dist.ppf(0.5))
    z = float(z)
    if z == m:
        return 0.0
    return math.copysign(1.0, z - m) / (2.0 * float(dist.pdf(m)))


def if_s_oa(z, dist=norm, side: str = "right") -> float:
    """Influence function of the initial scale ``s_oa = (Q3 - med) / Phi^{-1}(0.75)``.

    Jumps at the median and at the third quartile; ``side`` picks the
    one-sided limit there.
    """
    right = _right(z, side)
    z = float(z)
    m = float(dist.ppf(0.5))
    q3 = float(dist.ppf(0.75))
    below_q3 = z < q3 if right else z <= q3
    if z == m:
        im = 1.0 / (2 * float(dist.pdf(m))) if right else -1.0 / (2 * float(dist.pdf(m)))
    else:
        im = if_median(z, dist)
    iq3 = (0.75 - (1.0 if below_q3 else 0.0)) / float(dist.pdf(q3))
    return (iq3 - im) / Q75


def if_s_a(z, cfg: RhoConfig = DEFAULT_CONFIG, dist=norm, side: str = "right") -> float:
    """Influence function of the one-step scale ``s_a``.

    Obtained by differentiating ``s_a^2 = s_oa^2 / alpha * int_m^inf rho((x-m)/s_oa) dF``
    along the contamination and solving for ``IF(s_a)``.
    """
    right = _right(z, side)
    z = float(z)
    m, s0, sa = model_scales(cfg, dist)
    i0 = rho_integral(m, s0, cfg, dist)
    m0, m1 = _rho_prime_moments(m, s0, cfg, dist)
    ioa = if_s_oa(z, dist, side)
    if z == m:
        imed = 1.0 / (2 * float(dist.pdf(m))) if right else -1.0 / (2 * float(dist.pdf(m)))
    else:
        imed = if_median(z, dist)
    u = (z - m) / (cfg.c * s0)
    point = (u * u if u <= 1 else 1.0) if z >= m else 0.0
    rhs = (2.0 / s0 * i0 - m1 / s0**2) * ioa - m0 / s0 * imed + (point - i0)
    return rhs * s0**2 / (2.0 * cfg.alpha * sa)


def if_s_b(z, cfg: RhoConfig = DEFAULT_CONFIG, dist=norm, side: str = "right") -> float:
    """Influence function of ``s_b``, the mirror image of ``s_a`` at a symmetric model."""
    mirrored = "left" if _right(z, side) else "right"
    m = float(dist.ppf(0.5))
    return if_s_a(2 * m - float(z), cfg, dist, mirrored)


def if_do(x, z, cfg: RhoConfig = DEFAULT_CONFIG, dist=norm, side: str = "right") -> float:
    """Influence function at ``z`` of the outlyingness ``DO(x)`` of a fixed point ``x``."""
    x = float(x)
    m, _, sa = model_scales(cfg, dist)
    if x == m:
        raise InputDataError("IF of DO(x) is undefined at the median")
    imed = if_median(z, dist, side)
    if x > m:
        return -(imed * sa + if_s_a(z, cfg, dist, side) * (x - m)) / sa**2
    sb = sa  # symmetric model
    return (imed * sb - if_s_b(z, cfg, dist, side) * (m - x)) / sb**2


def _functional(estimator, eps, z, cfg, dist, x):
    m, s0, sa = sa_mixture(eps, z, cfg, dist, full=True)
    if estimator == "median":
        return m
    if estimator == "s_oa":
        return s0
    if estimator == "s_a":
        return sa
    if estimator == "s_b":
        # s_b at F_eps,z equals s_a of the mirrored mixture
        return sa_mixture(eps, 2 * float(dist.ppf(0.5)) - z, cfg, dist)
    if estimator == "do":
        if x is None:
            raise ConfigError("estimator 'do' needs the evaluation point x")
        if x >= m:
            return (x - m) / sa
        sb = sa_mixture(eps, 2 * float(dist.ppf(0.5)) - z, cfg, dist)
        return (m - x) / sb
    raise ConfigError(f"unknown estimator {estimator!r}; choose from {ESTIMATORS}")


def empirical_if(estimator: str, z: float, eps: float = 1e-5, n: int | None = None, seed: int = 0,
                 x: float | None = None, cfg: RhoConfig = DEFAULT_CONFIG, dist=norm) -> float:
    """Numerical Gateaux derivative of an estimator toward a point mass at ``z``.

    Without ``n`` the contaminated functional is evaluated exactly (mixture
    quantiles plus quadrature) and ``(T(F_eps) - T(F)) / eps`` is returned.
    With ``n`` a gaussian sample of that size is drawn from ``seed`` and the
    finite-sample estimator is compared with and without ``round(eps n)``
    extra points at ``z``.
    """
    if estimator not in ESTIMATORS:
        raise ConfigError(f"unknown estimator {estimator!r}; choose from {ESTIMATORS}")
    if n is None:
        base = _functional(estimator, 0.0, float(z), cfg, dist, x)
        return (_functional(estimator, float(eps), float(z), cfg, dist, x) - base) / eps
    rng = np.random.default_rng(seed)
    sample = np.asarray(dist.ppf(rng.random(int(n))), dtype=float)
    n_add = max(1, int(round(eps * n)))
    contaminated = np.concatenate([sample, np.full(n_add, float(z))])
    eff_eps = n_add / contaminated.size
    return (_sample_estimate(estimator, contaminated, cfg, x) - _sample_estimate(estimator, sample, cfg, x)) / eff_eps


def _sample_estimate(estimator, y, cfg, x):
    if estimator == "median":
        return float(_median_axis0(y))
    if estimator == "s_oa":
        n = y.size
        h = (n + 1) // 2
        part = np.sort(y)
        med = float(_median_axis0(y))
        upper = part[h:] if n % 2 == 0 else part[h - 1:]
        return float(_median_axis0(upper - med)) / Q75
    med, s_a, s_b = (float(a[0]) for a in _column_scales(y[:, None], cfg))
    if estimator == "s_a":
        return s_a
    if estimator == "s_b":
        return s_b
    if x is None:
        raise ConfigError("estimator 'do' needs the evaluation point x")
    return (x - med) / s_a if x >= med else (med - x) / s_b
