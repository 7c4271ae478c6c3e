"""
Simulation studies: contaminated lognormal, skew-normal and sine-curve data.

Each study sweeps the location of the contamination over a grid and reports,
per method, the mean percentage of true outliers flagged and the mean
percentage of clean observations flagged.  SDO (with the same log-scale
cutoff) is the comparison method.

Replication ``r`` draws everything from ``SeedSequence([seed, r])``, so a
study is reproducible bit for bit and independent of how replications are
scheduled.  Within a replication the clean data are shared by all grid
locations.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import ConfigError, DegenerateDataError
from .functional import FunctionalDataset, flag_outliers, pointwise_do_map, summarize
from .multivariate import generate_directions, project
from .scales import DEFAULT_CONFIG, RhoConfig, _column_scales, _directional, _symmetric, do_sample

__all__ = [
    "StudyConfig",
    "StudyResult",
    "DEFAULT_ALPHA",
    "default_grid",
    "n_contaminated",
    "gen_lognormal_contaminated",
    "gen_skewnormal",
    "contaminate_multivariate",
    "gen_functional_sine",
    "run_study",
    "timing_benchmark",
    "first_crossing",
]

KINDS = ("lognormal", "skewnormal", "functional")
METHODS = ("DO", "SDO")
FUNCTIONAL_RULES = ("fdo", "cfo")

DEFAULT_ALPHA = {
    2: (10.0, 4.0),
    5: (10.0, 10.0, 4.0, 4.0, 4.0),
    10: (10.0,) * 5 + (4.0,) * 5,
}


def default_grid(kind: str) -> np.ndarray:
    """Contamination locations swept by default for each study kind."""
    if kind == "lognormal":
        return np.round(np.concatenate([np.arange(-5.0, 1.0, 0.25), np.arange(1.0, 40.5, 1.0)]), 10)
    if kind == "skewnormal":
        return np.round(np.arange(-6.0, 10.5, 0.5), 10)
    if kind == "functional":
        return np.round(np.concatenate([np.arange(-10.0, 0.0, 0.5), np.arange(5.0, 41.0, 1.0)]), 10)
    raise ConfigError(f"unknown study kind {kind!r}; choose from {KINDS}")


def n_contaminated(n: int, frac: float) -> int:
    """``floor(n * frac)``, robust to the representation error of ``frac``."""
    return int(math.floor(round(n * frac, 9)))


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def gen_lognormal_contaminated(n: int, frac: float, x: float, seed=0):
    """Standard lognormal sample with ``floor(n frac)`` points replaced by a point mass at ``x``.

    Returns ``(values, labels)`` with ``labels`` true for the contaminated points,
    which come last.
    """
    if not 0 <= frac < 1:
        raise ConfigError("contamination fraction must lie in [0, 1)")
    rng = _rng(seed)
    k = n_contaminated(n, frac)
    y = np.concatenate([rng.lognormal(0.0, 1.0, n - k), np.full(k, float(x))])
    labels = np.zeros(n, dtype=bool)
    labels[n - k:] = True
    return y, labels


def gen_skewnormal(n: int, d: int, alpha=None, seed=0) -> np.ndarray:
    """Draws from the density ``2 phi_d(y) Phi(alpha' y)``.

    Uses the representation ``u`` if ``u0 < alpha' u`` else ``-u`` with
    ``u0 ~ N(0, 1)`` and ``u ~ N_d(0, I)``.
    """
    if d < 1:
        raise ConfigError("dimension must be at least 1")
    if alpha is None:
        if d not in DEFAULT_ALPHA:
            raise ConfigError(f"no default shape vector for d={d}; pass alpha explicitly")
        alpha = DEFAULT_ALPHA[d]
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (d,))
    rng = _rng(seed)
    u = rng.standard_normal((n, d))
    u0 = rng.standard_normal(n)
    keep = u0 < u @ alpha
    return np.where(keep[:, None], u, -u)


def contaminate_multivariate(X, frac: float, x: float, seed=0):
    """Replace the last ``floor(n frac)`` rows by draws from ``N((x,...,x), I/20)``."""
    X = np.array(X, dtype=float)
    n, d = X.shape
    k = n_contaminated(n, frac)
    rng = _rng(seed)
    if k:
        X[n - k:] = float(x) + rng.standard_normal((k, d)) * math.sqrt(1.0 / 20.0)
    labels = np.zeros(n, dtype=bool)
    labels[n - k:] = True
    return X, labels


def gen_functional_sine(n: int, T: int, frac: float, L: float, seed=0, noise_sd: float = 1.0 / 20.0,
                        slopes=None):
    """Curves ``sin(2 pi t) + t L_i + noise`` on ``T`` equispaced points of [0, 1].

    Clean slopes are standard lognormal; the last ``floor(n frac)`` curves use
    the fixed slope ``L``.  ``slopes`` overrides the clean slopes (used to
    switch them off in tests).  Returns ``(dataset, labels)``.
    """
    if T < 3:
        raise ConfigError("need at least 3 gridpoints")
    rng = _rng(seed)
    k = n_contaminated(n, frac)
    t = np.linspace(0.0, 1.0, T)
    Li = rng.lognormal(0.0, 1.0, n) if slopes is None else np.broadcast_to(np.asarray(slopes, float), (n,)).copy()
    Li[n - k:] = float(L)
    noise = rng.standard_normal((n, T)) * noise_sd
    Y = np.sin(2 * np.pi * t)[None, :] + Li[:, None] * t[None, :] + noise
    labels = np.zeros(n, dtype=bool)
    labels[n - k:] = True
    return FunctionalDataset.from_curves(Y, t), labels


@dataclass
class StudyConfig:
    kind: str = "lognormal"
    n: int = 1000
    d: int = 2
    m: int = 100
    frac: float = 0.1
    grid: tuple | None = None
    seed: int = 0
    methods: tuple = METHODS
    T: int = 50
    k: int | None = None
    c: float = DEFAULT_CONFIG.c
    quantile: float = 0.995
    n_jobs: int = 1
    # functional flag rule: cutoff on fDO alone, or on the combined CFO
    functional_rule: str = "fdo"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown study kind {self.kind!r}; choose from {KINDS}")
        if self.m < 1 or self.n < 3:
            raise ConfigError("need m >= 1 replications and n >= 3 observations")
        if not 0 <= self.frac < 0.5:
            raise ConfigError("contamination fraction must lie in [0, 0.5)")
        if self.functional_rule not in FUNCTIONAL_RULES:
            raise ConfigError(f"unknown functional rule {self.functional_rule!r}; choose from {FUNCTIONAL_RULES}")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ConfigError(f"unknown methods {sorted(bad)}; choose from {METHODS}")
        grid = default_grid(self.kind) if self.grid is None else np.asarray(self.grid, dtype=float)
        self.grid = tuple(float(g) for g in np.sort(grid))
        self.methods = tuple(self.methods)


@dataclass
class StudyResult:
    """Mean flag percentages per (location, method), or timings per n."""

    config: dict
    locations: np.ndarray = field(default_factory=lambda: np.empty(0))
    flagged: dict = field(default_factory=dict)
    false_positive: dict = field(default_factory=dict)
    timings: list = field(default_factory=list)
    slope: float | None = None

    def rows(self):
        """Long-format rows ``(location, method, flagged %, false-positive %)``."""
        for method in self.flagged:
            for x, f, fp in zip(self.locations, self.flagged[method], self.false_positive[method]):
                yield float(x), method, float(f), float(fp)


def _flags(values, quantile):
    try:
        return flag_outliers(values, quantile)[1]
    except DegenerateDataError:
        return np.zeros(values.shape, dtype=bool)


def _univariate_scores(y, method, cfg):
    if method == "DO":
        return do_sample(y, cfg)
    return _symmetric(y[:, None], y[:, None])[:, 0]


def _replication(cfg: StudyConfig, rep: int):
    rc = RhoConfig(cfg.c)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, rep]))
    grid = cfg.grid
    flagged = {mth: np.full(len(grid), np.nan) for mth in cfg.methods}
    fpos = {mth: np.full(len(grid), np.nan) for mth in cfg.methods}
    if cfg.kind == "lognormal":
        clean, _ = gen_lognormal_contaminated(cfg.n, cfg.frac, 0.0, rng)
        k = n_contaminated(cfg.n, cfg.frac)
    elif cfg.kind == "skewnormal":
        clean = gen_skewnormal(cfg.n, cfg.d, None, rng)
        k = n_contaminated(cfg.n, cfg.frac)
        noise = rng.standard_normal((k, cfg.d)) * math.sqrt(1.0 / 20.0)
    else:
        base, labels0 = gen_functional_sine(cfg.n, cfg.T, cfg.frac, 0.0, rng)
        k = int(labels0.sum())
        t = base.t
    labels = np.zeros(cfg.n, dtype=bool)
    labels[cfg.n - k:] = True

    for gi, x in enumerate(grid):
        if cfg.kind == "lognormal":
            y = clean.copy()
            y[cfg.n - k:] = x
            scores = {mth: _univariate_scores(y, mth, rc) for mth in cfg.methods}
            flags = {mth: _flags(s, cfg.quantile) for mth, s in scores.items()}
        elif cfg.kind == "skewnormal":
            X = clean.copy()
            X[cfg.n - k:] = x + noise
            dirs = generate_directions(X, cfg.k, _derived_seed(cfg.seed, rep, gi))
            P = project(X, dirs.vectors)
            flags = {}
            for mth in cfg.methods:
                if mth == "DO":
                    med, s_a, s_b = _column_scales(P, rc)
                    s = _directional(P, med, s_a, s_b).max(axis=1)
                else:
                    s = _symmetric(P, P).max(axis=1)
                flags[mth] = _flags(s, cfg.quantile)
        else:
            vals = base.values.copy()
            # the base sample was generated with slope 0 for the contaminated rows
            vals[cfg.n - k:, :, 0] += x * t[None, :]
            D = FunctionalDataset(vals, base.grid_shape, base.weights, t)
            flags = {}
            for mth in cfg.methods:
                dm = pointwise_do_map(D, "projection" if mth == "DO" else "sdo", cfg=rc)
                try:
                    summary = summarize(dm, D.weights, quantile=cfg.quantile)
                    flags[mth] = summary.flags if cfg.functional_rule == "cfo" else summary.flags_fdo
                except DegenerateDataError:
                    flags[mth] = np.zeros(cfg.n, dtype=bool)
        for mth in cfg.methods:
            f = flags[mth]
            flagged[mth][gi] = 100.0 * f[labels].mean() if k else np.nan
            fpos[mth][gi] = 100.0 * f[~labels].mean()
    return flagged, fpos


def _derived_seed(*keys) -> int:
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])


def run_study(cfg: StudyConfig) -> StudyResult:
    """Average flag percentages over ``cfg.m`` replications for every grid location."""
    reps = range(cfg.m)
    if cfg.n_jobs and cfg.n_jobs > 1:
        with ThreadPoolExecutor(cfg.n_jobs) as ex:
            results = list(ex.map(lambda r: _replication(cfg, r), reps))
    else:
        results = [_replication(cfg, r) for r in reps]
    flagged = {mth: np.mean([r[0][mth] for r in results], axis=0) for mth in cfg.methods}
    fpos = {mth: np.mean([r[1][mth] for r in results], axis=0) for mth in cfg.methods}
    conf = asdict(cfg)
    conf.pop("n_jobs")
    return StudyResult(conf, np.asarray(cfg.grid), flagged, fpos)


def first_crossing(locations, percentages, level: float = 95.0, direction: str = "right", start: float = 1.0):
    """First location, moving away from ``start``, where the flag percentage reaches ``level``.

    ``direction`` is ``right`` (increasing locations) or ``left``.  Returns
    ``None`` when the level is never reached.
    """
    loc = np.asarray(locations, dtype=float)
    pct = np.asarray(percentages, dtype=float)
    if direction == "right":
        sel = np.flatnonzero(loc >= start)
    else:
        sel = np.flatnonzero(loc <= start)[::-1]
    for i in sel:
        if pct[i] >= level:
            return float(loc[i])
    return None


def timing_benchmark(n_grid=(10_000, 100_000, 1_000_000), reps: int = 5, seed: int = 0,
                     cfg: RhoConfig = DEFAULT_CONFIG) -> StudyResult:
    """Wall-clock time of the univariate DO of a whole gaussian sample, per sample size.

    The slope of log(time) against log(n) is reported when at least two sizes
    are timed.
    """
    n_grid = [int(v) for v in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ConfigError("sample sizes must be increasing")
    rng = np.random.default_rng(seed)
    timings = []
    for n in n_grid:
        y = rng.standard_normal(n)
        do_sample(y, cfg)  # warm-up
        ts = []
        for _ in range(reps):
            t0 = time.perf_counter()
            do_sample(y, cfg)
            ts.append(time.perf_counter() - t0)
        timings.append((n, float(np.mean(ts)), float(np.min(ts))))
    slope = None
    if len(n_grid) >= 2:
        ln = np.log([t[0] for t in timings])
        lt = np.log([t[1] for t in timings])
        slope = float(np.polyfit(ln, lt, 1)[0])
    conf = {"kind": "timing", "n_grid": n_grid, "reps": reps, "seed": seed, "c": cfg.c}
    return StudyResult(conf, timings=timings, slope=slope)
