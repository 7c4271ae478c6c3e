"""
Command line interface.

    diroutlier do data.csv --out results
    diroutlier fom curves.csv --weights w.csv --svg --out results
    diroutlier heatmap frames/ --mask mask.pgm --out results
    diroutlier theory --curve explosion --out results
    diroutlier simulate --kind lognormal --m 100 --out results
    diroutlier bench --sizes 10000 100000 1000000 --out results
    diroutlier --config results/do.csv --out rerun

Every output CSV starts with ``#`` comment lines echoing the configuration;
``--config`` re-runs a command from such an echo.  Exit codes: 0 success,
2 input error, 3 degenerate data, 4 configuration error.  Failures print one
JSON object to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import (
    ensure_inside,
    ingest_curves_csv,
    ingest_frames,
    ingest_mask,
    ingest_weights,
    ingest_matrix_csv,
    read_config_echo,
    write_fom_csv,
    write_heatmap_csv,
    write_table,
)
from .exceptions import ConfigError, DegenerateDataError, DirOutError, InputDataError
from .functional import (
    FunctionalDataset,
    derivative_augment_1d,
    flag_outliers,
    fom,
    gradient_augment_2d,
    pointwise_do_map,
    summarize,
)
from .multivariate import cdo, do_multivariate, generate_directions, sdo_multivariate
from .scales import RhoConfig, depth_transform, do_sample, sdo_sample
from .svg import fom_svg, heatmap_svg, write_svg

EXIT_CODES = {"input": 2, "degenerate": 3, "config": 4}

THEORY_CURVES = ("bias", "explosion", "implosion", "if_median", "if_s_oa", "if_s_a", "if_s_b", "if_do")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _common(p, seed=True):
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--c", type=float, default=2.1, help="Huber rho tuning constant")
    p.add_argument("--quantile", type=float, default=0.995, help="gaussian quantile of the cutoff")
    p.add_argument("--jobs", type=_positive_int, default=1, help="worker threads")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def _functional_inputs(p):
    p.add_argument("input", help="curves CSV (rows = functions) or a directory of frames")
    p.add_argument("--method", choices=("projection", "componentwise", "sdo"), default="projection")
    p.add_argument("--directions", type=_positive_int, default=None, help="directions per gridpoint (default 250 d)")
    p.add_argument("--weights", default=None, help="gridpoint weights CSV")
    p.add_argument("--mask", default=None, help="pixel mask (CSV of 0/1 or PGM) for frame input")
    p.add_argument("--channel", action="append", default=[], help="extra value channel CSV (repeatable)")
    p.add_argument("--frame-format", choices=("auto", "image", "csv"), default="auto")
    p.add_argument("--derivative", action="store_true", help="add derivatives (1-D) or gradients (2-D)")
    p.add_argument("--weighted-vdo", action="store_true", help="weighted standard deviation in vDO")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="diroutlier", description="Directional outlyingness for skewed, multivariate and functional data.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--config", default=None, help="re-run from the config echoed in an output CSV (or a JSON file)")
    ap.add_argument("--out", dest="config_out", default=None, help="output directory when re-running with --config")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    ap.subcommands = sub.choices

    p = sub.add_parser("do", help="DO of every row of a data matrix, with outlier flags")
    p.add_argument("input")
    p.add_argument("--method", choices=("projection", "componentwise", "sdo"), default="projection")
    p.add_argument("--directions", type=_positive_int, default=None, help="number of directions (default 250 d)")
    p.add_argument("--strict", action="store_true", help="fail on zero half-sample scales instead of returning inf")
    _common(p)

    for name, text in (("fdo", "functional summary (fDO, vDO, CFO, flags)"),
                       ("heatmap", "pointwise DO map of every function"),
                       ("fom", "functional outlier map points and cutoff curve")):
        p = sub.add_parser(name, help=text)
        _functional_inputs(p)
        _common(p)
        if name != "fdo":
            p.add_argument("--svg", action="store_true", help="also write an SVG rendering")
        if name == "heatmap":
            p.add_argument("--function", type=int, default=None, help="render only this function (2-D grids)")

    p = sub.add_parser("theory", help="bias curve or influence function table at the gaussian")
    p.add_argument("--curve", choices=THEORY_CURVES, required=True)
    p.add_argument("--eps", type=float, nargs="+", default=None, help="contamination fractions for bias curves")
    p.add_argument("--z", type=float, nargs="+", default=None, help="contamination positions for influence functions")
    p.add_argument("--x", type=float, default=2.0, help="evaluation point of if_do")
    _common(p, seed=False)

    p = sub.add_parser("simulate", help="run a contamination study")
    p.add_argument("--kind", choices=("lognormal", "skewnormal", "functional"), required=True)
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--d", type=_positive_int, default=2)
    p.add_argument("--m", type=_positive_int, default=100)
    p.add_argument("--frac", type=float, default=0.1)
    p.add_argument("--grid", type=float, nargs="+", default=None, help="contamination locations x (or slopes L)")
    p.add_argument("--T", type=_positive_int, default=50, help="gridpoints per curve (functional)")
    p.add_argument("--directions", type=_positive_int, default=None)
    p.add_argument("--rule", choices=("fdo", "cfo"), default="fdo", help="functional flag rule")
    p.add_argument("--methods", nargs="+", choices=("DO", "SDO"), default=["DO", "SDO"])
    _common(p)

    p = sub.add_parser("bench", help="timing of the univariate DO against sample size")
    p.add_argument("--sizes", type=_positive_int, nargs="+", default=[10_000, 100_000, 1_000_000])
    p.add_argument("--reps", type=_positive_int, default=5)
    _common(p)
    return ap


def _echo(args) -> dict:
    # thread count and output location do not affect results, so they are not echoed
    conf = {k: v for k, v in sorted(vars(args).items()) if k not in ("config", "config_out", "out", "jobs")}
    echo = {"command": args.command}
    if "seed" in conf:
        echo["seed"] = conf["seed"]
    echo["config"] = conf
    return echo


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _rho(args) -> RhoConfig:
    return RhoConfig(args.c)


def _check_quantile(q):
    if not 0.5 < q < 1:
        raise ConfigError(f"--quantile must lie in (0.5, 1), got {q}")


def cmd_do(args):
    _check_quantile(args.quantile)
    X = ingest_matrix_csv(args.input)
    cfg = _rho(args)
    if X.ndim == 1:
        vals = sdo_sample(X, strict=args.strict) if args.method == "sdo" else do_sample(X, cfg, strict=args.strict)
    else:
        if args.method == "componentwise":
            vals = cdo(X, X, cfg)
        else:
            dirs = generate_directions(X, args.directions, args.seed)
            if args.method == "sdo":
                vals = sdo_multivariate(X, X, dirs, n_jobs=args.jobs)
            else:
                vals = do_multivariate(X, X, dirs, cfg, n_jobs=args.jobs)
        if args.strict and np.isinf(vals).any():
            raise DegenerateDataError("some points have infinite outlyingness (zero scale in a direction)")
    vals = np.atleast_1d(vals)
    cutoff, flags = flag_outliers(vals, args.quantile)
    echo = _echo(args)
    echo["cutoff"] = cutoff
    rows = [(i, v, depth_transform(v), bool(f)) for i, (v, f) in enumerate(zip(vals, flags))]
    return [write_table(ensure_inside(_outdir(args), "do.csv"), ["id", "do", "depth", "flagged"], rows, echo)]


def _load_functional(args) -> FunctionalDataset:
    src = Path(args.input)
    if src.is_dir():
        seq = ingest_frames(src, args.frame_format)
        mask = ingest_mask(args.mask) if args.mask else None
        w = None
        if args.weights:
            J, K = seq.shape[1:3]
            w = ingest_weights(args.weights, J * K)
        D = seq.to_dataset(weights=w, mask=mask)
        if args.derivative:
            D = gradient_augment_2d(D, mask)
        return D
    if args.mask:
        raise ConfigError("--mask applies to frame directories only")
    D = ingest_curves_csv(src, args.weights, args.channel)
    return derivative_augment_1d(D) if args.derivative else D


def _summary(args):
    _check_quantile(args.quantile)
    D = _load_functional(args)
    dm = pointwise_do_map(D, args.method, args.directions, args.seed, _rho(args), args.jobs)
    return D, dm, summarize(dm, D.weights, args.weighted_vdo, args.quantile)


def cmd_fdo(args):
    _, _, s = _summary(args)
    curve = fom(s)[1]
    return list(write_fom_csv(ensure_inside(_outdir(args), "summary.csv"), s, curve, _echo(args)))


def cmd_fom(args):
    _, _, s = _summary(args)
    points, curve = fom(s)
    out = _outdir(args)
    written = list(write_fom_csv(ensure_inside(out, "fom.csv"), s, curve, _echo(args)))
    if args.svg:
        written.append(write_svg(ensure_inside(out, "fom.svg"), fom_svg(points, curve, s.flags)))
    return written


def cmd_heatmap(args):
    _check_quantile(args.quantile)
    D = _load_functional(args)
    dm = pointwise_do_map(D, args.method, args.directions, args.seed, _rho(args), args.jobs)
    out = _outdir(args)
    written = [write_heatmap_csv(ensure_inside(out, "heatmap.csv"), dm, _echo(args))]
    if args.svg:
        if len(dm.grid_shape) == 2:
            i = 0 if args.function is None else args.function
            if not 0 <= i < dm.values.shape[0]:
                raise ConfigError(f"--function {i} out of range for {dm.values.shape[0]} functions")
            grid = dm.as_grid()[i]
        else:
            grid = dm.values
        written.append(write_svg(ensure_inside(out, "heatmap.svg"), heatmap_svg(grid)))
    return written


def cmd_theory(args):
    from . import theory

    cfg = _rho(args)
    c = args.curve
    if c in ("bias", "explosion", "implosion"):
        eps = args.eps or list(np.round(np.linspace(0.01, 0.24, 24), 10))
        if c == "bias":
            rows = [(e, theory.explosion_bias(e, cfg), theory.implosion_bias(e, cfg)) for e in eps]
            cols = ["eps", "explosion", "implosion"]
        else:
            fn = theory.explosion_bias if c == "explosion" else theory.implosion_bias
            rows = [(e, fn(e, cfg)) for e in eps]
            cols = ["eps", c]
    else:
        zs = args.z or list(np.round(np.linspace(-4, 4, 81), 10))
        if c == "if_do":
            rows = [(z, theory.if_do(args.x, z, cfg)) for z in zs]
        elif c in ("if_median", "if_s_oa"):
            rows = [(z, getattr(theory, c)(z)) for z in zs]
        else:
            rows = [(z, getattr(theory, c)(z, cfg)) for z in zs]
        cols = ["z", c]
    return [write_table(ensure_inside(_outdir(args), f"theory_{c}.csv"), cols, rows, _echo(args))]


def cmd_simulate(args):
    from .simulation import StudyConfig, run_study

    _check_quantile(args.quantile)
    cfg = StudyConfig(kind=args.kind, n=args.n, d=args.d, m=args.m, frac=args.frac, grid=args.grid,
                      seed=args.seed, methods=tuple(args.methods), T=args.T, k=args.directions, c=args.c,
                      quantile=args.quantile, n_jobs=args.jobs, functional_rule=args.rule)
    res = run_study(cfg)
    rows = [(x, mth, f, fp, cfg.m, cfg.n, cfg.d if cfg.kind == "skewnormal" else 1, cfg.seed)
            for x, mth, f, fp in res.rows()]
    cols = ["location", "method", "flagged_pct", "false_positive_pct", "m", "n", "d", "seed"]
    return [write_table(ensure_inside(_outdir(args), f"study_{cfg.kind}.csv"), cols, rows, _echo(args))]


def cmd_bench(args):
    from .simulation import timing_benchmark

    res = timing_benchmark(args.sizes, args.reps, args.seed, _rho(args))
    echo = _echo(args)
    echo["slope"] = "" if res.slope is None else res.slope
    return [write_table(ensure_inside(_outdir(args), "bench.csv"), ["n", "mean_seconds", "min_seconds"],
                        res.timings, echo)]


COMMANDS = {
    "do": cmd_do,
    "fdo": cmd_fdo,
    "heatmap": cmd_heatmap,
    "fom": cmd_fom,
    "theory": cmd_theory,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
}


def _required(sub, dest) -> bool:
    return any(a.dest == dest and a.required for a in sub._actions)


def _from_config(parser, args) -> argparse.Namespace:
    conf = read_config_echo(args.config)
    if not isinstance(conf, dict) or conf.get("command") not in COMMANDS:
        raise ConfigError(f"{args.config}: echoed configuration names no known command")
    sub = parser.subcommands[conf["command"]]
    known = {a.dest: a.default for a in sub._actions if a.dest not in ("help", "out")}
    unknown = set(conf) - set(known) - {"command"}
    if unknown:
        raise ConfigError(f"{args.config}: unknown configuration keys {sorted(unknown)}")
    missing = [k for k, v in known.items() if k not in conf and v is None and _required(sub, k)]
    if missing:
        raise ConfigError(f"{args.config}: configuration lacks {missing}")
    ns = argparse.Namespace(**{**known, **conf})
    ns.out = args.config_out or "."
    return ns


def run(argv=None) -> list:
    """Parse ``argv`` and run the command; returns the paths written."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        args = _from_config(parser, args)
    elif args.command is None:
        raise ConfigError("no command given; see --help")
    return COMMANDS[args.command](args)


def _report(exc: DirOutError) -> int:
    code = EXIT_CODES.get(exc.category, 1)
    print(json.dumps({"error": exc.category, "exit_code": code, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        for path in run(argv):
            print(path)
    except DirOutError as exc:
        return _report(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
