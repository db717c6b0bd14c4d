"""Command line front end: ``rdwate {estimate,diagnose,simulate,bandwidth}``.

Results go to ``--out`` (or stdout) as JSON; curves go out as CSV. On any
error the exit status is 1 and standard error receives one JSON line
(``{"error": ..., "message": ...}``) followed by a plain-language line.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bandwidth import (BandwidthError, couple_bandwidths, cv_curve, default_grid,
                        select_bandwidth_cv)
from .data import DataError, Dataset
from .density import DensityError
from .diagnostics import density_profile, jump_table
from .estimators import EstimationError, estimate_fuzzy, estimate_sharp
from .inference import InferenceConfig, InferenceError, Method
from .io import SCHEMA_VERSION, emit_result, envelope, load_csv, rows_to_csv
from .kernels import DEFAULT_KERNEL, DegenerateMomentsError, KernelSpec
from .simulation import McConfig, bandwidth_sweep, run_monte_carlo
from .weights import Estimand, WeightError, WeightScheme

log = logging.getLogger("rdwate")

_EXPECTED = (DataError, DensityError, EstimationError, InferenceError, WeightError,
             BandwidthError, DegenerateMomentsError, OSError, ValueError)


# flags that only affect scheduling or output location, never results
_NOT_ECHOED = {"threads", "out", "func", "verbose"}


def _echo(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_ECHOED}


def _add_common(p: argparse.ArgumentParser, data: bool = True) -> None:
    if data:
        p.add_argument("data", help="CSV with columns y, x, optional z1..zk and t")
        p.add_argument("--cutoff", type=float, default=0.0)
    p.add_argument("--kernel", choices=[k.value for k in KernelSpec], default=DEFAULT_KERNEL.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def _add_bandwidth(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--bandwidth", type=float, default=None, help="regression bandwidth h")
    g.add_argument("--cv", action="store_true", help="choose h by cross-validation (default)")
    p.add_argument("--h1", type=float, default=None, help="override the joint-density bandwidth")
    p.add_argument("--h2", type=float, default=None, help="override the marginal-density bandwidth")
    p.add_argument("--pretreatment", action="store_true",
                   help="covariates are unaffected by treatment; all bandwidths equal h")


class _Parser(argparse.ArgumentParser):
    """Usage errors follow the same two-line stderr convention as runtime errors."""

    def error(self, message):
        _report_error(argparse.ArgumentError(None, message))
        self.exit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rdwate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="weighted local linear effect estimate")
    _add_common(p)
    _add_bandwidth(p)
    p.add_argument("--estimand", choices=[e.value for e in Estimand], default=Estimand.W1.value)
    p.add_argument("--fuzzy", action="store_true", help="treatment column t is not deterministic")
    p.add_argument("--clip-eps", type=float, default=1e-3)
    p.add_argument("--inference", choices=["bootstrap", "plugin", "none"], default="bootstrap")
    p.add_argument("--bootstrap", type=int, default=500, metavar="B")
    p.add_argument("--level", type=float, default=0.95)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("diagnose", help="covariate jump tests and density profiles")
    _add_common(p)
    _add_bandwidth(p)
    p.add_argument("--bootstrap", type=int, default=200, metavar="B")
    p.add_argument("--profile-dir", default=None, help="write one profile CSV per covariate here")
    p.add_argument("--grid-points", type=int, default=101)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("simulate", help="Monte Carlo study on the built-in designs")
    _add_common(p, data=False)
    p.add_argument("--setting", type=int, choices=[1, 2], default=1)
    p.add_argument("--n", type=int, default=2000)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--beta", type=float, default=None, help="setting 1 covariate coefficient")
    g.add_argument("--gamma", type=float, default=None, help="setting 2 covariate jump")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--estimators", default="rd,wll", help="comma list from rd, wll, w2, w3")
    p.add_argument("--bandwidth", type=float, default=None, help="fixed h (default: CV on replicate 0)")
    p.add_argument("--h1", type=float, default=None)
    p.add_argument("--h2", type=float, default=None)
    p.add_argument("--pretreatment", action="store_true")
    p.add_argument("--clip-eps", type=float, default=1e-3)
    p.add_argument("--inference", choices=["bootstrap", "plugin", "none"], default="plugin")
    p.add_argument("--bootstrap", type=int, default=200, metavar="B")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--sweep", type=int, default=None, metavar="K",
                   help="instead of a report, emit a CSV of MSE over K bandwidths")
    p.add_argument("--sweep-range", type=float, nargs=2, default=(0.1, 1.0), metavar=("LO", "HI"),
                   help="log-spaced sweep from LO to HI, in running-variable units")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bandwidth", help="cross-validation curve as CSV")
    _add_common(p)
    p.add_argument("--grid", type=float, nargs="+", default=None, help="explicit bandwidth grid")
    p.set_defaults(func=cmd_bandwidth)
    return parser


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _regression_h(args, ds: Dataset, kernel: KernelSpec) -> float:
    if args.bandwidth is not None:
        return args.bandwidth
    return select_bandwidth_cv(ds, kernel)


def cmd_estimate(args) -> None:
    kernel = KernelSpec.parse(args.kernel)
    ds = load_csv(args.data, args.cutoff, args.fuzzy)
    h = _regression_h(args, ds, kernel)
    bw = couple_bandwidths(h, args.pretreatment, ds.x.std(ddof=1), args.h1, args.h2)
    scheme = WeightScheme(Estimand.parse(args.estimand), args.clip_eps, args.pretreatment)
    inf = None
    if args.inference != "none":
        inf = InferenceConfig(Method(args.inference), B=args.bootstrap, seed=args.seed,
                              level=args.level, threads=args.threads)
    if args.fuzzy:
        res = estimate_fuzzy(ds, scheme, kernel, bw, inf)
    else:
        res = estimate_sharp(ds, scheme, kernel, bw, inf)
    payload = res.to_dict()
    payload["n"] = ds.n
    payload["covariates"] = list(ds.covariate_names)
    emit_result(envelope("estimate", payload, _echo(args)), args.out, sys.stdout)


def cmd_diagnose(args) -> None:
    kernel = KernelSpec.parse(args.kernel)
    ds = load_csv(args.data, args.cutoff)
    if ds.p == 0:
        raise DataError("no covariate columns (z1, z2, ...) to diagnose")
    tests = []
    for test in jump_table(ds, kernel, _diag_h(args, ds, kernel), args.bootstrap,
                           args.seed, args.threads):
        tests.append(test.to_dict())
    profiles = []
    if args.profile_dir is not None:
        outdir = Path(args.profile_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        h = _regression_h(args, ds, kernel)
        bw = couple_bandwidths(h, args.pretreatment, ds.x.std(ddof=1), args.h1, args.h2)
        for j, name in enumerate(ds.covariate_names):
            zj = ds.z[:, j]
            pad = 0.1 * np.ptp(zj) + 1e-12
            grid = np.linspace(zj.min() - pad, zj.max() + pad, args.grid_points)
            prof = density_profile(ds, j, grid, kernel, bw.h1)
            path = outdir / f"profile_{name}.csv"
            path.write_text(prof.to_csv())
            profiles.append(str(path))
    payload = {"n": ds.n, "tests": tests, "profiles": profiles}
    emit_result(envelope("diagnose", payload, _echo(args)), args.out, sys.stdout)


def _diag_h(args, ds: Dataset, kernel: KernelSpec) -> float:
    # one CV bandwidth for the whole table, chosen on the first covariate
    if args.bandwidth is not None:
        return args.bandwidth
    return select_bandwidth_cv(ds.with_outcome(ds.z[:, 0]), kernel)


def _mc_config(args) -> McConfig:
    param = args.beta if args.setting == 1 else args.gamma
    if args.setting == 1 and args.gamma is not None or args.setting == 2 and args.beta is not None:
        raise ValueError("use --beta with setting 1 and --gamma with setting 2")
    return McConfig(
        setting=args.setting, n=args.n, param=1.0 if param is None else param, reps=args.reps,
        seed=args.seed, estimators=tuple(s.strip() for s in args.estimators.split(",") if s.strip()),
        bandwidth="cv" if args.bandwidth is None else args.bandwidth, kernel=args.kernel,
        inference=args.inference, B=args.bootstrap, level=args.level,
        pretreatment=args.pretreatment, clip_epsilon=args.clip_eps, h1=args.h1, h2=args.h2,
        threads=args.threads,
    )


def cmd_simulate(args) -> None:
    cfg = _mc_config(args)
    if args.sweep is not None:
        lo, hi = args.sweep_range
        grid = np.geomspace(lo, hi, args.sweep) if args.sweep > 1 else np.array([lo])
        _write(rows_to_csv(bandwidth_sweep(cfg, grid)), args.out)
        return
    report = run_monte_carlo(cfg)
    emit_result(envelope("simulate", report.to_dict(), _echo(args)), args.out, sys.stdout)


def cmd_bandwidth(args) -> None:
    kernel = KernelSpec.parse(args.kernel)
    ds = load_csv(args.data, args.cutoff)
    grid = default_grid(ds) if args.grid is None else np.asarray(args.grid, dtype=float)
    curve = cv_curve(ds, kernel, grid)
    best = select_bandwidth_cv(ds, kernel, grid)
    rows = [{"h": float(h), "cv_error": float(e), "selected": int(h == best)}
            for h, e in zip(grid, curve)]
    _write(rows_to_csv(rows), args.out)


def _report_error(exc: BaseException) -> None:
    record = {"error": type(exc).__name__, "message": str(exc), "schema_version": SCHEMA_VERSION}
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
    sys.stderr.write(f"rdwate: error: {exc}\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except _EXPECTED as exc:
        _report_error(exc)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
