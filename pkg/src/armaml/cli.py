"""Command-line interface: ``armaml {fit,aic-table,profile,study,simulate}``.

Exit status is 0 on success, 2 for bad input (unreadable CSV, invalid flags or
parameters) and 3 when fitting fails numerically.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np

from .core import ArmaError, ArmaOrder, ArmaParams, PreconditionError
from .inference import build_aic_table, fisher_se, profile_ci
from .io import InputFormatError, Manifest, dump_json, read_series, write_series
from .multistart import MultistartConfig, fit_multistart, fit_single
from .optimize import OptimizerConfig
from .sampler import SamplerConfig
from . import sim

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3
THREADS_ENV = "ARMAML_THREADS"

log = logging.getLogger("armaml")


class UsageError(ValueError):
    pass


def _floats(text: Optional[str]) -> list[float]:
    if text is None or not text.strip():
        return []
    try:
        return [float(t) for t in text.replace(" ", ",").split(",") if t]
    except ValueError:
        raise UsageError(f"cannot parse number list {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise UsageError(f"cannot parse integer list {text!r}") from None


def _orders(text: str) -> list[tuple[int, int]]:
    out = []
    for tok in text.split(","):
        try:
            p, q = tok.lower().split("x")
            out.append((int(p), int(q)))
        except ValueError:
            raise UsageError(f"orders are written PxQ, got {tok!r}") from None
    return out


def _grid(text: Optional[str]) -> dict:
    """``"n=50,100;orders=1x1,3x3;M=1,3,10"`` into a dict of parsed values."""
    out: dict = {}
    if not text:
        return out
    for part in text.split(";"):
        if not part.strip():
            continue
        key, _, val = part.partition("=")
        key = key.strip()
        if key == "orders":
            out[key] = _orders(val)
        elif key in ("n", "M"):
            out[key] = _ints(val)
        elif key in ("max_p", "max_q"):
            out[key] = int(val)
        else:
            raise UsageError(f"unknown grid key {key!r}")
    return out


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _add_fit_flags(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--mean", action=argparse.BooleanOptionalAction, default=True,
                    help="estimate a constant mean (default on)")
    mode = ap.add_mutually_exclusive_group()
    mode.add_argument("--single", dest="single", action="store_true", help="single CSS-initialized fit")
    mode.add_argument("--multistart", dest="single", action="store_false", help="multi-start fit (default)")
    ap.add_argument("--M", type=int, default=10, help="stop after M restarts without improvement")
    ap.add_argument("--max-starts", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-iters", type=int, default=500)
    ap.add_argument("--method", choices=("bfgs", "nelder-mead"), default="bfgs")
    ap.add_argument("--alpha", type=float, default=0.01, help="minimum AR/MA inverted-root distance")
    ap.add_argument("--p-real", type=float, default=math.sqrt(0.5))
    ap.add_argument("--gamma", type=float, default=0.05)
    ap.add_argument("--threads", type=int, default=_default_threads(),
                    help=f"worker cap (default from ${THREADS_ENV}, else 1)")


def _config(args) -> MultistartConfig:
    try:
        return MultistartConfig(
            M=args.M,
            max_starts=1 if getattr(args, "single", False) else args.max_starts,
            sampler=SamplerConfig(alpha=args.alpha, p_real=args.p_real, gamma=args.gamma, seed=args.seed),
            optimizer=OptimizerConfig(max_iters=args.max_iters, method=args.method),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(doc: dict, path: Optional[str]) -> None:
    if path == "-":
        sys.stdout.write(dump_json(doc))
    elif path:
        dump_json(doc, path)


def _coef_table(names, est, se) -> str:
    lines = [f"{'':<8}{'Estimate':>12}{'s.e.':>12}"]
    for n, e, s in zip(names, est, se):
        lines.append(f"{n:<8}{e:>12.4f}{('NA' if not np.isfinite(s) else f'{s:.4f}'):>12}")
    return "\n".join(lines)


def cmd_fit(args) -> int:
    series, digest = read_series(args.csv)
    order = ArmaOrder(args.p, args.q, args.mean)
    cfg = _config(args)
    man = Manifest("fit", {"p": args.p, "q": args.q, "single": args.single, **cfg.to_dict()}, args.seed, digest)
    if args.threads > 1 and not args.single:
        with ThreadPoolExecutor(args.threads) as ex:
            fit = fit_multistart(series, order, cfg, executor=ex)
    else:
        fit = fit_single(series, order, cfg) if args.single else fit_multistart(series, order, cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = fit.with_se(fisher_se(fit, series, order))
    names = order.param_names()
    print(f"{order}  n={series.n}  loglik={fit.loglik:.4f}  aic={fit.aic:.4f}  starts={fit.n_starts_used}")
    print(_coef_table(names, fit.params.to_vector(order.include_mean), fit.se))
    print(f"sigma2  {fit.params.sigma2:.4f}")
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    doc = {"schema_version": man.to_dict()["schema_version"], "result": fit.to_dict(),
           "warnings": [str(w.message) for w in caught], "manifest": man.to_dict()}
    _emit(doc, args.json)
    return EXIT_OK


def cmd_aic_table(args) -> int:
    series, digest = read_series(args.csv)
    cfg = _config(args)
    table = build_aic_table(series, args.max_p, args.max_q, cfg, include_mean=args.mean, baseline=args.single)
    man = Manifest("aic-table", {"max_p": args.max_p, "max_q": args.max_q, "baseline": args.single, **cfg.to_dict()},
                   args.seed, digest)
    print(table.to_text(args.digits))
    doc = {"schema_version": man.to_dict()["schema_version"], "table": table.to_dict(), "manifest": man.to_dict()}
    _emit(doc, args.json)
    return EXIT_OK


def cmd_profile(args) -> int:
    series, digest = read_series(args.csv)
    order = ArmaOrder(args.p, args.q, args.mean)
    if args.param not in order.param_names():
        raise UsageError(f"--param must be one of {order.param_names()}")
    if not 0 < args.level < 1:
        raise UsageError("--level must lie in (0, 1)")
    cfg = _config(args)
    fit = fit_multistart(series, order, cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = fit.with_se(fisher_se(fit, series, order))
    curve = profile_ci(series, order, fit, args.param, args.level, cfg)
    man = Manifest("profile", {"p": args.p, "q": args.q, "param": args.param, "level": args.level, **cfg.to_dict()},
                   args.seed, digest)
    lo = "-" if curve.low_truncated else ""
    hi = "+" if curve.high_truncated else ""
    print(f"{args.param}: mle={curve.mle:.4f}  {args.level:.0%} PLCI=({curve.ci_low:.4f}{lo}, {curve.ci_high:.4f}{hi})")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["parameter", "value", "profile_loglik", "inside"])
            w.writeheader()
            w.writerows(curve.to_rows())
        dump_json(man.to_dict(), args.out + ".manifest.json")
    doc = {"schema_version": man.to_dict()["schema_version"], "profile": curve.to_dict(), "fit": fit.to_dict(),
           "manifest": man.to_dict()}
    _emit(doc, args.json)
    return EXIT_OK


DEFAULT_COVERAGE_GENERATORS = (
    ("AR(1)", ArmaOrder(1, 0), ArmaParams([0.7], [])),
    ("ARMA(2,1)", ArmaOrder(2, 1), ArmaParams([0.5, 0.24], [0.5])),
)


def cmd_study(args) -> int:
    cfg = _config(args)
    g = _grid(args.grid)
    reps = args.replicates
    common = dict(cfg=cfg, seed=args.seed, n_jobs=args.threads)
    digest = None
    if args.kind == "improvement":
        report = sim.run_improvement_study(ns=g.get("n", (50, 100, 500, 1000)),
                                           orders=g.get("orders", [(p, q) for p in (1, 2, 3) for q in (1, 2, 3)]),
                                           replicates=reps if reps is not None else 30, **common)
    elif args.kind == "coverage":
        gens = DEFAULT_COVERAGE_GENERATORS
        if args.phi is not None or args.theta is not None:
            phi, theta = _floats(args.phi), _floats(args.theta)
            gens = ((f"ARMA({len(phi)},{len(theta)})", ArmaOrder(len(phi), len(theta)), ArmaParams(phi, theta)),)
        report = sim.run_coverage_study(gens, ns=g.get("n", (50, 500)), replicates=reps if reps is not None else 200,
                                        level=args.level, **common)
    elif args.kind == "consistency":
        report = sim.run_consistency_study(orders=g.get("orders", [(2, 1)]), n=g.get("n", [100])[0],
                                           replicates=reps if reps is not None else 60, Ms=g.get("M", (1, 3, 10)),
                                           max_p=g.get("max_p", 3), max_q=g.get("max_q", 3), **common)
    elif args.kind == "lr-null":
        report = sim.run_lr_null_study(ArmaOrder(1, 0), ArmaOrder(2, 0), ArmaParams([0.5], []),
                                       n=g.get("n", [200])[0], replicates=reps if reps is not None else 500, **common)
    else:
        if not args.input:
            raise UsageError("bootstrap needs --input CSV")
        series, digest = read_series(args.input)
        fitted = []
        for p, q in (g.get("orders") or [(1, 0), (2, 1)]):
            order = ArmaOrder(p, q, args.mean)
            fitted.append((str(order), fit_multistart(series, order, cfg)))
        rp, rq = _orders(args.refit)[0]
        report = sim.run_bootstrap_refit(series, fitted, ArmaOrder(rp, rq, args.mean),
                                         replicates=reps if reps is not None else 1000, **common)
    man = Manifest(f"study {args.kind}", {"grid": args.grid, "replicates": reps, **cfg.to_dict()}, args.seed, digest)
    paths = report.write(args.out, man.to_dict())
    for row in report.summary if args.kind != "bootstrap" else []:
        print(", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    print(f"wrote {', '.join(paths.values())}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    phi, theta = _floats(args.phi), _floats(args.theta)
    if len(phi) != args.p or len(theta) != args.q:
        raise UsageError(f"--phi needs {args.p} values and --theta needs {args.q}")
    spec = sim.GeneratorSpec(ArmaOrder(args.p, args.q), ArmaParams(phi, theta, args.sigma2, args.mean_value),
                             args.n, args.burn_in, args.seed)
    series = sim.simulate(spec)
    if args.out in (None, "-"):
        w = csv.writer(sys.stdout)
        w.writerow(["value"])
        for v in series.values:
            w.writerow([repr(float(v))])
    else:
        write_series(args.out, series)
        man = Manifest("simulate", {"p": args.p, "q": args.q, "phi": phi, "theta": theta, "sigma2": args.sigma2,
                                    "mean": args.mean_value, "n": args.n, "burn_in": args.burn_in}, args.seed)
        dump_json(man.to_dict(), args.out + ".manifest.json")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="armaml", description="Multi-start maximum likelihood for ARMA models.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit one ARMA(p,q) model")
    f.add_argument("csv")
    f.add_argument("p", type=int)
    f.add_argument("q", type=int)
    f.add_argument("--json", metavar="PATH", help="write JSON result ('-' for stdout)")
    _add_fit_flags(f)
    f.set_defaults(func=cmd_fit)

    t = sub.add_parser("aic-table", help="AIC table over (p, q) with nesting checks")
    t.add_argument("csv")
    t.add_argument("--max-p", type=int, default=3)
    t.add_argument("--max-q", type=int, default=3)
    t.add_argument("--digits", type=int, default=1)
    t.add_argument("--json", metavar="PATH")
    _add_fit_flags(t)
    t.set_defaults(func=cmd_aic_table)

    pr = sub.add_parser("profile", help="profile-likelihood interval for one parameter")
    pr.add_argument("csv")
    pr.add_argument("p", type=int)
    pr.add_argument("q", type=int)
    pr.add_argument("--param", required=True, help="phi1.., theta1.. or mean")
    pr.add_argument("--level", type=float, default=0.95)
    pr.add_argument("--out", metavar="CSV", help="write the profile curve")
    pr.add_argument("--json", metavar="PATH")
    _add_fit_flags(pr)
    pr.set_defaults(func=cmd_profile)

    s = sub.add_parser("study", help="run a simulation study")
    s.add_argument("kind", choices=("improvement", "coverage", "consistency", "bootstrap", "lr-null"))
    s.add_argument("--grid", help="e.g. 'n=50,100;orders=1x1,3x3;M=1,3,10'")
    s.add_argument("--replicates", type=int)
    s.add_argument("--out", required=True, metavar="DIR")
    s.add_argument("--level", type=float, default=0.95)
    s.add_argument("--phi", help="coverage generator AR coefficients")
    s.add_argument("--theta", help="coverage generator MA coefficients")
    s.add_argument("--input", help="series for bootstrap")
    s.add_argument("--refit", default="2x1", help="bootstrap refit order PxQ")
    _add_fit_flags(s)
    s.set_defaults(func=cmd_study, mean=False)

    m = sub.add_parser("simulate", help="simulate a Gaussian ARMA series")
    m.add_argument("p", type=int)
    m.add_argument("q", type=int)
    m.add_argument("--phi")
    m.add_argument("--theta")
    m.add_argument("--sigma2", type=float, default=1.0)
    m.add_argument("--mean", dest="mean_value", type=float, default=0.0)
    m.add_argument("--n", type=int, default=100)
    m.add_argument("--burn-in", type=int, default=1000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", metavar="CSV")
    m.set_defaults(func=cmd_simulate)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InputFormatError, UsageError, PreconditionError) as exc:
        print(f"armaml: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ArmaError as exc:
        print(f"armaml: fit failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"armaml: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"armaml: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
