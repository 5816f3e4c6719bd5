"""Command line interface.

Every prediction command works on a grid of targets: each ``--k`` value is
paired with each ``--m`` value, ordered by ``k`` then ``m``. A failure in
one row is reported in that row and the rest of the grid still runs; the
exit status is 0 only when every row succeeded.

    rayrepair interval --data bearings.txt --n 23 --r 20 --T 1.25 --k 1 --m 1
    rayrepair simulate --N 2000 --seed 2024 --k 1 --k 2 --m 1 --m 2 --out t7.csv --format csv
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from importlib import resources
from itertools import product
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import as_hybrid_sample
from .classical import (
    MleFit,
    ks_statistic,
    mle_fit,
    plugin_point_predictions,
    profile_loglik,
    profile_sigma,
    score_residuals,
    wald_pi,
)
from .model import PredictionTarget, RayleighParams
from .montecarlo import METHODS, SimConfig, run_model_check, run_performance_study
from .scaled import (
    scaled_equitailed_pi,
    scaled_hpd_pi,
    scaled_point_predictions,
    scaled_predictive_pdf,
    scaled_predictive_survival,
)
from .twoparam import (
    Hyperparams,
    MuPosterior,
    PredictiveContext,
    equitailed_pi,
    hpd_pi,
    point_ael,
    point_mode,
    point_sel,
    sensitivity_curve,
)

__all__ = ["DataFormatError", "load_lifetimes", "build_parser", "run", "main"]

BUILTIN_PREFIX = "builtin:"
_TOKEN = re.compile(r"[^\s,]+")


class DataFormatError(ValueError):
    """A lifetime file could not be parsed."""


def _builtin(name):
    return resources.files("rayrepair").joinpath("data", f"{name}.txt")


def load_lifetimes(path) -> list[float]:
    """Read lifetimes separated by whitespace and/or commas.

    Lines whose first non-blank character is ``#`` are ignored. The name
    ``builtin:bearings`` refers to the ball-bearing data shipped with the
    package.
    """
    path = str(path)
    if path.startswith(BUILTIN_PREFIX):
        source = _builtin(path[len(BUILTIN_PREFIX):])
        if not source.is_file():
            raise DataFormatError(f"no built-in dataset {path!r}")
        text = source.read_text()
    else:
        text = Path(path).read_text()
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith("#"):
            continue
        for match in _TOKEN.finditer(line):
            token = match.group()
            try:
                value = float(token)
            except ValueError:
                raise DataFormatError(
                    f"{path}:{lineno}:{match.start() + 1}: cannot parse {token!r} as a number"
                ) from None
            if not math.isfinite(value) or value < 0:
                raise DataFormatError(
                    f"{path}:{lineno}:{match.start() + 1}: lifetimes must be finite and nonnegative, got {token!r}"
                )
            values.append(value)
    if not values:
        raise DataFormatError(f"{path}: no lifetimes found")
    return values


# -- output -----------------------------------------------------------------

def _fmt(value, digits=4):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else f"{value:.{digits}f}"
    return str(value)


def _interval_cell(row, prefix):
    lo, hi = row.get(f"{prefix}_lower"), row.get(f"{prefix}_upper")
    if lo is None:
        return ""
    # the bracketed width is that of the printed endpoints, so the cell is self-consistent
    w = float(_fmt(hi)) - float(_fmt(lo))
    return f"({_fmt(lo)},{_fmt(hi)}) [{_fmt(w)}]"


class Report:
    """Rows of one command plus the layout used in table mode."""

    def __init__(self, command, columns, intervals=(), meta=None):
        self.command = command
        self.columns = list(columns)
        self.intervals = list(intervals)
        self.rows = []
        self.meta = dict(meta or {})

    def add(self, **row):
        self.rows.append(row)

    @property
    def failed(self):
        return sum(1 for r in self.rows if r.get("error"))

    def _all_columns(self):
        cols = list(self.columns)
        for p in self.intervals:
            cols += [f"{p}_lower", f"{p}_upper", f"{p}_width"]
        if self.failed:
            cols.append("error")
        return cols

    def to_table(self, units=None):
        head = list(self.columns) + [p for p in self.intervals]
        body = []
        for r in self.rows:
            cells = [_fmt(r.get(c, "")) for c in self.columns]
            if r.get("error"):
                cells += [f"error: {r['error']}"]
            else:
                cells += [_interval_cell(r, p) for p in self.intervals]
            body.append(cells)
        widths = [max([len(h)] + [len(b[i]) for b in body if i < len(b)]) for i, h in enumerate(head)]
        lines = []
        if units:
            lines.append(f"# units: {units}")
        for key, value in self.meta.items():
            lines.append(f"# {key}: {_fmt(value)}")
        lines.append("  ".join(h.rjust(w) for h, w in zip(head, widths)).rstrip())
        for b in body:
            lines.append("  ".join(c.rjust(w) for c, w in zip(b, widths)) + "".join(b[len(widths):]))
        return "\n".join(lines) + "\n"

    def to_csv(self, units=None):
        buf = io.StringIO()
        if units:
            buf.write(f"# units: {units}\n")
        cols = self._all_columns()
        writer = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for r in self.rows:
            writer.writerow({c: _csv_value(r.get(c, "")) for c in cols})
        return buf.getvalue()

    def to_json(self, units=None):
        doc = {
            "command": self.command,
            "units": units,
            "meta": {k: _json_value(v) for k, v in self.meta.items()},
            "rows": [{k: _json_value(v) for k, v in r.items()} for r in self.rows],
        }
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"

    def render(self, fmt, units=None):
        return {"table": self.to_table, "csv": self.to_csv, "json": self.to_json}[fmt](units)


def _csv_value(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    return v


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


# -- commands ---------------------------------------------------------------

def _targets(args):
    ks = args.k or [1]
    ms = args.m or [1]
    return [PredictionTarget(m, k) for k, m in product(ks, ms)]


def _sample(args):
    values = load_lifetimes(args.data)
    return as_hybrid_sample(values, args.n, args.r, args.T), values


def _grid(report, targets, compute):
    for t in targets:
        try:
            report.add(k=t.k, m=t.m, **compute(t))
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            report.add(k=t.k, m=t.m, error=str(exc))


def _interval_fields(prefix, pi):
    return {f"{prefix}_lower": pi.lower, f"{prefix}_upper": pi.upper, f"{prefix}_width": pi.width}


def _sample_meta(sample):
    return {"n": sample.n, "r": sample.scheme.r, "T": sample.scheme.T, "d": sample.d, "T0": sample.t0}


def cmd_predict(args):
    sample, _ = _sample(args)
    cols = {"sel": ["sel"], "ael": ["ael"], "zero-one": ["mode"], "all": ["sel", "ael", "mode"]}[args.loss]
    report = Report("predict", ["k", "m"] + cols, meta=_sample_meta(sample))
    if args.model == "scaled":
        _grid(report, _targets(args), lambda t: _pick(scaled_point_predictions(sample, t), cols))
    else:
        post = MuPosterior(sample, Hyperparams(args.xi, args.tau))
        funcs = {"sel": point_sel, "ael": point_ael, "mode": point_mode}
        _grid(report, _targets(args),
              lambda t: {c: funcs[c](PredictiveContext(post, t)) for c in cols})
    return report


def _pick(points, cols):
    return {c: getattr(points, c) for c in cols}


def cmd_interval(args, hpd_only=False):
    sample, _ = _sample(args)
    intervals = ["hpd"] if hpd_only else ["equitailed", "hpd"]
    report = Report("hpd" if hpd_only else "interval", ["k", "m"], intervals, meta=_sample_meta(sample))
    if args.model == "scaled":
        def compute(t):
            out = _interval_fields("hpd", scaled_hpd_pi(sample, t, args.alpha))
            if not hpd_only:
                out.update(_interval_fields("equitailed", scaled_equitailed_pi(sample, t, args.alpha)))
            return out
    else:
        post = MuPosterior(sample, Hyperparams(args.xi, args.tau))

        def compute(t):
            ctx = PredictiveContext(post, t)
            eq = equitailed_pi(ctx, args.alpha)
            out = _interval_fields("hpd", hpd_pi(ctx, args.alpha, equitailed=eq))
            if not hpd_only:
                out.update(_interval_fields("equitailed", eq))
            return out
    _grid(report, _targets(args), compute)
    return report


def _curve_grid(args, equitailed):
    """User range, or the equi-tailed interval padded by half its width."""
    lo, hi = args.grid_min, args.grid_max
    if lo is None or hi is None:
        eq = equitailed()
        lo = eq.lower - 0.5 * eq.width if lo is None else lo
        hi = eq.upper + 0.5 * eq.width if hi is None else hi
    return np.linspace(lo, hi, args.grid_points)


def cmd_curve(args, what):
    sample, _ = _sample(args)
    report = Report(what, ["k", "m", "u", what], meta=_sample_meta(sample))
    post = MuPosterior(sample, Hyperparams(args.xi, args.tau)) if args.model == "two-param" else None
    for t in _targets(args):
        try:
            if post is None:
                fn = scaled_predictive_pdf if what == "density" else scaled_predictive_survival
                grid = _curve_grid(args, lambda: scaled_equitailed_pi(sample, t, args.alpha))
                vals = fn(grid, sample, t)
            else:
                ctx = PredictiveContext(post, t)
                grid = _curve_grid(args, lambda: equitailed_pi(ctx, args.alpha))
                vals = ctx.pdf(grid) if what == "density" else ctx.survival(grid)
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            report.add(k=t.k, m=t.m, error=str(exc))
            continue
        for u, v in zip(grid, np.atleast_1d(vals)):
            report.add(k=t.k, m=t.m, u=float(u), **{what: float(v)})
    return report


def cmd_mle(args):
    sample, values = _sample(args)
    report = Report("mle", ["mu_hat", "sigma_hat", "loglik", "score", "score_printed",
                            "converged", "boundary", "ks"], meta=_sample_meta(sample))
    try:
        fit = _fit(args, sample)
        ks = ks_statistic(values, fit.params)
        report.add(mu_hat=fit.mu_hat, sigma_hat=fit.sigma_hat, loglik=fit.loglik, score=fit.score,
                   score_printed=fit.score_printed, converged=fit.converged, boundary=fit.boundary, ks=ks)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        report.add(error=str(exc))
    return report


def _fit(args, sample):
    if args.mu is not None:
        sigma = float(profile_sigma(args.mu, sample))
        score, printed = score_residuals(args.mu, sigma, sample) if args.mu < sample.x1 else (math.nan, math.nan)
        return MleFit(args.mu, sigma, True, args.mu >= sample.x1, float(profile_loglik(args.mu, sample)),
                      score, printed)
    return mle_fit(sample, scaled=args.model == "scaled")


def cmd_wald(args):
    sample, _ = _sample(args)
    report = Report("wald", ["k", "m", "sel", "ael", "mode"], ["wald"], meta=_sample_meta(sample))
    try:
        fit = _fit(args, sample)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        report.add(error=str(exc))
        return report
    report.meta.update(mu_hat=fit.mu_hat, sigma_hat=fit.sigma_hat)

    def compute(t):
        out = _interval_fields("wald", wald_pi(fit, t, args.alpha))
        out.update(_pick(plugin_point_predictions(fit, t), ["sel", "ael", "mode"]))
        return out

    _grid(report, _targets(args), compute)
    return report


def _sim_config(args, methods=None):
    return SimConfig(
        n=args.n or 20, r=args.r or 17, T=2.0 if args.T is None else args.T,
        true_params=RayleighParams(args.true_mu, args.true_sigma),
        hyper=Hyperparams(args.xi, args.tau), targets=tuple(_targets(args)), alpha=args.alpha,
        replications=args.N, seed=args.seed, methods=tuple(methods or args.methods),
    )


def cmd_simulate(args):
    cfg = _sim_config(args)
    study = run_performance_study(cfg, n_jobs=args.jobs)
    report = Report("simulate", ["k", "m", "method", "aw", "cp", "er_sel", "er_ael", "er_zeroone"],
                    meta={"N": cfg.replications, "seed": cfg.seed, "discarded": study.discarded})
    for row in sorted(study.rows, key=lambda r: (r.k, r.m, METHODS.index(r.method))):
        report.add(k=row.k, m=row.m, method=row.method, aw=row.aw, cp=row.cp,
                   er_sel=row.er_sel, er_ael=row.er_ael, er_zeroone=row.er_zeroone)
    return report


def cmd_model_check(args):
    cfg = _sim_config(args, methods=("bayes-equitailed",))
    res = run_model_check(cfg)
    report = Report("model-check", ["l", "tau", "d1", "selected"],
                    meta={"tau_star": res.tau_star, "D1": res.d1, "D2": res.d2, "D3": res.d3,
                          "fallback": res.fallback, "N": cfg.replications, "seed": cfg.seed,
                          "k": cfg.targets[0].k, "m": cfg.targets[0].m})
    for l, d1 in res.d1_by_l.items():
        report.add(l=l, tau=0.5 * 10.0 ** (-l), d1=d1, selected=l == res.l_star)
    if args.ecdf:
        for name, data in (("sim", res.ecdf_sim), ("pred", res.ecdf_pred)):
            np.savetxt(f"{args.ecdf}_{name}.csv", data, delimiter=",", header="value,ecdf", comments="")
    return report


def cmd_sensitivity(args):
    sample, _ = _sample(args)
    report = Report("sensitivity", ["k", "m", "l", "tau", "sel"], meta=_sample_meta(sample))
    for t in _targets(args):
        try:
            curve = sensitivity_curve(sample, t, xi=args.xi, l_values=args.l)
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            report.add(k=t.k, m=t.m, error=str(exc))
            continue
        for l, sel in curve:
            report.add(k=t.k, m=t.m, l=l, tau=0.5 * 10.0 ** (-l), sel=sel)
    return report


COMMANDS = {
    "predict": cmd_predict,
    "interval": cmd_interval,
    "hpd": lambda a: cmd_interval(a, hpd_only=True),
    "density": lambda a: cmd_curve(a, "density"),
    "survival": lambda a: cmd_curve(a, "survival"),
    "mle": cmd_mle,
    "wald": cmd_wald,
    "simulate": cmd_simulate,
    "model-check": cmd_model_check,
    "sensitivity": cmd_sensitivity,
}


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rayrepair",
        description="Bayesian and classical prediction of minimal-repair times of a series "
                    "system from hybrid-censored Rayleigh lifetimes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("data and scheme")
    g.add_argument("--data", help="lifetime file (whitespace/comma separated, '#' comments), "
                                  "or builtin:bearings")
    g.add_argument("--n", type=_positive_int, help="units on test (default: number of values read)")
    g.add_argument("--r", type=_positive_int, help="failure-count limit (default: n)")
    g.add_argument("--T", type=float, help="time limit (default: none)")
    g = common.add_argument_group("model")
    g.add_argument("--model", choices=["two-param", "scaled"], default="two-param")
    g.add_argument("--xi", type=float, default=0.0, help="prior mean of the location")
    g.add_argument("--tau", type=float, default=0.5, help="prior precision parameter of the location")
    g.add_argument("--k", type=_positive_int, action="append", help="series-system size (repeatable)")
    g.add_argument("--m", type=_positive_int, action="append", help="repair index (repeatable)")
    g.add_argument("--alpha", type=float, default=0.05)
    g.add_argument("--loss", choices=["sel", "ael", "zero-one", "all"], default="all")
    g = common.add_argument_group("output")
    g.add_argument("--format", choices=["table", "csv", "json"], default="table")
    g.add_argument("--out", help="write to this file instead of stdout")
    g.add_argument("--units", help="units label echoed into output headers")

    sim = argparse.ArgumentParser(add_help=False)
    g = sim.add_argument_group("simulation")
    g.add_argument("--N", type=_positive_int, default=2000, help="replications")
    g.add_argument("--seed", type=int, default=2024)
    g.add_argument("--true-mu", type=float, default=0.0)
    g.add_argument("--true-sigma", type=float, default=1.0)
    g.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    g.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")
    g.add_argument("--ecdf", metavar="PREFIX", help="model-check: write PREFIX_sim.csv and PREFIX_pred.csv")

    grid = argparse.ArgumentParser(add_help=False)
    g = grid.add_argument_group("evaluation grid")
    g.add_argument("--grid-min", type=float)
    g.add_argument("--grid-max", type=float)
    g.add_argument("--grid-points", type=_positive_int, default=101)

    fit = argparse.ArgumentParser(add_help=False)
    fit.add_argument("--mu", type=float, help="fix the location and profile the scale")

    helps = {
        "predict": ("point predictors (SEL mean, AEL median, zero-one mode)", [common]),
        "interval": ("equi-tailed and HPD prediction intervals", [common]),
        "hpd": ("HPD prediction intervals", [common]),
        "density": ("predictive density on a grid", [common, grid]),
        "survival": ("predictive survival function on a grid", [common, grid]),
        "mle": ("maximum-likelihood fit and Kolmogorov-Smirnov distance", [common, fit]),
        "wald": ("Wald plug-in prediction intervals", [common, fit]),
        "simulate": ("Monte-Carlo risks, widths and coverage", [common, sim]),
        "model-check": ("choose the prior precision by simulation", [common, sim]),
        "sensitivity": ("SEL predictor against tau = 0.5 * 10^-l", [common]),
    }
    for name, (text, parents) in helps.items():
        p = sub.add_parser(name, help=text, description=text, parents=parents)
        if name == "sensitivity":
            p.add_argument("--l", type=float, nargs="+", default=[-2, -1, 0, 1, 2])
    return parser


_NEEDS_DATA = {"predict", "interval", "hpd", "density", "survival", "mle", "wald", "sensitivity"}


def run(args) -> tuple[int, str]:
    """Execute parsed arguments; returns ``(exit status, rendered output)``."""
    report = COMMANDS[args.command](args)
    return (1 if report.failed else 0), report.render(args.format, args.units)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in _NEEDS_DATA and not args.data:
        parser.error(f"{args.command} needs --data")
    if not 0 < args.alpha < 1:
        parser.error("--alpha must lie in (0, 1)")
    try:
        status, text = run(args)
    except (OSError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"rayrepair: error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
