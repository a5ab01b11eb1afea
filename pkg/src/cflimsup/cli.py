"""Command-line front end: ``cflimsup <subcommand> [flags]``.

Output is one JSON object per line (or CSV with ``--format csv``).  The
first record echoes the effective configuration; every record carries a
hash of it.  Numbers are printed with 17 significant digits.

Exit codes: 0 ok, 1 unexpected error, 2 usage, 3 parse error, 4 domain or
precondition violation, 5 budget or convergence failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from fractions import Fraction

import numpy as np

from . import __version__, _accel
from .cfcore import (CFDomainError, as_fraction, cylinder, expand_rational,
                     gauss_measure_interval)
from .errors import BudgetError, ConfigurationError, ConvergenceError
from .ffuncs import FSpec
from .growth import (GrowthDomainError, GrowthError, GrowthNameError, GrowthSyntaxError,
                     parse_growth, series_test)
from .tailsums import Bracket, Weights, WeightsError, measure_of_event, weighted_tail_sum

EXIT_OK, EXIT_ERR, EXIT_USAGE, EXIT_PARSE, EXIT_DOMAIN, EXIT_BUDGET = 0, 1, 2, 3, 4, 5


class UsageError(Exception):
    pass


# ------------------------------------------------------------- formatting

def num(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    try:
        return format(float(x), ".17g")
    except (TypeError, ValueError):
        return str(x)


def bracket(b: Bracket):
    return [num(b.lo), num(b.hi)]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (str, bool)) or v is None:
        return v
    return num(v)


class Emitter:
    def __init__(self, fmt, out, config):
        self.fmt = fmt
        self.out = out
        blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
        self.hash = hashlib.sha256(blob.encode()).hexdigest()[:16]
        self.rows = []
        self.emit({"record": "config", **config})

    def emit(self, rec):
        rec = {**_jsonable(rec), "config_hash": self.hash}
        if self.fmt == "json":
            self.out.write(json.dumps(rec, separators=(",", ":")) + "\n")
        else:
            self.rows.append(rec)

    def close(self):
        if self.fmt != "csv":
            return
        keys = []
        for r in self.rows:
            for k in r:
                if k not in keys:
                    keys.append(k)
        wr = csv.DictWriter(self.out, fieldnames=keys, lineterminator="\n")
        wr.writeheader()
        for r in self.rows:
            wr.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v
                         for k, v in r.items()})


# ------------------------------------------------------------- subcommands

def _weights(s):
    # validated after parsing so bad weights exit as precondition errors
    return str(s)


def _word(s):
    s = s.strip().strip("[]")
    return tuple(int(x) for x in s.replace(",", " ").split()) if s else ()


def cmd_expand(a, em):
    w = expand_rational(a.x, a.max_depth)
    em.emit({"record": "expand", "x": str(as_fraction(a.x)), "word": list(w)})


def cmd_cylinder(a, em):
    c = cylinder(_word(a.word))
    em.emit({"record": "cylinder", "word": list(c.word), "left": c.left, "right": c.right,
             "left_closed": c.left_closed, "q": c.q, "q_prev": c.q_prev,
             "length": c.length})


def cmd_gauss(a, em):
    if a.word is not None:
        c = cylinder(_word(a.word))
        left, right = c.left, c.right
    else:
        if a.left is None or a.right is None:
            raise UsageError("give --word or both --left and --right")
        left, right = as_fraction(a.left), as_fraction(a.right)
    mv = gauss_measure_interval(left, right, a.prec)
    em.emit({"record": "gauss-measure", "left": left, "right": right,
             "value": mv.value, "abs_error_bound": mv.abs_error_bound})


def cmd_tail(a, em):
    b = weighted_tail_sum(a.t, as_fraction(a.g), a.cutoff)
    em.emit({"record": "tail-sum", "t": str(a.t), "g": a.g, "bracket": bracket(b),
             "width": b.width})


def cmd_event(a, em):
    b = measure_of_event(a.t, as_fraction(a.threshold), a.measure, a.cutoff)
    em.emit({"record": "event-measure", "t": str(a.t), "threshold": a.threshold,
             "measure": a.measure, "bracket": bracket(b), "width": b.width})


def cmd_feval(a, em):
    w = a.t
    kind = a.kind
    if kind == "unit":
        from .ffuncs import f_unit_iter
        m = a.m if a.m is not None else w.m
        v = f_unit_iter(m, a.s)
    else:
        v = FSpec(w, kind)(a.s)
    em.emit({"record": "f-eval", "kind": kind, "t": str(w), "s": a.s, "f": v})


def _M(s):
    return None if str(s).lower() in ("inf", "infinity") else int(s)


def cmd_pressure(a, em):
    from .pressure import pressure_spectral, pressure_wordsum
    M = _M(a.M)
    if a.engine == "wordsum":
        v = pressure_wordsum(M, a.n, a.s, a.c)
        em.emit({"record": "pressure", "engine": "wordsum", "M": a.M, "n": a.n, "s": a.s,
                 "c": a.c, "value": v})
    else:
        mv = pressure_spectral(M, a.s, a.c, a.grid)
        em.emit({"record": "pressure", "engine": "spectral", "M": a.M, "s": a.s, "c": a.c,
                 "value": mv.value, "abs_error_bound": mv.abs_error_bound, **mv.info})


def cmd_solve(a, em):
    from .pressure import s_of_B, solve_s
    if a.M is None:
        mv = s_of_B(a.B, a.t, a.f, a.tol, a.grid)
        em.emit({"record": "solve-s", "B": a.B, "t": str(a.t), "M": "schedule",
                 "value": mv.value, "abs_error_bound": mv.abs_error_bound, **mv.info})
    else:
        v = solve_s(_M(a.M), a.B, a.t, a.f, a.tol, a.engine, a.n, a.grid)
        em.emit({"record": "solve-s", "B": a.B, "t": str(a.t), "M": a.M, "engine": a.engine,
                 "value": v})


def cmd_dim(a, em):
    from .pressure import hdim_dispatch
    r = hdim_dispatch(parse_growth(a.psi), a.t, a.branch, a.tol, a.grid)
    em.emit({"record": "dim", "psi": a.psi, "t": str(a.t), "lower": r.lower, "upper": r.upper,
             "branch": r.branch, "diagnostics": r.diagnostics})


def cmd_series(a, em):
    v = series_test(parse_growth(a.psi), a.t, a.N)
    em.emit({"record": "series", "psi": a.psi, "t": str(a.t), "N": a.N, "verdict": v.verdict,
             "partial_sum": v.partial_sum, "evidence": v.tail_evidence})


def cmd_simulate(a, em):
    from .montecarlo import dump_hits_csv, mc_experiment
    r = mc_experiment(a.samples, a.t, a.psi, a.base, a.seed, (a.n0, a.n1), a.N, a.cutoff,
                      with_bracket=not a.no_bracket, keep_reports=a.dump is not None)
    rec = {"record": "simulate", "samples": r.samples, "hit_samples": r.hit_samples,
           "empirical_hit_prob": r.empirical_hit_prob, "mean_hit_count": r.mean_hit_count,
           "binomial_sigma": r.binomial_sigma, "note": r.note}
    if r.analytic_bracket is not None:
        rec["analytic_bracket"] = bracket(r.analytic_bracket)
    em.emit(rec)
    if a.dump:
        dump_hits_csv(r.reports, a.dump)


# ------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="cflimsup", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--config", help="key=value file; flags take precedence")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(fn=fn)
        return sp

    s = add("expand", cmd_expand, "continued fraction of a rational in [0,1)")
    s.add_argument("--x", required=True)
    s.add_argument("--max-depth", type=int)

    s = add("cylinder", cmd_cylinder, "cylinder of a word")
    s.add_argument("--word", required=True, help="digits, e.g. 2,3")

    s = add("gauss-measure", cmd_gauss, "Gauss measure of a cylinder or interval")
    s.add_argument("--word")
    s.add_argument("--left")
    s.add_argument("--right")
    s.add_argument("--prec", type=int, default=113)

    s = add("tail-sum", cmd_tail, "bracket of the weighted tail sum")
    s.add_argument("--t", type=_weights, required=True)
    s.add_argument("--g", required=True)
    s.add_argument("--cutoff", type=int)

    s = add("event-measure", cmd_event, "bracket of the exceedance-event measure")
    s.add_argument("--t", type=_weights, required=True)
    s.add_argument("--threshold", required=True)
    s.add_argument("--measure", choices=("lebesgue", "gauss"), default="lebesgue")
    s.add_argument("--cutoff", type=int)

    s = add("f-eval", cmd_feval, "evaluate a penalty function f(s)")
    s.add_argument("--kind", choices=("single", "pair", "unit", "general"), required=True)
    s.add_argument("--t", type=_weights, default=Weights((1,)))
    s.add_argument("--m", type=int)
    s.add_argument("--s", type=float, required=True)

    s = add("pressure", cmd_pressure, "pressure over the alphabet {1..M}")
    s.add_argument("--M", required=True, help="integer or inf")
    s.add_argument("--s", type=float, required=True)
    s.add_argument("--c", type=float, default=0.0)
    s.add_argument("--engine", choices=("spectral", "wordsum"), default="spectral")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--grid", type=int, default=32)

    s = add("solve-s", cmd_solve, "root of the pressure equation")
    s.add_argument("--B", type=float, required=True)
    s.add_argument("--t", type=_weights, required=True)
    s.add_argument("--f", choices=("single", "pair", "unit", "general"))
    s.add_argument("--M", help="alphabet size; omit for the M-schedule limit")
    s.add_argument("--engine", choices=("spectral", "wordsum"), default="spectral")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--grid", type=int, default=32)

    s = add("dim", cmd_dim, "Hausdorff dimension of the limsup set")
    s.add_argument("--psi", required=True)
    s.add_argument("--t", type=_weights, required=True)
    s.add_argument("--branch", help='override, e.g. "B=1", "B=4", "B=inf,b=2"')
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--grid", type=int, default=32)

    s = add("series", cmd_series, "convergence test for the measure series")
    s.add_argument("--psi", required=True)
    s.add_argument("--t", type=_weights, required=True)
    s.add_argument("--N", type=int, default=10000)

    s = add("simulate", cmd_simulate, "Monte Carlo hit frequencies")
    s.add_argument("--psi", required=True)
    s.add_argument("--t", type=_weights, required=True)
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--base", choices=("gauss", "lebesgue"), default="gauss")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n0", type=int, default=1)
    s.add_argument("--n1", type=int, default=1000)
    s.add_argument("--N", type=int)
    s.add_argument("--cutoff", type=int, default=1000)
    s.add_argument("--no-bracket", action="store_true")
    s.add_argument("--dump", help="CSV path for per-sample hits")
    return p


def read_config(path):
    """Plain key=value lines; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{ln}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _apply_config(parser, argv, args):
    """Fill values from --config for every option not given on the command line."""
    if not args.config:
        return args
    cfg = read_config(args.config)
    sp = parser._subparsers._group_actions[0].choices[args.cmd]
    given = set()
    for tok in argv:
        if tok.startswith("--"):
            given.add(tok[2:].split("=", 1)[0].replace("-", "_"))
    known = {act.dest: act for act in sp._actions}
    for k, v in cfg.items():
        if k not in known or k in ("config", "help"):
            raise UsageError(f"unknown config key {k!r} for {args.cmd}")
        if k in given:
            continue
        act = known[k]
        if isinstance(act, argparse._StoreTrueAction):
            setattr(args, k, v.lower() in ("1", "true", "yes"))
            continue
        if act.choices is not None and v not in act.choices:
            raise UsageError(f"config {k}={v!r} not in {sorted(act.choices)}")
        setattr(args, k, act.type(v) if act.type else v)
    for act in sp._actions:
        if act.required and getattr(args, act.dest, None) is None:
            raise UsageError(f"missing --{act.dest.replace('_', '-')}")
    return args


def _effective(args):
    skip = {"fn", "config", "cmd"}
    return {k: (str(v) if isinstance(v, Weights) else v)
            for k, v in sorted(vars(args).items()) if k not in skip}


def _exit_code(exc):
    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, (GrowthSyntaxError, GrowthNameError)):
        return EXIT_PARSE
    if isinstance(exc, (BudgetError, ConvergenceError)):
        return EXIT_BUDGET
    if isinstance(exc, (GrowthDomainError, GrowthError, CFDomainError, WeightsError,
                        ConfigurationError, ValueError, ZeroDivisionError)):
        return EXIT_DOMAIN
    return EXIT_ERR


def run(argv=None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    _accel.set_threads()
    parser = build_parser()
    em = None
    # relax required flags so a config file can supply them
    try:
        pre = _Parser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        if known.config:
            for sp in parser._subparsers._group_actions[0].choices.values():
                for act in sp._actions:
                    if act.required and act.option_strings:
                        act.required = False
        args = parser.parse_args(argv)
        args = _apply_config(parser, argv, args)
        args.format = args.format or "json"
        if isinstance(getattr(args, "t", None), str):
            args.t = Weights.parse(args.t)
        em = Emitter(args.format, out, {"command": args.cmd, **_effective(args)})
        args.fn(args, em)
        em.close()
        return EXIT_OK
    except SystemExit as exc:   # --help / --version
        return int(exc.code or 0)
    except Exception as exc:   # noqa: BLE001 - every failure becomes a record
        code = _exit_code(exc)
        rec = {"record": "error", "error": type(exc).__name__, "message": str(exc),
               "exit_code": code}
        if em is None:
            sys.stderr.write(json.dumps(rec) + "\n")
        else:
            em.emit(rec)
            em.close()
        return code


def main():
    sys.exit(run())
