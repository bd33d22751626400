"""Command-line front end.

Subcommands::

    solve   stationary distribution and performance report
    taylor  relative error of truncated expansions over a load grid
    sweep   blocking probabilities over a grid of mu or c values
    rates   rate rows at selected levels
    tail    level-scaled tail probabilities

Exit status: 0 ok, 2 invalid parameters, 3 unstable, 4 no convergence,
5 truncation overflow, 6 oracle mismatch (``--verify``), 7 numerical failure.
Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import load_config, resolve_params
from .errors import InvalidParameter, OracleMismatch, RetrialQBDError
from .metrics import report, tail_diagnostics
from .model import check_stability
from .rate_matrix import IterationSchedule, embed_full, rate_rows, rows_to_csv
from .stationary import distribution_to_csv, stationary_distribution, total_variation
from .taylor import build_table, eval_rows, relative_error

FMT = "{:.12g}"
VERIFY_TV = 1e-8
VERIFY_RATE = 1e-10

DEFAULT_RHOS = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"


def _num(x):
    return FMT.format(x)


def _float_list(text):
    if text is None or not text.strip():
        return []
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {text!r}") from None


def _int_list(text):
    if text is None or not text.strip():
        return []
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            lo, hi = part.split(":", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _add_model_args(p, **defaults):
    g = p.add_argument_group("model")
    g.add_argument("--config", help="flat key=value file; command-line flags take precedence")
    g.add_argument("--c", type=int, default=defaults.get("c"), help="number of channels")
    g.add_argument("--lambda1", type=float, help="handover arrival rate")
    g.add_argument("--lambda2", type=float, help="fresh call arrival rate")
    g.add_argument("--mu", type=float, default=defaults.get("mu"), help="retrial rate per orbiting call")
    g.add_argument("--nu", type=float, default=defaults.get("nu"), help="service rate per channel")
    g.add_argument("--rho", type=float, default=defaults.get("rho"), help="load lam/(c nu), used with --ratio21")
    g.add_argument("--ratio21", type=float, default=defaults.get("ratio21"), help="lambda2/lambda1")
    g.add_argument("--eps-rate", type=float, default=None, help="rate-row tolerance (default 1e-13)")


def _add_output_args(p, formats=("csv",)):
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--out", help="output file (default stdout)")


def _settings(args) -> dict:
    """Merge config file values under explicit flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(load_config(args.config))
    for key in ("c", "lambda1", "lambda2", "mu", "nu", "rho", "ratio21", "eps_rate", "eps_trunc", "n_max", "m_max"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    # an explicit rate pair on the command line overrides a load pair from the file, and vice versa
    if args_given(args, "lambda1", "lambda2"):
        values.pop("rho", None)
        values.pop("ratio21", None)
    elif args_given(args, "rho", "ratio21") and getattr(args, "config", None):
        values.pop("lambda1", None)
        values.pop("lambda2", None)
    return values


def args_given(args, *keys):
    return any(getattr(args, k, None) is not None for k in keys)


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _schedule(values):
    return IterationSchedule(epsilon=values.get("eps_rate", 1e-13) or 1e-13)


def cmd_solve(args) -> int:
    values = _settings(args)
    params = resolve_params(values)
    check_stability(params)
    eps_rate = values.get("eps_rate") or 1e-13
    eps_trunc = values.get("eps_trunc") or 1e-10
    N = values.get("n_max")
    if args.oracle:
        from .oracle import truncated_generator_solve
        from .stationary import truncation_point

        dist = truncated_generator_solve(params, N if N is not None else truncation_point(params, eps_trunc))
    else:
        dist = stationary_distribution(params, eps_rate=eps_rate, eps_trunc=eps_trunc, N=N, log_space=args.log_space)
    rep = report(dist, params)
    summary = {
        "N": dist.N,
        "total_mass_check": abs(dist.total_mass - 1.0),
        **rep.as_dict(),
        "params": params.as_dict(),
        "rho": params.rho,
        "eps_trunc": eps_trunc,
        "eps_rate": eps_rate,
        "solver": "oracle" if args.oracle else "recursive",
    }
    if dist.boundary is not None:
        summary["boundary_method"] = dist.boundary.method
    if args.verify:
        from .oracle import truncated_generator_solve

        ref = truncated_generator_solve(params, dist.N)
        tv = total_variation(dist.pi, ref.pi)
        summary["oracle_tv"] = tv
        if tv > VERIFY_TV:
            raise OracleMismatch(f"total variation {tv:.3e} to the direct solve exceeds {VERIFY_TV:g}")
    if args.format == "json":
        _emit(json.dumps(summary, indent=2, sort_keys=True) + "\n", args.out)
    else:
        _emit(distribution_to_csv(dist), args.out)
        if args.out:
            with open(args.out + ".json", "w", encoding="utf-8") as fh:
                json.dump(summary, fh, indent=2, sort_keys=True)
                fh.write("\n")
    return 0


def taylor_errors(params, n, terms, schedule=None):
    """Relative errors of the 1..terms term expansions at level ``n``."""
    exact = rate_rows(params, n, schedule)
    table = build_table(params, terms - 1)
    return [relative_error(eval_rows(table, n, t - 1), exact) for t in range(1, terms + 1)]


def cmd_taylor(args) -> int:
    values = _settings(args)
    terms = values.get("m_max") or 3
    rhos = args.rhos
    header = ["rho"] + [f"err_m{t}" for t in range(1, terms + 1)]
    rows = []
    for rho in rhos:
        v = dict(values)
        v["rho"] = rho
        v.pop("lambda1", None)
        v.pop("lambda2", None)
        params = resolve_params(v)
        errs = taylor_errors(params, args.n, terms, _schedule(values))
        rows.append([_num(rho)] + [_num(e) for e in errs])
    _emit(_csv_text(header, rows), args.out)
    return 0


SWEEP_HEADER = ["c", "mu", "rho", "blocking_low", "blocking_high", "mean_busy", "little_error", "status"]


def _sweep_point(values, eps_rate, eps_trunc):
    try:
        params = resolve_params(values)
        dist = stationary_distribution(params, eps_rate=eps_rate, eps_trunc=eps_trunc)
        rep = report(dist, params)
        return [params.c, params.mu, params.rho, rep.blocking_low, rep.blocking_high, rep.mean_busy, rep.little_error, "ok"]
    except RetrialQBDError as exc:
        rho = values.get("rho", float("nan"))
        return [values.get("c"), values.get("mu"), rho, *([float("nan")] * 4), type(exc).__name__]


def sweep_threads() -> int:
    raw = os.environ.get("RETRIAL_QBD_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def cmd_sweep(args) -> int:
    values = _settings(args)
    eps_rate = values.get("eps_rate") or 1e-13
    eps_trunc = values.get("eps_trunc") or 1e-10
    grid = _float_list(args.values) if args.vary == "mu" else _int_list(args.values)
    points = []
    for g in grid:
        v = dict(values)
        v[args.vary] = g
        points.append(v)
    workers = min(sweep_threads(), max(1, len(points)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda v: _sweep_point(v, eps_rate, eps_trunc), points))
    else:
        results = [_sweep_point(v, eps_rate, eps_trunc) for v in points]
    results.sort(key=lambda r: (r[0] if r[0] is not None else -1, r[1] if r[1] is not None else -1.0))
    rows = [[r[0], _num(r[1]), *[_num(x) for x in r[2:7]], r[7]] for r in results]
    _emit(_csv_text(SWEEP_HEADER, rows), args.out)
    return 0


def cmd_rates(args) -> int:
    values = _settings(args)
    params = resolve_params(values)
    check_stability(params)
    levels = _int_list(args.levels)
    if any(n < 1 for n in levels):
        raise InvalidParameter("levels", "rate rows exist for levels >= 1")
    schedule = _schedule(values)
    out = [rate_rows(params, n, schedule) for n in levels]
    if args.verify or args.oracle:
        from .oracle import dense_rate_matrix

        for rows in out:
            D = dense_rate_matrix(params, rows.level, rows.iterations)
            gap = float(np.abs(D - embed_full(rows)).max())
            if gap > VERIFY_RATE:
                raise OracleMismatch(f"level {rows.level}: rate rows differ from the dense solve by {gap:.3e}")
    _emit(rows_to_csv(out), args.out)
    return 0


def cmd_tail(args) -> int:
    values = _settings(args)
    params = resolve_params(values)
    check_stability(params)
    dist = stationary_distribution(
        params,
        eps_rate=values.get("eps_rate") or 1e-13,
        eps_trunc=values.get("eps_trunc") or 1e-10,
        N=values.get("n_max"),
        log_space=True,
    )
    phases = _int_list(args.phases) if args.phases else [params.c, params.c - 1]
    ts = tail_diagnostics(dist, params, phases)
    header = ["n"] + [f"log_ratio_{i}" for i in ts.phases] + ["log_bound_ratio"]
    rows = []
    for n in ts.levels:
        rows.append([int(n)] + [_num(x) for x in ts.log_ratio[n]] + [_num(ts.log_bound_ratio[n])])
    _emit(_csv_text(header, rows), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retrial-qbd",
        description="Stationary analysis of a multiserver retrial queue with one guard channel.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="stationary distribution and performance measures")
    _add_model_args(p)
    p.add_argument("--eps-trunc", type=float, default=None, help="tail mass for the truncation level (default 1e-10)")
    p.add_argument("--n-max", type=int, default=None, help="truncation level override")
    p.add_argument("--log-space", action="store_true", help="run the sweep on logarithms")
    p.add_argument("--verify", action="store_true", help="compare with the direct truncated-generator solve")
    p.add_argument("--oracle", action="store_true", help="use the direct truncated-generator solve")
    _add_output_args(p, formats=("json", "csv"))
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("taylor", help="relative errors of truncated expansions")
    _add_model_args(p, c=5, mu=1.0, nu=1.0, ratio21=4.0)
    p.add_argument("--n", type=int, default=100, help="level (default 100)")
    p.add_argument("--rhos", type=_float_list, default=_float_list(DEFAULT_RHOS), help="comma separated loads")
    p.add_argument("--m-max", type=int, default=None, help="largest number of expansion terms (default 3)")
    _add_output_args(p)
    p.set_defaults(func=cmd_taylor)

    p = sub.add_parser("sweep", help="blocking probabilities over a parameter grid")
    _add_model_args(p, nu=1.0)
    p.add_argument("--vary", choices=("mu", "c"), required=True)
    p.add_argument("--values", default="", help="comma separated grid; for c also lo:hi ranges")
    p.add_argument("--eps-trunc", type=float, default=None)
    _add_output_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("rates", help="rate rows as level,row,phase,value")
    _add_model_args(p)
    p.add_argument("--levels", default="1", help="levels, e.g. 1,10,100 or 1:20")
    p.add_argument("--verify", action="store_true", help="check against the dense fixed point")
    p.add_argument("--oracle", action="store_true", help="alias of --verify")
    _add_output_args(p)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("tail", help="log of pi/rho^n and of the normalized tail bound")
    _add_model_args(p)
    p.add_argument("--n-max", type=int, default=None, help="truncation level override")
    p.add_argument("--eps-trunc", type=float, default=None)
    p.add_argument("--phases", default=None, help="phases to report (default c and c-1)")
    _add_output_args(p)
    p.set_defaults(func=cmd_tail)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RetrialQBDError as exc:
        record = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        sys.stderr.write(json.dumps(record) + "\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "OSError", "message": str(exc), "exit_code": 1}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
