"""ckn-lab: batch front-end.

Settings are resolved in the order built-in default < ``--config`` JSON <
``CKNLAB_*`` environment variable < command-line flag.  Each command prints
a JSON report; with ``--out DIR`` it also writes ``DIR/<command>.csv`` (the
table) and ``DIR/<command>.json`` (the full report).  Reports contain no
timestamps or output paths, so identical settings give byte-identical
files.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .blockgeom import BlockDecomposition, ExponentSet, easy_constant_bound
from .errors import CKNLabError, DomainError, SolverError
from .field import (
    ckn_functional,
    grad_norm,
    hardy_functional,
    linf_ratio,
    read_field,
    strauss_sup,
)
from .grid import build_grid
from .rearrange import check_hardy_littlewood, check_polya_szego
from .solve import (
    assemble_forms,
    convergence_study,
    loglog_slope,
    min_eig,
    min_quotient_descent,
)
from .special import counterexample_report, supersolution_certificate
from .sturm import AngularProblem, angular_best_constant

ENV_PREFIX = "CKNLAB_"
ANGULAR_ALPHAS = "10,14.7,21.5,31.6,46.4,68.1,100"
SUPERSOLUTION_ALPHAS = "3,5,9,17"
COMMANDS = ("constant", "verify", "counterexample", "supersolution", "rearrange", "angular")

DEFAULTS = {
    "gammas": "2,2",
    "q": 2.0,
    "p": None,
    "nodes": 65,
    "rmin": 1e-2,
    "rmax": 1e2,
    "tol": 1e-10,
    "levels": 3,
    "alphas": None,
    "k_list": "8,16,32,64",
    "r_o": 2.0,
    "field": None,
    "out": None,
}

# option name -> converter
OPTIONS = {
    "gammas": str,
    "q": float,
    "p": float,
    "nodes": int,
    "rmin": float,
    "rmax": float,
    "tol": float,
    "levels": int,
    "alphas": str,
    "k_list": str,
    "r_o": float,
    "field": str,
    "out": str,
}


class InputError(CKNLabError):
    pass


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"malformed number list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ckn-lab", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("field_file", nargs="?", default=None, help="field file for verify/rearrange")
    parser.add_argument("--config", default=None, help="JSON file with settings")
    for name, conv in OPTIONS.items():
        flag = "--" + name.replace("_", "-")
        parser.add_argument(flag, dest=name, type=conv, default=None)
    parser.add_argument("--version", action="version", version=f"ckn-lab {__version__}")
    return parser


def resolve_config(args: argparse.Namespace, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    cfg = dict(DEFAULTS)
    path = args.config or environ.get(ENV_PREFIX + "CONFIG")
    if path:
        try:
            loaded = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise InputError("config file must hold a JSON object")
        unknown = set(loaded) - set(OPTIONS)
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for name, conv in OPTIONS.items():
        env = environ.get(ENV_PREFIX + name.upper())
        if env is not None:
            try:
                cfg[name] = conv(env)
            except ValueError as exc:
                raise InputError(f"bad value for {ENV_PREFIX}{name.upper()}: {env!r}") from exc
        flag = getattr(args, name)
        if flag is not None:
            cfg[name] = flag
    if args.field_file is not None:
        cfg["field"] = args.field_file
    return cfg


def _decomp(cfg) -> BlockDecomposition:
    g = cfg["gammas"]
    if isinstance(g, (list, tuple)):
        return BlockDecomposition(tuple(g))
    return BlockDecomposition.parse(str(g))


def _clean(obj):
    """JSON-safe copy: non-finite floats become None, numpy scalars plain."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


# commands: each returns (results, columns, rows, grid or None, status)


def cmd_constant(cfg):
    d = _decomp(cfg)
    q = float(cfg["q"])
    bound = easy_constant_bound(d, q)
    grid = build_grid(d, cfg["rmin"], cfg["rmax"], cfg["nodes"])
    if q == 2:
        est = convergence_study(
            lambda g: min_eig(assemble_forms(g, "hardy"), tol=cfg["tol"]), grid, cfg["levels"]
        )
    else:
        est = convergence_study(lambda g: min_quotient_descent(g, q, "hardy"), grid, cfg["levels"])
    rows = [[e.level, e.value, e.quotient, e.residual, e.iterations, e.converged] for e in est]
    results = {
        "analytic_bound": bound,
        "estimate": est[-1].value,
        "method": est[-1].method,
        "extrapolated": est[-1].extrapolated,
        "bound_respected": None if bound is None else bool(est[-1].value <= bound * (1 + 1e-9)),
    }
    status = 0 if all(e.converged for e in est) else 3
    return results, ["nodes", "constant", "quotient", "residual", "iterations", "converged"], rows, grid, status


def cmd_verify(cfg):
    if not cfg["field"]:
        raise InputError("verify needs a field file")
    f = read_field(cfg["field"])
    d, q = f.decomp, float(cfg["q"])
    g = grad_norm(f, q)
    rows = [["grad_norm", None, g, None, None, False]]

    def ratio(v):
        return v / g if g > 0 else None

    multiradial = 1 < d.m < d.total
    if multiradial:
        h = hardy_functional(f, q)
        bound = easy_constant_bound(d, q) if q < 2 and q not in d.gammas else None
        r = ratio(h)
        flag = bound is not None and r is not None and r > bound * (1 + 1e-8)
        rows.append(["hardy", None, h, r, bound, flag])
        ex = ExponentSet(d, q)
        ps = [q]
        if ex.q_star is not None:
            qs = float(ex.q_star)
            ps += [(q + qs) / 2, qs]
        for p in ps:
            c = ckn_functional(f, p, q)
            rows.append(["ckn", p, c, ratio(c), None, False])
        if q < d.total:
            s = strauss_sup(f, q)
            rows.append(["strauss_sup", None, s, ratio(s), None, False])
        if f.boundary_flag and g > 0:
            rows.append(["linf_ratio", None, linf_ratio(f), None, None, False])
    flagged = any(row[5] for row in rows)
    results = {"gammas": list(d.gammas), "q": q, "flagged": flagged}
    return results, ["quantity", "p", "value", "ratio_to_grad_norm", "bound", "flagged"], rows, f.grid, 0


def cmd_counterexample(cfg):
    ks = [int(k) for k in _float_list(cfg["k_list"])]
    rep = counterexample_report(ks, float(cfg["r_o"]))
    rows = [[row[c] for c in rep.columns()] for row in rep.rows]
    return rep.to_dict(), rep.columns(), rows, None, 0


def cmd_supersolution(cfg):
    alphas = _float_list(cfg["alphas"] or SUPERSOLUTION_ALPHAS)
    rows = []
    for a in alphas:
        c1 = supersolution_certificate(a, (1.0, 2.0))
        c2 = supersolution_certificate(a, (4.0, 8.0))
        rows.append([a, c1, c2, 1.0 + (a - 1.0) ** 2 if a != 1 else None])
    power = [(a, row[1]) for a, row in zip(alphas, rows) if a != 1]
    slope = loglog_slope([a - 1 for a, _ in power], [c for _, c in power]) if len(power) > 1 else None
    results = {
        "slope_vs_alpha_minus_1": slope,
        "all_positive": all(row[1] > 0 for row in rows),
        "max_window_rel_diff": max(abs(row[1] - row[2]) / abs(row[1]) for row in rows),
    }
    status = 0 if results["all_positive"] else 3
    return results, ["alpha", "C_star_r1_2", "C_star_r4_8", "closed_form"], rows, None, status


def cmd_rearrange(cfg):
    if not cfg["field"]:
        raise InputError("rearrange needs a field file")
    f = read_field(cfg["field"])
    q = float(cfg["q"])
    rows = [["polya_szego", q, *check_polya_szego(f, q)]]
    if 1 < f.decomp.m < f.decomp.total:
        rows.append(["hardy_littlewood", q, *check_hardy_littlewood(f, q)])
    results = {"gammas": list(f.decomp.gammas), "q": q}
    return results, ["check", "q", "before", "after"], rows, f.grid, 0


def cmd_angular(cfg):
    d = _decomp(cfg)
    if d.m != 2:
        raise InputError("angular needs exactly two blocks")
    alphas = _float_list(cfg["alphas"] or ANGULAR_ALPHAS)
    rows = []
    for a in alphas:
        est = angular_best_constant(AngularProblem(d.gammas[0], d.gammas[1], a))
        rows.append([a, est.value, est.extrapolated, est.level])
    slope = loglog_slope(alphas, [row[1] for row in rows]) if len(rows) > 1 else None
    return {"slope_log_lambda_vs_log_alpha": slope}, ["alpha", "lambda", "extrapolated", "theta_nodes"], rows, None, 0


HANDLERS = {
    "constant": cmd_constant,
    "verify": cmd_verify,
    "counterexample": cmd_counterexample,
    "supersolution": cmd_supersolution,
    "rearrange": cmd_rearrange,
    "angular": cmd_angular,
}


def render(command, cfg, results, columns, rows, grid) -> tuple[str, str]:
    report = {
        "command": command,
        # the output directory is not part of the computation
        "config": {k: v for k, v in cfg.items() if k != "out"},
        "grid": None if grid is None else grid.spec(),
        "grid_hash": None if grid is None else grid.digest(),
        "versions": {"cknlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        "results": results,
        "table": {"columns": columns, "rows": rows},
    }
    text = json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in _clean(rows):
        w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return text, buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = resolve_config(args)
        results, columns, rows, grid, status = HANDLERS[args.command](cfg)
    except (InputError, DomainError, MemoryError, OSError) as exc:
        print(f"ckn-lab: input error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"ckn-lab: numerical failure: {exc}", file=sys.stderr)
        return 3
    text, table = render(args.command, cfg, results, columns, rows, grid)
    sys.stdout.write(text)
    if cfg.get("out"):
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{args.command}.json").write_text(text)
        (out / f"{args.command}.csv").write_text(table)
    if status == 3:
        print("ckn-lab: solver did not converge", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
