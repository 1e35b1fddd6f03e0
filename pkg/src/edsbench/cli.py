"""Command-line front end.

Exit codes: 0 success, 1 a computed negative verdict (not integrable, not
ordinary, no solution), 2 input or parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from .bundleconn import BundleError, christoffel, levi_civita
from .coeffalg import PolyError, format_poly, parse_poly
from .config import DEFAULT, Config
from .edscore import EDSError, ExteriorSystem, Flag, cartan_test, close_system, frobenius_check, greedy_flag
from .emtensor import conservation_codomain_dim, verify_equivalence
from .extcalc import FormError, format_form
from .gaussmap import (GaussError, ProblemDims, SolveFailure, build_embedding_ideal, dimension_audit,
                       solve_gauss)
from .serialize import (SchemaError, connection_to_json, coframe_from_json, curvature_from_json, dumps,
                        form_to_json, forms_from_json, number_to_json, parse_number, validate_schema)

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT = 0, 1, 2

COMMANDS = ("frobenius", "close", "cartan-test", "gauss-solve", "dims", "conserve", "levi-civita")


class InputError(Exception):
    pass


def _load(args) -> dict:
    if args.input is None:
        raise InputError(f"{args.command} needs --input")
    try:
        if args.input == "-":
            text = sys.stdin.read()
        else:
            with open(args.input, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {args.input}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _checked(doc, kind):
    violations = validate_schema(doc, kind)
    if violations:
        raise SchemaError(violations)
    return doc


def _system(doc) -> ExteriorSystem:
    _checked(doc, "system")
    names = doc["chart"]
    return ExteriorSystem(forms_from_json(doc["generators"], names), len(names), names=names)


def _point(values):
    return [parse_number(v) for v in values]


def _config(args) -> Config:
    kw = {}
    for flag, key in (("tol_rank", "tol_rank"), ("tol_residual", "tol_residual"),
                      ("max_iters", "max_iters"), ("starts", "starts"), ("seed", "seed")):
        v = getattr(args, flag, None)
        if v is not None:
            kw[key] = v
    return DEFAULT.with_overrides(**kw)


# -- verbs ---------------------------------------------------------------------


def cmd_frobenius(args, config):
    doc = _load(args)
    S = _system(doc)
    res = frobenius_check(S)
    report = {"integrable": res.integrable}
    if not res.integrable:
        report["witness"] = format_form(res.witness, doc["chart"])
        report["generator"] = res.index + 1
    return report, res.integrable


def cmd_close(args, config):
    doc = _load(args)
    S = _system(doc)
    closed = close_system(S)
    names = doc["chart"]
    return {
        "generators": [form_to_json(g, names) for g in closed.generators],
        "added": len(closed) - len(S),
    }, True


def cmd_cartan_test(args, config):
    doc = _load(args)
    S = close_system(_system(doc))
    if "point" not in doc:
        raise InputError("cartan-test needs a base point")
    pt = _point(doc["point"])
    if len(pt) != S.chart_dim:
        raise InputError(f"point has {len(pt)} coordinates, chart has {S.chart_dim}")
    if "flag" in doc:
        flag = Flag(pt, [_point(v) for v in doc["flag"]])
    else:
        flag = greedy_flag(S, pt, length=doc.get("dim"), config=config)
    report = cartan_test(S, flag, config=config)
    out = report.as_dict()
    out["flag"] = [[number_to_json(c) for c in v] for v in flag.vectors]
    out["closed_generators"] = len(S)
    return out, report.ordinary


def _dims_from(args):
    if args.m is not None or args.n is not None or args.kappa is not None:
        if None in (args.m, args.n, args.kappa):
            raise InputError("dims needs all of --m, --n and --kappa")
        return ProblemDims(args.m, args.n, args.kappa)
    doc = _load(args)
    try:
        return ProblemDims(int(doc["m"]), int(doc["n"]), int(doc["kappa"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError("dims document needs integer m, n and kappa") from exc


def cmd_dims(args, config):
    dims = _dims_from(args)
    out = dimension_audit(dims)
    out["below_bound"] = dims.below_bound
    return out, True


def cmd_gauss_solve(args, config):
    doc = _checked(_load(args), "gauss")
    dims = ProblemDims(doc["m"], doc["n"], doc["kappa"])
    R = curvature_from_json(doc["curvature"], dims.n, dims.m)
    psi = np.array(doc["psi"], dtype=float)
    if psi.shape != (dims.n, dims.m):
        raise InputError(f"psi must be {dims.n}x{dims.m}")
    try:
        rep = solve_gauss(R, psi, dims, seed=config.seed, config=config)
    except SolveFailure as exc:
        return {"converged": False, "best_residual": exc.best_residual, "message": str(exc)}, False
    out = rep.as_dict()
    out["dims"] = dimension_audit(dims)
    ok = rep.submersion
    if doc.get("involution"):
        ideal = build_embedding_ideal(dims, R, psi, rep.H, flag_seed=doc.get("flag_seed"), config=config)
        cr = cartan_test(ideal.system, ideal.flag, config=config, sample_regularity=False)
        out["involution"] = cr.as_dict()
        ok = ok and cr.ordinary
    return out, ok


def _polys(rows, names):
    return [[parse_poly(str(c), names) for c in row] for row in rows]


def cmd_conserve(args, config):
    doc = _load(args)
    eta = coframe_from_json(doc)
    names = doc["chart"]
    if "T" not in doc:
        raise InputError("conserve needs a tensor T")
    T = _polys(doc["T"], names)
    points = [_point(p) for p in doc.get("points", [])]
    if "point" in doc:
        points.append(_point(doc["point"]))
    out = {"codomain_dim": conservation_codomain_dim(len(eta))}
    if not points:
        rep = verify_equivalence(T, eta, levi_civita(eta))
        out["symbolic"] = rep.as_dict()
        return out, rep.agree
    results = []
    for pt in points:
        rep = verify_equivalence(T, eta, levi_civita(eta, pt), pt)
        results.append({"point": [number_to_json(c) for c in pt], **rep.as_dict()})
    out["pointwise"] = results
    return out, all(r["agree"] for r in results)


def cmd_levi_civita(args, config):
    doc = _load(args)
    eta = coframe_from_json(doc)
    names = doc["chart"]
    pt = _point(doc["point"]) if "point" in doc else None
    omega = levi_civita(eta, pt)
    gamma = christoffel(eta, omega, pt).gamma

    def show(v):
        if hasattr(v, "terms"):
            return format_poly(v, names)
        return number_to_json(Fraction(v) if isinstance(v, int) else v)

    return {
        "connection": connection_to_json(omega, names),
        "christoffel": [[[show(g) for g in gk] for gk in gi] for gi in gamma],
    }, True


VERBS = {
    "frobenius": cmd_frobenius,
    "close": cmd_close,
    "cartan-test": cmd_cartan_test,
    "gauss-solve": cmd_gauss_solve,
    "dims": cmd_dims,
    "conserve": cmd_conserve,
    "levi-civita": cmd_levi_civita,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="edsbench", description="Exterior differential system toolkit")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", help="JSON document path, or - for stdin")
    p.add_argument("--seed", type=int)
    p.add_argument("--tol-rank", dest="tol_rank", type=float)
    p.add_argument("--tol-residual", dest="tol_residual", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--starts", type=int)
    p.add_argument("--json-indent", dest="json_indent", type=int, default=2)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--kappa", type=int)
    return p


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    indent = args.json_indent if args.json_indent >= 0 else None
    try:
        config = _config(args)
        report, positive = VERBS[args.command](args, config)
    except SchemaError as exc:
        stdout.write(dumps({"error": "invalid input", "violations": exc.violations}, indent) + "\n")
        return EXIT_INPUT
    except (InputError, PolyError, FormError, EDSError, BundleError, GaussError, KeyError, TypeError,
            ValueError) as exc:
        stdout.write(dumps({"error": str(exc) or type(exc).__name__}, indent) + "\n")
        return EXIT_INPUT
    report["config"] = config.as_dict()
    report["command"] = args.command
    stdout.write(dumps(report, indent) + "\n")
    return EXIT_OK if positive else EXIT_NEGATIVE


def main() -> None:
    sys.exit(run())
