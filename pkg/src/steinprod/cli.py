"""Command-line interface: operator printing, grid evaluation, verification.

Product specifications are JSON files with a mandatory version field:

    {"version": 1,
     "beta": [[1.3, 0.7]],
     "gamma": {"shapes": [1.4], "lambda": 1.0},
     "normal": {"count": 1, "sigma": 1.0},
     "q": 1.0}

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import dist, funcs, steinsolve, verify
from .specfun import MeijerGParams, NumericalError, meijer_g
from .steinops import ProductSpec, adjoint_ode, build_stein, reduce_order

SPEC_VERSION = 1


class SpecError(ValueError):
    pass


def load_spec(path: str) -> ProductSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read spec file {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise SpecError("spec file must contain a JSON object")
    if data.get("version") != SPEC_VERSION:
        raise SpecError(f"spec field 'version' must be {SPEC_VERSION}")
    beta = data.get("beta", [])
    if not all(isinstance(p, (list, tuple)) and len(p) == 2 for p in beta):
        raise SpecError("field 'beta' must be a list of [a, b] pairs")
    gamma = data.get("gamma", {}) or {}
    normal = data.get("normal", {}) or {}
    try:
        return ProductSpec(
            beta_pairs=tuple((float(a), float(b)) for a, b in beta),
            gamma_shapes=tuple(float(r) for r in gamma.get("shapes", [])),
            lam=float(gamma["lambda"]) if gamma.get("shapes") else None,
            normal_count=int(normal.get("count", 0)),
            sigma=float(normal["sigma"]) if normal.get("count", 0) else None,
            q=float(data.get("q", 1.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"invalid spec: {exc}") from exc


def parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError as exc:
        raise SpecError(f"grid must be start:end:count, got {text!r}") from exc
    if count < 2 or not lo < hi:
        raise SpecError("grid needs count >= 2 and start < end")
    return np.linspace(lo, hi, count)


def write_csv(path: str | None, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                              for v in row))
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


BUILTIN_TEST_FUNCTIONS = {
    "const": lambda: funcs.constant(1.0),
    "exp": lambda: funcs.exp_decay(1.0),
    "sin": lambda: funcs.Sinusoid(),
    "rational": lambda: funcs.BoundedRational(1.0),
    "gauss": lambda: funcs.gaussian_bump(1.0),
}


def cmd_operator(args) -> int:
    spec = load_spec(args.spec)
    bundle = reduce_order(spec) if args.reduce else build_stein(spec)
    print(f"product: {spec.describe()}")
    print(f"order: {bundle.expected_order}"
          + (f" (reduced: {bundle.reduced_order})" if args.reduce else ""))
    op = bundle.operator
    if op is not None:
        print(op.pretty())
        payload = op.to_json()
    else:
        print("(multiplier power is not an integer; factored form only)")
        payload = json.dumps({"factored": True})
    if args.adjoint:
        ode = adjoint_ode(spec)
        print("density ODE:", ode.pretty())
        payload = json.dumps({"operator": json.loads(op.to_json()) if op else None,
                              "adjoint": json.loads(ode.to_json())})
    print(payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    return 0


def cmd_density(args) -> int:
    spec = load_spec(args.spec)
    grid = parse_grid(args.grid)
    ev = dist.density(spec)
    vals = ev.batch(grid)
    write_csv(args.out, ["x", "density"], zip(grid.tolist(), vals.tolist()))
    return 0


def cmd_cf(args) -> int:
    spec = load_spec(args.spec)
    grid = parse_grid(args.grid)
    vals = [dist.char_function(spec, float(t)) for t in grid]
    write_csv(args.out, ["t", "cf"], zip(grid.tolist(), vals))
    return 0


def cmd_tail(args) -> int:
    spec = load_spec(args.spec)
    grid = parse_grid(args.grid)
    vals = [dist.tail_asymptotic(spec, float(x)) for x in grid]
    write_csv(args.out, ["x", "tail"], zip(grid.tolist(), vals))
    return 0


def cmd_mellin(args) -> int:
    spec = load_spec(args.spec)
    grid = parse_grid(args.grid)
    mel = dist.mellin(spec)
    rows = []
    for s in grid:
        rows.append((float(s), mel(float(s))))
    write_csv(args.out, ["s", "mellin"], rows)
    return 0


def cmd_sample(args) -> int:
    spec = load_spec(args.spec)
    w = dist.sample(spec, args.count, args.seed, workers=_workers(args))
    write_csv(args.out, ["value"], ((float(v),) for v in w))
    return 0


def cmd_gfunc(args) -> int:
    params = MeijerGParams.upper_zero(args.a or [], args.b)
    val = meijer_g(params, args.x, tol=args.tolerance)
    print(f"{val:.15g}")
    return 0


def cmd_stein_solve(args) -> int:
    maker = BUILTIN_TEST_FUNCTIONS.get(args.h)
    if maker is None:
        raise SpecError(f"unknown test function {args.h!r}; "
                        f"choose from {sorted(BUILTIN_TEST_FUNCTIONS)}")
    h = maker()
    sol = steinsolve.solve_stein_pg(args.r1, args.r2, args.lam, h)
    grid = parse_grid(args.grid)
    rows = []
    for x in grid:
        x = float(x)
        rows.append((x, sol.value(x), steinsolve.stein_residual(sol, x)))
    write_csv(args.out, ["x", "f", "residual"], rows)
    return 0


def cmd_verify(args) -> int:
    spec = load_spec(args.spec)
    suites = ("stein", "adjoint", "mellin", "ks") if args.suite == "all" else (args.suite,)
    reports = verify.standard_suite(spec, samples=args.samples, seed=args.seed,
                                    suites=suites, workers=_workers(args))
    payload = json.dumps({"version": verify.REPORT_VERSION,
                          "reports": [r.to_dict() for r in reports]}, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    for rep in reports:
        status = "pass" if rep.passed else "FAIL"
        print(f"[{status}] {rep.test_id}: estimate={rep.estimate:.3e} "
              f"tol={rep.tolerance:.3e} 3se={3 * rep.standard_error:.3e}")
    return 0 if all(r.passed for r in reports) else 2


def _workers(args) -> int:
    requested = max(1, getattr(args, "workers", 1) or 1)
    env = os.environ.get("STEINPROD_THREADS")
    if env:
        requested = min(requested, max(1, int(env)))
    return requested


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="steinprod",
                                 description="Stein operators and distributional "
                                             "theory for products of random variables")
    ap.add_argument("--debug", action="store_true", help="print tracebacks")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, grid_default="-5:5:101"):
        p.add_argument("--spec", required=True, help="product spec JSON file")
        p.add_argument("--grid", default=grid_default, help="start:end:count")
        p.add_argument("--out", default=None, help="output CSV path (default stdout)")

    p = sub.add_parser("operator", help="print the Stein operator")
    p.add_argument("--spec", required=True)
    p.add_argument("--reduce", action="store_true")
    p.add_argument("--adjoint", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_operator)

    p = sub.add_parser("density", help="density on a grid")
    add_common(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("cf", help="characteristic function on a grid")
    add_common(p, grid_default="0:4:41")
    p.set_defaults(func=cmd_cf)

    p = sub.add_parser("tail", help="tail asymptote on a grid")
    add_common(p, grid_default="5:20:31")
    p.set_defaults(func=cmd_tail)

    p = sub.add_parser("mellin", help="Mellin transform on a grid")
    add_common(p, grid_default="1:6:21")
    p.set_defaults(func=cmd_mellin)

    p = sub.add_parser("sample", help="draw product samples")
    p.add_argument("--spec", required=True)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("gfunc", help="evaluate G^{q,0}_{p,q}(x | a; b)")
    p.add_argument("--a", type=float, nargs="*", default=[])
    p.add_argument("--b", type=float, nargs="+", required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.set_defaults(func=cmd_gfunc)

    p = sub.add_parser("stein-solve", help="solve the two-gamma Stein equation")
    p.add_argument("--r1", type=float, required=True)
    p.add_argument("--r2", type=float, required=True)
    p.add_argument("--lam", "--lambda", dest="lam", type=float, required=True)
    p.add_argument("--h", default="exp", help=f"test function: {sorted(BUILTIN_TEST_FUNCTIONS)}")
    p.add_argument("--grid", default="0.01:50:40")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stein_solve)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--spec", required=True)
    p.add_argument("--suite", default="all",
                   choices=["stein", "adjoint", "mellin", "ks", "all"])
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.debug:
            raise
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.debug:
            raise
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if args.debug:
            raise
        return 2


if __name__ == "__main__":
    sys.exit(main())
