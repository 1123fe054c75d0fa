"""Command-line interface: ``cmchier {compute,verify,flow,pde,export}``.

Exit codes: 0 success, 1 verification failure, 2 invalid input, 3 internal error.
Parameters may also come from a flat ``key = value`` manifest (``--manifest``);
explicit flags win over manifest entries.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import hierarchy as H
from . import killing as K
from . import numerics as NM
from . import so4 as S
from .loopalg import WindowError
from .report import Check, Report

log = logging.getLogger("cmchierarchy")

SUITES = ("killing", "jacobi", "conservation", "aks", "mixed", "tangency", "b0", "series", "so4", "all")
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parser

def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def _gamma(s: str):
    if s == "symbolic":
        return s
    try:
        v = Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"gamma must be 'symbolic' or a rational number, got {s}")
    if v <= 0:
        raise argparse.ArgumentTypeError("gamma must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-N", "--order", type=int, default=None, help="tower order N")
    common.add_argument("--gamma", type=_gamma, default=None, help="'symbolic' or a positive rational")
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--out", type=Path, default=None, help="output path (default stdout)")
    common.add_argument("--tolerance", type=_positive_float, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--manifest", type=Path, default=None, help="key = value parameter file")

    p = argparse.ArgumentParser(prog="cmchier", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("compute", parents=[common], help="dump the order-N Killing tower")

    v = sub.add_parser("verify", parents=[common], help="run a symbolic verification suite")
    v.add_argument("--suite", choices=SUITES, default="all")
    v.add_argument("--input", type=Path, default=None, help="tower JSON to verify instead of recomputing")

    f = sub.add_parser("flow", parents=[common], help="integrate an AKS flow numerically")
    f.add_argument("--degree", "-D", type=int, default=12)
    f.add_argument("--m", type=int, default=0)
    f.add_argument("--dt", type=_positive_float, default=1e-3)
    f.add_argument("--steps", type=int, default=1000)
    f.add_argument("--init", choices=("random", "tower"), default="random")
    f.add_argument("--log-every", type=int, default=1)

    d = sub.add_parser("pde", parents=[common], help="sinh-Gordon residual or ODE profile")
    d.add_argument("--vacuum", action="store_true", help="residual of the constant solution")
    d.add_argument("--grid", type=int, default=16)
    d.add_argument("--u0", type=float, default=0.3)
    d.add_argument("--v0", type=float, default=0.0)
    d.add_argument("--T", type=float, default=10.0)
    d.add_argument("--dt", type=_positive_float, default=1e-3)
    d.add_argument("--log-every", type=int, default=1)

    e = sub.add_parser("export", parents=[common], help="export towers, loop matrices and forms")
    e.add_argument("--what", choices=("tower", "Y", "X", "mc", "golden"), default="tower")
    return p


# ---------------------------------------------------------------------------
# manifest handling

def read_manifest(path: Path) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for a in parser._actions:
        if isinstance(a, argparse._SubParsersAction):
            return a.choices[name]
    raise KeyError(name)


def _apply_manifest(parser, argv: List[str], args) -> argparse.Namespace:
    entries = read_manifest(args.manifest)
    cmd = entries.pop("command", args.command)
    if cmd != args.command:
        raise InputError(f"manifest is for '{cmd}', not '{args.command}'")
    sp = _subparser(parser, args.command)
    actions = {a.dest: a for a in sp._actions if a.dest not in ("help", "manifest")}
    defaults = {}
    for k, v in entries.items():
        if k not in actions:
            raise InputError(f"unknown manifest key {k!r}")
        a = actions[k]
        if isinstance(a, argparse._StoreTrueAction):
            if v.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise InputError(f"manifest key {k!r} expects a boolean")
            defaults[k] = v.lower() in ("true", "1", "yes")
        else:
            try:
                val = a.type(v) if a.type else v
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise InputError(f"manifest key {k!r}: {exc}")
            if a.choices is not None and val not in a.choices:
                raise InputError(f"manifest key {k!r}: {val!r} not in {sorted(a.choices)}")
            defaults[k] = val
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# output

def _emit(args, payload: str):
    if not payload.endswith("\n"):
        payload += "\n"
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(payload)
    else:
        sys.stdout.write(payload)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1)


def _order(args, default: int) -> int:
    n = default if args.order is None else args.order
    if n < 0:
        raise InputError("order must be nonnegative")
    return n


# ---------------------------------------------------------------------------
# commands

def _tower_payload(t: K.KillingTower, gamma) -> dict:
    data = t.to_json()
    if gamma not in (None, "symbolic"):
        sub = K.KillingTower([p.substitute_gamma(gamma) for p in t.a], [p.substitute_gamma(gamma) for p in t.b],
                             [p.substitute_gamma(gamma) for p in t.c])
        data = sub.to_json()
        data["gamma"] = str(gamma)
    else:
        data["gamma"] = "symbolic"
    return data


def cmd_compute(args) -> int:
    t = K.build(_order(args, 0))
    data = _tower_payload(t, args.gamma)
    if args.format == "text":
        lines = [f"order {t.order}"]
        for name in ("a", "b", "c"):
            for n, p in enumerate(getattr(t, name)):
                lines.append(f"{name}[{n}] = {p!r}")
        _emit(args, "\n".join(lines))
    elif args.format == "csv":
        raise InputError("compute has no csv output")
    else:
        _emit(args, _dumps(data))
    return EXIT_OK


def run_suite(t: K.KillingTower, suite: str) -> Report:
    N = t.order
    rep = Report()
    names = SUITES[:-1] if suite == "all" else (suite,)
    small = min(2, N)
    for name in names:
        if name == "killing":
            rep.extend(K.verify_killing(t))
            rep.extend(K.verify_determinant(t))
            rep.extend(K.verify_membership(t))
        elif name == "jacobi":
            for n in range(N + 1):
                rep.extend(K.verify_jacobi(t, n))
        elif name == "conservation":
            for n in range(N + 1):
                f = K.conservation(t, n)
                rep.add(Check("conservation.closed", (n,), f.closed))
        elif name == "aks":
            Y = K.assemble_Y(t)
            for m in range(N + 1):
                try:
                    H.aks_rhs(Y, m)
                    rep.add(Check("aks.closure", (m,), True))
                except H.ClosureError as exc:
                    rep.add(Check("aks.closure", (m,), False, str(exc)))
            for m in range(N + 1):
                for l in range(N + 1 - m):
                    rep.extend(H.verify_commuting(t, m, l))
        elif name == "mixed":
            for m in range(small + 1):
                for n in range(small + 1):
                    rep.extend(H.verify_mixed(t, m, n))
        elif name == "tangency":
            rep.extend(H.verify_tangency(t))
            for m in range(N):
                H.h2_flow(t, m)
                rep.add(Check("h2_flow.routes_agree", (m,), True))
        elif name == "b0":
            for m in range(small + 1):
                for n in range(small + 1):
                    rep.extend(H.verify_B0(t, m, n)[0])
            rep.extend(H.assemble_mc(t, small).formal_symmetry())
        elif name == "series":
            rep.extend(H.verify_generating_series(t))
        elif name == "so4":
            top = min(8, 2 * N + 1)
            rep.extend(S.verify_so4(t, top, small))
    return rep


def cmd_verify(args) -> int:
    if args.input is not None:
        try:
            t = K.KillingTower.from_json(json.loads(args.input.read_text()))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InputError(f"cannot read tower from {args.input}: {exc}")
        if args.order is not None and args.order != t.order:
            raise InputError(f"--order {args.order} disagrees with input of order {t.order}")
    else:
        t = K.build(_order(args, 4))
    rep = run_suite(t, args.suite)
    failures = rep.failures()
    payload = {"suite": args.suite, "order": t.order, "gamma": "symbolic", "ok": rep.ok,
               "n_checks": len(rep), "n_failed": len(failures), "checks": rep.to_json()}
    if args.format == "text":
        lines = [f"{c.check} {list(c.indices)} {'ok' if c.residual_zero else 'FAIL'}" for c in rep.checks]
        lines.append(f"{len(rep) - len(failures)}/{len(rep)} checks passed")
        _emit(args, "\n".join(lines))
    else:
        _emit(args, _dumps(payload))
    if not args.quiet:
        log.info("suite %s order %d: %d/%d passed", args.suite, t.order, len(rep) - len(failures), len(rep))
    return EXIT_OK if rep.ok else EXIT_FAIL


def _float_gamma(args) -> float:
    g = args.gamma
    return 1.0 if g in (None, "symbolic") else float(g)


def cmd_flow(args) -> int:
    if args.steps < 0 or args.log_every < 1:
        raise InputError("steps must be nonnegative and log-every positive")
    if args.m < 0:
        raise InputError("m must be nonnegative")
    D = args.degree
    if D < 2 * args.m + 2:
        raise InputError(f"degree {D} too small for flow m={args.m}: need D >= {2 * args.m + 2}")
    seed = 0 if args.seed is None else args.seed
    if args.init == "random":
        state = NM.random_state(D, seed)
    else:
        rng = np.random.default_rng(seed)
        N = max(0, (D - 1) // 2)
        z = {j: complex(*rng.standard_normal(2)) * 0.5 for j in range(3, 2 * N + 4)}
        state = NM.tower_state(D, z, gamma=_float_gamma(args))
    flog = NM.integrate_flow(state, args.m, args.dt, args.steps, log_every=args.log_every)
    flog.params.update({"seed": seed, "init": args.init, "gamma": _float_gamma(args)})
    summary = flog.summary()
    tol = args.tolerance if args.tolerance is not None else 1e-9
    ok = summary["max_det_drift"] <= tol and summary["max_ham_drift"] <= tol
    summary["tolerance"] = tol
    summary["ok"] = ok
    if args.format == "csv":
        _emit(args, flog.to_csv())
    elif args.format == "text":
        _emit(args, "\n".join(f"{k}: {summary[k]}" for k in sorted(summary)))
    else:
        _emit(args, _dumps(summary))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_pde(args) -> int:
    g = _float_gamma(args)
    if args.vacuum:
        u = NM.vacuum_profile(g, (args.grid, args.grid))
        res = NM.sinh_gordon_residual(u, g)
        mx = float(np.max(np.abs(res)))
        tol = args.tolerance if args.tolerance is not None else 0.0
        summary = {"mode": "vacuum", "gamma": g, "grid": args.grid, "u": float(u[0, 0]),
                   "max_residual": mx, "tolerance": tol, "ok": mx <= tol}
        if args.format == "csv":
            _emit(args, "i,j,residual\n" + "".join(f"{i},{j},{res[i, j]!r}\n" for i in range(res.shape[0])
                                                    for j in range(res.shape[1])))
        else:
            _emit(args, _dumps(summary))
        return EXIT_OK if summary["ok"] else EXIT_FAIL
    if args.log_every < 1:
        raise InputError("log-every must be positive")
    olog = NM.ode_profile(g, args.u0, args.v0, args.T, args.dt, log_every=args.log_every)
    drift = olog.max_relative_drift()
    tol = args.tolerance if args.tolerance is not None else 1e-8
    summary = {"mode": "ode", "gamma": g, "u0": args.u0, "v0": args.v0, "T": args.T, "dt": args.dt,
               "E0": float(olog.energy[0]), "max_relative_drift": drift, "tolerance": tol, "ok": drift <= tol}
    if args.format == "csv":
        _emit(args, olog.to_csv())
    else:
        _emit(args, _dumps(summary))
    return EXIT_OK if summary["ok"] else EXIT_FAIL


def cmd_export(args) -> int:
    N = _order(args, 3)
    t = K.build(N)
    if args.what == "golden":
        if args.out is None:
            raise InputError("export --what golden needs --out DIR")
        args.out.mkdir(parents=True, exist_ok=True)
        for n in range(N + 1):
            (args.out / f"tower_order{n}.json").write_text(_dumps(K.build(n).to_json()) + "\n")
        return EXIT_OK
    if args.what == "tower":
        data = _tower_payload(t, args.gamma)
    elif args.what == "Y":
        data = K.assemble_Y(t).to_json()
    elif args.what == "X":
        data = S.build_X(t).to_json()
    else:
        data = H.assemble_mc(t, N).to_json()
    _emit(args, _dumps(data))
    return EXIT_OK


COMMANDS = {"compute": cmd_compute, "verify": cmd_verify, "flow": cmd_flow, "pde": cmd_pde, "export": cmd_export}


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=os.environ.get("CMCHIER_LOG", "WARNING").upper(), stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        if args.manifest is not None:
            args = _apply_manifest(parser, argv, args)
        if args.quiet:
            log.setLevel(logging.ERROR)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    except (InputError, WindowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
