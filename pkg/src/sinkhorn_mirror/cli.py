"""Command-line front end.

    sinkhorn-mirror gen --family {random|quadratic|ou} --seed S [...] --out problem.json
    sinkhorn-mirror solve --in problem.json --iters N --tol T --trace trace.csv [--certify]
    sinkhorn-mirror bounds --in problem.json --cert cert.json
    sinkhorn-mirror check --in problem.json

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 solver diverged or
infeasible (or no certificate), 4 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import NoCertificate, SinkhornError
from .invariants import first_failure, run_invariants
from .oracle import bound_report, certificate_from_dict, round_to_feasible, solve_certified
from .problems import gen_ou_grid, gen_quadratic, gen_random, instance_from_json
from .solver import SolveOptions, Status, solve

EXIT_USAGE, EXIT_IO, EXIT_SOLVER, EXIT_INVARIANT = 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {s}")
    return v


def _nonneg_float(s):
    v = float(s)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a float >= 0, got {s}")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a float > 0, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sinkhorn-mirror", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a problem JSON")
    g.add_argument("--family", choices=("random", "quadratic", "ou"), required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--nx", type=_positive_int, default=10)
    g.add_argument("--ny", type=_positive_int, default=10)
    g.add_argument("--zero-fraction", type=float, default=0.0)
    g.add_argument("--dim", type=_positive_int, default=2)
    g.add_argument("--eps", type=_positive_float, default=0.1)
    g.add_argument("--lam", type=_positive_float, default=1.0)
    g.add_argument("--time", type=_positive_float, default=1.0)
    g.add_argument("--grid-half-width", type=_positive_float, default=5.0)
    g.add_argument("--grid-points", type=int, default=201)
    g.add_argument("--mu-mean", type=float, default=None)
    g.add_argument("--mu-var", type=_positive_float, default=0.25)
    g.add_argument("--nu-mean", type=float, default=None)
    g.add_argument("--nu-var", type=_positive_float, default=0.25)
    g.add_argument("--stationary-var", type=_positive_float, default=None)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="run Sinkhorn and write a trace CSV")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--iters", type=_positive_int, default=1000)
    s.add_argument("--tol", type=_nonneg_float, default=1e-12)
    s.add_argument("--trace", required=True)
    s.add_argument("--record-every", type=_positive_int, default=1)
    s.add_argument("--guard", type=_positive_float, default=1e8)
    s.add_argument("--certify", action="store_true")
    s.add_argument("--gap-tol", type=_positive_float, default=1e-10)

    b = sub.add_parser("bounds", help="print the rate constants of a certified problem")
    b.add_argument("--in", dest="input", required=True)
    b.add_argument("--cert", required=True)

    c = sub.add_parser("check", help="run the invariant suite on a problem")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--iters", type=_positive_int, default=200)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--gap-tol", type=_positive_float, default=1e-10)
    return p


def _read_problem(path):
    return instance_from_json(Path(path).read_text())


def _write(path, text):
    Path(path).write_text(text)


def _gen(a):
    if a.family == "random":
        inst = gen_random(a.seed, a.nx, a.ny, a.zero_fraction)
    elif a.family == "quadratic":
        inst = gen_quadratic(a.seed, a.nx, a.ny, a.dim, a.eps)
    else:
        mu = None if a.mu_mean is None else (a.mu_mean, a.mu_var)
        nu = None if a.nu_mean is None else (a.nu_mean, a.nu_var)
        inst = gen_ou_grid(a.lam, a.time, a.grid_half_width, a.grid_points, mu, nu, a.stationary_var)
    _write(a.out, inst.to_json())
    return 0


def _cert_path(trace_path) -> Path:
    p = Path(trace_path)
    return p.with_name(p.stem + ".cert.json")


def _solve(a):
    inst = _read_problem(a.input)
    ctx = inst.ctx
    opts = SolveOptions(
        max_iters=a.iters,
        kl_tolerance=a.tol,
        divergence_guard=a.guard,
        record_every=a.record_every,
        track_primal=a.certify,
    )
    extra = {}
    if a.certify:
        try:
            cert = solve_certified(ctx, a.gap_tol)
        except NoCertificate as e:
            print(f"no certificate: {e}", file=sys.stderr)
            return EXIT_SOLVER
        rep = bound_report(ctx, cert, inst.meta)
        extra = dict(
            phi_ref=cert.phi_star,
            reference_plan=cert.pi_star,
            h_star=cert.h_star,
            log_mass=rep.log_mass,
            rounding=lambda c: round_to_feasible(
                c, ctx.mu.weights, ctx.nu.weights, support=np.isfinite(ctx.log_r)
            ),
        )
        _write(_cert_path(a.trace), cert.to_json())
    res = solve(ctx, None, opts, **extra)
    _write(a.trace, res.trace.to_csv())
    last = res.trace.rows[-1]
    print(json.dumps({"status": res.status.value, "iterations": res.iterations, "kl_rho_nu": last.kl_rho_nu}))
    if res.status in (Status.DIVERGED, Status.INFEASIBLE):
        return EXIT_SOLVER
    return 0


def _bounds(a):
    inst = _read_problem(a.input)
    cert = certificate_from_dict(json.loads(Path(a.cert).read_text()), inst.ctx)
    print(bound_report(inst.ctx, cert, inst.meta).to_json())
    return 0


def _check(a):
    inst = _read_problem(a.input)
    outcomes = run_invariants(inst, iters=a.iters, seed=a.seed, gap_tolerance=a.gap_tol)
    bad = first_failure(outcomes)
    if bad is not None:
        print(f"FAIL {bad.name}: {bad.detail}")
        return EXIT_INVARIANT
    print(f"ok: {len(outcomes)} invariants hold")
    return 0


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    handler = {"gen": _gen, "solve": _solve, "bounds": _bounds, "check": _check}[args.command]
    try:
        return handler(args)
    except (OSError, json.JSONDecodeError, KeyError) as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (SinkhornError, ValueError) as e:
        if args.command == "gen":
            print(f"usage error: {e}", file=sys.stderr)
            return EXIT_USAGE
        print(f"invalid problem: {e}", file=sys.stderr)
        return EXIT_IO


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
