"""Named invariant checks run on a single problem instance.

Used by ``sinkhorn-mirror check``. Each check returns ``(name, ok, detail)``;
the suite stops at nothing, so a report lists every failure.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .divergences import bregman_F, kl, kl_coupling, semi_dual_coupling
from .errors import NoCertificate
from .measures import check_coupling, kernel_marginals, kernel_mass
from .oracle import bound_report, grad_check_F, round_to_feasible, solve_certified
from .problems import ProblemInstance
from .solver import SolveOptions, solve


class Outcome(NamedTuple):
    name: str
    ok: bool
    detail: str


def _outcome(name, value, limit, fmt="{:.3e} <= {:.1e}"):
    return Outcome(name, bool(value <= limit), fmt.format(value, limit))


def run_invariants(
    inst: ProblemInstance,
    iters: int = 200,
    seed: int = 0,
    gap_tolerance: float = 1e-10,
) -> list[Outcome]:
    ctx = inst.ctx
    nx, ny = ctx.shape
    rng = np.random.Generator(np.random.Philox(seed))
    out: list[Outcome] = []

    rows, cols = kernel_marginals(ctx.kernel)
    m = kernel_mass(ctx.kernel)
    out.append(_outcome("kernel_marginal_mass", max(abs(rows.mass - m), abs(cols.mass - m)) / m, 1e-12))

    phis = [np.zeros(ny)] + [rng.uniform(-1, 1, ny) for _ in range(3)]
    xerr = 0.0
    for phi in phis:
        pi = semi_dual_coupling(phi, ctx)
        check_coupling(pi, ctx.kernel)
        xerr = max(xerr, float(np.max(np.abs(pi.x_marginal.weights - ctx.mu.weights))))
    out.append(_outcome("x_marginal_is_mu", xerr, 1e-10))
    out.append(_outcome("gradient_identity", max(grad_check_F(p, ctx, 1e-6) for p in phis[:2]), 1e-6))

    berr, dperr = 0.0, 0.0
    for a, b in zip(phis, phis[1:] + phis[:1]):
        pa, pb = semi_dual_coupling(a, ctx), semi_dual_coupling(b, ctx)
        berr = max(berr, abs(bregman_F(a, b, ctx) - kl_coupling(pb, pa)))
        dperr = max(dperr, kl(pa.y_marginal, pb.y_marginal) - kl_coupling(pa, pb))
    out.append(_outcome("bregman_coupling_identity", berr, 1e-10))
    out.append(_outcome("data_processing", dperr, 1e-12))

    try:
        cert = solve_certified(ctx, gap_tolerance)
    except NoCertificate as e:
        out.append(Outcome("certificate", False, str(e)))
        return out
    out.append(_outcome("certificate", cert.gap, gap_tolerance))
    slack = 2 * max(cert.gap, 0.0)
    rep = bound_report(ctx, cert, inst.meta)

    def rounding(c):
        return round_to_feasible(c, ctx.mu.weights, ctx.nu.weights, support=np.isfinite(ctx.log_r))

    res = solve(
        ctx,
        None,
        SolveOptions(max_iters=iters, kl_tolerance=0.0, track_primal=True),
        reference_plan=cert.pi_star,
        rounding=rounding,
    )
    out.append(Outcome("solver_status", res.status.value in ("Converged", "MaxIters"), res.status.value))
    tr = res.trace
    n = tr.column("n")
    klv = tr.column("kl_rho_nu")
    out.append(_outcome("monotone_descent", float(np.max(np.diff(klv), initial=0.0)), 1e-12))
    dec, rhs = tr.column("kl_decrement_lhs"), tr.column("descent_rhs")
    ok = ~np.isnan(dec)
    out.append(_outcome("quantified_descent", float(np.max(rhs[ok] - dec[ok], initial=0.0)), 1e-10))
    out.append(_outcome("dual_monotone", float(np.max(-np.diff(tr.column("dual")), initial=0.0)), 1e-12))
    lo = tr.column("dual")
    hi = tr.column("primal_rounded")
    sandwich = max(float(np.max(lo - cert.h_star)), float(np.max(cert.h_star - hi)))
    out.append(_outcome("certificate_sandwich", sandwich, 0.5 * max(cert.gap, 0.0) + 1e-12))
    gaps = tr.column("gap")
    out.append(_outcome("gap_monotone", float(np.max(np.diff(gaps), initial=0.0)), 1e-12))

    nk = (n * klv)[n >= 1]
    out.append(_outcome("rate_general", float(np.max(nk - rep.c_general, initial=-np.inf)), slack + 1e-12))
    out.append(_outcome("rate_strong", float(np.max(nk - rep.c_strong, initial=-np.inf)), slack + 1e-12))
    out.append(_outcome("rate_exact", float(np.max(nk - rep.c_exact, initial=-np.inf)), slack + 1e-12))
    out.append(_outcome("exact_equals_strong", abs(rep.c_exact - rep.c_strong), slack + 1e-10))
    if rep.c_quadratic is not None:
        out.append(_outcome("quadratic_chain", rep.c_general - rep.c_quadratic, 1e-6))
    if rep.c_talagrand is not None:
        out.append(
            _outcome("talagrand_approximate", rep.h_star - (1.05 * rep.c_talagrand + 0.01), 0.0)
        )
    return out


def first_failure(outcomes: list[Outcome]) -> Outcome | None:
    for o in outcomes:
        if not o.ok:
            return o
    return None

