"""Ground truth with error bars: certified optimal values, feasible rounding
and finite-difference gradient checks.

The certificate does not trust the iteration it is built on. Any potential
``phi`` gives the lower bound ``J(phi) = D(phi, phi+) <= H*``, and any plan in
``Pi(mu, nu)`` gives the upper bound ``H(plan | R) >= H*``. The returned
value is the midpoint of the best bracket found and half the gap is its
error bar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from ._numerics import logsumexp
from .bounds import BoundReport
from .divergences import entropy_wrt_kernel, kl, kl_coupling, semi_dual_coupling
from .errors import CannotRepair, NoCertificate, ShapeMismatch
from .measures import Coupling, coupling_from_entries
from .solver import _step
from .transforms import (
    F_value,
    TransformContext,
    log_y_marginal,
    make_coupling,
    plus_transform,
    semi_dual_value,
)


@dataclass(frozen=True)
class Certificate:
    h_star: float
    pi_star: Coupling
    phi_star: np.ndarray
    dual_lb: float
    primal_ub: float
    gap: float
    iterations: int = 0
    newton_steps: int = 0

    @property
    def error_bar(self) -> float:
        return 0.5 * self.gap

    def to_dict(self) -> dict:
        return {
            "h_star": self.h_star,
            "dual_lb": self.dual_lb,
            "primal_ub": self.primal_ub,
            "gap": self.gap,
            "iterations": self.iterations,
            "newton_steps": self.newton_steps,
            "phi_star": self.phi_star.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), allow_nan=False) + "\n"


def _entries(pi) -> np.ndarray:
    return pi.entries if isinstance(pi, Coupling) else np.asarray(pi, dtype=float)


def _incidence(nx: int, ny: int, rows: np.ndarray, cols: np.ndarray) -> sp.csr_matrix:
    k = rows.size
    data = np.ones(2 * k)
    r = np.concatenate([rows, nx + cols])
    c = np.concatenate([np.arange(k), np.arange(k)])
    return sp.csr_matrix((data, (r, c)), shape=(nx + ny, k))


def _flow_repair(P: np.ndarray, mu, nu, admissible: np.ndarray, passes: int = 3) -> np.ndarray:
    """Closest plan to ``P`` in L1 with marginals ``(mu, nu)`` inside ``admissible``.

    Solved as a linear program on the residual, rescaled to unit size and
    refined over a few passes so the solver's feasibility tolerance does not
    leak into the marginals.
    """
    nx, ny = P.shape
    rows, cols = np.nonzero(admissible)
    # the last column constraint is implied by the others up to rounding
    A = _incidence(nx, ny, rows, cols)[:-1]
    target = np.concatenate([mu, nu[:-1]])
    x = P[rows, cols].copy()
    k = x.size
    for _ in range(passes):
        resid = target - A @ x
        scale = float(np.max(np.abs(resid)))
        if scale <= 1e-15:
            break
        # x_new = x + scale * (add - remove); removal may overshoot x by a
        # rounding-sized slack, clipped afterwards
        res = linprog(
            np.ones(2 * k),
            A_eq=sp.hstack([A, -A]).tocsr(),
            b_eq=resid / scale,
            bounds=np.concatenate(
                [np.column_stack([np.zeros(k), np.full(k, np.inf)]), np.column_stack([np.zeros(k), (x + 1e-14) / scale])]
            ),
            method="highs",
        )
        if res.status != 0:
            raise CannotRepair(f"no plan with the prescribed marginals fits the support ({res.message})")
        x = np.maximum(x + scale * (res.x[:k] - res.x[k:]), 0.0)
    out = np.zeros_like(P)
    out[rows, cols] = x
    return out


def round_to_feasible(pi, mu, nu, support=None) -> Coupling:
    """Move a plan onto ``Pi(mu, nu)`` with a small L1 change.

    Rows are scaled down to at most ``mu``, then columns to at most ``nu``,
    and the missing mass is added back as a rank-one correction built from
    the row and column deficits (Altschuler, Weed and Rigollet). When that
    correction would put mass outside ``support`` (default: where ``pi`` is
    positive), the plan is repaired by a support-constrained L1-closest
    transport instead.

    Raises:
        CannotRepair: no plan in ``Pi(mu, nu)`` lives on ``support``.
    """
    P = _entries(pi)
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if P.shape != (mu.size, nu.size):
        raise ShapeMismatch(f"plan {P.shape} vs marginals ({mu.size}, {nu.size})")
    admissible = P > 0 if support is None else np.asarray(support, dtype=bool)
    r = P.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(r > 0, np.minimum(mu / r, 1.0), 1.0)
    P1 = P * x[:, None]
    c = P1.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(c > 0, np.minimum(nu / c, 1.0), 1.0)
    P2 = P1 * y[None, :]
    err_r = np.maximum(mu - P2.sum(axis=1), 0.0)
    err_c = np.maximum(nu - P2.sum(axis=0), 0.0)
    s = float(err_r.sum())
    if s > 0:
        corr = np.outer(err_r, err_c) / s
        if np.any((corr > 0) & ~admissible):
            return coupling_from_entries(_flow_repair(P, mu, nu, admissible))
        P2 = P2 + corr
    return coupling_from_entries(P2)


def F_increment(phi, j: int, h: float, ctx: TransformContext) -> float:
    """``F(phi + h e_j) - F(phi)`` without cancellation.

    Moving ``phi_j`` by ``h`` multiplies the ``j``-th term of every row sum by
    ``e^h``, so each ``psi_i`` moves by ``log1p(p_ij (e^h - 1))`` with ``p`` the
    row-normalized kernel at ``phi``.
    """
    phi = np.asarray(phi, dtype=float)
    on = ctx.mu.weights > 0
    L = ctx.log_r[on] + phi[None, :]
    p_j = np.exp(L[:, j] - logsumexp(L, axis=1))
    return float(np.dot(ctx.mu.weights[on], np.log1p(p_j * np.expm1(h))))


def grad_check_F(phi, ctx: TransformContext, step: float = 1e-6) -> float:
    """Largest componentwise relative error between central differences of
    ``F`` and the Y-marginal ``F'(phi)``.

    The differences are evaluated through :func:`F_increment`, so tiny
    components of ``F'`` are resolved to full relative precision.
    """
    if not step > 0:
        raise ValueError("step must be > 0")
    phi = np.asarray(phi, dtype=float)
    rho = np.exp(log_y_marginal(phi, ctx))
    fd = np.array(
        [(F_increment(phi, j, step, ctx) - F_increment(phi, j, -step, ctx)) / (2 * step) for j in range(phi.size)]
    )
    err = np.abs(fd - rho)
    denom = np.where(rho > 0, rho, 1.0)
    return float(np.max(err / denom))


def _hessian_F(pi: np.ndarray, rho: np.ndarray, mu: np.ndarray) -> np.ndarray:
    on = mu > 0
    Q = pi[on] / np.sqrt(mu[on])[:, None]
    return np.diag(rho) - Q.T @ Q


class _Bracket:
    def __init__(self, ctx: TransformContext):
        self.ctx = ctx
        self.dual_lb = -np.inf
        self.primal_ub = np.inf
        self.phi = None
        self.plan = None

    @property
    def gap(self) -> float:
        return self.primal_ub - self.dual_lb

    def update(self, phi, psi, pi: Coupling, dual: float):
        ctx = self.ctx
        if dual > self.dual_lb:
            self.dual_lb, self.phi = dual, phi.copy()
        plan = round_to_feasible(pi, ctx.mu.weights, ctx.nu.weights, support=np.isfinite(ctx.log_r))
        primal = entropy_wrt_kernel(plan, ctx.kernel)
        if primal < self.primal_ub:
            self.primal_ub, self.plan = primal, plan


def solve_certified(
    ctx: TransformContext,
    gap_tolerance: float = 1e-10,
    max_iters: int = 100_000,
    *,
    phi0=None,
    check_every: int = 10,
    stall_window: int = 200,
    newton_iters: int = 100,
    raise_on_failure: bool = True,
) -> Certificate:
    """Optimal value of ``min H(pi | R)`` over ``Pi(mu, nu)`` with a duality-gap bracket.

    Sinkhorn runs until the bracket closes to ``gap_tolerance``. When the
    marginal error stops halving over ``stall_window`` iterations (the
    sublinear regime of kernels without total support) the dual is polished
    by damped Newton steps on the semi-dual, whose line search only ever
    raises the lower bound.

    Raises:
        NoCertificate: the tolerance is not met within ``max_iters`` Sinkhorn
            iterations and ``newton_iters`` Newton steps (only when
            ``raise_on_failure``; otherwise the loose certificate is returned).
    """
    nx, ny = ctx.shape
    mu, nu = ctx.mu.weights, ctx.nu.weights
    phi = np.zeros(ny) if phi0 is None else np.array(phi0, dtype=float)
    br = _Bracket(ctx)
    kl_hist = []
    n = 0
    while True:
        phi_next, log_rho, psi = _step(phi, ctx)
        kl_n = kl(np.exp(log_rho), nu)
        kl_hist.append(kl_n)
        stalled = n >= stall_window and kl_n > 0.5 * kl_hist[n - stall_window]
        last = n >= max_iters or stalled
        if last or (kl_n <= gap_tolerance and n % check_every == 0) or kl_n == 0.0:
            pi = make_coupling(phi, psi, ctx)
            br.update(phi, psi, pi, float(np.dot(phi, nu) - np.dot(psi, mu) - pi.log_z))
            if br.gap <= gap_tolerance or last:
                break
        phi = phi_next
        n += 1

    steps = 0
    if br.gap > gap_tolerance:
        phi = br.phi.copy()
        for steps in range(1, newton_iters + 1):
            psi = plus_transform(phi, ctx)
            pi = make_coupling(phi, psi, ctx)
            rho = pi.y_marginal.weights
            grad = nu - rho
            d = np.linalg.lstsq(_hessian_F(pi.entries, rho, mu), grad, rcond=None)[0]
            j0 = float(np.dot(phi, nu) - np.dot(psi, mu))
            slope = float(np.dot(grad, d))
            if not slope > 0:
                break
            t = 1.0
            while t > 1e-12:
                if semi_dual_value(phi + t * d, ctx) >= j0 + 1e-4 * t * slope:
                    break
                t *= 0.5
            else:
                break
            phi = phi + t * d
            psi = plus_transform(phi, ctx)
            pi = make_coupling(phi, psi, ctx)
            br.update(phi, psi, pi, float(np.dot(phi, nu) - np.dot(psi, mu) - pi.log_z))
            if br.gap <= gap_tolerance:
                break

    if br.gap > gap_tolerance and raise_on_failure:
        raise NoCertificate(
            f"gap {br.gap:.3e} above tolerance {gap_tolerance:.1e}",
            dual_lb=br.dual_lb,
            primal_ub=br.primal_ub,
            iterations=n,
        )
    return Certificate(
        h_star=0.5 * (br.dual_lb + br.primal_ub),
        pi_star=br.plan,
        phi_star=br.phi,
        dual_lb=br.dual_lb,
        primal_ub=br.primal_ub,
        gap=br.gap,
        iterations=n,
        newton_steps=steps,
    )


def certificate_from_dict(d: dict, ctx: TransformContext) -> Certificate:
    """Rebuild a certificate from its JSON form; ``pi_star`` is re-rounded from ``phi_star``."""
    phi = np.asarray(d["phi_star"], dtype=float)
    plan = round_to_feasible(
        semi_dual_coupling(phi, ctx), ctx.mu.weights, ctx.nu.weights, support=np.isfinite(ctx.log_r)
    )
    return Certificate(
        h_star=float(d["h_star"]),
        pi_star=plan,
        phi_star=phi,
        dual_lb=float(d["dual_lb"]),
        primal_ub=float(d["primal_ub"]),
        gap=float(d["gap"]),
        iterations=int(d.get("iterations", 0)),
        newton_steps=int(d.get("newton_steps", 0)),
    )


def effective_log_mass(ctx: TransformContext) -> float:
    """``log`` of the mass of ``R`` as seen by the transforms (null rows/columns masked)."""
    return logsumexp(ctx.log_r)


def effective_row_marginal(ctx: TransformContext) -> np.ndarray:
    return np.exp(logsumexp(ctx.log_r, axis=1))


def bound_report(ctx: TransformContext, cert: Certificate, meta: dict | None = None) -> BoundReport:
    """Assemble every rate constant for an instance from its certificate.

    ``c_exact`` is ``H(pi* | pi_0)`` with ``pi_0`` the plan of ``phi_0 = 0``.
    Quadratic and Talagrand constants are filled when ``meta`` carries the
    corresponding family parameters.
    """
    meta = meta or {}
    pi0 = semi_dual_coupling(np.zeros(ctx.shape[1]), ctx)
    extra = {}
    if meta.get("family") == "quadratic":
        extra = dict(m2_mu=meta["m2_mu"], m2_nu=meta["m2_nu"], eps=meta["eps"])
    elif meta.get("family") == "ou":
        extra = dict(kl_mu_m=meta["kl_mu_m"], kl_nu_m=meta["kl_nu_m"], lam=meta["lambda"], t=meta["t"])
    return BoundReport.from_values(
        cert.h_star,
        effective_log_mass(ctx),
        kl(ctx.mu.weights, effective_row_marginal(ctx)),
        kl_coupling(cert.pi_star, pi0),
        **extra,
    )
