"""The Sinkhorn iteration read as mirror descent on ``rho -> H(rho | nu)``.

One iteration is a full round trip ``phi_{n+1} = (phi_n)^{+-}``. In density
form the same step is the multiplicative update

    phi_{n+1} - phi_n = -log(rho_n / nu),

with ``rho_n`` the Y-marginal of ``pi_n = pi(phi_n, phi_n+)``. Both forms are
computed at every step and checked against each other.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .divergences import entropy_wrt_kernel, hilbert_distance, kl, kl_coupling
from .errors import (
    EmptyColumn,
    EmptyRow,
    InvariantViolation,
    NonAbsolutelyContinuous,
)
from .measures import Coupling, DiscreteMeasure, new_measure
from .transforms import (
    TransformContext,
    log_y_marginal,
    make_coupling,
    minus_transform,
    plus_transform,
)

STEP_IDENTITY_TOL = 1e-12


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    DIVERGED = "Diverged"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 1000
    kl_tolerance: float = 1e-12
    divergence_guard: float = 1e8
    record_every: int = 1
    track_primal: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.kl_tolerance >= 0:
            raise ValueError("kl_tolerance must be >= 0")
        if not self.divergence_guard > 0:
            raise ValueError("divergence_guard must be > 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class TraceRow:
    n: int
    kl_rho_nu: float
    dual: float
    kl_decrement_lhs: float | None = None
    descent_rhs: float | None = None
    primal_rounded: float | None = None
    gap: float | None = None
    hilbert: float | None = None
    bound_general: float | None = None
    bound_exact: float | None = None


CSV_COLUMNS = (
    "n",
    "kl_rho_nu",
    "descent_rhs",
    "dual",
    "primal_rounded",
    "gap",
    "hilbert",
    "bound_general",
    "bound_exact",
)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass
class IterateTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def column(self, name: str) -> np.ndarray:
        """Column as a float array, ``nan`` where the value is missing."""
        return np.array(
            [np.nan if getattr(r, name) is None else getattr(r, name) for r in self.rows],
            dtype=float,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
        return buf.getvalue()


class StepResult(NamedTuple):
    phi_next: np.ndarray
    rho: DiscreteMeasure
    psi: np.ndarray


class SolveResult(NamedTuple):
    phi: np.ndarray
    trace: IterateTrace
    status: Status
    iterations: int


def _step(phi: np.ndarray, ctx: TransformContext):
    psi = plus_transform(phi, ctx)
    log_rho = log_y_marginal(phi, ctx, psi=psi)
    phi_next = minus_transform(psi, ctx)
    on = ctx.nu.support
    if np.any(log_rho[~on] > -np.inf):
        raise NonAbsolutelyContinuous("rho_n charges a point where nu vanishes")
    resid = phi_next[on] - phi[on] + (log_rho[on] - ctx.log_nu[on])
    scale = max(1.0, float(np.max(np.abs(phi))))
    if resid.size and float(np.max(np.abs(resid))) > STEP_IDENTITY_TOL * scale:
        raise InvariantViolation(
            "step_identity",
            f"(+-) round trip and log-ratio update differ by {np.max(np.abs(resid))!r}",
        )
    return phi_next, log_rho, psi


def sinkhorn_step(phi_n, ctx: TransformContext) -> StepResult:
    """One Sinkhorn iteration.

    Returns:
        ``(phi_next, rho_n, psi_n)`` with ``psi_n = phi_n+``,
        ``phi_next = psi_n-`` and ``rho_n`` the Y-marginal of
        ``pi(phi_n, psi_n)``.

    Raises:
        NonAbsolutelyContinuous: ``rho_n`` has mass where ``nu`` is zero.
        InvariantViolation: the two forms of the update disagree.
    """
    phi = np.asarray(phi_n, dtype=float)
    phi_next, log_rho, psi = _step(phi, ctx)
    return StepResult(phi_next, new_measure(np.exp(log_rho), require_probability=True), psi)


def solve(
    ctx: TransformContext,
    phi0=None,
    opts: SolveOptions | None = None,
    *,
    phi_ref=None,
    reference_plan=None,
    h_star: float | None = None,
    log_mass: float | None = None,
    rounding=None,
) -> SolveResult:
    """Run Sinkhorn from ``phi0`` (zero by default) and trace diagnostics.

    Every ``record_every``-th iterate (and the last one) gets a trace row.
    ``descent_rhs`` of row ``n`` is ``H(pi_n | pi_{n+1})`` and
    ``kl_decrement_lhs`` is ``H(rho_n|nu) - H(rho_{n+1}|nu)``; both are
    filled only when iterate ``n + 1`` is reached.

    Optional keyword arguments enable extra columns:

    * ``phi_ref``: fills ``hilbert`` with the distance to this potential.
    * ``h_star`` and ``log_mass``: fill ``bound_general``.
    * ``reference_plan``: an optimal plan ``pi*``; fills ``bound_exact``
      with ``H(pi* | pi_0) / n``.
    * ``rounding`` (with ``opts.track_primal``): callable mapping a coupling
      to a feasible plan; fills ``primal_rounded`` and ``gap``.

    Returns:
        ``(phi, trace, status, iterations)``.
    """
    opts = opts or SolveOptions()
    nx, ny = ctx.shape
    phi = np.zeros(ny) if phi0 is None else np.array(phi0, dtype=float)
    if phi.shape != (ny,) or not np.all(np.isfinite(phi)):
        raise ValueError(f"phi0 must be a finite vector of length {ny}")
    nu = ctx.nu.weights
    trace = IterateTrace()
    every = opts.record_every
    pending: TraceRow | None = None
    c_exact = None
    status = Status.MAX_ITERS
    n = 0
    while True:
        try:
            phi_next, log_rho, psi = _step(phi, ctx)
        except (EmptyRow, EmptyColumn, NonAbsolutelyContinuous):
            status = Status.INFEASIBLE
            break
        rho = np.exp(log_rho)
        kl_n = kl(rho, nu)
        done = kl_n <= opts.kl_tolerance or n >= opts.max_iters
        record = n % every == 0 or done
        need_pi = record or pending is not None or (n == 0 and reference_plan is not None)
        pi_n: Coupling | None = make_coupling(phi, psi, ctx) if need_pi else None
        if n == 0 and reference_plan is not None:
            c_exact = kl_coupling(reference_plan, pi_n)
        if pending is not None:
            pending.kl_decrement_lhs = pending.kl_rho_nu - kl_n
            pending.descent_rhs = kl_coupling(pending_pi, pi_n)
            pending = None
        if record:
            row = TraceRow(n=n, kl_rho_nu=kl_n, dual=float(np.dot(phi, nu) - np.dot(psi, ctx.mu.weights) - pi_n.log_z))
            if opts.track_primal and rounding is not None:
                plan = rounding(pi_n)
                row.primal_rounded = entropy_wrt_kernel(plan, ctx.kernel)
                row.gap = row.primal_rounded - row.dual
            if phi_ref is not None:
                row.hilbert = hilbert_distance(phi, phi_ref)
            if n >= 1:
                if h_star is not None and log_mass is not None:
                    row.bound_general = (h_star + log_mass) / n
                if c_exact is not None:
                    row.bound_exact = c_exact / n
            trace.rows.append(row)
            pending, pending_pi = row, pi_n
        if kl_n <= opts.kl_tolerance:
            status = Status.CONVERGED
            break
        if n >= opts.max_iters:
            status = Status.MAX_ITERS
            break
        if float(np.max(np.abs(phi_next))) > opts.divergence_guard:
            status = Status.DIVERGED
            break
        phi = phi_next
        n += 1
    return SolveResult(phi, trace, status, n)


def rate_products(trace: IterateTrace) -> np.ndarray:
    """``n * H(rho_n | nu)`` per recorded row (``n = 0`` gives 0)."""
    n = trace.column("n")
    return n * trace.column("kl_rho_nu")

