"""Soft transforms between potentials on ``Y`` and ``X``, and the functionals
built on them.

Conventions: a potential ``phi`` lives on ``Y`` (length ``n_cols``), a
potential ``psi`` on ``X`` (length ``n_rows``); couplings carry the density
``exp(phi_j - psi_i)`` with respect to ``R``. Potentials are plain 1-D float
arrays and are never gauge-fixed.

Rows with ``mu_i = 0`` and columns with ``nu_j = 0`` are masked out of the
kernel: they carry no coupling mass and the transforms return 0 there.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._numerics import logsumexp
from .errors import DegenerateZ, EmptyColumn, EmptyRow, LengthMismatch, ShapeMismatch
from .measures import (
    Coupling,
    DiscreteMeasure,
    LogKernel,
    coupling_from_entries,
    new_measure,
)

__all__ = [
    "TransformContext",
    "logsumexp",
    "plus_transform",
    "minus_transform",
    "make_coupling",
    "y_marginal_of",
    "log_y_marginal",
    "F_value",
    "dual_value",
    "semi_dual_value",
    "normalize_gauge",
]


@dataclass(frozen=True)
class TransformContext:
    """The triple ``(R, mu, nu)`` with the well-definedness checks applied.

    Raises:
        ShapeMismatch: kernel dims do not match the measure lengths.
        EmptyRow: some ``mu_i > 0`` row has no finite entry (after masking).
        EmptyColumn: same for a ``nu_j > 0`` column.
    """

    kernel: LogKernel
    mu: DiscreteMeasure
    nu: DiscreteMeasure

    def __post_init__(self):
        if not (self.mu.is_probability and self.nu.is_probability):
            raise ValueError("mu and nu must be validated probability measures")
        if self.kernel.shape != (len(self.mu), len(self.nu)):
            raise ShapeMismatch(
                f"kernel {self.kernel.shape} vs measures ({len(self.mu)}, {len(self.nu)})"
            )
        live = np.isfinite(self.log_r)
        bad_rows = np.nonzero(self.mu.support & ~live.any(axis=1))[0]
        if bad_rows.size:
            raise EmptyRow(f"rows {bad_rows.tolist()} have mass in mu but no kernel entry")
        bad_cols = np.nonzero(self.nu.support & ~live.any(axis=0))[0]
        if bad_cols.size:
            raise EmptyColumn(f"columns {bad_cols.tolist()} have mass in nu but no kernel entry")

    @property
    def shape(self) -> tuple[int, int]:
        return self.kernel.shape

    @cached_property
    def log_r(self) -> np.ndarray:
        """Kernel log-entries with null rows and columns of the marginals masked."""
        L = np.array(self.kernel.log_entries)
        L[~self.mu.support, :] = -np.inf
        L[:, ~self.nu.support] = -np.inf
        L.setflags(write=False)
        return L

    @cached_property
    def log_mu(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.mu.weights)

    @cached_property
    def log_nu(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.nu.weights)


def _potential(values, n: int, side: str) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.shape != (n,):
        raise LengthMismatch(f"potential on {side} must have length {n}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"potential on {side} has non-finite values")
    return v


def plus_transform(phi, ctx: TransformContext) -> np.ndarray:
    """Map ``phi`` on ``Y`` to ``psi_i = log(sum_j exp(phi_j) R_ij / mu_i)``."""
    phi = _potential(phi, ctx.shape[1], "Y")
    s = logsumexp(phi[None, :] + ctx.log_r, axis=1)
    active = ctx.mu.support
    if np.any(s[active] == -np.inf):
        raise EmptyRow("plus-transform met a row without finite entries")
    return np.where(active, s - np.where(active, ctx.log_mu, 0.0), 0.0)


def minus_transform(psi, ctx: TransformContext) -> np.ndarray:
    """Map ``psi`` on ``X`` to ``phi_j = -log(sum_i exp(-psi_i) R_ij / nu_j)``."""
    psi = _potential(psi, ctx.shape[0], "X")
    s = logsumexp(ctx.log_r - psi[:, None], axis=0)
    active = ctx.nu.support
    if np.any(s[active] == -np.inf):
        raise EmptyColumn("minus-transform met a column without finite entries")
    return np.where(active, np.where(active, ctx.log_nu, 0.0) - s, 0.0)


def _log_density(phi, psi, ctx) -> np.ndarray:
    return phi[None, :] - psi[:, None] + ctx.log_r


def make_coupling(phi, psi, ctx: TransformContext) -> Coupling:
    """The plan ``Z^-1 exp(phi_j - psi_i) R_ij``.

    ``Z`` is taken by a single log-sum-exp over all entries, so shifting both
    potentials by the same constant leaves the plan unchanged.
    """
    phi = _potential(phi, ctx.shape[1], "Y")
    psi = _potential(psi, ctx.shape[0], "X")
    logw = _log_density(phi, psi, ctx)
    log_z = logsumexp(logw)
    if not np.isfinite(log_z):
        raise DegenerateZ(f"log Z = {log_z!r}")
    log_pi = logw - log_z
    return coupling_from_entries(np.exp(log_pi), log_entries=log_pi, log_z=log_z)


def log_y_marginal(phi, ctx: TransformContext, psi=None) -> np.ndarray:
    """Log of the Y-marginal of ``pi(phi, phi+)``; ``-inf`` on masked columns.

    ``psi`` may be passed when ``plus_transform(phi)`` is already known.
    """
    phi = _potential(phi, ctx.shape[1], "Y")
    if psi is None:
        psi = plus_transform(phi, ctx)
    return phi + logsumexp(ctx.log_r - psi[:, None], axis=0)


def y_marginal_of(phi, ctx: TransformContext) -> DiscreteMeasure:
    """Gradient of :func:`F_value`: the Y-marginal of ``pi(phi, phi+)``."""
    return new_measure(np.exp(log_y_marginal(phi, ctx)), require_probability=True)


def F_value(phi, ctx: TransformContext) -> float:
    """``F(phi) = <phi+, mu>``, a convex function of ``phi``."""
    psi = plus_transform(phi, ctx)
    return float(np.dot(ctx.mu.weights, psi))


def dual_value(phi, psi, ctx: TransformContext) -> float:
    """``D(phi, psi) = <phi, nu> - <psi, mu> - log sum exp(phi_j - psi_i) R_ij``.

    For any pair this is a lower bound on ``H(pi|R)`` over feasible plans.
    """
    phi = _potential(phi, ctx.shape[1], "Y")
    psi = _potential(psi, ctx.shape[0], "X")
    log_z = logsumexp(_log_density(phi, psi, ctx))
    return float(np.dot(phi, ctx.nu.weights) - np.dot(psi, ctx.mu.weights) - log_z)


def semi_dual_value(phi, ctx: TransformContext) -> float:
    """``J(phi) = <phi, nu> - F(phi)``, the dual maximized over ``psi``."""
    phi = _potential(phi, ctx.shape[1], "Y")
    return float(np.dot(phi, ctx.nu.weights)) - F_value(phi, ctx)


def normalize_gauge(phi, nu) -> np.ndarray:
    """Shift ``phi`` so its ``nu``-mean is zero. Display only."""
    phi = np.asarray(phi, dtype=float)
    w = np.asarray(nu, dtype=float)
    return phi - float(np.dot(phi, w) / np.sum(w))
