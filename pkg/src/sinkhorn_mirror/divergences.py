"""Relative entropies and Bregman divergences.

The Bregman divergence of the convex conjugate ``F*`` is never evaluated
through an explicit conjugate. It is computed as the relative entropy of
the associated couplings, which is exact:

    F(phi | phi~) = F*(rho~ | rho) = H(pi~ | pi),

where ``pi = pi(phi, phi+)``, ``pi~ = pi(phi~, phi~+)`` and ``rho``, ``rho~``
are their Y-marginals.
"""

from __future__ import annotations

import numpy as np

from .errors import LengthMismatch, ShapeMismatch
from .measures import Coupling, LogKernel
from .transforms import F_value, TransformContext, log_y_marginal, make_coupling, plus_transform


def _weights(p) -> np.ndarray:
    return np.asarray(p, dtype=float)


def kl(p, q) -> float:
    """Relative entropy ``sum_i p_i log(p_i / q_i)``.

    Terms with ``p_i = 0`` contribute 0; returns ``inf`` when some
    ``p_i > 0`` meets ``q_i = 0``. Neither argument needs unit mass.
    """
    p, q = _weights(p), _weights(q)
    if p.shape != q.shape:
        raise LengthMismatch(f"kl between lengths {p.shape} and {q.shape}")
    on = p > 0
    if np.any(q[on] <= 0):
        return float("inf")
    return float(np.sum(p[on] * np.log(p[on] / q[on])))


def _log_entries(c) -> np.ndarray:
    if isinstance(c, Coupling):
        if c.log_entries is not None:
            return c.log_entries
        c = c.entries
    P = np.asarray(c, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(P)


def kl_coupling(pt, p) -> float:
    """``H(pt | p)`` entrywise, with the conventions of :func:`kl`.

    Accepts :class:`Coupling` objects or plain matrices. When both couplings
    carry log-entries the log-ratio is taken in log domain.
    """
    A = pt.entries if isinstance(pt, Coupling) else np.asarray(pt, dtype=float)
    B = p.entries if isinstance(p, Coupling) else np.asarray(p, dtype=float)
    if A.shape != B.shape:
        raise ShapeMismatch(f"kl_coupling between shapes {A.shape} and {B.shape}")
    on = A > 0
    la, lb = _log_entries(pt)[on], _log_entries(p)[on]
    if np.any(lb == -np.inf):
        return float("inf")
    return float(np.sum(A[on] * (la - lb)))


def entropy_wrt_kernel(plan, kernel: LogKernel) -> float:
    """``H(plan | R)`` using the kernel's log-entries directly.

    Avoids exponentiating ``R``, whose entries may underflow for small
    regularization.
    """
    A = plan.entries if isinstance(plan, Coupling) else np.asarray(plan, dtype=float)
    L = kernel.log_entries
    if A.shape != L.shape:
        raise ShapeMismatch(f"plan {A.shape} vs kernel {L.shape}")
    on = A > 0
    if np.any(L[on] == -np.inf):
        return float("inf")
    return float(np.sum(A[on] * (_log_entries(plan)[on] - L[on])))


def bregman_F(phi2, phi1, ctx: TransformContext) -> float:
    """``F(phi2 | phi1) = F(phi2) - F(phi1) - <F'(phi1), phi2 - phi1>``."""
    phi1 = np.asarray(phi1, dtype=float)
    phi2 = np.asarray(phi2, dtype=float)
    rho1 = np.exp(log_y_marginal(phi1, ctx))
    return F_value(phi2, ctx) - F_value(phi1, ctx) - float(np.dot(rho1, phi2 - phi1))


def semi_dual_coupling(phi, ctx: TransformContext) -> Coupling:
    """``pi(phi, phi+)``, the plan whose X-marginal is ``mu``."""
    return make_coupling(phi, plus_transform(phi, ctx), ctx)


def conjugate_bregman(phi_tilde, phi, ctx: TransformContext) -> float:
    """``F*(rho~ | rho)`` for ``rho~ = F'(phi~)``, ``rho = F'(phi)``.

    Evaluated as ``H(pi~ | pi)`` on the semi-dual couplings.
    """
    return kl_coupling(semi_dual_coupling(phi_tilde, ctx), semi_dual_coupling(phi, ctx))


def hilbert_distance(u, v) -> float:
    """Projective distance ``max(u - v) - min(u - v)``; 0 iff ``u - v`` is constant."""
    u, v = _weights(u), _weights(v)
    if u.shape != v.shape:
        raise LengthMismatch(f"hilbert_distance between lengths {u.shape} and {v.shape}")
    d = u - v
    return float(np.max(d) - np.min(d))


def second_moment(points, weights) -> float:
    """``sum_i w_i |x_i|^2`` for points given as a length-n or (n, d) array."""
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    w = _weights(weights)
    if x.shape[0] != w.shape[0]:
        raise LengthMismatch(f"{x.shape[0]} points vs {w.shape[0]} weights")
    return float(np.dot(w, np.sum(x * x, axis=1)))
