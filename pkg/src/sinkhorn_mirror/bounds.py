"""Closed-form constants and O(1/n) curves bounding ``H(rho_n | nu)``.

Everything here is arithmetic on numbers supplied by the caller; the
optimal value ``h_star`` is always an input.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from .errors import NonpositiveEps, NonpositiveParameter, ZeroIterations


def _check_n(n: int) -> None:
    if n < 1:
        raise ZeroIterations(f"bounds hold for n >= 1, got n = {n}")


def bound_basic(h_star: float, n: int) -> float:
    """``H* / n``, valid for kernels of unit mass started from ``phi_0 = 0``."""
    _check_n(n)
    return h_star / n


def bound_general(h_star: float, mass: float, n: int) -> float:
    """``(H* + log mass(R)) / n`` for kernels of arbitrary mass."""
    _check_n(n)
    if not mass > 0:
        raise NonpositiveParameter(f"kernel mass must be > 0, got {mass!r}")
    return (h_star + math.log(mass)) / n


def bound_strong(h_star: float, kl_mu_mubar: float, n: int) -> float:
    """``(H* - H(mu | mu_bar)) / n`` with ``mu_bar`` the row sums of ``R``.

    ``kl_mu_mubar`` may be negative when ``mu_bar`` has mass above 1.
    """
    _check_n(n)
    return (h_star - kl_mu_mubar) / n


def bound_quadratic(m2_mu: float, m2_nu: float, eps: float, n: int) -> float:
    """``(M2(mu) + M2(nu)) / (n eps)`` for the quadratic-cost kernel."""
    _check_n(n)
    if not eps > 0:
        raise NonpositiveEps(f"eps must be > 0, got {eps!r}")
    return (m2_mu + m2_nu) / (n * eps)


def bound_talagrand(kl_mu_m: float, kl_nu_m: float, lam: float, t: float) -> float:
    """``(H(mu|m) + H(nu|m)) / (1 - exp(-lam t))``: a bound on ``H*`` itself.

    Divide by ``n`` for the rate. Derived for continuous Langevin bridges, so
    on a grid it only holds up to discretization error.
    """
    if not lam > 0:
        raise NonpositiveParameter(f"lambda must be > 0, got {lam!r}")
    if not t > 0:
        raise NonpositiveParameter(f"time must be > 0, got {t!r}")
    return (kl_mu_m + kl_nu_m) / -math.expm1(-lam * t)


@dataclass(frozen=True)
class BoundReport:
    h_star: float
    log_mass: float
    kl_mu_mubar: float
    c_basic: float
    c_general: float
    c_strong: float
    c_exact: float
    c_quadratic: float | None = None
    c_talagrand: float | None = None

    @classmethod
    def from_values(
        cls,
        h_star: float,
        log_mass: float,
        kl_mu_mubar: float,
        c_exact: float,
        *,
        m2_mu: float | None = None,
        m2_nu: float | None = None,
        eps: float | None = None,
        kl_mu_m: float | None = None,
        kl_nu_m: float | None = None,
        lam: float | None = None,
        t: float | None = None,
    ) -> "BoundReport":
        c_quad = None
        if m2_mu is not None and m2_nu is not None and eps is not None:
            c_quad = bound_quadratic(m2_mu, m2_nu, eps, 1)
        c_tal = None
        if None not in (kl_mu_m, kl_nu_m, lam, t):
            c_tal = bound_talagrand(kl_mu_m, kl_nu_m, lam, t)
        return cls(
            h_star=h_star,
            log_mass=log_mass,
            kl_mu_mubar=kl_mu_mubar,
            c_basic=h_star,
            c_general=h_star + log_mass,
            c_strong=h_star - kl_mu_mubar,
            c_exact=c_exact,
            c_quadratic=c_quad,
            c_talagrand=c_tal,
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)
