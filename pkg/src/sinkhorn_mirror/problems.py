"""Seeded generators for test problems, and the problem JSON format.

Randomness comes from numpy's counter-based ``Philox`` bit generator.
``SeedSequence(seed).spawn(k)`` splits one seed into independent named
streams (listed in each family's ``meta["rng"]``), so an instance is a pure
function of its arguments.

Problem JSON::

    {"mu": [...], "nu": [...],
     "logR": {"dense": [[...]]} | {"triplets": [[i, j, log_value], ...], "shape": [nx, ny]},
     "meta": {...}}

Kernels containing exact zeros are always written as triplets; a dense
matrix read back may use ``null`` for a zero entry.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._numerics import logsumexp
from .divergences import kl, second_moment
from .errors import InfeasiblePattern, NonpositiveEps, NonpositiveParameter
from .measures import (
    log_kernel_from_log,
    log_kernel_from_log_triplets,
    new_measure,
)
from .transforms import TransformContext

RNG_NAME = "numpy.random.Philox(SeedSequence(seed).spawn)"


@dataclass(frozen=True)
class ProblemInstance:
    ctx: TransformContext
    meta: dict = field(default_factory=dict)
    points_x: np.ndarray | None = None
    points_y: np.ndarray | None = None

    def to_dict(self) -> dict:
        k = self.ctx.kernel
        if k.storage_kind == "triplets" or not np.all(k.support):
            logR = {"triplets": [list(t) for t in k.to_triplets()], "shape": list(k.shape)}
        else:
            logR = {"dense": k.log_entries.tolist()}
        return {
            "mu": self.ctx.mu.weights.tolist(),
            "nu": self.ctx.nu.weights.tolist(),
            "logR": logR,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), allow_nan=False) + "\n"


def instance_from_arrays(mu, nu, log_r, meta=None, storage_kind="dense") -> ProblemInstance:
    kernel = log_kernel_from_log(log_r, storage_kind)
    ctx = TransformContext(
        kernel,
        new_measure(mu, require_probability=True),
        new_measure(nu, require_probability=True),
    )
    return ProblemInstance(ctx, dict(meta or {}))


def _dense_entry(v) -> float:
    if v is None:
        return -math.inf
    if isinstance(v, str):
        if v.strip().lower() in ("-inf", "-infinity"):
            return -math.inf
        raise ValueError(f"bad log-kernel entry {v!r}")
    return float(v)


def instance_from_dict(d: dict) -> ProblemInstance:
    logR = d["logR"]
    if "triplets" in logR:
        kernel = log_kernel_from_log_triplets(logR["triplets"], logR["shape"])
    elif "dense" in logR:
        L = [[_dense_entry(v) for v in row] for row in logR["dense"]]
        kernel = log_kernel_from_log(L, "dense")
    else:
        raise ValueError("logR must hold 'dense' or 'triplets'")
    ctx = TransformContext(
        kernel,
        new_measure(d["mu"], require_probability=True),
        new_measure(d["nu"], require_probability=True),
    )
    return ProblemInstance(ctx, dict(d.get("meta", {})))


def instance_from_json(text: str) -> ProblemInstance:
    return instance_from_dict(json.loads(text))


def _streams(seed: int, k: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(seed).spawn(k)]


def _random_probability(rng: np.random.Generator, n: int) -> np.ndarray:
    # floor of 1/(4n) per atom, remaining 3/4 spread at random
    w = rng.random(n)
    p = 1.0 / (4 * n) + 0.75 * w / w.sum()
    return p / p.sum()


def _northwest_corner(a: np.ndarray, b: np.ndarray) -> list[tuple[int, int]]:
    """Support of the north-west-corner plan between ``a`` and ``b``.

    It is a monotone staircase through every row and every column and
    carries a coupling of ``a`` and ``b``.
    """
    a, b = a.copy(), b.copy()
    nx, ny = len(a), len(b)
    cells = []
    i = j = 0
    while True:
        cells.append((i, j))
        if i == nx - 1:
            cells.extend((i, jj) for jj in range(j + 1, ny))
            break
        if j == ny - 1:
            cells.extend((ii, j) for ii in range(i + 1, nx))
            break
        m = min(a[i], b[j])
        a[i] -= m
        b[j] -= m
        if a[i] <= b[j]:
            i += 1
        else:
            j += 1
    return cells


def zero_count(zero_fraction: float, nx: int, ny: int) -> int:
    return int(math.floor(zero_fraction * nx * ny + 1e-9))


def gen_random(seed: int, nx: int, ny: int, zero_fraction: float = 0.0) -> ProblemInstance:
    """Random feasible instance with a prescribed fraction of exact zeros in ``R``.

    ``mu`` and ``nu`` have every atom at least ``1/(4 n)``. Kernel entries are
    uniform on (0, 1]. Zeros are placed uniformly at random outside the
    support of a north-west-corner plan taken on randomly permuted rows and
    columns; that plan stays admissible, so the minimum-entropy problem is
    feasible and every row and column keeps a positive entry. The kernel is
    normalized to mass 1.

    Raises:
        InfeasiblePattern: more zeros requested than cells outside that plan.
    """
    if nx < 1 or ny < 1:
        raise NonpositiveParameter(f"sizes must be >= 1, got {nx} x {ny}")
    if not 0.0 <= zero_fraction < 1.0:
        raise ValueError(f"zero_fraction must lie in [0, 1), got {zero_fraction!r}")
    r_mu, r_nu, r_kernel, r_pattern = _streams(seed, 4)
    mu = _random_probability(r_mu, nx)
    nu = _random_probability(r_nu, ny)
    R = 1.0 - r_kernel.random((nx, ny))
    k = zero_count(zero_fraction, nx, ny)
    if k:
        prow = r_pattern.permutation(nx)
        pcol = r_pattern.permutation(ny)
        keep = np.zeros((nx, ny), dtype=bool)
        for i, j in _northwest_corner(mu[prow], nu[pcol]):
            keep[prow[i], pcol[j]] = True
        free = np.flatnonzero(~keep)
        if k > free.size:
            raise InfeasiblePattern(
                f"{k} zeros requested but only {free.size} cells can be zeroed for a {nx}x{ny} kernel"
            )
        R.flat[r_pattern.choice(free, size=k, replace=False)] = 0.0
    with np.errstate(divide="ignore"):
        L = np.log(R)
    L -= logsumexp(L)
    meta = {
        "family": "random",
        "seed": int(seed),
        "nx": int(nx),
        "ny": int(ny),
        "zero_fraction": float(zero_fraction),
        "zeros": int(k),
        "rng": RNG_NAME + " streams [mu, nu, kernel, pattern]",
    }
    return instance_from_arrays(mu, nu, L, meta, "triplets" if k else "dense")


def gen_quadratic(seed: int, nx: int, ny: int, d: int, eps: float) -> ProblemInstance:
    """Entropic quadratic-cost instance ``R = exp(-|x - y|^2 / (2 eps)) mu (x) nu``.

    Points are i.i.d. standard normal in ``d`` dimensions and the marginals
    uniform. The kernel is assembled in log domain, so tiny ``eps`` does not
    underflow it.
    """
    if not eps > 0:
        raise NonpositiveEps(f"eps must be > 0, got {eps!r}")
    if d < 1 or nx < 1 or ny < 1:
        raise NonpositiveParameter("dimension and sizes must be >= 1")
    r_x, r_y = _streams(seed, 2)
    x = r_x.standard_normal((nx, d))
    y = r_y.standard_normal((ny, d))
    return quadratic_instance(x, y, eps, meta={"seed": int(seed), "rng": RNG_NAME + " streams [x, y]"})


def quadratic_instance(x, y, eps: float, meta=None) -> ProblemInstance:
    """Quadratic-cost instance on given point clouds with uniform weights."""
    if not eps > 0:
        raise NonpositiveEps(f"eps must be > 0, got {eps!r}")
    x = np.asarray(x, dtype=float).reshape(len(x), -1)
    y = np.asarray(y, dtype=float).reshape(len(y), -1)
    nx, ny = len(x), len(y)
    mu = np.full(nx, 1.0 / nx)
    nu = np.full(ny, 1.0 / ny)
    sq = np.sum((x[:, None, :] - y[None, :, :]) ** 2, axis=2)
    L = -sq / (2.0 * eps) + np.log(mu)[:, None] + np.log(nu)[None, :]
    info = {
        "family": "quadratic",
        "nx": nx,
        "ny": ny,
        "dim": int(x.shape[1]),
        "eps": float(eps),
        "m2_mu": second_moment(x, mu),
        "m2_nu": second_moment(y, nu),
    }
    info.update(meta or {})
    inst = instance_from_arrays(mu, nu, L, info)
    return ProblemInstance(inst.ctx, inst.meta, x, y)


def _grid_log_weights(spec, grid: np.ndarray, log_m: np.ndarray) -> tuple[np.ndarray, object]:
    if spec is None or spec == "stationary":
        return log_m, "stationary"
    if callable(spec):
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(spec(grid), dtype=float)), "callable"
    mean, var = (float(s) for s in spec)
    if not var > 0:
        raise NonpositiveParameter(f"variance must be > 0, got {var!r}")
    return -((grid - mean) ** 2) / (2.0 * var), {"mean": mean, "var": var}


def gen_ou_grid(
    lam: float,
    t: float,
    grid_half_width: float,
    grid_points: int,
    mu_spec=None,
    nu_spec=None,
    stationary_variance: float | None = None,
) -> ProblemInstance:
    """Joint law at times 0 and ``t`` of a stationary Ornstein-Uhlenbeck process on a grid.

    ``R_ij = m(x_i) p_t(x_i, y_j) dx dy`` on a uniform grid over
    ``[-w, w]``. The transition density ``p_t`` has mean ``x exp(-lam t)`` and
    variance ``(1 - exp(-2 lam t)) / (2 lam)``. ``m`` is a centered Gaussian
    density with variance ``stationary_variance`` (default ``1/(2 lam)``,
    the stationary variance of ``dX = -lam X dt + dW``).

    ``mu_spec`` and ``nu_spec`` are ``(mean, variance)`` Gaussians, callables
    returning a density on the grid, or ``None``/``"stationary"`` for ``m``.
    They are sampled on the grid and renormalized; ``R`` is not.
    ``meta`` records ``H(mu|m)`` and ``H(nu|m)`` against the renormalized
    grid weights of ``m``.
    """
    if not lam > 0:
        raise NonpositiveParameter(f"lambda must be > 0, got {lam!r}")
    if not t > 0:
        raise NonpositiveParameter(f"time must be > 0, got {t!r}")
    if not grid_half_width > 0 or grid_points < 2:
        raise NonpositiveParameter("grid needs half width > 0 and at least 2 points")
    s2 = 1.0 / (2.0 * lam) if stationary_variance is None else float(stationary_variance)
    if not s2 > 0:
        raise NonpositiveParameter(f"stationary variance must be > 0, got {s2!r}")
    grid = np.linspace(-grid_half_width, grid_half_width, grid_points)
    dx = float(grid[1] - grid[0])
    log_m_density = -(grid**2) / (2.0 * s2) - 0.5 * math.log(2.0 * math.pi * s2)
    decay = math.exp(-lam * t)
    v = -math.expm1(-2.0 * lam * t) / (2.0 * lam)
    log_p = -((grid[None, :] - grid[:, None] * decay) ** 2) / (2.0 * v) - 0.5 * math.log(2.0 * math.pi * v)
    L = log_m_density[:, None] + log_p + 2.0 * math.log(dx)

    def normalized(logw):
        return np.exp(logw - logsumexp(logw))

    m_grid = normalized(log_m_density)
    lw_mu, mu_meta = _grid_log_weights(mu_spec, grid, log_m_density)
    lw_nu, nu_meta = _grid_log_weights(nu_spec, grid, log_m_density)
    mu, nu = normalized(lw_mu), normalized(lw_nu)
    meta = {
        "family": "ou",
        "lambda": float(lam),
        "t": float(t),
        "grid_half_width": float(grid_half_width),
        "grid_points": int(grid_points),
        "stationary_variance": s2,
        "mu_spec": mu_meta,
        "nu_spec": nu_meta,
        "kl_mu_m": kl(mu, m_grid),
        "kl_nu_m": kl(nu, m_grid),
    }
    inst = instance_from_arrays(mu, nu, L, meta)
    return ProblemInstance(inst.ctx, inst.meta, grid, grid)
