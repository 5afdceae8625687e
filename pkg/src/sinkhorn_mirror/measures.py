"""Discrete measures, log-kernels and couplings.

All objects are immutable once built. Kernels are stored as natural logs of
the reference measure ``R`` with ``-inf`` marking exact zeros; nothing is
ever floored to a small positive value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ._numerics import logsumexp
from .errors import (
    AllZeroKernel,
    EmptyMeasure,
    InvariantViolation,
    NegativeEntry,
    NegativeWeight,
    NotProbability,
    ShapeMismatch,
)

MASS_RTOL = 1e-12
PROBABILITY_ATOL = 1e-12
COUPLING_MASS_ATOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DiscreteMeasure:
    """Nonnegative weights on a finite set, with the total mass cached."""

    weights: np.ndarray
    mass: float
    is_probability: bool = False

    def __len__(self) -> int:
        return self.weights.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.weights
        return self.weights.astype(dtype)

    @property
    def support(self) -> np.ndarray:
        return self.weights > 0


def new_measure(weights, require_probability: bool = False) -> DiscreteMeasure:
    """Validate ``weights`` and wrap them in a :class:`DiscreteMeasure`.

    Raises:
        EmptyMeasure: ``weights`` has length 0.
        NegativeWeight: some weight is negative.
        NotProbability: ``require_probability`` is set and the mass is not 1.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise ShapeMismatch(f"measure weights must be 1-D, got shape {w.shape}")
    if w.size == 0:
        raise EmptyMeasure("measure has no atoms")
    if not np.all(np.isfinite(w)):
        raise ValueError("measure weights must be finite")
    if np.any(w < 0):
        raise NegativeWeight(f"negative weight {w.min()!r}")
    mass = float(np.sum(w))
    is_prob = abs(mass - 1.0) <= PROBABILITY_ATOL
    if require_probability and not is_prob:
        raise NotProbability(f"mass {mass!r} differs from 1")
    return DiscreteMeasure(_readonly(w), mass, is_prob and require_probability)


@dataclass(frozen=True)
class LogKernel:
    """Log-entries of a reference measure ``R`` on ``X x Y``.

    ``log_entries`` is always held densely; ``storage_kind`` records how the
    kernel was given so it can be exported the same way.
    """

    log_entries: np.ndarray
    storage_kind: Literal["dense", "triplets"] = "dense"

    @property
    def n_rows(self) -> int:
        return self.log_entries.shape[0]

    @property
    def n_cols(self) -> int:
        return self.log_entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.log_entries.shape

    @property
    def support(self) -> np.ndarray:
        return np.isfinite(self.log_entries)

    def values(self) -> np.ndarray:
        """Entries of ``R`` (zeros where the log-entry is ``-inf``)."""
        return np.exp(self.log_entries)

    def to_triplets(self) -> list[tuple[int, int, float]]:
        """Finite log-entries as ``(row, col, log_value)``, row-major."""
        rows, cols = np.nonzero(self.support)
        return [(int(i), int(j), float(self.log_entries[i, j])) for i, j in zip(rows, cols)]


def _check_log_entries(log_entries: np.ndarray) -> None:
    if log_entries.ndim != 2 or 0 in log_entries.shape:
        raise ShapeMismatch(f"kernel must be a nonempty matrix, got shape {log_entries.shape}")
    if np.any(np.isnan(log_entries)) or np.any(log_entries == np.inf):
        raise ValueError("log-kernel entries must lie in [-inf, inf)")
    lm = logsumexp(log_entries)
    if lm == -np.inf:
        raise AllZeroKernel("every kernel entry is zero")
    if not np.isfinite(lm):
        raise ValueError("kernel mass is not finite")


def log_kernel_from_log(log_entries, storage_kind: str = "dense") -> LogKernel:
    """Build a kernel directly from natural-log entries (``-inf`` for zeros)."""
    L = np.array(log_entries, dtype=float)
    _check_log_entries(L)
    return LogKernel(_readonly(L), storage_kind)


def log_kernel_from_log_triplets(triplets, shape) -> LogKernel:
    """Build a sparse kernel from ``(row, col, log_value)`` triplets."""
    nx, ny = (int(s) for s in shape)
    if nx <= 0 or ny <= 0:
        raise ShapeMismatch(f"kernel dims must be positive, got {shape}")
    L = np.full((nx, ny), -np.inf)
    for i, j, lv in triplets:
        lv = float(lv)
        if not np.isfinite(lv):
            raise ValueError("triplet log-values must be finite")
        L[int(i), int(j)] = lv
    _check_log_entries(L)
    return LogKernel(_readonly(L), "triplets")


def new_log_kernel(spec, shape=None) -> LogKernel:
    """Build a kernel from plain (non-log) values of ``R``.

    Args:
        spec: Dense matrix of nonnegative values, or, when ``shape`` is
            given, a list of ``(row, col, value)`` triplets with
            ``value > 0``.
        shape: ``(n_rows, n_cols)`` for triplet input.

    Raises:
        NegativeEntry: a value is negative (or a triplet value is not > 0).
        AllZeroKernel: every value is zero.
    """
    if shape is not None:
        trip = []
        for i, j, v in spec:
            v = float(v)
            if not v > 0:
                raise NegativeEntry(f"triplet value at ({i}, {j}) must be > 0, got {v!r}")
            trip.append((i, j, np.log(v)))
        return log_kernel_from_log_triplets(trip, shape)
    R = np.array(spec, dtype=float)
    if R.ndim != 2:
        raise ShapeMismatch(f"dense kernel must be 2-D, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise ValueError("kernel values must be finite")
    if np.any(R < 0):
        raise NegativeEntry(f"negative kernel entry {R.min()!r}")
    if not np.any(R > 0):
        raise AllZeroKernel("every kernel entry is zero")
    with np.errstate(divide="ignore"):
        L = np.log(R)
    return log_kernel_from_log(L, "dense")


def kernel_mass(k: LogKernel) -> float:
    """Total mass of ``R``, summed in log domain then exponentiated."""
    return float(np.exp(logsumexp(k.log_entries)))


def log_kernel_mass(k: LogKernel) -> float:
    return logsumexp(k.log_entries)


def kernel_marginals(k: LogKernel) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Row sums and column sums of ``R``."""
    rows = np.exp(logsumexp(k.log_entries, axis=1))
    cols = np.exp(logsumexp(k.log_entries, axis=0))
    return new_measure(rows), new_measure(cols)


@dataclass(frozen=True)
class Coupling:
    """A probability matrix on ``X x Y`` with its marginals cached.

    ``log_z`` is the log of the normalization constant that was divided out
    when the coupling was built from potentials (0 for plans built from
    explicit entries). ``log_entries`` is kept when available so relative
    entropies can be taken without re-logging rounded values.
    """

    entries: np.ndarray
    x_marginal: DiscreteMeasure
    y_marginal: DiscreteMeasure
    log_z: float = 0.0
    log_entries: np.ndarray | None = field(default=None, repr=False)

    @property
    def z(self) -> float:
        return float(np.exp(self.log_z))

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def coupling_from_entries(entries, log_entries=None, log_z: float = 0.0) -> Coupling:
    """Wrap a nonnegative matrix of total mass 1 as a :class:`Coupling`."""
    P = np.array(entries, dtype=float)
    if P.ndim != 2:
        raise ShapeMismatch(f"coupling must be 2-D, got shape {P.shape}")
    if np.any(P < 0) or not np.all(np.isfinite(P)):
        raise InvariantViolation("coupling_nonnegative", "entries must be finite and >= 0")
    total = float(np.sum(P))
    if abs(total - 1.0) > COUPLING_MASS_ATOL:
        raise InvariantViolation("coupling_mass", f"entries sum to {total!r}")
    if log_entries is not None:
        log_entries = _readonly(log_entries)
    return Coupling(
        _readonly(P),
        new_measure(P.sum(axis=1)),
        new_measure(P.sum(axis=0)),
        float(log_z),
        log_entries,
    )


def check_coupling(c: Coupling, kernel: LogKernel | None = None) -> None:
    """Raise :class:`InvariantViolation` if ``c`` breaks a coupling invariant."""
    P = c.entries
    if np.any(P < 0):
        raise InvariantViolation("coupling_nonnegative", f"min entry {P.min()!r}")
    total = float(P.sum())
    if abs(total - 1.0) > COUPLING_MASS_ATOL:
        raise InvariantViolation("coupling_mass", f"entries sum to {total!r}")
    for name, cached, actual in (
        ("coupling_x_marginal", c.x_marginal.weights, P.sum(axis=1)),
        ("coupling_y_marginal", c.y_marginal.weights, P.sum(axis=0)),
    ):
        err = float(np.max(np.abs(cached - actual)))
        if err > MASS_RTOL:
            raise InvariantViolation(name, f"cached marginal off by {err!r}")
    if kernel is not None:
        if kernel.shape != P.shape:
            raise ShapeMismatch(f"coupling {P.shape} vs kernel {kernel.shape}")
        outside = (P > 0) & ~kernel.support
        if np.any(outside):
            raise InvariantViolation("coupling_support", f"{int(outside.sum())} entries outside supp(R)")
