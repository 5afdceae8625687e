"""Log-domain reductions shared by every module."""

from __future__ import annotations

import numpy as np


def logsumexp(a, axis=None):
    """Compute ``log(sum(exp(a)))`` along ``axis`` without overflow.

    ``-inf`` entries contribute nothing; a slice made only of ``-inf``
    reduces to ``-inf``. The maximum is extracted first and the remaining
    terms are summed by numpy in index order, so the result is bitwise
    reproducible for a given input.

    Args:
        a: Array of extended reals in ``[-inf, inf)``.
        axis: Axis to reduce, or ``None`` for all entries.

    Returns:
        A float when ``axis`` is ``None``, otherwise an array with ``axis``
        removed.
    """
    a = np.asarray(a, dtype=float)
    amax = np.max(a, axis=axis, keepdims=True)
    amax = np.where(np.isfinite(amax), amax, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - amax), axis=axis, keepdims=True)) + amax
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)
