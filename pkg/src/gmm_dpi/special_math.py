"""Standard-normal tail and density."""

import numpy as np
from scipy.special import erfc

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _check_finite(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"argument must be finite, got {x!r}")
    return arr


def _unwrap(arr):
    return float(arr) if arr.ndim == 0 else arr


def q_function(x):
    """Gaussian tail probability ``P(N(0, 1) > x)``.

    Evaluated as ``erfc(x / sqrt(2)) / 2`` so that the upper tail keeps full
    relative precision (``1 - Phi(x)`` cancels catastrophically for x > 8).
    Accepts scalars or arrays.
    """
    arr = _check_finite(x)
    return _unwrap(0.5 * erfc(arr / np.sqrt(2.0)))


def normal_pdf(x):
    """Standard normal density."""
    arr = _check_finite(x)
    return _unwrap(_INV_SQRT_2PI * np.exp(-0.5 * arr * arr))
