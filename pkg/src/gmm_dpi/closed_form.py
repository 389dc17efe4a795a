"""Closed-form error and efficiency formulas for the plug-in mean classifier.

``N`` is the class-1 training count and ``gamma * N`` the class-2 count; both
are continuous here.  ``dim`` is the dimension the classifier sees, ``d`` for
raw data and ``k`` after processing.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import log_ndtr

from .special_math import q_function

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _check_common(snr, n, dim):
    if np.any(np.asarray(snr) <= 0):
        raise ValueError("snr must be positive (snr = 0 is the degenerate guessing case)")
    if np.any(np.asarray(n) <= 0):
        raise ValueError("n must be positive")
    if np.any(np.asarray(dim) < 1):
        raise ValueError("dim must be >= 1")


def _check_gamma(gamma, allow_above_one=False):
    g = np.asarray(gamma)
    if np.any(g <= 0) or (not allow_above_one and np.any(g > 1)):
        raise ValueError("gamma must lie in (0, 1]")


def p_hat(snr, n, gamma, dim):
    """Approximate error probability of the plug-in classifier.

    Accurate to O(1/sqrt(dim)).  ``gamma > 1`` is accepted so that the
    class-swap symmetry ``p_hat(S, N, g, q) == p_hat(S, g N, 1/g, q)`` can be
    exercised; efficiency functions reject it.  Vectorises over arrays.
    """
    arg_plus, arg_minus = _q_arguments(snr, n, gamma, dim)
    out = 0.5 * np.asarray(q_function(arg_plus)) + 0.5 * np.asarray(q_function(arg_minus))
    return float(out) if out.ndim == 0 else out


def _q_arguments(snr, n, gamma, dim):
    _check_common(snr, n, dim)
    _check_gamma(gamma, allow_above_one=True)
    S = np.asarray(snr, dtype=float)
    N = np.asarray(n, dtype=float)
    g = np.asarray(gamma, dtype=float)
    q = np.asarray(dim, dtype=float)
    rs = np.sqrt(S)
    shift = (1.0 / (4.0 * N)) * ((1.0 - g) / g) * (q / rs)
    spread = (1.0 / (4.0 * N)) * ((1.0 + g) / g) * (q / S) + (1.0 / (8.0 * N**2)) * (
        (1.0 + g**2) / g**2
    ) * (q / S)
    arg_plus = (rs + shift) / np.sqrt(spread + 1.0 / (g * N) + 1.0)
    arg_minus = (rs - shift) / np.sqrt(spread + 1.0 / N + 1.0)
    return arg_plus, arg_minus


def p_hat_log_margin(snr, n, gamma, dim):
    """``log(0.5 - p_hat)``, accurate where ``p_hat`` rounds to 0.5.

    With strong class imbalance both Q arguments grow large in magnitude and
    ``p_hat`` sits within 1e-16 of one half, so two ``p_hat`` values can tie in
    floating point.  Here ``0.5 - p_hat = (Q(-a_minus) - Q(a_plus)) / 2`` is
    formed from log tails, which stay finite far past underflow.  Smaller
    margin means larger ``p_hat``.  Returns ``nan`` where ``p_hat >= 0.5``.
    """
    arg_plus, arg_minus = _q_arguments(snr, n, gamma, dim)
    lo = log_ndtr(-arg_plus)   # log Q(a_plus)
    hi = log_ndtr(arg_minus)   # log Q(-a_minus)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(hi > lo, np.log(0.5) + hi + np.log(-np.expm1(lo - hi)), np.nan)
    return float(out) if out.ndim == 0 else out


def p_hat_balanced(snr, n, dim):
    """``p_hat`` at ``gamma = 1`` in its simplified single-Q form."""
    _check_common(snr, n, dim)
    S = np.asarray(snr, dtype=float)
    N = np.asarray(n, dtype=float)
    q = np.asarray(dim, dtype=float)
    arg = np.sqrt(S) / np.sqrt((q / (2.0 * S) + 1.0) / N + (q / (4.0 * S)) / N**2 + 1.0)
    out = np.asarray(q_function(arg))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TheoryPoint:
    snr: float
    n: float
    gamma: float
    dim: int

    def __post_init__(self):
        if not (self.snr > 0 and self.n > 0 and self.gamma > 0 and self.dim >= 1):
            raise ValueError(f"invalid theory point {self}")

    @property
    def n_total(self) -> float:
        return (1.0 + self.gamma) * self.n

    def p_hat(self) -> float:
        return p_hat(self.snr, self.n, self.gamma, self.dim)


def efficiency_theoretical(snr, n, gamma, d, k):
    """Relative error reduction (percent) predicted for processing ``d -> k``."""
    _check_gamma(gamma)
    if np.any(np.asarray(k) < 1) or np.any(np.asarray(k) > np.asarray(d)):
        raise ValueError("need 1 <= k <= d")
    px = p_hat(snr, n, gamma, d)
    pz = p_hat(snr, n, gamma, k)
    return 100.0 * (px - pz) / px


def _gamma_factor(gamma, alt):
    g = np.asarray(gamma, dtype=float)
    if alt:
        return 3.0 + 2.0 * g + 1.0 / g
    # first-order expansion of p_hat in 1/N; equals 2 + g + 1/g
    return (1.0 + g) ** 2 / g


def _check_asymptotic_args(snr, n_total, gamma, d, k):
    _check_common(snr, n_total, d)
    _check_gamma(gamma)
    if np.any(np.asarray(k) < 1) or np.any(np.asarray(k) > np.asarray(d)):
        raise ValueError("need 1 <= k <= d")


def efficiency_asymptotic(snr, n_total, gamma, d, k, alt_gamma_factor=False):
    """Large-sample approximation of the efficiency, in percent.

    ``25 / (2 sqrt(2 pi)) * exp(-S/2) / (sqrt(S) Q(sqrt(S))) * c(gamma) * (d - k) / N_T``
    with ``N_T = (1 + gamma) N``.  The default ``c(gamma) = (1 + gamma)^2 / gamma``
    is the exact 1/N_T coefficient of ``efficiency_theoretical``, so the
    relative gap vanishes like 1/N_T.  ``alt_gamma_factor=True`` uses
    ``c(gamma) = 3 + 2 gamma + 1/gamma`` instead, which overshoots by a
    constant factor (1.5 at gamma = 1).
    """
    _check_asymptotic_args(snr, n_total, gamma, d, k)
    S = np.asarray(snr, dtype=float)
    rs = np.sqrt(S)
    lead = 25.0 / (2.0 * _SQRT_2PI)
    out = (
        lead
        * np.exp(-S / 2.0)
        / (rs * np.asarray(q_function(rs)))
        * _gamma_factor(gamma, alt_gamma_factor)
        * (np.asarray(d, dtype=float) - np.asarray(k, dtype=float))
        / np.asarray(n_total, dtype=float)
    )
    return float(out) if out.ndim == 0 else out


def delta_asymptotic(snr, n_total, gamma, d, k, alt_gamma_factor=False):
    """Large-sample approximation of ``p_hat(.., d) - p_hat(.., k)``.

    Default: ``exp(-S/2) / (8 sqrt(2 pi) sqrt(S)) * (1+gamma)^2/gamma * (d-k) / N_T``,
    i.e. ``efficiency_asymptotic / 100 * Q(sqrt(S))``.  ``alt_gamma_factor=True`` gives
    ``exp(-S/2) / (4 sqrt(2 pi) sqrt(S)) * (3 + 2 gamma + 1/gamma) * (d-k) / N_T``.
    """
    _check_asymptotic_args(snr, n_total, gamma, d, k)
    S = np.asarray(snr, dtype=float)
    lead = (1.0 / 4.0 if alt_gamma_factor else 1.0 / 8.0) / _SQRT_2PI
    out = (
        lead
        * np.exp(-S / 2.0)
        / np.sqrt(S)
        * _gamma_factor(gamma, alt_gamma_factor)
        * (np.asarray(d, dtype=float) - np.asarray(k, dtype=float))
        / np.asarray(n_total, dtype=float)
    )
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EtaMaxResult:
    n_max: float
    eta_max: float
    # gamma == 1, where the uniqueness/monotonicity results are proven
    proven_regime: bool = True
    certified: bool = True


def find_eta_max(snr, gamma=1.0, d=2000, k=1000, n_points=64, window=(1e-2, 1e8)):
    """Maximise ``N -> efficiency_theoretical`` over continuous N.

    A log-spaced scan over ``window * k / snr`` locates the best grid cell,
    then golden-section search in log N refines it.  ``certified`` reports
    whether the result beats the efficiency at ``n_max / 2`` and ``2 n_max``.
    """
    _check_gamma(gamma)
    if not 1 <= k < d:
        raise ValueError("need 1 <= k < d")
    scale = k / snr
    grid = np.geomspace(window[0] * scale, window[1] * scale, n_points)
    vals = efficiency_theoretical(snr, grid, gamma, d, k)
    i = int(np.argmax(vals))

    def neg_eta(t):
        return -efficiency_theoretical(snr, math.exp(t), gamma, d, k)

    logs = np.log(grid)
    if 0 < i < n_points - 1:
        res = minimize_scalar(
            neg_eta, bracket=(logs[i - 1], logs[i], logs[i + 1]), method="golden",
            options={"xtol": 1e-10},
        )
        t_best, eta_best = res.x, -res.fun
        if eta_best < vals[i]:
            t_best, eta_best = logs[i], vals[i]
    else:
        t_best, eta_best = logs[i], vals[i]
    n_max = math.exp(t_best)
    certified = bool(
        eta_best >= efficiency_theoretical(snr, 0.5 * n_max, gamma, d, k)
        and eta_best >= efficiency_theoretical(snr, 2.0 * n_max, gamma, d, k)
    )
    return EtaMaxResult(n_max, float(eta_best), proven_regime=(gamma == 1), certified=certified)


def n_max_approx(snr, k, r, regime="low_snr"):
    """Approximate maximiser of the balanced efficiency for ``d = r k``.

    ``low_snr``: ``k/(2S) * r^(2/3) (r^(1/3) - 1) / (r^(2/3) - 1)``;
    ``high_snr``: ``k/(2S) * sqrt(r)``.  Valid for ``k >> max(1, S)``.
    """
    if r <= 1:
        raise ValueError("r = d/k must exceed 1")
    if k < 1 or snr <= 0:
        raise ValueError("need k >= 1 and snr > 0")
    pre = k / (2.0 * snr)
    if regime == "low_snr":
        c = r ** (1.0 / 3.0)
        return pre * c * c * (c - 1.0) / (c * c - 1.0)
    if regime == "high_snr":
        return pre * math.sqrt(r)
    raise ValueError(f"regime must be 'low_snr' or 'high_snr', got {regime!r}")

