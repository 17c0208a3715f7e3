"""Majorization machinery for l_p sidelobe minimization.

All quantities use the normalized convention in which the majorizer
coefficients are divided by t^p, where t is the l_p norm of the current
sidelobes. Only ratios of these quantities enter the update direction, so
the normalization cancels while keeping large p finite.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .metrics import CorrelationProfile, acorr_fft_raw, lp_norm
from .seqcore import UnimodularSequence


@dataclass(frozen=True)
class StoppingRule:
    """Stop on max_iters, on a small relative objective change over a window, or on a tiny step."""

    max_iters: int = 100_000
    rel_obj_tol: float = 1e-10
    abs_phase_tol: float = 0.0
    window: int = 50

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.rel_obj_tol < 0 or self.abs_phase_tol < 0:
            raise ValueError("tolerances must be >= 0")
        if self.window < 1:
            raise ValueError("window must be >= 1")

    def stalled(self, history, step_size: float = np.inf) -> bool:
        """True when the objective has flattened out or the last step was tiny."""
        if self.abs_phase_tol > 0 and step_size < self.abs_phase_tol:
            return True
        if self.rel_obj_tol > 0 and len(history) > self.window:
            old = history[-1 - self.window]
            if old <= 0:
                return True
            return (old - history[-1]) / old < self.rel_obj_tol
        return False


@dataclass(frozen=True, eq=False)
class MajorizerParams:
    """Supporting quantities of one MM-PSL iteration.

    alpha, beta and w_hat are indexed by sidelobe lag k = 1..N-1. f is the
    2N-point FFT of the zero-padded iterate and mu_tilde the spectrum of the
    weighted correlation. raw_corr is ifft(|f|^2), whose entry k < N is
    conj(r_k).
    """

    t: float
    p: float
    alpha: np.ndarray
    beta: np.ndarray
    w_hat: np.ndarray
    lambda_L: float
    lambda_u: float
    mu_tilde: np.ndarray
    f: np.ndarray
    raw_corr: np.ndarray = field(repr=False)

    @property
    def impulse(self) -> bool:
        """All sidelobes are zero; the iterate cannot be improved."""
        return self.t == 0.0


def quadratic_coefficient(u, p: float) -> np.ndarray:
    """Normalized curvature of the quadratic majorizer of s^p on [0, t].

    With u = s/t this returns t^2 times
    [1 + (p-1) u^p - p u^(p-1)] / (1 - u)^2, evaluated through log1p/expm1
    so it stays accurate near u = 1 and for p in the thousands. The limit
    at u = 1 is p(p-1)/2.
    """
    u = np.asarray(u, dtype=float)
    e = 1.0 - u
    out = np.full(u.shape, p * (p - 1) / 2.0)
    ok = e > 0
    eo = e[ok]
    # 1 + (p-1)u^p - p u^(p-1) = 1 - u^(p-1) (1 + (p-1) e)
    # u = 0 gives log1p(-1) = -inf, which expm1 maps to the right limit
    with np.errstate(divide="ignore"):
        log_term = (p - 1) * np.log1p(-eo) + np.log1p((p - 1) * eo)
    out[ok] = -np.expm1(log_term) / eo**2
    return out


def majorizer_params(
    x: UnimodularSequence, p: float, f: Optional[np.ndarray] = None, raw: Optional[np.ndarray] = None
) -> MajorizerParams:
    """Compute the supporting parameters of one l_p majorization step."""
    if not p >= 2:
        raise ValueError(f"p must be >= 2, got {p}")
    s = x.samples
    n = s.size
    if f is None:
        f = np.fft.fft(s, 2 * n)
    if raw is None:
        raw = acorr_fft_raw(s, f)
    mag = np.abs(raw[1:n])
    t = lp_norm(mag, p)
    if t == 0.0:
        z = np.zeros(n - 1)
        return MajorizerParams(0.0, float(p), z, z, z, 0.0, 0.0, np.zeros(2 * n), f, raw)
    u = mag / t
    a = quadratic_coefficient(u, p) / t**2
    # non-positive in exact arithmetic; at p = 2 the two terms cancel and
    # rounding can leave +eps, which is dropped
    beta = np.minimum((p / t) * u ** (p - 1) - 2.0 * a * mag, 0.0)
    w_hat = p / (2.0 * t**2) * u ** (p - 2)
    # weights over the 2N-point lag grid: lag 0 and the unused middle slot carry 0
    weights = np.concatenate([[0.0], w_hat, [0.0], w_hat[::-1]])
    mu = np.fft.fft(raw * weights).real
    lam_l = float(np.max(a * (n - np.arange(1, n))))
    lam_u = 0.5 * float(mu[1::2].max() + mu[0::2].max())
    return MajorizerParams(float(t), float(p), a, beta, w_hat, lam_l, lam_u, mu, f, raw)


def y_update(x: UnimodularSequence, params: MajorizerParams) -> np.ndarray:
    """Target vector y = x - F_{:,1:N}(mu o f) / (2N (lambda_L N + lambda_u))."""
    s = x.samples
    if params.impulse:
        return s.copy()
    n = s.size
    denom = params.lambda_L * n + params.lambda_u
    y = s - np.fft.ifft(params.mu_tilde * params.f)[:n] / denom
    if not (np.isfinite(denom) and denom > 0 and np.all(np.isfinite(y))):
        raise FloatingPointError("non-finite or non-positive normalization in the y update")
    return y


def dense_weighted_correlation(x: UnimodularSequence, params: MajorizerParams) -> np.ndarray:
    """Explicit N x N matrix sum_k w_k r_{-k} U_k over k = +-1..+-(N-1).

    (U_k)_{i,j} = 1 when i - j = k. Used as an oracle for the FFT form of
    the update; x - y is parallel to this matrix applied to x.
    """
    n = x.n
    r = np.conj(params.raw_corr[:n])
    mat = np.zeros((n, n), dtype=complex)
    for k in range(1, n):
        w = params.w_hat[k - 1]
        mat += w * np.conj(r[k]) * np.eye(n, k=-k)
        mat += w * r[k] * np.eye(n, k=k)
    return mat


def majorizer_gap(r_prev: CorrelationProfile, r_test: CorrelationProfile, p: float) -> np.ndarray:
    """Per-lag value of majorizer minus |r|^p, both divided by t^p.

    The majorizer of s^p built at s_i is
    alpha s^2 + beta s + alpha s_i^2 - (p-1) s_i^p, valid on [0, t].
    """
    prev = np.abs(r_prev.sidelobes)
    test = np.abs(r_test.sidelobes)
    if prev.shape != test.shape:
        raise ValueError("profiles must have the same length")
    t = lp_norm(prev, p)
    if t == 0.0:
        return np.zeros_like(prev)
    ui, ut = prev / t, test / t
    a = quadratic_coefficient(ui, p)
    b = p * ui ** (p - 1) - 2.0 * a * ui
    maj = a * ut**2 + b * ut + a * ui**2 - (p - 1) * ui**p
    return maj - ut**p


def check_majorizer(
    r_prev: CorrelationProfile, r_test: CorrelationProfile, p: float, tol: float = 1e-9
) -> bool:
    """True when the quadratic majorizer dominates |r_k|^p at every lag of r_test."""
    return bool(np.all(majorizer_gap(r_prev, r_test, p) >= -tol))


TRACE_COLUMNS = ("iter", "objective_lp", "isl_db", "psl_db", "wall_ms")


def trace_csv(objective, isl_db, psl_db, wall_ms=None) -> str:
    """Iteration trace; wall_ms is left empty unless timings are supplied."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for i, (o, a, b) in enumerate(zip(objective, isl_db, psl_db)):
        ms = "" if wall_ms is None else f"{wall_ms[i]:.3f}"
        w.writerow([i, repr(float(o)), repr(float(a)), repr(float(b)), ms])
    return buf.getvalue()
