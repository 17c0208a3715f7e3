"""Aperiodic correlation and sidelobe metrics.

Convention: r_k = sum_n x_n conj(x_{n+k}) for k = 0..N-1, with
r_{-k} = conj(r_k). The 2N zero-padded FFT is the production path and the
O(N^2) sum is kept as an oracle.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .seqcore import UnimodularSequence, as_sequence


@dataclass(frozen=True, eq=False)
class CorrelationProfile:
    """Non-negative lags r_0..r_{N-1} of an aperiodic autocorrelation."""

    lags: np.ndarray

    def __post_init__(self):
        r = np.array(self.lags, dtype=complex, copy=True)
        if r.ndim != 1 or r.size < 1:
            raise ValueError("lags must be a non-empty vector")
        r.setflags(write=False)
        object.__setattr__(self, "lags", r)

    @property
    def n(self) -> int:
        return int(self.lags.size)

    @property
    def sidelobes(self) -> np.ndarray:
        return self.lags[1:]

    def full(self):
        """Return (lag indices, r) over k = -(N-1)..N-1."""
        r = self.lags
        vals = np.concatenate([np.conj(r[:0:-1]), r])
        return np.arange(-(self.n - 1), self.n), vals

    def to_csv(self) -> str:
        """CSV with columns lag,re,im,abs,abs_db_rel_peak (dB relative to |r_0|)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lag", "re", "im", "abs", "abs_db_rel_peak"])
        mag = np.abs(self.lags)
        with np.errstate(divide="ignore"):
            rel = 20 * np.log10(mag / mag[0]) if mag[0] > 0 else np.full(mag.shape, np.nan)
        for k, (v, a, d) in enumerate(zip(self.lags, mag, rel)):
            w.writerow([k, repr(float(v.real)), repr(float(v.imag)), repr(float(a)), repr(float(d))])
        return buf.getvalue()


@dataclass(frozen=True)
class SidelobeMetrics:
    isl: float
    psl: float
    lp: float
    p: float

    @property
    def isl_db(self) -> float:
        return _db10(self.isl)

    @property
    def psl_db(self) -> float:
        return _db10(self.psl)

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "isl": self.isl,
            "psl": self.psl,
            "lp": self.lp,
            "isl_db": self.isl_db,
            "psl_db": self.psl_db,
        }


def _db10(v: float) -> float:
    return float("-inf") if v <= 0 else float(10 * np.log10(v))


def _samples(x) -> np.ndarray:
    return as_sequence(x).samples


def autocorr_direct(x) -> CorrelationProfile:
    """O(N^2) evaluation of r_k = sum_{n=1}^{N-k} x_n conj(x_{n+k})."""
    s = _samples(x)
    n = s.size
    r = np.empty(n, dtype=complex)
    for k in range(n):
        r[k] = np.sum(s[: n - k] * np.conj(s[k:]))
    return CorrelationProfile(r)


def acorr_fft_raw(s: np.ndarray, f: np.ndarray | None = None) -> np.ndarray:
    """Length-2N vector ifft(|fft(s, 2N)|^2).

    Entry k (k < N) equals conj(r_k) in this module's convention and entry
    2N-k equals r_k; entry N is zero.
    """
    if f is None:
        f = np.fft.fft(s, 2 * s.size)
    return np.fft.ifft(np.abs(f) ** 2)


def autocorr_fft(x) -> CorrelationProfile:
    """Autocorrelation via a 2N-point FFT, lags 0..N-1."""
    s = _samples(x)
    n = s.size
    raw = acorr_fft_raw(s)
    return CorrelationProfile(np.conj(raw[:n]))


def autocorr(x) -> CorrelationProfile:
    return autocorr_fft(x)


def cross_correlation(x, y):
    """c_k = sum_n x_n conj(y_{n+k}) over k = -(N-1)..N-1.

    Inputs may be sequences or complex vectors. When the lengths differ the
    shorter one is zero-padded at the end to the common length N.

    Returns:
        (lags, c) as integer and complex vectors of length 2N-1.
    """
    a = np.asarray(x.samples if isinstance(x, UnimodularSequence) else x, dtype=complex)
    b = np.asarray(y.samples if isinstance(y, UnimodularSequence) else y, dtype=complex)
    if a.size == 0 or b.size == 0:
        raise ValueError("cross-correlation of an empty sequence")
    n = max(a.size, b.size)
    size = 2 * n
    fa = np.fft.fft(a, size)
    fb = np.fft.fft(b, size)
    # ifft(fb * conj(fa))[k] = sum_n conj(a_n) b_{n+k}, the conjugate of c_k
    raw = np.conj(np.fft.ifft(fb * np.conj(fa)))
    c = np.concatenate([raw[size - (n - 1):], raw[:n]])
    return np.arange(-(n - 1), n), c


def normalized_peak_xcorr(x, y) -> float:
    """max_k |c_k| / N."""
    lags, c = cross_correlation(x, y)
    n = (lags.size + 1) // 2
    return float(np.max(np.abs(c)) / n)


def lp_norm(v, p: float) -> float:
    """(sum |v|^p)^(1/p), scaled by the maximum so large p does not overflow."""
    a = np.abs(np.asarray(v))
    if a.size == 0:
        return 0.0
    m = float(a.max())
    if m == 0.0:
        return 0.0
    if np.isinf(p):
        return m
    return m * float(np.sum((a / m) ** p)) ** (1.0 / p)


def sidelobe_metrics(r: CorrelationProfile, p: float = 2.0) -> SidelobeMetrics:
    """ISL, PSL and l_p norm of the sidelobes r_1..r_{N-1}."""
    if not p >= 2:
        raise ValueError(f"p must be >= 2, got {p}")
    side = np.abs(r.sidelobes)
    isl = float(np.sum(side**2))
    psl = float(side.max()) if side.size else 0.0
    return SidelobeMetrics(isl=isl, psl=psl, lp=lp_norm(side, p), p=float(p))


def sequence_metrics(x, p: float = 2.0) -> SidelobeMetrics:
    return sidelobe_metrics(autocorr_fft(x), p)


def isl_psl_db(x) -> tuple[float, float]:
    m = sequence_metrics(x)
    return m.isl_db, m.psl_db


def pslr_islr(r: CorrelationProfile):
    """PSLR and ISLR in dB (20 log10) plus the per-lag correlation level |r_k/r_0|.

    The denominator is max_k |r_k| over k = 0..N-1. A zero sidelobe set
    gives -inf.
    """
    mag = np.abs(r.lags)
    if mag[0] == 0:
        raise ValueError("degenerate profile: r_0 is zero")
    peak = float(mag.max())
    side = mag[1:]
    psl = float(side.max()) if side.size else 0.0
    isl = float(np.sum(side**2))
    with np.errstate(divide="ignore"):
        pslr = float(20 * np.log10(psl / peak))
        islr = float(20 * np.log10(isl / peak))
    return pslr, islr, mag / mag[0]
