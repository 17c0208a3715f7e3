"""Ambiguity function, Doppler tolerance and cross-correlation statistics.

Doppler is expressed in cycles per chip. The discrete ambiguity function is
|sum_n x_n conj(x_{n+k}) e^{j 2 pi nu n}| / N over lags k = -(N-1)..N-1.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .metrics import cross_correlation
from .seqcore import UnimodularSequence, as_sequence, random_unimodular


@dataclass(frozen=True, eq=False)
class AmbiguitySurface:
    """|AF| sampled on integer delays and a Doppler grid; rows are Dopplers."""

    delays: np.ndarray
    dopplers: np.ndarray
    magnitude: np.ndarray

    @property
    def n(self) -> int:
        return (self.delays.size + 1) // 2

    def db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 20 * np.log10(self.magnitude)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delay", "doppler", "mag_db"])
        db = self.db()
        for i, nu in enumerate(self.dopplers):
            for j, k in enumerate(self.delays):
                w.writerow([int(k), repr(float(nu)), repr(float(db[i, j]))])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class DopplerProfile:
    nu_grid: np.ndarray
    peak_loss_db: np.ndarray
    pslr_db: np.ndarray
    islr_db: np.ndarray
    peak_lag: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["nu", "peak_loss_db", "pslr_db", "islr_db"])
        for row in zip(self.nu_grid, self.peak_loss_db, self.pslr_db, self.islr_db):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _doppler_xcorr(s: np.ndarray, nus: np.ndarray) -> np.ndarray:
    """Rows c_k(nu) = sum_n x_n e^{j 2 pi nu n} conj(x_{n+k}), k = -(N-1)..N-1."""
    n = s.size
    size = 2 * n
    idx = np.arange(1, n + 1)
    shifted = s[None, :] * np.exp(2j * np.pi * np.asarray(nus, dtype=float)[:, None] * idx[None, :])
    fa = np.fft.fft(shifted, size, axis=1)
    fb = np.fft.fft(s, size)
    raw = np.conj(np.fft.ifft(fb[None, :] * np.conj(fa), axis=1))
    return np.concatenate([raw[:, size - (n - 1):], raw[:, :n]], axis=1)


def ambiguity(x, doppler_grid) -> AmbiguitySurface:
    """Discrete ambiguity function normalized so the origin equals 1."""
    x = as_sequence(x)
    nus = np.asarray(doppler_grid, dtype=float)
    if nus.ndim != 1 or not np.all(np.isfinite(nus)):
        raise ValueError("doppler grid must be a finite vector")
    c = _doppler_xcorr(x.samples, nus)
    n = x.n
    return AmbiguitySurface(np.arange(-(n - 1), n), nus, np.abs(c) / n)


def thumbtack_level(surface: AmbiguitySurface, nu_min: Optional[float] = None, k_min: int = 1) -> float:
    """Largest |AF| in dB outside the origin neighbourhood.

    The neighbourhood is |nu| < nu_min together with |k| < k_min; nu_min
    defaults to 2/N, past the first null of the zero-delay Doppler response.
    """
    if nu_min is None:
        nu_min = 2.0 / surface.n
    far_nu = np.abs(surface.dopplers) >= nu_min
    far_k = np.abs(surface.delays) >= k_min
    outside = far_nu[:, None] | far_k[None, :]
    with np.errstate(divide="ignore"):
        return float(20 * np.log10(surface.magnitude[outside].max()))


def is_thumbtack(surface: AmbiguitySurface, level_db: float = -10.0, nu_min: Optional[float] = None) -> bool:
    """Every response away from the origin stays at least |level_db| below the mainlobe."""
    return thumbtack_level(surface, nu_min) <= level_db


def ridge_locus(surface: AmbiguitySurface) -> np.ndarray:
    """Delay of the per-Doppler maximum, one entry per Doppler row."""
    return surface.delays[np.argmax(surface.magnitude, axis=1)]


def is_ridge(surface: AmbiguitySurface, min_span: int = 2) -> bool:
    """Peak delay moves monotonically with Doppler and covers at least min_span delays.

    The Doppler grid must be sorted.
    """
    order = np.argsort(surface.dopplers)
    loc = ridge_locus(surface)[order]
    d = np.diff(loc)
    monotone = bool(np.all(d >= 0) or np.all(d <= 0))
    return monotone and (loc.max() - loc.min() + 1) >= min_span


def doppler_sweep(x, nu_max: float, steps: int) -> DopplerProfile:
    """Matched-filter response to a Doppler-shifted return over nu in [0, nu_max].

    peak_loss_db is the drop of the correlation peak relative to N (positive
    means loss). PSLR and ISLR follow the 20 log10 convention against the
    peak, with every lag other than the peak lag counted as a sidelobe.
    """
    if not nu_max > 0:
        raise ValueError("nu_max must be positive")
    if steps < 2:
        raise ValueError("steps must be >= 2")
    x = as_sequence(x)
    n = x.n
    nus = np.linspace(0.0, nu_max, steps)
    mag = np.abs(_doppler_xcorr(x.samples, nus))
    j = np.argmax(mag, axis=1)
    peak = mag[np.arange(steps), j]
    side = mag.copy()
    side[np.arange(steps), j] = 0.0
    with np.errstate(divide="ignore"):
        loss = -20 * np.log10(peak / n)
        pslr = 20 * np.log10(side.max(axis=1) / peak)
        islr = 20 * np.log10(np.sum(side**2, axis=1) / peak)
    lags = np.arange(-(n - 1), n)
    return DopplerProfile(nus, loss, pslr, islr, lags[j])


# --- interference statistics -------------------------------------------------


def chirp_sequence(n: int, slope: float = 1.0, start_phase: float = 0.0) -> UnimodularSequence:
    """Sampled linear FM: phase pi * slope * n^2 / N, slope 1 sweeping the full chip band."""
    idx = np.arange(n, dtype=float)
    return UnimodularSequence(start_phase + np.pi * slope * idx**2 / n)


@dataclass(frozen=True)
class SequenceGenerator:
    """Recipe for one random sequence per seed.

    kind:
        'random'  i.i.d. uniform phases.
        'chirp'   linear FM with params['slope'] and a random start phase.
        'pecs'    a polynomial-phase design; params are DesignConfig fields
                  (n is taken from this generator, seed from the trial).
        'fixed'   the phases in params['phases'] every time.
    """

    kind: str
    n: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("random", "chirp", "pecs", "fixed"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("n must be >= 2")

    def make(self, seed: int) -> UnimodularSequence:
        if self.kind == "random":
            return random_unimodular(self.n, seed)
        if self.kind == "chirp":
            rng = np.random.default_rng(seed)
            return chirp_sequence(self.n, float(self.params.get("slope", 1.0)), rng.uniform(0, 2 * np.pi))
        if self.kind == "fixed":
            x = UnimodularSequence(self.params["phases"])
            if x.n != self.n:
                raise ValueError("fixed phases do not match n")
            return x
        from .designers import DesignConfig, run_design
        from .mm_engine import StoppingRule

        opts = dict(self.params)
        iters = int(opts.pop("iters", 200))
        cfg = DesignConfig(
            n=self.n,
            seed=seed,
            stopping=StoppingRule(max_iters=iters),
            **{k: tuple(v) if isinstance(v, list) else v for k, v in opts.items()},
        )
        return run_design(cfg).x_final


def trial_seed(seed: int, trial: int, stream: int) -> int:
    """Seed for one side of one trial, independent of scheduling order."""
    return int(np.random.SeedSequence([int(seed), int(trial), int(stream)]).generate_state(1)[0])


@dataclass(eq=False)
class InterferenceStats:
    values_db: np.ndarray
    bin_width_db: float = 0.25

    @property
    def trials(self) -> int:
        return int(self.values_db.size)

    def histogram(self):
        """(left bin edges in dB, counts) over bins of width bin_width_db."""
        idx = np.floor(self.values_db / self.bin_width_db).astype(np.int64)
        lo, hi = idx.min(), idx.max()
        counts = np.bincount(idx - lo, minlength=hi - lo + 1)
        return (np.arange(lo, hi + 1) * self.bin_width_db), counts

    @property
    def mean_db(self) -> float:
        return float(np.mean(self.values_db))

    @property
    def center_db(self) -> float:
        """Centre of the most populated bin (lowest one on ties)."""
        edges, counts = self.histogram()
        return float(edges[np.argmax(counts)] + self.bin_width_db / 2)

    def summary(self) -> dict:
        return {
            "trials": self.trials,
            "mean_db": self.mean_db,
            "center_db": self.center_db,
            "median_db": float(np.median(self.values_db)),
            "min_db": float(self.values_db.min()),
            "max_db": float(self.values_db.max()),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_db", "count"])
        for e, c in zip(*self.histogram()):
            w.writerow([repr(float(e)), int(c)])
        return buf.getvalue()


def max_xcorr_db(x, y) -> float:
    """20 log10(max_k |c_k| / N)."""
    lags, c = cross_correlation(x, y)
    n = (lags.size + 1) // 2
    return float(20 * np.log10(np.max(np.abs(c)) / n))


def interference_stats(
    gen_a: SequenceGenerator,
    gen_b: SequenceGenerator,
    trials: int,
    seed: int,
    map_fn: Optional[Callable] = None,
) -> InterferenceStats:
    """Peak normalized cross-correlation of independent pairs, one pair per trial.

    ``map_fn`` may be a parallel map (for example Executor.map); results do
    not depend on it because every trial derives its own seeds.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = [(gen_a, gen_b, seed, t) for t in range(trials)]
    mapper = map_fn or map
    vals = np.fromiter(mapper(_one_trial, jobs), dtype=float, count=trials)
    return InterferenceStats(vals)


def _one_trial(job) -> float:
    gen_a, gen_b, seed, t = job
    return max_xcorr_db(gen_a.make(trial_seed(seed, t, 0)), gen_b.make(trial_seed(seed, t, 1)))
