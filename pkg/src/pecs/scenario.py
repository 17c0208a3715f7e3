"""Complex-baseband automotive radar scenario with mutual interference.

Every waveform is evaluated at absolute time, so echo delays, interferer
start offsets and Doppler rotations are applied exactly rather than by
sample shifting. The victim runs either

* PMCW: rectangular chips sampled at the chip rate, one code period per
  pulse followed by transmit-idle time, a per-pulse matched filter and a
  slow-time FFT; or
* FMCW: a linear chirp sampled at ``fmcw_oversample`` times its bandwidth,
  de-chirped against the reference, low-pass filtered and decimated to
  ``fmcw_if_samples`` per chirp in the FFT domain, then range and Doppler
  FFTs.

Targets follow the two-way radar equation, interferers the one-way link
budget. Doppler across pulses is stop-and-hop; intra-pulse Doppler of the
target echoes is optional. Interferers always rotate continuously.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .seqcore import UnimodularSequence

C = 299_792_458.0
BOLTZMANN = 1.380649e-23
EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class Target:
    range_m: float
    speed_mps: float = 0.0
    rcs_dbsm: float = 10.0


@dataclass(frozen=True)
class Interferer:
    """Another radar illuminating the victim directly.

    ``time_offset_s`` is the start of the interferer's first pulse relative
    to the victim's; None draws it uniformly over one PRI for every frame.
    ``bandwidth_hz`` applies to FMCW interferers (None means the victim's).
    ``prf_hz`` None means the victim's PRF, so the interference repeats
    identically every pulse apart from its Doppler rotation.
    PMCW interferers get their own code unless one is passed to simulate.
    """

    range_m: float
    speed_mps: float = 0.0
    waveform: str = "pmcw"
    bandwidth_hz: Optional[float] = None
    time_offset_s: Optional[float] = None
    tx_power_dbm: Optional[float] = None
    prf_hz: Optional[float] = None

    def __post_init__(self):
        if self.prf_hz is not None and self.prf_hz <= 0:
            raise ValueError("interferer prf_hz must be positive")
        if self.waveform not in ("pmcw", "fmcw"):
            raise ValueError(f"interferer waveform must be 'pmcw' or 'fmcw', got {self.waveform!r}")
        if self.range_m <= 0:
            raise ValueError("interferer range must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    """Radar, geometry and processing settings in SI units.

    Defaults are the full-scale automotive profile; ``desk_scale`` returns
    a profile scaled by 1/10 in chip rate and code length with 64 pulses.
    The noise figure and temperature set the thermal floor over the sampled
    bandwidth.
    """

    carrier_hz: float = 79e9
    bandwidth_hz: float = 150e6
    pulse_s: float = 60e-6
    prf_hz: float = 16.66e3
    pulses: int = 256
    chip_s: float = 6.66e-9
    code_len: int = 4500
    tx_power_dbm: float = 12.0
    antenna_gain_db: float = 10.0
    noise_figure_db: float = 12.0
    temperature_k: float = 290.0
    targets: tuple = ()
    interferers: tuple = ()
    seed: int = 0
    fmcw_if_samples: int = 1024
    fmcw_oversample: int = 2
    window: str = "hann"
    intra_pulse_doppler: bool = False
    include_noise: bool = True
    code_m_range: tuple = (5, 20)
    code_q: int = 3
    code_p: float = 10.0
    code_iters: int = 100

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(_coerce(Target, t) for t in self.targets))
        object.__setattr__(self, "interferers", tuple(_coerce(Interferer, i) for i in self.interferers))
        object.__setattr__(self, "code_m_range", tuple(int(v) for v in self.code_m_range))
        if min(self.carrier_hz, self.bandwidth_hz, self.pulse_s, self.prf_hz, self.chip_s) <= 0:
            raise ValueError("carrier, bandwidth, pulse, prf and chip time must be positive")
        if self.pulses < 1 or self.code_len < 2:
            raise ValueError("need at least one pulse and a code of length >= 2")
        if self.code_len * self.chip_s > self.pulse_s * (1 + 1e-9):
            raise ValueError("code period code_len * chip_s exceeds the pulse length")
        if self.prf_hz > (1 + 1e-9) / self.pulse_s:
            raise ValueError("prf_hz exceeds 1/pulse_s: pulses would overlap")
        if self.fmcw_if_samples < 2 or self.fmcw_if_samples % 2:
            raise ValueError("fmcw_if_samples must be even and >= 2")
        if self.fmcw_if_samples >= self.fmcw_samples:
            raise ValueError("fmcw_if_samples must be below the pre-dechirp sample count")
        if self.window not in ("hann", "rect"):
            raise ValueError("window must be 'hann' or 'rect'")

    @classmethod
    def desk_scale(cls, **kw) -> "ScenarioConfig":
        base = dict(bandwidth_hz=15e6, chip_s=66.6e-9, code_len=450, pulses=64, fmcw_if_samples=128)
        base.update(kw)
        return cls(**base)

    @property
    def wavelength_m(self) -> float:
        return C / self.carrier_hz

    @property
    def pri_s(self) -> float:
        return 1.0 / self.prf_hz

    @property
    def chirp_rate(self) -> float:
        return self.bandwidth_hz / self.pulse_s

    @property
    def pmcw_samples(self) -> int:
        """Samples per PRI at the chip rate."""
        return int(np.floor(self.pri_s / self.chip_s + 1e-9))

    @property
    def fmcw_fs(self) -> float:
        return self.fmcw_oversample * self.bandwidth_hz

    @property
    def fmcw_samples(self) -> int:
        """Pre-dechirp samples per chirp."""
        return int(round(self.pulse_s * self.fmcw_fs))

    def range_resolution(self, waveform: str) -> float:
        if waveform == "pmcw":
            return C * self.chip_s / 2
        # range FFT bin spacing of a chirp sampled over fmcw_samples / fmcw_fs seconds
        t_obs = self.fmcw_samples / self.fmcw_fs
        return C / (2 * self.chirp_rate * t_obs)

    def velocity_axis(self) -> np.ndarray:
        f = (np.arange(self.pulses) - self.pulses // 2) * self.prf_hz / self.pulses
        return f * self.wavelength_m / 2

    def expected_cell(self, target: Target, waveform: str):
        """(range bin, Doppler bin) where the target should appear."""
        rb = int(round(target.range_m / self.range_resolution(waveform)))
        fd = 2 * target.speed_mps / self.wavelength_m
        db = (int(round(fd / self.prf_hz * self.pulses)) + self.pulses // 2) % self.pulses
        return rb, db

    def as_dict(self) -> dict:
        d = asdict(self)
        d["targets"] = [asdict(t) for t in self.targets]
        d["interferers"] = [asdict(i) for i in self.interferers]
        d["code_m_range"] = list(self.code_m_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        profile = d.pop("profile", "full")
        if profile == "desk":
            return cls.desk_scale(**d)
        if profile != "full":
            raise ValueError(f"unknown profile {profile!r}")
        return cls(**d)


def _coerce(kind, v):
    return v if isinstance(v, kind) else kind(**v)


def dbm_to_watt(dbm: float) -> float:
    return 10 ** ((dbm - 30) / 10)


def target_power(cfg: ScenarioConfig, t: Target) -> float:
    """Received echo power in watts, P G^2 lambda^2 sigma / ((4 pi)^3 R^4)."""
    g = 10 ** (cfg.antenna_gain_db / 10)
    sigma = 10 ** (t.rcs_dbsm / 10)
    return dbm_to_watt(cfg.tx_power_dbm) * g * g * cfg.wavelength_m**2 * sigma / ((4 * np.pi) ** 3 * t.range_m**4)


def interferer_power(cfg: ScenarioConfig, i: Interferer) -> float:
    """Direct-path power in watts, P G^2 lambda^2 / ((4 pi)^2 R^2)."""
    g = 10 ** (cfg.antenna_gain_db / 10)
    p = cfg.tx_power_dbm if i.tx_power_dbm is None else i.tx_power_dbm
    return dbm_to_watt(p) * g * g * cfg.wavelength_m**2 / ((4 * np.pi) ** 2 * i.range_m**2)


def noise_power(cfg: ScenarioConfig, fs: float) -> float:
    return BOLTZMANN * cfg.temperature_k * 10 ** (cfg.noise_figure_db / 10) * fs


def _rng(seed: int, label: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), index] + [ord(c) for c in label]))


# --- waveforms evaluated at absolute time ------------------------------------


def pmcw_at(t: np.ndarray, code: np.ndarray, chip_s: float, pri_s: float) -> np.ndarray:
    """Periodic PMCW transmit signal: code chips, then silence until the next PRI."""
    u = np.mod(t, pri_s)
    idx = np.floor(u / chip_s + 1e-9).astype(np.int64)
    on = (idx >= 0) & (idx < code.size)
    out = np.zeros(t.shape, dtype=complex)
    out[on] = code[idx[on]]
    return out


def chirp_phase(u: np.ndarray, bandwidth_hz: float, pulse_s: float, f_start: float = 0.0) -> np.ndarray:
    """phi(u) = 2 pi (f_start u + B u^2 / (2T)); the instantaneous frequency reaches f_start + B at u = T."""
    return 2 * np.pi * (f_start * u + 0.5 * bandwidth_hz / pulse_s * u**2)


def fmcw_at(t: np.ndarray, bandwidth_hz: float, pulse_s: float, pri_s: float, f_start: float) -> np.ndarray:
    """Periodic chirp train: one ramp of length pulse_s per PRI."""
    u = np.mod(t, pri_s)
    on = u < pulse_s
    out = np.zeros(t.shape, dtype=complex)
    out[on] = np.exp(1j * chirp_phase(u[on], bandwidth_hz, pulse_s, f_start))
    return out


def instantaneous_frequency(bandwidth_hz: float, pulse_s: float, u, f_start: float = 0.0):
    return f_start + bandwidth_hz / pulse_s * np.asarray(u)


@dataclass(frozen=True, eq=False)
class Frame:
    """Received samples for one coherent processing interval (pulses x fast time)."""

    waveform: str
    samples: np.ndarray
    fs: float
    t_fast: np.ndarray
    reference: np.ndarray
    metadata: dict = field(default_factory=dict)


def _slow_times(cfg: ScenarioConfig) -> np.ndarray:
    return np.arange(cfg.pulses) * cfg.pri_s


def synth_pmcw(cfg: ScenarioConfig, code) -> Frame:
    """Transmit frame: chips of duration chip_s, one code period per pulse, zero-filled."""
    s = code.samples if isinstance(code, UnimodularSequence) else np.asarray(code, dtype=complex)
    if s.size != cfg.code_len:
        raise ValueError(f"code length {s.size} does not match code_len {cfg.code_len}")
    # mid-chip sampling: an echo delayed by d chips peaks at lag round(d)
    t_fast = (np.arange(cfg.pmcw_samples) + 0.5) * cfg.chip_s
    t = _slow_times(cfg)[:, None] + t_fast[None, :]
    frame = pmcw_at(t, s, cfg.chip_s, cfg.pri_s)
    return Frame("pmcw", frame, 1 / cfg.chip_s, t_fast, s.copy())


def synth_fmcw(cfg: ScenarioConfig, f_start: Optional[float] = None) -> Frame:
    """Transmit frame of chirps sampled at fmcw_oversample x bandwidth.

    The ramp starts at f_start (default -B/2 so the sweep is centred on the
    carrier) and rises by B over pulse_s.
    """
    f0 = -cfg.bandwidth_hz / 2 if f_start is None else f_start
    t_fast = np.arange(cfg.fmcw_samples) / cfg.fmcw_fs
    ref = np.exp(1j * chirp_phase(t_fast, cfg.bandwidth_hz, cfg.pulse_s, f0))
    t = _slow_times(cfg)[:, None] + t_fast[None, :]
    frame = fmcw_at(t, cfg.bandwidth_hz, cfg.pulse_s, cfg.pri_s, f0)
    return Frame("fmcw", frame, cfg.fmcw_fs, t_fast, ref, {"f_start": f0})


def design_code(cfg: ScenarioConfig, seed: int) -> UnimodularSequence:
    """Polynomial-phase code of length code_len with random sub-sequence lengths."""
    from .designers import DesignConfig, run_design
    from .mm_engine import StoppingRule

    dc = DesignConfig(
        n=cfg.code_len,
        q=cfg.code_q,
        p=cfg.code_p,
        m_range=cfg.code_m_range,
        seed=seed,
        init_scale=np.pi * cfg.code_m_range[1],
        stopping=StoppingRule(max_iters=cfg.code_iters),
    )
    return run_design(dc).x_final


def simulate(
    cfg: ScenarioConfig,
    waveform: str = "pmcw",
    victim_code=None,
    interferer_codes: Optional[Sequence] = None,
) -> Frame:
    """Received frame at the victim: target echoes, interference and thermal noise.

    PMCW codes default to designs seeded from cfg.seed (victim) and from the
    interferer index, so adding interferers to a list keeps the earlier ones
    unchanged.
    """
    if waveform not in ("pmcw", "fmcw"):
        raise ValueError("waveform must be 'pmcw' or 'fmcw'")
    lam = cfg.wavelength_m
    pri = cfg.pri_s
    if waveform == "pmcw":
        if victim_code is None:
            victim_code = design_code(cfg, int(_rng(cfg.seed, "victim-code").integers(2**32)))
        tx = synth_pmcw(cfg, victim_code)
        code = tx.reference

        def victim_tx(t):
            return pmcw_at(t, code, cfg.chip_s, pri)

        max_range = (cfg.pmcw_samples - cfg.code_len) * cfg.chip_s * C / 2
    else:
        tx = synth_fmcw(cfg)
        f0 = tx.metadata["f_start"]

        def victim_tx(t):
            return fmcw_at(t, cfg.bandwidth_hz, cfg.pulse_s, pri, f0)

        max_range = cfg.fmcw_if_samples / 2 * cfg.range_resolution("fmcw")

    slow = _slow_times(cfg)
    t = slow[:, None] + tx.t_fast[None, :]
    rx = np.zeros(t.shape, dtype=complex)
    for tgt in cfg.targets:
        if tgt.range_m >= max_range:
            warnings.warn(f"target at {tgt.range_m} m is beyond the unambiguous range {max_range:.1f} m")
        tau = 2 * tgt.range_m / C
        fd = 2 * tgt.speed_mps / lam
        amp = np.sqrt(target_power(cfg, tgt))
        doppler_t = t if cfg.intra_pulse_doppler else np.broadcast_to(slow[:, None], t.shape)
        rx += amp * victim_tx(t - tau) * np.exp(2j * np.pi * (fd * doppler_t - cfg.carrier_hz * tau))

    codes = list(interferer_codes) if interferer_codes is not None else []
    offsets = []
    for i, itf in enumerate(cfg.interferers):
        rng = _rng(cfg.seed, "interferer", i)
        offset = rng.uniform(0, pri) if itf.time_offset_s is None else itf.time_offset_s
        phase0 = rng.uniform(0, 2 * np.pi)
        code_seed = int(rng.integers(2**32))
        offsets.append(float(offset))
        tau = itf.range_m / C
        fd = itf.speed_mps / lam
        amp = np.sqrt(interferer_power(cfg, itf))
        tt = t - tau - offset
        pri_i = pri if itf.prf_hz is None else 1.0 / itf.prf_hz
        if pri_i < cfg.pulse_s:
            raise ValueError("interferer PRI is shorter than the pulse")
        if itf.waveform == "pmcw":
            if i < len(codes) and codes[i] is not None:
                c = codes[i]
                c = c.samples if isinstance(c, UnimodularSequence) else np.asarray(c, dtype=complex)
            else:
                c = design_code(cfg, code_seed).samples
            sig = pmcw_at(tt, c, cfg.chip_s, pri_i)
        else:
            bw = cfg.bandwidth_hz if itf.bandwidth_hz is None else itf.bandwidth_hz
            sig = fmcw_at(tt, bw, cfg.pulse_s, pri_i, -cfg.bandwidth_hz / 2)
        rx += amp * sig * np.exp(1j * (2 * np.pi * fd * t + phase0))

    if cfg.include_noise:
        rng = _rng(cfg.seed, "noise")
        sigma = np.sqrt(noise_power(cfg, tx.fs) / 2)
        rx += sigma * (rng.standard_normal(t.shape) + 1j * rng.standard_normal(t.shape))
    meta = {"interferer_offsets_s": offsets, "max_range_m": max_range}
    if waveform == "fmcw":
        meta["f_start"] = tx.metadata["f_start"]
    return Frame(waveform, rx, tx.fs, tx.t_fast, tx.reference, meta)


# --- processing --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RangeDopplerMap:
    """Power in dBm on a range x Doppler grid."""

    power_db: np.ndarray
    range_m: np.ndarray
    velocity_mps: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.power_db.shape != (self.range_m.size, self.velocity_mps.size):
            raise ValueError("axes do not match the map shape")

    @property
    def linear(self) -> np.ndarray:
        return 10 ** (self.power_db / 10)

    def peak_cell(self):
        i = int(np.argmax(self.power_db))
        return divmod(i, self.power_db.shape[1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["range_m", "velocity_mps", "power_db"])
        for i, r in enumerate(self.range_m):
            for j, v in enumerate(self.velocity_mps):
                w.writerow([repr(float(r)), repr(float(v)), repr(float(self.power_db[i, j]))])
        return buf.getvalue()


def _window(kind: str, n: int) -> np.ndarray:
    """Window normalized to unit coherent gain so a tone keeps its peak value."""
    w = np.hanning(n + 2)[1:-1] if kind == "hann" else np.ones(n)
    return w / w.mean()


def _doppler_map(profiles: np.ndarray, cfg: ScenarioConfig, range_axis: np.ndarray, meta: dict) -> RangeDopplerMap:
    """Slow-time FFT of (pulses x range) profiles, returned as range x Doppler."""
    w = _window(cfg.window, cfg.pulses)
    spec = np.fft.fftshift(np.fft.fft(profiles * w[:, None], axis=0), axes=0)
    power = np.abs(spec.T) ** 2
    with np.errstate(divide="ignore"):
        db = 10 * np.log10(power / 1e-3)
    db = np.maximum(db, -400.0)
    return RangeDopplerMap(db, range_axis, cfg.velocity_axis(), meta)


def process_pmcw(frame: Frame, cfg: ScenarioConfig, code) -> RangeDopplerMap:
    """Per-pulse correlation with the victim code, then a Doppler FFT.

    Range bin k is the lag of k chips; lags run while the full code still
    fits inside the PRI window.
    """
    s = code.samples if isinstance(code, UnimodularSequence) else np.asarray(code, dtype=complex)
    rx = frame.samples
    n = rx.shape[1]
    n_lags = n - s.size + 1
    size = int(2 ** np.ceil(np.log2(n + s.size)))
    spec = np.fft.fft(rx, size, axis=1) * np.conj(np.fft.fft(s, size))[None, :]
    prof = np.fft.ifft(spec, axis=1)[:, :n_lags]
    rng_axis = np.arange(n_lags) * cfg.range_resolution("pmcw")
    return _doppler_map(prof, cfg, rng_axis, {"waveform": "pmcw", "window": cfg.window})


def process_fmcw(frame: Frame, cfg: ScenarioConfig) -> RangeDopplerMap:
    """De-chirp, low-pass and decimate to fmcw_if_samples, then range and Doppler FFTs.

    The low-pass filter keeps the fmcw_if_samples lowest-frequency FFT bins
    of each de-chirped pulse; the inverse transform of those bins is the
    decimated IF signal. Ranges map to negative beat frequencies, so the
    range transform uses the conjugate kernel.
    """
    n_rf = frame.samples.shape[1]
    n_if = cfg.fmcw_if_samples
    beat = frame.samples * np.conj(frame.reference)[None, :]
    spec = np.fft.fft(beat, axis=1)
    keep = np.concatenate([spec[:, : n_if // 2], spec[:, n_rf - n_if // 2 :]], axis=1)
    if_sig = np.fft.ifft(keep, axis=1) * (n_if / n_rf)
    w = _window(cfg.window, n_if)
    prof = np.fft.ifft(if_sig * w[None, :], axis=1)[:, : n_if // 2]
    rng_axis = np.arange(n_if // 2) * cfg.range_resolution("fmcw")
    return _doppler_map(prof, cfg, rng_axis, {"waveform": "fmcw", "window": cfg.window})


def _guard_mask(shape, cell, guard):
    gr, gd = (guard, guard) if np.isscalar(guard) else guard
    r, d = cell
    if not (0 <= r < shape[0] and 0 <= d < shape[1]):
        raise ValueError(f"cell {cell} outside map of shape {shape}")
    mask = np.zeros(shape, dtype=bool)
    mask[max(0, r - gr) : r + gr + 1, max(0, d - gd) : d + gd + 1] = True
    return mask


def estimate_sinr(rd: RangeDopplerMap, true_cell, guard=2) -> float:
    """Peak power inside the guard window over mean power outside it, in dB."""
    lin = rd.linear
    mask = _guard_mask(lin.shape, true_cell, guard)
    return float(10 * np.log10(lin[mask].max() / lin[~mask].mean()))


def ghost_excess_db(rd: RangeDopplerMap, true_cell, guard=2) -> float:
    """How far the most range-localized peak off the target exceeds noise statistics.

    The Doppler columns within ``guard`` of the target are skipped, since
    they carry the target's own range sidelobes. For every other column the
    ratio of its maximum to its mean over range is formed; the largest ratio
    is compared with the expected maximum of as many unit-mean exponential
    power samples as there are tested cells, ln(cells) + Euler's gamma. Positive values mean a concentrated ghost;
    noise and interference spread over range stay near or below zero.
    """
    lin = rd.linear
    gd = guard if np.isscalar(guard) else guard[1]
    _guard_mask(lin.shape, true_cell, guard)
    cols = np.abs(np.arange(lin.shape[1]) - true_cell[1]) > gd
    if not cols.any():
        raise ValueError("guard covers every Doppler column")
    sub = lin[:, cols]
    ratio = sub.max(axis=0) / sub.mean(axis=0)
    return float(10 * np.log10(ratio.max()) - 10 * np.log10(np.log(sub.size) + EULER_GAMMA))


# --- time-frequency ----------------------------------------------------------


def spectrogram(waveform, window: int, hop: int, fs: float = 1.0):
    """STFT magnitude with a Hann window.

    Returns:
        (freqs, times, magnitude) where magnitude is frequency x time and
        frequencies are centred (fftshift) for complex input.
    """
    x = np.asarray(waveform.samples if isinstance(waveform, UnimodularSequence) else waveform, dtype=complex)
    if window > x.size:
        raise ValueError("window longer than the signal")
    if window < 2 or hop < 1:
        raise ValueError("window must be >= 2 and hop >= 1")
    frames = np.lib.stride_tricks.sliding_window_view(x, window)[::hop]
    spec = np.fft.fftshift(np.fft.fft(frames * np.hanning(window)[None, :], axis=1), axes=1)
    freqs = np.fft.fftshift(np.fft.fftfreq(window, 1 / fs))
    times = (np.arange(frames.shape[0]) * hop + window / 2) / fs
    return freqs, times, np.abs(spec).T


def detect_ramps(waveform, tol: float = 1e-6, min_votes: int = 2):
    """Find linear-frequency segments by voting on the per-sample chirp rate.

    The chirp rate at sample n is the wrapped second difference of the phase
    divided by 2 pi (cycles per sample squared). Maximal runs of at least
    min_votes equal rates (within tol) form segments, and segment rates are
    clustered into distinct slopes.

    Returns:
        (segments, slopes) with segments as (start, stop, rate) tuples and
        slopes as the sorted distinct rates.
    """
    x = np.asarray(waveform.samples if isinstance(waveform, UnimodularSequence) else waveform, dtype=complex)
    ph = np.angle(x)
    d2 = np.diff(ph, n=2)
    rate = (np.mod(d2 + np.pi, 2 * np.pi) - np.pi) / (2 * np.pi)
    segments = []
    start = 0
    for i in range(1, rate.size + 1):
        if i == rate.size or abs(rate[i] - rate[start]) > tol:
            if i - start >= min_votes:
                segments.append((start, i + 2, float(np.mean(rate[start:i]))))
            start = i
    slopes = []
    for _, _, r in sorted(segments, key=lambda s: s[2]):
        if not slopes or abs(r - slopes[-1]) > tol:
            slopes.append(r)
    return segments, slopes


def with_interferers(cfg: ScenarioConfig, interferers) -> ScenarioConfig:
    return replace(cfg, interferers=tuple(interferers))
