import math
from dataclasses import replace

import numpy as np
import pytest

from pecs.designers import DesignConfig, run_design
from pecs.mm_engine import StoppingRule
from pecs.scenario import (
    BOLTZMANN,
    C,
    Interferer,
    RangeDopplerMap,
    ScenarioConfig,
    Target,
    chirp_phase,
    design_code,
    detect_ramps,
    estimate_sinr,
    ghost_excess_db,
    instantaneous_frequency,
    interferer_power,
    noise_power,
    process_fmcw,
    process_pmcw,
    simulate,
    spectrogram,
    synth_fmcw,
    synth_pmcw,
    target_power,
)
from pecs.seqcore import random_unimodular

TARGET = Target(30.0, 20 / 3.6, 10.0)


def desk(**kw):
    return ScenarioConfig.desk_scale(targets=(TARGET,), seed=1, **kw)


def pmcw_map(cfg, code=None):
    frame = simulate(cfg, "pmcw", victim_code=code)
    return process_pmcw(frame, cfg, frame.reference)


def test_full_scale_timing_values():
    cfg = ScenarioConfig()
    # chip rate 1/6.66 ns is about the 150 MHz victim bandwidth
    assert 1 / cfg.chip_s == pytest.approx(cfg.bandwidth_hz, rel=0.002)
    assert cfg.code_len * cfg.chip_s == pytest.approx(29.97e-6)
    assert cfg.code_len * cfg.chip_s <= cfg.pulse_s


@pytest.mark.parametrize(
    "kw",
    [dict(code_len=10000), dict(prf_hz=20e3), dict(window="kaiser"), dict(fmcw_if_samples=7), dict(pulses=0)],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ScenarioConfig(**kw)


def test_interferer_validation():
    with pytest.raises(ValueError):
        Interferer(50.0, waveform="am")
    with pytest.raises(ValueError):
        Interferer(-1.0)


def test_config_round_trip():
    cfg = desk(interferers=(Interferer(50.0, 11.1, "fmcw", 7.5e6),))
    d = cfg.as_dict()
    assert ScenarioConfig.from_dict(d) == cfg
    assert ScenarioConfig.from_dict({"profile": "desk", "targets": [{"range_m": 30.0}]}).code_len == 450


def test_chirp_instantaneous_frequency_at_t_equals_b():
    cfg = ScenarioConfig()
    assert instantaneous_frequency(cfg.bandwidth_hz, cfg.pulse_s, cfg.pulse_s) == pytest.approx(cfg.bandwidth_hz)
    u = np.array([0.0, 1e-9])
    dphi = np.diff(chirp_phase(u, cfg.bandwidth_hz, cfg.pulse_s))[0]
    assert dphi == pytest.approx(np.pi * cfg.chirp_rate * 1e-18)


def test_chirp_autocorrelation_peak_is_sample_count():
    frame = synth_fmcw(desk())
    ref = frame.reference
    assert np.vdot(ref, ref).real == pytest.approx(ref.size)


def test_pmcw_zero_delay_matched_filter_peak_is_code_len():
    cfg = desk()
    code = random_unimodular(cfg.code_len, 0)
    tx = synth_pmcw(cfg, code)
    peak = np.abs(np.vdot(code.samples, tx.samples[0, : cfg.code_len]))
    assert peak == pytest.approx(cfg.code_len)
    # transmit idle after the code period
    assert np.all(tx.samples[0, cfg.code_len :] == 0)
    with pytest.raises(ValueError):
        synth_pmcw(cfg, random_unimodular(10, 0))


def test_fmcw_target_at_30_m_lands_in_range_bin_30():
    cfg = ScenarioConfig(targets=(Target(30.0, 0.0, 10.0),), pulses=8, include_noise=False)
    rd = process_fmcw(simulate(cfg, "fmcw"), cfg)
    # beat frequency 2RB/(cT) times the chirp time gives bin 2RB/c
    expected = round(2 * 30.0 * cfg.bandwidth_hz / C)
    assert expected == 30
    assert rd.peak_cell()[0] == expected
    assert rd.range_m[30] == pytest.approx(30.0, abs=0.1)


def test_clean_targets_detected_at_true_cell():
    cfg = desk()
    for waveform in ("pmcw", "fmcw"):
        frame = simulate(cfg, waveform)
        rd = process_pmcw(frame, cfg, frame.reference) if waveform == "pmcw" else process_fmcw(frame, cfg)
        assert rd.peak_cell() == cfg.expected_cell(TARGET, waveform)
        assert np.all(np.isfinite(rd.power_db))


def test_echo_power_follows_fourth_power_law():
    code = random_unimodular(450, 1)
    peaks = []
    for r in (30.0, 60.0):
        cfg = replace(desk(include_noise=False), targets=(Target(r, 0.0, 10.0),))
        peaks.append(pmcw_map(cfg, code).power_db.max())
    assert peaks[0] - peaks[1] == pytest.approx(40 * math.log10(2), abs=0.2)


def test_interferer_direct_path_dominates_echo():
    cfg = ScenarioConfig()
    lam = C / cfg.carrier_hz
    p_t = 10 ** ((cfg.tx_power_dbm - 30) / 10)
    g = 10.0
    echo = p_t * g * g * lam**2 * 10.0 / ((4 * np.pi) ** 3 * 30.0**4)
    direct = p_t * g * g * lam**2 / ((4 * np.pi) ** 2 * 50.0**2)
    assert target_power(cfg, TARGET) == pytest.approx(echo)
    assert interferer_power(cfg, Interferer(50.0)) == pytest.approx(direct)
    assert 10 * np.log10(direct / echo) == pytest.approx(26.1, abs=0.1)


def test_noise_power_is_ktf_b():
    cfg = ScenarioConfig(noise_figure_db=0.0, temperature_k=290.0)
    assert noise_power(cfg, 1e6) == pytest.approx(BOLTZMANN * 290.0 * 1e6)


def test_pmcw_processing_gain_is_code_len_times_pulses():
    cfg = desk(window="rect")
    code = random_unimodular(cfg.code_len, 3)
    sig = pmcw_map(replace(cfg, include_noise=False), code).linear.max()
    noise = pmcw_map(replace(cfg, targets=()), code).linear.mean()
    snr_in = target_power(cfg, TARGET) / noise_power(cfg, 1 / cfg.chip_s)
    gain_db = 10 * np.log10(sig / noise / snr_in)
    assert gain_db == pytest.approx(10 * np.log10(cfg.code_len * cfg.pulses), abs=1.0)


def test_scenario_is_deterministic():
    cfg = desk(interferers=(Interferer(50.0, 11.1, "pmcw"),))
    a, b = pmcw_map(cfg), pmcw_map(cfg)
    assert np.array_equal(a.power_db, b.power_db)


def test_processing_gain_scales_between_profiles():
    full = desk()
    half = replace(full, code_len=225, pulses=32)
    s_full = estimate_sinr(pmcw_map(full), full.expected_cell(TARGET, "pmcw"))
    s_half = estimate_sinr(pmcw_map(half), half.expected_cell(TARGET, "pmcw"))
    assert s_full - s_half == pytest.approx(10 * np.log10(4), abs=1.5)


def _map(power, cols=16):
    return RangeDopplerMap(10 * np.log10(power), np.arange(power.shape[0]) * 1.0, np.arange(cols) * 1.0)


def test_sinr_of_pure_noise_is_near_zero():
    rng = np.random.default_rng(0)
    vals = [estimate_sinr(_map(rng.exponential(size=(64, 16))), (30, 8), guard=0) for _ in range(2000)]
    # a single exponential cell over the mean has median ln 2
    assert np.median(vals) == pytest.approx(10 * np.log10(np.log(2)), abs=0.5)
    assert np.median(vals) == pytest.approx(0.0, abs=2.0)


def test_sinr_of_injected_tone():
    rng = np.random.default_rng(1)
    power = rng.exponential(size=(64, 16))
    power[20, 5] = 100.0 * power.mean()
    assert estimate_sinr(_map(power), (20, 5), guard=1) == pytest.approx(20.0, abs=1.0)
    flat = np.ones((10, 16))
    flat[3, 3] = 100.0
    assert estimate_sinr(_map(flat), (3, 3), guard=0) == pytest.approx(20.0)


def test_sinr_rejects_cell_outside_map():
    with pytest.raises(ValueError):
        estimate_sinr(_map(np.ones((8, 16))), (8, 0))


def test_map_axes_must_match():
    with pytest.raises(ValueError):
        RangeDopplerMap(np.zeros((3, 4)), np.arange(3), np.arange(5))


def test_map_csv_columns():
    text = _map(np.ones((2, 16))).to_csv()
    assert text.splitlines()[0] == "range_m,velocity_mps,power_db"
    assert len(text.splitlines()) == 1 + 32


def test_pmcw_interference_is_not_a_ghost():
    cfg = desk(interferers=(Interferer(50.0, 40 / 3.6, "pmcw", prf_hz=16.66e3 * 0.999),))
    rd = pmcw_map(cfg)
    cell = cfg.expected_cell(TARGET, "pmcw")
    assert ghost_excess_db(rd, cell) <= 3.0
    assert rd.peak_cell() == cell


def test_ghost_metric_flags_a_planted_peak():
    rng = np.random.default_rng(2)
    power = rng.exponential(size=(64, 16))
    power[10, 12] = 500.0
    assert ghost_excess_db(_map(power), (40, 2)) > 3.0


def test_far_target_warns():
    cfg = replace(desk(include_noise=False), targets=(Target(5000.0),))
    with pytest.warns(UserWarning):
        simulate(cfg, "fmcw")


def test_spectrogram_of_tone_is_flat_line():
    n = np.arange(1024)
    freqs, times, mag = spectrogram(np.exp(2j * np.pi * 0.125 * n), 64, 32)
    rows = np.argmax(mag, axis=0)
    assert np.all(freqs[rows] == pytest.approx(0.125))
    assert times.size == mag.shape[1]


def test_spectrogram_of_chirp_has_slope_b_over_t():
    fs, T, B = 1.0, 2048.0, 0.4
    t = np.arange(int(T))
    x = np.exp(1j * chirp_phase(t, B, T, -B / 2))
    freqs, times, mag = spectrogram(x, 64, 16, fs)
    ridge = freqs[np.argmax(mag, axis=0)]
    slope = np.polyfit(times, ridge, 1)[0]
    assert slope == pytest.approx(B / T, rel=0.05)


def test_spectrogram_validation():
    with pytest.raises(ValueError):
        spectrogram(np.ones(10), 20, 1)


def test_pecs_code_shows_multiple_ramps():
    run = run_design(DesignConfig(n=100, m=5, q=2, p=10.0, seed=1, init_scale=1.0,
                                  stopping=StoppingRule(max_iters=200)))
    segments, slopes = detect_ramps(run.x_final)
    assert len(segments) >= 2 and len(slopes) >= 2
    # a single chirp is one segment with one slope
    t = np.arange(200)
    seg1, slopes1 = detect_ramps(np.exp(1j * chirp_phase(t, 0.2, 200.0)))
    assert len(seg1) == 1 and len(slopes1) == 1


def test_design_code_length():
    cfg = desk(code_len=120, code_iters=5)
    assert design_code(cfg, 1).n == 120
