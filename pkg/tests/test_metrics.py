import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pecs.metrics import (
    CorrelationProfile,
    autocorr_direct,
    autocorr_fft,
    cross_correlation,
    isl_psl_db,
    lp_norm,
    normalized_peak_xcorr,
    pslr_islr,
    sequence_metrics,
    sidelobe_metrics,
)
from pecs.seqcore import UnimodularSequence, random_unimodular

BARKER13 = np.array([1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1], dtype=complex)


@given(st.integers(2, 96), st.integers(0, 2**31))
def test_fft_matches_direct_sum(n, seed):
    x = UnimodularSequence(np.random.default_rng(seed).uniform(0, 2 * np.pi, n))
    a, b = autocorr_fft(x).lags, autocorr_direct(x).lags
    assert np.max(np.abs(a - b)) < 1e-9 * n
    assert np.isclose(a[0], n)


def test_lag_convention():
    # r_1 = x_1 conj(x_2) for a length-2 sequence
    x = UnimodularSequence([0.0, 0.7])
    assert np.isclose(autocorr_fft(x).lags[1], np.exp(-0.7j))


def test_barker13_sidelobes():
    r = autocorr_fft(BARKER13)
    m = sidelobe_metrics(r)
    assert m.psl == pytest.approx(1.0)
    assert m.isl == pytest.approx(6.0)
    assert m.isl_db == pytest.approx(10 * np.log10(6))
    assert m.psl_db == pytest.approx(0.0, abs=1e-12)
    pslr, islr, _ = pslr_islr(r)
    assert pslr == pytest.approx(20 * np.log10(1 / 13))
    assert islr == pytest.approx(20 * np.log10(6 / 13))


def test_barker3_exact_lags():
    r = autocorr_fft(np.array([1, 1, -1], dtype=complex)).lags
    assert np.allclose(r, [3, 0, -1])


def test_cross_correlation_matches_numpy():
    rng = np.random.default_rng(0)
    x = np.exp(1j * rng.uniform(0, 6, 9))
    y = np.exp(1j * rng.uniform(0, 6, 9))
    lags, c = cross_correlation(x, y)
    assert np.array_equal(lags, np.arange(-8, 9))
    # numpy's correlate(a, v)[k] = sum_n a[n+k] conj(v[n])
    assert np.allclose(c, np.conj(np.correlate(y, x, "full")))


def test_cross_correlation_pads_shorter():
    lags, c = cross_correlation(np.ones(4), np.ones(2))
    assert lags.size == 7
    assert np.isclose(c[lags == 0][0], 2.0)


def test_self_xcorr_peak_is_one():
    x = random_unimodular(50, 3)
    assert normalized_peak_xcorr(x, x) == pytest.approx(1.0)


@given(st.lists(st.floats(0, 100), min_size=1, max_size=30), st.sampled_from([2.0, 3.0, 10.0, 1000.0]))
def test_lp_norm_bounds(v, p):
    v = np.asarray(v)
    norm = lp_norm(v, p)
    assert norm >= v.max() - 1e-9
    assert norm <= v.max() * v.size ** (1 / p) + 1e-9


def test_lp_norm_p2():
    assert lp_norm(np.array([3.0, 4.0]), 2) == pytest.approx(5.0)
    assert lp_norm(np.zeros(3), 5) == 0.0


def test_metrics_reject_small_p():
    with pytest.raises(ValueError):
        sidelobe_metrics(autocorr_fft(BARKER13), 1.5)


def test_pslr_edge_cases():
    with pytest.raises(ValueError):
        pslr_islr(CorrelationProfile(np.array([0.0, 1.0])))
    pslr, islr, _ = pslr_islr(CorrelationProfile(np.array([4.0, 0.0, 0.0])))
    assert pslr == -np.inf and islr == -np.inf


def test_profile_csv_and_full():
    r = autocorr_fft(np.array([1, 1, -1], dtype=complex))
    lines = r.to_csv().splitlines()
    assert lines[0] == "lag,re,im,abs,abs_db_rel_peak"
    assert len(lines) == 4
    lags, full = r.full()
    assert np.array_equal(lags, [-2, -1, 0, 1, 2])
    assert np.allclose(full, np.conj(full[::-1]))


def test_sequence_metrics_shortcuts():
    x = random_unimodular(32, 1)
    isl_db, psl_db = isl_psl_db(x)
    m = sequence_metrics(x, 2.0)
    assert m.isl_db == pytest.approx(isl_db) and m.psl_db == pytest.approx(psl_db)
    assert m.lp == pytest.approx(np.sqrt(m.isl))
