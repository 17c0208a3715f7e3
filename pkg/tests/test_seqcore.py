import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pecs.seqcore import (
    Partition,
    PhasePolynomials,
    UnimodularSequence,
    concat,
    constraint_residual,
    fit_phase_polynomial,
    load_sequence,
    polynomial_phase,
    random_unimodular,
    scaled_basis,
    sequence_from_dict,
    sequence_to_dict,
    synthesize,
    unwrap_phase,
    witness_residual,
    wrap_to_pi,
)


def test_sequence_is_unimodular_and_read_only():
    x = UnimodularSequence([0.0, 1.0, 2.5])
    assert np.allclose(np.abs(x.samples), 1.0)
    with pytest.raises(ValueError):
        x.phases[0] = 1.0
    assert x.n == len(x) == 3


def test_sequence_rejects_bad_input():
    with pytest.raises(ValueError):
        UnimodularSequence([0.0, np.nan])
    with pytest.raises(ValueError):
        UnimodularSequence([[0.0, 1.0]])


def test_from_complex_round_trip():
    z = np.exp(1j * np.array([0.3, -2.0, 3.0]))
    assert np.allclose(UnimodularSequence.from_complex(z).samples, z)


def test_equality_and_hash():
    a = UnimodularSequence([0.0, 1.0])
    b = UnimodularSequence([0.0, 1.0])
    assert a == b and hash(a) == hash(b)
    assert a != UnimodularSequence([0.0, 1.5])


def test_uniform_partition_keeps_remainder():
    assert list(Partition.uniform(10, 3).lengths) == [3, 3, 3, 1]
    assert list(Partition.uniform(10, 5).lengths) == [5, 5]
    assert list(Partition.uniform(7, 7).offsets) == [0]


def test_partition_rejects_zero_length():
    with pytest.raises(ValueError):
        Partition([3, 0, 2])


@given(st.integers(2, 400), st.integers(1, 10), st.integers(0, 10), st.integers(0, 2**31))
def test_random_partition_bounds(n, lo, extra, seed):
    hi = lo + extra
    part = Partition.random(n, lo, hi, np.random.default_rng(seed))
    assert part.n == n
    # only the final block may be shorter than m_min
    assert np.all(part.lengths[:-1] >= lo) and np.all(part.lengths <= hi)


def test_slices_cover_sequence():
    part = Partition([2, 3, 4])
    idx = np.concatenate([np.arange(9)[s] for s in part.slices()])
    assert np.array_equal(idx, np.arange(9))


def test_polynomial_phase_matches_definition():
    # a0 + a1 m + a2 m^2 at m = 1..4
    got = polynomial_phase([0.5, -1.0, 0.25], 4)
    m = np.arange(1, 5)
    assert np.allclose(got, 0.5 - m + 0.25 * m**2)


@given(
    st.lists(st.integers(3, 30), min_size=1, max_size=6),
    st.integers(0, 2),
    st.integers(0, 2**31),
)
def test_fit_recovers_synthesized_coefficients(lengths, q, seed):
    rng = np.random.default_rng(seed)
    part = Partition(lengths)
    z = rng.uniform(-2, 2, (part.count, q + 1))
    # keep coefficients well conditioned on each block's raw monomials
    coeffs = z / np.asarray(lengths, dtype=float)[:, None] ** np.arange(q + 1)
    polys = PhasePolynomials(coeffs)
    x = synthesize(part, polys)
    for l, sl in enumerate(part.slices()):
        if part.lengths[l] < q + 1:
            continue
        ph = polynomial_phase(coeffs[l], int(part.lengths[l]))
        fit, resid = fit_phase_polynomial(ph, q)
        assert resid < 1e-9
        assert np.allclose(polynomial_phase(fit, int(part.lengths[l])), ph, atol=1e-9)
    assert constraint_residual(x, part, q) < 1e-9
    assert witness_residual(x, part, polys) < 1e-9


def test_fit_needs_enough_samples():
    with pytest.raises(ValueError):
        fit_phase_polynomial([0.0, 1.0], 2)


def test_constraint_residual_flags_random_phases():
    x = random_unimodular(60, 4)
    assert constraint_residual(x, Partition.uniform(60, 10), 2) > 0.1


def test_constraint_residual_ignores_short_blocks():
    x = random_unimodular(6, 1)
    assert constraint_residual(x, Partition([3, 3]), 2) == 0.0


def test_synthesize_checks_rows():
    with pytest.raises(ValueError):
        synthesize(Partition([2, 2]), PhasePolynomials(np.zeros((3, 2))))


@given(st.floats(-1e3, 1e3, allow_nan=False))
def test_wrap_to_pi_range(a):
    w = float(wrap_to_pi(a))
    assert -np.pi < w <= np.pi + 1e-12
    assert np.isclose(np.exp(1j * w), np.exp(1j * a), atol=1e-9)


def test_unwrap_phase_of_slow_ramp():
    ph = 0.4 * np.arange(50)
    assert np.allclose(unwrap_phase(UnimodularSequence(ph)), ph)


def test_scaled_basis_last_row_is_ones():
    b = scaled_basis(7, 3)
    assert b.shape == (7, 4)
    assert np.allclose(b[-1], 1.0)


def test_random_unimodular_is_seeded():
    assert random_unimodular(20, 5) == random_unimodular(20, 5)
    assert random_unimodular(20, 5) != random_unimodular(20, 6)
    with pytest.raises(ValueError):
        random_unimodular(1, 0)


def test_dict_round_trip(tmp_path):
    part = Partition([3, 4])
    polys = PhasePolynomials([[0.1, 0.2], [0.3, -0.1]])
    x = synthesize(part, polys)
    d = sequence_to_dict(x, part, polys, seed=9)
    assert set(d) == {"n", "phases_rad", "partition", "poly_coeffs", "seed"}
    x2, part2, polys2, seed = sequence_from_dict(json.loads(json.dumps(d)))
    assert x2 == x and part2 == part and polys2 == polys and seed == 9
    path = tmp_path / "wrapped.json"
    path.write_text(json.dumps({"meta": {}, "sequence": d}))
    assert load_sequence(path) == x


def test_dict_validation():
    with pytest.raises(ValueError):
        sequence_from_dict({"n": 3, "phases_rad": [0.0, 1.0]})
    with pytest.raises(ValueError):
        sequence_from_dict({"phases_rad": [0.0]})
    with pytest.raises(ValueError):
        sequence_from_dict({"n": 2, "phases_rad": [0.0, 1.0], "partition": [1, 2]})


def test_concat():
    a, b = UnimodularSequence([0.0, 0.5]), UnimodularSequence([1.0, 2.0])
    assert np.array_equal(concat([a, b]).phases, [0.0, 0.5, 1.0, 2.0])
