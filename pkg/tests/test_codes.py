import numpy as np
import pytest

from pecs.codes import CodeSpec, generate, reference_metrics


def periodic_sidelobe_peak(x):
    s = x.samples
    per = np.fft.ifft(np.abs(np.fft.fft(s)) ** 2)
    return np.abs(per[1:]).max()


def test_golomb_64_isl_reference_value():
    # reference ISL of the length-64 Golomb code is 22.050 dB
    assert reference_metrics(CodeSpec("golomb", m=64)).isl_db == pytest.approx(22.05, abs=0.01)


@pytest.mark.parametrize(
    "spec",
    [
        CodeSpec("frank", l=8),
        CodeSpec("frank", l=7),
        CodeSpec("p1", l=8),
        CodeSpec("p1", l=7),
        CodeSpec("p2", m=64),
        CodeSpec("p4", m=64),
        CodeSpec("p4", m=63),
        CodeSpec("zadoff", m=64, r=3, q=5),
        CodeSpec("zadoff", m=63, r=2, q=5),
        CodeSpec("chu", m=64),
        CodeSpec("chu", m=63),
        CodeSpec("golomb", m=63),
    ],
    ids=lambda s: f"{s.kind}-{s.length}",
)
def test_perfect_periodic_autocorrelation(spec):
    # independent oracle: these families have zero periodic sidelobes
    assert periodic_sidelobe_peak(generate(spec)) < 1e-9 * spec.length


def test_frank_phases_are_multiples_of_2pi_over_l():
    x = generate(CodeSpec("frank", l=4))
    steps = x.phases / (2 * np.pi / 4)
    assert np.allclose(steps, np.round(steps))
    # n-th group advances by (n-1) steps
    assert np.allclose(steps[4:8], [0, 1, 2, 3])


def test_frank_from_square_n():
    assert generate(CodeSpec("frank", n=16)).n == 16


def test_p2_half_integer_terms_exact():
    # (m-1)^2 / (2M) cycles; m = 2 gives 1/(2M)
    x = generate(CodeSpec("p2", m=5))
    assert x.phases[1] == pytest.approx(2 * np.pi / 10)


def test_px_odd_and_even_branches_differ():
    assert generate(CodeSpec("px", l=5)).n == 25
    assert generate(CodeSpec("px", l=6)).n == 36


def test_chu_is_zadoff_with_q_zero():
    assert generate(CodeSpec("chu", m=31, r=3)) == generate(CodeSpec("zadoff", m=31, r=3, q=0))


def test_all_codes_unimodular():
    for spec in (CodeSpec("p1", l=5), CodeSpec("px", l=5), CodeSpec("p2", m=25), CodeSpec("golomb", m=25, r2=2)):
        assert np.allclose(np.abs(generate(spec).samples), 1.0)


@pytest.mark.parametrize(
    "kw",
    [
        dict(kind="frank", n=10),
        dict(kind="p1"),
        dict(kind="zadoff", m=10, r=4),
        dict(kind="zadoff", m=10, r=3, q=11),
        dict(kind="chu", m=9, r=3),
        dict(kind="golomb", m=8, r2=2),
        dict(kind="barker", m=13),
        dict(kind="p4", m=1),
        dict(kind="frank", l=3, n=10),
    ],
)
def test_invalid_specs(kw):
    with pytest.raises(ValueError):
        CodeSpec(**kw)
