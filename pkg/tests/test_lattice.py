import math

import numpy as np
import pytest

from conftest import ASYM, LAZY, random_walk, wv
from harness_lab.errors import (
    DegenerateSupport,
    HarnessLabError,
    MassNotOne,
    NegativeWeight,
    SpanNotOne,
)
from harness_lab.lattice import (
    LatticeDistribution,
    as_distribution,
    char_function,
    convolve,
    iter_powers,
    parse_weights,
    q_decay_supremum,
    q_kernel,
    transition_power,
    validate_weights,
)


def test_parse_weights_round_trip():
    raw = parse_weights(" -1 : 0.5 , 0:0.25, 2:0.25 ")
    assert raw == {-1: 0.5, 0: 0.25, 2: 0.25}
    with pytest.raises(HarnessLabError):
        parse_weights("0:abc")
    with pytest.raises(HarnessLabError):
        parse_weights("")


def test_validate_weights_derived_quantities():
    w = wv(ASYM)
    assert w.min_offset == -1 and w.max_offset == 2
    assert w.mean == pytest.approx(-0.5 * 1 + 0.25 * 0 + 0.25 * 2)
    ex2 = 0.5 * 1 + 0.25 * 0 + 0.25 * 4
    assert w.variance == pytest.approx(ex2 - w.mean**2)
    assert w.span == 1


def test_validate_weights_rejections():
    with pytest.raises(NegativeWeight):
        validate_weights({0: 1.5, 1: -0.5})
    with pytest.raises(MassNotOne):
        validate_weights({0: 0.5, 1: 0.6})
    with pytest.raises(DegenerateSupport):
        validate_weights({3: 1.0})
    with pytest.raises(SpanNotOne):
        validate_weights({-1: 0.5, 1: 0.5})


def test_transition_power_path_enumeration_oracle():
    # two-step law of {-1: 1/2, 0: 1/4, 2: 1/4}, enumerated by hand over
    # the nine ordered step pairs and frozen here
    expected = {-2: 0.25, -1: 0.25, 0: 0.0625, 1: 0.25, 2: 0.125, 4: 0.0625}
    p2 = transition_power(wv(ASYM), 2)
    got = {int(x): p2.pmf(int(x)) for x in range(p2.offset, p2.last + 1) if p2.pmf(int(x)) > 0}
    assert set(got) == set(expected)
    for x, mass in expected.items():
        assert got[x] == pytest.approx(mass, abs=1e-15)


def test_transition_power_chapman_kolmogorov():
    rng = np.random.default_rng(7)
    for _ in range(6):
        w = random_walk(rng)
        a, b = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        combined = transition_power(w, a + b)
        split = convolve(transition_power(w, a), transition_power(w, b))
        assert combined.offset == split.offset
        np.testing.assert_allclose(combined.masses, split.masses, atol=1e-14)


def test_transition_power_moments():
    rng = np.random.default_rng(11)
    for _ in range(6):
        w = random_walk(rng)
        k = int(rng.integers(1, 12))
        p = transition_power(w, k)
        assert p.mean() == pytest.approx(k * w.mean, abs=1e-10)
        assert p.variance() == pytest.approx(k * w.variance, rel=1e-10)


def test_q_kernel_structure():
    # symmetry exact, mean zero, variance twice the walk variance, span 1
    rng = np.random.default_rng(20)
    for _ in range(20):
        w = random_walk(rng, max_abs=4, size=int(rng.integers(2, 5)))
        q = q_kernel(w)
        table = dict(q.weights)
        for x, mass in table.items():
            assert table[-x] == mass
        assert abs(q.mean) <= 1e-12
        assert q.variance == pytest.approx(2.0 * w.variance, abs=1e-12, rel=1e-12)
        assert q.span == 1
        assert table[0] > 0


def test_char_function_basics():
    w = wv(LAZY)
    d = as_distribution(w)
    assert char_function(d, 0.0) == pytest.approx(1.0)
    for theta in (0.3, 1.1, 2.9):
        assert abs(char_function(d, theta)) <= 1.0 + 1e-15
        rotated = char_function(d, theta, centered=True)
        plain = char_function(d, theta) * np.exp(-1j * theta * d.mean())
        assert rotated == pytest.approx(plain)


def test_iter_powers_matches_transition_power():
    w = wv(ASYM)
    d = as_distribution(w)
    for k, p in enumerate(iter_powers(d, 5)):
        direct = transition_power(w, k)
        assert p.offset == direct.offset
        np.testing.assert_allclose(p.masses, direct.masses, atol=1e-15)


def test_q_decay_supremum_reported_not_assumed():
    w = wv(LAZY)
    sup, arg = q_decay_supremum(w, k_max=256)
    q = as_distribution(q_kernel(w))
    # the reported supremum must dominate every checked scale
    for k, p in enumerate(iter_powers(q, 256)):
        if k == 0:
            continue
        assert math.sqrt(k) * p.pmf(0) <= sup + 1e-15
    assert sup == pytest.approx(math.sqrt(arg) * transition_power_q(w, arg))


def transition_power_q(w, k):
    q = as_distribution(q_kernel(w))
    cur = LatticeDistribution(offset=0, masses=np.array([1.0]))
    for _ in range(k):
        cur = convolve(cur, q)
    return cur.pmf(0)


def test_lattice_distribution_accessors():
    d = LatticeDistribution(offset=-1, masses=np.array([0.5, 0.25, 0.25]))
    assert d.last == 1
    assert list(d.support) == [-1, 0, 1]
    assert d.pmf(-1) == 0.5 and d.pmf(5) == 0.0
    assert d.mean() == pytest.approx(-0.25)
