import math

import numpy as np
import pytest
from scipy import stats

from pdfactors.errors import CapacityError, DomainError, UsageError
from pdfactors.rng import generator
from pdfactors.semigroups import (NAMES, SemigroupElement, cumulative_weights, element_of_norm,
                                  element_spectrum, make_semigroup, nu_count_semigroup,
                                  parse_semigroup, pi_count_semigroup, sample_norms,
                                  sample_uniform_element, semigroup_mertens, spectra_of_norms)
from pdfactors.arith import mertens_sum

INSTANCES = ["integers", "two-squares", "gaussian-ideals", "doubled-primes", "ap-primes:q=4,r=1",
             "ap-primes:q=5,r=1|4"]


def _sums_of_two_squares(x):
    r = np.arange(math.isqrt(x) + 1)
    s = (r[:, None] ** 2 + r[None, :] ** 2).ravel()
    return set(int(v) for v in s if 1 <= v <= x)


def _gaussian_classes(x):
    # lattice points z != 0 with |z|^2 <= x, modulo the four units
    r = np.arange(-math.isqrt(x), math.isqrt(x) + 1)
    norms = (r[:, None] ** 2 + r[None, :] ** 2).ravel()
    counts = np.bincount(norms[(norms >= 1) & (norms <= x)], minlength=x + 1)
    assert np.all(counts % 4 == 0)
    return counts // 4


def _divisor_counts(x):
    d = np.zeros(x + 1, np.int64)
    for k in range(1, x + 1):
        d[k::k] += 1
    return d


def test_make_semigroup_thetas():
    assert [make_semigroup(n).theta for n in NAMES[:4]] == [1.0, 0.5, 1.0, 2.0]
    assert make_semigroup("ap-primes", 5, (1, 4)).theta == 0.5
    assert parse_semigroup("ap-primes:q=12,r=1|5|7").theta == 0.75
    assert parse_semigroup("ap-primes:q=5,r=1|4").label == "ap-primes:q=5,r=1|4"
    with pytest.raises(UsageError):
        make_semigroup("octonions")
    with pytest.raises(UsageError):
        make_semigroup("ap-primes", 6, (2,))
    with pytest.raises(UsageError):
        parse_semigroup("ap-primes:q=5")
    with pytest.raises(UsageError):
        parse_semigroup("integers:q=2")


def test_two_squares_counts():
    s = make_semigroup("two-squares")
    assert nu_count_semigroup(s, 10) == 7 == len(_sums_of_two_squares(10))
    assert pi_count_semigroup(s, 10) == 3
    w = s.element_weights(5000)
    assert set(np.flatnonzero(w).tolist()) == _sums_of_two_squares(5000)


def test_gaussian_counts_match_lattice_enumeration():
    s = make_semigroup("gaussian-ideals")
    assert nu_count_semigroup(s, 5) == 5
    assert s.element_weights(5)[1:].tolist() == [1, 1, 0, 1, 2]
    assert np.array_equal(s.element_weights(10**4), _gaussian_classes(10**4))
    ratio = nu_count_semigroup(s, 10**6) / (math.pi / 4 * 10**6)
    assert ratio == pytest.approx(1, abs=0.005)


def test_doubled_primes_divisor_summatory():
    s = make_semigroup("doubled-primes")
    assert nu_count_semigroup(s, 5) == 10
    assert pi_count_semigroup(s, 10) == 8
    x = 10**6
    assert np.array_equal(cumulative_weights(s, x), np.cumsum(_divisor_counts(x)))
    r5 = nu_count_semigroup(s, 10**5) / (10**5 * math.log(10**5))
    r6 = nu_count_semigroup(s, 10**6) / (10**6 * math.log(10**6))
    assert abs(r5 / r6 - 1) < 0.05


def test_integers_counts():
    s = make_semigroup("integers")
    assert nu_count_semigroup(s, 10) == 10
    assert pi_count_semigroup(s, 10) == 4


@pytest.mark.parametrize("name", INSTANCES)
def test_weights_multiplicative_and_consistent(name):
    s = parse_semigroup(name)
    x = 10**4
    w = s.element_weights(x)
    assert w[1] == 1
    for m1 in range(2, x // 2 + 1):
        for m2 in range(2, x // m1 + 1):
            if math.gcd(m1, m2) == 1:
                assert w[m1 * m2] == w[m1] * w[m2]
    # the factor-based scalar path agrees with the sieve table
    for m in range(1, 600):
        assert s.element_weight(m) == w[m]
        assert s.prime_weight(m) <= s.element_weight(m)
    norms, counts = s.prime_norms(600)
    table = np.zeros(601, np.int64)
    table[norms] = counts
    assert [s.prime_weight(m) for m in range(601)] == table.tolist()


def test_growth_two_squares_primes():
    s = make_semigroup("two-squares")
    x = 10**7
    assert pi_count_semigroup(s, x) * math.log(x) / x == pytest.approx(0.5, abs=0.05)


def test_semigroup_mertens():
    ints = make_semigroup("integers")
    total, b = semigroup_mertens(ints, 10**7)
    assert total == pytest.approx(mertens_sum(10**7))
    assert b == pytest.approx(0.2615, abs=0.005)
    doubled, _ = semigroup_mertens(make_semigroup("doubled-primes"), 10**6)
    assert doubled == pytest.approx(2 * mertens_sum(10**6), rel=1e-14)
    two = make_semigroup("two-squares")
    assert abs(semigroup_mertens(two, 10**6)[1] - semigroup_mertens(two, 10**7)[1]) < 0.02
    with pytest.raises(DomainError):
        semigroup_mertens(ints, 2)


@pytest.mark.parametrize("name", ["two-squares", "gaussian-ideals", "doubled-primes"])
def test_sampled_norm_marginal_chi_square(name):
    s = parse_semigroup(name)
    n = 10**4
    norms = sample_norms(s, n, 10**6, generator(8, 0))
    w = s.element_weights(n)
    support = np.flatnonzero(w)
    observed = np.bincount(norms, minlength=n + 1)[support]
    expected = w[support] / w.sum() * len(norms)
    assert observed.sum() == len(norms)
    assert stats.chisquare(observed, expected).pvalue > 0.001


def test_sample_uniform_element_integers():
    e = sample_uniform_element(make_semigroup("integers"), 1000, seed=3)
    assert 1 <= e.norm <= 1000
    assert math.prod(q**k for q, k in e.prime_norms) == e.norm


def test_doubled_primes_splits_of_four_are_uniform():
    s = make_semigroup("doubled-primes")
    rng = generator(1, 0)
    draws = [element_of_norm(s, 4, rng).factors for _ in range(30000)]
    freq = {d: draws.count(d) / len(draws) for d in set(draws)}
    assert set(freq) == {((2, 0, 2),), ((2, 0, 1), (2, 1, 1)), ((2, 1, 2),)}
    for p in freq.values():
        assert p == pytest.approx(1 / 3, abs=0.015)


def test_two_squares_square_prime():
    s = make_semigroup("two-squares")
    e = element_of_norm(s, 9, generator(0, 0))
    assert e.prime_norms == ((9, 1),)
    assert element_spectrum(e, 81).entries == ((0.5, 1),)
    with pytest.raises(DomainError):
        element_of_norm(s, 3, generator(0, 0))


def test_element_spectrum_unit_and_total():
    s = make_semigroup("gaussian-ideals")
    unit = SemigroupElement(s, 1, ())
    assert element_spectrum(unit, 100).entries == ()
    for i in range(300):
        e = sample_uniform_element(s, 5000, seed=4, stream=i)
        assert math.prod(q**k for q, k in e.prime_norms) == e.norm
        assert all(s.prime_weight(q) > 0 for q, _ in e.prime_norms)
        assert element_spectrum(e, 5000).total <= 1 + 1e-12
        assert element_spectrum(e, 5000).total == pytest.approx(math.log(e.norm) / math.log(5000),
                                                                abs=1e-12)


@pytest.mark.parametrize("name", INSTANCES)
def test_bulk_spectra_match_elements(name):
    s = parse_semigroup(name)
    n = 20000
    rng = generator(6, 0)
    norms = sample_norms(s, n, 400, rng)
    rows, totals = spectra_of_norms(s, norms, n)
    assert np.all(totals <= 1.0)
    for row, m in zip(rows, norms):
        e = element_of_norm(s, int(m), rng)
        expected = sorted(element_spectrum(e, n).expanded(), reverse=True)
        assert np.allclose(row[: len(expected)], expected)
        assert np.all(row[len(expected):] == 0)


def test_capacity_errors():
    with pytest.raises(CapacityError):
        sample_norms(make_semigroup("two-squares"), 10**9, 1, generator(0, 0))
    with pytest.raises(CapacityError):
        make_semigroup("gaussian-ideals").element_weights(10**9)
