import io
import math

import numpy as np
import pytest

from ddseries.arith import QuadChar, odd_squarefree_upto
from ddseries.errors import DomainError
from ddseries.parameters import TruncationPolicy
from ddseries.sieve import (
    GROWTH_HEADER,
    CoeffSeq,
    bilinear_ratio,
    double_char_sum,
    fit_growth_exponent,
    fourth_moment_ratio,
    growth_table,
    large_sieve_ratio,
    random_coefficients,
    symbol_matrix,
    write_growth_csv,
)


def test_double_char_sum_small():
    assert double_char_sum(1, 1) == 1
    expected = 1 + 2 / math.sqrt(2) + 2 / math.sqrt(3) - 2 / math.sqrt(6)
    assert abs(double_char_sum(3, 3) - expected) < 1e-14

    with pytest.raises(DomainError):
        double_char_sum(0, 3)


def test_double_char_sum_against_matrix():
    P, Q = 300, 200
    chi, chi_prime = QuadChar.chi_tilde(3), QuadChar.chi_tilde(5)
    table = symbol_matrix(P, Q).astype(np.float64)
    d = np.arange(1, P + 1)
    n = np.arange(1, Q + 1)
    weights_d = chi_prime.values(d) / np.sqrt(d)
    weights_n = chi.values(n) / np.sqrt(n)
    expected = weights_d @ table @ weights_n

    value = double_char_sum(P, Q, chi, chi_prime)
    assert value.imag == 0
    assert abs(value - expected) < 1e-10


def test_double_char_sum_thread_invariance():
    one = double_char_sum(2000, 500, threads=1)
    many = double_char_sum(2000, 500, threads=4)
    assert one == many


def test_large_sieve_single_coefficient():
    P = 100
    coeffs = CoeffSeq(np.array([1]), np.array([1.0]))
    ratio = large_sieve_ratio(P, 1, coeffs)
    assert ratio == pytest.approx(odd_squarefree_upto(P).size / (P + 1))


@pytest.mark.parametrize("P,Q", [(100, 100), (500, 500), (2000, 500), (500, 2000)])
def test_large_sieve_random(P: int, Q: int):
    rng = np.random.default_rng(P * 10_000 + Q)
    ratios = [large_sieve_ratio(P, Q, random_coefficients(Q, rng)) for _ in range(100)]
    print("\n::test_large_sieve_random::", P, Q, max(ratios))
    assert max(ratios) <= 20


def test_large_sieve_threads():
    threaded = large_sieve_ratio(500, 500, random_coefficients(500, np.random.default_rng(1)), threads=4)
    single = large_sieve_ratio(500, 500, random_coefficients(500, np.random.default_rng(1)))
    assert threaded == single


def test_large_sieve_errors():
    with pytest.raises(DomainError):
        large_sieve_ratio(10, 10, CoeffSeq(np.array([1, 3]), np.zeros(2)))
    with pytest.raises(DomainError):
        large_sieve_ratio(10, 10, CoeffSeq(np.array([1, 9]), np.ones(2)))
    with pytest.raises(DomainError):
        large_sieve_ratio(10, 5, CoeffSeq(np.array([1, 7]), np.ones(2)))
    with pytest.raises(DomainError):
        CoeffSeq(np.array([3, 1]), np.ones(2))
    with pytest.raises(DomainError):
        CoeffSeq(np.array([1, 3]), np.ones(3))


def test_bilinear_ratio(rng: np.random.Generator):
    worst = 0.0
    for _ in range(10):
        a = random_coefficients(400, rng, squarefree=False, decay=0.5)
        b = random_coefficients(300, rng, squarefree=False, decay=0.5)
        worst = max(worst, bilinear_ratio(400, 300, a, b))
    print("\n::test_bilinear_ratio::", worst)
    assert worst <= 20

    # n = 9: n0 = 1 and (1/m) = 1
    a = CoeffSeq(np.array([1, 3, 5]), np.ones(3))
    b = CoeffSeq(np.array([9]), np.ones(1))
    assert bilinear_ratio(5, 9, a, b) == pytest.approx(3 / math.sqrt(14))

    with pytest.raises(DomainError):
        bilinear_ratio(5, 9, CoeffSeq(np.array([2]), np.ones(1)), b)
    with pytest.raises(DomainError):
        bilinear_ratio(5, 5, a, b)


def test_fourth_moment(policy: TruncationPolicy):
    ratio = fourth_moment_ratio(200, QuadChar.trivial(), 0.5, policy)
    print("\n::test_fourth_moment::", ratio)
    assert 0 < ratio <= 10

    twisted = fourth_moment_ratio(200, QuadChar.chi_tilde(5), 0.5, policy)
    assert 0 < twisted <= 10

    shifted = fourth_moment_ratio(100, QuadChar.chi_tilde(3), 0.75 + 2.0j, policy)
    assert 0 < shifted <= 10

    with pytest.raises(DomainError):
        fourth_moment_ratio(200, QuadChar.trivial(), 0.4, policy)


def test_growth_table():
    rows = growth_table(range(1, 8))
    assert [r.P for r in rows] == [2**k for k in range(1, 8)]
    assert all(r.ratio == pytest.approx(abs(r.value) / math.sqrt(2 * r.P)) for r in rows)
    assert rows[0].value == pytest.approx(double_char_sum(2, 2))

    exponent = fit_growth_exponent(rows)
    print("\n::test_growth_table::", exponent)
    assert math.isfinite(exponent)

    with pytest.raises(DomainError):
        fit_growth_exponent(rows[:1])

    fh = io.StringIO()
    write_growth_csv(rows, fh)
    lines = fh.getvalue().splitlines()
    assert lines[0] == ",".join(GROWTH_HEADER)
    assert len(lines) == 1 + len(rows)
    assert lines[1].startswith("2,2,")
