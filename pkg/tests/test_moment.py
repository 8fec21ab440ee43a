import io
import math

import pytest

from ddseries.arith import QuadChar
from ddseries.errors import DomainError, FitError, InconclusiveError
from ddseries.lfunc import l_value_hurwitz, remove_euler_factors
from ddseries.moment import (
    FIT_TOLERANCE,
    NONVANISH_HEADER,
    NonvanishRecord,
    default_character,
    e0_closed_form,
    euler_E0,
    euler_E1,
    fit_moment,
    h_function,
    moment_sum_S,
    moment_sum_split,
    nonvanish_scan,
    nonvanish_sweep,
    residue_classes,
    residue_coefficients,
    square_class_E,
    square_class_H,
    t_envelope,
    t_residual,
    t_sum,
    write_nonvanish_csv,
)
from ddseries.parameters import TruncationPolicy
from ddseries.special import ValueWithError

ZETA2 = math.pi**2 / 6


def test_default_character():
    assert default_character(1) == QuadChar.trivial()
    assert default_character(3) == QuadChar.chi_tilde(3)
    with pytest.raises(DomainError):
        default_character(9)


def test_moment_sum_small_window(policy: TruncationPolicy):
    chi = default_character(3)
    # h(d/8) > 0 for 2 < d < 10, and (d, 6) = 1 leaves d = 5, 7 on the plateau
    value = moment_sum_S(8, chi, policy)

    expected = ValueWithError.exact(0)
    for d in (5, 7):
        char = QuadChar.chi(d) * chi
        expected += remove_euler_factors(l_value_hurwitz(0.5, char), 0.5, char, 6)

    print("\n::test_moment_sum_small_window::", value, expected)
    assert abs(value.value - expected.value) <= value.abs_error + expected.abs_error + 1e-8

    assert moment_sum_S(0.5, chi, policy) == ValueWithError.exact(0)
    with pytest.raises(DomainError):
        moment_sum_S(0, chi, policy)


def test_moment_sum_split_adds_up(policy: TruncationPolicy):
    chi = default_character(3)
    whole = moment_sum_S(40, chi, policy)
    square, other = moment_sum_split(40, chi, policy)
    total = square + other
    print("\n::test_moment_sum_split_adds_up::", whole.value, square.value, other.value)
    assert abs(total.value - whole.value) < 1e-8 * max(1.0, abs(whole.value))


def test_t_sums():
    assert t_sum(0.5, 0.5) == ValueWithError.exact(0)
    with pytest.raises(DomainError):
        t_sum(0.0, 100)

    assert t_residual(1.0, 1000) <= 1
    assert t_residual(1.0, 1000, modulus=3) <= 1

    s = 1.0 + 3.0j
    twisted = t_sum(s, 1000, QuadChar.chi_tilde(3))
    assert abs(twisted.value) <= t_envelope(s, 1000, 3)


@pytest.mark.parametrize("modulus", [2, 6, 30])
@pytest.mark.parametrize("s", [0.2, 0.5 + 0.3j])
def test_t_sum_main_term(modulus: int, s: complex):
    low = [t_residual(s, Y, modulus) for Y in (1000, 2000)]
    high = [t_residual(s, Y, modulus) for Y in (10_000, 20_000)]
    print("\n::test_t_sum_main_term::", modulus, s, low, high)
    assert max(low + high) <= 1
    # the normalized residual must not grow with Y
    assert max(high) <= 2 * max(low) + 0.05


def test_euler_E0():
    for N in (1, 3, 5, 7):
        value = euler_E0(0, N, prime_cutoff=10**6)
        assert value.contains(e0_closed_form(N)), N

    assert e0_closed_form(3) / e0_closed_form(1) == pytest.approx(0.5625)

    shifted = euler_E0(0.1 + 2.0j, 5)
    assert math.isfinite(abs(shifted.value))

    with pytest.raises(DomainError):
        euler_E0(-0.3, 1)
    with pytest.raises(DomainError):
        euler_E0(0, 15)


def test_euler_E1():
    assert euler_E1(0, 15) == pytest.approx(3375 / 4608)
    assert euler_E1(0.7 - 1.0j, 2) == 1
    assert euler_E1(0, -15) == euler_E1(0, 15)

    with pytest.raises(DomainError):
        euler_E1(0, 12)
    with pytest.raises(DomainError):
        euler_E1(0, 0)


def test_h_function():
    # Only d1 = 1: H(0) = 1 - 2^{-1}
    assert h_function(0, d1_cutoff=1).value == pytest.approx(0.5)

    value = h_function(0)
    print("\n::test_h_function::", value)
    assert 1 / 3 <= value.real <= 10

    with pytest.raises(DomainError):
        h_function(-0.1)


def test_residue_classes():
    one, three = residue_classes(default_character(3))
    assert (one.ell, one.kappa, one.c0) == (1, 1, 1)
    assert (three.ell, three.kappa, three.c0) == (3, 1, 4)
    assert one.even_squares
    assert not three.even_squares


def test_residue_coefficients(policy: TruncationPolicy):
    chi = default_character(3)
    a_3, b_3 = residue_coefficients(3, policy=policy)
    assert a_3 > 0
    assert math.isfinite(b_3)

    # a_N = 2/(3ζ(2)) · 1/4 · h̃(1) Σ_classes E(0) H(0), with h̃(1) = 3/4
    H0 = square_class_H(0, 3, policy.prime_cutoff).real
    E_sum = sum(square_class_E(0, chi, cls, policy.prime_cutoff).real for cls in residue_classes(chi))
    assert a_3 == pytest.approx(2 / (3 * ZETA2) / 4 * 0.75 * H0 * E_sum, rel=1e-6)

    for N in (5, 7, 11):
        a_N, _ = residue_coefficients(N, policy=policy)
        assert 1 / 3 <= a_N / a_3 <= 3, N

    with pytest.raises(DomainError):
        residue_coefficients(9)


def test_fit_errors(policy: TruncationPolicy):
    with pytest.raises(FitError):
        fit_moment(3, [64, 128, 1024], policy)
    with pytest.raises(FitError):
        fit_moment(3, [64, 128, 128, 1024], policy)
    with pytest.raises(FitError):
        fit_moment(3, [64, 80, 100, 200], policy)


@pytest.mark.parametrize("N", [3, 5, 7, 13])
def test_fit_moment(N: int, policy: TruncationPolicy):
    report = fit_moment(N, [64, 128, 256, 512, 1024], policy)
    dev_a, dev_b = report.relative_deviation
    print("\n::test_fit_moment::", N, report.fitted_aN, report.residue_aN, dev_a, dev_b)
    assert report.N == N
    assert len(report.S_values) == 5
    assert report.fitted_aN > 0

    assert dev_a <= FIT_TOLERANCE[0]
    assert dev_b <= FIT_TOLERANCE[1]
    assert report.within_tolerance


def test_nonvanish_scan(policy: TruncationPolicy):
    record = nonvanish_scan(5, 50, policy)
    assert record.N == 5
    assert record.D_of_N == 1
    assert record.certified
    assert record.margins == ()

    for N, d_max in ((4, 10), (9, 10), (5, 0)):
        with pytest.raises(DomainError):
            nonvanish_scan(N, d_max, policy)

    strict = TruncationPolicy(certify_factor=1e30)
    with pytest.raises(InconclusiveError) as info:
        nonvanish_scan(3, 3, strict)
    assert len(info.value.margins) == 3


def test_nonvanish_record_validation():
    with pytest.raises(DomainError):
        NonvanishRecord(3, 1, ValueWithError(1e-3, 1e-2), True)
    record = NonvanishRecord(3, 1, ValueWithError(1e-3, 1e-2), False)
    assert not record.certified


def test_nonvanish_sweep(policy: TruncationPolicy):
    records = nonvanish_sweep(60, 5, policy)
    assert [r.N for r in records] == [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
    assert all(r.D_of_N == 1 for r in records)

    fh = io.StringIO()
    write_nonvanish_csv(records, fh)
    lines = fh.getvalue().splitlines()
    assert lines[0] == ",".join(NONVANISH_HEADER)
    assert len(lines) == 17
    assert lines[1].startswith("3,1,")
    assert lines[1].endswith(",1")
