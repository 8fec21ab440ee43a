import math

import numpy as np
import pytest

from ddseries.arith import Psi, QuadChar, odd_squarefree_upto
from ddseries.errors import DomainError, PoleError
from ddseries.lfunc import (
    LRecord,
    c0_table,
    certified_nonzero,
    convexity_bound_envelope,
    family_values,
    l_central_afe,
    l_value,
    l_value_euler,
    l_value_hurwitz,
    l_value_series,
    remove_euler_factors,
    total_character,
)
from ddseries.parameters import TruncationPolicy
from ddseries.special import ValueWithError

ZETA_HALF = -1.4603545088095868
ZETA_THREE = 1.2020569031595942


def test_c0_table():
    assert c0_table(5, Psi.ONE) == 1
    assert c0_table(3, Psi.ONE) == 4
    assert c0_table(5, Psi.MINUS_ONE) == 4
    assert c0_table(7, Psi.MINUS_ONE) == 1
    assert c0_table(7, Psi.TWO) == 8
    assert c0_table(1, Psi.MINUS_TWO) == 8

    # c0 is the 2-part of the conductor
    for d0 in odd_squarefree_upto(50).tolist():
        for psi in Psi:
            assert c0_table(d0, psi) * d0 == total_character(d0, QuadChar.trivial(), psi).conductor

    with pytest.raises(DomainError):
        c0_table(6, Psi.ONE)


def test_total_character():
    total = total_character(5, QuadChar.chi_tilde(3), Psi.TWO)
    assert total.conductor == 15 * 8
    with pytest.raises(DomainError):
        total_character(15, QuadChar.chi_tilde(3))


def test_lrecord_validation():
    value = ValueWithError(1.0, 1e-12)
    record = LRecord(5, QuadChar.chi_tilde(3), Psi.ONE, value)
    assert record.q == 3

    with pytest.raises(DomainError):
        LRecord(3, QuadChar.chi_tilde(3), Psi.ONE, value)
    with pytest.raises(DomainError):
        LRecord(5, QuadChar.trivial(), Psi.ONE, ValueWithError(1.0, math.inf))


def test_afe_against_hurwitz(policy: TruncationPolicy):
    afe = l_central_afe(5, QuadChar.trivial(), Psi.ONE, policy)
    ref = l_value_hurwitz(0.5, QuadChar.chi(5), policy.hurwitz_terms)
    print("\n::test_afe_against_hurwitz::", afe, ref)
    assert abs(afe.value - ref.value) <= afe.abs_error + ref.abs_error + 1e-9
    assert afe.imag == 0
    assert afe.abs_error < 1e-8


def test_afe_sweep(policy: TruncationPolicy):
    for chi in (QuadChar.trivial(), QuadChar.chi_tilde(3)):
        for d0 in odd_squarefree_upto(60, coprime_to=chi.odd_conductor).tolist():
            for psi in Psi:
                afe = l_central_afe(d0, chi, psi, policy)
                ref = l_value_hurwitz(0.5, total_character(d0, chi, psi), policy.hurwitz_terms)
                assert abs(afe.value - ref.value) <= afe.abs_error + ref.abs_error + 1e-9, (d0, chi, psi)


def test_afe_trivial_character(policy: TruncationPolicy):
    value = l_central_afe(1, QuadChar.trivial(), Psi.ONE, policy)
    assert abs(value.value - ZETA_HALF) < 1e-8

    with pytest.raises(DomainError):
        l_central_afe(4, QuadChar.trivial(), Psi.ONE, policy)


def test_afe_quadrature_weight():
    policy = TruncationPolicy(weight_method="quadrature", tolerance=1e-9)
    a = l_central_afe(13, QuadChar.trivial(), Psi.MINUS_ONE, policy)
    b = l_central_afe(13, QuadChar.trivial(), Psi.MINUS_ONE)
    assert abs(a.value - b.value) < 1e-7


def test_hurwitz_values():
    assert abs(l_value_hurwitz(3, QuadChar.trivial()).value - ZETA_THREE) < 1e-12
    # L(1, χ_{-4}) = π/4
    chi4 = QuadChar(1, Psi.MINUS_ONE, True)
    assert abs(l_value_hurwitz(1, chi4).value - math.pi / 4) < 1e-12
    # L(0, χ_{-3}) = 1/3
    assert abs(l_value_hurwitz(0, QuadChar.chi_tilde(3)).value - 1 / 3) < 1e-12

    with pytest.raises(PoleError):
        l_value_hurwitz(1, QuadChar.trivial())


def test_remove_euler_factors():
    zeta2 = l_value_hurwitz(2, QuadChar.trivial())
    removed = remove_euler_factors(zeta2, 2, QuadChar.trivial(), 6)
    assert abs(removed.value - math.pi**2 / 9) < 1e-12
    assert remove_euler_factors(zeta2, 2, QuadChar.trivial(), 1) == zeta2

    with pytest.raises(DomainError):
        remove_euler_factors(zeta2, 2, QuadChar.trivial(), 0)


def test_series_and_euler():
    policy = TruncationPolicy(tolerance=1e-6)
    chi = QuadChar.chi_tilde(5)
    ref = l_value_hurwitz(2, chi)

    series = l_value_series(2, chi, policy)
    assert abs(series.value - ref.value) <= series.abs_error + ref.abs_error

    euler = l_value_euler(2, chi)
    assert abs(euler.value - ref.value) <= euler.abs_error + ref.abs_error

    with pytest.raises(DomainError):
        l_value_series(1, chi)
    with pytest.raises(DomainError):
        l_value_euler(0.9, chi)


def test_family_values(policy: TruncationPolicy):
    d0s = odd_squarefree_upto(60)
    values = family_values(2, d0s, QuadChar.trivial(), 1, policy)
    for d0, v in zip(d0s.tolist(), values):
        ref = l_value_hurwitz(2, QuadChar.chi(d0))
        assert abs(v.value - ref.value) <= v.abs_error + ref.abs_error, d0

    twist = QuadChar.chi_tilde(3, Psi.TWO)
    d0s = odd_squarefree_upto(60, coprime_to=3)
    values = family_values(2.5 + 1.0j, d0s, twist, 15, policy, tilde=True)
    for d0, v in zip(d0s.tolist(), values):
        total = QuadChar.chi_tilde(d0) * twist
        ref = remove_euler_factors(l_value_hurwitz(2.5 + 1.0j, total), 2.5 + 1.0j, total, 15)
        assert abs(v.value - ref.value) <= v.abs_error + ref.abs_error, d0

    with pytest.raises(DomainError):
        family_values(2, np.array([4]), QuadChar.trivial())
    with pytest.raises(DomainError):
        family_values(2, np.array([3]), QuadChar.chi_tilde(3))


def test_l_value_dispatch(policy: TruncationPolicy):
    chi = QuadChar.chi_tilde(7)
    for s in (2.0, 0.5, 0.7 + 3.0j):
        value = l_value(s, chi, policy)
        ref = l_value_hurwitz(s, chi)
        assert abs(value.value - ref.value) <= value.abs_error + ref.abs_error + 1e-12, s

    assert certified_nonzero(l_value(0.5, chi, policy))


def test_convexity_envelope_regimes():
    assert convexity_bound_envelope(2, 5) == 10
    assert convexity_bound_envelope(-1, 5) == pytest.approx(10 * 5**1.5)
    assert convexity_bound_envelope(0.5, 5) == pytest.approx(10 * 5**0.35)


def test_convexity_envelope_holds(rng: np.random.Generator):
    chars = [
        QuadChar.chi_tilde(int(k), psi)
        for k in odd_squarefree_upto(200)
        for psi in Psi
        if k * psi.conductor <= 200 and not (k == 1 and psi is Psi.ONE)
    ]
    worst = 0.0
    for _ in range(1000):
        chi = chars[int(rng.integers(len(chars)))]
        s = complex(rng.uniform(-1, 2), rng.uniform(0, 20))
        value = l_value_hurwitz(s, chi)
        ratio = abs(value.value) / convexity_bound_envelope(s, chi.conductor)
        worst = max(worst, ratio)
    print("\n::test_convexity_envelope_holds::", len(chars), worst)
    assert worst <= 1
