import math

import numpy as np
import pytest

from ddseries.arith import (
    Psi,
    QuadChar,
    eval_char,
    factorize,
    jacobi,
    jacobi_batch,
    kappa,
    kronecker,
    kronecker_batch,
    legendre_table,
    mobius,
    odd_squarefree_upto,
    primes_up_to,
    radical,
    reciprocity_flip,
    squarefree_split,
    squarefree_splits,
)
from ddseries.errors import DomainError


def euler_criterion(a: int, p: int) -> int:
    r = pow(a % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def factorwise_jacobi(a: int, n: int) -> int:
    value = 1
    for p, e in factorize(n):
        value *= euler_criterion(a, p) ** e
    return value


def test_kronecker_examples():
    assert all(kronecker(1, n) == 1 for n in range(1, 50))
    assert kronecker(5, 3) == euler_criterion(5, 3)
    assert kronecker(2, 15) == euler_criterion(2, 3) * euler_criterion(2, 5)
    assert kronecker(3, 2) == -1
    assert kronecker(7, 2) == 1
    assert kronecker(6, 4) == 0

    with pytest.raises(DomainError):
        kronecker(3, 0)


def test_jacobi_against_euler_criterion():
    for n in range(3, 400, 2):
        for a in range(-20, 60):
            assert jacobi(a, n) == factorwise_jacobi(a, n), (a, n)

    with pytest.raises(DomainError):
        jacobi(3, 8)


def test_kronecker_multiplicative():
    for n in range(1, 200, 2):
        for a in range(-40, 41, 3):
            for b in (-7, -2, 3, 11):
                assert kronecker(a * b, n) == kronecker(a, n) * kronecker(b, n)


def test_batch_kernels_agree_with_scalar():
    a = np.arange(-50, 200, dtype=np.int64)
    n = np.arange(1, 200, dtype=np.int64)
    table = kronecker_batch(a[:, None], n[None, :])
    for i, x in enumerate(a.tolist()):
        for j, y in enumerate(n.tolist()):
            assert table[i, j] == kronecker(x, y)

    odd = np.arange(1, 200, 2, dtype=np.int64)
    table = jacobi_batch(a[:, None], odd[None, :])
    for i, x in enumerate(a.tolist()):
        for j, y in enumerate(odd.tolist()):
            assert table[i, j] == jacobi(x, y)


def test_reciprocity_flip():
    # d = 1 (mod 4): no sign
    for d in range(1, 200, 4):
        for n in range(1, 200, 2):
            assert reciprocity_flip(d, n) == jacobi(n, d)

    assert reciprocity_flip(3, 3) == 0

    for d in range(1, 300, 2):
        for n in range(1, 300, 2):
            assert reciprocity_flip(d, n) == kronecker(d, n)

    with pytest.raises(DomainError):
        reciprocity_flip(4, 3)


def test_psi_tables():
    assert Psi.MINUS_ONE(3) == -1
    assert Psi.TWO(7) == 1
    assert Psi.MINUS_TWO(7) == Psi.TWO(7) * Psi.MINUS_ONE(7) == -1

    assert Psi.MINUS_ONE * Psi.MINUS_ONE is Psi.ONE
    assert Psi.TWO * Psi.TWO is Psi.ONE
    assert Psi.TWO * Psi.MINUS_ONE is Psi.MINUS_TWO

    for a in Psi:
        for b in Psi:
            c = a * b
            assert all(c(n) == a(n) * b(n) for n in range(1, 8, 2))

    assert [p.conductor for p in Psi] == [1, 4, 8, 8]
    assert Psi.parse("psi-1") is Psi.MINUS_ONE
    assert Psi.parse("2") is Psi.TWO
    assert Psi.parse(-2) is Psi.MINUS_TWO
    with pytest.raises(DomainError):
        Psi.parse("psi3")


def test_quadchar():
    chi3 = QuadChar.chi(3)
    assert chi3.eight_effective is Psi.MINUS_ONE
    assert chi3.conductor == 12
    assert QuadChar.chi_tilde(3).conductor == 3
    assert QuadChar.chi(5).conductor == 5
    assert QuadChar.chi(5, Psi.TWO).conductor == 40
    assert QuadChar.trivial().is_trivial

    # χ_d is the Kronecker symbol (d/.) on odd integers
    for d in (3, 5, 7, 15, 21, 105):
        chi = QuadChar.chi(d)
        for n in range(1, 300, 2):
            assert chi(n) == kronecker(d, n)

    with pytest.raises(DomainError):
        QuadChar.chi(9)
    with pytest.raises(DomainError):
        QuadChar.chi(6)


def test_quadchar_periodic(rng: np.random.Generator):
    for chi in (QuadChar.chi(15, Psi.TWO), QuadChar.chi_tilde(7), QuadChar.chi(3, Psi.MINUS_TWO)):
        n = rng.integers(-10_000, 10_000, size=10_000)
        shifted = n + chi.period
        np.testing.assert_array_equal(chi.values(n), chi.values(shifted))
        assert all(eval_char(chi, int(x)) == v for x, v in zip(n[:200], chi.values(n[:200])))


def test_quadchar_product():
    a = QuadChar.chi_tilde(3)
    b = QuadChar.chi_tilde(15)
    c = a * b
    assert c.odd_conductor == 5
    for n in range(1, 200):
        if math.gcd(n, 15) == 1:
            assert c(n) == a(n) * b(n)

    d = QuadChar.chi(7) * QuadChar.chi_tilde(5, Psi.TWO)
    assert d.eight_effective is Psi.MINUS_TWO
    assert d.conductor == 35 * 8


def test_kappa():
    assert kappa(QuadChar.trivial()) == 0
    assert kappa(QuadChar(1, Psi.MINUS_ONE, True)) == 1
    assert kappa(QuadChar.chi_tilde(3)) == 1
    assert kappa(QuadChar.chi(3)) == 0

    chars = [QuadChar.chi_tilde(k, psi) for k in (1, 3, 5, 7) for psi in Psi]
    for a in chars:
        for b in (QuadChar.chi_tilde(11), QuadChar.chi_tilde(13, Psi.MINUS_ONE)):
            assert kappa(a * b) == (kappa(a) + kappa(b)) % 2


def test_squarefree_split():
    sp = squarefree_split(1)
    assert (sp.d0, sp.d1) == (1, 1)

    sp = squarefree_split(12)
    assert (sp.d0, sp.d1) == (3, 2)

    sp = squarefree_split(45)
    assert (sp.d0, sp.d1) == (5, 3)

    sp = squarefree_split(360)
    assert (sp.d0, sp.d1) == (10, 6)
    assert sp.d1_factorization == ((2, 1), (3, 1))
    assert radical(sp.d1) == 6
    assert radical(360) == 30
    assert radical(1) == 1

    # cofactor is the square of a large prime
    sp = squarefree_split(3 * 10007**2)
    assert (sp.d0, sp.d1) == (3, 10007)

    with pytest.raises(DomainError):
        squarefree_split(0)


def test_squarefree_splits_agree():
    n = np.arange(1, 3000, dtype=np.int64)
    for split in squarefree_splits(n):
        ref = squarefree_split(split.d)
        assert split == ref
        assert split.d0 * split.d1**2 == split.d
        assert np.prod([p**e for p, e in split.d1_factorization], dtype=np.int64) == split.d1


def test_chi_prime_of_d_is_chi_prime_of_d0(rng: np.random.Generator):
    chi_prime = QuadChar.chi_tilde(15, Psi.MINUS_ONE)
    for d in rng.integers(1, 100_000, size=500).tolist():
        if np.gcd(d, 30) != 1:
            continue
        assert chi_prime(d) == chi_prime(squarefree_split(d).d0)


def test_primes_and_sieves():
    assert primes_up_to(10) == [2, 3, 5, 7]
    assert primes_up_to(2) == [2]
    assert len(primes_up_to(100)) == 25
    assert primes_up_to(1) == []

    assert odd_squarefree_upto(20).tolist() == [1, 3, 5, 7, 11, 13, 15, 17, 19]
    assert odd_squarefree_upto(20, coprime_to=3).tolist() == [1, 5, 7, 11, 13, 17, 19]

    assert mobius(1) == 1
    assert mobius(30) == -1
    assert mobius(12) == 0


def test_legendre_table():
    table = legendre_table(100)
    m = np.arange(1, 400, 2, dtype=np.int64)
    for i, p in enumerate(table.primes.tolist()):
        np.testing.assert_array_equal(table.symbol(m, i), [jacobi(int(x), p) for x in m])
        np.testing.assert_array_equal(table.flipped(m, i), [jacobi(p, int(x)) for x in m])
