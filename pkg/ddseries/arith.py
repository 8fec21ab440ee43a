"""
Integer and quadratic character arithmetic.

Characters are real primitive characters written as a Jacobi symbol
of odd squarefree modulus times one of the four characters mod 8.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cache, cached_property
from math import gcd, isqrt, prod
from typing import Self

import numpy as np

from .errors import DomainError

#
# Symbols
#


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd positive n"""
    if n <= 0 or n % 2 == 0:
        raise DomainError(f"Jacobi symbol needs an odd positive modulus, got {n}")
    a %= n
    r = 1
    while a:
        while not a & 1:
            a >>= 1
            if n & 7 in (3, 5):
                r = -r
        a, n = n, a
        if a & 3 == 3 and n & 3 == 3:
            r = -r
        a %= n
    return r if n == 1 else 0


def _kronecker_two(a: int) -> int:
    # (a/2)
    if not a & 1:
        return 0
    return 1 if a & 7 in (1, 7) else -1


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n)"""
    if n == 0:
        raise DomainError("Kronecker symbol is undefined for n = 0")
    r = 1
    if n < 0:
        n = -n
        if a < 0:
            r = -r
    v = (n & -n).bit_length() - 1
    if v:
        two = _kronecker_two(a)
        if two == 0:
            return 0
        if v & 1:
            r *= two
        n >>= v
    return r * jacobi(a, n)


def reciprocity_flip(d: int, n: int) -> int:
    """χ_d(n) through the symbol (n/d) and quadratic reciprocity"""
    if d <= 0 or n <= 0 or not (d & 1 and n & 1):
        raise DomainError(f"reciprocity_flip needs odd positive arguments, got ({d}, {n})")
    value = jacobi(n, d)
    if d & 3 == 3:
        value *= Psi.MINUS_ONE(n)
    return value


def jacobi_batch(a: np.ndarray | int, n: np.ndarray | int) -> np.ndarray:
    """Vectorised Jacobi symbol (a/n), n odd positive"""
    a, n = np.broadcast_arrays(np.asarray(a, dtype=np.int64), np.asarray(n, dtype=np.int64))
    if np.any(n <= 0) or np.any(n % 2 == 0):
        raise DomainError("Jacobi symbol needs odd positive moduli")
    a = np.mod(a, n)
    n = n.copy()
    r = np.ones(a.shape, dtype=np.int8)
    while True:
        active = a != 0
        if not active.any():
            break
        while True:
            even = active & (a % 2 == 0)
            if not even.any():
                break
            a[even] //= 2
            n8 = n % 8
            r[even & ((n8 == 3) | (n8 == 5))] *= -1
        flip = active & (a % 4 == 3) & (n % 4 == 3)
        r[flip] *= -1
        a_act = a[active]
        n_act = n[active]
        a[active] = n_act % a_act
        n[active] = a_act
    return np.where(n == 1, r, 0).astype(np.int8)


def kronecker_batch(a: np.ndarray | int, n: np.ndarray | int) -> np.ndarray:
    """Vectorised Kronecker symbol (a/n), n positive"""
    a, n = np.broadcast_arrays(np.asarray(a, dtype=np.int64), np.asarray(n, dtype=np.int64))
    if np.any(n <= 0):
        raise DomainError("kronecker_batch needs positive moduli")
    n = n.copy()
    r = np.ones(a.shape, dtype=np.int8)
    a8 = a % 8
    two = np.where(a % 2 == 0, 0, np.where((a8 == 1) | (a8 == 7), 1, -1)).astype(np.int8)
    while True:
        even = n % 2 == 0
        if not even.any():
            break
        n[even] //= 2
        r[even] *= two[even]
    return (r * jacobi_batch(a, n)).astype(np.int8)


#
# Characters mod 8
#

_PSI_TABLES = {
    1: (1, 1, 1, 1, 1, 1, 1, 1),
    -1: (0, 1, 0, -1, 0, 1, 0, -1),
    2: (0, 1, 0, -1, 0, -1, 0, 1),
    -2: (0, 1, 0, 1, 0, -1, 0, -1),
}


class Psi(Enum):
    """The four characters of conductor dividing 8"""

    ONE = 1
    MINUS_ONE = -1
    TWO = 2
    MINUS_TWO = -2

    @property
    def conductor(self) -> int:
        return {1: 1, -1: 4, 2: 8, -2: 8}[self.value]

    @property
    def table(self) -> tuple[int, ...]:
        return _PSI_TABLES[self.value]

    def __call__(self, n: int) -> int:
        return self.table[n % 8]

    def values(self, n: np.ndarray) -> np.ndarray:
        return np.asarray(self.table, dtype=np.int8)[np.asarray(n) % 8]

    def __mul__(self, other: "Psi") -> "Psi":
        a, b = self.value, other.value
        sign = 1 if (a > 0) == (b > 0) else -1
        two = 2 if (abs(a) == 2) != (abs(b) == 2) else 1
        return Psi(sign * two)

    @property
    def label(self) -> str:
        return {1: "psi1", -1: "psi-1", 2: "psi2", -2: "psi-2"}[self.value]

    @classmethod
    def parse(cls, tag: str | int) -> "Psi":
        if isinstance(tag, str):
            tag = tag.strip().lower().removeprefix("psi").removeprefix("_")
        try:
            return cls(int(tag))
        except ValueError:
            raise DomainError(f"Unknown mod 8 character: {tag}") from None


#
# Quadratic characters
#


@dataclass(frozen=True)
class QuadChar:
    """Real primitive character

    With `as_tilde` unset the character is χ_k : n -> (k/n), which for
    k = 3 (mod 4) carries an implicit ψ₋₁; with `as_tilde` set it is
    χ̃_k : n -> (n/k). The mod 8 part multiplies either form.
    """

    odd_conductor: int = 1
    eight_part: Psi = Psi.ONE
    as_tilde: bool = False

    def __post_init__(self):
        k = self.odd_conductor
        if k <= 0 or k % 2 == 0 or not is_squarefree(k):
            raise DomainError(f"Odd conductor must be odd, positive and squarefree: {k}")

    @classmethod
    def trivial(cls) -> Self:
        return cls(1, Psi.ONE, True)

    @classmethod
    def chi(cls, d: int, eight_part: Psi = Psi.ONE) -> Self:
        """χ_d for odd squarefree d"""
        return cls(d, eight_part, False)

    @classmethod
    def chi_tilde(cls, d: int, eight_part: Psi = Psi.ONE) -> Self:
        """χ̃_d for odd squarefree d"""
        return cls(d, eight_part, True)

    @cached_property
    def eight_effective(self) -> Psi:
        if not self.as_tilde and self.odd_conductor % 4 == 3:
            return self.eight_part * Psi.MINUS_ONE
        return self.eight_part

    def canonical(self) -> "QuadChar":
        return QuadChar(self.odd_conductor, self.eight_effective, True)

    @property
    def conductor(self) -> int:
        return self.odd_conductor * self.eight_effective.conductor

    @property
    def period(self) -> int:
        return 8 * self.odd_conductor

    @property
    def is_trivial(self) -> bool:
        return self.odd_conductor == 1 and self.eight_effective is Psi.ONE

    def __call__(self, n: int) -> int:
        return jacobi(n, self.odd_conductor) * self.eight_effective(n)

    def values(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        return (jacobi_batch(n, self.odd_conductor) * self.eight_effective.values(n)).astype(np.int8)

    def product(self, other: "QuadChar") -> "QuadChar":
        """Primitive character inducing the pointwise product"""
        g = gcd(self.odd_conductor, other.odd_conductor)
        k = (self.odd_conductor // g) * (other.odd_conductor // g)
        return QuadChar(k, self.eight_effective * other.eight_effective, True)

    def __mul__(self, other: "QuadChar") -> "QuadChar":
        return self.product(other)

    def twist(self, psi: Psi) -> "QuadChar":
        return QuadChar(self.odd_conductor, self.eight_part * psi, self.as_tilde)

    def __str__(self) -> str:
        name = "chi~" if self.as_tilde else "chi"
        return f"{name}_{self.odd_conductor}*{self.eight_part.label}"


def eval_char(chi: QuadChar, n: int) -> int:
    return chi(n)


def kappa(chi: QuadChar) -> int:
    """Parity: 0 for even, 1 for odd characters"""
    return (1 - chi(-1)) // 2


#
# Squarefree decomposition
#


@dataclass(frozen=True)
class SquarefreeSplit:
    d: int
    d0: int
    d1: int
    d1_factorization: tuple[tuple[int, int], ...] = field(default=())


def squarefree_split(d: int) -> SquarefreeSplit:
    """d = d0 * d1^2 with d0 squarefree"""
    if d <= 0:
        raise DomainError(f"squarefree_split needs a positive integer, got {d}")
    d0_parts: list[int] = []
    d1_fact: list[tuple[int, int]] = []

    def _record(p: int, e: int):
        if e & 1:
            d0_parts.append(p)
        if e >= 2:
            d1_fact.append((p, e // 2))

    c = d
    p = 2
    # All primes of the cofactor exceed p: once p^3 > c, it has at most two
    while p * p * p <= c:
        if c % p == 0:
            e = 0
            while c % p == 0:
                c //= p
                e += 1
            _record(p, e)
        p += 1 if p == 2 else 2

    if c > 1:
        r = isqrt(c)
        if r * r == c:
            _record(r, 2)
        else:
            # prime, or a product of two distinct primes
            d0_parts.append(c)

    d1_fact.sort()
    d1 = prod(q**e for q, e in d1_fact)
    return SquarefreeSplit(
        d=d,
        d0=prod(d0_parts),
        d1=d1,
        d1_factorization=tuple(d1_fact),
    )


def squarefree_part(n: int) -> int:
    return squarefree_split(n).d0


def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorization by trial division"""
    if n <= 0:
        raise DomainError(f"Cannot factorize {n}")
    out: list[tuple[int, int]] = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def prime_divisors(n: int) -> tuple[int, ...]:
    return tuple(p for p, _ in factorize(n))


def radical(n: int) -> int:
    return prod(prime_divisors(n))


def is_squarefree(n: int) -> bool:
    return n > 0 and squarefree_split(n).d1 == 1


def mobius(n: int) -> int:
    fact = factorize(n)
    if any(e > 1 for _, e in fact):
        return 0
    return -1 if len(fact) % 2 else 1


#
# Sieves
#


@cache
def prime_array(bound: int) -> np.ndarray:
    """Primes <= bound (sieve of Eratosthenes)"""
    if bound < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(bound + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for p in range(3, isqrt(bound) + 1, 2):
        if sieve[p]:
            sieve[p * p :: 2 * p] = False
    out = np.flatnonzero(sieve).astype(np.int64)
    out.flags.writeable = False
    return out


def primes_up_to(bound: int) -> list[int]:
    return prime_array(bound).tolist()


@cache
def spf_table(bound: int) -> np.ndarray:
    """Smallest prime factor of every n <= bound (spf[0] = spf[1] = 0)"""
    spf = np.zeros(bound + 1, dtype=np.int64)
    for p in prime_array(isqrt(bound)).tolist():
        block = spf[p * p :: p]
        block[block == 0] = p
    rest = spf == 0
    rest[:2] = False
    spf[rest] = np.flatnonzero(rest)
    spf.flags.writeable = False
    return spf


@cache
def squarefree_table(bound: int) -> np.ndarray:
    """Boolean squarefree indicator on [0, bound]"""
    mask = np.ones(bound + 1, dtype=bool)
    mask[0] = False
    for p in prime_array(isqrt(bound)).tolist():
        mask[p * p :: p * p] = False
    mask.flags.writeable = False
    return mask


def factor_with_table(n: int, spf: np.ndarray) -> tuple[tuple[int, int], ...]:
    """Factorization through a smallest-prime-factor table"""
    if n >= spf.size:
        return factorize(n)
    out: list[tuple[int, int]] = []
    while n > 1:
        p = int(spf[n])
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        out.append((p, e))
    return tuple(out)


def squarefree_splits(n: np.ndarray) -> list[SquarefreeSplit]:
    """Splits n = n0 * n1^2 of every entry through the smallest-prime-factor table"""
    n = np.asarray(n, dtype=np.int64)
    if n.size == 0:
        return []
    if n.min() <= 0:
        raise DomainError("squarefree_splits needs positive integers")
    spf = spf_table(int(n.max()))
    out: list[SquarefreeSplit] = []
    for m in n.tolist():
        fact = factor_with_table(m, spf)
        d1_fact = tuple((p, e // 2) for p, e in fact if e >= 2)
        out.append(
            SquarefreeSplit(
                d=m,
                d0=prod(p for p, e in fact if e & 1),
                d1=prod(p**e for p, e in d1_fact),
                d1_factorization=d1_fact,
            ),
        )
    return out


def coprime_upto(bound: int, modulus: int) -> np.ndarray:
    """1 <= n <= bound with gcd(n, modulus) = 1"""
    n = np.arange(1, bound + 1, dtype=np.int64)
    return n[np.gcd(n, modulus) == 1]


def odd_squarefree_upto(bound: int, coprime_to: int = 1) -> np.ndarray:
    """Odd squarefree integers <= bound, coprime to `coprime_to`"""
    if bound < 1:
        return np.zeros(0, dtype=np.int64)
    n = np.flatnonzero(squarefree_table(int(bound))).astype(np.int64)
    n = n[n % 2 == 1]
    if coprime_to > 1:
        n = n[np.gcd(n, coprime_to) == 1]
    return n


class LegendreTable:
    """Legendre symbols (r/p) for all odd primes p <= bound and 0 <= r < p

    Rows are concatenated; `symbol(m, i)` reads (m/p_i) for an array m.
    """

    def __init__(self, bound: int):
        self.primes = prime_array(bound)[1:]
        sizes = self.primes
        self.offsets = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.int64)
        table = np.empty(int(sizes.sum()), dtype=np.int8)
        for i, p in enumerate(self.primes.tolist()):
            row = np.full(p, -1, dtype=np.int8)
            row[0] = 0
            row[(np.arange(1, (p + 1) // 2, dtype=np.int64) ** 2) % p] = 1
            table[self.offsets[i] : self.offsets[i] + p] = row
        self._table = table

    def symbol(self, m: np.ndarray, index: int) -> np.ndarray:
        p = int(self.primes[index])
        return self._table[self.offsets[index] + np.mod(m, p)]

    def flipped(self, m: np.ndarray, index: int) -> np.ndarray:
        """(p/m) for odd positive m through quadratic reciprocity"""
        p = int(self.primes[index])
        sym = self.symbol(m, index)
        if p % 4 == 3:
            sym = np.where(np.asarray(m) % 4 == 3, -sym, sym)
        return sym


@cache
def legendre_table(bound: int) -> LegendreTable:
    return LegendreTable(bound)
