"""
Double character sums and quadratic large sieve checks.

The asymptotic inequalities are turned into ratios with the ε-powers
dropped, so a run reports constants instead of asserting ≪.
"""

import csv
import math

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import (
    Iterable,
    Optional,
    Sequence,
    TextIO,
)

import numpy as np

from . import logger
from .arith import (
    QuadChar,
    jacobi_batch,
    kronecker_batch,
    odd_squarefree_upto,
    squarefree_splits,
    squarefree_table,
)
from .cache import LValueCache
from .errors import DomainError
from .parameters import TruncationPolicy
from .summation import Accumulator, block_sum, blocks, map_blocks
from .zseries import twisted_l_values

# Rows of symbols evaluated per block
ROW_BLOCK = 256

# ε = 0.05 in the fourth moment normalisation
FOURTH_MOMENT_EXPONENT = 1.05

GROWTH_HEADER = ("P", "Q", "value_re", "value_im", "ratio")


#
# Symbol kernels
#


def symbol_matrix(P: int, Q: int) -> np.ndarray:
    """χ_d(n) = (d/n) for 1 <= d <= P (rows), 1 <= n <= Q (columns)"""
    d = np.arange(1, P + 1, dtype=np.int64)
    n = np.arange(1, Q + 1, dtype=np.int64)
    return kronecker_batch(d[:, None], n[None, :])


@lru_cache(maxsize=8)
def _jacobi_matrix(P: int, Q: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(n/m) over odd squarefree m <= P (rows) and n <= Q (columns)"""
    m = odd_squarefree_upto(P)
    n = odd_squarefree_upto(Q)
    table = jacobi_batch(n[None, :], m[:, None]).astype(np.float64)
    table.flags.writeable = False
    return m, n, table


def double_char_sum(
    P: int,
    Q: int,
    chi: Optional[QuadChar] = None,
    chi_prime: Optional[QuadChar] = None,
    *,
    threads: int = 1,
) -> complex:
    """S(P, Q; χ, χ') = Σ_{d<=P} Σ_{n<=Q} χ_d(n)χ(n)χ'(d) d^{-1/2} n^{-1/2}"""
    if P < 1 or Q < 1:
        raise DomainError(f"double_char_sum needs positive P and Q, got ({P}, {Q})")
    chi = chi or QuadChar.trivial()
    chi_prime = chi_prime or QuadChar.trivial()

    n = np.arange(1, Q + 1, dtype=np.int64)
    column = chi.values(n) / np.sqrt(n)

    def rows(a: int, b: int) -> np.ndarray:
        d = np.arange(a + 1, b + 1, dtype=np.int64)
        inner = kronecker_batch(d[:, None], n[None, :]) @ column
        return inner * chi_prime.values(d) / np.sqrt(d)

    total, _ = block_sum(rows, 0, P, block_size=ROW_BLOCK, threads=threads)
    return complex(total)


#
# Coefficient sequences
#


@dataclass(frozen=True)
class CoeffSeq:
    index: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        index = np.asarray(self.index, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.complex128)
        if index.shape != values.shape or index.ndim != 1:
            raise DomainError("Coefficient index and values must be flat arrays of the same size")
        if index.size and (index.min() <= 0 or np.any(np.diff(index) <= 0)):
            raise DomainError("Coefficient index must be positive and strictly increasing")
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "values", values)

    @cached_property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))

    @property
    def bound(self) -> int:
        return int(self.index[-1]) if self.index.size else 0

    def is_odd_squarefree(self) -> bool:
        if self.index.size == 0:
            return True
        table = squarefree_table(self.bound)
        return bool(np.all(self.index % 2 == 1) and np.all(table[self.index]))


def random_coefficients(
    Q: int,
    rng: np.random.Generator,
    *,
    squarefree: bool = True,
    decay: float = 0.0,
) -> CoeffSeq:
    """Random signs times n^{-decay} on odd (squarefree) n <= Q"""
    if squarefree:
        index = odd_squarefree_upto(Q)
    else:
        index = np.arange(1, Q + 1, 2, dtype=np.int64)
    signs = rng.choice(np.array([-1.0, 1.0]), size=index.size)
    return CoeffSeq(index, signs * index.astype(np.float64) ** (-decay))


#
# Large sieve
#


def large_sieve_ratio(P: int, Q: int, coeffs: CoeffSeq, *, threads: int = 1) -> float:
    """Σ*_{m<=P} |Σ*_{n<=Q} a_n (n/m)|² / ((P + Q) Σ*|a_n|²)

    Starred sums run over odd squarefree integers.
    """
    if coeffs.norm_sq == 0:
        raise DomainError("large_sieve_ratio needs a nonzero coefficient sequence")
    if coeffs.bound > Q or not coeffs.is_odd_squarefree():
        raise DomainError(f"Coefficients must be indexed by odd squarefree n <= {Q}")

    m, n, table = _jacobi_matrix(P, Q)
    a = np.zeros(n.size, dtype=np.complex128)
    a[np.searchsorted(n, coeffs.index)] = coeffs.values

    def rows(lo: int, hi: int) -> np.ndarray:
        return np.abs(table[lo:hi] @ a) ** 2

    acc = Accumulator()
    for part in map_blocks(rows, blocks(0, m.size, ROW_BLOCK), threads):
        acc.add_array(part)
    return acc.total.real / ((P + Q) * coeffs.norm_sq)


def bilinear_ratio(P: int, Q: int, a: CoeffSeq, b: CoeffSeq) -> float:
    """|Σ_{m<=P odd} Σ_{n<=Q odd} a_m b_n (n0/m)| / (P + Q)^{1/2}

    n0 is the squarefree part of n.
    """
    if a.bound > P or b.bound > Q:
        raise DomainError("Coefficient support exceeds the summation range")
    if np.any(a.index % 2 == 0) or np.any(b.index % 2 == 0):
        raise DomainError("bilinear_ratio sums over odd integers")
    if a.index.size == 0 or b.index.size == 0:
        return 0.0

    n0 = np.array([split.d0 for split in squarefree_splits(b.index)], dtype=np.int64)
    table = jacobi_batch(n0[None, :], a.index[:, None]).astype(np.float64)
    value = complex(a.values @ (table @ b.values))
    return abs(value) / math.sqrt(P + Q)


#
# Fourth moment
#


def fourth_moment_ratio(
    X: int,
    chi: QuadChar,
    s: complex | float,
    policy: Optional[TruncationPolicy] = None,
    cache: Optional[LValueCache] = None,
) -> float:
    """Σ_{d0<=X odd squarefree} |L(s, χ_{d0}χ)|⁴ / (X q |s|)^{1.05}"""
    s = complex(s)
    if s.real < 0.5:
        raise DomainError(f"fourth_moment_ratio needs Re s >= 1/2, got {s}")
    policy = policy or TruncationPolicy()
    d0s = odd_squarefree_upto(int(X), coprime_to=chi.odd_conductor)
    values = twisted_l_values(s, d0s, chi, 1, policy, cache=cache)
    acc = Accumulator()
    acc.add_array(np.array([abs(v.value) ** 4 for v in values.values()]))
    scale = (X * chi.conductor * abs(s)) ** FOURTH_MOMENT_EXPONENT
    logger.debug("== Fourth moment over %d d0 <= %s: %s", d0s.size, X, acc.total.real)
    return acc.total.real / scale


#
# Growth tables
#


@dataclass(frozen=True)
class GrowthRow:
    P: int
    Q: int
    value: complex
    ratio: float


def growth_table(
    ks: Iterable[int],
    chi: Optional[QuadChar] = None,
    chi_prime: Optional[QuadChar] = None,
    *,
    threads: int = 1,
) -> list[GrowthRow]:
    """S(P, Q) over P = Q = 2^k with the ratio |S| / (P + Q)^{1/2}"""
    rows = []
    for k in ks:
        P = Q = 2**k
        value = double_char_sum(P, Q, chi, chi_prime, threads=threads)
        rows.append(GrowthRow(P, Q, value, abs(value) / math.sqrt(P + Q)))
        logger.debug("== Growth row P = Q = %s: %s", P, value)
    return rows


def fit_growth_exponent(rows: Sequence[GrowthRow]) -> float:
    """Slope of log |S| against log (P + Q)"""
    if len(rows) < 2:
        raise DomainError("Exponent fit needs at least two rows")
    x = np.log([r.P + r.Q for r in rows])
    y = np.log([max(abs(r.value), 1e-300) for r in rows])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def write_growth_csv(rows: Sequence[GrowthRow], fh: TextIO):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(GROWTH_HEADER)
    for r in rows:
        writer.writerow((r.P, r.Q, repr(r.value.real), repr(r.value.imag), repr(r.ratio)))
