"""
Correction Dirichlet polynomials P and Q.
"""

import cmath
import math

from dataclasses import dataclass
from itertools import combinations
from typing import (
    Literal,
    Optional,
)

import numpy as np

from . import logger
from .arith import (
    QuadChar,
    SquarefreeSplit,
    jacobi,
    kronecker,
    squarefree_split,
)
from .errors import DomainError

type Variant = Literal["P", "Q_as_printed", "Q_alpha_minus_one"]

Q_VARIANTS: tuple[Variant, ...] = ("Q_as_printed", "Q_alpha_minus_one")

# Outcome of the reflection and sum-switch checks
DEFAULT_Q_VARIANT: Variant = "Q_alpha_minus_one"


@dataclass(frozen=True)
class CorrectionPolyKey:
    split: SquarefreeSplit
    twist: QuadChar
    variant: Variant = "P"

    @classmethod
    def of(cls, n: int, twist: QuadChar, variant: Variant = "P") -> "CorrectionPolyKey":
        return cls(squarefree_split(n), twist, variant)

    def odd_symbol(self, p: int) -> int:
        """(χ_{d0}χ)(p) for P, (χ̃_{m0}χ')(p) for Q"""
        n0 = self.split.d0
        if self.variant == "P":
            sym = kronecker(n0, p)
        else:
            sym = jacobi(p, n0)
        return sym * self.twist(p)


def _factor(p: int, alpha: int, s: complex, even: int, odd: int, upper: int) -> complex:
    # Σ_{n=0}^{α} χ(p^{2n}) p^{n-2ns} - Σ_{n=0}^{upper} X(p^{2n+1}) p^{n-(2n+1)s}
    logp = math.log(p)
    first = sum(even ** (2 * n) * cmath.exp((n - 2 * n * s) * logp) for n in range(alpha + 1))
    second = sum(odd ** (2 * n + 1) * cmath.exp((n - (2 * n + 1) * s) * logp) for n in range(upper + 1))
    return first - second


def _eval(key: CorrectionPolyKey, z: complex) -> complex:
    z = complex(z)
    value = complex(1.0)
    for p, alpha in key.split.d1_factorization:
        upper = alpha if key.variant == "Q_as_printed" else alpha - 1
        value *= _factor(p, alpha, z, key.twist(p), key.odd_symbol(p), upper)
    return value


def eval_P(key: CorrectionPolyKey, s: complex | float) -> complex:
    """P_{d0,d1}^{(χ)}(s)"""
    if key.variant != "P":
        raise DomainError(f"eval_P called with variant {key.variant}")
    return _eval(key, complex(s))


def eval_Q(key: CorrectionPolyKey, w: complex | float) -> complex:
    """Q_{m0,m1}^{(χ')}(w), second sum up to β (as printed) or β - 1"""
    if key.variant not in Q_VARIANTS:
        raise DomainError(f"eval_Q called with variant {key.variant}")
    return _eval(key, complex(w))


def evaluate(key: CorrectionPolyKey, z: complex | float) -> complex:
    return _eval(key, complex(z))


def check_reflection(key: CorrectionPolyKey, z: complex | float) -> float:
    """|F(z) - n1^{1-2z} χ(n1²) F(1-z)| relative to the size of both sides"""
    z = complex(z)
    n1 = key.split.d1
    lhs = _eval(key, z)
    rhs = cmath.exp((1 - 2 * z) * math.log(n1)) * key.twist(n1 * n1) * _eval(key, 1 - z)
    scale = max(1.0, abs(lhs), abs(rhs))
    return abs(lhs - rhs) / scale


def _check_coprime_twist(key: CorrectionPolyKey):
    for p, _ in key.split.d1_factorization:
        if key.twist(p) == 0:
            raise DomainError(f"d1 = {key.split.d1} shares the prime {p} with the conductor of {key.twist}")


def p_at_half_divisor_sum(key: CorrectionPolyKey) -> float:
    """P(1/2) = Σ_{f | d1²} μ(f0) (χ_{d0}χ)(f0) f0^{-1/2}

    Equals eval_P(key, 1/2) only when d1 is coprime to the conductor
    of χ, other keys raise DomainError.
    """
    _check_coprime_twist(key)
    value = 1.0
    for p, alpha in key.split.d1_factorization:
        x = key.odd_symbol(p)
        # divisors p^j of p^{2α}: even j give f0 = 1, odd j give f0 = p
        value *= (alpha + 1) - alpha * x / math.sqrt(p)
    return value


def expand_P_at_half(key: CorrectionPolyKey) -> list[tuple[int, float]]:
    """(e, weight) with P(1/2) = Σ μ(e) (χ_{d0}χ)(e) e^{-1/2} weight over e | rad(d1)"""
    _check_coprime_twist(key)
    fact = key.split.d1_factorization
    terms = []
    for r in range(len(fact) + 1):
        for chosen in combinations(fact, r):
            e = math.prod(p for p, _ in chosen)
            weight = math.prod(a for _, a in chosen) * math.prod(a + 1 for p, a in fact if (p, a) not in chosen)
            terms.append((e, float(weight)))
    return terms


def growth_exponent(sigma: float) -> float:
    """Exponent of d1 in the bound |P(s)| << d1^{max(0, 1 - 2 Re s) + ε}"""
    return max(0.0, 1.0 - 2.0 * sigma)


def random_keys(
    rng: np.random.Generator,
    count: int,
    twist: QuadChar,
    variant: Variant = "P",
    bound: int = 10_000,
    coprime_to: int = 2,
) -> list[CorrectionPolyKey]:
    """Random keys n = n0·n1² with n0, n1 <= bound, coprime to `coprime_to`"""
    keys: list[CorrectionPolyKey] = []
    modulus = coprime_to * twist.odd_conductor
    while len(keys) < count:
        n0, n1 = (int(x) for x in rng.integers(1, bound + 1, size=2))
        n = n0 * n1 * n1
        if math.gcd(n, modulus) != 1:
            continue
        keys.append(CorrectionPolyKey.of(n, twist, variant))
    return keys


def reflection_suite(
    rng: np.random.Generator,
    trials: int,
    variant: Variant = "P",
    twist: Optional[QuadChar] = None,
    strip: float = 2.0,
) -> list[float]:
    """Relative reflection residuals at random keys and points"""
    twist = twist or QuadChar.trivial()
    keys = random_keys(rng, trials, twist, variant)
    residuals = []
    for key in keys:
        z = complex(0.5 + rng.uniform(-strip, strip), rng.uniform(-10, 10))
        residuals.append(check_reflection(key, z))
    logger.debug("== Reflection suite %s: max residual %.3e", variant, max(residuals, default=0.0))
    return residuals
