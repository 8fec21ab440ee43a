"""
Dirichlet L-functions of quadratic characters.

Central values come from the approximate functional equation,
values at general points from the Hurwitz zeta function, and values
right of the line Re s = 1 from truncated Euler products.
"""

import math

from dataclasses import dataclass
from typing import (
    Literal,
    Optional,
)

import numpy as np

from . import logger
from .arith import (
    Psi,
    QuadChar,
    jacobi,
    jacobi_batch,
    kappa,
    legendre_table,
    prime_array,
    prime_divisors,
)
from .errors import DomainError, PoleError
from .parameters import TruncationPolicy
from .special import (
    G_weight_array,
    ValueWithError,
    digamma,
    hurwitz_zeta_array,
)
from .summation import EPS, block_sum, compensated_sum

type Method = Literal["afe", "hurwitz", "euler", "series"]

# ζ(1/2) correction of the smoothed sum for the trivial character
POLAR_TERM = -4 * math.pi**0.25 / math.gamma(0.25)


@dataclass(frozen=True)
class LRecord:
    d0: int
    chi: QuadChar
    psi_index: Psi
    value: ValueWithError
    method: Method = "afe"

    @property
    def q(self) -> int:
        return self.chi.conductor

    def __post_init__(self):
        if math.gcd(self.d0, 2 * self.chi.conductor) != 1:
            raise DomainError(f"d0 = {self.d0} is not coprime to 2*{self.chi.conductor}")
        if not math.isfinite(self.value.abs_error):
            raise DomainError("L-value record with infinite error")


def c0_table(d0: int, psi: Psi) -> int:
    """The 2-part of the conductor of χ_{d0}ψ"""
    if d0 % 2 == 0:
        raise DomainError(f"c0 needs an odd d0, got {d0}")
    match psi:
        case Psi.TWO | Psi.MINUS_TWO:
            return 8
        case Psi.ONE:
            return 1 if d0 % 4 == 1 else 4
        case Psi.MINUS_ONE:
            return 4 if d0 % 4 == 1 else 1
    raise AssertionError(psi)


def total_character(d0: int, chi: QuadChar, psi: Psi = Psi.ONE) -> QuadChar:
    """The primitive character χ_{d0}·χ·ψ"""
    if math.gcd(d0, chi.odd_conductor) != 1:
        raise DomainError(f"Conductor clash: gcd({d0}, {chi.odd_conductor}) > 1")
    return QuadChar.chi(d0, psi) * chi


#
# Approximate functional equation
#


def afe_terms(total: QuadChar, policy: TruncationPolicy) -> tuple[np.ndarray, np.ndarray, float]:
    """Terms 2 X(n) n^{-1/2} G_κ(n·√(π/C)) of the smoothed sum, with the truncation error"""
    conductor = total.conductor
    k = kappa(total)
    scale = math.sqrt(math.pi / conductor)
    n_max = max(1, int(policy.afe_truncation * math.sqrt(conductor)))

    n = np.arange(1, n_max + 1, dtype=np.int64)
    g, g_errors = G_weight_array(
        k,
        n * scale,
        policy.weight_method,
        line=policy.weight_line,
        height=policy.weight_height,
        step=policy.weight_step,
        tolerance=policy.tolerance,
    )
    inv_sqrt = 1 / np.sqrt(n)

    # Tail: G decays faster than exp(-ξ²)
    xi_cut = (n_max + 1) * scale
    g_cut, _ = G_weight_array(k, np.array([xi_cut]))
    tail = 2 * float(g_cut[0]) * math.sqrt(conductor / math.pi) / max(xi_cut, 1.0)
    weight_error = 2 * float(np.sum(g_errors * inv_sqrt))
    return n, 2 * total.values(n) * g * inv_sqrt, tail + weight_error


def afe_central(total: QuadChar, policy: TruncationPolicy) -> ValueWithError:
    """L(1/2, X) = 2 Σ X(n) n^{-1/2} G_κ(n·√(π/C))"""
    _, terms, error = afe_terms(total, policy)
    value, roundoff = compensated_sum(terms, policy.block_size)
    if total.is_trivial:
        value += POLAR_TERM
    return ValueWithError(value, roundoff + error)


def l_central_afe(
    d0: int,
    chi: QuadChar,
    psi: Psi,
    policy: Optional[TruncationPolicy] = None,
) -> ValueWithError:
    """L(1/2, χ_{d0}χψ) for d0 odd squarefree coprime to the conductor of χ"""
    policy = policy or TruncationPolicy()
    if d0 <= 0 or d0 % 2 == 0:
        raise DomainError(f"d0 must be odd and positive: {d0}")
    return afe_central(total_character(d0, chi, psi), policy)


#
# Hurwitz zeta route
#


def l_value_hurwitz(s: complex | float, chi: QuadChar, terms: int = 12) -> ValueWithError:
    """L(s, χ) = C^{-s} Σ_{a ≤ C} χ(a) ζ(s, a/C)"""
    s = complex(s)
    conductor = chi.conductor
    a = np.arange(1, conductor + 1, dtype=np.int64)
    coeffs = chi.values(a)
    support = coeffs != 0
    a, coeffs = a[support], coeffs[support].astype(np.float64)

    if abs(s - 1) < 1e-14:
        if chi.is_trivial:
            raise PoleError("L(s, χ) has a pole at s = 1 for the trivial character")
        # L(1, χ) = -(1/C) Σ χ(a) ψ(a/C)
        acc = sum(c * digamma(x / conductor) for c, x in zip(coeffs.tolist(), a.tolist()))
        return -acc / conductor

    zeta, errors = hurwitz_zeta_array(s, a / conductor, terms)
    scale = abs(np.exp(-s * math.log(conductor)))
    value = np.exp(-s * math.log(conductor)) * complex(np.sum(coeffs * zeta))
    roundoff = EPS * float(np.sum(np.abs(zeta))) * (2 + math.log2(a.size + 1))
    return ValueWithError(complex(value), scale * (float(np.sum(errors)) + roundoff))


def remove_euler_factors(L_val: ValueWithError, s: complex | float, chi: QuadChar, P: int) -> ValueWithError:
    """L^{(P)}(s, χ) = L(s, χ) Π_{p | P} (1 - χ(p) p^{-s})"""
    if P < 1:
        raise DomainError(f"P must be positive: {P}")
    result = L_val
    for p in prime_divisors(P) if P > 1 else ():
        c = chi(p)
        if c:
            result = result * (1 - c * complex(p) ** (-complex(s)))
    return result


#
# Right of the critical strip
#


def _euler_bound(sigma: float, policy: TruncationPolicy) -> int:
    if sigma <= 1:
        raise DomainError(f"Euler product needs Re s > 1, got {sigma}")
    bound = (policy.tolerance * (sigma - 1) / 2) ** (-1 / (sigma - 1))
    return int(min(max(bound, 100), policy.prime_cutoff))


def euler_relative_error(sigma: float, bound: int) -> float:
    return math.expm1(2 * bound ** (1 - sigma) / (sigma - 1))


def l_value_series(s: complex | float, chi: QuadChar, policy: Optional[TruncationPolicy] = None) -> ValueWithError:
    """Direct Dirichlet series for Re s > 1"""
    policy = policy or TruncationPolicy()
    s = complex(s)
    sigma = s.real
    if sigma <= 1:
        raise DomainError(f"Dirichlet series needs Re s > 1, got {s}")
    n_max = int(min((policy.tolerance * (sigma - 1)) ** (-1 / (sigma - 1)), 10_000_000))

    def terms(a: int, b: int) -> np.ndarray:
        n = np.arange(a, b, dtype=np.int64)
        return chi.values(n) * np.exp(-s * np.log(n))

    value, roundoff = block_sum(terms, 1, n_max + 1, block_size=policy.block_size, threads=policy.threads)
    tail = n_max ** (1 - sigma) / (sigma - 1)
    return ValueWithError(value, tail + roundoff)


def l_value_euler(
    s: complex | float,
    chi: QuadChar,
    P: int = 1,
    policy: Optional[TruncationPolicy] = None,
) -> ValueWithError:
    """L^{(P)}(s, χ) as a truncated Euler product, Re s > 1"""
    policy = policy or TruncationPolicy()
    values = family_values(s, np.array([1]), chi, P, policy)
    return values[0]


def family_values(
    s: complex | float,
    d0s: np.ndarray,
    twist: QuadChar,
    P: int = 1,
    policy: Optional[TruncationPolicy] = None,
    *,
    tilde: bool = False,
) -> list[ValueWithError]:
    """L^{(P)}(s, χ_{d0}·twist) for an array of odd squarefree d0, Re s > 1

    With `tilde` the family is χ̃_{d0}·twist. Every d0 must be coprime
    to the odd conductor of the twist.
    """
    policy = policy or TruncationPolicy()
    s = complex(s)
    d0s = np.asarray(d0s, dtype=np.int64)
    if np.any(d0s % 2 == 0) or np.any(d0s <= 0):
        raise DomainError("family_values needs odd positive d0")
    if np.any(np.gcd(d0s, twist.odd_conductor) != 1):
        raise DomainError("family_values needs d0 coprime to the twist conductor")

    bound = _euler_bound(s.real, policy)
    primes = prime_array(bound)
    table = legendre_table(bound)
    removed = set(prime_divisors(P)) if P > 1 else set()

    # mod 8 part of the product, per residue class of d0 mod 4
    base1 = twist.eight_effective
    base3 = base1 if tilde else base1 * Psi.MINUS_ONE
    is1 = d0s % 4 == 1

    logger.debug("== Euler product over %d primes for %d characters", primes.size, d0s.size)

    log_l = np.zeros(d0s.shape, dtype=np.complex128)
    for i, p in enumerate(primes.tolist()):
        if p in removed:
            continue
        if p == 2:
            sym = jacobi_batch(2, d0s)
        else:
            # (p/d0) by reciprocity from the table of (d0/p)
            sym = table.flipped(d0s, i - 1)
        tw = jacobi(p, twist.odd_conductor)
        eight = np.where(is1, base1(p), base3(p))
        x = sym * (tw * eight)
        nz = x != 0
        if nz.any():
            log_l[nz] -= np.log1p(-x[nz] * complex(p) ** (-s))

    rel = euler_relative_error(s.real, bound)
    values = np.exp(log_l)
    return [ValueWithError(complex(v), abs(v) * (rel + 64 * EPS)) for v in values]


def l_value(s: complex | float, chi: QuadChar, policy: Optional[TruncationPolicy] = None) -> ValueWithError:
    """Dispatch: Euler product right of 1, AFE at the real central point, Hurwitz elsewhere"""
    policy = policy or TruncationPolicy()
    s = complex(s)
    if s.real >= 1.5:
        return l_value_euler(s, chi, 1, policy)
    if s == 0.5:
        return afe_central(chi, policy)
    return l_value_hurwitz(s, chi, policy.hurwitz_terms)


def certified_nonzero(value: ValueWithError, factor: float = 10.0) -> bool:
    return value.certified_nonzero(factor)


def convexity_bound_envelope(s: complex | float, q: int, eps: float = 0.1, constant: float = 10.0) -> float:
    """Three regime convexity envelope for L(s, χ) with χ primitive mod q"""
    s = complex(s)
    sigma = s.real
    aq = q * (1 + abs(s.imag))
    if sigma >= 1 + eps:
        return constant
    if sigma <= -eps:
        return constant * aq ** (0.5 - sigma)
    return constant * aq ** ((1 - sigma) / 2 + eps)
