"""
The smoothed first moment of quadratic twists at the central point

    S(X; χ) = Σ_{(d, 2N)=1} L^{(2N)}(1/2, χ_{d0}χ) P_{d0,d1}(1/2) h(d/X)

together with its predicted main term a_N X log X + b_N X and the
scan for the first nonvanishing twist L(1/2, χ_{dN}).
"""

import csv
import math

from dataclasses import dataclass, field
from typing import (
    Callable,
    Optional,
    Sequence,
    TextIO,
)

import numpy as np

from pydantic import BaseModel, Field, field_validator, model_validator

from . import logger
from .arith import (
    Psi,
    QuadChar,
    coprime_upto,
    factor_with_table,
    is_squarefree,
    kappa,
    prime_array,
    prime_divisors,
    primes_up_to,
    spf_table,
    squarefree_part,
    squarefree_splits,
    squarefree_table,
)
from .cache import LValueCache
from .correction import CorrectionPolyKey, expand_P_at_half, p_at_half_divisor_sum
from .errors import DomainError, FitError, InconclusiveError
from .lfunc import POLAR_TERM, afe_terms, l_central_afe, total_character
from .parameters import TruncationPolicy
from .special import (
    BUMP_H,
    SmoothWeight,
    ValueWithError,
    digamma,
    mellin_weight,
    numeric_derivative,
)
from .summation import Accumulator, compensated_sum
from .zseries import twisted_l_values

ZETA2 = math.pi**2 / 6

# Laurent data of ζ(1 + 2s) at s = 0
E_MINUS_ONE = 0.5
E_ZERO = float(np.euler_gamma)

# Largest relative deviations of the fitted (a_N, b_N) from the residue values
FIT_TOLERANCE = (0.10, 0.25)

NONVANISH_HEADER = ("N", "D", "re", "im", "abs_error", "certified")


def _is_odd_prime(N: int) -> bool:
    return N > 2 and prime_divisors(N) == (N,)


def _check_modulus(N: int):
    if N != 1 and not _is_odd_prime(N):
        raise DomainError(f"N must be 1 or an odd prime, got {N}")


def default_character(N: int) -> QuadChar:
    """The primitive quadratic character n -> (n/N)"""
    _check_modulus(N)
    return QuadChar.chi_tilde(N) if N > 1 else QuadChar.trivial()


def _window(X: float, h: SmoothWeight, modulus: int) -> tuple[np.ndarray, np.ndarray]:
    """d coprime to `modulus` with h(d/X) > 0, and the weights"""
    lo, hi = h.support
    d = coprime_upto(int(math.floor(hi * X)), modulus)
    weights = h(d / X)
    keep = weights > 0
    return d[keep], weights[keep]


#
# The moment sum
#


def moment_sum_S(
    X: float,
    chi: QuadChar,
    policy: Optional[TruncationPolicy] = None,
    cache: Optional[LValueCache] = None,
    h: SmoothWeight = BUMP_H,
) -> ValueWithError:
    """S(X; χ) by the direct sum over d"""
    if X <= 0:
        raise DomainError(f"moment_sum_S needs X > 0, got {X}")
    policy = policy or TruncationPolicy()
    removed = 2 * chi.odd_conductor
    d, weights = _window(X, h, removed)
    if d.size == 0:
        return ValueWithError.exact(0)

    splits = squarefree_splits(d)
    central = twisted_l_values(0.5, np.array([sp.d0 for sp in splits]), chi, removed, policy, cache=cache)

    terms = np.empty(d.size, dtype=np.complex128)
    error = 0.0
    for i, (split, weight) in enumerate(zip(splits, weights.tolist())):
        factor = p_at_half_divisor_sum(CorrectionPolyKey(split, chi)) * weight
        value = central[split.d0]
        terms[i] = value.value * factor
        error += abs(factor) * value.abs_error

    total, roundoff = compensated_sum(terms, policy.block_size)
    logger.debug("== S(%s) over %d values of d: %s", X, d.size, total)
    return ValueWithError(total, error + roundoff)


def _is_square(m: np.ndarray) -> np.ndarray:
    r = np.rint(np.sqrt(m.astype(np.float64))).astype(np.int64)
    return r * r == m


def moment_sum_split(
    X: float,
    chi: QuadChar,
    policy: Optional[TruncationPolicy] = None,
    h: SmoothWeight = BUMP_H,
) -> tuple[ValueWithError, ValueWithError]:
    """(S_□, S_□̄): expanded terms split by whether n·g·e is a square

    n runs over the smoothed sum, g | 2 over the removed factor at 2
    and e | rad(d1) over the expansion of P(1/2). The polar correction
    of the trivial character goes to the second part.
    """
    policy = policy or TruncationPolicy()
    removed = 2 * chi.odd_conductor
    d, weights = _window(X, h, removed)

    square = Accumulator()
    other = Accumulator()
    error = 0.0
    for split, weight in zip(squarefree_splits(d), weights.tolist()):
        total = total_character(split.d0, chi)
        n, terms, afe_error = afe_terms(total, policy)

        twos = [(1, 1.0)]
        if total(2):
            twos.append((2, -total(2) / math.sqrt(2)))
        key = CorrectionPolyKey(split, chi)
        expansion = [
            (e, (-1) ** len(prime_divisors(e)) * total(e) * w / math.sqrt(e))
            for e, w in expand_P_at_half(key)
        ]
        weight_sum = 0.0
        for g, cg in twos:
            for e, ce in expansion:
                c = cg * ce * weight
                if c == 0:
                    continue
                weight_sum += abs(c)
                mask = _is_square(n * g * e)
                square.add_array(c * terms[mask])
                other.add_array(c * terms[~mask])
                if total.is_trivial:
                    other.add(c * POLAR_TERM)
        error += weight_sum * afe_error

    def _result(acc: Accumulator) -> ValueWithError:
        return ValueWithError(acc.total, acc.roundoff + error)

    return _result(square), _result(other)


#
# T-sums over squarefree d0
#


def t_sum(
    s: complex | float,
    Y: float,
    psi: Optional[QuadChar] = None,
    modulus: int = 1,
    h: SmoothWeight = BUMP_H,
) -> ValueWithError:
    """T(s; Y, ψ) = Σ_{d0 squarefree} ψ(d0) d0^{s/2} h(d0/Y)

    ψ is `psi` times the principal character modulo `modulus`.
    """
    s = complex(s)
    if s.real <= 0:
        raise DomainError(f"t_sum needs Re s > 0, got {s}")
    hi = h.support[1]
    bound = int(math.floor(hi * Y))
    if bound < 1:
        return ValueWithError.exact(0)
    d0 = np.flatnonzero(squarefree_table(bound)).astype(np.int64)
    if modulus > 1:
        d0 = d0[np.gcd(d0, modulus) == 1]
    chars = psi.values(d0) if psi is not None else np.ones(d0.size)
    terms = chars * np.exp((s / 2) * np.log(d0)) * h(d0 / Y)
    total, roundoff = compensated_sum(terms)
    return ValueWithError(total, roundoff)


def t_main_term(s: complex | float, Y: float, modulus: int = 1, h: SmoothWeight = BUMP_H) -> complex:
    """h̃(1 + s/2)/ζ(2) · Π_{p | m}(1 + 1/p)^{-1} · Y^{1 + s/2}"""
    s = complex(s)
    local = math.prod(p / (p + 1) for p in prime_divisors(modulus)) if modulus > 1 else 1.0
    return mellin_weight(h, 1 + s / 2).value / ZETA2 * local * Y ** (1 + s / 2)


def t_residual(
    s: complex | float,
    Y: float,
    modulus: int = 1,
    h: SmoothWeight = BUMP_H,
    eps: float = 0.05,
) -> float:
    """|T - main term| / Y^{1/2 + Re s/2 + ε} for the principal character"""
    s = complex(s)
    t = t_sum(s, Y, None, modulus, h)
    return abs(t.value - t_main_term(s, Y, modulus, h)) / Y ** (0.5 + s.real / 2 + eps)


def t_envelope(s: complex | float, Y: float, conductor: int, eps: float = 0.05) -> float:
    """(c|s|)^{1/2} Y^{1/2 + Re s/2 + ε}, the size of T for non-principal ψ"""
    s = complex(s)
    return math.sqrt(conductor * abs(s)) * Y ** (0.5 + s.real / 2 + eps)


#
# Euler products
#


def _prime_tail(bound: int, exponent: float) -> float:
    """Σ_{p > bound} p^{-exponent}, bounded through the prime number theorem"""
    if exponent <= 1:
        return math.inf
    return 1.3 * bound ** (1 - exponent) / ((exponent - 1) * math.log(bound))


def euler_E0(
    s: complex | float,
    N: int,
    prime_cutoff: Optional[int] = None,
    policy: Optional[TruncationPolicy] = None,
) -> ValueWithError:
    """E0(s) = (4/9)(1 - 2^{-2s-1}) Π_p (1 + 1/p)(1 + p^{-1}(1 - p^{-2s-1})^{-1})^{-1}
    · Π_{p | N} (1 + 1/p)^{-2} (1 + 1/p - p^{-2s-1})
    """
    s = complex(s)
    if s.real <= -0.25:
        raise DomainError(f"E0 needs Re s > -1/4, got {s}")
    _check_modulus(N)
    policy = policy or TruncationPolicy()
    bound = prime_cutoff or policy.prime_cutoff

    p = prime_array(bound).astype(np.float64)
    u = np.exp(-(2 * s + 1) * np.log(p))
    log_product, roundoff = compensated_sum(np.log((1 + 1 / p) / (1 + 1 / (p * (1 - u)))))
    value = 4 / 9 * (1 - 2 ** (-2 * s - 1)) * np.exp(log_product)
    for q in prime_divisors(N) if N > 1 else ():
        value *= (1 + 1 / q) ** -2 * (1 + 1 / q - q ** (-2 * s - 1))

    tail = 4 * _prime_tail(bound, 2 + 2 * s.real)
    if tail > policy.tolerance:
        logger.warning("E0: slow convergence, tail estimate %.3g at prime cutoff %s", tail, bound)
    return ValueWithError(complex(value), abs(value) * (math.expm1(tail) + roundoff))


def e0_closed_form(N: int) -> float:
    """E0(0) = 2/(9ζ(2)) Π_{p | N} (1 + 1/p)^{-2}"""
    _check_modulus(N)
    local = math.prod((1 + 1 / p) ** -2 for p in prime_divisors(N)) if N > 1 else 1.0
    return 2 / (9 * ZETA2) * local


def euler_E1(s: complex | float, g: int) -> complex:
    """E1(s; g) = Π_{p | g, p != 2} (1 + 1/p)^{-2} (1 - p^{-2s-1})^{-1} (1 + 1/p - p^{-2s-1})"""
    if g == 0 or not is_squarefree(abs(g)):
        raise DomainError(f"E1 needs a nonzero squarefree g, got {g}")
    s = complex(s)
    value = complex(1)
    for p in prime_divisors(abs(g)) if abs(g) > 1 else ():
        if p == 2:
            continue
        u = p ** (-2 * s - 1)
        value *= (1 + 1 / p) ** -2 / (1 - u) * (1 + 1 / p - u)
    return value


def h_function(s: complex | float, N: int = 1, d1_cutoff: int = 1000) -> ValueWithError:
    """H(s) = Σ_{(d1, 2N)=1} d1^{-2-s} Σ_{f1 | d1} Π_{p | 2f1} (1 - p^{-s-1} E1(s; p))

    The divisor sum factors as c_2 Π_{p^a || d1} (1 + a c_p).
    """
    s = complex(s)
    if s.real < 0:
        raise DomainError(f"H needs Re s >= 0, got {s}")
    _check_modulus(N)
    spf = spf_table(d1_cutoff)
    local = {p: 1 - p ** (-s - 1) * euler_E1(s, p) for p in primes_up_to(d1_cutoff)}
    c2 = local.get(2, 1 - 2 ** (-s - 1))

    terms = []
    for d1 in coprime_upto(d1_cutoff, 2 * N).tolist():
        value = c2 * d1 ** (-2 - s)
        for p, a in factor_with_table(d1, spf):
            value *= 1 + a * local[p]
        terms.append(value)
    total, roundoff = compensated_sum(np.array(terms))

    # Π (1 + a|c_p|) <= 2.62 d1^{1/2}
    sigma = s.real
    tail = abs(c2) * 2.62 * d1_cutoff ** (-0.5 - sigma) / (0.5 + sigma)
    return ValueWithError(total, tail + roundoff)


#
# Square classes of the main term
#


@dataclass(frozen=True)
class ResidueClass:
    """Data of the d0 = ell (mod 4) part of the main term"""

    ell: int
    kappa: int
    c0: int

    @property
    def even_squares(self) -> bool:
        """Whether the total character is nonzero at 2"""
        return self.c0 == 1


def residue_classes(chi: QuadChar) -> tuple[ResidueClass, ResidueClass]:
    classes = []
    for ell in (1, 3):
        d0 = next(d for d in range(ell, 8 * chi.odd_conductor + 8, 4) if math.gcd(d, chi.odd_conductor) == 1)
        total = total_character(d0, chi)
        classes.append(ResidueClass(ell, kappa(total), total.eight_effective.conductor))
    return classes[0], classes[1]


def square_class_E(
    s: complex | float,
    chi: QuadChar,
    cls: ResidueClass,
    prime_cutoff: int = 20_000,
) -> complex:
    """Euler product of the square-class sum over j, g and the d0 density

    E(s) = τ(s)(1 - δ 2^{-1-s}) Π_{p odd}(1 - p^{-1-2s}/(p+1))
           · Π_{p | N} (1 + 1/p)^{-1}(1 - p^{-1-2s})/(1 - p^{-1-2s}/(p+1))

    with δ = 1 when even squares survive and τ(s) = 1 - (1 - δ) 2^{-1-2s}.
    """
    s = complex(s)
    delta = 1 if cls.even_squares else 0
    value = (1 - (1 - delta) * 2 ** (-1 - 2 * s)) * (1 - delta * 2 ** (-1 - s))
    p = prime_array(prime_cutoff)[1:].astype(np.float64)
    u = np.exp(-(1 + 2 * s) * np.log(p))
    log_product, _ = compensated_sum(np.log(1 - u / (p + 1)))
    value *= np.exp(log_product)
    N = chi.odd_conductor
    for q in prime_divisors(N) if N > 1 else ():
        uq = q ** (-1 - 2 * s)
        value *= q / (q + 1) * (1 - uq) / (1 - uq / (q + 1))
    return complex(value)


def square_class_H(s: complex | float, N: int, prime_cutoff: int = 20_000) -> complex:
    """Π_{p ∤ 2N} (1 - p^{-2-s} ε_p(s)) / (1 - p^{-2-s})², ε_p(s) = p^{-s}/(p + 1 - p^{-1-2s})

    The sum over d1 of the expanded P(1/2) against the d0 density.
    """
    s = complex(s)
    p = prime_array(prime_cutoff)[1:]
    if N > 1:
        p = p[p % N != 0]
    p = p.astype(np.float64)
    x = np.exp(-(2 + s) * np.log(p))
    eps = np.exp(-s * np.log(p)) / (p + 1 - np.exp(-(1 + 2 * s) * np.log(p)))
    log_product, _ = compensated_sum(np.log((1 - x * eps) / (1 - x) ** 2))
    return complex(np.exp(log_product))


def _derivative_at_zero(f: Callable[[float], complex]) -> float:
    return numeric_derivative(f, 0.0).value.real


def residue_coefficients(
    N: int,
    h: SmoothWeight = BUMP_H,
    chi: Optional[QuadChar] = None,
    policy: Optional[TruncationPolicy] = None,
) -> tuple[float, float]:
    """(a_N, b_N) of the main term a_N X log X + b_N X

    Each class d0 = ell (mod 4) contributes the residue at s = 0 of
    (2/(3ζ(2))) 𝒢_κ(s) ζ(1 + 2s) A(s) with
    A(s) = h̃(1 + s/2) (c0 N)^{s/2} X^{1 + s/2} E(s) H(s) and
    𝒢_κ(s) = π^{-s/2} Γ((1/2 + s + κ)/2) / (Γ((1/2 + κ)/2) s).
    """
    _check_modulus(N)
    chi = chi or default_character(N)
    policy = policy or TruncationPolicy()
    cutoff = policy.prime_cutoff

    h1 = mellin_weight(h, 1).real
    dh1 = mellin_weight(h, 1, derivative=1).real
    H0 = square_class_H(0, N, cutoff).real
    dH = _derivative_at_zero(lambda x: square_class_H(x, N, cutoff))
    prefactor = 2 / (3 * ZETA2)

    a_N = 0.0
    b_N = 0.0
    for cls in residue_classes(chi):
        E0 = square_class_E(0, chi, cls, cutoff).real
        dE = _derivative_at_zero(lambda x: square_class_E(x, chi, cls, cutoff))
        g0 = 0.5 * digamma((0.5 + cls.kappa) / 2).real - 0.5 * math.log(math.pi)
        A0 = h1 * E0 * H0
        # A'(0) = A0 (log X / 2 + log(c0 N) / 2 + h̃'(1)/(2h̃(1)) + E'/E + H'/H)
        log_derivative = 0.5 * math.log(cls.c0 * N) + 0.5 * dh1 / h1 + dE / E0 + dH / H0
        a_N += prefactor * E_MINUS_ONE * A0 * 0.5
        b_N += prefactor * ((E_ZERO + g0 * E_MINUS_ONE) * A0 + E_MINUS_ONE * A0 * log_derivative)
        logger.debug("== Class %s (mod 4): κ = %s, c0 = %s, E(0) = %s", cls.ell, cls.kappa, cls.c0, E0)
    return a_N, b_N


#
# Fit against the direct sums
#


class MomentReport(BaseModel, extra="forbid", frozen=True):
    N: int = Field(title="Modulus", description="Odd prime conductor of χ")
    X_grid: list[float] = Field(title="Grid", description="Values of X, strictly increasing")
    S_values: list[float] = Field(title="Moment sums", description="S(X; χ) on the grid")
    S_errors: list[float] = Field(title="Errors", description="Error bounds of the moment sums")
    fitted_aN: float = Field(title="Fitted a_N")
    fitted_bN: float = Field(title="Fitted b_N")
    residue_aN: float = Field(title="Residue a_N")
    residue_bN: float = Field(title="Residue b_N")
    residual_envelope: float = Field(
        title="Residual envelope",
        description="max |S - fit| / X^0.9 over the grid",
    )

    @field_validator("X_grid")
    @classmethod
    def _increasing(cls, grid: list[float]) -> list[float]:
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("X grid must be strictly increasing")
        return grid

    @model_validator(mode="after")
    def _finite(self) -> "MomentReport":
        if not (math.isfinite(self.fitted_aN) and math.isfinite(self.fitted_bN)):
            raise ValueError("Fitted coefficients must be finite")
        return self

    @property
    def relative_deviation(self) -> tuple[float, float]:
        return (
            abs(self.fitted_aN - self.residue_aN) / abs(self.residue_aN),
            abs(self.fitted_bN - self.residue_bN) / abs(self.residue_bN),
        )

    @property
    def within_tolerance(self) -> bool:
        return all(dev <= tol for dev, tol in zip(self.relative_deviation, FIT_TOLERANCE))


def fit_moment(
    N: int,
    X_grid: Sequence[float],
    policy: Optional[TruncationPolicy] = None,
    cache: Optional[LValueCache] = None,
    chi: Optional[QuadChar] = None,
) -> MomentReport:
    """Least squares fit of S(X) against X log X and X"""
    grid = np.asarray(X_grid, dtype=np.float64)
    if grid.size < 4:
        raise FitError(f"Fit needs at least 4 grid points, got {grid.size}")
    if np.any(np.diff(grid) <= 0):
        raise FitError("Fit grid must be strictly increasing")
    if grid[-1] / grid[0] < 16:
        raise FitError(f"Fit grid spans a factor {grid[-1] / grid[0]:.3g} < 16")

    chi = chi or default_character(N)
    policy = policy or TruncationPolicy()
    values = [moment_sum_S(float(x), chi, policy, cache) for x in grid]
    S = np.array([v.real for v in values])

    design = np.column_stack((grid * np.log(grid), grid))
    if np.linalg.cond(design / grid[:, None]) > 1e12:
        raise FitError("Ill-conditioned fit grid")
    (a, b), *_ = np.linalg.lstsq(design, S, rcond=None)
    residual = S - design @ np.array([a, b])

    residue_a, residue_b = residue_coefficients(N, chi=chi, policy=policy)
    report = MomentReport(
        N=N,
        X_grid=grid.tolist(),
        S_values=S.tolist(),
        S_errors=[v.abs_error for v in values],
        fitted_aN=float(a),
        fitted_bN=float(b),
        residue_aN=residue_a,
        residue_bN=residue_b,
        residual_envelope=float(np.max(np.abs(residual) / grid**0.9)),
    )
    logger.info("Moment fit N = %s: a = %.6g (residue %.6g), b = %.6g (residue %.6g)", N, a, residue_a, b, residue_b)
    return report


#
# Non-vanishing
#


@dataclass(frozen=True)
class NonvanishRecord:
    N: int
    D_of_N: int
    l_value: ValueWithError
    certified: bool
    margins: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.certified and not self.l_value.certified_nonzero(1.0):
            raise DomainError(f"Record for N = {self.N} is not certified nonzero")


def kernel_central_value(
    kernel: int,
    policy: TruncationPolicy,
    cache: Optional[LValueCache] = None,
) -> ValueWithError:
    """L(1/2, χ_k) for a squarefree kernel k, even kernels 2d' as χ_{d'}ψ₂"""
    odd, psi = (kernel // 2, Psi.TWO) if kernel % 2 == 0 else (kernel, Psi.ONE)
    if cache is not None:
        return cache.central_value(odd, QuadChar.trivial(), psi, policy).value
    return l_central_afe(odd, QuadChar.trivial(), psi, policy)


def nonvanish_scan(
    N: int,
    d_max: int = 1000,
    policy: Optional[TruncationPolicy] = None,
    cache: Optional[LValueCache] = None,
) -> NonvanishRecord:
    """First d with L(1/2, χ_{dN}) certified nonzero"""
    if not _is_odd_prime(N):
        raise DomainError(f"N must be an odd prime, got {N}")
    if d_max < 1:
        raise DomainError(f"d_max must be positive, got {d_max}")
    policy = policy or TruncationPolicy()

    margins: list[float] = []
    for d in range(1, d_max + 1):
        value = kernel_central_value(squarefree_part(d * N), policy, cache)
        if value.certified_nonzero(policy.certify_factor):
            return NonvanishRecord(N, d, value, True, tuple(margins))
        margins.append(abs(value.value) / value.abs_error if value.abs_error > 0 else math.inf)
        logger.debug("== N = %s, d = %s: |L| = %.3g not certified", N, d, abs(value.value))
    raise InconclusiveError(f"No certified nonvanishing twist for N = {N} with d <= {d_max}", tuple(margins))


def nonvanish_sweep(
    nmax: int,
    d_max: int = 1000,
    policy: Optional[TruncationPolicy] = None,
    cache: Optional[LValueCache] = None,
) -> list[NonvanishRecord]:
    primes = [p for p in primes_up_to(nmax) if p > 2]
    records = []
    for i, N in enumerate(primes, start=1):
        records.append(nonvanish_scan(N, d_max, policy, cache))
        logger.progress("nonvanish", i, len(primes))
    return records


def write_nonvanish_csv(records: Sequence[NonvanishRecord], fh: TextIO):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(NONVANISH_HEADER)
    for r in records:
        v = r.l_value
        writer.writerow((r.N, r.D_of_N, repr(v.real), repr(v.imag), repr(v.abs_error), int(r.certified)))
