"""
The double Dirichlet series Z(s, w; χ, χ').

Z is summed in its two forms: over d with twisted L-values in s, and
over m with L-values in w after switching the order of summation.
The first functional equation is evaluated from its explicit pre-sieve
form so both sides can be compared numerically.
"""

import cmath
import math

from dataclasses import dataclass, field, replace
from typing import (
    Callable,
    Literal,
    Optional,
)

import numpy as np

from . import logger
from .arith import (
    Psi,
    QuadChar,
    SquarefreeSplit,
    coprime_upto,
    factorize,
    jacobi,
    kappa,
    prime_divisors,
    squarefree_split,
    squarefree_splits,
)
from .cache import LValueCache
from .correction import (
    DEFAULT_Q_VARIANT,
    CorrectionPolyKey,
    Variant,
    eval_P,
    eval_Q,
)
from .errors import DomainError, PoleError, RegionError
from .lfunc import (
    afe_central,
    family_values,
    l_value_hurwitz,
    remove_euler_factors,
)
from .parameters import TruncationPolicy
from .special import ValueWithError, loggamma
from .summation import blocks, compensated_sum, map_blocks

type Region = Literal["direct", "swapped"]
type Bracket = Literal["sieved", "kappa_hat"]
type TermFunction = Callable[[int], ValueWithError]

POLAR_GUARD = 1e-3

# Euler products are used right of this line
EULER_LINE = 1.5

# Characters per evaluation block on the Hurwitz route
L_BLOCK = 64


def _is_prime_or_one(n: int) -> bool:
    if n == 1:
        return True
    if n <= 0:
        return False
    fact = factorize(n)
    return len(fact) == 1 and fact[0][1] == 1


@dataclass(frozen=True)
class ZPoint:
    s: complex
    w: complex
    chi: QuadChar = field(default_factory=QuadChar.trivial)
    chi_prime: QuadChar = field(default_factory=QuadChar.trivial)
    M: int = 1
    N: int = 1

    def __post_init__(self):
        object.__setattr__(self, "s", complex(self.s))
        object.__setattr__(self, "w", complex(self.w))
        for name, n in (("M", self.M), ("N", self.N)):
            if n % 2 == 0 or not _is_prime_or_one(n):
                raise DomainError(f"{name} must be an odd prime or 1, got {n}")
        lcm = math.lcm(self.M, self.N)
        for name, c in (("chi", self.chi), ("chi_prime", self.chi_prime)):
            if lcm % c.odd_conductor:
                raise DomainError(f"Conductor of {name} ({c}) does not divide 8*{lcm}")

    @property
    def removed(self) -> int:
        """Euler factors at the primes of 2MN are removed"""
        return 2 * self.M * self.N

    def at(self, s: complex | float, w: complex | float) -> "ZPoint":
        return replace(self, s=complex(s), w=complex(w))


#
# Regions
#


def convexity_exponent(sigma: float) -> float:
    """Exponent e with L(σ + it, χ_{d0}χ) << d0^{e + ε}"""
    if sigma > 1:
        return 0.0
    if sigma > 0:
        return (1 - sigma) / 2
    return 0.5 - sigma


def check_region(
    s: complex | float,
    w: complex | float,
    region: Region = "direct",
    margin: float = 0.0,
) -> float:
    """Check absolute convergence of the d-sum ("direct") or the m-sum ("swapped")

    Returns the decay exponent of the terms, which exceeds 1 + margin.
    """
    s, w = complex(s), complex(w)
    if region == "direct":
        inner, outer, a, b = s.real, w.real, "s", "w"
    else:
        inner, outer, a, b = w.real, s.real, "w", "s"

    if inner <= 0:
        inequality, lhs, rhs = f"Re {a} + Re {b} > 3/2", inner + outer, 1.5
    elif inner <= 1:
        inequality, lhs, rhs = f"Re {a}/2 + Re {b} > 3/2", inner / 2 + outer, 1.5
    else:
        inequality, lhs, rhs = f"Re {b} > 1", outer, 1.0

    if lhs - rhs <= margin:
        raise RegionError(
            f"Outside the {region} convergence region at (s, w) = ({s}, {w}): "
            f"{inequality} fails with margin {margin} (lhs = {lhs:.6g})",
        )
    return outer - convexity_exponent(inner)


def check_polar(s: complex | float, w: complex | float, guard: float = POLAR_GUARD):
    s, w = complex(s), complex(w)
    for line, dist in (("s = 1", abs(s - 1)), ("w = 1", abs(w - 1)), ("s + w = 3/2", abs(s + w - 1.5))):
        if dist < guard:
            raise PoleError(f"(s, w) = ({s}, {w}) is within {guard} of the polar line {line}")


def tail_bound(n: np.ndarray, values: np.ndarray, exponent: float) -> float:
    """Tail of a truncated sum whose terms decay like n^{-exponent}

    The constant is read from the upper half of the computed terms.
    """
    if n.size == 0:
        return 0.0
    if exponent <= 1:
        return math.inf
    upper = n > n[-1] / 2
    scaled = np.abs(values[upper]) * np.power(n[upper].astype(np.float64), exponent)
    const = 2 * float(np.max(scaled))
    last = float(n[-1])
    return const * last ** (1 - exponent) / (exponent - 1)


#
# Twisted L-values
#


def twisted_l_values(
    s: complex | float,
    n0s: np.ndarray,
    twist: QuadChar,
    P: int,
    policy: TruncationPolicy,
    *,
    tilde: bool = False,
    cache: Optional[LValueCache] = None,
) -> dict[int, ValueWithError]:
    """L^{(P)}(s, χ_{n0}·twist), or L^{(P)}(s, χ̃_{n0}·twist), keyed by n0"""
    s = complex(s)
    n0s = np.unique(np.asarray(n0s, dtype=np.int64))
    if n0s.size == 0:
        return {}

    if s.real >= EULER_LINE:
        values = family_values(s, n0s, twist, P, policy, tilde=tilde)
        return dict(zip(n0s.tolist(), values))

    central = s == 0.5
    chi_part = QuadChar.chi_tilde(twist.odd_conductor)
    psi = twist.eight_effective

    def single(n0: int) -> ValueWithError:
        base = QuadChar.chi_tilde(n0) if tilde else QuadChar.chi(n0)
        char = base * twist
        if central and cache is not None and not tilde:
            value = cache.central_value(n0, chi_part, psi, policy).value
        elif central:
            value = afe_central(char, policy)
        else:
            value = l_value_hurwitz(s, char, policy.hurwitz_terms)
        return remove_euler_factors(value, s, char, P)

    def evaluate(a: int, b: int) -> list[ValueWithError]:
        return [single(n0) for n0 in n0s[a:b].tolist()]

    logger.debug("== %d twisted L-values at s = %s", n0s.size, s)
    values: list[ValueWithError] = []
    for part in map_blocks(evaluate, blocks(0, n0s.size, L_BLOCK), policy.threads):
        values.extend(part)
    return dict(zip(n0s.tolist(), values))


def _assemble(
    n: np.ndarray,
    values: np.ndarray,
    errors: np.ndarray,
    exponent: float,
    policy: TruncationPolicy,
) -> ValueWithError:
    total, roundoff = compensated_sum(values, policy.block_size)
    tail = tail_bound(n, values, exponent)
    return ValueWithError(total, float(np.sum(errors)) + roundoff + tail)


def _evaluate_terms(
    n: np.ndarray,
    term: TermFunction,
    policy: TruncationPolicy,
) -> tuple[np.ndarray, np.ndarray]:
    def evaluate(a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
        vals = np.zeros(b - a, dtype=np.complex128)
        errs = np.zeros(b - a, dtype=np.float64)
        for i in range(a, b):
            v = term(i)
            vals[i - a], errs[i - a] = v.value, v.abs_error
        return vals, errs

    parts = list(map_blocks(evaluate, blocks(0, n.size, policy.block_size), policy.threads))
    if not parts:
        return np.zeros(0, dtype=np.complex128), np.zeros(0)
    return np.concatenate([v for v, _ in parts]), np.concatenate([e for _, e in parts])


#
# The two series
#


def z_direct(
    p: ZPoint,
    policy: Optional[TruncationPolicy] = None,
    *,
    cutoff: Optional[int] = None,
    cache: Optional[LValueCache] = None,
    check: bool = True,
) -> ValueWithError:
    """Σ_{(d,2MN)=1} L^{(2MN)}(s, χ_{d0}χ) χ'(d0) P_{d0,d1}(s) d^{-w}, d <= cutoff"""
    policy = policy or TruncationPolicy()
    s, w = p.s, p.w
    check_polar(s, w)
    if check:
        exponent = check_region(s, w, "direct", policy.tail_exponent_margin)
    else:
        exponent = w.real - convexity_exponent(s.real)

    d = coprime_upto(cutoff or policy.d_cutoff, p.removed)
    splits = squarefree_splits(d)
    d0 = np.array([sp.d0 for sp in splits], dtype=np.int64)
    lvals = twisted_l_values(s, d0, p.chi, p.removed, policy, cache=cache)
    chi_prime = p.chi_prime.values(d0)
    log_d = np.log(d.astype(np.float64))

    def term(i: int) -> ValueWithError:
        c = int(chi_prime[i])
        if c == 0:
            return ValueWithError.exact(0)
        split = splits[i]
        poly = 1.0 if split.d1 == 1 else eval_P(CorrectionPolyKey(split, p.chi), s)
        return lvals[split.d0] * (c * poly * cmath.exp(-w * log_d[i]))

    with logger.timed(f"z_direct over {d.size} terms"):
        values, errors = _evaluate_terms(d, term, policy)
    return _assemble(d, values, errors, exponent, policy)


def _swapped_terms(
    s: complex,
    w: complex,
    first: QuadChar,
    second: QuadChar,
    removed: int,
    policy: TruncationPolicy,
    q_variant: Variant,
    cutoff: Optional[int],
) -> tuple[np.ndarray, list[SquarefreeSplit], np.ndarray, np.ndarray]:
    m = coprime_upto(cutoff or policy.m_cutoff, removed)
    splits = squarefree_splits(m)
    m0 = np.array([sp.d0 for sp in splits], dtype=np.int64)
    lvals = twisted_l_values(w, m0, second, removed, policy, tilde=True)
    chi_m = first.values(m)
    log_m = np.log(m.astype(np.float64))

    def term(i: int) -> ValueWithError:
        c = int(chi_m[i])
        if c == 0:
            return ValueWithError.exact(0)
        split = splits[i]
        poly = 1.0 if split.d1 == 1 else eval_Q(CorrectionPolyKey(split, second, q_variant), w)
        return lvals[split.d0] * (c * poly * cmath.exp(-s * log_m[i]))

    values, errors = _evaluate_terms(m, term, policy)
    return m, splits, values, errors


def z_swapped(
    p: ZPoint,
    policy: Optional[TruncationPolicy] = None,
    *,
    q_variant: Variant = DEFAULT_Q_VARIANT,
    cutoff: Optional[int] = None,
    check: bool = True,
) -> ValueWithError:
    """Σ_{(m,2MN)=1} L^{(2MN)}(w, χ̃_{m0}χ') χ(m) Q_{m0,m1}(w) m^{-s}, m <= cutoff"""
    policy = policy or TruncationPolicy()
    s, w = p.s, p.w
    check_polar(s, w)
    if check:
        exponent = check_region(s, w, "swapped", policy.tail_exponent_margin)
    else:
        exponent = s.real - convexity_exponent(w.real)

    with logger.timed("z_swapped"):
        m, _, values, errors = _swapped_terms(s, w, p.chi, p.chi_prime, p.removed, policy, q_variant, cutoff)
    return _assemble(m, values, errors, exponent, policy)


#
# Coefficient functions
#


def coeff_K(P: int, w: complex | float, chi_star: QuadChar) -> complex:
    """K_P(w; χ*) = Π_{p|P} (1 - χ*(p) p^{w-1})^{-1} (1 - χ*(p) p^{-w})"""
    w = complex(w)
    value = complex(1.0)
    for p in prime_divisors(P) if P > 1 else ():
        c = chi_star(p)
        if c == 0:
            continue
        den = 1 - c * cmath.exp((w - 1) * math.log(p))
        if abs(den) < 1e-8:
            raise PoleError(f"K_{P} has a pole at w = {w} (p = {p})")
        value *= (1 - c * cmath.exp(-w * math.log(p))) / den
    return value


def coeff_F_G(P: int, w: complex | float, chi_star: QuadChar) -> tuple[complex, complex]:
    """(F_P(w), G_P(w)) with K_p(w; χ̃_{m0}χ*) = F_p + (p/m0) G_p"""
    if P == 1:
        return complex(1.0), complex(0.0)
    w = complex(w)
    c1 = chi_star(P)
    c2 = chi_star(P * P)
    logp = math.log(P)
    p2 = float(P * P)
    den = c2 * cmath.exp(2 * w * logp) - p2
    if abs(den) < 1e-8 * p2:
        raise PoleError(f"F_{P}, G_{P} have a pole at w = {w}")
    F = (c2 * P - p2) / den
    G = c1 * (cmath.exp((2 - w) * logp) - cmath.exp((1 + w) * logp)) / den
    return F, G


def coeff_A(n: int, chi: QuadChar, w: complex | float, M: int, N: int) -> complex:
    """A_n(w) for n in {1, M, N, MN}"""
    FM, GM = coeff_F_G(M, w, chi)
    FN, GN = coeff_F_G(N, w, chi)
    # labels coincide when M = N, and so do the products
    table = {
        M * N: GM * GN,
        N: FM * GN,
        M: FN * GM,
        1: FM * FN,
    }
    if n not in table:
        raise DomainError(f"A_n needs n in {{1, {M}, {N}, {M * N}}}, got {n}")
    return table[n]


def k_four_term(m0: int, w: complex | float, chi_star: QuadChar, M: int, N: int) -> complex:
    """Σ_{n | MN} χ_n(m0) A_n(w), the expansion of K_{MN}(w; χ̃_{m0}χ*)"""
    terms = ((1, 1), (M, jacobi(M, m0)), (N, jacobi(N, m0)), (M * N, jacobi(M * N, m0)))
    FM, GM = coeff_F_G(M, w, chi_star)
    FN, GN = coeff_F_G(N, w, chi_star)
    products = (FM * FN, FN * GM, FM * GN, GM * GN)
    return sum(c * a for (_, c), a in zip(terms, products))


#
# First functional equation
#


def _cot(w: complex) -> complex:
    half = cmath.pi * w / 2
    sin = cmath.sin(half)
    if abs(sin) < 1e-8:
        raise PoleError(f"cot(πw/2) has a pole at w = {w}")
    return cmath.cos(half) / sin


def _gamma_prefactor(w: complex, conductor: int) -> complex:
    """(1/2) π^{w-1/2} Γ((1-w)/2)/Γ(w/2) C^{1/2-w}"""
    return 0.5 * cmath.exp(
        (w - 0.5) * math.log(math.pi)
        + loggamma((1 - w) / 2)
        - loggamma(w / 2)
        + (0.5 - w) * math.log(conductor),
    )


def funceq1_rhs(
    p: ZPoint,
    psi: Psi = Psi.ONE,
    psi_prime: Psi = Psi.ONE,
    policy: Optional[TruncationPolicy] = None,
    *,
    q_variant: Variant = DEFAULT_Q_VARIANT,
    bracket: Bracket = "sieved",
    cutoff: Optional[int] = None,
) -> ValueWithError:
    """Right-hand side of the first functional equation before sieving in n | MN

    Z(s, w; χψ, χ'ψ') = (1/2) π^{w-1/2} Γ((1-w)/2)/Γ(w/2) C'^{1/2-w}
        Σ_m K_{2MN}(w; χ̃_{m0}χ'ψ') S(s, w; m, χψ) [cotangent bracket]
    """
    policy = policy or TruncationPolicy()
    s, w = p.s, p.w
    if s.real < 3 or not 1 < w.real <= 2.5:
        raise RegionError(f"Functional equation check needs Re s >= 3 and 1 < Re w <= 5/2, got ({s}, {w})")
    check_polar(s, w)
    cot = _cot(w)

    first = p.chi.twist(psi)
    second = p.chi_prime.twist(psi_prime).canonical()
    k_prime = kappa(second)
    prefactor = _gamma_prefactor(w, second.conductor)

    m, splits, values, errors = _swapped_terms(
        s + w - 0.5,
        1 - w,
        first,
        second,
        p.removed,
        policy,
        q_variant,
        cutoff,
    )

    weights = np.zeros(m.size, dtype=np.complex128)
    for i, split in enumerate(splits):
        if values[i] == 0 and errors[i] == 0:
            continue
        m0 = split.d0
        x_m = QuadChar.chi_tilde(m0) * second
        if bracket == "sieved":
            sign = Psi.MINUS_ONE(m0)
            b = (1 + sign) * cot**k_prime + (1 - sign) * cot ** (1 - k_prime)
        else:
            b = 2 * cot ** kappa(x_m)
        weights[i] = coeff_K(p.removed, w, x_m) * b

    weighted = prefactor * weights * values
    return _assemble(m, weighted, abs(prefactor) * np.abs(weights) * errors, s.real, policy)


def s_term(
    s: complex | float,
    w: complex | float,
    m: int,
    chi_star: QuadChar,
    x_prime: QuadChar,
    M: int = 1,
    N: int = 1,
    policy: Optional[TruncationPolicy] = None,
    *,
    q_variant: Variant = DEFAULT_Q_VARIANT,
) -> ValueWithError:
    """S(s, w; m, χ*) = L^{(2MN)}(1-w, χ̃_{m0}X') χ*(m) Q_{m0,m1}^{(X')}(1-w) m^{-(s+w-1/2)}"""
    policy = policy or TruncationPolicy()
    s, w = complex(s), complex(w)
    removed = 2 * M * N
    if m <= 0 or math.gcd(m, removed) != 1:
        raise DomainError(f"S(s, w; m) needs m coprime to {removed}, got {m}")
    split = squarefree_split(m)
    char = QuadChar.chi_tilde(split.d0) * x_prime
    z = 1 - w
    if z.real >= EULER_LINE:
        value = family_values(z, np.array([split.d0]), x_prime, removed, policy, tilde=True)[0]
    else:
        value = remove_euler_factors(l_value_hurwitz(z, char, policy.hurwitz_terms), z, char, removed)
    poly = 1.0 if split.d1 == 1 else eval_Q(CorrectionPolyKey(split, x_prime, q_variant), z)
    return value * (chi_star(m) * poly * cmath.exp(-(s + w - 0.5) * math.log(m)))


def sum_s_terms(
    s: complex | float,
    w: complex | float,
    chi_star: QuadChar,
    x_prime: QuadChar,
    M: int = 1,
    N: int = 1,
    policy: Optional[TruncationPolicy] = None,
    *,
    q_variant: Variant = DEFAULT_Q_VARIANT,
    cutoff: Optional[int] = None,
) -> ValueWithError:
    """Σ_{(m,2MN)=1} S(s, w; m, χ*) term by term"""
    policy = policy or TruncationPolicy()
    s, w = complex(s), complex(w)
    m = coprime_upto(cutoff or policy.m_cutoff, 2 * M * N)
    values = np.zeros(m.size, dtype=np.complex128)
    errors = np.zeros(m.size)
    for i, n in enumerate(m.tolist()):
        v = s_term(s, w, n, chi_star, x_prime, M, N, policy, q_variant=q_variant)
        values[i], errors[i] = v.value, v.abs_error
    exponent = (s + w - 0.5).real - convexity_exponent((1 - w).real)
    return _assemble(m, values, errors, exponent, policy)


#
# Convexity probe
#


def convexity_probe(
    p: ZPoint,
    eps: float = 0.25,
    policy: Optional[TruncationPolicy] = None,
    cache: Optional[LValueCache] = None,
) -> float:
    """|Z(1/2 + it, 1 + ε)| / [(MN)^ε k^{1/4+ε} (1+|s|)^{1/4+ε}] with a truncated d-sum"""
    if abs(p.s.real - 0.5) > 1e-12 or abs(p.w.real - 1 - eps) > 1e-12:
        raise DomainError(f"Convexity probe needs Re s = 1/2 and Re w = 1 + {eps}, got ({p.s}, {p.w})")
    value = z_direct(p, policy, cache=cache, check=False)
    k = p.chi.odd_conductor
    envelope = (p.M * p.N) ** eps * k ** (0.25 + eps) * (1 + abs(p.s)) ** (0.25 + eps)
    ratio = abs(value.value) / envelope
    logger.debug("== Convexity probe M=%s N=%s: ratio %.4g", p.M, p.N, ratio)
    return ratio


#
# Sum-switch twists and coefficient bounds
#


def alternate_character(n: int) -> QuadChar:
    """χ̃_n for n > 1, the character ψ₋₁ otherwise"""
    if n > 1:
        return QuadChar.chi_tilde(n)
    return QuadChar(1, Psi.MINUS_ONE, True)


def twist_pairs(M: int, N: int) -> list[tuple[QuadChar, QuadChar]]:
    """The four (χ, χ') pairs used by the sum-switch check"""
    firsts = (QuadChar.trivial(), alternate_character(N))
    seconds = (QuadChar.trivial(), alternate_character(M))
    return [(a, b) for a in firsts for b in seconds]


@dataclass(frozen=True)
class CoefficientBound:
    """Upper bounds β << M^a N^b and γ << M^c N^d, None when the coefficient vanishes"""

    pair: tuple[str, str]
    equal_moduli: bool
    beta: Optional[tuple[float, float]]
    gamma: Optional[tuple[int, int]]

    def evaluate(self, M: int, N: int) -> tuple[float, float]:
        if self.beta is None or self.gamma is None:
            return 0.0, 0.0
        return (
            M ** self.beta[0] * N ** self.beta[1],
            float(M ** self.gamma[0] * N ** self.gamma[1]),
        )


_PAIRS = (
    ("rho", "rho'"),
    ("rho", "psi1"),
    ("psi1", "rho'"),
    ("psi1", "psi1"),
    ("psi1", "rho'rho"),
    ("psi1", "rho"),
)

_DISTINCT = (
    ((0.0, 0.0), (1, 1)),
    ((-0.5, 0.0), (2, 1)),
    ((0.0, -0.5), (1, 1)),
    ((-0.5, -0.5), (2, 1)),
    ((0.0, -1.0), (1, 2)),
    ((-0.5, -1.0), (2, 2)),
)


def coefficient_bound_table() -> list[CoefficientBound]:
    """Bounds of the coefficients in the functional equation at the central point"""
    rows = [
        CoefficientBound(pair, False, beta, gamma) for pair, (beta, gamma) in zip(_PAIRS, _DISTINCT)
    ]
    rows.append(CoefficientBound(_PAIRS[0], True, (0.0, 0.0), (0, 2)))
    rows.extend(CoefficientBound(pair, True, None, None) for pair in _PAIRS[1:])
    return rows
