"""
Verification suites

Each suite compares two independent routes to the same quantity and
reports how many checks stayed under the suite threshold.
"""

from dataclasses import dataclass
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
    jacobi,
    kronecker,
    odd_squarefree_upto,
    reciprocity_flip,
)
from .correction import DEFAULT_Q_VARIANT, Q_VARIANTS, Variant, reflection_suite
from .errors import InconclusiveError
from .lfunc import l_central_afe, l_value_hurwitz, total_character
from .parameters import TruncationPolicy
from .zseries import (
    ZPoint,
    coeff_F_G,
    coeff_K,
    funceq1_rhs,
    k_four_term,
    twist_pairs,
    z_direct,
    z_swapped,
)

type Suite = Literal["reflection", "q-variant", "sum-switch", "funceq", "kfg", "reciprocity", "afe"]

SUITES: tuple[Suite, ...] = ("reflection", "q-variant", "sum-switch", "funceq", "kfg", "reciprocity", "afe")

THRESHOLDS: dict[Suite, float] = {
    "reflection": 1e-10,
    "q-variant": 1e-4,
    "sum-switch": 1e-4,
    "funceq": 1e-3,
    "kfg": 1e-12,
    "reciprocity": 0.0,
    "afe": 1e-8,
}

# Moduli of the sum-switch grid
SWITCH_MODULI = (1, 3, 5)

SWITCH_POINT = (3.0, 3.0)
FUNCEQ_POINT = (3.0, 2.25)

KFG_PRIMES = (3, 5, 7, 11, 13)


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    passed: int
    total: int
    max_residual: float
    winner: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.passed == self.total

    def summary(self) -> str:
        line = f"{self.suite}: {self.passed}/{self.total} pass, max residual {self.max_residual:.3e}"
        if self.winner:
            line += f", winner {self.winner}"
        return line


def _result(suite: Suite, residuals: list[float], winner: Optional[str] = None) -> SuiteResult:
    threshold = THRESHOLDS[suite]
    passed = sum(1 for r in residuals if r <= threshold)
    worst = max(residuals, default=0.0)
    logger.debug("== Suite %s: %d/%d, max residual %.3e", suite, passed, len(residuals), worst)
    return SuiteResult(suite, passed, len(residuals), worst, winner)


def _relative(a: complex, b: complex) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


#
# Correction polynomials
#


def suite_reflection(rng: np.random.Generator, trials: int, policy: TruncationPolicy) -> SuiteResult:
    return _result("reflection", reflection_suite(rng, trials, "P"))


def sum_switch_residuals(
    policy: TruncationPolicy,
    q_variant: Variant,
    moduli: tuple[int, ...] = SWITCH_MODULI,
    cutoff: Optional[int] = None,
) -> list[float]:
    """|z_direct - z_swapped| relative, over moduli pairs and twist pairs"""
    s, w = SWITCH_POINT
    residuals = []
    for M in moduli:
        for N in moduli:
            for chi, chi_prime in twist_pairs(M, N):
                p = ZPoint(s, w, chi, chi_prime, M, N)
                direct = z_direct(p, policy, cutoff=cutoff)
                swapped = z_swapped(p, policy, q_variant=q_variant, cutoff=cutoff)
                residuals.append(_relative(direct.value, swapped.value))
    return residuals


def select_q_variant(
    rng: np.random.Generator,
    trials: int,
    policy: TruncationPolicy,
    cutoff: int = 2000,
) -> tuple[Variant, dict[Variant, float]]:
    """The unique Q variant passing the reflection and sum-switch checks

    Returns the winner with the worst residual of every variant.
    """
    worst: dict[Variant, float] = {}
    passing = []
    for variant in Q_VARIANTS:
        reflection = max(reflection_suite(rng, trials, variant))
        switch = max(sum_switch_residuals(policy, variant, (1, 3), cutoff))
        worst[variant] = max(reflection, switch)
        if reflection <= THRESHOLDS["reflection"] and switch <= THRESHOLDS["sum-switch"]:
            passing.append(variant)
        logger.info("Q variant %s: reflection %.3e, sum-switch %.3e", variant, reflection, switch)
    if len(passing) != 1:
        raise InconclusiveError(f"Expected exactly one passing Q variant, got {passing}", tuple(worst.values()))
    return passing[0], worst


def suite_q_variant(rng: np.random.Generator, trials: int, policy: TruncationPolicy) -> SuiteResult:
    winner, worst = select_q_variant(rng, trials, policy)
    return _result("q-variant", [worst[winner]], winner)


#
# Double Dirichlet series
#


def suite_sum_switch(rng: np.random.Generator, trials: int, policy: TruncationPolicy) -> SuiteResult:
    return _result("sum-switch", sum_switch_residuals(policy, DEFAULT_Q_VARIANT))


def funceq_points() -> list[ZPoint]:
    s, w = FUNCEQ_POINT
    return [
        ZPoint(s, w),
        ZPoint(s, w, QuadChar.chi_tilde(5), QuadChar.trivial(), 1, 5),
    ]


def suite_funceq(rng: np.random.Generator, trials: int, policy: TruncationPolicy) -> SuiteResult:
    residuals = []
    for p in funceq_points():
        lhs = z_direct(p, policy)
        rhs = funceq1_rhs(p, policy=policy)
        residuals.append(_relative(lhs.value, rhs.value))
    return _result("funceq", residuals)


def kfg_residuals(rng: np.random.Generator, trials: int) -> list[float]:
    """K = F + (p/m0) G and the four-term expansion of K_{MN}"""
    twists = (QuadChar.trivial(), QuadChar.chi_tilde(3), QuadChar.chi_tilde(5))
    residuals = []
    for _ in range(trials):
        M, N = (int(x) for x in rng.choice(KFG_PRIMES, size=2))
        chi_star = twists[int(rng.integers(len(twists)))]
        if M == N:
            # K_{N²} = 1 when χ*(N) = 0
            chi_star = QuadChar.chi_tilde(N)
        w = complex(rng.uniform(-1.0, 2.0), rng.uniform(-10.0, 10.0))
        candidates = odd_squarefree_upto(999, coprime_to=M * N * chi_star.odd_conductor)
        m0 = int(candidates[rng.integers(candidates.size)])
        x_m = QuadChar.chi_tilde(m0) * chi_star

        F, G = coeff_F_G(M, w, chi_star)
        k = coeff_K(M, w, x_m)
        residuals.append(abs(k - (F + jacobi(M, m0) * G)) / max(1.0, abs(k)))

        big = coeff_K(M * N, w, x_m)
        four = k_four_term(m0, w, chi_star, M, N)
        residuals.append(abs(big - four) / max(1.0, abs(big)))
    return residuals


def suite_kfg(rng: np.random.Generator, trials: int, policy: TruncationPolicy) -> SuiteResult:
    return _result("kfg", kfg_residuals(rng, trials))


#
# Characters and L-values
#


def reciprocity_mismatches(bound: int = 999) -> list[float]:
    """χ_d(n) through reciprocity against the Kronecker symbol, odd pairs <= bound"""
    residuals = []
    for d in range(1, bound + 1, 2):
        for n in range(1, bound + 1, 2):
            residuals.append(float(reciprocity_flip(d, n) != kronecker(d, n)))
    return residuals


def suite_reciprocity(rng: np.random.Generator, trials: int, policy: TruncationPolicy) -> SuiteResult:
    return _result("reciprocity", reciprocity_mismatches())


def afe_residuals(policy: TruncationPolicy, bound: int = 300) -> list[float]:
    """Smoothed sum against the Hurwitz route at the central point"""
    residuals = []
    for chi in (QuadChar.trivial(), QuadChar.chi_tilde(5)):
        for d0 in odd_squarefree_upto(bound, coprime_to=chi.odd_conductor).tolist():
            afe = l_central_afe(d0, chi, Psi.ONE, policy)
            hurwitz = l_value_hurwitz(0.5, total_character(d0, chi), policy.hurwitz_terms)
            residuals.append(abs(afe.value - hurwitz.value))
    return residuals


def suite_afe(rng: np.random.Generator, trials: int, policy: TruncationPolicy) -> SuiteResult:
    return _result("afe", afe_residuals(policy))


RUNNERS: dict[Suite, Callable[[np.random.Generator, int, TruncationPolicy], SuiteResult]] = {
    "reflection": suite_reflection,
    "q-variant": suite_q_variant,
    "sum-switch": suite_sum_switch,
    "funceq": suite_funceq,
    "kfg": suite_kfg,
    "reciprocity": suite_reciprocity,
    "afe": suite_afe,
}


def run_suite(suite: Suite, seed: int, trials: int, policy: Optional[TruncationPolicy] = None) -> SuiteResult:
    rng = np.random.default_rng(seed)
    with logger.timed(f"suite {suite}"):
        return RUNNERS[suite](rng, trials, policy or TruncationPolicy())
