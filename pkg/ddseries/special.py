"""
Special functions with error tracking.
"""

import cmath
import math

from dataclasses import dataclass
from functools import cache
from typing import (
    Callable,
    Literal,
    Self,
)

import numpy as np
import scipy.special as sp

from scipy import integrate

from .errors import AccuracyError, PoleError
from .summation import EPS

#
# Values with error
#

type Number = complex | float | int


@dataclass(frozen=True)
class ValueWithError:
    value: complex
    abs_error: float = 0.0

    def __post_init__(self):
        if not self.abs_error >= 0:
            raise ValueError(f"Negative or undefined error: {self.abs_error}")

    @classmethod
    def exact(cls, value: Number) -> Self:
        return cls(complex(value), 0.0)

    @staticmethod
    def _lift(other: "ValueWithError | Number") -> "ValueWithError":
        if isinstance(other, ValueWithError):
            return other
        return ValueWithError(complex(other), 0.0)

    def __add__(self, other: "ValueWithError | Number") -> "ValueWithError":
        o = self._lift(other)
        return ValueWithError(self.value + o.value, self.abs_error + o.abs_error)

    __radd__ = __add__

    def __neg__(self) -> "ValueWithError":
        return ValueWithError(-self.value, self.abs_error)

    def __sub__(self, other: "ValueWithError | Number") -> "ValueWithError":
        return self + (-self._lift(other))

    def __rsub__(self, other: Number) -> "ValueWithError":
        return self._lift(other) - self

    def __mul__(self, other: "ValueWithError | Number") -> "ValueWithError":
        o = self._lift(other)
        err = abs(self.value) * o.abs_error + abs(o.value) * self.abs_error + self.abs_error * o.abs_error
        return ValueWithError(self.value * o.value, err)

    __rmul__ = __mul__

    def __truediv__(self, other: "ValueWithError | Number") -> "ValueWithError":
        o = self._lift(other)
        den = abs(o.value) - o.abs_error
        if den <= 0:
            return ValueWithError(self.value / o.value, math.inf)
        q = self.value / o.value
        return ValueWithError(q, (self.abs_error + abs(q) * o.abs_error) / den)

    def __rtruediv__(self, other: Number) -> "ValueWithError":
        return self._lift(other) / self

    def __abs__(self) -> float:
        return abs(self.value)

    @property
    def real(self) -> float:
        return self.value.real

    @property
    def imag(self) -> float:
        return self.value.imag

    def conjugate(self) -> "ValueWithError":
        return ValueWithError(self.value.conjugate(), self.abs_error)

    def widen(self, extra: float) -> "ValueWithError":
        return ValueWithError(self.value, self.abs_error + abs(extra))

    def contains(self, x: Number) -> bool:
        return abs(self.value - x) <= self.abs_error

    def certified_nonzero(self, factor: float = 10.0) -> bool:
        return abs(self.value) > factor * self.abs_error


#
# Gamma and digamma
#


def _check_pole(z: complex, what: str, tol: float = 0.0):
    if abs(z.imag) <= tol:
        k = round(z.real)
        if k <= 0 and abs(z.real - k) <= tol:
            raise PoleError(f"{what} has a pole at {z}")


def loggamma(z: complex) -> complex:
    z = complex(z)
    _check_pole(z, "log-gamma")
    return complex(sp.loggamma(z))


def gamma_complex(z: Number) -> ValueWithError:
    z = complex(z)
    _check_pole(z, "Gamma")
    value = complex(sp.gamma(z))
    return ValueWithError(value, 1e-13 * abs(value))


def digamma(z: Number) -> ValueWithError:
    z = complex(z)
    _check_pole(z, "digamma")
    value = complex(sp.psi(z))
    return ValueWithError(value, 1e-13 * (1.0 + abs(value)))


#
# Hurwitz zeta
#


@cache
def _bernoulli_coefficients(terms: int) -> tuple[float, ...]:
    """B_{2k}/(2k)! for k = 1..terms"""
    b = sp.bernoulli(2 * terms)
    return tuple(float(b[2 * k]) / math.factorial(2 * k) for k in range(1, terms + 1))


def hurwitz_zeta_array(
    s: Number,
    a: np.ndarray,
    terms: int = 12,
    chunk: int = 2048,
) -> tuple[np.ndarray, np.ndarray]:
    """ζ(s, a) for an array of a in (0, 1] by Euler-Maclaurin summation

    Returns values and error estimates (twice the first omitted
    correction plus roundoff).
    """
    s = complex(s)
    if abs(s - 1) < 1e-14:
        raise PoleError("Hurwitz zeta has a pole at s = 1")
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    if np.any(a <= 0):
        raise ValueError("Hurwitz zeta needs a > 0")

    n_head = 30 + math.ceil(abs(s))
    coeffs = _bernoulli_coefficients(terms + 1)

    values = np.empty(a.shape, dtype=np.complex128)
    errors = np.empty(a.shape, dtype=np.float64)

    n = np.arange(n_head, dtype=np.float64)
    for start in range(0, a.size, chunk):
        aa = a[start : start + chunk]
        logx = np.log(n[None, :] + aa[:, None])
        head_terms = np.exp(-s * logx)
        head = head_terms.sum(axis=1)
        mass = np.abs(head_terms).sum(axis=1)

        xn = n_head + aa
        log_xn = np.log(xn)
        total = head + np.exp((1 - s) * log_xn) / (s - 1) + 0.5 * np.exp(-s * log_xn)

        poch = s
        for k in range(1, terms + 1):
            total += coeffs[k - 1] * poch * np.exp((-s - 2 * k + 1) * log_xn)
            poch *= (s + 2 * k - 1) * (s + 2 * k)
        omitted = coeffs[terms] * poch * np.exp((-s - 2 * terms - 1) * log_xn)

        values[start : start + chunk] = total
        errors[start : start + chunk] = 2 * np.abs(omitted) + 4 * EPS * (mass + np.abs(total))

    return values, errors


def hurwitz_zeta(s: Number, a: float, terms: int = 12) -> ValueWithError:
    values, errors = hurwitz_zeta_array(s, np.array([a]), terms)
    return ValueWithError(complex(values[0]), float(errors[0]))


#
# Weight function of the approximate functional equation
#

WeightMethod = Literal["incomplete_gamma", "quadrature"]


def G_weight_array(
    kappa: int,
    xi: np.ndarray,
    method: WeightMethod = "incomplete_gamma",
    *,
    line: float = 2.0,
    height: float = 60.0,
    step: float = 0.02,
    tolerance: float = 1e-10,
) -> tuple[np.ndarray, np.ndarray]:
    """G_κ(ξ) = (1/2πi)∫ Γ((1/2+κ+s)/2)/Γ((1/2+κ)/2) ξ^{-s} ds/s

    The integral is the regularised upper incomplete gamma
    function Q((1/2+κ)/2, ξ²).
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    if np.any(xi <= 0):
        raise ValueError("G weight needs ξ > 0")
    a = (0.5 + kappa) / 2

    if method == "incomplete_gamma":
        values = sp.gammaincc(a, xi * xi)
        return values, np.full(xi.shape, 1e-14) + 1e-13 * values

    values = np.empty(xi.shape)
    errors = np.empty(xi.shape)
    small = xi < 1.0
    for mask, c, residue in ((~small, line, 0.0), (small, -0.25, 1.0)):
        if mask.any():
            v, e = _G_quadrature(a, xi[mask], c, height, step)
            values[mask] = v + residue
            errors[mask] = e
    worst = float(errors.max())
    if worst > tolerance:
        raise AccuracyError("G weight quadrature did not converge", worst)
    return values, errors


def _G_quadrature(a: float, xi: np.ndarray, c: float, height: float, step: float) -> tuple[np.ndarray, np.ndarray]:
    # Trapezoid on Re s = c; the integrand at c - it is the conjugate at c + it
    t = np.arange(0.0, height + step / 2, step)
    s = c + 1j * t
    gam = np.exp(sp.loggamma(a + s / 2) - sp.loggamma(a)) / s
    weights = np.full(t.shape, step)
    weights[0] = step / 2
    weights[-1] = step / 2
    log_xi = np.log(xi)

    phase = np.exp(-np.outer(log_xi, s))
    fine = (phase * gam[None, :]) @ weights
    coarse = (phase[:, ::2] * gam[None, ::2]) @ _trapezoid_weights(t[::2])
    values = fine.real / np.pi

    # Gamma decays like exp(-π|t|/4) beyond the cut
    edge = np.abs(phase[:, -1] * gam[-1])
    tail = edge * (4.0 / np.pi) / np.pi
    return values, np.abs(fine.real - coarse.real) / np.pi + tail + EPS * t.size


def _trapezoid_weights(t: np.ndarray) -> np.ndarray:
    w = np.full(t.shape, t[1] - t[0])
    w[0] /= 2
    w[-1] /= 2
    return w


def G_weight(
    kappa: int,
    xi: float,
    method: WeightMethod = "quadrature",
    **kwargs,
) -> ValueWithError:
    values, errors = G_weight_array(kappa, np.array([xi]), method, **kwargs)
    return ValueWithError(complex(values[0]), float(errors[0]))


#
# Smooth weights
#


@dataclass(frozen=True)
class SmoothWeight:
    """Smooth compactly supported weight

    bump_h: supported on [1/4, 5/4], equal to 1 on [1/2, 1]
    window_W: supported on [1, 2]
    """

    kind: Literal["bump_h", "window_W"] = "bump_h"
    sharpness: float = 1.0
    transition: float = 0.25

    @property
    def support(self) -> tuple[float, float]:
        return (0.25, 1.25) if self.kind == "bump_h" else (1.0, 2.0)

    @property
    def plateau(self) -> tuple[float, float]:
        lo, hi = self.support
        delta = 0.25 if self.kind == "bump_h" else self.transition
        return lo + delta, hi - delta

    def smoothstep(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        inner = (t > 0) & (t < 1)
        out = np.where(t >= 1, 1.0, 0.0)
        ti = t[inner]
        # φ(t)/(φ(t) + φ(1-t)) with φ(t) = exp(-sharpness/t)
        g = self.sharpness * (1.0 / ti - 1.0 / (1.0 - ti))
        out[inner] = 0.5 * (1.0 - np.tanh(g / 2))
        return out

    def __call__(self, x: np.ndarray | float) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        lo, hi = self.support
        p_lo, p_hi = self.plateau
        return self.smoothstep((x - lo) / (p_lo - lo)) * self.smoothstep((hi - x) / (hi - p_hi))


BUMP_H = SmoothWeight("bump_h")
WINDOW_W = SmoothWeight("window_W")


def mellin_weight(f: SmoothWeight, z: Number, derivative: int = 0) -> ValueWithError:
    """f̃(z) = ∫ f(x) x^{z-1} dx, or its derivative in z"""
    z = complex(z)
    lo, hi = f.support
    p_lo, p_hi = f.plateau

    def integrand(x: float) -> complex:
        lx = math.log(x)
        return complex(f(x)) * cmath.exp((z - 1) * lx) * lx**derivative

    limit = 200 + int(abs(z.imag) * 4)
    error = 0.0
    parts = []
    for part in (lambda x: integrand(x).real, lambda x: integrand(x).imag):
        value, err = integrate.quad(
            part,
            lo,
            hi,
            points=(p_lo, p_hi),
            limit=limit,
            epsabs=1e-14,
            epsrel=1e-12,
        )
        parts.append(value)
        error += err
    return ValueWithError(complex(parts[0], parts[1]), error)


#
# Gamma ratios and the cotangent
#


def gamma_ratio_kappa(
    w: Number,
    kappa_hat: int,
    route: Literal["direct", "cot"] = "direct",
) -> ValueWithError:
    """Γ((1-w+κ̂)/2) / Γ((w+κ̂)/2)

    The `cot` route goes through Γ((1-w)/2)/Γ(w/2)·cot(πw/2) for κ̂ = 1
    and Γ((2-w)/2)/Γ((1+w)/2)·tan(πw/2) for κ̂ = 0.
    """
    w = complex(w)
    num = (1 - w + kappa_hat) / 2
    if abs(num.imag) < 1e-6 and num.real < 0.5:
        k = round(num.real)
        if k <= 0 and abs(num - k) < 1e-6:
            raise PoleError(f"Gamma ratio has a pole at w = {w}")

    if route == "direct":
        value = cmath.exp(_loggamma_or_inf(num) - _loggamma_or_inf((w + kappa_hat) / 2))
    else:
        value = _cot_route(w, kappa_hat)
    return ValueWithError(value, 1e-13 * (1 + abs(w)) * abs(value))


def _loggamma_or_inf(z: complex) -> complex:
    # log Γ at a pole is +inf: 1/Γ vanishes there
    if abs(z.imag) < 1e-300 and z.real <= 0 and z.real == round(z.real):
        return complex(math.inf, 0)
    return complex(sp.loggamma(z))


def _cot_route(w: complex, kappa_hat: int) -> complex:
    x = math.pi * w / 2
    if kappa_hat == 1:
        base = cmath.exp(_loggamma_or_inf((1 - w) / 2) - _loggamma_or_inf(w / 2))
        return base * cmath.cos(x) / cmath.sin(x)
    base = cmath.exp(_loggamma_or_inf((2 - w) / 2) - _loggamma_or_inf((1 + w) / 2))
    return base * cmath.sin(x) / cmath.cos(x)


def cot_envelope(y: float) -> float:
    """Bound for |cot(x+iy) + i·sign(y)|"""
    q = math.exp(-2 * abs(y))
    return 2 * q / (1 - q)


#
# Numerical differentiation
#


def numeric_derivative(f: Callable[[float], complex], x: float, step: float = 1e-5) -> ValueWithError:
    """Central difference with one Richardson level"""
    d1 = (f(x + step) - f(x - step)) / (2 * step)
    h = step / 2
    d2 = (f(x + h) - f(x - h)) / (2 * h)
    value = (4 * d2 - d1) / 3
    return ValueWithError(complex(value), abs(value - d2))
