"""Gamma-function machinery: Bernoulli numbers, Stirling log-gamma, exact
half-integer gamma values and a Legendre duplication check."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpq, mpz

from .constants import constant_pi
from .numeric import (
    BigRational,
    DomainError,
    HPReal,
    PrecisionSpec,
    as_rational,
    hp_arith,
    hp_exp,
    hp_ln,
    pi_hp,
    rat_to_hp,
)

HALF = mpq(1, 2)


# ---------------------------------------------------------------------------
# Bernoulli numbers

@dataclass(frozen=True)
class BernoulliTable:
    """Even-index Bernoulli numbers; ``values[k - 1]`` is B_{2k}."""
    values: tuple

    def __len__(self):
        return len(self.values)

    def b2k(self, k: int) -> BigRational:
        return self.values[k - 1]


_bern_lock = threading.Lock()
_bern_all: list = [mpq(1)]  # B_0, B_1, B_2, ... (B_1 = -1/2)


def _extend_bernoulli(m: int) -> None:
    # sum_{k=0}^{j} C(j+1, k) B_k = 0  for j >= 1
    while len(_bern_all) <= m:
        j = len(_bern_all)
        s = mpq(0)
        c = mpz(1)  # C(j+1, k)
        for k in range(j):
            s += c * _bern_all[k]
            c = c * (j + 1 - k) // (k + 1)
        _bern_all.append(-s / (j + 1))


def bernoulli_numbers(K: int) -> BernoulliTable:
    """B_2, B_4, ..., B_{2K} as exact rationals.

    The underlying sequence is computed once and grown on demand; the lock
    makes concurrent callers see a single initialization.
    """
    if K < 1:
        raise DomainError("K must be >= 1")
    if len(_bern_all) <= 2 * K:
        with _bern_lock:
            _extend_bernoulli(2 * K)
    return BernoulliTable(tuple(_bern_all[2 * k] for k in range(1, K + 1)))


# ---------------------------------------------------------------------------
# Stirling log-gamma

@dataclass(frozen=True)
class LgammaResult:
    value: HPReal
    truncation_bound: HPReal
    shift: int = 0
    terms: int = 0


def shift_target(p: PrecisionSpec) -> int:
    """Smallest argument at which the series is evaluated."""
    return max(10, math.ceil(p.bits / 6))


def _exact_arg(x) -> BigRational:
    q = as_rational(x)
    if q <= 0:
        raise DomainError("lgamma requires a positive argument")
    return q


def lgamma_stirling(x, p: PrecisionSpec) -> LgammaResult:
    """ln Gamma(x) for x > 0 by the Stirling series after an upward shift.

    The argument is lifted with Gamma(z + 1) = z Gamma(z) until it reaches
    :func:`shift_target`; the series is then summed until the next term drops
    below the working precision, and that first omitted term is the
    truncation bound.
    """
    q = _exact_arg(x)
    if q == 1 or q == 2:
        # exact zeros of ln Gamma; the shifted series would only cancel to noise
        z = HPReal.zero(p)
        return LgammaResult(z, z)
    wp = PrecisionSpec(p.working + 16, 0)
    target = shift_target(p)
    shift = max(0, math.ceil(target - q))
    X = q + shift
    shift_prod = mpq(1)
    for i in range(shift):
        shift_prod *= q + i

    Xh = rat_to_hp(X, wp)
    lnX = hp_ln(Xh, wp)
    ln2pi = hp_ln(hp_arith(pi_hp(wp), 2, "mul"), wp)
    value = hp_arith(rat_to_hp(X - HALF, wp), lnX, "mul")
    value = value - Xh + hp_arith(ln2pi, HALF, "mul")

    inv = hp_arith(1, Xh, "div", wp)
    inv2 = inv * inv
    power = inv  # X^-(2k-1)
    cutoff = max(0.0, value.log2_abs()) - wp.bits
    k = 1
    bound = None
    prev = math.inf
    while True:
        B = bernoulli_numbers(k).b2k(k)
        term = hp_arith(power, B / (2 * k * (2 * k - 1)), "mul")
        size = term.log2_abs()
        if size < cutoff or size > prev:
            bound = abs(term)
            break
        value = value + term
        prev = size
        power = power * inv2
        k += 1

    if shift:
        value = value - hp_ln(rat_to_hp(shift_prod, wp), wp)
    # widen the bound by one ulp so it also covers its own rounding
    bound = rat_to_hp(bound.to_rational() + bound.ulp(), p)
    return LgammaResult(value.with_precision(p), bound, shift, k - 1)


# ---------------------------------------------------------------------------
# exact gamma values at integers and half-integers

@dataclass(frozen=True)
class SqrtPiScaled:
    """Exact ``coeff * pi**(sqrt_pi_power / 2)``."""
    coeff: BigRational
    sqrt_pi_power: int = 0

    def __mul__(self, other):
        if isinstance(other, SqrtPiScaled):
            return SqrtPiScaled(self.coeff * other.coeff,
                                self.sqrt_pi_power + other.sqrt_pi_power)
        return SqrtPiScaled(self.coeff * as_rational(other), self.sqrt_pi_power)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, SqrtPiScaled):
            return SqrtPiScaled(self.coeff / other.coeff,
                                self.sqrt_pi_power - other.sqrt_pi_power)
        return SqrtPiScaled(self.coeff / as_rational(other), self.sqrt_pi_power)

    def to_hp(self, p) -> HPReal:
        """Render with the reference pi; rounding is at ``p`` plus guard bits."""
        p = p if isinstance(p, PrecisionSpec) else PrecisionSpec(p)
        wp = PrecisionSpec(p.working + 8, 0)
        s = self.sqrt_pi_power
        pi = constant_pi().to_hp(wp)
        factor = rat_to_hp(1, wp)
        for _ in range(abs(s) // 2):
            factor = factor * pi
        if s % 2:
            factor = factor * pi.sqrt()
        if s < 0:
            return hp_arith(self.coeff, factor, "div", p)
        return hp_arith(self.coeff, factor, "mul", p)


def _parse_offset(offset) -> BigRational:
    if isinstance(offset, str):
        offset = Fraction(offset)
    off = as_rational(offset)
    if off not in (0, HALF):
        raise DomainError("offset must be 0 or 1/2")
    return off


def gamma_half_integer_exact(n: int, offset=0) -> SqrtPiScaled:
    """Gamma(n + offset) for offset in {0, 1/2}, with sqrt(pi) kept symbolic."""
    off = _parse_offset(offset)
    if n < 0 or (n == 0 and off == 0):
        raise DomainError("Gamma has a pole at non-positive integers")
    if off == 0:
        return SqrtPiScaled(mpq(gmpy2.fac(n - 1)), 0)
    return SqrtPiScaled(mpq(gmpy2.fac(2 * n), (mpz(4) ** n) * gmpy2.fac(n)), 1)


def gamma_ratio_np1_over_nph(n: int) -> SqrtPiScaled:
    """Gamma(n + 1) / Gamma(n + 1/2) = 4^n (n!)^2 / (2n)! / sqrt(pi)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return gamma_half_integer_exact(n + 1, 0) / gamma_half_integer_exact(n, HALF)


def gamma_ratio_np1_over_np3h(n: int) -> SqrtPiScaled:
    """Gamma(n + 1) / Gamma(n + 3/2) = 2 * 4^n (n!)^2 / (2n + 1)! / sqrt(pi)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return gamma_half_integer_exact(n + 1, 0) / gamma_half_integer_exact(n + 1, HALF)


# ---------------------------------------------------------------------------
# Legendre duplication

def legendre_duplication_residual(z, p: PrecisionSpec) -> HPReal:
    """Relative gap |lhs - rhs| / |lhs| between Gamma(2z) and
    Gamma(z) Gamma(z + 1/2) 2^(2z - 1) / sqrt(pi), both from lgamma_stirling."""
    q = as_rational(z)
    if q <= 0:
        raise DomainError("duplication check requires z > 0")
    wp = PrecisionSpec(p.working, p.guard_bits)
    lhs = lgamma_stirling(2 * q, wp).value
    ln_pi = hp_ln(pi_hp(wp), wp)
    rhs = (lgamma_stirling(q, wp).value + lgamma_stirling(q + HALF, wp).value
           + hp_arith(hp_ln(rat_to_hp(2, wp), wp), 2 * q - 1, "mul")
           - hp_arith(ln_pi, HALF, "mul"))
    # |lhs - rhs| / lhs = |1 - exp(rhs - lhs)| in log space
    ratio = hp_exp(rhs - lhs, wp)
    return abs(hp_arith(1, ratio, "sub", PrecisionSpec(p.bits, p.guard_bits)))
