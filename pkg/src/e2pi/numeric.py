"""Exact rationals and precision-tracked binary floating point.

Rationals are ``gmpy2.mpq`` values, which are kept in lowest terms with a
positive denominator by GMP itself.  :class:`HPReal` is an immutable binary
float ``sign * mantissa * 2**exponent`` whose mantissa always has exactly
``precision.bits`` bits.  Every rounding is round-to-nearest-even.

Accuracy contract, measured in units of the last place at ``precision.bits``:

* add, sub, mul, div, sqrt and rational conversion are correctly rounded;
* exp, ln and pow are within 4 ulp (in practice within 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

import gmpy2
from gmpy2 import mpq, mpz

BigRational = type(mpq(0))

# |exponent| beyond this raises RangeError.
EXPONENT_LIMIT = 2 ** 62

DEFAULT_GUARD_BITS = 32


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(OverflowError):
    """Result exponent outside the configured range."""


class ResourceError(RuntimeError):
    """A computation would exceed its configured memory budget."""


class UsageError(ValueError):
    """Inputs violate a structural precondition (grid shape, ids...)."""


# ---------------------------------------------------------------------------
# rationals

def rat_make(n: int, d: int = 1) -> BigRational:
    """Canonical rational ``n/d``; raises DomainError when ``d == 0``."""
    if d == 0:
        raise DomainError("zero denominator")
    return mpq(n, d)


def as_rational(x) -> BigRational:
    if isinstance(x, HPReal):
        return x.to_rational()
    if isinstance(x, (Fraction,)):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


def rat_arith(a, b, op: str) -> BigRational:
    a, b = as_rational(a), as_rational(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if b == 0:
            raise DomainError("division by zero rational")
        return a / b
    raise UsageError(f"unknown rational op {op!r}")


# ---------------------------------------------------------------------------
# precision

@dataclass(frozen=True)
class PrecisionSpec:
    bits: int
    guard_bits: int = DEFAULT_GUARD_BITS

    def __post_init__(self):
        if self.bits < 16:
            raise DomainError(f"precision must be >= 16 bits, got {self.bits}")
        if self.guard_bits < 0:
            raise DomainError("guard_bits must be non-negative")

    @property
    def working(self) -> int:
        return self.bits + self.guard_bits

    @classmethod
    def for_terms(cls, bits: int, terms: int) -> "PrecisionSpec":
        """Precision whose guard bits absorb rounding over ``terms`` steps."""
        return cls(bits, DEFAULT_GUARD_BITS + max(0, math.ceil(math.log2(max(terms, 1)))))

    @classmethod
    def from_digits(cls, digits: int, guard_bits: int = DEFAULT_GUARD_BITS) -> "PrecisionSpec":
        return cls(max(16, math.ceil(digits * math.log2(10))), guard_bits)

    def widened(self, extra: int) -> "PrecisionSpec":
        return PrecisionSpec(self.bits + extra, self.guard_bits)


def _prec(p: Union[PrecisionSpec, int]) -> PrecisionSpec:
    return p if isinstance(p, PrecisionSpec) else PrecisionSpec(p)


# ---------------------------------------------------------------------------
# rounding kernels

def _round_int(m: int, exp: int, bits: int, sticky: int = 0) -> tuple[int, int]:
    """Round ``(m + eps) * 2**exp`` to ``bits`` bits, nearest-even.

    ``sticky`` flags a nonzero ``eps`` in (0, 1); callers that set it must
    supply at least ``bits + 2`` significant bits in ``m``.
    """
    n = m.bit_length()
    if n <= bits:
        return m << (bits - n), exp - (bits - n)
    drop = n - bits
    q = m >> drop
    rem = m & ((1 << drop) - 1)
    half = 1 << (drop - 1)
    if rem > half or (rem == half and (sticky or q & 1)):
        q += 1
        if q.bit_length() > bits:
            q >>= 1
            drop += 1
    return q, exp + drop


def _round_ratio(num: int, den: int, bits: int) -> tuple[int, int]:
    """Correctly rounded ``num/den`` (both positive) as (mantissa, exponent)."""
    shift = bits + 3 - (num.bit_length() - den.bit_length())
    if shift >= 0:
        q, r = divmod(num << shift, den)
    else:
        q, r = divmod(num, den << -shift)
    return _round_int(int(q), -shift, bits, 1 if r else 0)


def _make(sign: int, m: int, exp: int, p: PrecisionSpec, sticky: int = 0) -> "HPReal":
    if m == 0:
        return HPReal(0, 0, 0, p)
    mant, e = _round_int(int(m), exp, p.bits, sticky)
    if abs(e) > EXPONENT_LIMIT:
        raise RangeError(f"exponent {e} outside configured range")
    return HPReal(sign, mant, e, p)


# ---------------------------------------------------------------------------
# HPReal

@dataclass(frozen=True)
class HPReal:
    sign: int
    mantissa: int
    exponent: int
    precision: PrecisionSpec

    def __post_init__(self):
        if self.sign == 0:
            if self.mantissa != 0:
                raise DomainError("zero must have an empty mantissa")
        elif self.mantissa.bit_length() != self.precision.bits:
            raise DomainError("mantissa is not normalized to the precision")

    # construction --------------------------------------------------------
    @classmethod
    def zero(cls, p: PrecisionSpec) -> "HPReal":
        return cls(0, 0, 0, _prec(p))

    @classmethod
    def from_rational(cls, a, p) -> "HPReal":
        return rat_to_hp(a, p)

    @classmethod
    def from_decimal(cls, text: str, p) -> "HPReal":
        return rat_to_hp(Fraction(text.strip()), p)

    # conversion ----------------------------------------------------------
    def to_rational(self) -> BigRational:
        if self.sign == 0:
            return mpq(0)
        if self.exponent >= 0:
            return mpq(self.sign * (mpz(self.mantissa) << self.exponent))
        return mpq(self.sign * self.mantissa, mpz(1) << -self.exponent)

    def ulp(self) -> BigRational:
        """Unit in the last place of this value (of the smallest normal at 0)."""
        if self.sign == 0:
            return mpq(0)
        return _pow2(self.exponent)

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        top = self.mantissa >> max(0, self.precision.bits - 60)
        shift = self.exponent + max(0, self.precision.bits - 60)
        try:
            return self.sign * math.ldexp(float(top), shift)
        except OverflowError:
            return self.sign * math.inf

    def log2_abs(self) -> float:
        """Approximate log2|x| as a float, valid far outside double range."""
        if self.sign == 0:
            return -math.inf
        k = max(0, self.precision.bits - 60)
        return math.log2(self.mantissa >> k) + k + self.exponent

    def magnitude(self) -> int:
        """floor(log2|x|) + 1 for nonzero x."""
        return self.precision.bits + self.exponent

    def to_decimal(self, digits: int | None = None) -> str:
        """Decimal string; shortest round-tripping form when ``digits`` is None."""
        if self.sign == 0:
            return "0"
        if digits is not None:
            return _format_decimal(self.to_rational(), digits)
        q = self.to_rational()
        d = 1
        while True:
            s = _format_decimal(q, d)
            if HPReal.from_decimal(s, self.precision) == self:
                return s
            d += 1

    def __str__(self) -> str:
        return self.to_decimal()

    def __repr__(self) -> str:
        return f"HPReal({self.to_decimal()!s}, bits={self.precision.bits})"

    def with_precision(self, p) -> "HPReal":
        p = _prec(p)
        if self.sign == 0:
            return HPReal(0, 0, 0, p)
        return _make(self.sign, self.mantissa, self.exponent, p)

    # comparisons ---------------------------------------------------------
    def _cmp_key(self, other):
        return self.to_rational(), as_rational(other)

    def __eq__(self, other):
        if isinstance(other, HPReal) and other.precision.bits == self.precision.bits:
            return (self.sign, self.mantissa, self.exponent) == (
                other.sign, other.mantissa, other.exponent)
        try:
            a, b = self._cmp_key(other)
        except (TypeError, ValueError):
            return NotImplemented
        return a == b

    def __hash__(self):
        return hash(self.to_rational())

    def __lt__(self, other):
        a, b = self._cmp_key(other)
        return a < b

    def __le__(self, other):
        a, b = self._cmp_key(other)
        return a <= b

    def __gt__(self, other):
        a, b = self._cmp_key(other)
        return a > b

    def __ge__(self, other):
        a, b = self._cmp_key(other)
        return a >= b

    def __bool__(self):
        return self.sign != 0

    # arithmetic ----------------------------------------------------------
    def __neg__(self):
        return HPReal(-self.sign, self.mantissa, self.exponent, self.precision)

    def __abs__(self):
        return HPReal(abs(self.sign), self.mantissa, self.exponent, self.precision)

    def __add__(self, other):
        return hp_arith(self, other, "add")

    def __radd__(self, other):
        return hp_arith(other, self, "add")

    def __sub__(self, other):
        return hp_arith(self, other, "sub")

    def __rsub__(self, other):
        return hp_arith(other, self, "sub")

    def __mul__(self, other):
        return hp_arith(self, other, "mul")

    def __rmul__(self, other):
        return hp_arith(other, self, "mul")

    def __truediv__(self, other):
        return hp_arith(self, other, "div")

    def __rtruediv__(self, other):
        return hp_arith(other, self, "div")

    def __pow__(self, k):
        return hp_pow(self, k)

    def sqrt(self):
        return hp_fn(self, "sqrt")

    def exp(self):
        return hp_fn(self, "exp")

    def ln(self):
        return hp_fn(self, "ln")


@lru_cache(maxsize=256)
def _pow2(e: int) -> BigRational:
    return mpq(mpz(1) << e) if e >= 0 else mpq(1, mpz(1) << -e)


def rat_to_hp(a, p) -> HPReal:
    """Correctly rounded (nearest-even) conversion of an exact value."""
    p = _prec(p)
    if isinstance(a, HPReal):
        return a.with_precision(p)
    q = as_rational(a)
    if q == 0:
        return HPReal.zero(p)
    sign = 1 if q > 0 else -1
    num, den = abs(int(q.numerator)), int(q.denominator)
    mant, e = _round_ratio(num, den, p.bits)
    if abs(e) > EXPONENT_LIMIT:
        raise RangeError(f"exponent {e} outside configured range")
    return HPReal(sign, mant, e, p)


def _common_precision(a: HPReal, b: HPReal) -> PrecisionSpec:
    if a.precision == b.precision:
        return a.precision
    return PrecisionSpec(max(a.precision.bits, b.precision.bits),
                         max(a.precision.guard_bits, b.precision.guard_bits))


def _dyadic_add(a: HPReal, b: HPReal, p: PrecisionSpec) -> HPReal:
    if a.sign == 0:
        return b.with_precision(p)
    if b.sign == 0:
        return a.with_precision(p)
    if a.magnitude() < b.magnitude():
        a, b = b, a
    gap = a.exponent - b.exponent
    span = p.bits + 4
    if a.magnitude() - b.magnitude() > span:
        # b sits entirely below the rounding position; a one-unit nudge far
        # below it rounds identically
        m = (a.mantissa << (span + 2)) + (1 if a.sign == b.sign else -1)
        return _make(a.sign, m, a.exponent - span - 2, p)
    if gap >= 0:
        m = a.sign * (a.mantissa << gap) + b.sign * b.mantissa
        e = b.exponent
    else:
        m = a.sign * a.mantissa + b.sign * (b.mantissa << -gap)
        e = a.exponent
    if m == 0:
        return HPReal.zero(p)
    return _make(1 if m > 0 else -1, abs(m), e, p)


def hp_arith(a, b, op: str, p=None) -> HPReal:
    """add/sub/mul/div, correctly rounded.

    Either operand may be an exact int or rational; it then takes part
    exactly and only the result is rounded.  The result precision is ``p``
    when given, else the wider of the HPReal operands.
    """
    ha, hb = isinstance(a, HPReal), isinstance(b, HPReal)
    if not (ha or hb):
        if p is None:
            raise UsageError("precision required when no operand is an HPReal")
    if p is None:
        p = _common_precision(a, b) if ha and hb else (a if ha else b).precision
    p = _prec(p)
    if op not in ("add", "sub", "mul", "div"):
        raise UsageError(f"unknown op {op!r}")
    if not (ha and hb):
        return rat_to_hp(rat_arith(a, b, op), p)
    if op == "add":
        return _dyadic_add(a, b, p)
    if op == "sub":
        return _dyadic_add(a, -b, p)
    if op == "mul":
        if a.sign == 0 or b.sign == 0:
            return HPReal.zero(p)
        return _make(a.sign * b.sign, a.mantissa * b.mantissa,
                     a.exponent + b.exponent, p)
    if b.sign == 0:
        raise DomainError("division by zero")
    if a.sign == 0:
        return HPReal.zero(p)
    mant, e = _round_ratio(a.mantissa, b.mantissa, p.bits)
    e += a.exponent - b.exponent
    if abs(e) > EXPONENT_LIMIT:
        raise RangeError(f"exponent {e} outside configured range")
    return HPReal(a.sign * b.sign, mant, e, p)


# ---------------------------------------------------------------------------
# fixed-point kernels: integers scaled by 2**w

@lru_cache(maxsize=64)
def ln2_fixed(w: int) -> int:
    """round(ln 2 * 2**w) within 1 unit; ln 2 = 2 atanh(1/3)."""
    g = w + 16
    one = 1 << g
    total, k, term = 0, 0, one // 3
    while term:
        total += term // (2 * k + 1)
        k += 1
        term //= 9
    return (2 * total + (1 << 15)) >> 16


def _atan_inv(x: int, g: int) -> int:
    total, k = 0, 0
    term = (1 << g) // x
    x2 = x * x
    while term:
        total += term // (2 * k + 1) if k % 2 == 0 else -(term // (2 * k + 1))
        k += 1
        term //= x2
    return total


@lru_cache(maxsize=64)
def pi_fixed(w: int) -> int:
    """round(pi * 2**w) within 1 unit, by Machin's arctangent formula."""
    g = w + 16
    v = 16 * _atan_inv(5, g) - 4 * _atan_inv(239, g)
    return (v + (1 << 15)) >> 16


def pi_hp(p) -> HPReal:
    """pi computed from scratch (not from the embedded reference digits)."""
    p = _prec(p)
    w = p.bits + 40
    return _make(1, pi_fixed(w), -w, p, sticky=1)


def _to_fixed(x: HPReal, w: int) -> int:
    """x * 2**w truncated toward zero."""
    s = x.exponent + w
    v = x.mantissa << s if s >= 0 else x.mantissa >> -s
    return x.sign * v


def _tmul(a: int, b: int, g: int) -> int:
    """(a * b) / 2**g truncated toward zero."""
    v = a * b
    return v >> g if v >= 0 else -((-v) >> g)


def _exp_fixed(r: int, w: int) -> int:
    """exp(r / 2**w) * 2**w for |r| <= 2**w (roughly), absolute error ~ O(w) units."""
    s = max(4, int(math.isqrt(w)) // 2)
    g = w + s + 2 * s.bit_length() + 8
    x = r << (g - w - s) if g - w >= s else r >> (s - g + w)
    one = 1 << g
    total, term, i = one, one, 1
    while term:
        term = _tmul(term, x, g)
        term = term // i if term >= 0 else -((-term) // i)
        total += term
        i += 1
    for _ in range(s):
        total = total * total >> g
    return total >> (g - w)


def _atanh_fixed(t: int, w: int) -> int:
    """atanh(t / 2**w) * 2**w for |t| <= 2**w / 4."""
    t2 = t * t >> w
    total, k, term = 0, 0, t
    while term:
        total += term // (2 * k + 1) if term >= 0 else -((-term) // (2 * k + 1))
        k += 1
        term = _tmul(term, t2, w)
    return total


def hp_exp(x: HPReal, p=None) -> HPReal:
    p = _prec(p or x.precision)
    if x.sign == 0:
        return rat_to_hp(1, p)
    mag = x.magnitude()
    if mag > 70:
        raise RangeError("exp argument too large")
    if mag < -(p.working + 8):
        # exp(x) = 1 + x + O(x^2), far below the rounding position
        return _make(1, (1 << (p.working + 16)) + x.sign, -(p.working + 16), p)
    w = p.working + 16 + max(0, mag)
    xf = _to_fixed(x, w)
    l2 = ln2_fixed(w)
    k = (xf + l2 // 2) // l2
    r = xf - k * l2
    ef = _exp_fixed(r, w)
    return _make(1, ef, k - w, p, sticky=1)


def hp_ln(x: HPReal, p=None) -> HPReal:
    p = _prec(p or x.precision)
    if x.sign <= 0:
        raise DomainError("ln requires a positive argument")
    q = x.to_rational()
    if q == 1:
        return HPReal.zero(p)
    # cancellation near 1: carry extra bits proportional to -log2|x - 1|
    extra = 0
    d = x.to_rational() - 1
    if abs(d) < mpq(1, 2):
        extra = int(d.denominator).bit_length() - abs(int(d.numerator)).bit_length() + 1
    w = p.working + 16 + extra
    # x = f * 2**E with f in [sqrt(1/2), sqrt(2))
    E = x.magnitude()
    f = _to_fixed(HPReal(1, x.mantissa, -x.precision.bits, x.precision), w + 4) >> 4
    # f is in [1/2, 1); move to [sqrt(1/2), sqrt(2))
    if f * f < (1 << (2 * w - 1)):
        f <<= 1
        E -= 1
    one = 1 << w
    t = ((f - one) << w) // (f + one)
    lnf = 2 * _atanh_fixed(t, w)
    total = E * ln2_fixed(w) + lnf
    if total == 0:
        return HPReal.zero(p)
    return _make(1 if total > 0 else -1, abs(total), -w, p, sticky=1)


def hp_sqrt(x: HPReal, p=None) -> HPReal:
    p = _prec(p or x.precision)
    if x.sign < 0:
        raise DomainError("sqrt of a negative value")
    if x.sign == 0:
        return HPReal.zero(p)
    m, e = x.mantissa, x.exponent
    shift = 2 * (p.bits + 2) - m.bit_length() + 2
    shift += (e - shift) & 1
    m2 = m << shift if shift >= 0 else m >> -shift
    s = gmpy2.isqrt(mpz(m2))
    exact = s * s == m2 and (shift >= 0 or (m & ((1 << -shift) - 1)) == 0)
    return _make(1, int(s), (e - shift) // 2, p, 0 if exact else 1)


def hp_fn(a: HPReal, fn: str, p=None) -> HPReal:
    if fn == "sqrt":
        return hp_sqrt(a, p)
    if fn == "exp":
        return hp_exp(a, p)
    if fn == "ln":
        return hp_ln(a, p)
    raise UsageError(f"unknown function {fn!r}")


def hp_pow(a, k, p=None) -> HPReal:
    """``a**k`` for integer or HPReal ``k``.

    Integer exponents use binary exponentiation at ``bits + guard + log2|k|``
    bits, so the single final rounding dominates the error.
    """
    if not isinstance(a, HPReal):
        if p is None:
            raise UsageError("precision required for a non-HPReal base")
        a = rat_to_hp(a, p)
    p = _prec(p or a.precision)
    if isinstance(k, HPReal):
        if k.exponent >= 0 or (k.mantissa & ((1 << -k.exponent) - 1)) == 0:
            return hp_pow(a, int(k.to_rational()), p)
        if a.sign <= 0:
            raise DomainError("real power of a non-positive base")
        # error in y*ln(a) is amplified by |y ln a|
        scale = max(0, math.ceil(abs(k.log2_abs() + math.log2(max(abs(a.log2_abs()), 1.0)))) + 2)
        wp = PrecisionSpec(p.working + scale + 8, 0)
        return hp_exp(hp_arith(k.with_precision(wp), hp_ln(a, wp), "mul", wp), p)
    k = int(k)
    if k == 0:
        return rat_to_hp(1, p)
    if a.sign == 0:
        if k < 0:
            raise DomainError("zero to a negative power")
        return HPReal.zero(p)
    n = abs(k)
    wp = PrecisionSpec(p.working + 2 * n.bit_length() + 4, 0)
    base = a.with_precision(wp) if a.precision.bits > wp.bits else a
    result = None
    while n:
        if n & 1:
            result = base if result is None else hp_arith(result, base, "mul", wp)
        n >>= 1
        if n:
            base = hp_arith(base, base, "mul", wp)
    if k < 0:
        return hp_arith(rat_to_hp(1, wp), result, "div", p)
    return result.with_precision(p)


# ---------------------------------------------------------------------------
# error measurement

def ulp_error(x: HPReal, exact) -> BigRational:
    """|x - exact| measured in ulps of x (exact zero x compares absolutely)."""
    diff = abs(x.to_rational() - as_rational(exact))
    if x.sign == 0:
        return diff
    return diff / x.ulp()


def within_ulps(x: HPReal, y, k) -> bool:
    return ulp_error(x, y) <= k


# ---------------------------------------------------------------------------
# decimal formatting

def _floor_log10(q: BigRational) -> int:
    """floor(log10 q) for q > 0."""
    num, den = int(q.numerator), int(q.denominator)
    est = int((num.bit_length() - den.bit_length()) * 0.30102999566398120)
    while True:
        if est >= 0:
            lo_ok = num >= den * 10 ** est
            hi_ok = num < den * 10 ** (est + 1)
        else:
            lo_ok = num * 10 ** -est >= den
            hi_ok = num * 10 ** (-est - 1) < den
        if lo_ok and hi_ok:
            return est
        est += 1 if lo_ok else -1


def _round_half_even(q: BigRational) -> int:
    num, den = int(q.numerator), int(q.denominator)
    fl, r = divmod(num, den)
    if 2 * r > den or (2 * r == den and fl & 1):
        fl += 1
    return fl


def _format_decimal(q: BigRational, digits: int) -> str:
    if q == 0:
        return "0"
    sign = "-" if q < 0 else ""
    q = abs(q)
    e10 = _floor_log10(q)
    scale = e10 - digits + 1
    m = _round_half_even(q / mpq(10) ** scale if scale >= 0 else q * mpq(10) ** -scale)
    if m >= 10 ** digits:
        m //= 10
        scale += 1
        e10 += 1
    s = str(m).rstrip("0") or "0"
    if -7 <= e10 < 21:
        point = e10 + 1
        if point <= 0:
            body = "0." + "0" * -point + s
        elif point >= len(s):
            body = s + "0" * (point - len(s))
        else:
            body = s[:point] + "." + s[point:]
        return sign + body
    body = s[0] + ("." + s[1:] if len(s) > 1 else "")
    return f"{sign}{body}e{e10:+d}"


def format_rational(q, digits: int) -> str:
    """``digits`` significant decimal digits of an exact value."""
    return _format_decimal(as_rational(q), digits)
