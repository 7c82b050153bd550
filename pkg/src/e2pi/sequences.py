"""Approximant sequences for e and 1, order fitting and Richardson extrapolation.

Four families share one engine:

``A_bernoulli``          (1 + 1/n)^n                                  -> e
``A_rearranged``         n/(n + 1/2) * (n/(n - 1/2))^(2n)              -> e
``A_normalized``         n^(2n+1) / ((n + 1/2)(n - 1/2)^(2n)) / e      -> 1
``A_stirling_quotient``  [n^(n+1/2) e^-n / ((n-1/2)^n e^(-n+1/2))]^2
                         / (n + 1/2)                                  -> 1
"""
from __future__ import annotations

import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

from gmpy2 import mpq

from .constants import Constant, constant_e
from .numeric import (
    DomainError,
    HPReal,
    PrecisionSpec,
    UsageError,
    as_rational,
    hp_arith,
    hp_exp,
    hp_pow,
    hp_sqrt,
    rat_to_hp,
)

EXACT_THRESHOLD = 2 ** 16
HALF = mpq(1, 2)


def _check_index(n: int) -> int:
    if int(n) != n or n < 1:
        raise DomainError(f"term index must be a positive integer, got {n!r}")
    return int(n)


def _guarded(p: PrecisionSpec, n: int) -> PrecisionSpec:
    """Working precision for an n-fold power: absorbs log2(n) bits of growth."""
    return PrecisionSpec(p.bits + p.guard_bits + max(1, n.bit_length()), 0)


# ---------------------------------------------------------------------------
# exact rational forms

def bernoulli_exact(n: int) -> mpq:
    n = _check_index(n)
    return mpq(n + 1, n) ** n


def rearranged_exact(n: int) -> mpq:
    """(2n/(2n+1)) * (2n/(2n-1))^(2n)."""
    n = _check_index(n)
    return mpq(2 * n, 2 * n + 1) * mpq(2 * n, 2 * n - 1) ** (2 * n)


def rearranged_direct(n: int) -> mpq:
    """n/(n + 1/2) * (n/(n - 1/2))^(2n), written with the half-integer shifts."""
    n = _check_index(n)
    return (n / (n + HALF)) * (n / (n - HALF)) ** (2 * n)


@dataclass(frozen=True)
class EScaled:
    """Exact ``coeff * e**e_power``; e itself is never approximated."""
    coeff: mpq
    e_power: int

    def __truediv__(self, other: "EScaled") -> "EScaled":
        return EScaled(self.coeff / other.coeff, self.e_power - other.e_power)


def normalized_exact(n: int) -> EScaled:
    """1/(n + 1/2) * n^(2n+1) / (n - 1/2)^(2n) * e^-1."""
    n = _check_index(n)
    return EScaled(mpq(1) / (n + HALF) * mpq(n) ** (2 * n + 1) / (n - HALF) ** (2 * n), -1)


def stirling_quotient_exact(n: int) -> EScaled:
    """The squared Stirling quotient, multiplied out factor by factor.

    Each factor inside the bracket is ``base**exponent``; squaring doubles
    the exponents, after which every power is integral and the e powers
    collapse to a single integer.
    """
    n = _check_index(n)
    bracket = [                       # (base, exponent, is_e)
        (mpq(n), n + HALF, False),
        (None, mpq(-n), True),
        (n - HALF, mpq(-n), False),
        (None, -(-n + HALF), True),
    ]
    coeff = mpq(1) / (n + HALF)
    e_power = mpq(0)
    for base, exponent, is_e in bracket:
        twice = 2 * exponent
        if twice.denominator != 1:
            raise AssertionError("non-integral power after squaring")
        if is_e:
            e_power += twice
        else:
            coeff *= base ** int(twice)
    return EScaled(coeff, int(e_power))


# ---------------------------------------------------------------------------
# floating terms

def term_bernoulli(n: int, p: PrecisionSpec, exact_threshold: int = EXACT_THRESHOLD) -> HPReal:
    n = _check_index(n)
    if n <= exact_threshold:
        return rat_to_hp(bernoulli_exact(n), p)
    wp = _guarded(p, n)
    return hp_pow(rat_to_hp(mpq(n + 1, n), wp), n, p)


def term_rearranged(n: int, p: PrecisionSpec, exact_threshold: int = EXACT_THRESHOLD) -> HPReal:
    n = _check_index(n)
    if n <= exact_threshold:
        return rat_to_hp(rearranged_exact(n), p)
    wp = _guarded(p, 2 * n)
    power = hp_pow(rat_to_hp(mpq(2 * n, 2 * n - 1), wp), 2 * n, wp)
    return hp_arith(power, mpq(2 * n, 2 * n + 1), "mul", p)


def _e_ref(p: PrecisionSpec) -> HPReal:
    return constant_e().to_hp(PrecisionSpec(p.working + 8, 0))


def term_normalized(n: int, p: PrecisionSpec, exact_threshold: int = EXACT_THRESHOLD) -> HPReal:
    n = _check_index(n)
    e = _e_ref(p)
    if n <= exact_threshold:
        return hp_arith(normalized_exact(n).coeff, e, "div", p)
    wp = _guarded(p, 2 * n + 1)
    top = hp_pow(rat_to_hp(n, wp), 2 * n + 1, wp)
    bottom = hp_pow(rat_to_hp(n - HALF, wp), 2 * n, wp)
    value = hp_arith(hp_arith(top, bottom, "div", wp), n + HALF, "div", wp)
    return hp_arith(value, e, "div", p)


def term_stirling_quotient(n: int, p: PrecisionSpec) -> HPReal:
    """Evaluated as written, with e^-n and e^(-n+1/2) from the exp kernel."""
    n = _check_index(n)
    wp = _guarded(p, 2 * n + 1)
    nh = rat_to_hp(n, wp)
    num = hp_pow(nh, n, wp) * hp_sqrt(nh) * hp_exp(rat_to_hp(-n, wp))
    den = hp_pow(rat_to_hp(n - HALF, wp), n, wp) * hp_exp(rat_to_hp(-n + HALF, wp))
    q = hp_arith(num, den, "div", wp)
    return hp_arith(q * q, n + HALF, "div", p)


# ---------------------------------------------------------------------------
# families

@dataclass(frozen=True)
class ApproximantFamily:
    id: str
    term: Callable[[int, PrecisionSpec], HPReal]
    expected_limit: Union[Constant, int]

    def limit_rational(self) -> mpq:
        lim = self.expected_limit
        return lim.to_rational() if isinstance(lim, Constant) else mpq(lim)


FAMILIES = {
    "A_bernoulli": ApproximantFamily("A_bernoulli", term_bernoulli, constant_e()),
    "A_rearranged": ApproximantFamily("A_rearranged", term_rearranged, constant_e()),
    "A_normalized": ApproximantFamily("A_normalized", term_normalized, 1),
    "A_stirling_quotient": ApproximantFamily("A_stirling_quotient", term_stirling_quotient, 1),
}


def get_family(family) -> ApproximantFamily:
    if isinstance(family, ApproximantFamily):
        return family
    try:
        return FAMILIES[family]
    except KeyError:
        raise UsageError(f"unknown approximant family {family!r}") from None


# ---------------------------------------------------------------------------
# convergence reports

@dataclass(frozen=True)
class Sample:
    n: int
    value: HPReal
    abs_error: HPReal
    flagged: bool = False


@dataclass(frozen=True)
class ConvergenceReport:
    family: str
    samples: tuple
    fitted_order: Optional[float]
    fitted_constant: Optional[HPReal]
    extrapolated: Optional[HPReal] = None
    local_orders: tuple = field(default=())

    @property
    def errors(self):
        return [s.abs_error for s in self.samples]


def local_order(n0: int, e0: HPReal, n1: int, e1: HPReal) -> Optional[float]:
    """log(e0/e1) / log(n1/n0); None when either error is zero."""
    if not e0 or not e1:
        return None
    return (e0.log2_abs() - e1.log2_abs()) / math.log2(n1 / n0)


def check_grid(grid: Sequence[int]) -> list:
    grid = [_check_index(n) for n in grid]
    if not grid:
        raise UsageError("empty grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("grid must be strictly increasing")
    return grid


def is_geometric(grid: Sequence[int], ratio: int = 2) -> bool:
    return len(grid) >= 1 and all(b == ratio * a for a, b in zip(grid, grid[1:]))


def build_report(label: str, grid: Sequence[int], values: Sequence[HPReal], limit,
                 p: PrecisionSpec, *, extrapolate: bool = True) -> ConvergenceReport:
    """Errors against an exact ``limit``, median local order and extrapolation."""
    limit = as_rational(limit)
    floor = mpq(1, 2 ** p.bits) * max(abs(limit), mpq(1, 2 ** 64))
    samples = []
    for n, v in zip(grid, values):
        err = abs(v.to_rational() - limit)
        flagged = err <= floor
        samples.append(Sample(n, v, rat_to_hp(err, p), flagged))
    usable = [s for s in samples if not s.flagged]
    orders = tuple(
        local_order(a.n, a.abs_error, b.n, b.abs_error) for a, b in zip(usable, usable[1:])
    )
    orders = tuple(o for o in orders if o is not None)
    fitted = statistics.median(orders) if orders else None
    const = None
    if fitted is not None:
        last = usable[-1]
        # c ~ error * n^order
        const = last.abs_error * hp_pow(rat_to_hp(last.n, p), rat_to_hp(mpq(fitted), p), p)
    extrap = None
    if extrapolate and len(samples) >= 2 and is_geometric(grid) and fitted is not None and fitted > 0.5:
        levels = min(3, len(samples) - 1)
        extrap = richardson([(s.n, s.value) for s in samples], levels, max(1, round(fitted)))
    local = tuple(
        local_order(a.n, a.abs_error, b.n, b.abs_error) for a, b in zip(samples, samples[1:])
    )
    return ConvergenceReport(label, tuple(samples), fitted, const, extrap, local)


def _eval_term(args):
    family_id, n, p = args
    return FAMILIES[family_id].term(n, p)


def sample_sequence(family, grid: Sequence[int], p: PrecisionSpec, workers: int = 1) -> ConvergenceReport:
    """Evaluate a family over ``grid`` and fit its convergence order.

    Terms are independent; with ``workers > 1`` they are computed in worker
    processes and gathered in grid order, so the report does not depend on
    scheduling.
    """
    fam = get_family(family)
    grid = check_grid(grid)
    if workers > 1 and fam.id in FAMILIES:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_eval_term, [(fam.id, n, p) for n in grid]))
    else:
        values = [fam.term(n, p) for n in grid]
    return build_report(fam.id, grid, values, fam.limit_rational(), p)


# ---------------------------------------------------------------------------
# Richardson extrapolation

def richardson(samples, levels: int, assumed_order: int = 1) -> HPReal:
    """Top of the Richardson tableau for samples at n, 2n, 4n, ...

    Assumes an error series c1/n^q + c2/n^(q+1) + ... with q =
    ``assumed_order``; level k removes the n^-(q+k-1) term.
    """
    if levels < 1:
        raise UsageError("levels must be >= 1")
    if len(samples) < levels + 1:
        raise UsageError(f"need at least {levels + 1} samples for {levels} levels")
    ns = [int(n) for n, _ in samples]
    if not is_geometric(ns):
        raise UsageError("Richardson needs a geometric grid with ratio 2")
    values = [v for _, v in samples]
    p = values[-1].precision
    wp = PrecisionSpec(p.working + 8, 0)
    row = [v.with_precision(wp) for v in values]
    for k in range(1, levels + 1):
        factor = 2 ** (assumed_order + k - 1)
        row = [
            hp_arith(hi, hp_arith(hi - lo, factor - 1, "div", wp), "add", wp)
            for lo, hi in zip(row, row[1:])
        ]
    return row[-1].with_precision(p)
