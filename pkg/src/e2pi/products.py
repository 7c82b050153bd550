"""Wallis partial products and the two half-products it factors into.

Three products are supported, each with a factor function and an
independently coded closed form:

========================  ====================  ==============================
id                        factor(j)             closed form at n
========================  ====================  ==============================
``wallis``                4j^2 / (4j^2 - 1)     16^n (n!)^4 / ((2n)! (2n+1)!)
``even_over_odd_minus``   2j / (2j - 1)         4^n (n!)^2 / (2n)!
``even_over_odd_plus``    2j / (2j + 1)         4^n (n!)^2 / (2n+1)!
========================  ====================  ==============================

Five evaluation strategies compute the same partial product; the two
binary-splitting strategies share one split tree, so their unreduced
integers, and therefore their canonical results, are identical.
"""
from __future__ import annotations

import hashlib
import math
import platform
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import gmpy2
from gmpy2 import mpq, mpz

from .numeric import (
    DomainError,
    HPReal,
    PrecisionSpec,
    ResourceError,
    UsageError,
    hp_arith,
    rat_to_hp,
)
from .special import gamma_ratio_np1_over_nph, gamma_ratio_np1_over_np3h

# results larger than this (estimated bytes) raise ResourceError
DEFAULT_MEMORY_BUDGET = 1 << 31

# ranges at most this long are multiplied out directly inside binsplit
LEAF_SIZE = 16


# ---------------------------------------------------------------------------
# product specs

def _wallis_terms(j: int):
    s = 4 * j * j
    return s, s - 1


def _minus_terms(j: int):
    return 2 * j, 2 * j - 1


def _plus_terms(j: int):
    return 2 * j, 2 * j + 1


def wallis_closed_form(n: int) -> mpq:
    f = gmpy2.fac(n)
    return mpq(mpz(16) ** n * f ** 4, gmpy2.fac(2 * n) * gmpy2.fac(2 * n + 1))


def minus_closed_form(n: int) -> mpq:
    return mpq(mpz(4) ** n * gmpy2.fac(n) ** 2, gmpy2.fac(2 * n))


def plus_closed_form(n: int) -> mpq:
    return mpq(mpz(4) ** n * gmpy2.fac(n) ** 2, gmpy2.fac(2 * n + 1))


@dataclass(frozen=True)
class ProductSpec:
    id: str
    terms: Callable[[int], tuple]
    closed_form: Callable[[int], mpq]

    def factor(self, j: int) -> mpq:
        return mpq(*self.terms(j))


PRODUCTS = {
    "wallis": ProductSpec("wallis", _wallis_terms, wallis_closed_form),
    "even_over_odd_minus": ProductSpec("even_over_odd_minus", _minus_terms, minus_closed_form),
    "even_over_odd_plus": ProductSpec("even_over_odd_plus", _plus_terms, plus_closed_form),
}


def get_spec(spec) -> ProductSpec:
    if isinstance(spec, ProductSpec):
        return spec
    try:
        return PRODUCTS[spec]
    except KeyError:
        raise UsageError(f"unknown product {spec!r}") from None


# ---------------------------------------------------------------------------
# strategies

STRATEGY_KINDS = ("naive_rational", "naive_float", "pairwise_float",
                  "binsplit_rational", "binsplit_parallel")
EXACT_KINDS = ("naive_rational", "binsplit_rational", "binsplit_parallel")


@dataclass(frozen=True)
class EvalStrategy:
    kind: str
    workers: int = 1

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise UsageError(f"unknown strategy {self.kind!r}")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")

    @property
    def exact(self) -> bool:
        return self.kind in EXACT_KINDS

    @classmethod
    def parse(cls, name: str, workers: int = 1) -> "EvalStrategy":
        return cls(name.strip().replace("-", "_"), workers)


def _strategy(strategy) -> EvalStrategy:
    if isinstance(strategy, EvalStrategy):
        return strategy
    return EvalStrategy.parse(strategy)


def float_precision(p: PrecisionSpec, n: int) -> PrecisionSpec:
    """Working precision of the float strategies: guard = 32 + ceil(log2 n)."""
    return PrecisionSpec(p.bits + 32 + max(0, math.ceil(math.log2(max(n, 1)))), 0)


# ---------------------------------------------------------------------------
# binary splitting

def binsplit(spec, lo: int, hi: int) -> tuple:
    """Unreduced ``(num, den)`` of prod_{j=lo..hi} factor(j).

    Splits at ``(lo + hi) // 2``; the tree depends on (lo, hi) only.
    """
    if not 1 <= lo <= hi:
        raise DomainError("binsplit needs 1 <= lo <= hi")
    return _binsplit(get_spec(spec).terms, lo, hi)


def _binsplit(terms, lo: int, hi: int) -> tuple:
    if hi - lo < LEAF_SIZE:
        num, den = mpz(1), mpz(1)
        for j in range(lo, hi + 1):
            a, b = terms(j)
            num *= a
            den *= b
        return num, den
    mid = (lo + hi) // 2
    ln, ld = _binsplit(terms, lo, mid)
    rn, rd = _binsplit(terms, mid + 1, hi)
    return ln * rn, ld * rd


def _split_nodes(lo: int, hi: int, depth: int) -> list:
    """Nodes of the fixed split tree at ``depth`` (leaves that end early kept)."""
    if depth == 0 or hi - lo < LEAF_SIZE:
        return [(lo, hi)]
    mid = (lo + hi) // 2
    return _split_nodes(lo, mid, depth - 1) + _split_nodes(mid + 1, hi, depth - 1)


def _subtree(args):
    spec_id, lo, hi = args
    return _binsplit(PRODUCTS[spec_id].terms, lo, hi)


def _merge(lo: int, hi: int, depth: int, parts: dict) -> tuple:
    if depth == 0 or hi - lo < LEAF_SIZE:
        return parts[(lo, hi)]
    mid = (lo + hi) // 2
    ln, ld = _merge(lo, mid, depth - 1, parts)
    rn, rd = _merge(mid + 1, hi, depth - 1, parts)
    return ln * rn, ld * rd


def binsplit_parallel(spec, lo: int, hi: int, workers: int) -> tuple:
    """Same tree as :func:`binsplit`, top subtrees farmed out to processes."""
    spec = get_spec(spec)
    if workers <= 1 or hi - lo < 4 * LEAF_SIZE:
        return binsplit(spec, lo, hi)
    depth = max(1, math.ceil(math.log2(workers)))
    nodes = _split_nodes(lo, hi, depth)
    if PRODUCTS.get(spec.id) is spec:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_subtree, [(spec.id, a, b) for a, b in nodes]))
    else:
        # unregistered specs may not survive pickling; evaluate in-process
        results = [_binsplit(spec.terms, a, b) for a, b in nodes]
    return _merge(lo, hi, depth, dict(zip(nodes, results)))


# ---------------------------------------------------------------------------
# partial products

def estimated_bytes(spec, n: int) -> int:
    """Rough size of the unreduced numerator and denominator."""
    a, b = get_spec(spec).terms(max(n, 1))
    return n * (int(a).bit_length() + int(b).bit_length()) // 8


def partial_product(spec, n: int, strategy="binsplit_rational", p: Optional[PrecisionSpec] = None,
                    memory_budget: int = DEFAULT_MEMORY_BUDGET) -> Union[mpq, HPReal]:
    """prod_{j=1..n} factor(j); exact rational or HPReal depending on strategy."""
    spec = get_spec(spec)
    strategy = _strategy(strategy)
    if n < 0:
        raise DomainError("n must be non-negative")
    if not strategy.exact and p is None:
        raise UsageError(f"strategy {strategy.kind} needs a precision")
    if n == 0:
        return mpq(1) if strategy.exact else rat_to_hp(1, p)
    if estimated_bytes(spec, n) > memory_budget:
        raise ResourceError(f"{spec.id} at n={n} exceeds the memory budget of {memory_budget} bytes")

    kind = strategy.kind
    if kind == "naive_rational":
        acc = mpq(1)
        for j in range(1, n + 1):
            acc *= spec.factor(j)
        return acc
    if kind == "binsplit_rational":
        return mpq(*binsplit(spec, 1, n))
    if kind == "binsplit_parallel":
        return mpq(*binsplit_parallel(spec, 1, n, strategy.workers))

    wp = float_precision(p, n)
    if kind == "naive_float":
        acc = rat_to_hp(1, wp)
        for j in range(1, n + 1):
            acc = hp_arith(acc, spec.factor(j), "mul", wp)
        return acc.with_precision(p)
    # pairwise_float
    level = [rat_to_hp(spec.factor(j), wp) for j in range(1, n + 1)]
    while len(level) > 1:
        nxt = [hp_arith(a, b, "mul", wp) for a, b in zip(level[::2], level[1::2])]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0].with_precision(p)


def wallis_pi_estimate(n: int, strategy="binsplit_rational", p: Optional[PrecisionSpec] = None) -> HPReal:
    """2 W_n, which increases toward pi."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if p is None:
        raise UsageError("wallis_pi_estimate needs a precision")
    w = partial_product("wallis", n, strategy, p)
    if isinstance(w, HPReal):
        return hp_arith(w, 2, "mul", p)
    return rat_to_hp(2 * w, p)


# ---------------------------------------------------------------------------
# exact identities

@dataclass(frozen=True)
class IdentityVerdict:
    """Three independently computed values that must coincide."""
    n: int
    product: mpq
    closed_form: mpq
    gamma_coeff: mpq

    @property
    def product_matches_closed_form(self) -> bool:
        return self.product == self.closed_form

    @property
    def product_matches_gamma(self) -> bool:
        return self.product == self.gamma_coeff

    @property
    def ok(self) -> bool:
        return self.product_matches_closed_form and self.product_matches_gamma

    @property
    def residual(self) -> mpq:
        return abs(self.product - self.closed_form) + abs(self.product - self.gamma_coeff)


def identity_eq7(n: int) -> IdentityVerdict:
    """prod 2j/(2j-1) against 4^n (n!)^2/(2n)! and Gamma(n+1)/Gamma(n+1/2)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    product = partial_product("even_over_odd_minus", n, "binsplit_rational")
    closed = minus_closed_form(n)
    g = gamma_ratio_np1_over_nph(n)
    if g.sqrt_pi_power != -1:
        raise AssertionError("unexpected sqrt(pi) power")
    return IdentityVerdict(n, product, closed, g.coeff)


def identity_eq8(n: int) -> IdentityVerdict:
    """2 prod 2j/(2j+1) against 2 * 4^n (n!)^2/(2n+1)! and Gamma(n+1)/Gamma(n+3/2)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    product = 2 * partial_product("even_over_odd_plus", n, "binsplit_rational")
    closed = 2 * plus_closed_form(n)
    g = gamma_ratio_np1_over_np3h(n)
    if g.sqrt_pi_power != -1:
        raise AssertionError("unexpected sqrt(pi) power")
    return IdentityVerdict(n, product, closed, g.coeff)


# ---------------------------------------------------------------------------
# benchmarking

def canonical_digest(value) -> str:
    if isinstance(value, HPReal):
        text = f"hp:{value.sign}:{value.mantissa}:{value.exponent}:{value.precision.bits}"
    else:
        q = mpq(value)
        text = f"q:{q.numerator}/{q.denominator}"
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True)
class BenchRecord:
    spec: str
    strategy: str
    n: int
    wall_time: Optional[float]
    peak_bytes: int
    result_digest: Optional[str]
    times: tuple = field(default=())
    error: Optional[str] = None


def machine_descriptor() -> str:
    import os
    return f"{platform.platform()}; {platform.processor() or platform.machine()}; cpus={os.cpu_count()}; python {platform.python_version()}; gmp {gmpy2.mp_version()}"


def bench_product(spec, n_list: Sequence[int], strategies: Sequence, repeats: int = 3,
                  p: Optional[PrecisionSpec] = None,
                  memory_budget: int = DEFAULT_MEMORY_BUDGET) -> list:
    """Median wall time per (n, strategy).

    ``peak_bytes`` is best-effort: the size of the unreduced integers the
    strategy holds at its root, which dominates peak memory for large n.
    A cell that raises ResourceError is recorded with ``error`` set.
    """
    if repeats < 1:
        raise UsageError("repeats must be >= 1")
    spec = get_spec(spec)
    p = p or PrecisionSpec(128)
    strategies = [_strategy(s) for s in strategies]
    records = []
    for n in n_list:
        for st in strategies:
            times = []
            result = None
            try:
                for _ in range(repeats):
                    t0 = time.perf_counter()
                    result = partial_product(spec, n, st, p, memory_budget)
                    times.append(time.perf_counter() - t0)
            except ResourceError as exc:
                records.append(BenchRecord(spec.id, st.kind, n, None, 0, None, (), str(exc)))
                continue
            records.append(BenchRecord(
                spec.id, st.kind, n, statistics.median(times),
                estimated_bytes(spec, n), canonical_digest(result), tuple(times)))
    return records


def digest_mismatches(records: Sequence[BenchRecord]) -> list:
    """(spec, n) pairs where exact strategies disagree."""
    seen: dict = {}
    bad = []
    for r in records:
        if r.strategy not in EXACT_KINDS or r.result_digest is None:
            continue
        key = (r.spec, r.n)
        if key in seen and seen[key] != r.result_digest and key not in bad:
            bad.append(key)
        seen.setdefault(key, r.result_digest)
    return bad
