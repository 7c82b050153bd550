"""Step-by-step verification of the chain from (1 + 1/n)^n -> e to the
Wallis product.

=====  ==============  ==================================================
step   kind            what is checked
=====  ==============  ==================================================
S1     limit           (1+1/n)^n and the rearranged form both approach e
S2     exact           rearranged form / e equals the normalized form
S3     exact           normalized form equals the squared Stirling quotient
S4     limit           Gamma(n+1)^2 / (Gamma(n+1/2) Gamma(n+3/2)) -> 1
S5     exact           gamma ratios equal the half-products
S6     exact + limit   product of the gamma ratios is 2 W_n; 2 W_n -> pi
=====  ==============  ==================================================

Exact steps compare two independently coded expressions in exact
arithmetic, so their residuals are exactly zero or the step fails.  Limit
steps pass when the residuals decrease with a fitted order of at least
:data:`ORDER_THRESHOLD`.
"""
from __future__ import annotations

import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from gmpy2 import mpq

from . import products, sequences
from .constants import constant_e, constant_pi
from .numeric import HPReal, PrecisionSpec, UsageError, rat_to_hp, ulp_error
from .special import gamma_ratio_np1_over_nph, gamma_ratio_np1_over_np3h

ORDER_THRESHOLD = 0.9
NUMERIC_ULPS = 8

STEP_IDS = ("S1", "S2", "S3", "S4", "S5", "S6")
STEP_KINDS = {
    "S1": "limit_claim",
    "S2": "exact_identity",
    "S3": "exact_identity",
    "S4": "limit_claim",
    "S5": "exact_identity",
    "S6": "exact_identity+limit_claim",
}
STEP_TITLES = {
    "S1": "(1+1/n)^n and n/(n+1/2) (n/(n-1/2))^(2n) share the limit e",
    "S2": "dividing the rearranged form by e gives the normalized form",
    "S3": "normalized form as a squared Stirling quotient",
    "S4": "Gamma(n+1)^2 / (Gamma(n+1/2) Gamma(n+3/2)) -> 1",
    "S5": "gamma ratios expanded by duplication into half-products",
    "S6": "product of the half-products is 2 W_n, which tends to pi",
}


@dataclass(frozen=True)
class GridPolicy:
    exact: tuple = tuple(range(1, 65))
    limit: tuple = tuple(2 ** k for k in range(7, 15))

    def grid_for(self, step: str) -> tuple:
        return self.limit if STEP_KINDS[step] != "exact_identity" else self.exact


@dataclass(frozen=True)
class StepResult:
    step: str
    kind: str
    grid: tuple
    residuals: tuple          # exact mpq for exact steps, HPReal for limits
    fitted_order: Optional[float]
    verdict: str
    notes: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


@dataclass(frozen=True)
class ChainReport:
    steps: tuple
    pi_estimate: Optional[HPReal] = None
    pi_error: Optional[HPReal] = None
    pi_terms: Optional[int] = None

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __len__(self):
        return len(self.steps)


# ---------------------------------------------------------------------------
# helpers

def _limit_verdict(residuals: Sequence[HPReal], grid: Sequence[int], label: str):
    """(fitted_order, pass?, note) for a decaying residual sequence."""
    nonzero = [(n, r) for n, r in zip(grid, residuals) if r]
    if len(nonzero) < 2:
        return None, False, f"{label}: insufficient samples for order fit"
    orders = [
        sequences.local_order(n0, r0, n1, r1)
        for (n0, r0), (n1, r1) in zip(nonzero, nonzero[1:])
    ]
    fitted = statistics.median(orders)
    decreasing = all(b < a for a, b in zip(residuals, residuals[1:]))
    ok = decreasing and fitted >= ORDER_THRESHOLD
    note = f"{label}: fitted order {fitted:.4f}"
    if not decreasing:
        note += "; residuals not strictly decreasing"
    if fitted < ORDER_THRESHOLD:
        note += f"; below threshold {ORDER_THRESHOLD}"
    return fitted, ok, note


def _bracketed_residual(value: mpq, p: PrecisionSpec, *, ratio: bool) -> HPReal:
    """Upper bound on |value/pi - 1| (ratio) or |value - pi| from the pi bracket.

    The bound is rounded at ``p`` and then widened by one ulp.
    """
    lo, hi = constant_pi().bracket()
    if ratio:
        cands = (abs(value / lo - 1), abs(value / hi - 1))
    else:
        cands = (abs(value - lo), abs(value - hi))
    worst = max(cands)
    r = rat_to_hp(worst, p)
    return rat_to_hp(r.to_rational() + r.ulp(), p) if r else r


def s4_residual(n: int, p: PrecisionSpec) -> HPReal:
    """|coeff7 * coeff8 / pi - 1| from the exact gamma ratios."""
    g7 = gamma_ratio_np1_over_nph(n)
    g8 = gamma_ratio_np1_over_np3h(n)
    g = g7 * g8
    if g.sqrt_pi_power != -2:
        raise AssertionError("gamma ratio product must carry 1/pi")
    return _bracketed_residual(g.coeff, p, ratio=True)


def wallis_ratio_residual(n: int, p: PrecisionSpec) -> HPReal:
    """|2 W_n / pi - 1| from the Wallis partial product."""
    w = products.partial_product("wallis", n, "binsplit_rational")
    return _bracketed_residual(2 * w, p, ratio=True)


# ---------------------------------------------------------------------------
# steps

def _s1(grid, p):
    e_lit = constant_e().to_rational()
    rearr = [sequences.term_rearranged(n, p) for n in grid]
    bern = [sequences.term_bernoulli(n, p) for n in grid]
    res = tuple(rat_to_hp(abs(v.to_rational() - e_lit), p) for v in rearr)
    res_b = tuple(rat_to_hp(abs(v.to_rational() - e_lit), p) for v in bern)
    order, ok, note = _limit_verdict(res, grid, "rearranged")
    order_b, ok_b, note_b = _limit_verdict(res_b, grid, "bernoulli")
    return res, order, ok and ok_b, f"{note}; {note_b}", {"bernoulli_order": order_b}


def _s2(grid, p):
    res = []
    for n in grid:
        rearranged = sequences.EScaled(sequences.rearranged_direct(n), 0)
        e = sequences.EScaled(mpq(1), 1)
        normalized = sequences.normalized_exact(n)
        lhs = rearranged / e
        if lhs.e_power != normalized.e_power:
            res.append(None)
            continue
        res.append(abs(lhs.coeff - normalized.coeff))
    ok = all(r == 0 for r in res)
    return tuple(res), None, ok, "rational parts compared with e kept symbolic", {}


def _s3(grid, p):
    res = []
    worst = mpq(0)
    for n in grid:
        normalized = sequences.normalized_exact(n)
        quotient = sequences.stirling_quotient_exact(n)
        res.append(abs(normalized.coeff - quotient.coeff)
                   if normalized.e_power == quotient.e_power else None)
        a = sequences.term_normalized(n, p)
        b = sequences.term_stirling_quotient(n, p)
        worst = max(worst, ulp_error(b, a.to_rational()))
    exact_ok = all(r == 0 for r in res)
    numeric_ok = worst <= NUMERIC_ULPS
    note = f"numeric agreement {float(worst):.3g} ulp (limit {NUMERIC_ULPS})"
    return tuple(res), None, exact_ok and numeric_ok, note, {"max_ulps": float(worst)}


def _s4(grid, p):
    res = tuple(s4_residual(n, p) for n in grid)
    order, ok, note = _limit_verdict(res, grid, "gamma ratio")
    return res, order, ok, note, {}


def _s5(grid, p):
    res = []
    for n in grid:
        v7 = products.identity_eq7(n)
        v8 = products.identity_eq8(n)
        res.append(v7.residual + v8.residual)
    return tuple(res), None, all(r == 0 for r in res), "half-product coefficient identities", {}


def _s6(grid, p):
    res = []
    limit = []
    for n in grid:
        c = (gamma_ratio_np1_over_nph(n) * gamma_ratio_np1_over_np3h(n)).coeff
        w = products.partial_product("wallis", n, "binsplit_rational")
        res.append(abs(c - 2 * w) + abs(2 * w - 2 * products.wallis_closed_form(n)))
        limit.append(_bracketed_residual(2 * w, p, ratio=False))
    exact_ok = all(r == 0 for r in res)
    order, limit_ok, note = _limit_verdict(limit, grid, "2 W_n -> pi")
    n_last = grid[-1]
    estimate = rat_to_hp(2 * products.partial_product("wallis", n_last, "binsplit_rational"), p)
    extra = {"pi_estimate": estimate, "pi_error": limit[-1], "pi_terms": n_last,
             "limit_residuals": tuple(limit)}
    if not exact_ok:
        note = "exact part failed; " + note
    return tuple(res), order, exact_ok and limit_ok, note, extra


_CHECKS = {"S1": _s1, "S2": _s2, "S3": _s3, "S4": _s4, "S5": _s5, "S6": _s6}


def verify_step(step: str, grid: Sequence[int], p: PrecisionSpec) -> StepResult:
    """Run one step's check over ``grid``; failures come back as verdicts."""
    if step not in _CHECKS:
        raise UsageError(f"unknown step {step!r}")
    grid = tuple(sequences.check_grid(grid))
    res, order, ok, notes, extra = _CHECKS[step](grid, p)
    if any(r is None for r in res):
        ok = False
        notes += "; mismatched e powers"
    return StepResult(step, STEP_KINDS[step], grid, res, order,
                      "pass" if ok else "fail", notes, extra)


def verify_all(policy: GridPolicy = GridPolicy(), p: PrecisionSpec = PrecisionSpec(128),
               steps: Sequence[str] = STEP_IDS, workers: int = 1) -> ChainReport:
    """S1..S6 in order; a failing step does not stop the chain."""
    for s in steps:
        if s not in _CHECKS:
            raise UsageError(f"unknown step {s!r}")
    jobs = [(s, policy.grid_for(s)) for s in STEP_IDS if s in steps]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: verify_step(job[0], job[1], p), jobs))
    else:
        results = [verify_step(s, g, p) for s, g in jobs]
    s6 = next((r for r in results if r.step == "S6"), None)
    if s6 is not None and "pi_estimate" in s6.extra:
        return ChainReport(tuple(results), s6.extra["pi_estimate"], s6.extra["pi_error"],
                           s6.extra["pi_terms"])
    return ChainReport(tuple(results))


def predicted_wallis_error(n: int) -> float:
    """pi / (4n), the leading term of pi - 2 W_n."""
    return math.pi / (4 * n)
