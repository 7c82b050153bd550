"""``e2pi`` command-line front end.

Exit codes: 0 success, 1 verification or correctness failure, 2 usage error.
All numbers in JSON and CSV output are decimal strings.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

from gmpy2 import mpq

from . import __version__, derivation, products, sequences
from .constants import constant_e, constant_pi
from .numeric import DomainError, PrecisionSpec, ResourceError, UsageError, format_rational, rat_to_hp
from .special import gamma_ratio_np1_over_nph, gamma_ratio_np1_over_np3h

CONFIG_ENV = "E2PI_CONFIG"
AUTO_TERMS_CAP = 10 ** 8
ERROR_DIGITS = 6
FORMATS = ("json", "csv", "text")


class CliError(Exception):
    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class CliConfig:
    default_digits: int = 20
    default_strategy: str = "binsplit_rational"
    output_format: str = "text"
    workers: int = 1
    exact_threshold: int = sequences.EXACT_THRESHOLD

    def __post_init__(self):
        if self.default_digits < 6:
            raise CliError("default_digits must be >= 6")
        if self.workers < 1:
            raise CliError("workers must be >= 1")
        if self.output_format not in FORMATS:
            raise CliError(f"output_format must be one of {', '.join(FORMATS)}")
        if self.exact_threshold < 1:
            raise CliError("exact_threshold must be >= 1")
        try:
            products.EvalStrategy.parse(self.default_strategy)
        except UsageError as exc:
            raise CliError(str(exc)) from None


def default_config_path() -> Path:
    base = os.environ.get("XDG_CONFIG_HOME") or os.path.join(os.path.expanduser("~"), ".config")
    return Path(base) / "e2pi" / "config"


def load_config(path=None) -> CliConfig:
    """Flat ``key = value`` file; ``#`` starts a comment.

    Lookup order: explicit path, then $E2PI_CONFIG, then the default path
    (silently skipped if missing).
    """
    explicit = path or os.environ.get(CONFIG_ENV)
    target = Path(explicit) if explicit else default_config_path()
    if not target.exists():
        if explicit:
            raise CliError(f"config file not found: {target}")
        return CliConfig()
    types = {f.name: f.type for f in fields(CliConfig)}
    values = {}
    for lineno, raw in enumerate(target.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or key not in types:
            raise CliError(f"{target}:{lineno}: unrecognized line {raw.strip()!r}")
        if types[key] in ("int", int):
            try:
                values[key] = int(value)
            except ValueError:
                raise CliError(f"{target}:{lineno}: {key} must be an integer") from None
        else:
            values[key] = value.replace("-", "_") if key == "default_strategy" else value
    return CliConfig(**values)


# ---------------------------------------------------------------------------
# output

def dec(x, digits: int | None = None) -> str:
    """Decimal string for ints, rationals and HPReals."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format_rational(mpq(x), digits or 17) if math.isfinite(x) else str(x)
    if hasattr(x, "to_decimal"):
        return x.to_decimal(digits)
    return format_rational(x, digits or 30)


def order_str(x) -> str:
    return "" if x is None else f"{x:.6f}"


def envelope(command: str, parameters: dict, results: dict, timing: float) -> dict:
    return {
        "command": command,
        "parameters": {k: _stringify(v) for k, v in parameters.items()},
        "results": _stringify(results),
        "timing": f"{timing:.6f}",
        "tool_version": __version__,
    }


def _stringify(v):
    if isinstance(v, dict):
        return {str(k): _stringify(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_stringify(x) for x in v]
    if v is None or isinstance(v, str):
        return v
    if isinstance(v, bool):
        return v
    return dec(v)


def to_json(env: dict) -> str:
    return json.dumps(env, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def to_csv(env: dict) -> str:
    results = env["results"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if "rows" in results:
        writer.writerow(results["columns"])
        writer.writerows(results["rows"])
    else:
        keys = [k for k in sorted(results) if not isinstance(results[k], (dict, list))]
        writer.writerow(keys)
        writer.writerow([results[k] if results[k] is not None else "" for k in keys])
    return buf.getvalue()


def to_text(env: dict) -> str:
    out = [f"e2pi {env['command']}  (version {env['tool_version']}, {env['timing']} s)"]
    for k, v in sorted(env["parameters"].items()):
        out.append(f"  {k} = {v}")
    results = env["results"]
    for k in sorted(results):
        v = results[k]
        if k in ("rows", "columns") or isinstance(v, (dict, list)):
            continue
        out.append(f"{k}: {v if v is not None else '-'}")
    for k in sorted(results):
        v = results[k]
        if k == "rows" or not isinstance(v, list) or not v or not isinstance(v[0], dict):
            continue
        out.append(f"{k}:")
        for item in v:
            out.append("  " + "  ".join(f"{ik}={iv if iv is not None else '-'}" for ik, iv in sorted(item.items())))
    if "rows" in results:
        cols = results["columns"]
        rows = [[c if c not in (None, "") else "-" for c in r] for r in results["rows"]]
        widths = [max(len(str(c)) for c in col) for col in zip(cols, *rows)]
        out.append("  ".join(str(c).ljust(w) for c, w in zip(cols, widths)))
        out.append("  ".join("-" * w for w in widths))
        for r in rows:
            out.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)))
    return "\n".join(out) + "\n"


RENDERERS = {"json": to_json, "csv": to_csv, "text": to_text}


# ---------------------------------------------------------------------------
# commands

def _precision(args, digits: int) -> PrecisionSpec:
    if args.precision_bits:
        if args.precision_bits < 16:
            raise CliError("--precision-bits must be >= 16")
        return PrecisionSpec(args.precision_bits)
    return PrecisionSpec(max(64, math.ceil(digits * math.log2(10)) + 16))


def _strategy(args, cfg: CliConfig) -> products.EvalStrategy:
    name = args.strategy or cfg.default_strategy
    try:
        return products.EvalStrategy.parse(name, args.workers or cfg.workers)
    except UsageError as exc:
        raise CliError(str(exc)) from None


def _wallis_estimates(grid, strategy, p):
    return [products.wallis_pi_estimate(n, strategy, p) for n in grid]


def cmd_pi(args, cfg):
    digits = args.digits or cfg.default_digits
    p = _precision(args, digits)
    strategy = _strategy(args, cfg)
    pi_ref = constant_pi()
    levels = args.levels
    params = {"digits": digits, "precision_bits": p.bits, "strategy": strategy.kind,
              "workers": strategy.workers, "accelerate": args.accelerate, "levels": levels if args.accelerate else None}
    warning = None
    if args.terms == "auto":
        needed = math.ceil(math.pi / 4 * 10 ** digits)
        if not args.accelerate:
            if needed > AUTO_TERMS_CAP:
                raise CliError(
                    f"reaching 1e-{digits} needs about {needed:.3g} Wallis terms (the error "
                    f"shrinks like pi/(4n)); the cap is {AUTO_TERMS_CAP:.0e}. "
                    "Use --accelerate or ask for fewer digits.")
            terms = needed
        else:
            terms, warning = _auto_accelerated(levels, strategy, p, digits)
    else:
        try:
            terms = int(args.terms)
        except ValueError:
            raise CliError(f"--terms must be a positive integer or 'auto', got {args.terms!r}") from None
        if terms < 1:
            raise CliError("--terms must be >= 1")
    params["terms"] = terms
    if args.accelerate:
        if terms % (2 ** levels):
            raise CliError(f"--terms must be divisible by 2^levels = {2 ** levels} with --accelerate")
        grid = [terms >> k for k in range(levels, -1, -1)]
        raw = _wallis_estimates(grid, strategy, p)
        estimate = sequences.richardson(list(zip(grid, raw)), levels, 1)
        raw_error = abs(raw[-1].to_rational() - pi_ref.to_rational())
    else:
        estimate = products.wallis_pi_estimate(terms, strategy, p)
        raw_error = None
    error = abs(estimate.to_rational() - pi_ref.to_rational())
    results = {
        "estimate": dec(estimate, digits),
        "reference": pi_ref.decimal_digits[:digits + 1],
        "abs_error": format_rational(error, ERROR_DIGITS),
        "predicted_error": format_rational(mpq(math.pi / (4 * terms)), ERROR_DIGITS),
        "terms": terms,
        "raw_abs_error": format_rational(raw_error, ERROR_DIGITS) if raw_error is not None else None,
        "warning": warning,
    }
    return 0, params, results


def _auto_accelerated(levels, strategy, p, digits):
    """Smallest power-of-two n whose extrapolated estimate has settled."""
    tol = mpq(1, 10 ** digits)
    prev = None
    k = levels + 2
    while True:
        n = 2 ** k
        if n > AUTO_TERMS_CAP:
            raise CliError(f"accelerated estimate did not settle to 1e-{digits} below {AUTO_TERMS_CAP:.0e} terms")
        grid = [n >> j for j in range(levels, -1, -1)]
        est = sequences.richardson(list(zip(grid, _wallis_estimates(grid, strategy, p))), levels, 1)
        if prev is not None and abs(est.to_rational() - prev.to_rational()) < tol:
            return n, None
        prev = est
        k += 1


def cmd_e(args, cfg):
    digits = args.digits or cfg.default_digits
    p = _precision(args, digits)
    n = args.n
    if n < 1:
        raise CliError("--n must be >= 1")
    thr = cfg.exact_threshold
    value = sequences.term_bernoulli(n, p, thr)
    e_ref = constant_e()
    err = rat_to_hp(abs(value.to_rational() - e_ref.to_rational()), p)
    order = None
    if n >= 2:
        half = n // 2
        prev = sequences.term_bernoulli(half, p, thr)
        prev_err = rat_to_hp(abs(prev.to_rational() - e_ref.to_rational()), p)
        order = sequences.local_order(half, prev_err, n, err)
    params = {"digits": digits, "precision_bits": p.bits, "n": n}
    results = {
        "value": dec(value, digits),
        "reference": e_ref.decimal_digits[:digits + 1],
        "abs_error": dec(err, ERROR_DIGITS),
        "local_order": order_str(order) or None,
    }
    return 0, params, results


def _parse_steps(text: str):
    if text.strip().lower() == "all":
        return list(derivation.STEP_IDS)
    steps = [s.strip().upper() for s in text.split(",") if s.strip()]
    bad = [s for s in steps if s not in derivation.STEP_IDS]
    if bad or not steps:
        raise CliError(f"unknown step {', '.join(bad) or text!r}; expected S1..S6 or 'all'")
    return steps


def cmd_verify(args, cfg):
    steps = _parse_steps(args.steps)
    bits = args.precision_bits or 128
    if bits < 16:
        raise CliError("--precision-bits must be >= 16")
    p = PrecisionSpec(bits)
    if args.exact_max < 1 or args.limit_start < 1 or args.limit_count < 1:
        raise CliError("grid flags must be positive")
    policy = derivation.GridPolicy(
        exact=tuple(range(1, args.exact_max + 1)),
        limit=tuple(args.limit_start * 2 ** k for k in range(args.limit_count)),
    )
    report = derivation.verify_all(policy, p, steps, workers=args.workers or cfg.workers)
    rows = []
    records = []
    for r in report:
        for n, res in zip(r.grid, r.residuals):
            rows.append([r.step, str(n), _residual_str(res), r.verdict])
        records.append({
            "step": r.step, "kind": r.kind, "title": derivation.STEP_TITLES[r.step],
            "verdict": r.verdict, "fitted_order": order_str(r.fitted_order) or None,
            "notes": r.notes, "grid_size": len(r.grid),
        })
    params = {"steps": ",".join(steps), "precision_bits": p.bits,
              "exact_max": args.exact_max, "limit_start": args.limit_start,
              "limit_count": args.limit_count}
    results = {
        "passed": report.passed,
        "steps": records,
        "pi_estimate": dec(report.pi_estimate, 30) if report.pi_estimate is not None else None,
        "pi_error": dec(report.pi_error, ERROR_DIGITS) if report.pi_error is not None else None,
        "pi_terms": report.pi_terms,
        "columns": ["step", "n", "residual", "verdict"],
        "rows": rows,
    }
    return (0 if report.passed else 1), params, results


def _residual_str(r) -> str:
    if r is None:
        return "mismatch"
    if hasattr(r, "to_decimal"):
        return r.to_decimal(ERROR_DIGITS)
    return "0" if r == 0 else format_rational(r, ERROR_DIGITS)


def cmd_convergence(args, cfg):
    if args.start < 1 or args.count < 1 or args.ratio < 2:
        raise CliError("need --start >= 1, --count >= 1 and --ratio >= 2")
    digits = args.digits or cfg.default_digits
    p = _precision(args, digits)
    grid = [args.start * args.ratio ** k for k in range(args.count)]
    if args.target == "pi":
        values = [rat_to_hp(2 * products.partial_product("wallis", n, "binsplit_rational"), p) for n in grid]
        limit = constant_pi().to_rational()
    elif args.target == "e":
        values = [sequences.term_bernoulli(n, p, cfg.exact_threshold) for n in grid]
        limit = constant_e().to_rational()
    else:
        pi = constant_pi().to_rational()
        values = []
        for n in grid:
            c = (gamma_ratio_np1_over_nph(n) * gamma_ratio_np1_over_np3h(n)).coeff
            values.append(rat_to_hp(c / pi, p))
        limit = mpq(1)
    report = sequences.build_report(args.target, grid, values, limit, p,
                                    extrapolate=args.ratio == 2)
    rows = []
    for i, s in enumerate(report.samples):
        lo = report.local_orders[i - 1] if i else None
        rows.append([str(s.n), dec(s.value, digits), dec(s.abs_error, ERROR_DIGITS), order_str(lo)])
    params = {"target": args.target, "start": args.start, "ratio": args.ratio,
              "count": args.count, "digits": digits, "precision_bits": p.bits}
    results = {
        "fitted_order": order_str(report.fitted_order) or None,
        "fitted_constant": dec(report.fitted_constant, ERROR_DIGITS) if report.fitted_constant is not None else None,
        "extrapolated": dec(report.extrapolated, digits) if report.extrapolated is not None else None,
        "columns": ["n", "value", "error", "local_order"],
        "rows": rows,
    }
    return 0, params, results


def _int_list(text: str):
    try:
        vals = [int(float(t)) if "e" in t.lower() else int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise CliError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise CliError("n values must be positive")
    return vals


def cmd_bench(args, cfg):
    if args.repeats < 1:
        raise CliError("--repeats must be >= 1")
    try:
        spec = products.get_spec(args.spec.replace("-", "_"))
        strategies = [products.EvalStrategy.parse(s, args.workers or cfg.workers)
                      for s in args.strategies.split(",") if s.strip()]
    except UsageError as exc:
        raise CliError(str(exc)) from None
    if not strategies:
        raise CliError("no strategies given")
    n_list = _int_list(args.n)
    digits = args.digits or cfg.default_digits
    p = _precision(args, digits)
    records = products.bench_product(spec, n_list, strategies, args.repeats, p)
    mismatches = products.digest_mismatches(records)
    rows = [[r.spec, r.strategy, str(r.n),
             f"{r.wall_time:.6f}" if r.wall_time is not None else "",
             str(r.peak_bytes), r.result_digest or "", r.error or ""] for r in records]
    params = {"spec": spec.id, "n": ",".join(map(str, n_list)),
              "strategies": ",".join(s.kind for s in strategies),
              "repeats": args.repeats, "workers": strategies[0].workers,
              "precision_bits": p.bits}
    results = {
        "machine": products.machine_descriptor(),
        "digests_consistent": not mismatches,
        "columns": ["spec", "strategy", "n", "wall_time", "peak_bytes", "digest", "error"],
        "rows": rows,
    }
    if mismatches:
        results["error"] = "digest mismatch between exact strategies: " + ", ".join(
            f"{s} n={n}" for s, n in mismatches)
    return (1 if mismatches else 0), params, results


COMMANDS = {"pi": cmd_pi, "e": cmd_e, "verify": cmd_verify,
            "convergence": cmd_convergence, "bench": cmd_bench}


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, help="output format")
    common.add_argument("--digits", type=int, help="significant digits to print")
    common.add_argument("--precision-bits", type=int, help="working precision in bits")
    common.add_argument("--workers", type=int, help="worker processes for parallel strategies")
    common.add_argument("--config", help=f"config file (default ${CONFIG_ENV} or {default_config_path()})")

    parser = argparse.ArgumentParser(prog="e2pi", description="From (1 + 1/n)^n to the Wallis product for pi.")
    parser.add_argument("--version", action="version", version=f"e2pi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pi", parents=[common], help="Wallis estimate of pi")
    p.add_argument("--terms", default="1000", help="number of factors, or 'auto'")
    p.add_argument("--strategy", help="naive-rational, naive-float, pairwise-float, binsplit-rational, binsplit-parallel")
    p.add_argument("--accelerate", action="store_true", help="Richardson-extrapolate over n/2^levels .. n")
    p.add_argument("--levels", type=int, default=3)

    p = sub.add_parser("e", parents=[common], help="(1 + 1/n)^n against e")
    p.add_argument("--n", type=int, default=1000)

    p = sub.add_parser("verify", parents=[common], help="check derivation steps S1..S6")
    p.add_argument("--steps", default="all", help="comma-separated step ids or 'all'")
    p.add_argument("--exact-max", type=int, default=64, help="exact steps use n = 1..N")
    p.add_argument("--limit-start", type=int, default=128, help="first n of the limit grid")
    p.add_argument("--limit-count", type=int, default=8, help="points in the doubling limit grid")

    p = sub.add_parser("convergence", parents=[common], help="error table on a geometric grid")
    p.add_argument("--target", choices=("pi", "e", "eq6"), required=True)
    p.add_argument("--start", type=int, default=128)
    p.add_argument("--ratio", type=int, default=2)
    p.add_argument("--count", type=int, default=6)

    p = sub.add_parser("bench", parents=[common], help="time product strategies")
    p.add_argument("--spec", default="wallis")
    p.add_argument("--n", default="10000", help="comma-separated term counts")
    p.add_argument("--strategies", default="naive-rational,binsplit-rational")
    p.add_argument("--repeats", type=int, default=3)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
        if args.workers is not None and args.workers < 1:
            raise CliError("--workers must be >= 1")
        if args.digits is not None and args.digits < 1:
            raise CliError("--digits must be >= 1")
        fmt = args.format or cfg.output_format
        t0 = time.perf_counter()
        code, params, results = COMMANDS[args.command](args, cfg)
        elapsed = time.perf_counter() - t0
    except CliError as exc:
        print(f"e2pi: error: {exc}", file=stderr)
        return exc.code
    except (UsageError, DomainError) as exc:
        print(f"e2pi: error: {exc}", file=stderr)
        return 2
    except ResourceError as exc:
        print(f"e2pi: error: {exc}", file=stderr)
        return 1
    params["format"] = fmt
    stdout.write(RENDERERS[fmt](envelope(args.command, params, results, elapsed)))
    if code and "error" in results:
        print(f"e2pi: error: {results['error']}", file=stderr)
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))
