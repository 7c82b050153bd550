"""High-precision checks of the path from (1 + 1/n)^n -> e to the Wallis
product for pi."""

__version__ = "0.1.0"

from .constants import Constant, constant_e, constant_pi
from .derivation import ChainReport, GridPolicy, StepResult, verify_all, verify_step
from .numeric import (
    BigRational,
    DomainError,
    HPReal,
    PrecisionSpec,
    RangeError,
    ResourceError,
    UsageError,
    hp_arith,
    hp_fn,
    hp_pow,
    rat_arith,
    rat_make,
    rat_to_hp,
)
from .products import (
    EvalStrategy,
    ProductSpec,
    bench_product,
    binsplit,
    identity_eq7,
    identity_eq8,
    partial_product,
    wallis_pi_estimate,
)
from .sequences import (
    ConvergenceReport,
    richardson,
    sample_sequence,
    term_bernoulli,
    term_normalized,
    term_rearranged,
    term_stirling_quotient,
)
from .special import (
    SqrtPiScaled,
    bernoulli_numbers,
    gamma_half_integer_exact,
    gamma_ratio_np1_over_nph,
    gamma_ratio_np1_over_np3h,
    legendre_duplication_residual,
    lgamma_stirling,
)
