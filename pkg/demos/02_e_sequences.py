# %% [markdown]
# # Four ways of writing a sequence for e
#
# Start from (1 + 1/n)^n. Rearranging it gives a second sequence with the
# same limit, dividing by e gives one that tends to 1, and grouping the
# factors produces a squared Stirling-like quotient.

# %%
from e2pi import PrecisionSpec, sample_sequence
from e2pi.sequences import normalized_exact, rearranged_direct, stirling_quotient_exact

p = PrecisionSpec(128)
grid = [2 ** k for k in range(7, 13)]
for family in ("A_bernoulli", "A_rearranged", "A_normalized", "A_stirling_quotient"):
    rep = sample_sequence(family, grid, p)
    print(f"{family:22s} order {rep.fitted_order:.4f}  c ~ {float(rep.fitted_constant):.5f}")

# %% [markdown]
# The rewrites are exact. With e kept symbolic, both sides of each step are
# the same rational times the same power of e.

# %%
for n in (1, 2, 10, 1000):
    a = normalized_exact(n)
    b = stirling_quotient_exact(n)
    print(n, a == b, "e power", a.e_power, " rearranged/e matches:",
          rearranged_direct(n) == a.coeff)

# %% [markdown]
# All errors shrink like 1/n, so Richardson extrapolation on a doubling grid
# gains many digits cheaply.

# %%
from e2pi import richardson, term_bernoulli, constant_e

p = PrecisionSpec(192)
samples = [(n, term_bernoulli(n, p)) for n in (512, 1024, 2048, 4096)]
est = richardson(samples, 3)
print("raw error        :", float(abs(samples[-1][1].to_rational() - constant_e().to_rational())))
print("extrapolated err :", float(abs(est.to_rational() - constant_e().to_rational())))
