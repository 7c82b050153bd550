# %% [markdown]
# # Gamma values at half-integers
#
# Gamma(n + 1/2) is a rational multiple of sqrt(pi). Keeping sqrt(pi)
# symbolic turns the gamma-ratio identities into exact statements about
# rationals.

# %%
from gmpy2 import mpq

from e2pi import (
    PrecisionSpec,
    gamma_half_integer_exact,
    gamma_ratio_np1_over_nph,
    gamma_ratio_np1_over_np3h,
    legendre_duplication_residual,
    lgamma_stirling,
)

for n in range(4):
    g = gamma_half_integer_exact(n, "1/2")
    print(f"Gamma({n} + 1/2) = {g.coeff} * pi^({g.sqrt_pi_power}/2)")

# %% [markdown]
# Gamma(n+1)/Gamma(n+1/2) is the running product of 2j/(2j-1) divided by
# sqrt(pi); Gamma(n+1)/Gamma(n+3/2) is twice the product of 2j/(2j+1).

# %%
prod_minus = prod_plus = mpq(1)
for n in range(1, 6):
    prod_minus *= mpq(2 * n, 2 * n - 1)
    prod_plus *= mpq(2 * n, 2 * n + 1)
    print(n, gamma_ratio_np1_over_nph(n).coeff == prod_minus,
          gamma_ratio_np1_over_np3h(n).coeff == 2 * prod_plus)

# %% [markdown]
# The floating side: Stirling's series for ln Gamma with a rigorous
# truncation bound, and the duplication formula checked at 256 bits.

# %%
p = PrecisionSpec.from_digits(50)
r = lgamma_stirling(mpq(1, 2), p)
print("ln Gamma(1/2) =", r.value.to_decimal(45))
print("bound         =", float(r.truncation_bound), " terms", r.terms, " shift", r.shift)
print("duplication residual at z = 7.25:",
      float(legendre_duplication_residual(mpq(29, 4), PrecisionSpec(256))))
