# %% [markdown]
# # Exact rationals and correctly rounded reals
#
# Everything in e2pi rests on two number types: exact rationals (gmpy2's
# mpq) and HPReal, a binary float with a chosen number of bits that rounds
# to nearest-even on every operation.

# %%
from gmpy2 import mpq

from e2pi import HPReal, PrecisionSpec, constant_e, constant_pi, hp_pow, rat_to_hp
from e2pi.numeric import ulp_error

third = rat_to_hp(mpq(1, 3), 64)
print("1/3 at 64 bits   :", third.to_decimal())
print("error in ulps    :", float(ulp_error(third, mpq(1, 3))))

# %% [markdown]
# Rationals stay exact no matter how many operations we chain.

# %%
q = mpq(1)
for j in range(1, 6):
    q *= mpq(4 * j * j, 4 * j * j - 1)
print("five Wallis factors:", q)

# %% [markdown]
# Powers, exp and ln are accurate to a few ulps at any precision.

# %%
p = PrecisionSpec(256)
x = hp_pow(mpq(11, 10), 10, p)
print("(11/10)^10          :", x.to_decimal(40))
print("exp(ln 2) at 256 bit:", rat_to_hp(2, p).ln().exp().to_decimal(40))

# %% [markdown]
# The reference constants come from stored digit strings, so nothing we
# compute is ever checked against itself.

# %%
print("pi :", constant_pi().to_hp(PrecisionSpec(128)).to_decimal(35))
print("e  :", constant_e().to_hp(PrecisionSpec(128)).to_decimal(35))
print("shortest round-trip of 0.1 at 53 bits:", HPReal.from_decimal("0.1", 53).to_decimal())
