# %% [markdown]
# # The Wallis product
#
# W_n = prod 4j^2/(4j^2 - 1) increases towards pi/2, with pi - 2 W_n close
# to pi/(4n). Binary splitting keeps a million-term product exact.

# %%
import time

from e2pi import PrecisionSpec, constant_pi, partial_product, wallis_pi_estimate
from e2pi.products import bench_product, wallis_closed_form

p = PrecisionSpec(128)
pi = constant_pi().to_rational()
for n in (10, 1000, 100_000):
    est = wallis_pi_estimate(n, "binsplit_rational", p)
    err = float(pi - est.to_rational())
    print(f"n={n:>7}  2W_n={est.to_decimal(20)}  error={err:.4e}  n*error={n * err:.6f}")

# %% [markdown]
# The exact product equals the factorial closed form.

# %%
print(partial_product("wallis", 300) == wallis_closed_form(300))

# %% [markdown]
# Strategy timings: the naive fold reduces a growing fraction at every step,
# binary splitting multiplies balanced halves and reduces once.

# %%
for rec in bench_product("wallis", [20_000], ["naive_rational", "binsplit_rational", "pairwise_float"],
                         repeats=1, p=p):
    print(f"{rec.strategy:18s} {rec.wall_time:.3f} s  digest {rec.result_digest[:12]}")

# %% [markdown]
# Richardson extrapolation over n/8 .. n recovers many more digits.

# %%
from e2pi import richardson

p = PrecisionSpec(192)
grid = [512, 1024, 2048, 4096]
est = richardson([(n, wallis_pi_estimate(n, "binsplit_rational", p)) for n in grid], 3)
print("extrapolated error:", float(abs(est.to_rational() - pi)))
