# %% [markdown]
# # Checking the whole chain
#
# Six steps lead from (1 + 1/n)^n to the Wallis product. Exact steps compare
# two independently written rational expressions, limit steps fit the
# decay order of their residuals.

# %%
from e2pi import PrecisionSpec, verify_all
from e2pi.derivation import STEP_TITLES

report = verify_all(p=PrecisionSpec(128))
for step in report:
    order = "" if step.fitted_order is None else f"order {step.fitted_order:.4f}"
    print(f"{step.step} {step.verdict:4s} {step.kind:27s} {order:13s} {STEP_TITLES[step.step]}")
print("pi estimate:", report.pi_estimate.to_decimal(20), "error", float(report.pi_error),
      "at n =", report.pi_terms)

# %% [markdown]
# Break one factor and the chain notices.

# %%
from e2pi import products

good = products.PRODUCTS["even_over_odd_plus"]


def broken_terms(j):
    a, b = good.terms(j)
    return (a + 1, b) if j == 5 else (a, b)


products.PRODUCTS["even_over_odd_plus"] = products.ProductSpec(good.id, broken_terms, good.closed_form)
try:
    bad = verify_all(p=PrecisionSpec(128), steps=("S5",))
    print("S5 with a perturbed factor:", bad.steps[0].verdict)
finally:
    products.PRODUCTS["even_over_odd_plus"] = good

# %% [markdown]
# The same checks from the shell:
#
#     e2pi verify --steps all
#     e2pi convergence --target eq6 --start 128 --count 6 --format csv
