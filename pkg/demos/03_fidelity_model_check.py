"""Is the product fidelity estimate trustworthy?
==============================================

The engine predicts its own final fidelity as the product of (1 - eps) over
every rounding it applied.  For circuits small enough to simulate exactly we
can compare that prediction against the true overlap; the root-mean-square
error over a random ensemble is a few percent.
"""

from shardsim.validate import rmse, sdrp_sweep

records = sdrp_sweep(width=6, depth=6, n_circuits=20, base_seed=2024)
pairs = [(r.f_model, r.f_exact) for r in records if r.f_exact is not None]

print("p      estimate   exact")
for r in records[:30]:
    if r.seed == records[0].seed:
        print(f"{r.p:<6} {r.f_model:.4f}     {r.f_exact:.4f}")

print(f"\n{len(pairs)} observations, rmse = {rmse(pairs):.4f}")
print("(each circuit swept over the 41-point rounding-parameter grid)")
