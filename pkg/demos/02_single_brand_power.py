"""Replicated single-brand experiments at two spend levels.

200 quick replicates (the full 1000-replicate run lives in the acceptance
suite) of a 20-GEO experiment with true return 5, at incremental spend of
1% and 0.5% of prior sales, reusing the same random numbers across the two
levels.  Prints the power / standard error / RMSE / conditional-bias table.

Run:  python3 demos/02_single_brand_power.py
"""

from geoexp.simulate import SimConfig
from geoexp.study import StudySpec, run_study

spec = StudySpec(
    kind="single_brand",
    sim=SimConfig(g_count=20, b_count=1, beta_mean=5.0, beta_sd=0.0),
    replicates=200,
    master_seed=42,
    delta_levels=(0.01, 0.005),
)
summary = run_study(spec)

print("single-brand experiment, 20 GEOs, true return 5, 200 replicates")
print()
header = f"{'spend':>6} {'P(p<=.05)':>10} {'2se':>8} {'rmse':>8} {'E[b|sig]':>9}"
print(header)
print("-" * len(header))
for delta in spec.delta_levels:
    agg = summary.per_delta[delta]
    cond = agg.mean_beta_given_significant
    print(
        f"{delta:>6.1%} {agg.rejection_rate:>10.3g} {agg.mean_2se:>8.3g} "
        f"{agg.rmse:>8.3g} {cond if cond is None else f'{cond:.3g}':>9}"
    )
print()
print("halving the spend roughly doubles the standard error and produces")
print("significant estimates mostly when the noise cooperates, which is why")
print("the conditional mean overshoots the true return of 5.")
