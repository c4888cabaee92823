"""Fully Bayesian multibrand analysis with the conjugate Gibbs sampler.

4 brands over 160 GEOs with returns drawn from Normal(1, 1): the
hierarchical posterior pools information across brands, and its credible
intervals come straight from the chains.  Compares posterior means against
WLS and SURE shrinkage on one dataset, then checks chain agreement.

Run:  python3 demos/04_bayes_intervals.py
"""

import numpy as np

from geoexp.bayes import (
    BayesConfig,
    gibbs_run,
    potential_scale_reduction,
    summarize_posterior,
)
from geoexp.design import checkerboard_init, scramble
from geoexp.estimation import fit_all_brands
from geoexp.shrinkage import choose_lambda
from geoexp.simulate import SimConfig, generate_dataset

rng = np.random.default_rng(160)
sim = SimConfig(g_count=160, b_count=4, beta_mean=1.0, beta_sd=1.0)
design, _ = scramble(checkerboard_init(160, 4), rng=rng, trace_every=None)
dataset = generate_dataset(design, sim, rng)

fits = fit_all_brands(dataset)
beta_hats = np.array([f.beta_hat for f in fits])
var_hats = np.array([f.var_beta for f in fits])
stein = choose_lambda(beta_hats, var_hats).beta_tilde

config = BayesConfig()  # 4 chains x 2000 sweeps, 1000 burn-in
chains = gibbs_run(dataset, config, np.random.default_rng(161))
summary = summarize_posterior(chains, config.level)

print("4 brands x 160 GEOs, spend 1% of prior sales")
print()
print(f"{'brand':>5} {'truth':>8} {'wls':>8} {'stein':>8} {'bayes':>8} {'95% interval':>18}")
for b in range(4):
    print(
        f"{b + 1:>5} {dataset.true_beta[b]:>8.3g} {beta_hats[b]:>8.3g} "
        f"{stein[b]:>8.3g} {summary.brand_mean[b]:>8.3g} "
        f"({summary.brand_lower[b]:>7.3g}, {summary.brand_upper[b]:>7.3g})"
    )
print()
print(
    f"grand mean return: {summary.grand_mean:.6g} "
    f"in ({summary.grand_lower:.6g}, {summary.grand_upper:.6g})"
)
print(f"mean interval half-width: {summary.brand_half_width.mean():.6g}")
psrf = [potential_scale_reduction(chains.beta[:, :, b]) for b in range(4)]
print(f"potential scale reduction per brand: {[f'{r:.4f}' for r in psrf]}")
print()
print("both empirical-Bayes shrinkage and the posterior pull the noisy")
print("per-brand estimates toward the common mean; the Bayesian version")
print("adds calibrated uncertainty without extra assumptions.")
