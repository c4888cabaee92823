"""Acceptance suite: the headline Monte Carlo reproductions at full scale.

Each criterion prints one PASS/FAIL line (run with ``pytest -s`` to see
them live).  Expensive studies run once in session fixtures.  The suite
also deposits the golden CSVs under golden/ that the plotting package
renders from.
"""

import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from geoexp.bayes import BayesConfig, coverage_study, gibbs_run
from geoexp.design import (
    COLLISION_FREE_6X6,
    COLLISION_FREE_8X8,
    checkerboard_init,
    correlations,
    design_to_csv,
    grow4,
    scramble,
    validate,
)
from geoexp.estimation import wls_fit_single
from geoexp.simulate import Dataset, SimConfig, dataset_to_csv, generate_dataset
from geoexp.study import StudySpec, records_to_csv, run_study
from oracles import balanced_4x4_states, sample_chain_states

GOLDEN = Path(__file__).resolve().parent.parent / "golden"

COVERAGE_SAMPLER = BayesConfig(iterations=1000, burn_in=500, chains=4)
COVERAGE_REPLICATES = 1000
PAPER_COVERAGE = {
    (1.00, 1.00): 0.954,
    (0.25, 0.10): 0.974,
    (0.50, 0.50): 0.962,
    (1.50, 0.25): 0.968,
}


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# -- shared expensive runs ---------------------------------------------------

@pytest.fixture(scope="session")
def table1_run():
    spec = StudySpec(
        kind="single_brand",
        sim=SimConfig(g_count=20, b_count=1, beta_mean=5.0, beta_sd=0.0),
        replicates=1000,
        master_seed=20_260_101,
        delta_levels=(0.01, 0.005),
    )
    start = time.monotonic()
    summary = run_study(spec)
    return summary, time.monotonic() - start


@pytest.fixture(scope="session")
def multibrand_run():
    spec = StudySpec(
        kind="multibrand_shrinkage",
        sim=SimConfig(g_count=20, b_count=30, beta_mean=5.0, beta_sd=1.0),
        replicates=1000,
        master_seed=20_260_102,
        delta_levels=(0.01, 0.005),
    )
    return run_study(spec)


@pytest.fixture(scope="session")
def stein_bayes_runs():
    out = {}
    for sd, seed in ((1.0, 20_260_103), (0.25, 20_260_104)):
        spec = StudySpec(
            kind="stein_vs_bayes",
            sim=SimConfig(g_count=160, b_count=4, beta_mean=1.0, beta_sd=sd),
            replicates=300,
            master_seed=seed,
            delta_levels=(0.01,),
            bayes=BayesConfig(iterations=1000, burn_in=500, chains=4),
        )
        out[sd] = run_study(spec)
    return out


@pytest.fixture(scope="session")
def coverage_cells():
    cells = {}
    for (beta_mean, beta_sd), seed in zip(PAPER_COVERAGE, (71, 72, 73, 74)):
        sim = SimConfig(g_count=160, b_count=4, beta_mean=beta_mean, beta_sd=beta_sd)
        cell = coverage_study(
            sim,
            COVERAGE_SAMPLER,
            COVERAGE_REPLICATES,
            np.random.default_rng(seed),
        )[0]
        cells[(beta_mean, beta_sd)] = cell.coverage
    return cells


# -- Table 1 -----------------------------------------------------------------

def test_table1_reproduction(table1_run):
    summary, elapsed = table1_run
    expected = {
        0.01: {"rejection_rate": (0.81, 0.04), "mean_2se": (3.34, 0.20),
               "rmse": (1.61, 0.15), "mean_beta_given_significant": (5.51, 0.35)},
        0.005: {"rejection_rate": (0.29, 0.05), "mean_2se": (6.68, 0.40),
                "rmse": (3.21, 0.30), "mean_beta_given_significant": (8.64, 0.90)},
    }
    all_ok = True
    details = []
    for delta, targets in expected.items():
        agg = summary.per_delta[delta]
        for field, (target, tol) in targets.items():
            value = getattr(agg, field)
            ok = abs(value - target) <= tol
            all_ok &= ok
            details.append(f"delta={delta} {field}={value:.3f} (want {target}+-{tol})")
    _report("table-1 single-brand study", all_ok, "; ".join(details))


def test_table1_runtime_under_a_minute(table1_run):
    _, elapsed = table1_run
    _report("table-1 runtime", elapsed < 60.0, f"{elapsed:.1f}s for 1000 replicates x 2 deltas")


# -- Table 2 and efficiency --------------------------------------------------

def test_table2_pooled_standard_errors(multibrand_run):
    agg1 = multibrand_run.per_delta[0.01]
    agg05 = multibrand_run.per_delta[0.005]
    ok1 = abs(agg1.mean_2se_pooled - 0.62) <= 0.05
    ok05 = abs(agg05.mean_2se_pooled - 1.23) <= 0.10
    _report(
        "table-2 pooled 2se",
        ok1 and ok05,
        f"delta=1%: {agg1.mean_2se_pooled:.3f} (want 0.62+-0.05); "
        f"delta=0.5%: {agg05.mean_2se_pooled:.3f} (want 1.23+-0.10)",
    )


def test_efficiency_gains(multibrand_run):
    agg1 = multibrand_run.per_delta[0.01]
    agg05 = multibrand_run.per_delta[0.005]
    ok1 = abs(agg1.mean_efficiency - 3.17) <= 0.6
    ok05 = abs(agg05.mean_efficiency - 7.82) <= 1.6
    _report(
        "shrinkage efficiency gains",
        ok1 and ok05,
        f"delta=1%: {agg1.mean_efficiency:.2f} (want 3.17+-0.6); "
        f"delta=0.5%: {agg05.mean_efficiency:.2f} (want 7.82+-1.6)",
    )


# -- Table 3 coverage --------------------------------------------------------

@pytest.mark.parametrize("cell", list(PAPER_COVERAGE))
def test_table3_coverage(coverage_cells, cell):
    observed = coverage_cells[cell]
    target = PAPER_COVERAGE[cell]
    ok = abs(observed - target) <= 0.02
    _report(
        f"table-3 coverage beta={cell[0]} sigma_b={cell[1]}",
        ok,
        f"observed {observed:.3f} (want {target}+-0.02, {COVERAGE_REPLICATES} replicates)",
    )


# -- Stein vs Bayes ----------------------------------------------------------

def test_stein_vs_bayes_parity_and_signs(stein_bayes_runs):
    high = stein_bayes_runs[1.0].per_delta[0.01]
    low = stein_bayes_runs[0.25].per_delta[0.01]
    within_high = abs(high.mean_rmse_bayes - high.mean_rmse_stein) <= 0.15 * high.mean_rmse_stein
    within_low = abs(low.mean_rmse_bayes - low.mean_rmse_stein) <= 0.15 * low.mean_rmse_stein
    sign_high = high.mean_rmse_bayes < high.mean_rmse_stein  # Bayes slightly ahead
    sign_low = low.mean_rmse_stein < low.mean_rmse_bayes  # Stein slightly ahead
    _report(
        "stein-vs-bayes parity",
        within_high and within_low and sign_high and sign_low,
        f"sigma_b=1.0: stein {high.mean_rmse_stein:.3f} bayes {high.mean_rmse_bayes:.3f}; "
        f"sigma_b=0.25: stein {low.mean_rmse_stein:.3f} bayes {low.mean_rmse_bayes:.3f}",
    )


# -- design chain ------------------------------------------------------------

def test_design_balance_after_default_scramble():
    design, trace = scramble(
        checkerboard_init(20, 30), rng=np.random.default_rng(404), trace_every=10
    )
    balanced = (
        (design.entries.sum(axis=0) == 0).all()
        and (design.entries.sum(axis=1) == 0).all()
    )
    _report(
        "design balance after 30,000 attempts",
        bool(balanced),
        f"{len(trace) * 10}+ accepted flips, row/col sums all zero: {balanced}",
    )


def test_design_chain_uniformity():
    states = balanced_4x4_states()
    index = {s: i for i, s in enumerate(states)}
    counts = sample_chain_states(4, 4, n_samples=90_000, thin=40, seed=505)
    observed = np.zeros(len(states))
    for state, n in counts.items():
        observed[index[state]] = n
    result = stats.chisquare(observed)
    ok = bool((observed > 0).all() and result.pvalue >= 0.001)
    _report(
        "design chain uniformity over 90 states",
        ok,
        f"chi2 p={result.pvalue:.4f} with 90,000 samples (significance 0.001)",
    )


def test_full_sum_identity_exact():
    rng = np.random.default_rng(606)
    ok = True
    residuals = []
    for g, b in [(4, 4), (6, 8), (20, 30)]:
        design, _ = scramble(checkerboard_init(g, b), rng=rng, trace_every=None)
        e = design.entries
        lhs = int(((e @ e.T) ** 2).sum())  # B^2 sum of rho_gg'^2
        rhs = int(((e.T @ e) ** 2).sum())  # G^2 sum of rho_bb'^2
        residuals.append(lhs - rhs)
        ok &= lhs == rhs
    _report(
        "full-sum correlation identity",
        ok,
        f"integer residuals {residuals} for 4x4, 6x8, 20x30",
    )


def test_embedded_matrices_and_growth_validate():
    r6 = validate(COLLISION_FREE_6X6)
    r8 = validate(COLLISION_FREE_8X8)
    g6 = validate(grow4(COLLISION_FREE_6X6))
    g8 = validate(grow4(grow4(COLLISION_FREE_8X8)))
    ok = all(
        r.balanced and r.collision_free for r in (r6, r8, g6, g8)
    )
    _report(
        "collision-free seeds and grow4 closure",
        ok,
        "6x6, 8x8, 10x10 (grown), 16x16 (grown twice) all balanced and collision-free",
    )


def test_interbrand_rms_stabilizes_early():
    design, trace = scramble(
        checkerboard_init(20, 30), rng=np.random.default_rng(707), trace_every=10
    )
    rms_300 = trace[29].brand_rms  # after 300 accepted flips
    rms_3000 = trace[299].brand_rms  # after 3000 accepted flips
    ok = abs(rms_300 - rms_3000) <= 0.10 * rms_3000
    _report(
        "interbrand rms stability by 300 flips",
        bool(ok),
        f"rms@300={rms_300:.4f} rms@3000={rms_3000:.4f} "
        f"(ratio {rms_300 / rms_3000:.3f}, tolerance 10%)",
    )


# -- estimation oracles ------------------------------------------------------

def test_wls_brute_force_oracle():
    rng = np.random.default_rng(808)
    worst = 0.0
    for _ in range(100):
        g = int(rng.integers(5, 12))
        y_pre = rng.uniform(0.5, 3.0, g)
        x_post = np.where(rng.random(g) < 0.5, 0.05 * y_pre, 0.0)
        if (x_post == 0).all() or (x_post > 0).all():
            continue
        y_post = 0.5 * y_pre + rng.normal(0, 0.1, g) + 2.0 * x_post
        fit = wls_fit_single(y_pre, x_post, y_post)
        x = np.column_stack([np.ones(g), y_pre, x_post])
        w = np.diag(1.0 / y_pre**2)
        theta = np.linalg.solve(x.T @ w @ x, x.T @ w @ y_post)
        var_beta = (
            (w @ (y_post - x @ theta) ** 2).sum()
            / (g - 3)
            * np.linalg.inv(x.T @ w @ x)[2, 2]
        )
        worst = max(
            worst,
            abs(fit.alpha0 - theta[0]),
            abs(fit.alpha1 - theta[1]),
            abs(fit.beta_hat - theta[2]),
            abs(fit.var_beta - var_beta),
        )
    _report(
        "WLS vs brute-force normal equations",
        worst < 1e-10,
        f"max abs deviation {worst:.2e} over 100 random instances (tolerance 1e-10)",
    )


def test_null_pvalue_uniformity():
    cfg = SimConfig(g_count=20, b_count=1, beta_mean=0.0, beta_sd=0.0)
    pvals = []
    for rep in range(1000):
        rng = np.random.default_rng(900_000 + rep)
        column = rng.permutation(np.repeat([1, -1], 10))[:, None]
        ds = generate_dataset(column, cfg, rng)
        pvals.append(
            wls_fit_single(ds.y_pre[:, 0], ds.x_post[:, 0], ds.y_post[:, 0]).p_value
        )
    result = stats.kstest(pvals, "uniform")
    _report(
        "null p-value KS uniformity",
        bool(result.pvalue > 0.01),
        f"KS p={result.pvalue:.3f} over 1000 null replicates (significance 0.01)",
    )


def test_gibbs_conjugate_oracle():
    rng = np.random.default_rng(909)
    g = 12
    y_pre = rng.uniform(1.0, 3.0, (g, 1))
    assign = rng.permutation(np.repeat([1, -1], g // 2))[:, None]
    x_post = np.where(assign == 1, 0.5 * y_pre, 0.0)
    y_post = 0.3 + 0.5 * y_pre + 1.2 * x_post + rng.normal(0, 0.2 * y_pre)
    ds = Dataset(y_pre=y_pre, y_post=y_post, x_post=x_post)
    v, s, m = 0.04, 2.0, 0.8
    cfg = BayesConfig(iterations=22_000, burn_in=2000, chains=2)
    chains = gibbs_run(
        ds, cfg, np.random.default_rng(910),
        fixed_sigma2=v, fixed_sigma2_beta=s, fixed_grand=m,
    )
    x = np.column_stack([np.ones(g), y_pre[:, 0], x_post[:, 0]])
    w = np.diag(1.0 / y_pre[:, 0] ** 2)
    prec = x.T @ w @ x / v + np.diag([0.0, 0.0, 1.0 / s])
    rhs = x.T @ w @ y_post[:, 0] / v + np.array([0.0, 0.0, m / s])
    mean = np.linalg.solve(prec, rhs)[2]
    cov = np.linalg.inv(prec)[2, 2]
    draws = chains.pooled("beta")[:, 0]
    mc_se = np.sqrt(cov / draws.size)
    dev = abs(draws.mean() - mean)
    _report(
        "gibbs fixed-variance conjugate oracle",
        bool(dev < 3 * mc_se),
        f"|sampled - closed form| = {dev:.5f} vs 3 mc se = {3 * mc_se:.5f}",
    )


# -- golden outputs for the plotting package ---------------------------------

def test_write_golden_csvs(table1_run, multibrand_run, stein_bayes_runs):
    GOLDEN.mkdir(exist_ok=True)
    rng = np.random.default_rng(1001)

    design_cb = checkerboard_init(20, 30)
    design_to_csv(design_cb, GOLDEN / "checkerboard_20x30.csv")
    scrambled, trace = scramble(design_cb, rng=rng, trace_every=10)
    design_to_csv(scrambled, GOLDEN / "design_20x30.csv")
    import csv

    with open(GOLDEN / "design_20x30.trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["flips", "brand_min", "brand_max", "brand_rms", "geo_min", "geo_max", "geo_rms"]
        )
        for i, row in enumerate(trace):
            writer.writerow(
                [(i + 1) * 10, row.brand_min, row.brand_max, row.brand_rms,
                 row.geo_min, row.geo_max, row.geo_rms]
            )

    sim = SimConfig(g_count=20, b_count=1, beta_mean=5.0, beta_sd=0.0)
    column = rng.permutation(np.repeat([1, -1], 10))[:, None]
    dataset_to_csv(generate_dataset(column, sim, rng), GOLDEN / "dataset_single.csv")

    table1, _ = table1_run
    records_to_csv(table1.records, GOLDEN / "table1_records.csv")
    multi_sub = [r for r in multibrand_run.records if r["replicate"] < 200]
    records_to_csv(multi_sub, GOLDEN / "multibrand_records.csv")
    records_to_csv(
        stein_bayes_runs[1.0].records, GOLDEN / "stein_bayes_records.csv"
    )

    spec = StudySpec(
        kind="credible_width",
        sim=SimConfig(g_count=80, b_count=4, beta_mean=1.0, beta_sd=0.25),
        replicates=40,
        master_seed=20_260_105,
        delta_levels=(0.005, 0.01, 0.02),
        bayes=BayesConfig(iterations=800, burn_in=300, chains=2),
    )
    records_to_csv(run_study(spec).records, GOLDEN / "width_records.csv")

    written = sorted(p.name for p in GOLDEN.glob("*.csv"))
    _report("golden CSVs for plotting", len(written) >= 8, ", ".join(written))
