"""Estimation tests: WLS against brute-force normal equations, p-value
calibration, pooled mean, and the joint GEO-responsiveness model."""

import numpy as np
import pytest
from scipy import stats

from geoexp.design import checkerboard_init, scramble
from geoexp.estimation import (
    DegenerateDesignError,
    IdentifiabilityError,
    InsufficientDataError,
    fit_all_brands,
    fit_geo_responsiveness,
    fits_from_csv,
    fits_to_csv,
    pooled_mean,
    wls_fit_single,
)
from geoexp.simulate import Dataset, SimConfig, generate_dataset


def _random_instance(rng, g=6):
    """Small well-scaled instance plus its brute-force WLS solution."""
    y_pre = rng.uniform(0.5, 3.0, g)
    x_post = np.where(rng.random(g) < 0.5, 0.05 * y_pre, 0.0)
    if (x_post == 0).all() or (x_post > 0).all():
        return _random_instance(rng, g)
    y_post = 0.5 * y_pre + rng.normal(0, 0.1, g) + 2.0 * x_post
    x = np.column_stack([np.ones(g), y_pre, x_post])
    w = 1.0 / y_pre**2
    a = x.T @ np.diag(w) @ x
    rhs = x.T @ np.diag(w) @ y_post
    theta = np.linalg.solve(a, rhs)
    resid = y_post - x @ theta
    sigma2 = (w * resid**2).sum() / (g - 3)
    var_beta = sigma2 * np.linalg.inv(a)[2, 2]
    return (y_pre, x_post, y_post), theta, var_beta


def test_noiseless_exact_interpolation():
    y_pre = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    x_post = np.array([0.0, 0.2, 0.0, 0.4, 0.0, 0.6])
    y_post = 0.5 * y_pre + 5.0 * x_post
    fit = wls_fit_single(y_pre, x_post, y_post)
    assert fit.alpha0 == pytest.approx(0.0, abs=1e-10)
    assert fit.alpha1 == pytest.approx(0.5, abs=1e-12)
    assert fit.beta_hat == pytest.approx(5.0, abs=1e-10)
    assert fit.sigma2_hat == pytest.approx(0.0, abs=1e-20)
    assert fit.p_value < 1e-30
    assert fit.dof == 3


def test_permutation_invariance():
    rng = np.random.default_rng(1)
    (y_pre, x_post, y_post), _, _ = _random_instance(rng, g=8)
    fit = wls_fit_single(y_pre, x_post, y_post)
    perm = rng.permutation(8)
    fit_p = wls_fit_single(y_pre[perm], x_post[perm], y_post[perm])
    assert fit_p.beta_hat == pytest.approx(fit.beta_hat, rel=1e-12)
    assert fit_p.var_beta == pytest.approx(fit.var_beta, rel=1e-12)
    assert fit_p.p_value == pytest.approx(fit.p_value, rel=1e-12)


def test_matches_brute_force_on_100_instances():
    rng = np.random.default_rng(2)
    for _ in range(100):
        (y_pre, x_post, y_post), theta, var_beta = _random_instance(rng)
        fit = wls_fit_single(y_pre, x_post, y_post)
        assert fit.alpha0 == pytest.approx(theta[0], abs=1e-10)
        assert fit.alpha1 == pytest.approx(theta[1], abs=1e-10)
        assert fit.beta_hat == pytest.approx(theta[2], abs=1e-10)
        assert fit.var_beta == pytest.approx(var_beta, abs=1e-10)


def test_weighted_residuals_orthogonal_to_regressors():
    rng = np.random.default_rng(3)
    (y_pre, x_post, y_post), _, _ = _random_instance(rng, g=10)
    fit = wls_fit_single(y_pre, x_post, y_post)
    x = np.column_stack([np.ones(10), y_pre, x_post])
    resid = y_post - x @ np.array([fit.alpha0, fit.alpha1, fit.beta_hat])
    w = 1.0 / y_pre**2
    gram = np.abs(x.T @ (w * resid))
    scale = np.abs(x.T @ (w * y_post))
    assert (gram <= 1e-8 * np.maximum(scale, 1.0)).all()


def test_scale_invariance():
    rng = np.random.default_rng(4)
    (y_pre, x_post, y_post), _, _ = _random_instance(rng, g=8)
    fit = wls_fit_single(y_pre, x_post, y_post)
    c = 1234.5
    fit_c = wls_fit_single(c * y_pre, c * x_post, c * y_post)
    assert fit_c.alpha0 == pytest.approx(c * fit.alpha0, rel=1e-9)
    assert fit_c.alpha1 == pytest.approx(fit.alpha1, rel=1e-9)
    assert fit_c.beta_hat == pytest.approx(fit.beta_hat, rel=1e-9)
    assert fit_c.p_value == pytest.approx(fit.p_value, rel=1e-9)


def test_large_scale_sales_do_not_trip_pivot():
    # realistic magnitudes: sales ~ 1e6..1e7
    cfg = SimConfig(g_count=20, b_count=2)
    ds = generate_dataset(checkerboard_init(20, 2), cfg, np.random.default_rng(5))
    fit = wls_fit_single(ds.y_pre[:, 0], ds.x_post[:, 0], ds.y_post[:, 0])
    assert np.isfinite(fit.beta_hat) and fit.var_beta > 0


def test_null_p_values_uniform():
    # beta = 0: two-sided p-values are Uniform(0, 1)
    cfg = SimConfig(g_count=20, b_count=1, beta_mean=0.0, beta_sd=0.0)
    pvals = []
    for rep in range(1000):
        rng = np.random.default_rng(10_000 + rep)
        column = rng.permutation(np.repeat([1, -1], 10))[:, None]
        ds = generate_dataset(column, cfg, rng)
        fit = wls_fit_single(ds.y_pre[:, 0], ds.x_post[:, 0], ds.y_post[:, 0])
        pvals.append(fit.p_value)
    result = stats.kstest(pvals, "uniform")
    assert result.pvalue > 0.01


def test_insufficient_data_error():
    with pytest.raises(InsufficientDataError):
        wls_fit_single(np.ones(3), np.ones(3), np.ones(3))


def test_degenerate_design_error_names_column():
    y_pre = np.linspace(1, 2, 8)
    x_post = 2.0 * y_pre  # collinear with the y_pre column
    y_post = y_pre + 1.0
    with pytest.raises(DegenerateDesignError, match="x_post"):
        wls_fit_single(y_pre, x_post, y_post)


# -- fit_all_brands ----------------------------------------------------------

def test_single_brand_dataset_reduces_to_wls():
    cfg = SimConfig(g_count=12, b_count=1)
    rng = np.random.default_rng(6)
    column = rng.permutation(np.repeat([1, -1], 6))[:, None]
    ds = generate_dataset(column, cfg, rng)
    fits = fit_all_brands(ds)
    direct = wls_fit_single(ds.y_pre[:, 0], ds.x_post[:, 0], ds.y_post[:, 0])
    assert len(fits) == 1
    assert fits[0] == direct


def test_brand_permutation_equivariance():
    cfg = SimConfig(g_count=10, b_count=4)
    rng = np.random.default_rng(7)
    design, _ = scramble(checkerboard_init(10, 4), rng=rng, trace_every=None)
    ds = generate_dataset(design, cfg, rng)
    fits = fit_all_brands(ds)
    perm = [2, 0, 3, 1]
    ds_p = Dataset(
        y_pre=ds.y_pre[:, perm],
        y_post=ds.y_post[:, perm],
        x_post=ds.x_post[:, perm],
        true_beta=ds.true_beta[perm],
    )
    fits_p = fit_all_brands(ds_p)
    for i, j in enumerate(perm):
        assert fits_p[i].beta_hat == pytest.approx(fits[j].beta_hat, rel=1e-12)


def test_fit_all_brands_unbiased_over_replicates():
    # mean beta_hat across replicates ~= 5 within 3 mc standard errors
    # (per-replicate means first: estimates within a replicate share a design)
    cfg = SimConfig(g_count=20, b_count=30, beta_mean=5.0, beta_sd=0.0)
    rep_means = []
    for rep in range(100):
        rng = np.random.default_rng(20_000 + rep)
        design, _ = scramble(checkerboard_init(20, 30), rng=rng, trace_every=None)
        ds = generate_dataset(design, cfg, rng)
        rep_means.append(np.mean([f.beta_hat for f in fit_all_brands(ds)]))
    rep_means = np.array(rep_means)
    se = rep_means.std(ddof=1) / np.sqrt(len(rep_means))
    assert abs(rep_means.mean() - 5.0) < 3 * se


def test_error_names_brand():
    y_pre = np.tile(np.linspace(1, 2, 8)[:, None], (1, 2))
    x_post = np.zeros((8, 2))
    x_post[:, 0] = np.where(np.arange(8) % 2 == 0, 0.1 * y_pre[:, 0], 0.0)
    x_post[:, 1] = 2.0 * y_pre[:, 1]  # collinear brand 2
    y_post = y_pre.copy()
    ds = Dataset(y_pre=y_pre, y_post=y_post, x_post=x_post)
    with pytest.raises(DegenerateDesignError, match="brand 2"):
        fit_all_brands(ds)


# -- pooled mean -------------------------------------------------------------

def test_pooled_single_fit():
    cfg = SimConfig(g_count=12, b_count=1)
    rng = np.random.default_rng(8)
    column = rng.permutation(np.repeat([1, -1], 6))[:, None]
    ds = generate_dataset(column, cfg, rng)
    fits = fit_all_brands(ds)
    pooled = pooled_mean(fits)
    assert pooled.beta_bar_hat == fits[0].beta_hat
    assert pooled.var_beta_bar == fits[0].var_beta


def test_pooled_equal_variances():
    from geoexp.estimation import FitResult

    fits = [
        FitResult(0.0, 0.5, float(b), 4.0, 0.5, 17, 1.0) for b in range(10)
    ]
    pooled = pooled_mean(fits)
    assert pooled.beta_bar_hat == pytest.approx(4.5)
    assert pooled.var_beta_bar == pytest.approx(4.0 / 10)


def test_pooled_empty():
    with pytest.raises(InsufficientDataError):
        pooled_mean([])


# -- GEO responsiveness ------------------------------------------------------

def _geo_dataset(rng, gamma=None, g=20, b=30):
    cfg = SimConfig(g_count=g, b_count=b, beta_mean=5.0, beta_sd=1.0)
    design, _ = scramble(checkerboard_init(g, b), rng=rng, trace_every=None)
    ds = generate_dataset(design, cfg, rng)
    if gamma is not None:
        # add (gamma_g * x) on top of the beta_b * x already present
        y_post = ds.y_post + ds.x_post * gamma[:, None]
        ds = Dataset(y_pre=ds.y_pre, y_post=y_post, x_post=ds.x_post, true_beta=ds.true_beta)
    return ds


def test_geo_fit_parameter_count_and_rank():
    # the unconstrained design matrix has 3B + G columns, rank 3B + G - 1
    g, b = 8, 6
    rng = np.random.default_rng(9)
    ds = _geo_dataset(rng, g=g, b=b)
    rows = g * b
    geo_of = np.repeat(np.arange(g), b)
    brand_of = np.tile(np.arange(b), g)
    x = np.zeros((rows, 3 * b + g))
    r = np.arange(rows)
    x[r, brand_of] = 1.0
    x[r, b + brand_of] = ds.y_pre.reshape(-1)
    x[r, 2 * b + brand_of] = ds.x_post.reshape(-1)
    x[r, 3 * b + geo_of] = ds.x_post.reshape(-1)
    assert x.shape[1] == 3 * b + g
    assert np.linalg.matrix_rank(x) == 3 * b + g - 1


def test_geo_fit_null_recovery():
    rng = np.random.default_rng(10)
    for _ in range(5):
        fit = fit_geo_responsiveness(_geo_dataset(rng))
        assert fit.gamma.sum() == pytest.approx(0.0, abs=1e-8)
        assert (np.abs(fit.gamma) < 4.0 * np.sqrt(fit.var_gamma)).all()


def test_geo_fit_recovers_sign_pattern():
    # single-replicate noise on gamma_hat is ~1, so check the Monte Carlo
    # mean across replicates: its sign pattern matches everywhere
    rng = np.random.default_rng(11)
    g = 20
    gamma = np.repeat([0.5, -0.5], g // 2)
    total = np.zeros(g)
    reps = 120
    for _ in range(reps):
        total += fit_geo_responsiveness(_geo_dataset(rng, gamma=gamma)).gamma
    mean_gamma = total / reps
    assert (np.sign(mean_gamma) == np.sign(gamma)).all()
    assert mean_gamma[: g // 2].mean() == pytest.approx(0.5, abs=0.2)
    assert mean_gamma[g // 2 :].mean() == pytest.approx(-0.5, abs=0.2)


def test_geo_fit_beta_close_to_truth():
    rng = np.random.default_rng(12)
    ds = _geo_dataset(rng)
    fit = fit_geo_responsiveness(ds)
    assert (np.abs(fit.beta - ds.true_beta) < 6.0 * np.sqrt(fit.var_beta)).all()


def test_geo_fit_identifiability_error():
    # x_post identically zero for one GEO row: its gamma is undetermined
    y_pre = np.tile(np.linspace(1, 2, 8)[:, None], (1, 6))
    x_post = 0.1 * y_pre
    x_post[3, :] = 0.0
    y_post = 0.5 * y_pre + 2.0 * x_post + 0.01 * np.random.default_rng(0).normal(size=(8, 6))
    ds = Dataset(y_pre=y_pre, y_post=y_post, x_post=x_post)
    with pytest.raises((IdentifiabilityError, DegenerateDesignError)):
        fit_geo_responsiveness(ds)


def test_geo_fit_insufficient_rows():
    ds = Dataset(
        y_pre=np.ones((4, 2)),
        y_post=np.ones((4, 2)),
        x_post=np.zeros((4, 2)),
    )
    with pytest.raises(InsufficientDataError):
        fit_geo_responsiveness(ds)


# -- serialization -----------------------------------------------------------

def test_fits_csv_round_trip(tmp_path):
    cfg = SimConfig(g_count=10, b_count=4)
    rng = np.random.default_rng(13)
    design, _ = scramble(checkerboard_init(10, 4), rng=rng, trace_every=None)
    fits = fit_all_brands(generate_dataset(design, cfg, rng))
    path = tmp_path / "fits.csv"
    fits_to_csv(fits, path)
    beta, var = fits_from_csv(path)
    assert beta == pytest.approx([f.beta_hat for f in fits])
    assert var == pytest.approx([f.var_beta for f in fits])
