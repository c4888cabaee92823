"""Weighted least squares for per-brand return estimation.

All fits weight observations by 1/y_pre**2, which is inversely
proportional to the sales noise variance, so the reported standard errors
and p-values are the usual WLS ones.  The single-brand model regresses
y_post on [1, y_pre, x_post]; the joint GEO-responsiveness model adds a
per-GEO bump to the spend coefficient under a sum-to-zero constraint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.linalg import solve_triangular

from .simulate import Dataset

__all__ = [
    "FitResult",
    "PooledEstimate",
    "GeoResponseFit",
    "DegenerateDesignError",
    "InsufficientDataError",
    "IdentifiabilityError",
    "wls_fit_single",
    "fit_all_brands",
    "pooled_mean",
    "fit_geo_responsiveness",
    "fits_to_csv",
    "fits_from_csv",
]


class DegenerateDesignError(ValueError):
    """The weighted normal equations are numerically singular."""


class InsufficientDataError(ValueError):
    """Too few observations for the requested fit."""


class IdentifiabilityError(ValueError):
    """The joint model is rank deficient; the message names the direction."""


@dataclass(frozen=True)
class FitResult:
    """One brand's WLS fit of y_post ~ 1 + y_pre + x_post.

    beta_hat is the incremental return per unit spent; p_value tests
    beta = 0 two-sided against a t distribution with ``dof`` degrees of
    freedom.
    """

    alpha0: float
    alpha1: float
    beta_hat: float
    var_beta: float
    p_value: float
    dof: int
    sigma2_hat: float


@dataclass(frozen=True)
class PooledEstimate:
    """Across-brand mean return and the variance of that mean."""

    beta_bar_hat: float
    var_beta_bar: float


@dataclass(frozen=True)
class GeoResponseFit:
    """Joint fit with per-brand returns and per-GEO spend adjustments.

    gamma sums to zero by construction; gamma_g > 0 means spend works
    better than average in GEO g.  alphas holds the per-brand
    (intercept, y_pre slope) pairs.
    """

    beta: np.ndarray
    gamma: np.ndarray
    alphas: np.ndarray
    var_beta: np.ndarray
    var_gamma: np.ndarray
    sigma2_hat: float
    dof: int


def cholesky_solve(
    a: np.ndarray,
    rhs: np.ndarray,
    labels: list[str] | None = None,
    rtol: float = 1e-12,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve symmetric positive-definite normal equations; return (x, a_inv).

    The matrix is first scaled to unit diagonal (regressor columns here
    differ by many orders of magnitude, e.g. intercepts against sales in
    the millions), then factored by Cholesky.  A pivot below rtol times
    the largest scaled diagonal raises DegenerateDesignError naming the
    offending column.
    """
    a = np.asarray(a, dtype=float)
    k = a.shape[0]

    def _name(j):
        return labels[j] if labels else f"column {j}"

    diag = a.diagonal()
    bad = np.nonzero(diag <= 0)[0]
    if bad.size:
        raise DegenerateDesignError(
            f"normal equations are singular at {_name(int(bad[0]))}"
        )
    scale = np.sqrt(diag)
    s = a / np.outer(scale, scale)

    low = np.zeros_like(s)
    floor = rtol  # scaled diagonal entries are all exactly 1
    for j in range(k):
        pivot = s[j, j] - low[j, :j] @ low[j, :j]
        if pivot <= floor:
            raise DegenerateDesignError(
                f"normal equations are singular at {_name(j)}"
            )
        low[j, j] = np.sqrt(pivot)
        if j + 1 < k:
            low[j + 1 :, j] = (s[j + 1 :, j] - low[j + 1 :, :j] @ low[j, :j]) / low[j, j]
    y = solve_triangular(low, np.asarray(rhs, dtype=float) / scale, lower=True)
    x = solve_triangular(low.T, y, lower=False) / scale
    inv = solve_triangular(low, np.eye(k), lower=True)
    inv = solve_triangular(low.T, inv, lower=False)
    inv = inv / np.outer(scale, scale)
    return x, inv


def _wls(
    x: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    labels: list[str] | None,
    error: type[ValueError],
):
    """Shared WLS core: coefficients, covariance-scale matrix, weighted RSS."""
    xtw = x.T * weights
    a = xtw @ x
    rhs = xtw @ y
    try:
        theta, a_inv = cholesky_solve(a, rhs, labels=labels)
    except DegenerateDesignError as exc:
        raise error(str(exc)) from None
    resid = y - x @ theta
    wrss = float(weights @ resid**2)
    return theta, a_inv, wrss


def wls_fit_single(
    y_pre: np.ndarray, x_post: np.ndarray, y_post: np.ndarray
) -> FitResult:
    """Fit one brand's return by WLS with weights 1/y_pre**2.

    Needs at least 4 GEOs (3 coefficients plus 1 residual degree of
    freedom).  The variance of beta_hat comes from the (beta, beta) entry
    of sigma2_hat * (X'WX)^-1 with sigma2_hat = weighted RSS / (G - 3).
    """
    y_pre = np.asarray(y_pre, dtype=float)
    x_post = np.asarray(x_post, dtype=float)
    y_post = np.asarray(y_post, dtype=float)
    g = y_pre.shape[0]
    if g < 4:
        raise InsufficientDataError(f"need at least 4 GEOs, got {g}")
    if (y_pre <= 0).any():
        raise ValueError("y_pre must be strictly positive")
    x = np.column_stack([np.ones(g), y_pre, x_post])
    weights = 1.0 / y_pre**2
    theta, a_inv, wrss = _wls(
        x, y_post, weights, ["intercept", "y_pre", "x_post"], DegenerateDesignError
    )
    dof = g - 3
    sigma2_hat = wrss / dof
    var_beta = float(sigma2_hat * a_inv[2, 2])
    beta_hat = float(theta[2])
    if var_beta > 0:
        t_stat = beta_hat / np.sqrt(var_beta)
        p_value = 2.0 * float(stats.t.sf(abs(t_stat), dof))
    else:
        p_value = 1.0 if beta_hat == 0 else 0.0
    return FitResult(
        alpha0=float(theta[0]),
        alpha1=float(theta[1]),
        beta_hat=beta_hat,
        var_beta=var_beta,
        p_value=p_value,
        dof=dof,
        sigma2_hat=sigma2_hat,
    )


def fit_all_brands(dataset: Dataset) -> list[FitResult]:
    """Independent single-brand WLS fits, one per brand column."""
    fits = []
    for b in range(dataset.b_count):
        try:
            fits.append(
                wls_fit_single(
                    dataset.y_pre[:, b], dataset.x_post[:, b], dataset.y_post[:, b]
                )
            )
        except ValueError as exc:
            raise type(exc)(f"brand {b + 1}: {exc}") from None
    return fits


def pooled_mean(fits: list[FitResult]) -> PooledEstimate:
    """Average return across brands; its variance is B^-2 sum var(beta_b)."""
    if not fits:
        raise InsufficientDataError("pooled_mean needs at least one fit")
    betas = np.array([f.beta_hat for f in fits])
    variances = np.array([f.var_beta for f in fits])
    return PooledEstimate(
        beta_bar_hat=float(betas.mean()),
        var_beta_bar=float(variances.sum() / len(fits) ** 2),
    )


def fit_geo_responsiveness(dataset: Dataset) -> GeoResponseFit:
    """Joint WLS fit with spend coefficient beta_b + gamma_g per cell.

    Regressors are per-brand intercepts, per-brand y_pre slopes, per-brand
    spend slopes, and per-GEO spend offsets constrained to sum to zero
    (without the constraint the model has a flat direction: shifting every
    gamma up and every beta down by one constant leaves the fit unchanged).
    """
    g_count, b_count = dataset.y_pre.shape
    n_rows = g_count * b_count
    n_params = 3 * b_count + g_count - 1
    if n_rows < n_params + 1:
        raise InsufficientDataError(
            f"{n_rows} observations cannot support {n_params} parameters"
        )
    y = dataset.y_post.reshape(-1)
    y_pre = dataset.y_pre.reshape(-1)
    x_post = dataset.x_post.reshape(-1)
    geo_of = np.repeat(np.arange(g_count), b_count)
    brand_of = np.tile(np.arange(b_count), g_count)

    x = np.zeros((n_rows, n_params))
    labels = []
    rows = np.arange(n_rows)
    x[rows, brand_of] = 1.0
    x[rows, b_count + brand_of] = y_pre
    x[rows, 2 * b_count + brand_of] = x_post
    labels += [f"intercept[{b + 1}]" for b in range(b_count)]
    labels += [f"pre_slope[{b + 1}]" for b in range(b_count)]
    labels += [f"beta[{b + 1}]" for b in range(b_count)]
    # Sum-to-zero basis: gamma_j free for j < G-1, gamma_{G-1} = -sum.
    col = 3 * b_count
    last = geo_of == g_count - 1
    for j in range(g_count - 1):
        x[geo_of == j, col + j] = x_post[geo_of == j]
        x[last, col + j] = -x_post[last]
        labels.append(f"gamma[{j + 1}]")

    weights = 1.0 / y_pre**2
    theta, a_inv, wrss = _wls(x, y, weights, labels, IdentifiabilityError)
    dof = n_rows - n_params
    sigma2_hat = wrss / dof

    free_gamma = theta[3 * b_count :]
    gamma = np.append(free_gamma, -free_gamma.sum())
    # Map free-parameter covariance through the sum-to-zero completion.
    t_map = np.vstack([np.eye(g_count - 1), -np.ones(g_count - 1)])
    cov_free = sigma2_hat * a_inv[3 * b_count :, 3 * b_count :]
    var_gamma = np.einsum("ij,jk,ik->i", t_map, cov_free, t_map)
    var_beta = sigma2_hat * a_inv.diagonal()[2 * b_count : 3 * b_count]
    alphas = np.column_stack([theta[:b_count], theta[b_count : 2 * b_count]])
    return GeoResponseFit(
        beta=theta[2 * b_count : 3 * b_count].copy(),
        gamma=gamma,
        alphas=alphas,
        var_beta=var_beta.copy(),
        var_gamma=var_gamma,
        sigma2_hat=sigma2_hat,
        dof=dof,
    )


def fits_to_csv(fits: list[FitResult], path) -> None:
    """Write per-brand fits: brand, alpha0, alpha1, beta_hat, var_beta, p_value."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["brand", "alpha0", "alpha1", "beta_hat", "var_beta", "p_value"])
        for b, fit in enumerate(fits, start=1):
            writer.writerow(
                [
                    b,
                    str(fit.alpha0),
                    str(fit.alpha1),
                    str(fit.beta_hat),
                    str(fit.var_beta),
                    str(fit.p_value),
                ]
            )


def fits_from_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read (beta_hats, var_hats) from a fits CSV, ordered by brand."""
    import csv

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"brand", "beta_hat", "var_beta"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            missing = sorted(required - set(reader.fieldnames or ()))
            raise ValueError(f"{path}: missing columns {missing}")
        rows = sorted(reader, key=lambda r: int(r["brand"]))
    if not rows:
        raise ValueError(f"{path}: no fits")
    beta = np.array([float(r["beta_hat"]) for r in rows])
    var = np.array([float(r["var_beta"]) for r in rows])
    return beta, var
