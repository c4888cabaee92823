"""Shrinkage of per-brand return estimates toward their common mean.

Each estimate is replaced by a convex combination of itself and the
unweighted grand mean, with weight lambda / (var_b + lambda) on the
brand's own estimate, so noisier brands are pulled harder toward the
pool.  The variance-scale parameter lambda is tuned by minimizing an
unbiased estimate of the expected sum of squared errors over a grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ShrinkageResult",
    "sure_g",
    "choose_lambda",
    "shrink",
    "efficiency",
    "shrinkage_to_json",
]


@dataclass(frozen=True)
class ShrinkageResult:
    """Chosen lambda (may be inf), the shrunk estimates, and the risk value.

    ``u`` is the grid coordinate in [0, 1]: u = 0 pools fully, u = 1 keeps
    the raw estimates.  ``weights`` holds lambda / (var_b + lambda).
    """

    lam: float
    u: float
    beta_tilde: np.ndarray
    weights: np.ndarray
    sure_value: float


def _own_weights(var_hats: np.ndarray, lam: float) -> np.ndarray:
    if np.isinf(lam):
        return np.ones_like(var_hats)
    return lam / (var_hats + lam)


def sure_g(lam: float, beta_hats: np.ndarray, var_hats: np.ndarray) -> float:
    """Unbiased estimate of the mean squared error of shrinkage at lambda.

    SURE(lambda) = (1/B) sum_b [v_b^2/(v_b+lambda)^2 (bhat_b - bbar)^2
                 + v_b/(v_b+lambda) (lambda - v_b + 2 v_b / B)],
    with v_b the estimated variances.  As lambda -> inf it tends to the
    risk (1/B) sum v_b of the unshrunk estimates.
    """
    beta_hats = np.asarray(beta_hats, dtype=float)
    var_hats = np.asarray(var_hats, dtype=float)
    if beta_hats.shape[0] < 2:
        raise ValueError("shrinkage needs at least two brands")
    if (var_hats <= 0).any():
        raise ValueError("variance estimates must be positive")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    b_count = beta_hats.shape[0]
    if np.isinf(lam):
        return float(var_hats.mean())
    beta_bar = beta_hats.mean()
    pull = var_hats / (var_hats + lam)
    first = pull**2 * (beta_hats - beta_bar) ** 2
    second = pull * (lam - var_hats + 2.0 * var_hats / b_count)
    return float((first + second).mean())


def shrink(beta_hats: np.ndarray, var_hats: np.ndarray, lam: float) -> np.ndarray:
    """Pull each estimate toward the grand mean by its variance-based weight."""
    beta_hats = np.asarray(beta_hats, dtype=float)
    var_hats = np.asarray(var_hats, dtype=float)
    if (var_hats <= 0).any():
        raise ValueError("variance estimates must be positive")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    w = _own_weights(var_hats, lam)
    return w * beta_hats + (1.0 - w) * beta_hats.mean()


def choose_lambda(
    beta_hats: np.ndarray, var_hats: np.ndarray, grid_points: int = 1001
) -> ShrinkageResult:
    """Grid-minimize the unbiased risk estimate over lambda.

    The grid is u in {0, 1/(n-1), ..., 1} mapped through
    lambda = mean(var) * u / (1 - u), with u = 1 meaning lambda = inf (no
    shrinkage).  The risk estimate is not convex in lambda, hence the grid
    rather than a derivative method; ties break toward the larger u.
    """
    beta_hats = np.asarray(beta_hats, dtype=float)
    var_hats = np.asarray(var_hats, dtype=float)
    if beta_hats.shape[0] < 2:
        raise ValueError("shrinkage needs at least two brands")
    if grid_points < 2:
        raise ValueError("grid needs at least two points")
    us = np.linspace(0.0, 1.0, grid_points)
    scale = float(var_hats.mean())
    with np.errstate(divide="ignore"):
        lams = scale * us / (1.0 - us)
    lams[-1] = np.inf
    values = np.array([sure_g(lam, beta_hats, var_hats) for lam in lams])
    best = len(values) - 1 - int(np.argmin(values[::-1]))
    lam = float(lams[best])
    return ShrinkageResult(
        lam=lam,
        u=float(us[best]),
        beta_tilde=shrink(beta_hats, var_hats, lam),
        weights=_own_weights(var_hats, lam),
        sure_value=float(values[best]),
    )


def efficiency(
    beta_hats: np.ndarray, beta_tildes: np.ndarray, beta_true: np.ndarray
) -> float:
    """Squared-error ratio of raw to shrunk estimates against the truth.

    Values above 1 mean shrinkage helped; a zero denominator reports +inf.
    """
    beta_hats = np.asarray(beta_hats, dtype=float)
    beta_tildes = np.asarray(beta_tildes, dtype=float)
    beta_true = np.asarray(beta_true, dtype=float)
    if not beta_hats.shape == beta_tildes.shape == beta_true.shape:
        raise ValueError("all inputs must have the same length")
    num = float(((beta_hats - beta_true) ** 2).sum())
    den = float(((beta_tildes - beta_true) ** 2).sum())
    if den == 0.0:
        return float("inf")
    return num / den


def shrinkage_to_json(result: ShrinkageResult, path) -> None:
    """Write lambda, u, beta_tilde and sure_value; an infinite lambda is null."""
    payload = {
        "lambda": None if np.isinf(result.lam) else result.lam,
        "u": result.u,
        "beta_tilde": [float(v) for v in result.beta_tilde],
        "sure_value": result.sure_value,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")
