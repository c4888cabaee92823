"""The seven figure kinds rendered from the experiment CSV contracts.

Inputs per kind:

- ``heatmap``        design CSV (``brand_1..brand_B`` header, +1/-1 cells)
- ``corr-trace``     scramble trace CSV (flips, brand_*/geo_* summaries)
- ``scatter``        dataset CSV (geo, brand, y_pre, x_post, y_post, ...)
- ``fit-hists``      study records CSV, single-brand studies
- ``study-hists``    study records CSV, multibrand studies
- ``stein-bayes``    study records CSV with beta_tilde and bayes_mean
- ``width-density``  study records CSV with ci_lo / ci_hi

Rendering is deterministic given input and options: fixed style, fixed
figure sizes, a fixed bin count (default 30), and no data-dependent
heuristics beyond the plotted values themselves.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from scipy.stats import gaussian_kde

__all__ = [
    "KINDS",
    "PlotJob",
    "MissingColumnError",
    "EmptyInputError",
    "render",
    "design_to_pixels",
]


class MissingColumnError(ValueError):
    """The input CSV lacks a column the figure kind needs."""


class EmptyInputError(ValueError):
    """The input CSV has no data rows."""


@dataclass(frozen=True)
class PlotJob:
    """One figure request: kind, input CSV, output image, options.

    Options (with defaults): ``bins`` histogram bin count (30); ``which``
    correlation family for traces ('brand' or 'geo'); ``ref_slope`` of the
    scatter reference line (0.5, the post/pre window ratio); ``level``
    quantile marked on width densities (0.95); ``scale`` heatmap pixels
    per cell (20); ``value_range`` optional (lo, hi) histogram range.
    """

    kind: str
    input_path: str
    output_path: str
    bins: int = 30
    which: str = "brand"
    ref_slope: float = 0.5
    level: float = 0.95
    scale: int = 20
    value_range: tuple[float, float] | None = None


_STYLE = {
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


def _read_rows(path, required):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        missing = sorted(set(required) - set(names))
        if missing:
            raise MissingColumnError(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")
    return rows


def _column(rows, name):
    return np.array([float(r[name]) if r[name] != "" else np.nan for r in rows])


def _by_replicate(rows, columns):
    """Group rows by (delta, replicate); return {delta: {col: 2-d list}}."""
    grouped: dict[float, dict[int, list[dict]]] = {}
    for r in rows:
        delta = float(r["delta"])
        rep = int(r["replicate"])
        grouped.setdefault(delta, {}).setdefault(rep, []).append(r)
    out = {}
    for delta, reps in sorted(grouped.items()):
        cols = {c: [] for c in columns}
        for rep in sorted(reps):
            for c in columns:
                cols[c].append(
                    np.array([float(r[c]) if r[c] != "" else np.nan for r in reps[rep]])
                )
        out[delta] = cols
    return out


def design_to_pixels(entries: np.ndarray) -> np.ndarray:
    """Grayscale cell values for a +/-1 design: treatment +1 -> 0 (black)."""
    return (1.0 - np.asarray(entries, dtype=float)) / 2.0


def _load_design(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or not header[0].startswith("brand_"):
            raise MissingColumnError(f"{path}: expected a brand_1..brand_B header")
        rows = [[int(v) for v in row] for row in reader if row]
    if not rows:
        raise EmptyInputError(f"{path}: no design rows")
    return np.asarray(rows)


def _render_heatmap(job: PlotJob) -> dict:
    entries = _load_design(job.input_path)
    g, b = entries.shape
    pixels = design_to_pixels(entries)
    dpi = 100
    fig = plt.figure(
        figsize=(b * job.scale / dpi, g * job.scale / dpi), dpi=dpi, frameon=False
    )
    ax = fig.add_axes([0.0, 0.0, 1.0, 1.0])
    ax.imshow(pixels, cmap="gray", vmin=0.0, vmax=1.0, interpolation="nearest")
    ax.set_axis_off()
    ax.grid(False)
    fig.savefig(job.output_path, dpi=dpi)
    plt.close(fig)
    return {"g_count": g, "b_count": b}


def _render_corr_trace(job: PlotJob) -> dict:
    if job.which not in ("brand", "geo"):
        raise ValueError("which must be 'brand' or 'geo'")
    cols = [f"{job.which}_min", f"{job.which}_max", f"{job.which}_rms"]
    rows = _read_rows(job.input_path, ["flips"] + cols)
    flips = _column(rows, "flips")
    fig, ax = plt.subplots(figsize=(7, 4))
    for name, style in zip(cols, ("C0-", "C1-", "k-")):
        ax.plot(flips, _column(rows, name), style, label=name.split("_")[1])
    ax.set_xlabel("successful flips")
    ax.set_ylabel(f"inter-{job.which} correlation")
    ax.legend()
    fig.tight_layout()
    fig.savefig(job.output_path)
    plt.close(fig)
    return {"points": len(rows)}


def _render_scatter(job: PlotJob) -> dict:
    rows = _read_rows(job.input_path, ["y_pre", "x_post", "y_post"])
    y_pre = _column(rows, "y_pre")
    y_post = _column(rows, "y_post")
    treated = _column(rows, "x_post") > 0
    fig, ax = plt.subplots(figsize=(5.5, 5))
    ax.loglog(y_pre[~treated], y_post[~treated], "ko", mfc="none", label="control")
    ax.loglog(y_pre[treated], y_post[treated], "r^", mfc="none", label="treatment")
    grid = np.array([y_pre.min() * 0.9, y_pre.max() * 1.1])
    ax.loglog(grid, job.ref_slope * grid, "b--", label=f"y = {job.ref_slope:g} x")
    ax.set_xlabel("prior-period sales")
    ax.set_ylabel("experiment-period sales")
    ax.legend()
    fig.tight_layout()
    fig.savefig(job.output_path)
    plt.close(fig)
    return {"treated": int(treated.sum()), "control": int((~treated).sum())}


def _hist(ax, values, bins, value_range, color="C0"):
    ax.hist(values, bins=bins, range=value_range, color=color, edgecolor="black", lw=0.3)


def _render_fit_hists(job: PlotJob) -> dict:
    rows = _read_rows(
        job.input_path, ["replicate", "delta", "p_value", "var_hat", "beta_hat"]
    )
    deltas = sorted({float(r["delta"]) for r in rows})
    fig, axes = plt.subplots(3, len(deltas), figsize=(4 * len(deltas), 8), squeeze=False)
    info = {}
    for j, delta in enumerate(deltas):
        sub = [r for r in rows if float(r["delta"]) == delta]
        p = _column(sub, "p_value")
        two_se = 2.0 * np.sqrt(_column(sub, "var_hat"))
        beta = _column(sub, "beta_hat")
        significant = p <= 0.05
        _hist(axes[0][j], p, job.bins, (0.0, 1.0))
        axes[0][j].set_title(f"p-values, spend {delta:.2%}")
        _hist(axes[1][j], two_se, job.bins, job.value_range, color="C1")
        axes[1][j].set_title(f"2 se, mean {two_se.mean():.3g}")
        _hist(axes[2][j], beta[significant], job.bins, job.value_range, color="C2")
        axes[2][j].set_title(
            f"estimates with p <= 0.05, mean {beta[significant].mean():.3g}"
        )
        info[delta] = {
            "rejection_rate": float(significant.mean()),
            "mean_2se": float(two_se.mean()),
            "mean_beta_significant": float(beta[significant].mean()),
        }
    for ax in axes.ravel():
        ax.set_ylabel("count")
    fig.tight_layout()
    fig.savefig(job.output_path)
    plt.close(fig)
    return info


def _render_study_hists(job: PlotJob) -> dict:
    rows = _read_rows(
        job.input_path,
        ["replicate", "delta", "beta_true", "beta_hat", "var_hat", "beta_tilde"],
    )
    grouped = _by_replicate(rows, ["beta_true", "beta_hat", "var_hat", "beta_tilde"])
    deltas = sorted(grouped)
    fig, axes = plt.subplots(2, len(deltas), figsize=(4 * len(deltas), 6), squeeze=False)
    info = {}
    for j, delta in enumerate(deltas):
        cols = grouped[delta]
        eff = []
        pooled_2se = []
        for truth, raw, var, tilde in zip(
            cols["beta_true"], cols["beta_hat"], cols["var_hat"], cols["beta_tilde"]
        ):
            eff.append(((raw - truth) ** 2).sum() / ((tilde - truth) ** 2).sum())
            pooled_2se.append(2.0 * np.sqrt(var.sum() / len(var) ** 2))
        eff = np.asarray(eff)
        pooled_2se = np.asarray(pooled_2se)
        _hist(axes[0][j], eff, job.bins, job.value_range)
        axes[0][j].set_title(f"shrinkage efficiency, spend {delta:.2%}, mean {eff.mean():.3g}")
        _hist(axes[1][j], pooled_2se, job.bins, job.value_range, color="C1")
        axes[1][j].set_title(f"2 se of pooled mean, mean {pooled_2se.mean():.3g}")
        info[delta] = {
            "efficiency_mean": float(eff.mean()),
            "pooled_2se_mean": float(pooled_2se.mean()),
        }
    for ax in axes.ravel():
        ax.set_ylabel("replicates")
    fig.tight_layout()
    fig.savefig(job.output_path)
    plt.close(fig)
    return info


def _render_stein_bayes(job: PlotJob) -> dict:
    rows = _read_rows(
        job.input_path,
        ["replicate", "delta", "beta_true", "beta_tilde", "bayes_mean"],
    )
    grouped = _by_replicate(rows, ["beta_true", "beta_tilde", "bayes_mean"])
    stein = []
    bayes = []
    for cols in grouped.values():
        for truth, tilde, post in zip(
            cols["beta_true"], cols["beta_tilde"], cols["bayes_mean"]
        ):
            stein.append(np.sqrt(((tilde - truth) ** 2).mean()))
            bayes.append(np.sqrt(((post - truth) ** 2).mean()))
    stein = np.asarray(stein)
    bayes = np.asarray(bayes)
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 4.2))
    left.plot(stein, bayes, "ko", mfc="none", ms=3)
    lim = (0.0, float(max(stein.max(), bayes.max()) * 1.05))
    left.plot(lim, lim, "b--")
    left.set_xlim(lim)
    left.set_ylim(lim)
    left.set_xlabel("Stein RMSE")
    left.set_ylabel("Bayes RMSE")
    _hist(right, stein - bayes, job.bins, job.value_range)
    right.axvline(0.0, color="b", ls="--")
    right.set_xlabel("Stein minus Bayes RMSE")
    right.set_ylabel("replicates")
    fig.tight_layout()
    fig.savefig(job.output_path)
    plt.close(fig)
    return {
        "mean_rmse_stein": float(stein.mean()),
        "mean_rmse_bayes": float(bayes.mean()),
        "replicates": int(stein.size),
    }


def _render_width_density(job: PlotJob) -> dict:
    rows = _read_rows(job.input_path, ["delta", "ci_lo", "ci_hi"])
    widths_by_delta: dict[float, list[float]] = {}
    for r in rows:
        if r["ci_lo"] == "" or r["ci_hi"] == "":
            continue
        widths_by_delta.setdefault(float(r["delta"]), []).append(
            (float(r["ci_hi"]) - float(r["ci_lo"])) / 2.0
        )
    widths_by_delta = {d: np.asarray(v) for d, v in widths_by_delta.items() if v}
    if not widths_by_delta:
        raise EmptyInputError(f"{job.input_path}: no credible intervals present")
    hi = max(v.max() for v in widths_by_delta.values())
    grid = np.linspace(0.0, hi * 1.1, 256)
    fig, ax = plt.subplots(figsize=(7, 4))
    info = {}
    for i, (delta, widths) in enumerate(sorted(widths_by_delta.items())):
        color = f"C{i}"
        if widths.size > 1 and widths.std() > 0:
            density = gaussian_kde(widths, bw_method="silverman")(grid)
        else:
            density = np.zeros_like(grid)
        ax.plot(grid, density, color=color, label=f"spend {delta:.2%}")
        q = float(np.quantile(widths, job.level))
        ax.axvline(q, color=color, ls="-", lw=1)
        info[delta] = {"mean_half_width": float(widths.mean()), "quantile": q}
    ax.set_xlabel("credible-interval half-width")
    ax.set_ylabel("density")
    ax.legend()
    fig.tight_layout()
    fig.savefig(job.output_path)
    plt.close(fig)
    return info


_RENDERERS = {
    "heatmap": _render_heatmap,
    "corr-trace": _render_corr_trace,
    "scatter": _render_scatter,
    "fit-hists": _render_fit_hists,
    "study-hists": _render_study_hists,
    "stein-bayes": _render_stein_bayes,
    "width-density": _render_width_density,
}

KINDS = tuple(_RENDERERS)


def render(job: PlotJob) -> dict:
    """Render one figure; returns the summary values annotated on it.

    Never modifies the input CSV.  Raises MissingColumnError /
    EmptyInputError for malformed inputs, FileNotFoundError for a missing
    file.
    """
    if job.kind not in _RENDERERS:
        raise ValueError(f"unknown figure kind '{job.kind}' (choose from {KINDS})")
    if not Path(job.input_path).exists():
        raise FileNotFoundError(f"input CSV not found: {job.input_path}")
    if job.bins < 1:
        raise ValueError("bins must be >= 1")
    with plt.rc_context(_STYLE):
        return _RENDERERS[job.kind](job)
