"""Replicated Monte Carlo studies with deterministic seeding.

A study repeats: draw a fresh scrambled design, fresh brand returns and
fresh Gamma noise, then build one dataset per spend level from the same
noise (common random numbers: only x_post changes across levels) and run
the analyses the study kind asks for.  Every replicate derives its own
seeds from (master_seed, replicate index, stream label), so results are
bit-identical regardless of execution order or parallelism.
"""

from __future__ import annotations

import json
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bayes as bayes_mod
from .design import checkerboard_init, scramble
from .estimation import fit_all_brands
from .shrinkage import choose_lambda, efficiency
from .simulate import (
    SimConfig,
    compose_dataset,
    parse_keyvalues,
    sample_brand_effects,
    sample_geo_sizes,
    sample_scaled_gamma,
)

__all__ = [
    "StudySpec",
    "DeltaSummary",
    "StudySummary",
    "STUDY_KINDS",
    "replicate_seed",
    "run_study",
    "replicate_datasets",
    "records_to_csv",
    "summary_to_json",
    "load_study_spec",
]

STUDY_KINDS = (
    "single_brand",
    "multibrand_shrinkage",
    "stein_vs_bayes",
    "bayes_coverage",
    "credible_width",
)

RECORD_COLUMNS = (
    "replicate",
    "delta",
    "brand",
    "beta_true",
    "beta_hat",
    "var_hat",
    "p_value",
    "beta_tilde",
    "bayes_mean",
    "ci_lo",
    "ci_hi",
)


@dataclass(frozen=True)
class StudySpec:
    """What to run: study kind, simulation setup, spend levels, replicates."""

    kind: str
    sim: SimConfig
    replicates: int
    master_seed: int
    delta_levels: tuple[float, ...] = (0.01,)
    bayes: bayes_mod.BayesConfig | None = None
    freeze_sizes: bool = False

    def __post_init__(self):
        if self.kind not in STUDY_KINDS:
            raise ValueError(f"unknown study kind '{self.kind}'")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.delta_levels:
            raise ValueError("delta_levels must be nonempty")
        if self.master_seed < 0:
            raise ValueError("master_seed must be a nonnegative integer")
        object.__setattr__(
            self, "delta_levels", tuple(float(d) for d in self.delta_levels)
        )
        if self.kind in ("stein_vs_bayes", "bayes_coverage", "credible_width"):
            if self.bayes is None:
                object.__setattr__(self, "bayes", bayes_mod.BayesConfig())


@dataclass(frozen=True)
class DeltaSummary:
    """Aggregates for one spend level; fields unused by a kind stay None."""

    delta: float
    n_replicates: int
    rejection_rate: float | None = None
    mean_2se: float | None = None
    rmse: float | None = None
    mean_beta_given_significant: float | None = None
    mean_efficiency: float | None = None
    mean_2se_pooled: float | None = None
    mean_rmse_stein: float | None = None
    mean_rmse_bayes: float | None = None
    coverage: float | None = None
    mean_ci_half_width: float | None = None


@dataclass(frozen=True)
class StudySummary:
    """Per-delta aggregates plus the raw per-(replicate, brand) records."""

    kind: str
    per_delta: dict[float, DeltaSummary]
    records: list[dict] = field(repr=False)


def replicate_seed(master_seed: int, replicate: int, stream: str) -> int:
    """Derive a 128-bit seed for one (replicate, stream) pair.

    Streams keep the draw sources independent, so rerunning a replicate at
    a different spend level (which touches no stream) reuses every noise
    draw exactly.
    """
    if master_seed < 0 or replicate < 0:
        raise ValueError("master_seed and replicate must be nonnegative")
    label = zlib.crc32(stream.encode("utf-8"))
    ss = np.random.SeedSequence([master_seed, replicate, label])
    hi, lo = ss.generate_state(2, np.uint64)
    return (int(hi) << 64) | int(lo)


def _stream_rng(spec: StudySpec, replicate: int, stream: str) -> np.random.Generator:
    return np.random.default_rng(replicate_seed(spec.master_seed, replicate, stream))


def _fresh_assignment(spec: StudySpec, replicate: int) -> np.ndarray:
    """Scrambled checkerboard, or a random half-split column when B = 1."""
    rng = _stream_rng(spec, replicate, "design")
    g, b = spec.sim.g_count, spec.sim.b_count
    if b == 1:
        if g % 2 != 0:
            raise ValueError("single-brand studies need an even GEO count")
        column = np.repeat([1, -1], g // 2)
        return rng.permutation(column)[:, None]
    design, _ = scramble(checkerboard_init(g, b), rng=rng, trace_every=None)
    return design.entries


def replicate_datasets(spec: StudySpec, replicate: int):
    """The per-delta datasets for one replicate, on shared noise draws.

    Returns (entries, effects, {delta: Dataset}).  Sizes are redrawn each
    replicate unless ``freeze_sizes`` pins them to the replicate-0 stream.
    """
    sim = spec.sim
    entries = _fresh_assignment(spec, replicate)
    sizes_rep = 0 if spec.freeze_sizes else replicate
    sizes = sample_geo_sizes(sim, _stream_rng(spec, sizes_rep, "sizes"))
    effects = sample_brand_effects(sim, _stream_rng(spec, replicate, "effects"))
    shape = (sim.g_count, sim.b_count)
    mean = sizes.sizes[:, None]
    y_pre = sample_scaled_gamma(
        mean, sim.cv_pre, sim.n_pre, _stream_rng(spec, replicate, "pre-noise"), size=shape
    )
    post_base = (sim.n_post / sim.n_pre) * sample_scaled_gamma(
        mean, sim.cv_post, sim.n_post, _stream_rng(spec, replicate, "post-noise"), size=shape
    )
    datasets = {
        delta: compose_dataset(entries, delta, y_pre, post_base, effects)
        for delta in spec.delta_levels
    }
    return entries, effects, datasets


def _nan_record(replicate: int, delta: float, brand: int) -> dict:
    return {
        "replicate": replicate,
        "delta": delta,
        "brand": brand + 1,
        "beta_true": np.nan,
        "beta_hat": np.nan,
        "var_hat": np.nan,
        "p_value": np.nan,
        "beta_tilde": np.nan,
        "bayes_mean": np.nan,
        "ci_lo": np.nan,
        "ci_hi": np.nan,
    }


def _run_replicate(spec: StudySpec, replicate: int) -> list[dict]:
    """All record rows for one replicate (every delta level, every brand).

    Any analysis error aborts the whole study, tagged with the replicate
    index (determinism over robustness).
    """
    try:
        return _run_replicate_inner(spec, replicate)
    except ValueError as exc:
        raise type(exc)(f"replicate {replicate}: {exc}") from None


def _run_replicate_inner(spec: StudySpec, replicate: int) -> list[dict]:
    _, effects, datasets = replicate_datasets(spec, replicate)
    needs_fits = spec.kind in ("single_brand", "multibrand_shrinkage", "stein_vs_bayes")
    needs_shrink = spec.kind in ("multibrand_shrinkage", "stein_vs_bayes")
    needs_bayes = spec.kind in ("stein_vs_bayes", "bayes_coverage", "credible_width")
    records = []
    for delta in spec.delta_levels:
        dataset = datasets[delta]
        rows = [_nan_record(replicate, delta, b) for b in range(spec.sim.b_count)]
        for b, row in enumerate(rows):
            row["beta_true"] = float(effects[b])
        if needs_fits:
            fits = fit_all_brands(dataset)
            for b, fit in enumerate(fits):
                rows[b]["beta_hat"] = fit.beta_hat
                rows[b]["var_hat"] = fit.var_beta
                rows[b]["p_value"] = fit.p_value
            if needs_shrink:
                beta_hats = np.array([f.beta_hat for f in fits])
                var_hats = np.array([f.var_beta for f in fits])
                tilde = choose_lambda(beta_hats, var_hats).beta_tilde
                for b, row in enumerate(rows):
                    row["beta_tilde"] = float(tilde[b])
        if needs_bayes:
            rng = _stream_rng(spec, replicate, "bayes")
            chains = bayes_mod.gibbs_run(dataset, spec.bayes, rng)
            summary = bayes_mod.summarize_posterior(chains, spec.bayes.level)
            for b, row in enumerate(rows):
                row["bayes_mean"] = float(summary.brand_mean[b])
                row["ci_lo"] = float(summary.brand_lower[b])
                row["ci_hi"] = float(summary.brand_upper[b])
        records.extend(rows)
    return records


def _summarize_delta(spec: StudySpec, delta: float, records: list[dict]) -> DeltaSummary:
    rows = [r for r in records if r["delta"] == delta]
    by_rep: dict[int, list[dict]] = {}
    for r in rows:
        by_rep.setdefault(r["replicate"], []).append(r)
    n_reps = len(by_rep)
    kw: dict = {"delta": delta, "n_replicates": n_reps}

    if spec.kind in ("single_brand", "multibrand_shrinkage", "stein_vs_bayes"):
        beta_hat = np.array([r["beta_hat"] for r in rows])
        var_hat = np.array([r["var_hat"] for r in rows])
        p = np.array([r["p_value"] for r in rows])
        truth = np.array([r["beta_true"] for r in rows])
        significant = p <= 0.05
        kw["rejection_rate"] = float(significant.mean())
        kw["mean_2se"] = float((2.0 * np.sqrt(var_hat)).mean())
        kw["rmse"] = float(np.sqrt(((beta_hat - truth) ** 2).mean()))
        kw["mean_beta_given_significant"] = (
            float(beta_hat[significant].mean()) if significant.any() else None
        )

    if spec.kind == "multibrand_shrinkage":
        effs = []
        pooled_2se = []
        for rep_rows in by_rep.values():
            bh = np.array([r["beta_hat"] for r in rep_rows])
            bt = np.array([r["beta_tilde"] for r in rep_rows])
            tr = np.array([r["beta_true"] for r in rep_rows])
            vh = np.array([r["var_hat"] for r in rep_rows])
            effs.append(efficiency(bh, bt, tr))
            pooled_2se.append(2.0 * np.sqrt(vh.sum() / len(vh) ** 2))
        kw["mean_efficiency"] = float(np.mean(effs))
        kw["mean_2se_pooled"] = float(np.mean(pooled_2se))

    if spec.kind == "stein_vs_bayes":
        stein = []
        bayes_rmse = []
        for rep_rows in by_rep.values():
            tr = np.array([r["beta_true"] for r in rep_rows])
            bt = np.array([r["beta_tilde"] for r in rep_rows])
            bm = np.array([r["bayes_mean"] for r in rep_rows])
            stein.append(np.sqrt(((bt - tr) ** 2).mean()))
            bayes_rmse.append(np.sqrt(((bm - tr) ** 2).mean()))
        kw["mean_rmse_stein"] = float(np.mean(stein))
        kw["mean_rmse_bayes"] = float(np.mean(bayes_rmse))

    if spec.kind in ("bayes_coverage", "credible_width"):
        lo = np.array([r["ci_lo"] for r in rows])
        hi = np.array([r["ci_hi"] for r in rows])
        truth = np.array([r["beta_true"] for r in rows])
        kw["coverage"] = float(((lo <= truth) & (truth <= hi)).mean())
        kw["mean_ci_half_width"] = float(((hi - lo) / 2.0).mean())

    return DeltaSummary(**kw)


def run_study(spec: StudySpec, jobs: int = 1) -> StudySummary:
    """Run all replicates and aggregate; `jobs` > 1 uses worker processes.

    Replicates are independent by construction, and the aggregation folds
    them in index order, so the result does not depend on `jobs`.
    """
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    indices = range(spec.replicates)
    if jobs == 1:
        per_rep = [_run_replicate(spec, r) for r in indices]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunk = max(1, spec.replicates // (4 * jobs))
            per_rep = list(
                pool.map(_run_replicate, [spec] * spec.replicates, indices, chunksize=chunk)
            )
    records = [row for rep_rows in per_rep for row in rep_rows]
    per_delta = {
        delta: _summarize_delta(spec, delta, records) for delta in spec.delta_levels
    }
    return StudySummary(kind=spec.kind, per_delta=per_delta, records=records)


def records_to_csv(records: list[dict], path) -> None:
    """Write per-replicate records with the fixed column contract."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_COLUMNS)
        for row in records:
            out = []
            for col in RECORD_COLUMNS:
                value = row[col]
                if col in ("replicate", "brand"):
                    out.append(int(value))
                elif isinstance(value, float) and np.isnan(value):
                    out.append("")
                else:
                    out.append(str(float(value)))
            writer.writerow(out)


def summary_to_json(summary: StudySummary, path) -> None:
    """Write the per-delta aggregate table (records live in the CSV)."""
    payload = {
        "kind": summary.kind,
        "per_delta": [
            {
                "delta": d.delta,
                "n_replicates": d.n_replicates,
                "rejection_rate": d.rejection_rate,
                "mean_2se": d.mean_2se,
                "rmse": d.rmse,
                "mean_beta_given_significant": d.mean_beta_given_significant,
                "mean_efficiency": d.mean_efficiency,
                "mean_2se_pooled": d.mean_2se_pooled,
                "mean_rmse_stein": d.mean_rmse_stein,
                "mean_rmse_bayes": d.mean_rmse_bayes,
                "coverage": d.coverage,
                "mean_ci_half_width": d.mean_ci_half_width,
            }
            for d in summary.per_delta.values()
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


_SPEC_KEYS = {
    "kind": str,
    "replicates": int,
    "master_seed": int,
    "delta_levels": "floats",
    "freeze_sizes": "bool",
}
_SIM_KEYS = {
    "g_count": int,
    "b_count": int,
    "phi": float,
    "cv_pre": float,
    "cv_post": float,
    "n_pre": int,
    "n_post": int,
    "delta": float,
    "beta_mean": float,
    "beta_sd": float,
}
_BAYES_KEYS = {
    "iterations": int,
    "burn_in": int,
    "chains": int,
    "thin": int,
    "level": float,
}


def load_study_spec(path, **overrides) -> StudySpec:
    """Build a StudySpec from a flat key-value file.

    Recognizes the study keys (kind, replicates, master_seed, delta_levels,
    freeze_sizes), all SimConfig fields, and the sampler keys (iterations,
    burn_in, chains, thin, level).  ``overrides`` replace file values.
    """
    values = parse_keyvalues(path)
    values.update({k: v for k, v in overrides.items() if v is not None})

    spec_kw: dict = {}
    sim_kw: dict = {}
    bayes_kw: dict = {}
    for key, raw in values.items():
        raw = str(raw)
        if key in _SPEC_KEYS:
            kind = _SPEC_KEYS[key]
            if kind == "floats":
                spec_kw[key] = tuple(float(v) for v in raw.replace(",", " ").split())
            elif kind == "bool":
                spec_kw[key] = raw.lower() in ("1", "true", "yes")
            else:
                spec_kw[key] = kind(raw)
        elif key in _SIM_KEYS:
            sim_kw[key] = _SIM_KEYS[key](raw)
        elif key in _BAYES_KEYS:
            bayes_kw[key] = _BAYES_KEYS[key](raw)
        else:
            raise ValueError(f"unknown study key '{key}' in {path}")
    for required in ("kind", "replicates", "master_seed"):
        if required not in spec_kw:
            raise ValueError(f"{path}: missing required key '{required}'")
    if "g_count" not in sim_kw or "b_count" not in sim_kw:
        raise ValueError(f"{path}: missing required keys 'g_count'/'b_count'")
    spec_kw["sim"] = SimConfig(**sim_kw)
    if bayes_kw:
        spec_kw["bayes"] = bayes_mod.BayesConfig(**bayes_kw)
    return StudySpec(**spec_kw)
