"""Command-line interface: design, simulate, analyze, shrink, bayes, study.

Exit status 0 on success, 1 for runtime failures (bad files, failed
fits), 2 for usage errors.  ``--seed`` defaults to the GEOEXP_SEED
environment variable, then 0, and fully determines every output.
Console numbers print with 6 significant digits; files keep full
precision.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import bayes as bayes_mod
from . import design as design_mod
from . import estimation, shrinkage, simulate, study

__all__ = ["main"]


class UsageError(ValueError):
    """Bad flag value or inconsistent request; exits with status 2."""


def _default_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("GEOEXP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"GEOEXP_SEED must be an integer, got '{env}'") from None
    return 0


def _fmt(value) -> str:
    return f"{value:.6g}" if isinstance(value, float) else str(value)


def _write_design_file(design, path) -> None:
    if str(path).endswith(".json"):
        design_mod.design_to_json(design, path)
    else:
        design_mod.design_to_csv(design, path)


def _read_design_file(path):
    if str(path).endswith(".json"):
        return design_mod.design_from_json(path)
    return design_mod.design_from_csv(path)


def _cmd_design(args) -> None:
    for flag, value in (("--geos", args.geos), ("--brands", args.brands)):
        if value < 2 or value % 2 != 0:
            raise UsageError(f"{flag} must be an even integer >= 2, got {value}")
    if args.trace_every < 1:
        raise UsageError(f"--trace-every must be >= 1, got {args.trace_every}")
    if args.steps is not None and args.steps < 0:
        raise UsageError(f"--steps must be >= 0, got {args.steps}")
    rng = np.random.default_rng(_default_seed(args.seed))
    start = design_mod.checkerboard_init(args.geos, args.brands)
    scrambled, trace = design_mod.scramble(
        start, attempts=args.steps, rng=rng, trace_every=args.trace_every
    )
    _write_design_file(scrambled, args.output)
    trace_path = args.trace_out or f"{args.output}.trace.csv"
    _write_trace(trace, args.trace_every, trace_path)
    summary = design_mod.correlations(scrambled)
    print(f"wrote {args.geos}x{args.brands} design to {args.output}")
    print(f"wrote correlation trace ({len(trace)} rows) to {trace_path}")
    print(
        "brand correlations: "
        f"min {_fmt(summary.brand_min)}, max {_fmt(summary.brand_max)}, "
        f"rms {_fmt(summary.brand_rms)}"
    )
    print(
        "geo correlations:   "
        f"min {_fmt(summary.geo_min)}, max {_fmt(summary.geo_max)}, "
        f"rms {_fmt(summary.geo_rms)}"
    )


def _write_trace(trace, trace_every, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["flips", "brand_min", "brand_max", "brand_rms", "geo_min", "geo_max", "geo_rms"]
        )
        for i, row in enumerate(trace):
            writer.writerow(
                [
                    (i + 1) * trace_every,
                    str(row.brand_min),
                    str(row.brand_max),
                    str(row.brand_rms),
                    str(row.geo_min),
                    str(row.geo_max),
                    str(row.geo_rms),
                ]
            )


def _cmd_simulate(args) -> None:
    design = _read_design_file(args.design)
    config = simulate.load_sim_config(
        args.config,
        g_count=design.g_count,
        b_count=design.b_count,
        delta=args.delta,
        beta_mean=args.beta_mean,
        beta_sd=args.beta_sd,
    )
    rng = np.random.default_rng(_default_seed(args.seed))
    dataset = simulate.generate_dataset(design, config, rng)
    simulate.dataset_to_csv(dataset, args.output)
    print(
        f"wrote {config.g_count}x{config.b_count} dataset "
        f"(delta {_fmt(config.delta)}) to {args.output}"
    )


def _cmd_analyze(args) -> None:
    dataset = simulate.dataset_from_csv(args.data)
    fits = estimation.fit_all_brands(dataset)
    estimation.fits_to_csv(fits, args.output)
    pooled = estimation.pooled_mean(fits)
    print(f"wrote {len(fits)} brand fits to {args.output}")
    print(
        f"pooled mean return {_fmt(pooled.beta_bar_hat)} "
        f"(2se {_fmt(2.0 * float(np.sqrt(pooled.var_beta_bar)))})"
    )
    if args.geo_response:
        geo_fit = estimation.fit_geo_responsiveness(dataset)
        _write_geo_response(geo_fit, args.geo_response)
        print(f"wrote GEO responsiveness fit to {args.geo_response}")


def _write_geo_response(fit, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "index", "estimate", "variance"])
        for b in range(fit.beta.shape[0]):
            writer.writerow(["beta", b + 1, str(float(fit.beta[b])), str(float(fit.var_beta[b]))])
        for g in range(fit.gamma.shape[0]):
            writer.writerow(["gamma", g + 1, str(float(fit.gamma[g])), str(float(fit.var_gamma[g]))])


def _cmd_shrink(args) -> None:
    beta_hats, var_hats = estimation.fits_from_csv(args.fits)
    result = shrinkage.choose_lambda(beta_hats, var_hats, grid_points=args.grid_points)
    shrinkage.shrinkage_to_json(result, args.output)
    lam = "inf" if np.isinf(result.lam) else _fmt(result.lam)
    print(f"wrote shrinkage result to {args.output}")
    print(f"lambda {lam} (u {_fmt(result.u)}), sure {_fmt(result.sure_value)}")


def _cmd_bayes(args) -> None:
    dataset = simulate.dataset_from_csv(args.data)
    config = bayes_mod.BayesConfig(
        iterations=args.iterations,
        burn_in=args.burn_in,
        chains=args.chains,
        thin=args.thin,
        level=args.level,
    )
    rng = np.random.default_rng(_default_seed(args.seed))
    chains = bayes_mod.gibbs_run(dataset, config, rng)
    bayes_mod.chains_to_csv(chains, args.output)
    summary = bayes_mod.summarize_posterior(chains, config.level)
    if args.summary_out:
        bayes_mod.interval_summary_to_json(summary, args.summary_out)
        print(f"wrote interval summary to {args.summary_out}")
    print(f"wrote chains to {args.output}")
    for b in range(summary.brand_mean.shape[0]):
        print(
            f"brand {b + 1}: mean {_fmt(float(summary.brand_mean[b]))}, "
            f"{int(config.level * 100)}% interval "
            f"({_fmt(float(summary.brand_lower[b]))}, {_fmt(float(summary.brand_upper[b]))})"
        )
    print(
        f"grand mean {_fmt(summary.grand_mean)}, interval "
        f"({_fmt(summary.grand_lower)}, {_fmt(summary.grand_upper)})"
    )


def _cmd_study(args) -> None:
    spec = study.load_study_spec(
        args.spec,
        replicates=args.replicates,
        master_seed=args.seed,
    )
    summary = study.run_study(spec, jobs=args.jobs)
    study.summary_to_json(summary, args.output)
    records_path = args.records_out or f"{args.output}.records.csv"
    study.records_to_csv(summary.records, records_path)
    print(f"wrote study summary to {args.output}")
    print(f"wrote {len(summary.records)} records to {records_path}")
    for delta, agg in summary.per_delta.items():
        parts = [f"delta {_fmt(delta)}:"]
        for name in (
            "rejection_rate",
            "mean_2se",
            "rmse",
            "mean_beta_given_significant",
            "mean_efficiency",
            "mean_2se_pooled",
            "mean_rmse_stein",
            "mean_rmse_bayes",
            "coverage",
            "mean_ci_half_width",
        ):
            value = getattr(agg, name)
            if value is not None:
                parts.append(f"{name} {_fmt(value)}")
        print(" ".join(parts))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geoexp",
        description="Multibrand GEO advertising experiments: design, simulate, estimate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="generate a scrambled balanced design")
    p.add_argument("--geos", type=int, required=True)
    p.add_argument("--brands", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--steps", type=int, default=None, help="swap attempts (default 2*G*B*25)")
    p.add_argument("--trace-every", type=int, default=10)
    p.add_argument("--trace-out", default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("simulate", help="simulate a dataset from a design CSV")
    p.add_argument("--design", required=True)
    p.add_argument("--config", default=None, help="key = value simulation config file")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--beta-mean", type=float, default=None)
    p.add_argument("--beta-sd", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="fit per-brand WLS returns on a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--geo-response", default=None, help="also fit per-GEO spend offsets")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("shrink", help="SURE-tuned shrinkage of a fits CSV")
    p.add_argument("--fits", required=True)
    p.add_argument("--grid-points", type=int, default=1001)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_shrink)

    p = sub.add_parser("bayes", help="hierarchical Gibbs sampler on a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--summary-out", default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_bayes)

    p = sub.add_parser("study", help="run a replicated study from a spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="override master_seed")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--records-out", default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_study)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
