"""Multibrand geographic advertising experiments.

Designs balanced treatment assignments over GEOs and brands, simulates
Gamma-distributed sales under those designs, and estimates per-brand
advertising returns by weighted least squares, SURE-tuned shrinkage
toward the pooled mean, and a conjugate hierarchical Gibbs sampler.
"""

from .bayes import BayesConfig, IntervalSummary, PosteriorChains, gibbs_run, summarize_posterior
from .design import (
    COLLISION_FREE_6X6,
    COLLISION_FREE_8X8,
    CorrelationSummary,
    DesignMatrix,
    ValidationReport,
    checkerboard_init,
    correlations,
    flip_attempt,
    grow4,
    grow48,
    scramble,
    validate,
)
from .estimation import (
    FitResult,
    GeoResponseFit,
    PooledEstimate,
    fit_all_brands,
    fit_geo_responsiveness,
    pooled_mean,
    wls_fit_single,
)
from .shrinkage import ShrinkageResult, choose_lambda, efficiency, shrink, sure_g
from .simulate import (
    Dataset,
    GeoProfile,
    SimConfig,
    generate_dataset,
    sample_brand_effects,
    sample_geo_sizes,
    sample_scaled_gamma,
)
from .study import StudySpec, StudySummary, replicate_seed, run_study

__version__ = "0.1.0"
