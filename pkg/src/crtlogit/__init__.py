"""Conditional randomization tests for high-dimensional sparse logistic regression.

The main entry point is :func:`crt_logit`, which screens variables with a
cross-validated logistic lasso and tests each survivor with a decorrelated
score statistic normalized by the empirical partial Fisher information.
Baselines (:func:`dcrt`, :func:`vanilla_crt`, :func:`hrt`), step-up FDR
selection (:func:`bh_select`, :func:`by_select`) and a seeded simulation
harness round out the toolkit.  Logistic fits carry no intercept; center
your design or generate zero-mean data.
"""

from .baselines import (
    ConditionalSampler,
    ResamplingConfig,
    dcrt,
    dcrt_statistic,
    fit_conditional_sampler,
    hrt,
    vanilla_crt,
)
from .errors import (
    CholeskyError,
    CrtLogitError,
    DegenerateFisherInfoError,
    DegenerateResidualError,
    DegenerateWeightsError,
    InvalidInputError,
    NonConvergenceWarning,
    NonFiniteError,
    SplitError,
)
from .inference import (
    DistillationPair,
    InferenceConfig,
    VariableResult,
    crt_logit,
    decorrelated_statistic,
    distill_x,
    distill_y,
    partial_fisher_info,
    screening_set,
    two_sided_pvalue,
    universal_lambda,
)
from .multiple_testing import (
    GroundTruth,
    SelectionReport,
    bh_select,
    by_select,
    score_selection,
)
from .simulation import (
    Replicate,
    SimulationConfig,
    generate_response,
    make_beta0,
    make_replicate,
    run_fdr_power_sweep,
    run_lambda_heatmap,
    run_qq_experiment,
    run_runtime_bench,
    toeplitz_design,
)
from .solvers import (
    CvPlan,
    Dataset,
    FittedModel,
    WeightedLassoProblem,
    cross_validate,
    default_lambda_grid,
    fit_sparse_logistic,
    fit_weighted_lasso,
    lambda_max_logistic,
    lambda_max_weighted,
    logistic_gradient,
    logistic_objective,
    sigmoid,
    sigmoid_weight,
    weighted_lasso_gradient,
    weighted_lasso_objective,
)

__version__ = "0.1.0"

__all__ = [
    "CholeskyError",
    "ConditionalSampler",
    "CrtLogitError",
    "CvPlan",
    "Dataset",
    "DegenerateFisherInfoError",
    "DegenerateResidualError",
    "DegenerateWeightsError",
    "DistillationPair",
    "FittedModel",
    "GroundTruth",
    "InferenceConfig",
    "InvalidInputError",
    "NonConvergenceWarning",
    "NonFiniteError",
    "Replicate",
    "ResamplingConfig",
    "SelectionReport",
    "SimulationConfig",
    "SplitError",
    "VariableResult",
    "WeightedLassoProblem",
    "bh_select",
    "by_select",
    "cross_validate",
    "crt_logit",
    "dcrt",
    "dcrt_statistic",
    "decorrelated_statistic",
    "default_lambda_grid",
    "distill_x",
    "distill_y",
    "fit_conditional_sampler",
    "fit_sparse_logistic",
    "fit_weighted_lasso",
    "generate_response",
    "hrt",
    "lambda_max_logistic",
    "lambda_max_weighted",
    "logistic_gradient",
    "logistic_objective",
    "make_beta0",
    "make_replicate",
    "partial_fisher_info",
    "run_fdr_power_sweep",
    "run_lambda_heatmap",
    "run_qq_experiment",
    "run_runtime_bench",
    "score_selection",
    "screening_set",
    "sigmoid",
    "sigmoid_weight",
    "toeplitz_design",
    "two_sided_pvalue",
    "universal_lambda",
    "vanilla_crt",
    "weighted_lasso_gradient",
    "weighted_lasso_objective",
]
