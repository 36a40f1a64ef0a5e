"""Kernel-based significance testing for covariate subsets in nonparametric
regression, with wild-bootstrap critical values, competitor tests, and a
Monte Carlo experiment harness."""

from .bootstrap import (
    MultiplierLaw,
    TestConfig,
    TestResult,
    bootstrap_critical_value,
    draw_multipliers,
    resample_response,
    run_test,
)
from .data import (
    ColumnKind,
    ColumnSchema,
    DataError,
    Dataset,
    ScaledDataset,
    load_dataset,
    save_dataset,
    standardize,
)
from .kernels import (
    Bandwidths,
    KernelSpec,
    PsiSpec,
    default_bandwidths,
    eval_kernel,
    eval_mixed_kernel,
    eval_psi,
)
from .simulation import (
    Cell,
    DgpSpec,
    ExperimentConfig,
    ResultTable,
    TestTemplate,
    gen_continuous,
    gen_discrete,
    grid_cells,
    run_experiment,
)
from .smoother import SmootherOutput, compute_smoother
from .statistics import (
    DegenerateStatisticError,
    DiagonalTerms,
    StatisticValue,
    diagonal_terms,
    dgm_statistic,
    fisher_test,
    lv_statistic,
    standardize_statistic,
    stat_ihat,
    stat_itilde,
    var_hat,
    var_tilde,
)

__version__ = "0.1.0"

__all__ = [
    "Bandwidths",
    "Cell",
    "ColumnKind",
    "ColumnSchema",
    "DataError",
    "Dataset",
    "DegenerateStatisticError",
    "DgpSpec",
    "DiagonalTerms",
    "ExperimentConfig",
    "KernelSpec",
    "MultiplierLaw",
    "PsiSpec",
    "ResultTable",
    "ScaledDataset",
    "SmootherOutput",
    "StatisticValue",
    "TestConfig",
    "TestResult",
    "TestTemplate",
    "bootstrap_critical_value",
    "compute_smoother",
    "default_bandwidths",
    "dgm_statistic",
    "diagonal_terms",
    "draw_multipliers",
    "eval_kernel",
    "eval_mixed_kernel",
    "eval_psi",
    "fisher_test",
    "gen_continuous",
    "gen_discrete",
    "grid_cells",
    "load_dataset",
    "lv_statistic",
    "resample_response",
    "run_experiment",
    "run_test",
    "save_dataset",
    "standardize",
    "standardize_statistic",
    "stat_ihat",
    "stat_itilde",
    "var_hat",
    "var_tilde",
]
