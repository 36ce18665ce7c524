"""Dual volume sampling for column subset selection and experimental design."""

__version__ = "0.1.0"

from .errors import (
    DegenerateUpdateError,
    DomainError,
    EnumerationCapError,
    InfeasibleError,
    NullEventError,
    SingularMatrixError,
)
from .linalg import DesignMatrix, SubsetSelection, elem_sym_poly, logdet_gram
from .exact import DvsProblem, marginal, partition_function, sample_exact, unnormalized_marginal
from .derand import conditional_expectation_fro, derandomized_select
from .mcmc import ChainConfig, mixing_budget, run_chains, sample_mcmc
from .approx import perturbed_det, sample_approx
from .design import RegressionDataset, bound_check, fedorov_exchange, objective, regression_eval

__all__ = [
    "ChainConfig", "DegenerateUpdateError", "DesignMatrix", "DomainError", "DvsProblem",
    "EnumerationCapError", "InfeasibleError", "NullEventError", "RegressionDataset",
    "SingularMatrixError", "SubsetSelection", "bound_check", "conditional_expectation_fro",
    "derandomized_select", "elem_sym_poly", "fedorov_exchange", "logdet_gram", "marginal",
    "mixing_budget", "objective", "partition_function", "perturbed_det", "regression_eval",
    "run_chains", "sample_approx", "sample_exact", "sample_mcmc", "unnormalized_marginal",
]
