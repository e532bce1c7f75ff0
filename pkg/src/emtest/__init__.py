"""EM-test for homogeneity in a heteroscedastic contaminated normal mixture."""

from .em import (
    EmTestConfig,
    EmTestResult,
    EmTrace,
    IterationRecord,
    e_step,
    em_test,
    fit_report,
    limiting_pvalue,
    m_step,
    step1_profile_fit,
)
from .model import (
    DegenerateDataError,
    MixtureParams,
    PenaltyConfig,
    a_n_default,
    log_likelihood,
    modified_log_likelihood,
    null_fit,
    penalty_alpha,
    penalty_sigma,
)
from .special import RngState

__version__ = "0.1.0"
