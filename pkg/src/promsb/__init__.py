"""Stationary analysis of multistate promoter gene expression models via
Markovian stick-breaking constructions, with exact simulation, Bayesian
fitting, and BIC structure selection."""

from .core import (
    GeneratorMatrix,
    ThetaDecomposition,
    adjoint,
    decompose,
    refractory_recover,
    stationary_vector,
    validate_generator,
)
from .errors import PromsbError
from .infer import (
    ConstraintMask,
    EtaVector,
    GibbsConfig,
    PosteriorTrace,
    eta_from_params,
    gibbs_fit,
    log_likelihood_mc,
    log_prior,
    params_from_eta,
    rmse,
)
from .mrna import (
    MrnaDraw,
    MrnaModel,
    mrna_factorial_moment,
    mrna_pmf_mc,
    mrna_pmf_series,
    sample_stationary,
    sample_stationary_batch,
)
from .msbm import (
    StickSample,
    TruncationPolicy,
    sample_gem,
    sample_msbmi,
    sample_msbmi_clumped,
    truncation_length,
)
from .protein import (
    ProteinModel,
    build_bounded_generator,
    choose_capacity,
    joint_moment,
    sample_protein_batch,
    sample_protein_stationary,
)
from .select import CandidateResult, bic, select_model
from .ssa import simulate, stationary_samples

__all__ = [
    "GeneratorMatrix",
    "ThetaDecomposition",
    "adjoint",
    "decompose",
    "refractory_recover",
    "stationary_vector",
    "validate_generator",
    "PromsbError",
    "ConstraintMask",
    "EtaVector",
    "GibbsConfig",
    "PosteriorTrace",
    "eta_from_params",
    "gibbs_fit",
    "log_likelihood_mc",
    "log_prior",
    "params_from_eta",
    "rmse",
    "MrnaDraw",
    "MrnaModel",
    "mrna_factorial_moment",
    "mrna_pmf_mc",
    "mrna_pmf_series",
    "sample_stationary",
    "sample_stationary_batch",
    "StickSample",
    "TruncationPolicy",
    "sample_gem",
    "sample_msbmi",
    "sample_msbmi_clumped",
    "truncation_length",
    "ProteinModel",
    "build_bounded_generator",
    "choose_capacity",
    "joint_moment",
    "sample_protein_batch",
    "sample_protein_stationary",
    "CandidateResult",
    "bic",
    "select_model",
    "simulate",
    "stationary_samples",
]

__version__ = "0.1.0"
