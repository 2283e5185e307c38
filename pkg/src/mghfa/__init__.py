"""Model-based clustering and conditional-mean imputation for incomplete
data with mixtures of generalized hyperbolic factor analyzers."""

from .aecm import (
    DegenerateComponentError,
    EStepCache,
    FitConfig,
    FitError,
    FitResult,
    NumericError,
    SingularUpdateError,
    aitken_stop,
    classify,
    cmstep_cycle1,
    cmstep_cycle2,
    estep_cycle1,
    estep_cycle2,
    fit,
    impute,
    observed_loglik,
)
from .bessel import dlogk_dorder, log_bessel_k
from .data import (
    DataError,
    DataMatrix,
    MarSpec,
    ObservedPattern,
    apply_mar,
    pattern_of,
    read_csv,
    write_csv,
)
from .evaluation import (
    SelectionScore,
    ari,
    awe,
    bic,
    entropy,
    err,
    imputation_mse,
    n_free_params,
    selection_score,
)
from .ghd import GhdParams, ghd_logpdf, ghd_sample, mahalanobis_sq
from .gig import GigAltParams, GigMoments, GigParams, gig_logpdf, gig_moments, gig_sample
from .initialization import InitConfig, init_params, kmeans, mean_impute
from .model import MghfaModel, load_model, model_from_dict, model_to_dict, save_model
from .simulate import SimSpec, simulate_mghfa, table1_model

__version__ = "0.1.0"
