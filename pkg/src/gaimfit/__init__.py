"""gaimfit: simultaneous first-order estimation of additive index models.

The model is g(E[y|x]) = sum_j f_j(alpha_j . x) with unknown unit-norm
projection indices alpha_j and ridge functions f_j expanded in a fixed
polynomial basis.  Two estimators are provided -- alternating projected
gradient descent on an empirical loss, and a loss-free variational
inequality iteration driven by raw residuals -- plus convergence
diagnostics, a classical stage-wise baseline, and a seeded synthetic
experiment harness.
"""

__version__ = "0.1.0"

from .basis import BasisSet, eval_row, make_shifted_legendre
from .links import (LinkSpec, LossSpec, dloss_deta, get_link, get_loss,
                    identity_link, inv_softplus_link, log_link, neg_log_lik,
                    potential, vi_residual)
from .metrics import Alignment, apply_alignment, function_error, index_error
from .model import (DegenerateColumnError, ModelParams, batch_eta,
                    feature_matrix, grad_eta_alpha, predict_eta,
                    project_to_sphere_columns)
from .optim import (FitConfig, FitTrace, NonFiniteError, descent_check, fit,
                    rate_check, standard_init, stationarity_residual)
from .ppr import PprConfig, PprFit, ppr_fit, ppr_predict
from .synth import (Dataset, Truth, dataset_from_csv, dataset_to_csv,
                    make_dataset, sample_responses, sample_unit_ball,
                    truth_table1, truth_table2)

__all__ = [
    "__version__",
    "Alignment", "BasisSet", "Dataset", "DegenerateColumnError", "FitConfig",
    "FitTrace", "LinkSpec", "LossSpec", "ModelParams", "NonFiniteError",
    "PprConfig", "PprFit", "Truth",
    "apply_alignment", "batch_eta", "dataset_from_csv", "dataset_to_csv",
    "descent_check", "dloss_deta", "eval_row", "feature_matrix", "fit",
    "function_error", "get_link", "get_loss", "grad_eta_alpha",
    "identity_link", "index_error", "inv_softplus_link", "log_link",
    "make_dataset", "make_shifted_legendre", "neg_log_lik", "potential",
    "ppr_fit", "ppr_predict", "predict_eta", "project_to_sphere_columns",
    "rate_check", "sample_responses", "sample_unit_ball", "standard_init",
    "stationarity_residual", "truth_table1", "truth_table2", "vi_residual",
]
