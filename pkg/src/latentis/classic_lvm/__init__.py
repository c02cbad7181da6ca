"""The seven classic latent variable models."""

from .cca import CcaModel, cca_eigen_correlations, cca_residuals, cca_transform, fit_cca
from .fa import FaEmState, FaModel, fa_e_step, fa_infer, fa_loglik, fit_fa
from .gmm import GmmModel, fit_gmm, gmm_loglik, gmm_responsibilities
from .hmm import HmmModel, hmm_baum_welch, hmm_loglik, hmm_viterbi
from .ica import IcaModel, fit_ica, ica_reconstruct, ica_sources
from .pca import (
    PcaModel,
    components_for_cpv,
    fit_pca,
    pca_reconstruct,
    pca_residual,
    pca_transform,
    whiten,
)
from .pls import PlsModel, fit_pls, pls_predict, pls_transform

__all__ = [
    "CcaModel", "FaEmState", "FaModel", "GmmModel", "HmmModel", "IcaModel", "PcaModel",
    "PlsModel", "cca_eigen_correlations", "cca_residuals", "cca_transform",
    "components_for_cpv", "fa_e_step", "fa_infer", "fa_loglik", "fit_cca", "fit_fa",
    "fit_gmm", "fit_ica", "fit_pca", "fit_pls", "gmm_loglik", "gmm_responsibilities",
    "hmm_baum_welch", "hmm_loglik", "hmm_viterbi", "ica_reconstruct", "ica_sources",
    "pca_reconstruct", "pca_residual", "pca_transform", "pls_predict", "pls_transform",
    "whiten",
]
