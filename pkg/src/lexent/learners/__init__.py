"""Classifier families: LR, linear/RBF/KSIM SVMs and an MLP, plus grid search."""

from .base import (
    FAMILIES, KSIM_SVM, LIN_SVM, LR, MLP, RBF_SVM, TrainedModel, canonical_family,
    decision_function, load_model, model_from_dict, model_to_dict, predict, save_model,
)
from .kernels import KSIMKernel, LinearKernel, RBFKernel, ksim_kernel
from .logistic import logistic_objective, train_logistic_regression
from .mlp import loss_and_grad as mlp_loss_and_grad, train_mlp
from .search import GramCache, HyperGrid, SearchResult, default_grid, fit, grid_search
from .svm import train_svm

__all__ = [
    "FAMILIES", "KSIM_SVM", "LIN_SVM", "LR", "MLP", "RBF_SVM", "TrainedModel",
    "canonical_family", "decision_function", "load_model", "model_from_dict",
    "model_to_dict", "predict", "save_model", "KSIMKernel", "LinearKernel", "RBFKernel",
    "ksim_kernel", "logistic_objective", "train_logistic_regression", "mlp_loss_and_grad",
    "train_mlp", "GramCache", "HyperGrid", "SearchResult", "default_grid", "fit",
    "grid_search", "train_svm",
]
