"""PR, RFR and ANN surrogates of the envelope solver."""
from .forest import Forest, RfrHyper, fit_forest
from .mlp import MLP_LAYERS, MLP_UNITS, MlpHyper, TrainingDiverged, gradient_check
from .model import (METHODS, MODEL_FORMAT_VERSION, ModelFormatError, TrainedModel, fit_mlp,
                    fit_mlp_carved, fit_pr, fit_rfr, predict)
from .poly import PR_DEGREES, PrHyper, UnderdeterminedError, exponents, poly_features
from .scaling import FeatureScaler
from .search import CvEntry, CvReport, default_grid, grid_search

__all__ = [
    "CvEntry", "CvReport", "FeatureScaler", "Forest", "METHODS", "MLP_LAYERS", "MLP_UNITS",
    "MODEL_FORMAT_VERSION", "MlpHyper", "ModelFormatError", "PR_DEGREES", "PrHyper",
    "RfrHyper", "TrainedModel", "TrainingDiverged", "UnderdeterminedError", "default_grid",
    "exponents", "fit_forest", "fit_mlp", "fit_mlp_carved", "fit_pr", "fit_rfr",
    "gradient_check", "grid_search", "poly_features", "predict",
]
