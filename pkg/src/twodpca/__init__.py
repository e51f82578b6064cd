"""Two-dimensional PCA family: eigen-based 2DPCA, the Lp/Ls greedy solver
(G2DPCA and its special cases) and the label-relaxed R2DPCA, with loaders,
a nearest-neighbour recogniser and an experiment harness."""

__version__ = "0.1.0"

from .dataset import LabeledDataset, SplitSpec, load_dataset, split
from .errors import (DegenerateDirectionError, FormatError, InvalidInputError,
                     InvalidSpecError, NumericFailureError, TwoDPCAError, UndefinedRatioError)
from .lpsolver import SolverConfig, fit_bilateral, solve_first_vector
from .modelio import load_model, save_model
from .pca2d import BilateralProjector, fit_2dpca
from .r2dpca import R2DPCAModel, RelaxConfig, fit_r2dpca, weighting_vector
from .recognition import classify, extract_features, reconstruct, reconstruction_ratio

__all__ = [
    "BilateralProjector", "DegenerateDirectionError", "FormatError", "InvalidInputError",
    "InvalidSpecError", "LabeledDataset", "NumericFailureError", "R2DPCAModel",
    "RelaxConfig", "SolverConfig", "SplitSpec", "TwoDPCAError", "UndefinedRatioError",
    "classify", "extract_features", "fit_2dpca", "fit_bilateral", "fit_r2dpca",
    "load_dataset", "load_model", "reconstruct", "reconstruction_ratio", "save_model",
    "solve_first_vector", "split", "weighting_vector",
]
