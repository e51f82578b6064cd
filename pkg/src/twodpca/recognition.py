"""Feature galleries, weighted nearest-neighbour classification, reconstruction."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dataset import LabeledDataset, as_stack, sample_mean
from .errors import InvalidInputError, InvalidSpecError, UndefinedRatioError
from .linalg import as_finite, spectral_norm

NORMS = ("frobenius", "spectral")


@dataclass
class FeatureGallery:
    features: np.ndarray   # (n, k1, k2)
    labels: np.ndarray
    D: np.ndarray          # (k2,) column weights

    def __len__(self) -> int:
        return self.features.shape[0]


class Match(NamedTuple):
    index: np.ndarray      # nearest gallery entry per probe
    distance: np.ndarray


def model_weights(model) -> np.ndarray:
    D = getattr(model, "D", None)
    return np.ones(model.V.shape[1]) if D is None else np.asarray(D, dtype=np.float64)


def features(model, data) -> np.ndarray:
    """U^T (X_i - mean) V for every sample; shape (n, k1, k2)."""
    X = as_stack(data)
    if X.shape[1:] != model.mean.shape:
        raise InvalidInputError(f"samples are {X.shape[1]}x{X.shape[2]}, model expects "
                                f"{model.mean.shape[0]}x{model.mean.shape[1]}")
    return model.U.T @ (X - model.mean) @ model.V


def extract_features(model, ds: LabeledDataset, weighted: bool = True) -> FeatureGallery:
    """Gallery of training features; ``weighted=False`` uses D = I."""
    D = model_weights(model) if weighted else np.ones(model.V.shape[1])
    if not np.all(np.isfinite(D)) or np.any(D < 0):
        raise InvalidInputError("feature weights D must be finite and nonnegative")
    return FeatureGallery(features(model, ds), np.asarray(ds.labels).copy(), D)


def nearest(gallery: FeatureGallery, probe_features, norm: str = "frobenius") -> Match:
    """argmin_i ||(T - X_i) diag(D)|| per probe; ties go to the lowest index."""
    if len(gallery) == 0:
        raise InvalidInputError("gallery is empty")
    if norm not in NORMS:
        raise InvalidSpecError(f"norm must be one of {NORMS}")
    T = np.asarray(probe_features, dtype=np.float64)
    if T.ndim == 2:
        T = T[None]
    G = gallery.features * gallery.D
    T = T * gallery.D
    idx = np.empty(T.shape[0], dtype=np.int64)
    dist = np.empty(T.shape[0])
    for j, t in enumerate(T):
        diff = G - t
        if norm == "frobenius":
            d = np.sqrt(np.einsum("nab,nab->n", diff, diff))
        else:
            d = np.linalg.norm(diff, ord=2, axis=(1, 2))
        idx[j] = int(np.argmin(d))
        dist[j] = d[idx[j]]
    return Match(idx, dist)


def classify(gallery: FeatureGallery, probes, model, norm: str = "frobenius") -> np.ndarray:
    """Class index of the nearest gallery feature for every probe image."""
    match = nearest(gallery, features(model, probes), norm)
    return gallery.labels[match.index]


def reconstruct(model, feature) -> np.ndarray:
    """U F V^T + mean."""
    F = as_finite(feature, "feature")
    if F.shape[-2:] != (model.U.shape[1], model.V.shape[1]):
        raise InvalidInputError(f"feature is {F.shape[-2:]}, model has "
                                f"k1={model.U.shape[1]}, k2={model.V.shape[1]}")
    return model.U @ F @ model.V.T + model.mean


def reconstruction_ratio(X, X_rec, norm: str = "frobenius") -> float:
    """1 - ||X_rec - X|| / ||X||."""
    X = as_finite(X, "X", ndim=2)
    X_rec = as_finite(X_rec, "X_rec", ndim=2)
    if X.shape != X_rec.shape:
        raise InvalidInputError("reconstruction and reference differ in shape")
    if norm == "frobenius":
        size = np.linalg.norm(X)
        err = np.linalg.norm(X_rec - X)
    elif norm == "spectral":
        size = spectral_norm(X)
        err = spectral_norm(X_rec - X)
    else:
        raise InvalidSpecError(f"norm must be one of {NORMS}")
    if size == 0.0:
        raise UndefinedRatioError("reference image is all zeros")
    return float(1.0 - err / size)


def projection_variance(model, data, side: str = "right") -> float:
    """Sample variance of the data projected on the first vector of one side.

    For 1 x w samples this is the ordinary variance of the scalars x v_1;
    taller samples contribute the squared norm of the projected column.
    """
    X = as_stack(data)
    if X.shape[0] < 2:
        raise InvalidInputError("variance needs at least two samples")
    Xc = X - sample_mean(X)
    if side == "right":
        proj = Xc @ model.V[:, 0]
    elif side == "left":
        proj = np.swapaxes(Xc, 1, 2) @ model.U[:, 0]
    else:
        raise InvalidSpecError(f"side must be 'left' or 'right', got {side!r}")
    return float(np.sum(proj * proj) / (X.shape[0] - 1))
