"""Bilateral 2DPCA from the eigenvectors of the row and column covariances."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dataset import as_stack, center, sample_mean
from .errors import InvalidInputError, InvalidSpecError
from .linalg import as_finite, jacobi_eigh


class CovPair(NamedTuple):
    E1: np.ndarray  # h x h, column direction
    E2: np.ndarray  # w x w, row direction


@dataclass
class BilateralProjector:
    U: np.ndarray
    V: np.ndarray
    eigvals_left: np.ndarray
    eigvals_right: np.ndarray
    mean: np.ndarray

    @property
    def k1(self) -> int:
        return self.U.shape[1]

    @property
    def k2(self) -> int:
        return self.V.shape[1]

    @property
    def D(self) -> np.ndarray:
        # classic 2DPCA features are compared unweighted
        return np.ones(self.k2)

    def truncate(self, k1: int, k2: int) -> "BilateralProjector":
        return BilateralProjector(self.U[:, :k1], self.V[:, :k2], self.eigvals_left[:k1],
                                  self.eigvals_right[:k2], self.mean)


def covariances(train) -> CovPair:
    Xc, _ = center(train)
    n = Xc.shape[0]
    E1 = np.einsum("nij,nkj->ik", Xc, Xc) / n
    E2 = np.einsum("nji,njk->ik", Xc, Xc) / n
    # exact symmetry; einsum accumulation order can differ between (i,k) and (k,i)
    return CovPair(0.5 * (E1 + E1.T), 0.5 * (E2 + E2.T))


def fit_2dpca(train, k1: int, k2: int | None = None) -> BilateralProjector:
    """Top-k1 eigenvectors of E1 as U, top-k2 eigenvectors of E2 as V."""
    X = as_stack(train)
    _, h, w = X.shape
    k2 = k1 if k2 is None else k2
    if not (1 <= k1 <= h and 1 <= k2 <= w):
        raise InvalidSpecError(f"need 1 <= k1 <= {h} and 1 <= k2 <= {w}, got k1={k1}, k2={k2}")
    E1, E2 = covariances(X)
    mean = sample_mean(X)
    lv, lvec = jacobi_eigh(E1)
    rv, rvec = jacobi_eigh(E2)
    return BilateralProjector(lvec[:, :k1], rvec[:, :k2], lv[:k1], rv[:k2], mean)


def project(X, model) -> np.ndarray:
    """U^T (X - mean) V for one sample or a stack of samples."""
    X = as_finite(X, "X")
    if X.shape[-2:] != model.mean.shape:
        raise InvalidInputError(f"sample shape {X.shape[-2:]} does not match model "
                                f"{model.mean.shape}")
    return model.U.T @ (X - model.mean) @ model.V
