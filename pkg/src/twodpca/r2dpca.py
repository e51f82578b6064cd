"""Relaxed 2DPCA: label-weighted blending of the Lp/Ls scatter.

The relaxed criterion blends the plain scatter G with a class-weighted
scatter G~ in which every centred sample of class j is scaled by
omega_j / n_j::

    J(u, v) = gamma * G(u, v) + (1 - gamma) * G~(u, v)

omega_j is proportional to f(lambda_max(C_j)), the leading eigenvalue of the
within-class row covariance pushed through a positive weight function. Since
||(omega_j/n_j) Y w||_s^s = (omega_j/n_j)^s ||Y w||_s^s, J is the greedy Lp/Ls
objective with per-sample weights ``gamma + (1 - gamma) (omega_j/n_j)^s``;
the fit reuses :func:`twodpca.lpsolver.greedy_fit` with those weights, so
``gamma = 1`` is G2DPCA on the same code path.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .dataset import LabeledDataset, center, sample_mean
from .errors import InvalidInputError, InvalidSpecError
from .linalg import sym_eig_topk
from .lpsolver import SolverConfig, greedy_fit, oriented

WEIGHT_FNS = ("identity", "shifted")
WeightFn = Union[str, Callable[[float], float]]


@dataclass(frozen=True)
class RelaxConfig:
    gamma: float = 0.5
    k1: int = 1
    k2: int | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    weight_fn: WeightFn = "identity"
    eps: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidSpecError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.k1 < 1 or (self.k2 is not None and self.k2 < 1):
            raise InvalidSpecError("k1 and k2 must be positive")
        if isinstance(self.weight_fn, str) and self.weight_fn not in WEIGHT_FNS:
            raise InvalidSpecError(f"weight_fn must be one of {WEIGHT_FNS} or a callable")
        if self.eps < 0:
            raise InvalidSpecError("eps must be nonnegative")
        if self.k2 is None:
            object.__setattr__(self, "k2", self.k1)


@dataclass
class R2DPCAModel:
    U: np.ndarray                 # h x k1
    V: np.ndarray                 # w x k2
    D: np.ndarray                 # right-side objectives f_1..f_k2
    left_objectives: np.ndarray
    omega: np.ndarray
    mean: np.ndarray
    config: RelaxConfig
    iterations: tuple[list[int], list[int]] = ([], [])

    @property
    def k1(self) -> int:
        return self.U.shape[1]

    @property
    def k2(self) -> int:
        return self.V.shape[1]

    @property
    def right_objectives(self) -> np.ndarray:
        return self.D

    def truncate(self, k1: int, k2: int) -> "R2DPCAModel":
        """The greedy fit is nested: the first k vectors do not depend on later ones."""
        return R2DPCAModel(self.U[:, :k1], self.V[:, :k2], self.D[:k2],
                           self.left_objectives[:k1], self.omega, self.mean, self.config,
                           (self.iterations[0][:k1], self.iterations[1][:k2]))


def _require_labels(train) -> LabeledDataset:
    if not isinstance(train, LabeledDataset):
        raise InvalidInputError("a LabeledDataset is required (class labels are used)")
    return train


def class_covariances(train: LabeledDataset) -> list[np.ndarray]:
    """Within-class row covariances C_j (w x w), each about its class mean."""
    train = _require_labels(train)
    covs = []
    for sl in train.class_slices():
        Xc = train.images[sl] - sample_mean(train.images[sl])
        C = np.einsum("nji,njk->ik", Xc, Xc) / Xc.shape[0]
        covs.append(0.5 * (C + C.T))
    return covs


def _weight(fn: WeightFn, eps: float) -> Callable[[float], float]:
    if callable(fn):
        return fn
    if fn == "shifted":
        return lambda lam: lam + eps
    return lambda lam: lam


def weighting_vector(train: LabeledDataset, weight_fn: WeightFn = "identity",
                     eps: float = 0.0) -> np.ndarray:
    """omega_j = f(lambda_max(C_j)) / sum_i f(lambda_max(C_i)).

    Falls back to uniform weights when every f value is zero.
    """
    f = _weight(weight_fn, eps)
    # PSD matrices: clip the rounding-level negative eigenvalues
    lam = [max(sym_eig_topk(C, 1)[0].value, 0.0) for C in class_covariances(train)]
    vals = np.array([float(f(x)) for x in lam])
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise InvalidSpecError("weight function must return finite nonnegative values")
    total = vals.sum()
    if total == 0.0:
        return np.full(len(vals), 1.0 / len(vals))
    return vals / total


def sample_weights(train: LabeledDataset, omega, gamma: float, s: float) -> np.ndarray:
    """gamma + (1 - gamma) * (omega_j / n_j)^s for every sample of class j."""
    sizes = np.asarray(train.class_sizes, dtype=np.float64)
    per_class = gamma + (1.0 - gamma) * (np.asarray(omega) / sizes) ** s
    return per_class[train.labels]


def relaxed_objective(u, v, train: LabeledDataset, omega, gamma: float, s: float) -> float:
    """Direct evaluation of the relaxed criterion J(u, v) (global-mean centring)."""
    train = _require_labels(train)
    Xc, _ = center(train)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    G = 0.0
    Gt = 0.0
    sizes = train.class_sizes
    for X, j in zip(Xc, train.labels):
        G += np.sum(np.abs(u @ X) ** s) + np.sum(np.abs(X @ v) ** s)
        c = omega[j] / sizes[j]
        Gt += np.sum(np.abs(c * (u @ X)) ** s) + np.sum(np.abs(c * (X @ v)) ** s)
    return float(gamma * G + (1.0 - gamma) * Gt)


def fit_r2dpca(train: LabeledDataset, cfg: RelaxConfig, callback=None) -> R2DPCAModel:
    """Weighted greedy fit of k1 left and k2 right projection vectors.

    D holds the right-side objective values f_k measured on the deflated
    samples; the classifier uses them to weight feature columns.
    """
    train = _require_labels(train)
    k1, k2 = cfg.k1, cfg.k2
    if k1 > train.h or k2 > train.w:
        raise InvalidSpecError(f"need k1 <= {train.h} and k2 <= {train.w}, got {k1}, {k2}")
    omega = weighting_vector(train, cfg.weight_fn, cfg.eps)
    weights = sample_weights(train, omega, cfg.gamma, cfg.solver.s)
    Xc, mean = center(train)
    left = greedy_fit(oriented(Xc, "left"), k1, cfg.solver, weights, "left", callback)
    right = greedy_fit(oriented(Xc, "right"), k2, cfg.solver, weights, "right", callback)
    return R2DPCAModel(left.W, right.W, right.objectives, left.objectives, omega, mean, cfg,
                       (left.iterations, right.iterations))
