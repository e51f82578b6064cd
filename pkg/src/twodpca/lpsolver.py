"""Greedy Lp/Ls projection pursuit for matrix samples.

Each projection vector w maximises

    sum_i  a_i * ||Y_i w||_s^s      subject to  ||w||_p = 1

by a fixed-point iteration: the ascent direction
``g = sum_i a_i Y_i^T [|Y_i w|^(s-1) o sign(Y_i w)]`` is mapped back onto the
Lp sphere by a p-dependent rule. Further vectors are found on deflated
samples ``X (I - W W^T)``. Per-sample weights ``a_i`` default to one; the
relaxed variant in :mod:`twodpca.r2dpca` supplies class-dependent weights.

With (s, p) = (2, 2) this is ordinary 2DPCA, (1, 2) gives 2DPCA-L1 and
general (s, p) gives G2DPCA.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from .dataset import as_stack, center
from .errors import DegenerateDirectionError, InvalidInputError, InvalidSpecError, NumericFailureError
from .linalg import check_p, lp_norm, sym_eig_topk

VARIANTS = ("2dpca", "2dpca-l1", "2dpcal1-s", "g2dpca")
INITS = ("spectral", "random")
DEFLATIONS = ("verbatim", "orthonormal")
ASCENT_SLACK = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one greedy fit.

    ``init="spectral"`` starts each vector from the dominant eigenvector of the
    (weighted, deflated) side covariance; ``"random"`` draws a Gaussian vector
    from ``seed``. ``deflation="orthonormal"`` projects out an L2-orthonormal
    basis of span(W) instead of using W as is. ``c`` is the L1 bound of the
    mixed-constraint 2DPCAL1-S model; it is recorded but that model is solved
    through its Lp surrogate, see :meth:`preset`.
    """

    s: float = 2.0
    p: float = 2.0
    tol: float = 1e-6
    max_iter: int = 200
    init: str = "spectral"
    seed: int = 0
    variant: str = "g2dpca"
    rho: float | None = None
    c: float | None = None
    deflation: str = "verbatim"

    def __post_init__(self):
        if not (math.isfinite(self.s) and self.s >= 1.0):
            raise InvalidSpecError(f"s must be a finite value >= 1, got {self.s}")
        check_p(self.p)
        if not self.tol > 0:
            raise InvalidSpecError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) < 1:
            raise InvalidSpecError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.init not in INITS:
            raise InvalidSpecError(f"init must be one of {INITS}, got {self.init!r}")
        if self.variant not in VARIANTS:
            raise InvalidSpecError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.deflation not in DEFLATIONS:
            raise InvalidSpecError(f"deflation must be one of {DEFLATIONS}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidSpecError("seed must fit in 64 unsigned bits")

    @classmethod
    def preset(cls, variant: str, **overrides) -> "SolverConfig":
        """Config for a named model.

        ``2dpca`` -> (s, p) = (2, 2); ``2dpca-l1`` -> (1, 2); ``2dpcal1-s``
        -> (1, 2 + rho) with rho in (-1, 0), default -0.5; ``g2dpca`` keeps
        the caller's s and p.
        """
        if variant == "2dpca":
            overrides.update(s=2.0, p=2.0)
        elif variant == "2dpca-l1":
            overrides.update(s=1.0, p=2.0)
        elif variant == "2dpcal1-s":
            rho = overrides.get("rho")
            rho = -0.5 if rho is None else float(rho)
            if not -1.0 < rho < 0.0:
                raise InvalidSpecError(f"2dpcal1-s needs rho in (-1, 0), got {rho}")
            overrides.update(s=1.0, p=2.0 + rho, rho=rho)
        elif variant != "g2dpca":
            raise InvalidSpecError(f"unknown variant {variant!r}")
        return cls(variant=variant, **overrides)


class FirstVector(NamedTuple):
    w: np.ndarray
    objective: float
    iterations: int


@dataclass
class UnilateralBasis:
    W: np.ndarray                   # d x k, columns are unit in the Lp norm
    objectives: np.ndarray          # f_1 ... f_k on the deflated samples
    side: str                       # "left" or "right"
    iterations: list[int] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.W.shape[1]


def _abs_pow(z: np.ndarray, s: float) -> np.ndarray:
    if s == 2.0:
        return z * z
    if s == 1.0:
        return np.abs(z)
    return np.abs(z) ** s


def _ascent_terms(z: np.ndarray, s: float) -> np.ndarray:
    # |z|^(s-1) o sign(z), with sign(0) = 0
    if s == 2.0:
        return z
    if s == 1.0:
        return np.sign(z)
    return np.sign(z) * np.abs(z) ** (s - 1.0)


def _objective(Y: np.ndarray, rw: np.ndarray, w: np.ndarray, s: float) -> float:
    return float(rw @ _abs_pow(Y @ w, s))


def _to_sphere(v: np.ndarray, p: float) -> np.ndarray:
    norm = lp_norm(v, p)
    if norm == 0.0:
        raise DegenerateDirectionError("direction vanished before normalisation")
    return v / norm


def _update(w_prev: np.ndarray, g: np.ndarray, p: float) -> np.ndarray:
    """Map the ascent direction g back onto the unit Lp sphere."""
    g = g / np.max(np.abs(g))  # scale-free; keeps large exponents finite
    if math.isinf(p):
        return np.sign(g)
    if p == 1.0:
        j = int(np.argmax(np.abs(g)))  # lowest index wins ties
        w = np.zeros_like(g)
        w[j] = np.sign(g[j])
        return w
    if p > 1.0:
        e = 1.0 / (p - 1.0)  # q - 1 with 1/p + 1/q = 1
        step = g if e == 1.0 else np.sign(g) * np.abs(g) ** e
        return _to_sphere(step, p)
    return _to_sphere(np.abs(w_prev) ** (2.0 - p) * g, p)


def _initial(Y: np.ndarray, rw: np.ndarray, cfg: SolverConfig, rng) -> np.ndarray:
    if cfg.init == "random":
        return _to_sphere(rng.standard_normal(Y.shape[1]), cfg.p)
    cov = Y.T @ (rw[:, None] * Y)
    return _to_sphere(sym_eig_topk(0.5 * (cov + cov.T), 1)[0].vector, cfg.p)


def _solve(Y: np.ndarray, rw: np.ndarray, cfg: SolverConfig, rng=None,
           callback: Callable | None = None) -> FirstVector:
    s, p = cfg.s, cfg.p
    w = _initial(Y, rw, cfg, rng)
    f = _objective(Y, rw, w, s)
    if callback is not None:
        callback(w, f)
    it = 0
    while it < cfg.max_iter:
        it += 1
        g = Y.T @ (rw * _ascent_terms(Y @ w, s))
        if not np.any(g):
            raise DegenerateDirectionError(
                "every sample is orthogonal to the current direction")
        w_new = _update(w, g, p)
        f_new = _objective(Y, rw, w_new, s)
        if p >= 1.0 and f_new < f - ASCENT_SLACK * abs(f):
            raise NumericFailureError(
                f"objective decreased from {f!r} to {f_new!r} at iteration {it}")
        if callback is not None:
            callback(w_new, f_new)
        delta = abs(f_new - f) / abs(f) if f != 0.0 else (0.0 if f_new == 0.0 else math.inf)
        w, f = w_new, f_new
        if delta <= cfg.tol:
            break
    return FirstVector(w, f, it)


def _stack_rows(Ys) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(Ys, np.ndarray) and Ys.ndim == 3:
        mats = list(Ys)
    else:
        mats = [np.atleast_2d(np.asarray(Y, dtype=np.float64)) for Y in Ys]
    if not mats:
        raise InvalidInputError("no samples given")
    d = mats[0].shape[1]
    if any(Y.ndim != 2 or Y.shape[1] != d for Y in mats):
        raise InvalidInputError("all samples must share the column count")
    Y = np.vstack(mats).astype(np.float64)
    if not np.all(np.isfinite(Y)):
        raise InvalidInputError("samples contain non-finite entries")
    return Y, np.array([Y.shape[0] for Y in mats])


def solve_first_vector(Ys, cfg: SolverConfig, weights=None,
                       callback: Callable | None = None) -> FirstVector:
    """Leading projection vector for a list of (r_i x d) samples.

    ``callback(w, f)`` is invoked with the initial iterate and after every
    update. Returns ``(w, objective, iterations)``.
    """
    Y, rows = _stack_rows(Ys)
    weights = np.ones(rows.size) if weights is None else np.asarray(weights, dtype=np.float64)
    if weights.shape != rows.shape or np.any(weights < 0):
        raise InvalidInputError("weights must be one nonnegative value per sample")
    rng = np.random.default_rng(cfg.seed) if cfg.init == "random" else None
    return _solve(Y, np.repeat(weights, rows), cfg, rng, callback)


def _complement(W: np.ndarray, mode: str) -> np.ndarray:
    d = W.shape[0]
    if mode == "orthonormal" and W.shape[1]:
        u, sv, _ = np.linalg.svd(W, full_matrices=False)
        u = u[:, sv > 1e-12 * sv[0]]
        return np.eye(d) - u @ u.T
    return np.eye(d) - W @ W.T


def deflate(samples, W, side: str = "right", mode: str = "verbatim") -> np.ndarray:
    """X_i (I - W W^T) on the right, X_i^T (I - W W^T) on the left."""
    X = as_stack(samples)
    if side == "left":
        X = np.swapaxes(X, 1, 2)
    elif side != "right":
        raise InvalidSpecError(f"side must be 'left' or 'right', got {side!r}")
    W = np.asarray(W, dtype=np.float64)
    if W.size == 0:
        return X.copy()
    if W.ndim == 1:
        W = W[:, None]
    if W.shape[0] != X.shape[2]:
        raise InvalidInputError(f"W has {W.shape[0]} rows, samples have {X.shape[2]} columns")
    return X @ _complement(W, mode)


def greedy_fit(X: np.ndarray, k: int, cfg: SolverConfig, weights=None,
               side: str = "right", callback: Callable | None = None) -> UnilateralBasis:
    """k vectors for pre-centred, pre-oriented samples X of shape (n, r, d)."""
    n, r, d = X.shape
    if not 1 <= k <= d:
        raise InvalidSpecError(f"k must be in [1, {d}] for the {side} side, got {k}")
    weights = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    rw = np.repeat(weights, r)
    flat = np.ascontiguousarray(X).reshape(n * r, d)
    rng = np.random.default_rng(cfg.seed) if cfg.init == "random" else None
    W = np.zeros((d, 0))
    objectives, iterations = [], []
    for _ in range(k):
        Y = flat if W.shape[1] == 0 else flat @ _complement(W, cfg.deflation)
        sol = _solve(Y, rw, cfg, rng, callback)
        W = np.column_stack([W, sol.w])
        objectives.append(sol.objective)
        iterations.append(sol.iterations)
    return UnilateralBasis(W, np.array(objectives), side, iterations)


def oriented(Xc: np.ndarray, side: str) -> np.ndarray:
    if side == "right":
        return Xc
    if side == "left":
        return np.ascontiguousarray(np.swapaxes(Xc, 1, 2))
    raise InvalidSpecError(f"side must be 'left' or 'right', got {side!r}")


def fit_unilateral(train, k: int, side: str, cfg: SolverConfig, weights=None) -> UnilateralBasis:
    """Greedy k-vector fit on one side of the mean-centred samples."""
    Xc, _ = center(as_stack(train))
    return greedy_fit(oriented(Xc, side), k, cfg, weights, side)


def fit_bilateral(train, k1: int, k2: int, cfg: SolverConfig,
                  weights=None) -> tuple[UnilateralBasis, UnilateralBasis]:
    """Independent left (h x k1) and right (w x k2) fits."""
    Xc, _ = center(as_stack(train))
    left = greedy_fit(oriented(Xc, "left"), k1, cfg, weights, "left")
    right = greedy_fit(oriented(Xc, "right"), k2, cfg, weights, "right")
    return left, right


def with_overrides(cfg: SolverConfig, **kw) -> SolverConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
