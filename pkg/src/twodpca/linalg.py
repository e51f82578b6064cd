"""Dense linear-algebra primitives.

Matrices are plain float64 ``numpy`` arrays. The eigensolver is a cyclic
Jacobi method so that bases are reproducible bit-for-bit on one machine and
carry a fixed sign convention.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError, InvalidSpecError, NumericFailureError

P_FLOOR = 1e-3
MAX_SWEEPS = 100
_EPS = np.finfo(np.float64).eps


class EigPair(NamedTuple):
    value: float
    vector: np.ndarray


def as_finite(a, name="array", ndim=None) -> np.ndarray:
    """Return ``a`` as a float64 array, rejecting NaN/Inf and wrong rank."""
    arr = np.asarray(a, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise InvalidInputError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def check_p(p: float) -> float:
    p = float(p)
    if math.isnan(p) or p < P_FLOOR:
        raise InvalidSpecError(f"p must be >= {P_FLOOR} or inf, got {p}")
    return p


def lp_norm(v, p: float) -> float:
    """(sum |v_i|^p)^(1/p); max |v_i| for ``p = inf``."""
    v = as_finite(v, "v").ravel()
    if v.size == 0:
        raise InvalidInputError("lp_norm of an empty vector")
    p = check_p(p)
    a = np.abs(v)
    if math.isinf(p):
        return float(a.max())
    if p == 2.0:
        return float(np.sqrt(np.dot(a, a)))
    if p == 1.0:
        return float(a.sum())
    # scale by the max entry so large p does not overflow
    top = a.max()
    if top == 0.0:
        return 0.0
    return float(top * np.sum((a / top) ** p) ** (1.0 / p))


def signed_power(v, e: float) -> np.ndarray:
    """Elementwise sign(v) * |v|^e with sign(0) = 0 (so 0^0 is taken as 0)."""
    v = as_finite(v, "v")
    if e < 0:
        raise InvalidSpecError(f"exponent must be nonnegative, got {e}")
    if e == 1.0:
        return v.copy()
    if e == 0.0:
        return np.sign(v)
    return np.sign(v) * np.abs(v) ** e


def _sign_fix(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude entry positive; argmax picks the lowest index on ties
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def check_symmetric(A, rtol: float = 1e-10) -> np.ndarray:
    A = as_finite(A, "A", ndim=2)
    if A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"matrix must be square, got {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if A.size and np.max(np.abs(A - A.T)) > rtol * scale:
        raise InvalidInputError("matrix is not symmetric")
    return 0.5 * (A + A.T)


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings covering every (p, q) once per sweep, n/2 disjoint per round."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps), np.array(qs)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(A, max_sweeps: int = MAX_SWEEPS):
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Each sweep visits every off-diagonal pair once, in round-robin order so
    that the n/2 rotations of a round act on disjoint index pairs and can be
    applied together.

    Returns
    -------
    values : (n,) array, sorted descending
    vectors : (n, n) array, unit columns, largest-magnitude entry positive
    """
    a = check_symmetric(A)
    n = a.shape[0]
    v = np.eye(n)
    norm = float(np.linalg.norm(a))
    if n > 1 and norm > 0.0:
        target = n * _EPS * norm
        rounds = _round_robin(n)
        prev_off = math.inf
        for sweep in range(max_sweeps + 1):
            off = float(np.linalg.norm(a - np.diag(np.diag(a))))
            if off <= target or (off >= prev_off and off <= 1e-12 * norm):
                break
            if sweep == max_sweeps:
                raise NumericFailureError(
                    f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")
            prev_off = off
            for p, q in rounds:
                apq = a[p, q]
                active = apq != 0.0
                if not active.any():
                    continue
                p, q, apq = p[active], q[active], apq[active]
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                app, aqq = a[p, p], a[q, q]
                cp, cq = a[:, p], a[:, q]
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp, rq = a[p, :], a[q, :]
                a[p, :] = c[:, None] * rp - s[:, None] * rq
                a[q, :] = s[:, None] * rp + c[:, None] * rq
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp, vq = v[:, p], v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
            a = 0.5 * (a + a.T)
    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return values[order], _sign_fix(v[:, order])


def sym_eig_topk(A, k: int) -> list[EigPair]:
    """The ``k`` largest eigenpairs of a symmetric matrix, descending."""
    A = as_finite(A, "A", ndim=2)
    if not 1 <= k <= A.shape[0]:
        raise InvalidSpecError(f"k must be in [1, {A.shape[0]}], got {k}")
    values, vectors = jacobi_eigh(A)
    return [EigPair(float(values[i]), vectors[:, i].copy()) for i in range(k)]


def spectral_norm(A, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value via power iteration on the Gram matrix."""
    A = as_finite(A, "A", ndim=2)
    gram = A.T @ A if A.shape[0] >= A.shape[1] else A @ A.T
    if not np.any(gram):
        return 0.0
    # deterministic start: the heaviest column of the Gram matrix
    x = gram[:, int(np.argmax(np.sum(gram * gram, axis=0)))].copy()
    x /= np.linalg.norm(x)
    lam = float(x @ gram @ x)
    for _ in range(max_iter):
        y = gram @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            break
        x = y / ny
        new = float(x @ gram @ x)
        if abs(new - lam) <= tol * abs(new):
            lam = new
            break
        lam = new
    return math.sqrt(max(lam, 0.0))
