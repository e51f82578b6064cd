"""Flat binary model container (magic ``B2DP``).

Layout, all little-endian::

    header  "B2DP" | u8 version | u8 kind | u32 h, w, k1, k2, m
    config  u8 variant | f64 s, p, gamma, tol | u32 max_iter | u8 init |
            u64 seed | f64 rho, c | u8 deflation | u8 weight_fn | f64 eps
    payload f64 row-major: mean (h*w), U (h*k1), V (w*k2),
            left values (k1), right values (k2), omega (m), D (k2)

kind 0 is eigen-based 2DPCA (values are eigenvalues, config block zeroed);
kind 1 is any Lp/Ls fit, relaxed or not (values are objectives f_k).
"""
from __future__ import annotations

import math
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidSpecError
from .lpsolver import DEFLATIONS, INITS, VARIANTS, SolverConfig
from .pca2d import BilateralProjector
from .r2dpca import R2DPCAModel, RelaxConfig

MAGIC = b"B2DP"
VERSION = 1
KIND_EIG, KIND_LP = 0, 1
_HEADER = struct.Struct("<4sBB5I")
_CONFIG = struct.Struct("<B4dIBQ2dBBd")
_WEIGHT_TAGS = ("identity", "shifted", "custom")


def _custom_unavailable(_lam):
    raise InvalidSpecError("model was fitted with a custom weight function that "
                           "cannot be restored from disk")


def _opt(x):
    return math.nan if x is None else float(x)


def encode(model) -> bytes:
    if isinstance(model, BilateralProjector):
        kind, m = KIND_EIG, 0
        left, right, omega, D = model.eigvals_left, model.eigvals_right, np.empty(0), model.D
        config = _CONFIG.pack(0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, math.nan, math.nan, 0, 0, 0.0)
    elif isinstance(model, R2DPCAModel):
        kind, m = KIND_LP, model.omega.size
        left, right, omega, D = model.left_objectives, model.D, model.omega, model.D
        cfg, sc = model.config, model.config.solver
        wtag = 2 if callable(cfg.weight_fn) else _WEIGHT_TAGS.index(cfg.weight_fn)
        config = _CONFIG.pack(VARIANTS.index(sc.variant), sc.s, sc.p, cfg.gamma, sc.tol,
                              sc.max_iter, INITS.index(sc.init), sc.seed, _opt(sc.rho),
                              _opt(sc.c), DEFLATIONS.index(sc.deflation), wtag, cfg.eps)
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    h, w = model.mean.shape
    header = _HEADER.pack(MAGIC, VERSION, kind, h, w, model.U.shape[1], model.V.shape[1], m)
    payload = [model.mean, model.U, model.V, left, right, omega, D]
    return header + config + b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes() for a in payload)


def decode(blob: bytes, path="<bytes>"):
    if len(blob) < _HEADER.size + _CONFIG.size:
        raise FormatError(path, "truncated model header", offset=len(blob))
    magic, version, kind, h, w, k1, k2, m = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(path, f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise FormatError(path, f"unsupported container version {version}", offset=4)
    if kind not in (KIND_EIG, KIND_LP):
        raise FormatError(path, f"unknown model kind {kind}", offset=5)
    (vtag, s, p, gamma, tol, max_iter, itag, seed, rho, c, dtag, wtag,
     eps) = _CONFIG.unpack_from(blob, _HEADER.size)
    sizes = [h * w, h * k1, w * k2, k1, k2, m, k2]
    start = _HEADER.size + _CONFIG.size
    if len(blob) != start + 8 * sum(sizes):
        raise FormatError(path, f"payload is {len(blob) - start} bytes, expected "
                          f"{8 * sum(sizes)}", offset=start)
    flat = np.frombuffer(blob, dtype="<f8", offset=start).astype(np.float64)
    parts = np.split(flat, np.cumsum(sizes)[:-1])
    mean, U, V = parts[0].reshape(h, w), parts[1].reshape(h, k1), parts[2].reshape(w, k2)
    left, right, omega, D = parts[3], parts[4], parts[5], parts[6]
    if kind == KIND_EIG:
        return BilateralProjector(U, V, left, right, mean)
    try:
        solver = SolverConfig(s=s, p=p, tol=tol, max_iter=max_iter, init=INITS[itag],
                              seed=seed, variant=VARIANTS[vtag],
                              rho=None if math.isnan(rho) else rho,
                              c=None if math.isnan(c) else c, deflation=DEFLATIONS[dtag])
        weight_fn = _custom_unavailable if wtag == 2 else _WEIGHT_TAGS[wtag]
        cfg = RelaxConfig(gamma=gamma, k1=k1, k2=k2, solver=solver, weight_fn=weight_fn,
                          eps=eps)
    except (IndexError, InvalidSpecError) as exc:
        raise FormatError(path, f"invalid config block ({exc})", offset=_HEADER.size) from None
    return R2DPCAModel(U, V, D, left, omega, mean, cfg)


def save_model(model, path) -> None:
    """Write atomically: the target either appears complete or not at all."""
    path = Path(path)
    blob = encode(model)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        os.chmod(tmp, 0o644)
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path):
    with open(path, "rb") as fh:
        return decode(fh.read(), path)
