"""Experiment orchestration: accuracy sweeps and the two-class toy study.

A plan file is TOML with sections ``[dataset]``, ``[split]``,
``[[methods]]``, ``[sweep]`` and ``[output]``; see ``plans/`` for examples.
Relative paths resolve against the plan file's directory.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dataset import (LabeledDataset, SplitSpec, gen_gaussian_classes, load_dataset,
                      sample_mean, split)
from .errors import DegenerateDirectionError, InvalidSpecError, TwoDPCAError
from .lpsolver import SolverConfig
from .pca2d import fit_2dpca
from .r2dpca import RelaxConfig, fit_r2dpca
from .recognition import extract_features, features, nearest, projection_variance

log = logging.getLogger(__name__)

METHODS = ("2dpca", "2dpca-l1", "2dpcal1-s", "g2dpca", "r2dpca")
RESULT_FIELDS = ["method", "s", "p", "gamma", "k", "seed", "accuracy", "fit_seconds", "status"]
FIGURE_FIELDS = ["method", "k", "accuracy"]
TOY_FIELDS = ["seed", "variance_train_2dpca", "variance_train_r2dpca",
              "variance_test_2dpca", "variance_test_r2dpca",
              "variance_whole_2dpca", "variance_whole_r2dpca"]


@dataclass(frozen=True)
class MethodSpec:
    variant: str
    name: str | None = None
    s: float = 2.0
    p: float = 2.0
    gamma: float = 1.0
    rho: float | None = None
    weight_fn: str = "identity"
    eps: float = 0.0
    weighted: bool = True

    def __post_init__(self):
        if self.variant not in METHODS:
            raise InvalidSpecError(f"unknown method variant {self.variant!r}; "
                                   f"choose from {METHODS}")
        if self.name is None:
            object.__setattr__(self, "name", self.variant)

    def solver(self, **solver_kw) -> SolverConfig:
        if self.variant in ("g2dpca", "r2dpca"):
            return SolverConfig.preset("g2dpca", s=self.s, p=self.p, **solver_kw)
        return SolverConfig.preset(self.variant, rho=self.rho, **solver_kw)

    def effective(self) -> tuple[float, float, float]:
        """(s, p, gamma) actually used, after preset mapping."""
        if self.variant == "2dpca":
            return 2.0, 2.0, 1.0
        cfg = self.solver()
        return cfg.s, cfg.p, self.gamma if self.variant == "r2dpca" else 1.0


def fit_model(train: LabeledDataset, method: MethodSpec, k1: int, k2: int, **solver_kw):
    """Fit any supported method; the eigen route for 2dpca, Lp/Ls otherwise.

    Every Lp/Ls variant goes through the relaxed fit, with gamma = 1 for
    the unrelaxed ones, so ``g2dpca`` and ``r2dpca`` at gamma = 1 coincide.
    """
    if method.variant == "2dpca":
        return fit_2dpca(train, k1, k2)
    gamma = method.gamma if method.variant == "r2dpca" else 1.0
    cfg = RelaxConfig(gamma=gamma, k1=k1, k2=k2, solver=method.solver(**solver_kw),
                      weight_fn=method.weight_fn, eps=method.eps)
    return fit_r2dpca(train, cfg)


@dataclass
class ExperimentPlan:
    dataset: LabeledDataset | dict
    methods: list[MethodSpec]
    k_values: list[int]
    per_class_train: int | list[int]
    seeds: list[int] = field(default_factory=lambda: [0])
    solver: dict = field(default_factory=dict)
    results_path: Path | None = None
    figure_path: Path | None = None
    timing: bool = True
    base_dir: Path = Path(".")

    def __post_init__(self):
        if not self.methods:
            raise InvalidSpecError("plan has no methods")
        if not self.k_values or min(self.k_values) < 1:
            raise InvalidSpecError("k values must be positive")
        if not self.seeds:
            raise InvalidSpecError("plan needs at least one seed")

    def load_dataset(self) -> LabeledDataset:
        if isinstance(self.dataset, LabeledDataset):
            return self.dataset
        src = self.dataset
        path = self.base_dir / src["path"]
        labels = src.get("labels")
        return load_dataset(path, None if labels is None else self.base_dir / labels)


def _k_values(sweep: dict) -> list[int]:
    if "k" in sweep:
        ks = sweep["k"]
        return [int(ks)] if isinstance(ks, int) else [int(k) for k in ks]
    lo, hi = int(sweep.get("k_min", 1)), int(sweep.get("k_max", 1))
    return list(range(lo, hi + 1, int(sweep.get("k_step", 1))))


def parse_plan(text: str, base_dir=".") -> ExperimentPlan:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidSpecError(f"plan is not valid TOML: {exc}") from None
    try:
        data = doc["dataset"]
        if "path" not in data:
            raise InvalidSpecError("[dataset] needs 'path' (and 'labels' for IDX)")
        sp = doc.get("split", {})
        sweep = doc.get("sweep", {})
        out = doc.get("output", {})
        methods = [MethodSpec(**m) for m in doc.get("methods", [])]
        solver = {k: sweep[k] for k in ("tol", "max_iter", "init", "deflation") if k in sweep}
        base = Path(base_dir)
        seeds = sp.get("seeds", [sp.get("seed", 0)])
        return ExperimentPlan(
            dataset=dict(data), methods=methods, k_values=_k_values(sweep),
            per_class_train=sp["per_class_train"], seeds=[int(s) for s in seeds],
            solver=solver,
            results_path=base / out["results"] if "results" in out else None,
            figure_path=base / out["figure_data"] if "figure_data" in out else None,
            timing=bool(out.get("timing", True)), base_dir=base)
    except KeyError as exc:
        raise InvalidSpecError(f"plan is missing required key {exc}") from None
    except TypeError as exc:
        raise InvalidSpecError(f"bad key in plan: {exc}") from None


def load_plan(path) -> ExperimentPlan:
    path = Path(path)
    return parse_plan(path.read_text(), path.parent)


def _fmt(x) -> str:
    x = float(x)
    return "inf" if math.isinf(x) else repr(x)


def _ordered(base: dict, **extra) -> dict:
    row = {**base, **extra}
    return {f: row[f] for f in RESULT_FIELDS}


def _run_point(train, test, method: MethodSpec, seed: int, ks: Sequence[int],
               solver_kw: dict, timing: bool) -> list[dict]:
    s, p, gamma = method.effective()
    base = {"method": method.name, "s": _fmt(s), "p": _fmt(p), "gamma": _fmt(gamma),
            "seed": str(seed)}
    kmax = max(ks)
    try:
        if kmax > min(train.h, train.w):
            raise InvalidSpecError(f"k={kmax} exceeds image dims {train.h}x{train.w}")
        kw = dict(solver_kw)
        if kw.get("init") == "random":
            kw["seed"] = seed
        t0 = time.perf_counter()
        model = fit_model(train, method, kmax, kmax, **kw)
        elapsed = time.perf_counter() - t0
    except TwoDPCAError as exc:
        log.warning("%s seed=%s failed: %s", method.name, seed, exc)
        return [_ordered(base, k=str(k), accuracy="", fit_seconds="",
                         status=f"error:{type(exc).__name__}") for k in ks]
    rows = []
    for k in ks:
        # greedy and eigen bases are nested, so one fit at kmax serves every k
        sub = model.truncate(k, k)
        gallery = extract_features(sub, train, weighted=method.weighted)
        match = nearest(gallery, features(sub, test))
        acc = float(np.mean(gallery.labels[match.index] == test.labels))
        rows.append(_ordered(base, k=str(k), accuracy=f"{acc:.6f}",
                             fit_seconds=f"{elapsed:.4f}" if timing else "", status="ok"))
    return rows


def run_accuracy_sweep(plan: ExperimentPlan, jobs: int = 1) -> list[dict]:
    """One row per (method, seed, k), in plan order."""
    ds = plan.load_dataset()
    ks = sorted(set(plan.k_values))
    splits = {seed: split(ds, SplitSpec(plan.per_class_train, seed)) for seed in plan.seeds}
    tasks = [(splits[seed][0], splits[seed][1], method, seed, ks, plan.solver, plan.timing)
             for method in plan.methods for seed in plan.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_point, *zip(*tasks)))
    else:
        chunks = [_run_point(*t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def figure_rows(rows: list[dict]) -> list[dict]:
    """Mean accuracy over seeds per (method, k), long format."""
    acc: dict[tuple[str, int], list[float]] = {}
    for r in rows:
        if r["status"] == "ok":
            acc.setdefault((r["method"], int(r["k"])), []).append(float(r["accuracy"]))
    return [{"method": m, "k": str(k), "accuracy": f"{np.mean(v):.6f}"}
            for (m, k), v in acc.items()]


def to_csv(rows: list[dict], fields: list[str]) -> str:
    buf = io.StringIO()
    out = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    out.writeheader()
    out.writerows(rows)
    return buf.getvalue()


def write_csv(path, rows: list[dict], fields: list[str]) -> None:
    Path(path).write_text(to_csv(rows, fields))


# -- two-class toy ---------------------------------------------------------------

TOY_DEFAULTS = dict(mean_1=(0.0, 0.0), mean_2=(3.0, 1.0), cov_params=((1.5, 0.5), (0.5, 1.0)))


def _direction_model(train: LabeledDataset, gamma: float):
    cfg = RelaxConfig(gamma=gamma, k1=1, k2=1, solver=SolverConfig(s=2.0, p=2.0))
    try:
        return fit_r2dpca(train, cfg)
    except DegenerateDirectionError:
        # zero training scatter: every direction is equally (un)informative
        return None


def toy_variances(train: LabeledDataset, test: LabeledDataset, whole: LabeledDataset,
                  gamma: float = 0.5) -> dict:
    """Projection variances for 2DPCA (gamma = 1) and the relaxed fit."""
    out = {}
    for tag, g in (("2dpca", 1.0), ("r2dpca", gamma)):
        model = _direction_model(train, g)
        for part, data in (("train", train), ("test", test), ("whole", whole)):
            key = f"variance_{part}_{tag}"
            if model is None:
                e1 = np.zeros(data.w)
                e1[0] = 1.0
                proj = (data.images - sample_mean(data.images)) @ e1
                out[key] = float(np.sum(proj * proj) / (data.n - 1))
            else:
                out[key] = projection_variance(model, data, "right")
    return {f: out[f] for f in TOY_FIELDS[1:]}


def run_toy_generalization(n: int, seeds: Sequence[int], gamma: float = 0.5,
                           **toy_params) -> list[dict]:
    """Per seed: 4n points in two classes, n per class for training.

    Returns one row per seed plus a final ``seed="mean"`` row.
    """
    if n < 2 or not seeds:
        raise InvalidSpecError("need n >= 2 and at least one seed")
    params = {**TOY_DEFAULTS, **toy_params}
    rows = []
    for seed in seeds:
        whole = gen_gaussian_classes(2 * n, seed=seed, **params)
        train, test = split(whole, SplitSpec(n, seed))
        rows.append({"seed": str(seed), **toy_variances(train, test, whole, gamma)})
    mean = {f: float(np.mean([r[f] for r in rows])) for f in TOY_FIELDS[1:]}
    rows.append({"seed": "mean", **mean})
    return rows


def format_toy(rows: list[dict]) -> list[dict]:
    return [{k: (v if k == "seed" else repr(float(v))) for k, v in r.items()} for r in rows]
