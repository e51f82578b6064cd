"""Command-line entry point: ``twodpca <subcommand> [options]``.

Summary lines go to stdout as ``key=value``; logging goes to stderr.
Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import LabeledDataset, SplitSpec, load_dataset, split
from .errors import FormatError, InvalidInputError, InvalidSpecError, NumericFailureError
from .formats import read_pgm, write_pgm
from .harness import (FIGURE_FIELDS, METHODS, RESULT_FIELDS, TOY_FIELDS, MethodSpec,
                      figure_rows, fit_model, format_toy, load_plan, parse_plan,
                      run_accuracy_sweep, run_toy_generalization, to_csv, write_csv)
from .lpsolver import DEFLATIONS, INITS
from .modelio import load_model, save_model
from .pca2d import BilateralProjector
from .r2dpca import WEIGHT_FNS, weighting_vector
from .recognition import (NORMS, extract_features, features, nearest, reconstruct,
                          reconstruction_ratio)

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4
log = logging.getLogger("twodpca")


def _floats(xs) -> str:
    return ",".join(repr(float(x)) for x in xs)


def _emit(key: str, value) -> None:
    print(f"{key}={value}")


# -- settings: plan file first, flags on top ---------------------------------------

def _plan_settings(path) -> dict:
    if path is None:
        return {}
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidSpecError(f"cannot read config {path}: {exc}") from None
    plan = parse_plan(text, path.parent)
    method = plan.methods[0]
    out = {"data": plan.base_dir / plan.dataset["path"],
           "labels": (plan.base_dir / plan.dataset["labels"]
                      if "labels" in plan.dataset else None),
           "split_train": plan.per_class_train, "seed": plan.seeds[0],
           "k1": max(plan.k_values), "k2": max(plan.k_values),
           "variant": method.variant, "s": method.s, "p": method.p, "gamma": method.gamma,
           "rho": method.rho, "weight_fn": method.weight_fn, "eps": method.eps}
    out.update(plan.solver)
    if "max_iter" in out:
        out["max_iter"] = int(out["max_iter"])
    return out


_DEFAULTS = dict(data=None, labels=None, split_train=None, seed=0, k1=None, k2=None,
                 variant="r2dpca", s=2.0, p=2.0, gamma=0.5, rho=None,
                 weight_fn="identity", eps=0.0, tol=1e-6, max_iter=200, init="spectral",
                 deflation="verbatim")


def _settings(args) -> dict:
    merged = dict(_DEFAULTS)
    merged.update(_plan_settings(getattr(args, "config", None)))
    for key in _DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    if getattr(args, "k", None) is not None:
        merged["k1"] = args.k if args.k1 is None else args.k1
        merged["k2"] = args.k if args.k2 is None else args.k2
    return merged


def _dataset(path, labels) -> LabeledDataset:
    if path is None:
        raise InvalidSpecError("no dataset given (use --data or a config file)")
    return load_dataset(path, labels)


def _train_part(cfg: dict) -> tuple[LabeledDataset, LabeledDataset | None]:
    ds = _dataset(cfg["data"], cfg["labels"])
    if cfg["split_train"] is None:
        return ds, None
    return split(ds, SplitSpec(cfg["split_train"], cfg["seed"]))


# -- subcommands ---------------------------------------------------------------------

def cmd_fit(args) -> int:
    cfg = _settings(args)
    if cfg["k1"] is None:
        raise InvalidSpecError("number of projection vectors not set (use --k)")
    train, _ = _train_part(cfg)
    method = MethodSpec(cfg["variant"], s=cfg["s"], p=cfg["p"], gamma=cfg["gamma"],
                        rho=cfg["rho"], weight_fn=cfg["weight_fn"], eps=cfg["eps"])
    solver_kw = {k: cfg[k] for k in ("tol", "max_iter", "init", "deflation", "seed")}
    model = fit_model(train, method, cfg["k1"], cfg["k2"], **solver_kw)
    save_model(model, args.out)
    _emit("variant", method.variant)
    _emit("n_train", train.n)
    if isinstance(model, BilateralProjector):
        _emit("eigenvalues_left", _floats(model.eigvals_left))
        _emit("eigenvalues_right", _floats(model.eigvals_right))
    else:
        _emit("omega", _floats(model.omega))
        _emit("objectives_left", _floats(model.left_objectives))
        _emit("objectives_right", _floats(model.D))
        _emit("iterations_left", ",".join(map(str, model.iterations[0])))
        _emit("iterations_right", ",".join(map(str, model.iterations[1])))
    _emit("model", args.out)
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    if args.gallery is not None:
        if args.probes is None:
            raise InvalidSpecError("--gallery needs --probes")
        gallery_ds = _dataset(args.gallery, args.gallery_labels)
        probe_ds = _dataset(args.probes, args.probe_labels)
    else:
        cfg = _settings(args)
        if cfg["split_train"] is None:
            raise InvalidSpecError("give --gallery/--probes or --data with --split-train")
        gallery_ds, probe_ds = _train_part(cfg)
    gallery = extract_features(model, gallery_ds, weighted=not args.unweighted)
    match = nearest(gallery, features(model, probe_ds), args.norm)
    predicted = [gallery_ds.classes[gallery.labels[i]] for i in match.index]
    truth = [probe_ds.classes[c] for c in probe_ds.labels]
    rows = [{"probe_index": str(i), "predicted_label": pr, "true_label": tr,
             "distance": repr(float(d))}
            for i, (pr, tr, d) in enumerate(zip(predicted, truth, match.distance))]
    write_csv(args.out, rows, ["probe_index", "predicted_label", "true_label", "distance"])
    acc = float(np.mean([pr == tr for pr, tr in zip(predicted, truth)]))
    _emit("predictions", args.out)
    _emit("accuracy", f"{acc:.6f}")
    return 0


def _images_for_reconstruction(path, labels):
    path = Path(path)
    if path.is_file() and path.suffix.lower() in (".pgm", ".pnm"):
        pixels, maxval = read_pgm(path)
        return pixels[None] / maxval, [path.name]
    ds = _dataset(path, labels)
    names = ds.names or [f"image_{i:05d}" for i in range(ds.n)]
    return ds.images, list(names)


def cmd_reconstruct(args) -> int:
    model = load_model(args.model)
    k1 = model.U.shape[1] if args.k1 is None else args.k1
    k2 = model.V.shape[1] if args.k2 is None else args.k2
    if not (1 <= k1 <= model.U.shape[1] and 1 <= k2 <= model.V.shape[1]):
        raise InvalidSpecError(f"k1, k2 must lie in [1, {model.U.shape[1]}] x "
                               f"[1, {model.V.shape[1]}], got {k1}, {k2}")
    sub = model.truncate(k1, k2)
    images, names = _images_for_reconstruction(args.images, args.labels)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for X, name, F in zip(images, names, features(sub, images)):
        X_rec = reconstruct(sub, F)
        stem = Path(name.replace("/", "__")).stem
        write_pgm(out_dir / f"{stem}_k{k1}x{k2}.pgm", X_rec)
        rows.append({"file": name, "k1": str(k1), "k2": str(k2),
                     "ratio": repr(reconstruction_ratio(X, X_rec, args.norm))})
    csv_path = Path(args.csv) if args.csv else out_dir / "ratios.csv"
    write_csv(csv_path, rows, ["file", "k1", "k2", "ratio"])
    _emit("images", len(rows))
    _emit("mean_ratio", repr(float(np.mean([float(r["ratio"]) for r in rows]))))
    _emit("ratios", csv_path)
    return 0


def cmd_sweep(args) -> int:
    plan = load_plan(args.config)
    if args.out is not None:
        plan.results_path = Path(args.out)
    if args.figure_data is not None:
        plan.figure_path = Path(args.figure_data)
    if args.no_timing:
        plan.timing = False
    jobs = 1 if args.serial else args.jobs
    rows = run_accuracy_sweep(plan, jobs=jobs)
    text = to_csv(rows, RESULT_FIELDS)
    if plan.results_path is None:
        sys.stdout.write(text)
    else:
        plan.results_path.write_text(text)
        _emit("results", plan.results_path)
    if plan.figure_path is not None:
        write_csv(plan.figure_path, figure_rows(rows), FIGURE_FIELDS)
        _emit("figure_data", plan.figure_path)
    failed = sum(r["status"] != "ok" for r in rows)
    if plan.results_path is not None:
        _emit("rows", len(rows))
        _emit("failed", failed)
    return 0


def cmd_toy(args) -> int:
    seeds = list(range(args.first_seed, args.first_seed + args.seeds))
    rows = format_toy(run_toy_generalization(args.n, seeds, gamma=args.gamma))
    if args.out:
        write_csv(args.out, rows, TOY_FIELDS)
        _emit("results", args.out)
    else:
        sys.stdout.write(to_csv(rows, TOY_FIELDS))
        return 0
    mean = rows[-1]
    for f in TOY_FIELDS[1:]:
        _emit(f"mean_{f}", mean[f])
    return 0


def cmd_weights(args) -> int:
    cfg = _settings(args)
    train, _ = _train_part(cfg)
    omega = weighting_vector(train, cfg["weight_fn"], cfg["eps"])
    _emit("classes", ",".join(train.classes))
    _emit("omega", _floats(omega))
    return 0


# -- parser --------------------------------------------------------------------------

def _data_opts(p, config=True):
    if config:
        p.add_argument("--config", help="TOML plan file; flags override its values")
    p.add_argument("--data", help="class directory of PGMs, CSV snapshot, or IDX images")
    p.add_argument("--labels", help="IDX labels file (IDX images only)")
    p.add_argument("--split-train", type=int, help="training samples per class")
    p.add_argument("--seed", type=int, help="split and random-init seed")


def _fit_opts(p):
    p.add_argument("--variant", choices=METHODS)
    p.add_argument("--s", type=float)
    p.add_argument("--p", type=float, help="constraint norm; 'inf' allowed")
    p.add_argument("--gamma", type=float)
    p.add_argument("--rho", type=float, help="2dpcal1-s: p = 2 + rho")
    p.add_argument("--k", type=int, help="sets both k1 and k2")
    p.add_argument("--k1", type=int)
    p.add_argument("--k2", type=int)
    p.add_argument("--weight-fn", choices=WEIGHT_FNS)
    p.add_argument("--eps", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--init", choices=INITS)
    p.add_argument("--deflation", choices=DEFLATIONS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twodpca", description="2DPCA family: fit, evaluate, reconstruct, sweep.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--serial", action="store_true",
                        help="single process (the default everywhere except sweep --jobs)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model and write it to disk")
    _data_opts(p)
    _fit_opts(p)
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="nearest-neighbour classification with a fitted model")
    p.add_argument("--model", required=True)
    _data_opts(p)
    p.add_argument("--gallery", help="gallery dataset (instead of --data/--split-train)")
    p.add_argument("--gallery-labels")
    p.add_argument("--probes", help="probe dataset")
    p.add_argument("--probe-labels")
    p.add_argument("--norm", choices=NORMS, default="frobenius")
    p.add_argument("--unweighted", action="store_true", help="ignore the objective weights D")
    p.add_argument("--out", default="predictions.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("reconstruct", help="reconstruct images and report the ratio")
    p.add_argument("--model", required=True)
    p.add_argument("--images", required=True, help="PGM file or any dataset path")
    p.add_argument("--labels")
    p.add_argument("--k1", type=int)
    p.add_argument("--k2", type=int)
    p.add_argument("--norm", choices=NORMS, default="frobenius")
    p.add_argument("--out-dir", default="reconstructions")
    p.add_argument("--csv", help="ratio table path (default OUT_DIR/ratios.csv)")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("sweep", help="run an accuracy sweep from a plan file")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="results CSV (overrides [output] results)")
    p.add_argument("--figure-data", help="mean accuracy per (method, k) CSV")
    p.add_argument("--no-timing", action="store_true",
                   help="leave fit_seconds empty so output is byte-reproducible")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("toy", help="two-Gaussian generalisation study")
    p.add_argument("--n", type=int, default=10, help="training points per class")
    p.add_argument("--seeds", type=int, default=50, help="number of seeds")
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("weights", help="print the class weighting vector")
    _data_opts(p)
    p.add_argument("--weight-fn", choices=WEIGHT_FNS)
    p.add_argument("--eps", type=float)
    p.set_defaults(func=cmd_weights)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (FormatError, InvalidInputError, FileNotFoundError, IsADirectoryError) as exc:
        code, exc_ = EXIT_DATA, exc
    except InvalidSpecError as exc:
        code, exc_ = EXIT_CONFIG, exc
    except (NumericFailureError, ZeroDivisionError) as exc:
        code, exc_ = EXIT_NUMERIC, exc
    except OSError as exc:
        code, exc_ = EXIT_DATA, exc
    print(f"twodpca {args.command}: {exc_}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
