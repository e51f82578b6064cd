"""Labeled matrix-sample datasets: loading, splitting, centering, toy data."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from . import formats
from .errors import FormatError, InvalidInputError, InvalidSpecError

MASK64 = (1 << 64) - 1


class Sample(NamedTuple):
    image: np.ndarray
    label: int


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Matrix samples grouped contiguously by class.

    ``images`` has shape (n, h, w); ``labels`` holds class indices into
    ``classes`` and is non-decreasing, so class j occupies one block.
    """

    images: np.ndarray
    labels: np.ndarray
    classes: tuple[str, ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        images = np.asarray(self.images, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if images.ndim != 3:
            raise InvalidInputError(f"images must be (n, h, w), got {images.shape}")
        if labels.shape != (images.shape[0],):
            raise InvalidInputError("one label per image required")
        if images.shape[0] == 0:
            raise InvalidInputError("dataset is empty")
        if not np.all(np.isfinite(images)):
            raise InvalidInputError("images contain non-finite pixels")
        if np.any(np.diff(labels) < 0):
            raise InvalidInputError("labels must be grouped contiguously by class")
        counts = np.bincount(labels, minlength=len(self.classes))
        if labels.min() < 0 or counts.size != len(self.classes) or np.any(counts == 0):
            raise InvalidInputError("every class must be nonempty and labels < m")
        if self.names is not None and len(self.names) != images.shape[0]:
            raise InvalidInputError("one name per image required")
        images.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "classes", tuple(str(c) for c in self.classes))

    @classmethod
    def from_unsorted(cls, images, labels, classes=None, names=None) -> "LabeledDataset":
        """Regroup by class, keeping the original order within each class."""
        labels = np.asarray(labels)
        if classes is None:
            classes = [str(c) for c in np.unique(labels)]
            lookup = {c: i for i, c in enumerate(classes)}
            labels = np.array([lookup[str(x)] for x in labels], dtype=np.int64)
        order = np.argsort(labels, kind="stable")
        images = np.asarray(images)[order]
        names = None if names is None else tuple(names[i] for i in order)
        return cls(images, labels[order], tuple(classes), names)

    @property
    def n(self) -> int:
        return self.images.shape[0]

    @property
    def h(self) -> int:
        return self.images.shape[1]

    @property
    def w(self) -> int:
        return self.images.shape[2]

    @property
    def m(self) -> int:
        return len(self.classes)

    @property
    def class_sizes(self) -> list[int]:
        return np.bincount(self.labels, minlength=self.m).tolist()

    def class_slices(self) -> list[slice]:
        edges = np.concatenate([[0], np.cumsum(self.class_sizes)])
        return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]

    def subset(self, indices) -> "LabeledDataset":
        idx = np.sort(np.asarray(indices, dtype=np.int64))
        names = None if self.names is None else tuple(self.names[i] for i in idx)
        labels = self.labels[idx]
        present = np.unique(labels)
        remap = np.full(self.m, -1)
        remap[present] = np.arange(present.size)
        return LabeledDataset(self.images[idx], remap[labels],
                              tuple(self.classes[j] for j in present), names)

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[Sample]:
        for img, lab in zip(self.images, self.labels):
            yield Sample(img, int(lab))

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (self.classes == other.classes
                and np.array_equal(self.labels, other.labels)
                and self.images.shape == other.images.shape
                and np.array_equal(self.images, other.images))


def as_stack(data) -> np.ndarray:
    """(n, h, w) float array from a dataset or array-like."""
    if isinstance(data, LabeledDataset):
        return data.images
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[0] == 0:
        raise InvalidInputError(f"expected a nonempty (n, h, w) stack, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("samples contain non-finite entries")
    return arr


# -- loaders -------------------------------------------------------------------

def load_idx(images_path, labels_path) -> LabeledDataset:
    """MNIST-style IDX pair; pixels scaled by 1/255 and regrouped by digit."""
    raw = formats.read_idx_images(images_path)
    labels = formats.read_idx_labels(labels_path)
    if raw.shape[0] != labels.size:
        raise FormatError(labels_path, f"{labels.size} labels for {raw.shape[0]} images",
                          offset=4)
    if raw.shape[0] == 0:
        raise FormatError(images_path, "no images in file", offset=4)
    present = np.unique(labels)
    remap = np.zeros(256, dtype=np.int64)
    remap[present] = np.arange(present.size)
    return LabeledDataset.from_unsorted(raw / 255.0, remap[labels],
                                        classes=[str(c) for c in present])


def load_image_dir(root) -> LabeledDataset:
    """One subdirectory per class, PGM files inside; both sorted by name."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {root}")
    images, labels, names, classes = [], [], [], []
    shape = None
    for class_dir in formats.list_sorted(root):
        if not class_dir.is_dir():
            continue
        files = [f for f in formats.list_sorted(class_dir) if f.is_file()]
        if not files:
            continue
        classes.append(class_dir.name)
        for f in files:
            pixels, maxval = formats.read_pgm(f)
            if shape is None:
                shape = pixels.shape
            elif pixels.shape != shape:
                raise FormatError(f, f"image is {pixels.shape[0]}x{pixels.shape[1]}, "
                                  f"dataset is {shape[0]}x{shape[1]}")
            images.append(pixels / maxval)
            labels.append(len(classes) - 1)
            names.append(f"{class_dir.name}/{f.name}")
    if not images:
        raise FormatError(root, "no class subdirectories with images")
    return LabeledDataset(np.stack(images), np.array(labels), tuple(classes), tuple(names))


def load_csv(path) -> LabeledDataset:
    images, names = formats.read_snapshot(path)
    classes = list(dict.fromkeys(names))
    lookup = {c: i for i, c in enumerate(classes)}
    return LabeledDataset.from_unsorted(images, [lookup[c] for c in names], classes)


def save_csv(ds: LabeledDataset, path) -> None:
    formats.write_snapshot(path, ds.images, ds.labels, ds.classes)


def load_dataset(path, labels_path=None) -> LabeledDataset:
    """Dispatch on what ``path`` is: class directory, CSV snapshot, or IDX pair."""
    path = Path(path)
    if labels_path is not None:
        return load_idx(path, labels_path)
    if path.is_dir():
        return load_image_dir(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset not found: {path}")
    if path.suffix.lower() == ".csv":
        return load_csv(path)
    raise FormatError(path, "cannot infer dataset format; IDX images need a labels file")


# -- splitting -------------------------------------------------------------------

class SplitMix64:
    """Vigna's splitmix64 generator."""

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection, no modulo bias."""
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            r = self.next()
            if r < limit:
                return r % bound

    def shuffle(self, items: list) -> list:
        """Fisher-Yates, in place, from the last position down."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items


@dataclass(frozen=True)
class SplitSpec:
    per_class_train: int | Sequence[int]
    seed: int = 0

    def counts(self, m: int) -> list[int]:
        if isinstance(self.per_class_train, (int, np.integer)):
            return [int(self.per_class_train)] * m
        counts = [int(c) for c in self.per_class_train]
        if len(counts) != m:
            raise InvalidSpecError(f"per_class_train lists {len(counts)} classes, dataset has {m}")
        return counts


def split_indices(ds: LabeledDataset, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    counts = spec.counts(ds.m)
    rng = SplitMix64(spec.seed)
    train, test = [], []
    for j, (sl, k) in enumerate(zip(ds.class_slices(), counts)):
        size = sl.stop - sl.start
        if not 1 <= k < size:
            raise InvalidSpecError(
                f"class {ds.classes[j]!r} has {size} samples; per_class_train={k} "
                f"must be in [1, {size - 1}]")
        order = rng.shuffle(list(range(sl.start, sl.stop)))
        train.extend(order[:k])
        test.extend(order[k:])
    return np.sort(np.array(train)), np.sort(np.array(test))


def split(ds: LabeledDataset, spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Per-class train/test partition, reproducible from ``spec.seed``."""
    train, test = split_indices(ds, spec)
    return ds.subset(train), ds.subset(test)


# -- centering and toy data --------------------------------------------------------

def center(data) -> tuple[np.ndarray, np.ndarray]:
    """Return (samples minus their mean, mean)."""
    X = as_stack(data)
    mean = sample_mean(X)
    return X - mean, mean


def sample_mean(X: np.ndarray) -> np.ndarray:
    """Mean taken about the first sample: exact when all samples coincide."""
    return X[0] + (X - X[0]).mean(axis=0)


def gen_gaussian_classes(n_per_class: int, mean_1=(0.0, 0.0), mean_2=(3.0, 1.0),
                         cov_params=((1.5, 0.5), (0.5, 1.0)), seed: int = 0) -> LabeledDataset:
    """Two classes of 2-D Gaussian points, each stored as a 1x2 sample.

    ``cov_params`` is either one 2x2 covariance shared by both classes or a
    pair of them.
    """
    if n_per_class < 2:
        raise InvalidSpecError("n_per_class must be at least 2")
    covs = np.asarray(cov_params, dtype=np.float64)
    if covs.shape == (2, 2):
        covs = np.stack([covs, covs])
    if covs.shape != (2, 2, 2):
        raise InvalidSpecError(f"covariance must be 2x2 or a pair of 2x2, got {covs.shape}")
    factors = []
    for cov in covs:
        if not np.allclose(cov, cov.T):
            raise InvalidSpecError("covariance must be symmetric")
        try:
            factors.append(np.linalg.cholesky(cov))
        except np.linalg.LinAlgError:
            raise InvalidSpecError("covariance must be positive definite") from None
    rng = np.random.default_rng(seed)
    points = []
    for mean, chol in zip((mean_1, mean_2), factors):
        z = rng.standard_normal((n_per_class, 2))
        points.append(np.asarray(mean, dtype=np.float64) + z @ chol.T)
    images = np.concatenate(points)[:, None, :]
    labels = np.repeat([0, 1], n_per_class)
    return LabeledDataset(images, labels, ("0", "1"))
