from pathlib import Path

import numpy as np
import pytest

from twodpca.dataset import LabeledDataset

DATA = Path(__file__).parent / "data"
MNIST_IMAGES = DATA / "mnist-subset-images-idx3-ubyte.gz"
MNIST_LABELS = DATA / "mnist-subset-labels-idx1-ubyte.gz"


def random_dataset(rng, sizes=(4, 5, 3), h=6, w=5) -> LabeledDataset:
    labels = np.repeat(np.arange(len(sizes)), sizes)
    images = rng.standard_normal((labels.size, h, w))
    return LabeledDataset(images, labels, tuple(str(j) for j in range(len(sizes))))


def angle(a, b) -> float:
    """Angle between two lines (sign-free)."""
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return float(np.arccos(min(1.0, abs(a @ b))))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
