import json
from pathlib import Path

import numpy as np
import pytest

from dropout_mi.data import find_idx_pair, load_idx

DATA_DIR = Path(__file__).parent / "data"
MNIST_DIR = Path(__file__).resolve().parents[1] / "data" / "mnist10k"


@pytest.fixture(scope="session")
def oracle_values():
    return json.loads((DATA_DIR / "oracle_toy.json").read_text())


@pytest.fixture(scope="session")
def mnist10k():
    img, lab = find_idx_pair(MNIST_DIR, "train")
    return load_idx(img, lab)


@pytest.fixture
def tiny_idx(tmp_path):
    """A 40-sample synthetic IDX pair with two well-separated classes."""
    from dropout_mi.data import write_idx

    gen = np.random.default_rng(0)
    labels = np.arange(40) % 2
    images = gen.integers(0, 60, size=(40, 28, 28)).astype(np.uint8)
    images[labels == 1, :14] += 150
    img, lab = tmp_path / "train-images-idx3-ubyte", tmp_path / "train-labels-idx1-ubyte"
    write_idx(images, labels, img, lab)
    return tmp_path


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
