import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kanbench.data import Dataset


@pytest.fixture
def tiny_dataset():
    """Four 3-step series over two classes, hand-checkable."""
    series = np.array(
        [
            [0.0, 1.0, 2.0],
            [1.0, 2.0, 3.0],
            [-1.0, 0.0, 1.0],
            [2.0, 3.0, 4.0],
        ]
    )
    labels = np.array([0, 1, 0, 1])
    return Dataset(series, labels, 2, "tiny", {1.0: 0, 2.0: 1})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
