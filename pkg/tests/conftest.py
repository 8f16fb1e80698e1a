import os
import numpy as np
import pytest
import torch
from models.point_set import PointSet

os.environ.setdefault('WANDB_MODE', 'disabled')


def line(*values):
    return PointSet(range(len(values)), torch.tensor(values, dtype=torch.float64).reshape(-1, 1), 1)


@pytest.fixture
def line_points():
    return line


@pytest.fixture
def four_points():
    return line(0., 1., 10., 11.)


@pytest.fixture
def with_outlier():
    return line(0., 1., 10., 11., 50.)


@pytest.fixture
def random_points():
    # Distinct coordinates drawn on a grid of step 1/8 to keep distances well separated from ties.
    def make(rng, n, d):
        cells = rng.choice(64 ** d, size=n, replace=False)
        coords = np.stack([(cells // 64 ** j) % 64 for j in range(d)], axis=1) / 8.
        return PointSet(range(n), torch.from_numpy(coords.astype(np.float64)), d)
    return make


@pytest.fixture
def write_file(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return str(path)
    return write
