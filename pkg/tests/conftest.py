import numpy as np
import pytest


def random_adjacency(rng, n, density=0.2, weighted=True):
    upper = np.triu(rng.random((n, n)) < density, k=1)
    w = rng.uniform(0.05, 1.0, size=(n, n)) if weighted else np.ones((n, n))
    A = np.where(upper, w, 0.0)
    return A + A.T


@pytest.fixture
def write_file(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write
