import numpy as np
import pytest

from tabaug.data import TabularDataset, make_synthetic


def make_ds(X, y, groups=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if groups is None:
        groups = ["g"] * len(y)
    return TabularDataset(X, np.asarray(y), groups, [f"x{j}" for j in range(X.shape[1])])


def blobs(n0, n1, d=2, sep=1.0, seed=0):
    gen = np.random.default_rng(seed)
    X = np.vstack([gen.standard_normal((n0, d)), gen.standard_normal((n1, d)) + sep])
    y = np.r_[np.zeros(n0, int), np.ones(n1, int)]
    groups = [f"s{i % 4}" for i in range(n0 + n1)]
    return make_ds(X, y, groups)


@pytest.fixture(scope="session")
def full_scale():
    """612 negatives / 1,097 positives over four schools."""
    return make_synthetic(rng=123)


@pytest.fixture
def small():
    return blobs(30, 50, d=3, sep=1.0, seed=4)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
