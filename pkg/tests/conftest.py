import numpy as np
import pytest

from mutcause.data import TransformedDataset


def small_dataset(n_per_project=50, P=4, seed=0):
    """Confounded toy data on the model scale (cover drives exec, both drive kills)."""
    rng = np.random.default_rng(seed)
    idx = np.repeat(np.arange(P), n_per_project)
    cover = rng.normal(size=idx.size)
    exec_ = 0.2 + 0.7 * cover + 0.5 * rng.normal(size=idx.size)
    eta = rng.normal(0, 0.5, P)[idx] + 0.8 * exec_ + 0.6 * cover
    killed = rng.random(idx.size) < 1 / (1 + np.exp(-eta))
    return TransformedDataset(tuple(f"proj{i}" for i in range(P)), idx, exec_, cover, killed)


@pytest.fixture
def toy_data():
    return small_dataset()


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
