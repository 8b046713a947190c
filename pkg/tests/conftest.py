import numpy as np
import pytest

from pgmnar.data import Dataset
from pgmnar.evaluation import ScenarioSpec, generate_scenario


def batch_se(x: np.ndarray, n_batches: int = 100) -> float:
    """Batch-means standard error for an autocorrelated chain."""
    n = x.size // n_batches
    means = x[: n * n_batches].reshape(n_batches, n).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def assert_moments_close(sample_a, sample_b, label="", factor=4.0,
                         dependent_b=False):
    """First two moments agree within `factor` combined standard errors."""
    for power in (1, 2):
        a, b = sample_a**power, sample_b**power
        se_a = a.std(ddof=1) / np.sqrt(a.size)
        se_b = batch_se(b) if dependent_b else b.std(ddof=1) / np.sqrt(b.size)
        se = np.sqrt(se_a**2 + se_b**2)
        diff = abs(a.mean() - b.mean())
        assert diff < factor * se, (
            f"{label} moment {power}: |{a.mean():.5g} - {b.mean():.5g}| "
            f"= {diff:.3g} > {factor} x {se:.3g}"
        )


@pytest.fixture(scope="session")
def s1_dataset():
    """One scenario-1 dataset shared by smoke tests."""
    return generate_scenario(ScenarioSpec(scenario=1, n=500, seed=11))


def make_fit_dataset(scenario: int, n: int, seed: int) -> Dataset:
    """Scenario data arranged the way the study fits it (z = x1)."""
    d = generate_scenario(ScenarioSpec(scenario=scenario, n=n, seed=seed))
    return Dataset(y=d.y, s=d.s, x=d.x, z=d.x[:, :1],
                   x_names=["x1", "x2"], z_names=["x1"], y_full=d.y_full)
