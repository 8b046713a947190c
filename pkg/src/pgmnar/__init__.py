"""Semiparametric Bayesian regression with nonignorable missing responses.

A Gibbs sampler built on Polya-gamma augmentation for logistic selection
models whose dependence on the (possibly missing) response is a penalized
spline, with Langevin imputation of the missing outcomes, a linear or
random-intercept outcome model, and a simulation-study harness.
"""

from .data import Dataset
from .evaluation import (
    ScenarioSpec,
    StudyConfig,
    dic,
    estimate_mu,
    generate_scenario,
    posterior_summary,
    replication_study,
)
from .mcmc import Draws, McmcConfig, run_chain
from .outcome import LinRegSpec, LmmSpec
from .pg import pg_series_oracle, sample_pg1
from .response import PriorConfig, ResponseModelSpec

__all__ = [
    "Dataset",
    "Draws",
    "LinRegSpec",
    "LmmSpec",
    "McmcConfig",
    "PriorConfig",
    "ResponseModelSpec",
    "ScenarioSpec",
    "StudyConfig",
    "dic",
    "estimate_mu",
    "generate_scenario",
    "pg_series_oracle",
    "posterior_summary",
    "replication_study",
    "run_chain",
    "sample_pg1",
]
__version__ = "0.1.0"
