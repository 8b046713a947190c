"""Parametric outcome models: Bayesian linear regression and a
random-intercept linear mixed model, with the complete-data Gibbs updates
and the log-density/gradient pieces the Langevin imputation step needs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

__all__ = [
    "LinRegSpec",
    "LmmSpec",
    "LinRegState",
    "LmmState",
    "linreg_gibbs_update",
    "lmm_gibbs_update",
    "row_means",
    "outcome_logpdf",
    "outcome_grad",
]


@dataclass
class LinRegSpec:
    """Gaussian linear regression y = X beta + eps, eps ~ N(0, sigma2)."""

    add_intercept: bool = True
    c_beta: float = 1e-4   # prior precision of beta
    c_sigma: float = 1.0   # inverse-gamma shape/rate of sigma2

    kind = "linear"


@dataclass
class LmmSpec:
    """Random-intercept mixed model y = X beta + v_group + eps."""

    add_intercept: bool = False
    c_beta: float = 1e-4
    c_sigma: float = 1.0
    c_tau: float = 1.0     # inverse-gamma shape/rate of the intercept variance

    kind = "lmm"


@dataclass
class LinRegState:
    beta: np.ndarray
    sigma2: float

    def __post_init__(self):
        self.beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")

    def copy(self):
        return LinRegState(self.beta.copy(), self.sigma2)


@dataclass
class LmmState:
    beta: np.ndarray
    v: np.ndarray
    tau2: float
    sigma2: float

    def __post_init__(self):
        self.beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        self.v = np.atleast_1d(np.asarray(self.v, dtype=float))
        if self.tau2 <= 0 or self.sigma2 <= 0:
            raise ValueError("variance components must be positive")

    def copy(self):
        return LmmState(self.beta.copy(), self.v.copy(), self.tau2, self.sigma2)


def _draw_beta(X: np.ndarray, target: np.ndarray, sigma2: float, c_beta: float,
               rng: np.random.Generator) -> np.ndarray:
    p = X.shape[1]
    prec = X.T @ X / sigma2 + c_beta * np.eye(p)
    chol = cho_factor(prec, lower=True, check_finite=False)
    mean = cho_solve(chol, X.T @ target / sigma2, check_finite=False)
    noise = solve_triangular(chol[0].T, rng.standard_normal(p), lower=False, check_finite=False)
    return mean + noise


def _draw_inv_gamma(shape: float, rate: float, rng: np.random.Generator) -> float:
    return float(rate / rng.gamma(shape, 1.0))


def linreg_gibbs_update(state: LinRegState, X: np.ndarray, y: np.ndarray,
                        spec: LinRegSpec, rng: np.random.Generator) -> LinRegState:
    """One sweep of the complete-data regression conditionals.

    beta | sigma2 ~ N(A m, A) with A = (X'X / sigma2 + c_beta I)^-1 and
    m = X'y / sigma2; then sigma2 | beta ~ IG(c_sigma + n/2, c_sigma + SSR/2).
    """
    beta = _draw_beta(X, y, state.sigma2, spec.c_beta, rng)
    ssr = float(np.sum((y - X @ beta) ** 2))
    sigma2 = _draw_inv_gamma(spec.c_sigma + 0.5 * y.size, spec.c_sigma + 0.5 * ssr, rng)
    return LinRegState(beta=beta, sigma2=sigma2)


def lmm_gibbs_update(state: LmmState, X: np.ndarray, y: np.ndarray,
                     groups: np.ndarray, spec: LmmSpec,
                     rng: np.random.Generator) -> LmmState:
    """One blocked Gibbs sweep: beta, then the intercepts, then tau2, sigma2.

    Each random intercept has the usual shrinkage conditional
    N((T_i ybar_i / sigma2) / (T_i / sigma2 + 1 / tau2), 1 / (...)); a group
    with no records falls back to its N(0, tau2) prior.
    """
    m = state.v.size
    counts = np.bincount(groups, minlength=m).astype(float)

    beta = _draw_beta(X, y - state.v[groups], state.sigma2, spec.c_beta, rng)

    resid = y - X @ beta
    sums = np.bincount(groups, weights=resid, minlength=m)
    prec = counts / state.sigma2 + 1.0 / state.tau2
    mean = (sums / state.sigma2) / prec
    v = mean + rng.standard_normal(m) / np.sqrt(prec)

    tau2 = _draw_inv_gamma(spec.c_tau + 0.5 * m,
                           spec.c_tau + 0.5 * float(v @ v), rng)
    ssr = float(np.sum((resid - v[groups]) ** 2))
    sigma2 = _draw_inv_gamma(spec.c_sigma + 0.5 * y.size,
                             spec.c_sigma + 0.5 * ssr, rng)
    return LmmState(beta=beta, v=v, tau2=tau2, sigma2=sigma2)


def row_means(state, X: np.ndarray, groups: np.ndarray | None = None) -> np.ndarray:
    """Conditional mean of every row: fixed effects plus any random intercept."""
    mean = X @ state.beta
    if isinstance(state, LmmState):
        if groups is None:
            raise ValueError("mixed-model means need group codes")
        mean = mean + state.v[groups]
    return mean


def outcome_logpdf(y, mean, sigma2: float):
    """Gaussian log density of y at the model mean."""
    y = np.asarray(y, dtype=float)
    return -0.5 * np.log(2.0 * np.pi * sigma2) - (y - mean) ** 2 / (2.0 * sigma2)


def outcome_grad(y, mean, sigma2: float):
    """d/dy log f(y); equals -(y - mean) / sigma2 for both models."""
    y = np.asarray(y, dtype=float)
    return -(y - mean) / sigma2
