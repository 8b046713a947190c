"""Response-mechanism models and their Gibbs full-conditional updates.

Three flavours of the selection model P(s=1 | x, y) = logistic(u):

* LR -- u = phi0 + phi1 * y + z'delta (linear logistic),
* SR -- u = w1'phi + w2'gamma + z'delta with a truncated power spline in y,
* NR -- u = w1'phi + w2'gamma + rbf(z)'xi, the covariate part nonparametric.

Conditional on the Polya-gamma auxiliaries omega, every coefficient block is
multivariate normal with precision (W' Omega W + ridge I); draws factor that
precision directly rather than inverting it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .basis import place_knots, power_basis, spline_basis
from .pg import sample_pg1

__all__ = [
    "ResponseModelSpec",
    "PriorConfig",
    "ResponseState",
    "ResponseDesign",
    "linear_predictor",
    "update_omega",
    "update_phi",
    "update_gamma",
    "update_delta",
    "update_xi",
    "update_lambda",
    "update_lambda_xi",
    "update_knot_expansion",
    "expansion_log_target",
    "draw_gaussian_conditional",
]

KNOT_STRATEGIES = ("fixed", "quantile", "adaptive_a", "adaptive_ab")


@dataclass
class ResponseModelSpec:
    """Configuration of the selection model.

    kind is one of "lr", "sr", "nr". n_knots = 0 drops the spline part
    (the LR special case). knot_strategy "fixed" uses the knots given in
    fixed_knots; "quantile" places them from observed-response quantiles
    once at initialisation; the adaptive strategies additionally sample the
    endpoint expansion constants (one shared constant, or separate lower/
    upper constants) by random-walk MH.
    """

    kind: str = "sr"
    degree: int = 2
    n_knots: int = 10
    n_rbf: int = 10
    rbf_scale: float = 1.0
    knot_strategy: str = "quantile"
    fixed_knots: np.ndarray | None = None
    freeze_phi: bool = False
    freeze_gamma: bool = False

    def __post_init__(self):
        if self.kind not in ("lr", "sr", "nr"):
            raise ValueError(f"unknown response kind {self.kind!r}")
        if self.knot_strategy not in KNOT_STRATEGIES:
            raise ValueError(f"unknown knot strategy {self.knot_strategy!r}")
        if self.kind == "lr":
            self.degree = 1
            self.n_knots = 0
        if self.degree < 1:
            raise ValueError("spline degree must be >= 1")
        if self.fixed_knots is not None:
            self.fixed_knots = np.asarray(self.fixed_knots, dtype=float)
            self.n_knots = self.fixed_knots.size
            self.knot_strategy = "fixed"

    @classmethod
    def lr(cls) -> "ResponseModelSpec":
        return cls(kind="lr", degree=1, n_knots=0)

    @property
    def adaptive(self) -> bool:
        return self.knot_strategy in ("adaptive_a", "adaptive_ab")


@dataclass
class PriorConfig:
    """Prior hyperparameters of the response model."""

    c_phi: float = 1e-4
    c_delta: float = 1e-4
    c_lambda: float = 1.0
    c_xi: float = 1.0
    expansion_rate: float = 1.0  # Exp(rate) prior on the knot expansion constants

    def __post_init__(self):
        for name in ("c_phi", "c_delta", "c_lambda", "c_xi", "expansion_rate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


@dataclass
class ResponseState:
    """Current values of all response-model parameters and PG auxiliaries."""

    phi: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    xi: np.ndarray
    lam: float = 1.0
    lam_xi: float = 1.0
    omega: np.ndarray = field(default_factory=lambda: np.empty(0))
    a_expand: float = 0.0
    b_expand: float = 0.0
    knots: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if self.lam <= 0 or self.lam_xi <= 0:
            raise ValueError("precision parameters must be positive")

    def copy(self) -> "ResponseState":
        return ResponseState(
            phi=self.phi.copy(), gamma=self.gamma.copy(), delta=self.delta.copy(),
            xi=self.xi.copy(), lam=self.lam, lam_xi=self.lam_xi,
            omega=self.omega.copy(), a_expand=self.a_expand,
            b_expand=self.b_expand, knots=self.knots.copy(),
        )


@dataclass
class ResponseDesign:
    """Design matrices of the current completed responses.

    w1: n x (q+1) polynomial part, w2: n x K spline part, zmat: the covariate
    part (raw z columns for LR/SR, the RBF design for NR).
    """

    w1: np.ndarray
    w2: np.ndarray
    zmat: np.ndarray

    def coef_part(self, state: ResponseState, kind: str) -> np.ndarray:
        coef = state.xi if kind == "nr" else state.delta
        if self.zmat.shape[1] == 0:
            return np.zeros(self.w1.shape[0])
        return self.zmat @ coef

    def predictor(self, state: ResponseState, kind: str) -> np.ndarray:
        u = self.w1 @ state.phi
        if self.w2.shape[1]:
            u = u + self.w2 @ state.gamma
        return u + self.coef_part(state, kind)

    def refresh_rows(self, idx: np.ndarray, y_new: np.ndarray,
                     knots: np.ndarray, degree: int) -> None:
        """Rebuild the y-dependent rows after imputed responses change."""
        self.w1[idx] = power_basis(y_new, degree)
        if self.w2.shape[1]:
            self.w2[idx] = spline_basis(y_new, knots, degree)


def linear_predictor(y_i: float, z_i, state: ResponseState,
                     spec: ResponseModelSpec, rbf=None) -> float:
    """u_i for a single unit: spline-in-y part plus the covariate part."""
    w1 = power_basis(y_i, spec.degree)[0]
    u = float(w1 @ state.phi)
    if state.knots.size:
        u += float(spline_basis(y_i, state.knots, spec.degree)[0] @ state.gamma)
    z_i = np.atleast_1d(np.asarray(z_i, dtype=float))
    if spec.kind == "nr":
        from .basis import rbf_design

        u += float(rbf_design(z_i.reshape(1, -1), rbf)[0] @ state.xi)
    elif z_i.size:
        u += float(z_i @ state.delta)
    return u


def draw_gaussian_conditional(design: np.ndarray, omega: np.ndarray,
                              resid: np.ndarray, ridge: float,
                              rng: np.random.Generator) -> np.ndarray:
    """One draw from N(A m, A), A = (design' diag(omega) design + ridge I)^-1,
    m = design' resid; factorises the precision, never the covariance."""
    k = design.shape[1]
    if k == 0:
        return np.empty(0)
    prec = design.T @ (design * omega[:, None]) + ridge * np.eye(k)
    chol = cho_factor(prec, lower=True, check_finite=False)
    mean = cho_solve(chol, design.T @ resid, check_finite=False)
    noise = solve_triangular(chol[0].T, rng.standard_normal(k), lower=False, check_finite=False)
    return mean + noise


def update_omega(state: ResponseState, design: ResponseDesign, kind: str,
                 rng: np.random.Generator) -> np.ndarray:
    """PG(1, u_i) draw for every unit."""
    u = design.predictor(state, kind)
    if u.size == 0:
        return np.empty(0)
    return sample_pg1(u, rng)


def _s_star(s: np.ndarray) -> np.ndarray:
    return np.asarray(s, dtype=float) - 0.5


def update_phi(state: ResponseState, design: ResponseDesign, s: np.ndarray,
               prior: PriorConfig, kind: str, rng: np.random.Generator) -> np.ndarray:
    offset = design.coef_part(state, kind)
    if design.w2.shape[1]:
        offset = offset + design.w2 @ state.gamma
    resid = _s_star(s) - state.omega * offset
    return draw_gaussian_conditional(design.w1, state.omega, resid, prior.c_phi, rng)


def update_gamma(state: ResponseState, design: ResponseDesign, s: np.ndarray,
                 prior: PriorConfig, kind: str, rng: np.random.Generator) -> np.ndarray:
    if design.w2.shape[1] == 0:
        return np.empty(0)
    offset = design.w1 @ state.phi + design.coef_part(state, kind)
    resid = _s_star(s) - state.omega * offset
    return draw_gaussian_conditional(design.w2, state.omega, resid, state.lam, rng)


def update_delta(state: ResponseState, design: ResponseDesign, s: np.ndarray,
                 prior: PriorConfig, rng: np.random.Generator) -> np.ndarray:
    if design.zmat.shape[1] == 0:
        return np.empty(0)
    offset = design.w1 @ state.phi
    if design.w2.shape[1]:
        offset = offset + design.w2 @ state.gamma
    resid = _s_star(s) - state.omega * offset
    return draw_gaussian_conditional(design.zmat, state.omega, resid, prior.c_delta, rng)


def update_xi(state: ResponseState, design: ResponseDesign, s: np.ndarray,
              prior: PriorConfig, rng: np.random.Generator) -> np.ndarray:
    if design.zmat.shape[1] == 0:
        return np.empty(0)
    offset = design.w1 @ state.phi
    if design.w2.shape[1]:
        offset = offset + design.w2 @ state.gamma
    resid = _s_star(s) - state.omega * offset
    return draw_gaussian_conditional(design.zmat, state.omega, resid, state.lam_xi, rng)


def update_lambda(state: ResponseState, prior: PriorConfig,
                  rng: np.random.Generator) -> float:
    """Conjugate gamma draw for the spline precision.

    Shape c_lambda + K/2 and rate c_lambda + gamma'gamma / 2: the exact
    conditional under gamma ~ N(0, lambda^-1 I_K) with a Ga(c, c) prior.
    """
    k = state.gamma.size
    shape = prior.c_lambda + 0.5 * k
    rate = prior.c_lambda + 0.5 * float(state.gamma @ state.gamma)
    return float(rng.gamma(shape, 1.0 / rate))


def update_lambda_xi(state: ResponseState, prior: PriorConfig,
                     rng: np.random.Generator) -> float:
    """Conjugate gamma draw for the RBF coefficient precision."""
    r = state.xi.size
    shape = prior.c_xi + 0.5 * r
    rate = prior.c_xi + 0.5 * float(state.xi @ state.xi)
    return float(rng.gamma(shape, 1.0 / rate))


def expansion_log_target(a: float, b: float, y_obs: np.ndarray,
                         y_full: np.ndarray, s: np.ndarray,
                         state: ResponseState, spec: ResponseModelSpec,
                         fixed_part: np.ndarray, prior: PriorConfig,
                         single_constant: bool) -> float:
    """log h at expansion constants (a, b): prior plus the PG-augmented
    selection terms, with knots and the spline design rebuilt for (a, b)."""
    if a <= 0 or b <= 0:
        return -np.inf
    knots = place_knots(y_obs, spec.n_knots, a, b)
    w2 = spline_basis(y_full, knots, spec.degree)
    u = fixed_part + w2 @ state.gamma
    log_prior = -prior.expansion_rate * a
    if not single_constant:
        log_prior -= prior.expansion_rate * b
    return log_prior + float(np.sum(_s_star(s) * u - 0.5 * state.omega * u * u))


def update_knot_expansion(state: ResponseState, design: ResponseDesign,
                          y_obs: np.ndarray, y_full: np.ndarray, s: np.ndarray,
                          spec: ResponseModelSpec, prior: PriorConfig,
                          rw_sd: float, rng: np.random.Generator):
    """One random-walk MH sweep over the expansion constants.

    Single-constant mode moves both endpoints together; two-constant mode
    does separate coordinate moves for a and b. Nonpositive proposals are
    rejected outright. On any acceptance the knots and the spline columns
    of the design are rebuilt.

    Returns (accepted_a, accepted_b).
    """
    if rw_sd <= 0:
        raise ValueError("random-walk standard deviation must be > 0")
    single = spec.knot_strategy == "adaptive_a"
    fixed_part = design.w1 @ state.phi + design.coef_part(state, spec.kind)

    def logh(a, b):
        return expansion_log_target(a, b, y_obs, y_full, s, state, spec,
                                    fixed_part, prior, single)

    accepted = [False, False]
    cur = logh(state.a_expand, state.b_expand)
    prop_a = state.a_expand + rw_sd * rng.standard_normal()
    cand_b = prop_a if single else state.b_expand
    log_u = np.log(rng.random())
    if prop_a > 0:
        prop_val = logh(prop_a, cand_b)
        if log_u < prop_val - cur:
            state.a_expand = prop_a
            state.b_expand = cand_b
            cur = prop_val
            accepted[0] = True

    if not single:
        prop_b = state.b_expand + rw_sd * rng.standard_normal()
        log_u = np.log(rng.random())
        if prop_b > 0:
            prop_val = logh(state.a_expand, prop_b)
            if log_u < prop_val - cur:
                state.b_expand = prop_b
                accepted[1] = True

    if any(accepted):
        state.knots = place_knots(y_obs, spec.n_knots, state.a_expand, state.b_expand)
        design.w2[:] = spline_basis(y_full, state.knots, spec.degree)
    return tuple(accepted)
