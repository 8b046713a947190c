"""Chain orchestration: initialisation, the full Gibbs sweep, Langevin
imputation of missing responses, and draw storage.

Every update block owns an independent random stream spawned from the chain
seed. Skipping a block (say, a frozen spline part) therefore never shifts
the randomness of the remaining blocks, and chains with equal seeds are
reproducible draw for draw.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import RbfSpec, cluster_centers, place_knots, power_basis, rbf_design, spline_basis
from .data import Dataset
from .outcome import (
    LinRegState,
    LmmState,
    linreg_gibbs_update,
    lmm_gibbs_update,
    outcome_grad,
    outcome_logpdf,
    row_means,
)
from .response import (
    PriorConfig,
    ResponseDesign,
    ResponseModelSpec,
    ResponseState,
    update_delta,
    update_gamma,
    update_knot_expansion,
    update_lambda,
    update_lambda_xi,
    update_omega,
    update_phi,
    update_xi,
)

__all__ = [
    "McmcConfig",
    "ChainState",
    "ChainRngs",
    "Workspace",
    "MalaControl",
    "Draws",
    "initialize",
    "mala_impute",
    "gibbs_sweep",
    "run_chain",
    "joint_loglik",
]

MALA_TARGET_ACCEPT = 0.574

_BLOCK_NAMES = ("init", "omega", "phi", "gamma", "coef", "lam", "lam_xi",
                "knots", "mala", "theta")


@dataclass
class ChainRngs:
    """One independent stream per update block.

    Freezing or skipping a block then leaves every other block's draw
    sequence untouched, which keeps reduced models (e.g. the linear response
    special case) trajectory-identical to their frozen superset.
    """

    init: np.random.Generator
    omega: np.random.Generator
    phi: np.random.Generator
    gamma: np.random.Generator
    coef: np.random.Generator
    lam: np.random.Generator
    lam_xi: np.random.Generator
    knots: np.random.Generator
    mala: np.random.Generator
    theta: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "ChainRngs":
        children = np.random.SeedSequence(int(seed)).spawn(len(_BLOCK_NAMES))
        return cls(**{name: np.random.default_rng(ss)
                      for name, ss in zip(_BLOCK_NAMES, children)})


@dataclass
class McmcConfig:
    """Chain length, step sizes, and seeding."""

    n_burn: int = 2000
    n_keep: int = 3000
    thin: int = 1
    mala_step: float = 0.25
    rw_sd: float = 0.1
    seed: int = 0
    adapt_mala: bool = True

    def __post_init__(self):
        if self.n_burn < 0 or self.n_keep < 1 or self.thin < 1:
            raise ValueError("need n_burn >= 0, n_keep >= 1, thin >= 1")
        if self.mala_step <= 0 or self.rw_sd <= 0:
            raise ValueError("step sizes must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


@dataclass
class ChainState:
    """All current parameter values plus the completed response vector."""

    response: ResponseState
    outcome: LinRegState | LmmState
    y: np.ndarray  # completed responses; imputed values sit at the missing slots

    def y_imputed(self, data: Dataset) -> np.ndarray:
        return self.y[data.miss_idx]

    def copy(self) -> "ChainState":
        return ChainState(self.response.copy(), self.outcome.copy(), self.y.copy())


@dataclass
class Workspace:
    """Per-chain scratch: design matrices and the outcome design."""

    design: ResponseDesign
    X: np.ndarray
    rbf: RbfSpec | None = None


@dataclass
class MalaControl:
    """Per-missing-index step sizes with optional burn-in adaptation."""

    log_h: np.ndarray
    adapting: bool = False
    target: float = MALA_TARGET_ACCEPT
    t: int = 0

    def adapt(self, accept_prob: np.ndarray) -> None:
        self.t += 1
        gain = (self.t + 10.0) ** -0.7
        self.log_h = np.clip(self.log_h + gain * (accept_prob - self.target), -20.0, 5.0)

    @property
    def h(self) -> np.ndarray:
        return np.exp(self.log_h)


def outcome_design(data: Dataset, spec) -> np.ndarray:
    if spec.add_intercept:
        return np.column_stack([np.ones(data.n), data.x])
    return data.x.copy()


def _initial_knots(data: Dataset, spec: ResponseModelSpec):
    if spec.knot_strategy == "fixed":
        knots = spec.fixed_knots if spec.fixed_knots is not None else np.empty(0)
        return np.asarray(knots, dtype=float), 0.0, 0.0
    if spec.n_knots == 0:
        return np.empty(0), 0.0, 0.0
    a0 = b0 = 0.5 if spec.adaptive else 0.0
    return place_knots(data.y_obs, spec.n_knots, a0, b0), a0, b0


def initialize(data: Dataset, response_spec: ResponseModelSpec, outcome_spec,
               prior: PriorConfig, config: McmcConfig,
               rngs: ChainRngs | None = None):
    """Starting state: complete-case outcome fit, predicted-mean imputations,
    unit PG auxiliaries, and zeroed response coefficients.

    Returns (state, workspace).
    """
    if data.obs_idx.size == 0:
        raise ValueError("cannot initialise a chain with zero observed responses")
    rng = (rngs or ChainRngs.from_seed(config.seed)).init

    X = outcome_design(data, outcome_spec)
    X_obs = X[data.obs_idx]
    beta0, *_ = np.linalg.lstsq(X_obs, data.y_obs, rcond=None)
    resid = data.y_obs - X_obs @ beta0
    dof = max(data.obs_idx.size - X.shape[1], 1)
    sigma2_0 = max(float(resid @ resid) / dof, 1e-8)
    if outcome_spec.kind == "lmm":
        if data.group is None:
            raise ValueError("mixed-model outcome needs group codes")
        outcome_state = LmmState(beta=beta0, v=np.zeros(data.n_groups),
                                 tau2=1.0, sigma2=sigma2_0)
    else:
        outcome_state = LinRegState(beta=beta0, sigma2=sigma2_0)

    y = data.y.copy()
    y[data.miss_idx] = X[data.miss_idx] @ beta0

    knots, a0, b0 = _initial_knots(data, response_spec)
    rbf = None
    if response_spec.kind == "nr":
        centers = cluster_centers(data.z, response_spec.n_rbf, rng)
        rbf = RbfSpec(centers=centers, scales=np.full(response_spec.n_rbf,
                                                      response_spec.rbf_scale))
        zmat = rbf_design(data.z, rbf)
        n_delta, n_xi = 0, response_spec.n_rbf
    else:
        zmat = data.z.copy()
        n_delta, n_xi = data.z.shape[1], 0

    response_state = ResponseState(
        phi=np.zeros(response_spec.degree + 1),
        gamma=np.zeros(knots.size),
        delta=np.zeros(n_delta),
        xi=np.zeros(n_xi),
        lam=1.0,
        lam_xi=1.0,
        omega=np.ones(data.n),
        a_expand=a0,
        b_expand=b0,
        knots=knots,
    )
    design = ResponseDesign(
        w1=power_basis(y, response_spec.degree),
        w2=spline_basis(y, knots, response_spec.degree),
        zmat=zmat,
    )
    state = ChainState(response=response_state, outcome=outcome_state, y=y)
    return state, Workspace(design=design, X=X, rbf=rbf)


def _u_and_du(y: np.ndarray, state: ResponseState, degree: int,
              zpart: np.ndarray):
    """Linear predictor and its y-derivative in one basis evaluation."""
    w1 = power_basis(y, degree)
    u = w1 @ state.phi + zpart
    du = np.zeros_like(y)
    for j in range(1, degree + 1):
        du += j * state.phi[j] * w1[:, j - 1]
    if state.knots.size:
        diff = y[:, None] - state.knots[None, :]
        pos = diff > 0
        lower = np.where(pos, diff, 0.0) ** (degree - 1) if degree > 1 else pos.astype(float)
        u = u + (lower * np.where(pos, diff, 0.0)) @ state.gamma
        du += degree * (lower @ state.gamma)
    return u, du


def _mala_step(y_cur, mean, sigma2, omega, zpart, state, degree, h, rng):
    """Vectorised one-step Langevin update of independent missing responses.

    Returns (y_new, accept_prob, accepted_mask). The target of element i is
    f(y; mean_i, sigma2) * exp(-u_i(y)/2 - omega_i u_i(y)^2 / 2); the drift
    is the negated gradient of its log.
    """

    def log_g_and_drift(t):
        u, du = _u_and_du(t, state, degree, zpart)
        log_g = outcome_logpdf(t, mean, sigma2) - 0.5 * u - 0.5 * omega * u * u
        v = -outcome_grad(t, mean, sigma2) + (0.5 + omega * u) * du
        return log_g, v

    noise = rng.standard_normal(y_cur.size)
    g_cur, v_cur = log_g_and_drift(y_cur)
    y_prop = y_cur - h * v_cur + np.sqrt(2.0 * h) * noise
    g_prop, v_prop = log_g_and_drift(y_prop)
    log_fwd = -((y_prop - (y_cur - h * v_cur)) ** 2) / (4.0 * h)
    log_bwd = -((y_cur - (y_prop - h * v_prop)) ** 2) / (4.0 * h)
    log_ratio = g_prop - g_cur + log_bwd - log_fwd
    accept_prob = np.exp(np.minimum(0.0, log_ratio))
    accepted = np.log(rng.random(y_cur.size)) < log_ratio
    return np.where(accepted, y_prop, y_cur), accept_prob, accepted


def mala_impute(i: int, state: ChainState, ws: Workspace, data: Dataset,
                response_spec: ResponseModelSpec, h: float,
                rng: np.random.Generator) -> float:
    """One Langevin update of a single missing response (index into y)."""
    if data.s[i] != 0:
        raise ValueError(f"row {i} is observed; only missing responses are imputed")
    if h <= 0:
        raise ValueError("step size must be positive")
    groups = None if data.group is None else data.group[[i]]
    mean = row_means(state.outcome, ws.X[[i]], groups)
    zpart = ws.design.zmat[[i]] @ (
        state.response.xi if response_spec.kind == "nr" else state.response.delta
    ) if ws.design.zmat.shape[1] else np.zeros(1)
    y_new, _, accepted = _mala_step(
        state.y[[i]], mean, state.outcome.sigma2, state.response.omega[[i]],
        zpart, state.response, response_spec.degree, np.full(1, h), rng,
    )
    state.y[i] = y_new[0]
    if accepted[0]:
        ws.design.refresh_rows(np.array([i]), y_new[:1], state.response.knots,
                               response_spec.degree)
    return float(y_new[0])


def _impute_all(state: ChainState, ws: Workspace, data: Dataset,
                response_spec: ResponseModelSpec, mala: MalaControl,
                rng: np.random.Generator) -> float:
    mi = data.miss_idx
    if mi.size == 0:
        return float("nan")
    groups = None if data.group is None else data.group[mi]
    mean = row_means(state.outcome, ws.X[mi], groups)
    coef = state.response.xi if response_spec.kind == "nr" else state.response.delta
    zpart = ws.design.zmat[mi] @ coef if ws.design.zmat.shape[1] else np.zeros(mi.size)
    y_new, accept_prob, accepted = _mala_step(
        state.y[mi], mean, state.outcome.sigma2, state.response.omega[mi],
        zpart, state.response, response_spec.degree, mala.h, rng,
    )
    state.y[mi] = y_new
    if accepted.any():
        ws.design.refresh_rows(mi[accepted], y_new[accepted],
                               state.response.knots, response_spec.degree)
    if mala.adapting:
        mala.adapt(accept_prob)
    return float(accepted.mean())


def joint_loglik(state: ChainState, ws: Workspace, data: Dataset,
                 response_spec: ResponseModelSpec) -> float:
    """Complete-data joint log likelihood: outcome density plus the
    selection Bernoulli terms at the current imputations."""
    mean = row_means(state.outcome, ws.X, data.group)
    ll = float(np.sum(outcome_logpdf(state.y, mean, state.outcome.sigma2)))
    u = ws.design.predictor(state.response, response_spec.kind)
    log_pi = u - np.logaddexp(0.0, u)
    log_1mpi = -np.logaddexp(0.0, u)
    ll += float(np.sum(np.where(data.s == 1, log_pi, log_1mpi)))
    return ll


def gibbs_sweep(state: ChainState, ws: Workspace, data: Dataset,
                response_spec: ResponseModelSpec, outcome_spec,
                prior: PriorConfig, config: McmcConfig, rngs: ChainRngs,
                mala: MalaControl) -> dict:
    """One full cycle over all blocks, in fixed order: PG auxiliaries,
    response coefficients, precisions, knot expansion, imputation, outcome."""
    resp = state.response

    resp.omega = update_omega(resp, ws.design, response_spec.kind, rngs.omega)
    if not response_spec.freeze_phi:
        resp.phi = update_phi(resp, ws.design, data.s, prior, response_spec.kind,
                              rngs.phi)
    if resp.gamma.size and not response_spec.freeze_gamma:
        resp.gamma = update_gamma(resp, ws.design, data.s, prior,
                                  response_spec.kind, rngs.gamma)
    if response_spec.kind == "nr":
        resp.xi = update_xi(resp, ws.design, data.s, prior, rngs.coef)
        resp.lam_xi = update_lambda_xi(resp, prior, rngs.lam_xi)
    else:
        resp.delta = update_delta(resp, ws.design, data.s, prior, rngs.coef)
    if resp.gamma.size and not response_spec.freeze_gamma:
        resp.lam = update_lambda(resp, prior, rngs.lam)

    knot_accept = (False, False)
    if response_spec.adaptive:
        knot_accept = update_knot_expansion(
            resp, ws.design, data.y_obs, state.y, data.s, response_spec, prior,
            config.rw_sd, rngs.knots,
        )

    mala_rate = _impute_all(state, ws, data, response_spec, mala, rngs.mala)

    if outcome_spec.kind == "lmm":
        state.outcome = lmm_gibbs_update(state.outcome, ws.X, state.y,
                                         data.group, outcome_spec, rngs.theta)
    else:
        state.outcome = linreg_gibbs_update(state.outcome, ws.X, state.y,
                                            outcome_spec, rngs.theta)

    return {"mala_rate": mala_rate, "knot_accept": knot_accept}


@dataclass
class Draws:
    """Retained post-burn-in samples plus per-draw log likelihoods."""

    phi: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    xi: np.ndarray
    lam: np.ndarray
    lam_xi: np.ndarray
    a_expand: np.ndarray
    b_expand: np.ndarray
    beta: np.ndarray
    sigma2: np.ndarray
    tau2: np.ndarray | None
    v: np.ndarray | None
    y_mis: np.ndarray
    mu: np.ndarray
    loglik: np.ndarray
    mala_rate: np.ndarray
    knot_accept: np.ndarray
    response_spec: ResponseModelSpec = None
    outcome_spec: object = None
    prior: PriorConfig = None
    config: McmcConfig = None
    rbf: RbfSpec | None = None
    x_names: list = field(default_factory=list)
    z_names: list = field(default_factory=list)

    @property
    def n_draws(self) -> int:
        return self.beta.shape[0]

    @property
    def mala_accept_rate(self) -> float:
        rates = self.mala_rate[~np.isnan(self.mala_rate)]
        return float(rates.mean()) if rates.size else float("nan")

    @property
    def knot_accept_rate(self) -> float:
        return float(self.knot_accept.mean()) if self.knot_accept.size else float("nan")

    def scalar_columns(self):
        """Name/value pairs of every scalar parameter track, draw by draw."""
        cols: list[tuple[str, np.ndarray]] = []
        for j in range(self.phi.shape[1]):
            cols.append((f"phi_{j}", self.phi[:, j]))
        for j in range(self.gamma.shape[1]):
            cols.append((f"gamma_{j+1}", self.gamma[:, j]))
        for j in range(self.delta.shape[1]):
            name = self.z_names[j] if j < len(self.z_names) else f"z{j+1}"
            cols.append((f"delta_{name}", self.delta[:, j]))
        for j in range(self.xi.shape[1]):
            cols.append((f"xi_{j+1}", self.xi[:, j]))
        if self.gamma.shape[1]:
            cols.append(("lambda", self.lam))
        if self.xi.shape[1]:
            cols.append(("lambda_xi", self.lam_xi))
        if self.response_spec is not None and self.response_spec.adaptive:
            cols.append(("a_expand", self.a_expand))
            cols.append(("b_expand", self.b_expand))
        for j in range(self.beta.shape[1]):
            name = self.x_names[j] if j < len(self.x_names) else f"b{j}"
            cols.append((f"beta_{name}", self.beta[:, j]))
        cols.append(("sigma2", self.sigma2))
        if self.tau2 is not None:
            cols.append(("tau2", self.tau2))
        if self.v is not None:
            for j in range(self.v.shape[1]):
                cols.append((f"v_{j+1}", self.v[:, j]))
        cols.append(("mu", self.mu))
        return cols


def run_chain(data: Dataset, response_spec: ResponseModelSpec, outcome_spec,
              prior: PriorConfig, config: McmcConfig) -> Draws:
    """Burn in, then retain n_keep draws taken every thin-th sweep."""
    rngs = ChainRngs.from_seed(config.seed)
    state, ws = initialize(data, response_spec, outcome_spec, prior, config, rngs)
    mala = MalaControl(
        log_h=np.full(data.n_missing, np.log(config.mala_step)),
        adapting=config.adapt_mala,
    )

    nk = config.n_keep
    q1 = response_spec.degree + 1
    is_lmm = outcome_spec.kind == "lmm"
    out = Draws(
        phi=np.empty((nk, q1)),
        gamma=np.empty((nk, state.response.gamma.size)),
        delta=np.empty((nk, state.response.delta.size)),
        xi=np.empty((nk, state.response.xi.size)),
        lam=np.empty(nk),
        lam_xi=np.empty(nk),
        a_expand=np.empty(nk),
        b_expand=np.empty(nk),
        beta=np.empty((nk, ws.X.shape[1])),
        sigma2=np.empty(nk),
        tau2=np.empty(nk) if is_lmm else None,
        v=np.empty((nk, data.n_groups)) if is_lmm else None,
        y_mis=np.empty((nk, data.n_missing)),
        mu=np.empty(nk),
        loglik=np.empty(nk),
        mala_rate=np.empty(nk),
        knot_accept=np.empty((nk, 2)),
        response_spec=response_spec,
        outcome_spec=outcome_spec,
        prior=prior,
        config=config,
        rbf=ws.rbf,
        x_names=(["intercept"] if outcome_spec.add_intercept else []) + list(data.x_names),
        z_names=list(data.z_names),
    )

    total = config.n_burn + nk * config.thin
    kept = 0
    for sweep in range(1, total + 1):
        mala.adapting = config.adapt_mala and sweep <= config.n_burn
        diag = gibbs_sweep(state, ws, data, response_spec, outcome_spec,
                           prior, config, rngs, mala)
        if sweep <= config.n_burn:
            continue
        if (sweep - config.n_burn) % config.thin:
            continue
        resp = state.response
        out.phi[kept] = resp.phi
        out.gamma[kept] = resp.gamma
        out.delta[kept] = resp.delta
        out.xi[kept] = resp.xi
        out.lam[kept] = resp.lam
        out.lam_xi[kept] = resp.lam_xi
        out.a_expand[kept] = resp.a_expand
        out.b_expand[kept] = resp.b_expand
        out.beta[kept] = state.outcome.beta
        out.sigma2[kept] = state.outcome.sigma2
        if is_lmm:
            out.tau2[kept] = state.outcome.tau2
            out.v[kept] = state.outcome.v
        out.y_mis[kept] = state.y[data.miss_idx]
        out.mu[kept] = state.y.mean()
        out.loglik[kept] = joint_loglik(state, ws, data, response_spec)
        out.mala_rate[kept] = diag["mala_rate"]
        out.knot_accept[kept] = diag["knot_accept"]
        kept += 1
    return out
