"""Simulation-study harness: data-generating scenarios, estimand and metric
computation, DIC, posterior summaries, and the replication driver."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import place_knots, power_basis, rbf_design, spline_basis
from .data import Dataset
from .mcmc import Draws, McmcConfig, run_chain
from .outcome import LinRegSpec
from .response import PriorConfig, ResponseModelSpec

__all__ = [
    "TRUE_MU",
    "TRUE_BETA",
    "ScenarioSpec",
    "scenario_response_prob",
    "generate_scenario",
    "estimate_mu",
    "dic",
    "posterior_summary",
    "MetricsRow",
    "StudyConfig",
    "ReplicationResult",
    "replication_study",
    "LongitudinalSpec",
    "generate_longitudinal",
    "treatment_difference",
    "worker_count",
]

WORKERS_ENV = "PGMNAR_WORKERS"

# Simple linear regression truth of the simulation scenarios.
DGP_BETA = np.array([0.8, 0.8, -0.5])
DGP_SIGMA2 = 1.0
TRUE_MU = 0.8
TRUE_BETA = {"beta1": 0.8, "beta2": -0.5}
_COV_CHOL = np.linalg.cholesky(np.array([[1.0, 0.2], [0.2, 1.0]]))


def _logistic(t):
    return 1.0 / (1.0 + np.exp(-t))


def scenario_response_prob(scenario: int, y, x1, x2):
    """Response probability of each of the seven missingness scenarios."""
    if scenario == 1:
        return _logistic(1.5 - 0.5 * y + 0.2 * x1)
    if scenario == 2:
        return _logistic(2.5 - 0.2 * y - 0.4 * y**2 + 0.2 * x1)
    if scenario == 3:
        return 1.0 - np.exp(-np.exp(2.5 - 0.2 * y - 0.4 * y**2 + 0.2 * x1))
    if scenario == 4:
        return _logistic(0.7 * y**2 + 0.2 * x1)
    if scenario == 5:
        return _logistic(0.5 * y**2 + x1**2)
    if scenario == 6:
        return _logistic(1.5 - 2.0 * np.sin(y) + 0.2 * x1**2)
    if scenario == 7:
        return _logistic(0.7 * y**2 + 0.2 * x2)
    raise ValueError(f"scenario must be 1..7, got {scenario}")


@dataclass
class ScenarioSpec:
    """One simulated dataset: scenario id, size, and seeding.

    x_seed, when set, draws the covariates from their own stream so that a
    replication study can hold the design fixed across replications while
    the noise and the missingness pattern vary.
    """

    scenario: int
    n: int
    seed: int
    x_seed: int | None = None

    def __post_init__(self):
        if not 1 <= self.scenario <= 7:
            raise ValueError(f"scenario must be 1..7, got {self.scenario}")


def generate_scenario(spec: ScenarioSpec) -> Dataset:
    """Simulate (y, x1, x2, s) from the linear DGP and the chosen scenario.

    The returned dataset records the scenario's true response-model column
    (x1 except in scenario 7) in z; study code may override that designation
    when deliberately fitting a misspecified response model.
    """
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, spec.scenario, spec.n)))
    if spec.x_seed is not None:
        rng_x = np.random.default_rng(
            np.random.SeedSequence((spec.x_seed, spec.scenario, spec.n, 7)))
    else:
        rng_x = rng
    x = rng_x.standard_normal((spec.n, 2)) @ _COV_CHOL.T
    x1, x2 = x[:, 0], x[:, 1]
    y_full = DGP_BETA[0] + DGP_BETA[1] * x1 + DGP_BETA[2] * x2 \
        + np.sqrt(DGP_SIGMA2) * rng.standard_normal(spec.n)
    pi = scenario_response_prob(spec.scenario, y_full, x1, x2)
    s = (rng.random(spec.n) < pi).astype(int)
    z_col, z_name = (x2, "x2") if spec.scenario == 7 else (x1, "x1")
    return Dataset(
        y=np.where(s == 1, y_full, np.nan), s=s, x=x,
        z=z_col.reshape(-1, 1), x_names=["x1", "x2"], z_names=[z_name],
        y_full=y_full,
    )


def estimate_mu(draws: Draws, data: Dataset):
    """Posterior mean and central 95% interval of the finite-population mean.

    Each kept draw contributes the average of the observed responses and
    that draw's imputations; the point estimate averages those draws.
    """
    if draws.n_draws == 0:
        raise ValueError("no draws")
    est = float(draws.mu.mean())
    lo, hi = np.quantile(draws.mu, [0.025, 0.975])
    return est, float(lo), float(hi)


def _plugin_knots(draws: Draws, data: Dataset) -> np.ndarray:
    spec = draws.response_spec
    if spec.knot_strategy == "fixed":
        return spec.fixed_knots if spec.fixed_knots is not None else np.empty(0)
    if spec.n_knots == 0:
        return np.empty(0)
    a = float(draws.a_expand.mean()) if spec.adaptive else 0.0
    b = float(draws.b_expand.mean()) if spec.adaptive else 0.0
    return place_knots(data.y_obs, spec.n_knots, a, b)


def _selection_loglik(u: np.ndarray, s: np.ndarray) -> float:
    pi = np.clip(_logistic(u), 1e-300, 1.0 - 1e-16)
    return float(np.sum(np.where(s == 1, np.log(pi), np.log1p(-pi))))


def dic(draws: Draws, data: Dataset) -> float:
    """Deviance information criterion from the complete-data joint likelihood.

    Dbar averages the stored per-draw deviances (each draw evaluated at its
    own imputations); the plug-in deviance uses posterior means of the
    parameters and of the imputed responses. DIC = 2 Dbar - D(plug-in).
    """
    if draws.n_draws == 0:
        raise ValueError("no draws")
    dbar = -2.0 * float(draws.loglik.mean())

    spec = draws.response_spec
    y = data.y.copy()
    if data.n_missing:
        y[data.miss_idx] = draws.y_mis.mean(axis=0)
    knots = _plugin_knots(draws, data)
    u = power_basis(y, spec.degree) @ draws.phi.mean(axis=0)
    if knots.size:
        u = u + spline_basis(y, knots, spec.degree) @ draws.gamma.mean(axis=0)
    if spec.kind == "nr":
        u = u + rbf_design(data.z, draws.rbf) @ draws.xi.mean(axis=0)
    elif data.z.shape[1]:
        u = u + data.z @ draws.delta.mean(axis=0)

    X = data.x
    if draws.outcome_spec.add_intercept:
        X = np.column_stack([np.ones(data.n), X])
    mean = X @ draws.beta.mean(axis=0)
    if draws.v is not None:
        mean = mean + draws.v.mean(axis=0)[data.group]
    sigma2 = float(draws.sigma2.mean())
    resid2 = (y - mean) ** 2
    ll_hat = float(np.sum(-0.5 * np.log(2 * np.pi * sigma2) - resid2 / (2 * sigma2)))
    ll_hat += _selection_loglik(u, data.s)
    d_hat = -2.0 * ll_hat
    return 2.0 * dbar - d_hat


def posterior_summary(draws: Draws, names=None):
    """Mean / sd / quantile table of the scalar parameter tracks.

    Returns a list of dict rows with keys name, mean, sd, q025, q500, q975.
    """
    if draws.n_draws == 0:
        raise ValueError("no draws")
    rows = []
    for name, values in draws.scalar_columns():
        if names is not None and name not in names:
            continue
        q = np.quantile(values, [0.025, 0.5, 0.975])
        rows.append({
            "name": name,
            "mean": float(values.mean()),
            "sd": float(values.std(ddof=0)),
            "q025": float(q[0]),
            "q500": float(q[1]),
            "q975": float(q[2]),
        })
    return rows


# ---------------------------------------------------------------------------
# Replication study
# ---------------------------------------------------------------------------

METHODS = ("OR", "CC", "LR", "SR", "NR")


@dataclass
class StudyConfig:
    """Settings shared by every replication of a study."""

    n_burn: int = 2000
    n_keep: int = 3000
    thin: int = 1
    degree: int = 2
    n_knots: int = 10
    n_rbf: int = 10
    rbf_scale: float = 1.0
    knot_strategy: str = "quantile"
    mala_step: float = 0.25
    rw_sd: float = 0.1
    adapt_mala: bool = True
    master_seed: int = 7
    # Draw the covariates once per scenario/size cell, as in a conditional-
    # on-design study; replications then vary only the noise and the
    # missingness. Set False to redraw covariates every replication.
    fixed_covariates: bool = True
    workers: int | None = None


@dataclass
class MetricsRow:
    """One method on one scenario cell; values follow the x100 convention."""

    method: str
    scenario: int
    n: int
    n_reps: int
    n_failed: int
    mu_rmse: float = np.nan
    mu_bias: float = np.nan
    mu_sd: float = np.nan
    mu_cp: float = np.nan
    mu_al: float = np.nan
    beta1_rmse: float = np.nan
    beta1_bias: float = np.nan
    beta1_sd: float = np.nan
    beta1_cp: float = np.nan
    beta1_al: float = np.nan
    beta2_rmse: float = np.nan
    beta2_bias: float = np.nan
    beta2_sd: float = np.nan
    beta2_cp: float = np.nan
    beta2_al: float = np.nan
    dic_mean: float = np.nan

    FIELDS = ("method", "scenario", "n", "n_reps", "n_failed",
              "mu_rmse", "mu_bias", "mu_sd", "mu_cp", "mu_al",
              "beta1_rmse", "beta1_bias", "beta1_sd", "beta1_cp", "beta1_al",
              "beta2_rmse", "beta2_bias", "beta2_sd", "beta2_cp", "beta2_al",
              "dic_mean")


@dataclass
class ReplicationResult:
    rows: list
    raw: dict  # (scenario, n, method) -> dict of per-replication arrays


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def _derive_seed(*parts) -> int:
    return int(np.random.SeedSequence(tuple(int(p) for p in parts)).generate_state(1)[0])


def _ols_with_ci(X: np.ndarray, y: np.ndarray):
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    dof = max(y.size - X.shape[1], 1)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(X.T @ X)
    se = np.sqrt(np.diag(cov))
    return beta, beta - 1.96 * se, beta + 1.96 * se


def _mean_with_ci(values: np.ndarray):
    m = float(values.mean())
    se = float(values.std(ddof=1)) / np.sqrt(values.size)
    return m, m - 1.96 * se, m + 1.96 * se


def _design_with_intercept(x: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(x.shape[0]), x])


def _frequentist_estimates(data: Dataset, full: bool):
    """OR (full=True) or CC (full=False) estimates with normal-theory CIs."""
    if full:
        if data.y_full is None:
            raise ValueError("oracle method needs the simulated full responses")
        y, X = data.y_full, _design_with_intercept(data.x)
    else:
        y, X = data.y_obs, _design_with_intercept(data.x[data.obs_idx])
    mu = _mean_with_ci(y)
    beta, lo, hi = _ols_with_ci(X, y)
    return {
        "mu": mu,
        "beta1": (float(beta[1]), float(lo[1]), float(hi[1])),
        "beta2": (float(beta[2]), float(lo[2]), float(hi[2])),
        "dic": np.nan,
    }


def _response_spec_for(method: str, study: StudyConfig) -> ResponseModelSpec:
    if method == "LR":
        return ResponseModelSpec.lr()
    kind = "sr" if method == "SR" else "nr"
    return ResponseModelSpec(
        kind=kind, degree=study.degree, n_knots=study.n_knots,
        n_rbf=study.n_rbf, rbf_scale=study.rbf_scale,
        knot_strategy=study.knot_strategy,
    )


def _bayes_estimates(data: Dataset, method: str, study: StudyConfig,
                     prior: PriorConfig, chain_seed: int):
    config = McmcConfig(
        n_burn=study.n_burn, n_keep=study.n_keep, thin=study.thin,
        mala_step=study.mala_step, rw_sd=study.rw_sd, seed=chain_seed,
        adapt_mala=study.adapt_mala,
    )
    draws = run_chain(data, _response_spec_for(method, study), LinRegSpec(),
                      prior, config)
    mu = estimate_mu(draws, data)
    b1 = draws.beta[:, 1]
    b2 = draws.beta[:, 2]
    q1 = np.quantile(b1, [0.025, 0.975])
    q2 = np.quantile(b2, [0.025, 0.975])
    return {
        "mu": mu,
        "beta1": (float(b1.mean()), float(q1[0]), float(q1[1])),
        "beta2": (float(b2.mean()), float(q2[0]), float(q2[1])),
        "dic": dic(draws, data),
    }


def _one_replication(payload):
    scenario, n, rep, methods, study, prior = payload
    x_seed = _derive_seed(study.master_seed, scenario, n, 3) \
        if study.fixed_covariates else None
    spec = ScenarioSpec(
        scenario=scenario, n=n,
        seed=_derive_seed(study.master_seed, scenario, n, rep, 1),
        x_seed=x_seed,
    )
    data = generate_scenario(spec)
    # Methods always model the response with z = x1 and keep x2 as the
    # instrument, so scenario 7's response model is deliberately wrong.
    fit_data = Dataset(
        y=data.y, s=data.s, x=data.x, z=data.x[:, :1],
        x_names=["x1", "x2"], z_names=["x1"], y_full=data.y_full,
    )
    out = {}
    for im, method in enumerate(methods):
        try:
            if method == "OR":
                out[method] = _frequentist_estimates(fit_data, full=True)
            elif method == "CC":
                out[method] = _frequentist_estimates(fit_data, full=False)
            else:
                chain_seed = _derive_seed(study.master_seed, scenario, n, rep, 2, im)
                out[method] = _bayes_estimates(fit_data, method, study, prior,
                                               chain_seed)
        except Exception as exc:  # noqa: BLE001 - a failed rep is recorded
            out[method] = {"error": repr(exc)}
    return out


def _metric_triplet(est, lo, hi, truth):
    err = est - truth
    rmse = float(np.sqrt(np.mean(err**2)))
    bias = float(np.mean(err))
    sd = float(np.std(err, ddof=0))
    cp = float(np.mean((lo <= truth) & (truth <= hi)))
    al = float(np.mean(hi - lo))
    return 100 * rmse, 100 * bias, 100 * sd, 100 * cp, 100 * al


def replication_study(scenarios, n_values, n_reps: int, methods,
                      study: StudyConfig | None = None,
                      prior: PriorConfig | None = None) -> ReplicationResult:
    """Run the scenario x size grid and aggregate per-method metrics.

    Replications are independent and fan out over a process pool sized by
    the PGMNAR_WORKERS environment variable (default: all cores).
    """
    study = study or StudyConfig()
    prior = prior or PriorConfig()
    methods = list(methods)
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")

    rows, raw = [], {}
    for scenario in scenarios:
        for n in n_values:
            payloads = [(scenario, n, rep, methods, study, prior)
                        for rep in range(n_reps)]
            nw = worker_count(study.workers)
            if nw > 1 and n_reps > 1:
                with ProcessPoolExecutor(max_workers=nw) as pool:
                    results = list(pool.map(_one_replication, payloads,
                                            chunksize=max(1, n_reps // (4 * nw))))
            else:
                results = [_one_replication(p) for p in payloads]

            for method in methods:
                good = [r[method] for r in results if "error" not in r[method]]
                n_failed = n_reps - len(good)
                row = MetricsRow(method=method, scenario=scenario, n=n,
                                 n_reps=len(good), n_failed=n_failed)
                cell = {}
                if good:
                    for target, truth in (("mu", TRUE_MU),
                                          ("beta1", TRUE_BETA["beta1"]),
                                          ("beta2", TRUE_BETA["beta2"])):
                        est = np.array([g[target][0] for g in good])
                        lo = np.array([g[target][1] for g in good])
                        hi = np.array([g[target][2] for g in good])
                        vals = _metric_triplet(est, lo, hi, truth)
                        for suffix, val in zip(("rmse", "bias", "sd", "cp", "al"), vals):
                            setattr(row, f"{target}_{suffix}", val)
                        cell[target] = est
                        cell[f"{target}_lo"], cell[f"{target}_hi"] = lo, hi
                    dics = np.array([g["dic"] for g in good], dtype=float)
                    cell["dic"] = dics
                    if np.isfinite(dics).any():
                        row.dic_mean = float(np.nanmean(dics))
                rows.append(row)
                raw[(scenario, n, method)] = cell
    return ReplicationResult(rows=rows, raw=raw)


# ---------------------------------------------------------------------------
# Longitudinal (random-intercept) synthetic study
# ---------------------------------------------------------------------------

TIMES = np.array([1.0, 2.0, 4.0, 6.0, 8.0])


@dataclass
class LongitudinalSpec:
    """Two-arm longitudinal DGP: cubic-in-time group means, random
    intercepts, and a response model with a quadratic term in the outcome
    plus time, arm, and the lagged response indicator."""

    n_subjects: int = 300
    seed: int = 0
    beta_placebo: tuple = (2.0, 0.3, -0.05, 0.002)
    beta_treat: tuple = (1.2, 0.1, -0.05, 0.002)
    tau2: float = 0.5
    sigma2: float = 1.0
    g_coefs: tuple = (1.8, 1.0, -0.5)       # intercept, y, y^2
    delta: tuple = (-0.05, 0.2, 1.0)        # time, arm, lagged indicator
    times: np.ndarray = field(default_factory=lambda: TIMES.copy())


def _time_poly(t: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones_like(t), t, t**2, t**3])


def generate_longitudinal(spec: LongitudinalSpec) -> Dataset:
    """Simulate the two-arm longitudinal dataset with sequential missingness.

    x holds the eight arm-by-time-polynomial columns; z holds (time, arm);
    append the lagged indicator with Dataset.with_lagged_indicator before
    fitting the sequential response model.
    """
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, 5150)))
    m, T = spec.n_subjects, spec.times.size
    arm = (rng.random(m) < 0.5).astype(float)
    v = np.sqrt(spec.tau2) * rng.standard_normal(m)
    tp = _time_poly(spec.times)
    mean_by_arm = np.stack([tp @ np.asarray(spec.beta_placebo),
                            tp @ np.asarray(spec.beta_treat)])

    subject = np.repeat(np.arange(m), T)
    times = np.tile(spec.times, m)
    arm_rows = arm[subject]
    y_full = mean_by_arm[arm_rows.astype(int), np.tile(np.arange(T), m)] \
        + v[subject] + np.sqrt(spec.sigma2) * rng.standard_normal(m * T)

    g0, g1, g2 = spec.g_coefs
    d1, d2, d3 = spec.delta
    s = np.empty(m * T, dtype=int)
    s_prev = np.ones(m)
    for j, t in enumerate(spec.times):
        yj = y_full[np.arange(j, m * T, T)]
        u = g0 + g1 * yj + g2 * yj**2 + d1 * t + d2 * arm + d3 * s_prev
        sj = (rng.random(m) < _logistic(u)).astype(int)
        s[np.arange(j, m * T, T)] = sj
        s_prev = sj.astype(float)

    x = np.column_stack([tp[np.tile(np.arange(T), m)] * (1 - arm_rows)[:, None],
                         tp[np.tile(np.arange(T), m)] * arm_rows[:, None]])
    x_names = [f"pl_{p}" for p in ("1", "t", "t2", "t3")] \
        + [f"tr_{p}" for p in ("1", "t", "t2", "t3")]
    z = np.column_stack([times, arm_rows])
    return Dataset(
        y=np.where(s == 1, y_full, np.nan), s=s, x=x, z=z,
        group=subject, time=times, x_names=x_names, z_names=["time", "arm"],
        y_full=y_full,
    )


def treatment_difference(draws: Draws, times=TIMES):
    """Posterior mean and 95% interval of the arm difference curve.

    Assumes the eight-column arm-by-time-polynomial fixed-effect layout of
    generate_longitudinal (placebo block first).
    """
    tp = _time_poly(np.asarray(times, dtype=float))
    diff = draws.beta[:, 4:8] @ tp.T - draws.beta[:, 0:4] @ tp.T
    lo, hi = np.quantile(diff, [0.025, 0.975], axis=0)
    return diff.mean(axis=0), lo, hi
