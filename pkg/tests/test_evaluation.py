import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_fit_dataset
from pgmnar.data import Dataset
from pgmnar.evaluation import (
    LongitudinalSpec,
    MetricsRow,
    ScenarioSpec,
    StudyConfig,
    dic,
    estimate_mu,
    generate_longitudinal,
    generate_scenario,
    posterior_summary,
    replication_study,
    scenario_response_prob,
    treatment_difference,
    worker_count,
)
from pgmnar.mcmc import McmcConfig, run_chain
from pgmnar.outcome import LinRegSpec
from pgmnar.response import PriorConfig, ResponseModelSpec


class TestGenerateScenario:
    def test_s1_probability_substitution(self):
        assert scenario_response_prob(1, 3.0, 0.0, 0.0) == pytest.approx(0.5)

    def test_response_rates(self):
        # scenario 3's complementary log-log form actually yields ~0.88,
        # outside the 70-80% band quoted for the study; its value here is
        # frozen from a large-sample evaluation of the written formula
        for scenario in range(1, 8):
            d = generate_scenario(ScenarioSpec(scenario=scenario, n=100_000, seed=5))
            rate = d.s.mean()
            if scenario == 3:
                assert abs(rate - 0.883) < 0.01
            else:
                assert 0.65 <= rate <= 0.85, f"S{scenario}: {rate}"

    def test_marginal_mean(self):
        d = generate_scenario(ScenarioSpec(scenario=1, n=1_000_000, seed=6))
        se = d.y_full.std() / 1000
        assert abs(d.y_full.mean() - 0.8) < 4 * se

    def test_instrument_designation(self):
        assert generate_scenario(ScenarioSpec(1, 100, 0)).z_names == ["x1"]
        assert generate_scenario(ScenarioSpec(7, 100, 0)).z_names == ["x2"]

    def test_determinism(self):
        a = generate_scenario(ScenarioSpec(2, 500, 9))
        b = generate_scenario(ScenarioSpec(2, 500, 9))
        assert np.array_equal(a.y_full, b.y_full)
        assert np.array_equal(a.s, b.s)

    def test_missingness_follows_analytic_probability(self):
        # chi-square goodness of fit on deciles of pi
        d = generate_scenario(ScenarioSpec(scenario=1, n=1_000_000, seed=7))
        pi = scenario_response_prob(1, d.y_full, d.x[:, 0], d.x[:, 1])
        bins = np.quantile(pi, np.linspace(0, 1, 11))
        bins[0], bins[-1] = 0.0, 1.0
        chi2 = 0.0
        for lo, hi in zip(bins[:-1], bins[1:]):
            m = (pi >= lo) & (pi < hi)
            expected = pi[m].sum()
            var = (pi[m] * (1 - pi[m])).sum()
            chi2 += (d.s[m].sum() - expected) ** 2 / var
        from scipy import stats

        assert stats.chi2(df=10).sf(chi2) > 0.001

    def test_bad_scenario_rejected(self):
        with pytest.raises(ValueError):
            ScenarioSpec(scenario=8, n=10, seed=0)


def _tiny_chain(data, n_keep=60, seed=3, kind="sr"):
    return run_chain(data, ResponseModelSpec(kind=kind), LinRegSpec(),
                     PriorConfig(), McmcConfig(n_burn=60, n_keep=n_keep, seed=seed))


class TestEstimateMu:
    def test_no_missing_zero_width(self):
        data = make_fit_dataset(1, 120, seed=71)
        full = Dataset(y=data.y_full, s=np.ones(120, dtype=int), x=data.x,
                       z=data.z, y_full=data.y_full)
        draws = _tiny_chain(full)
        est, lo, hi = estimate_mu(draws, full)
        assert est == pytest.approx(full.y.mean())
        assert hi - lo == pytest.approx(0.0, abs=1e-12)

    def test_single_draw(self):
        data = make_fit_dataset(1, 120, seed=72)
        draws = run_chain(data, ResponseModelSpec(kind="sr"), LinRegSpec(),
                          PriorConfig(), McmcConfig(n_burn=30, n_keep=1, seed=4))
        est, lo, hi = estimate_mu(draws, data)
        assert est == pytest.approx(draws.mu[0])
        assert lo == pytest.approx(est) and hi == pytest.approx(est)

    def test_s1_estimate_in_sanity_band(self):
        data = make_fit_dataset(1, 500, seed=73)
        draws = run_chain(data, ResponseModelSpec(kind="sr"), LinRegSpec(),
                          PriorConfig(),
                          McmcConfig(n_burn=300, n_keep=500, seed=5))
        est, _, _ = estimate_mu(draws, data)
        assert -1.0 < est < 2.0


class TestDic:
    def test_degenerate_chain_has_zero_penalty(self):
        data = make_fit_dataset(1, 120, seed=74)
        draws = run_chain(data, ResponseModelSpec(kind="sr"), LinRegSpec(),
                          PriorConfig(), McmcConfig(n_burn=40, n_keep=1, seed=6))
        # replicate the single draw so every 'posterior mean' is that draw
        for name in ("phi", "gamma", "delta", "xi", "lam", "lam_xi", "a_expand",
                     "b_expand", "beta", "sigma2", "y_mis", "mu", "loglik",
                     "mala_rate", "knot_accept"):
            arr = getattr(draws, name)
            if arr is not None:
                setattr(draws, name, np.repeat(arr, 40, axis=0))
        value = dic(draws, data)
        assert value == pytest.approx(-2.0 * draws.loglik[0], rel=1e-9)

    def test_affine_shift_property(self):
        # a constant shift c in every per-draw log likelihood moves both the
        # averaged and the plug-in deviance by -2c, hence DIC by -2c
        dbar, dhat, c = 350.0, 320.0, 7.5
        dic_before = 2 * dbar - dhat
        dic_after = 2 * (dbar - 2 * c) - (dhat - 2 * c)
        assert dic_after == pytest.approx(dic_before - 2 * c)

    def test_sr_beats_lr_on_quadratic_missingness(self):
        # one replication of the qualitative ordering; the replication-level
        # direction is asserted in the acceptance suite
        data = make_fit_dataset(4, 400, seed=75)
        cfg = McmcConfig(n_burn=400, n_keep=600, seed=7)
        sr = run_chain(data, ResponseModelSpec(kind="sr"), LinRegSpec(),
                       PriorConfig(), cfg)
        lr = run_chain(data, ResponseModelSpec.lr(), LinRegSpec(),
                       PriorConfig(), cfg)
        assert np.isfinite(dic(sr, data)) and np.isfinite(dic(lr, data))

    def test_empty_draws_rejected(self):
        data = make_fit_dataset(1, 80, seed=76)
        draws = _tiny_chain(data, n_keep=1)
        draws.loglik = np.empty(0)
        draws.beta = np.empty((0, 3))
        with pytest.raises(ValueError):
            dic(draws, data)


class TestPosteriorSummary:
    def test_constant_draws(self):
        data = make_fit_dataset(1, 100, seed=77)
        draws = run_chain(data, ResponseModelSpec(kind="sr"), LinRegSpec(),
                          PriorConfig(), McmcConfig(n_burn=30, n_keep=1, seed=8))
        for name in ("phi", "gamma", "delta", "xi", "lam", "lam_xi", "a_expand",
                     "b_expand", "beta", "sigma2", "y_mis", "mu", "loglik",
                     "mala_rate", "knot_accept"):
            arr = getattr(draws, name)
            if arr is not None:
                setattr(draws, name, np.repeat(arr, 10, axis=0))
        rows = posterior_summary(draws)
        for row in rows:
            assert row["sd"] == pytest.approx(0.0, abs=1e-14)
            assert row["q025"] == pytest.approx(row["q975"])

    def test_two_value_mean(self):
        data = make_fit_dataset(1, 100, seed=78)
        draws = _tiny_chain(data, n_keep=2)
        draws.mu = np.array([0.0, 1.0])
        rows = {r["name"]: r for r in posterior_summary(draws)}
        assert rows["mu"]["mean"] == pytest.approx(0.5)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=15, deadline=None)
    def test_quantiles_monotone(self, seed):
        data = make_fit_dataset(1, 80, seed=79)
        draws = _tiny_chain(data, n_keep=40, seed=seed % 1000)
        for row in posterior_summary(draws):
            assert row["q025"] <= row["q500"] <= row["q975"]


@pytest.fixture(scope="module")
def or_cc_result():
    study = StudyConfig(workers=1, fixed_covariates=False)
    return replication_study([1], [400], 200, ["OR", "CC"], study)


class TestReplicationStudy:

    def test_oracle_unbiased(self, or_cc_result):
        row = next(r for r in or_cc_result.rows if r.method == "OR")
        se = row.mu_sd / np.sqrt(row.n_reps)
        assert abs(row.mu_bias) < 4 * se

    def test_oracle_coverage_in_band(self, or_cc_result):
        row = next(r for r in or_cc_result.rows if r.method == "OR")
        assert 90.0 <= row.mu_cp <= 99.0

    def test_cc_bias_matches_population_value(self, or_cc_result):
        # population complete-case bias of scenario 1 is about -18.0 x100,
        # frozen from a 4x10^6-draw Monte Carlo evaluation of the DGP
        row = next(r for r in or_cc_result.rows if r.method == "CC")
        assert abs(row.mu_bias - (-18.0)) < 2.5

    def test_rmse_identity(self, or_cc_result):
        for row in or_cc_result.rows:
            for t in ("mu", "beta1", "beta2"):
                rmse = getattr(row, f"{t}_rmse") / 100
                bias = getattr(row, f"{t}_bias") / 100
                sd = getattr(row, f"{t}_sd") / 100
                assert abs(rmse**2 - (bias**2 + sd**2)) < 1e-10

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            replication_study([1], [100], 2, ["XX"], StudyConfig(workers=1))

    def test_bayes_method_smoke_parallel(self):
        study = StudyConfig(n_burn=80, n_keep=80, workers=2)
        result = replication_study([1], [120], 4, ["CC", "SR"], study)
        sr = next(r for r in result.rows if r.method == "SR")
        assert sr.n_reps == 4 and sr.n_failed == 0
        assert np.isfinite(sr.dic_mean)
        assert abs(sr.mu_bias) < 60

    def test_worker_count_env(self, monkeypatch):
        monkeypatch.setenv("PGMNAR_WORKERS", "3")
        assert worker_count() == 3
        assert worker_count(5) == 5
        monkeypatch.delenv("PGMNAR_WORKERS")
        assert worker_count() >= 1


class TestLongitudinal:
    def test_shapes_and_rate(self):
        d = generate_longitudinal(LongitudinalSpec(n_subjects=400, seed=3))
        assert d.n == 2000
        assert d.x.shape == (2000, 8)
        assert 0.6 <= d.s.mean() <= 0.95
        lagged = d.with_lagged_indicator()
        assert lagged.z.shape[1] == 3
        first = lagged.time == 1.0
        assert np.all(lagged.z[first, 2] == 1.0)

    def test_lag_matches_previous_indicator(self):
        d = generate_longitudinal(LongitudinalSpec(n_subjects=50, seed=4))
        lagged = d.with_lagged_indicator()
        for i in range(50):
            rows = np.where(d.group == i)[0]
            order = rows[np.argsort(d.time[rows])]
            assert np.all(lagged.z[order[1:], 2] == d.s[order[:-1]])

    def test_treatment_difference_shape(self):
        d = generate_longitudinal(LongitudinalSpec(n_subjects=80, seed=5))
        lagged = d.with_lagged_indicator()
        from pgmnar.outcome import LmmSpec

        draws = run_chain(lagged, ResponseModelSpec(kind="sr", n_knots=5),
                          LmmSpec(), PriorConfig(),
                          McmcConfig(n_burn=50, n_keep=50, seed=6))
        est, lo, hi = treatment_difference(draws)
        assert est.shape == (5,)
        assert np.all(lo <= hi)


def test_metrics_row_fields_cover_csv_header():
    assert MetricsRow.FIELDS[0] == "method"
    assert "dic_mean" in MetricsRow.FIELDS
