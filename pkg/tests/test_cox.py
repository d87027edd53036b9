import math
import time

import numpy as np
import pytest

from tasil.survival import SurvivalRecord, cox_fit, cox_partial_loglik

from oracles import finite_difference_gradient, finite_difference_hessian


def random_instance(rng, n, p):
    times = rng.exponential(5.0, size=n) + 1e-3
    events = rng.random(n) > 0.3
    x = rng.normal(size=(n, p))
    names = [f"x{j}" for j in range(p)]
    records = [SurvivalRecord(f"r{i}", float(times[i]), bool(events[i]),
                              {name: float(x[i, j]) for j, name in enumerate(names)})
               for i in range(n)]
    return records, names


def exponential_cohort(rng, n, beta_true, lambda0=0.1, censor_horizon=None):
    """Exponential survival with hazard lambda0 * exp(beta_true * x), x binary."""
    x = (rng.random(n) < 0.5).astype(float)
    rate = lambda0 * np.exp(beta_true * x)
    event_time = rng.exponential(1.0 / rate)
    if censor_horizon is None:
        times, events = event_time, np.ones(n, dtype=bool)
    else:
        censor = rng.uniform(0, censor_horizon, size=n)
        times = np.minimum(event_time, censor)
        events = event_time <= censor
    return [SurvivalRecord(f"r{i}", float(max(times[i], 1e-9)), bool(events[i]), {"x": float(x[i])})
            for i in range(n)]


class TestPartialLoglik:
    def test_zero_beta_closed_form(self):
        # at beta = 0 the log-likelihood is -sum_j d_j * log |R_j|
        rng = np.random.default_rng(1)
        records, names = random_instance(rng, 25, 2)
        loglik, _, _ = cox_partial_loglik(np.zeros(2), records, names)
        times = np.array([r.time for r in records])
        events = np.array([r.event for r in records])
        expected = 0.0
        for t in np.unique(times[events]):
            d = int(((times == t) & events).sum())
            risk = int((times >= t).sum())
            expected -= d * math.log(risk)
        assert loglik == pytest.approx(expected, rel=1e-12)

    def test_gradient_and_hessian_match_finite_differences(self):
        rng = np.random.default_rng(2)
        worst_grad = worst_hess = 0.0
        for _ in range(20):
            n = int(rng.integers(10, 51))
            p = int(rng.integers(1, 4))
            records, names = random_instance(rng, n, p)
            beta = rng.normal(scale=0.5, size=p)

            def loglik_only(b):
                return cox_partial_loglik(np.asarray(b), records, names)[0]

            _, grad, hess = cox_partial_loglik(beta, records, names)
            fd_grad = np.array(finite_difference_gradient(loglik_only, list(beta)))
            fd_hess = np.array(finite_difference_hessian(loglik_only, list(beta)))
            scale_g = max(1.0, float(np.abs(fd_grad).max()))
            scale_h = max(1.0, float(np.abs(fd_hess).max()))
            worst_grad = max(worst_grad, float(np.abs(grad - fd_grad).max()) / scale_g)
            worst_hess = max(worst_hess, float(np.abs(hess - fd_hess).max()) / scale_h)
        assert worst_grad < 1e-6
        assert worst_hess < 1e-4  # second differences carry more truncation error

    def test_location_invariance(self):
        # adding a constant to a covariate shifts nothing that matters:
        # loglik differences and the gradient in beta are unchanged
        rng = np.random.default_rng(3)
        records, names = random_instance(rng, 30, 1)
        shifted = [SurvivalRecord(r.case_id, r.time, r.event, {"x0": r.covariates["x0"] + 5.0})
                   for r in records]
        for beta in ([0.3], [-0.7]):
            ll_a, grad_a, _ = cox_partial_loglik(np.array(beta), records, names)
            ll_b, grad_b, _ = cox_partial_loglik(np.array(beta), shifted, names)
            ll0_a = cox_partial_loglik(np.zeros(1), records, names)[0]
            ll0_b = cox_partial_loglik(np.zeros(1), shifted, names)[0]
            assert ll_a - ll0_a == pytest.approx(ll_b - ll0_b, rel=1e-9, abs=1e-9)
            assert grad_a[0] == pytest.approx(grad_b[0], rel=1e-9, abs=1e-9)

    def test_missing_covariate_is_error(self):
        records = [SurvivalRecord("a", 1.0, True, {"x": 1.0}),
                   SurvivalRecord("b", 2.0, True, {})]
        with pytest.raises(ValueError, match="missing covariate"):
            cox_partial_loglik(np.zeros(1), records, ["x"])


class TestCoxFit:
    def test_null_covariate_estimates_near_zero(self):
        rng = np.random.default_rng(4)
        records = exponential_cohort(rng, 500, beta_true=0.0)
        fit = cox_fit(records, ["x"])
        coefficient = fit["x"]
        assert fit.converged
        assert abs(coefficient.coef) < 3.0 * coefficient.se

    def test_recovers_planted_effect(self):
        estimates = []
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            records = exponential_cohort(rng, 500, beta_true=0.7)
            fit = cox_fit(records, ["x"])
            assert fit.converged
            estimates.append(fit["x"].coef)
        median = float(np.median(estimates))
        assert abs(median - 0.7) < 0.15

    def test_each_fit_under_one_second(self):
        rng = np.random.default_rng(5)
        records = exponential_cohort(rng, 500, beta_true=0.7)
        start = time.perf_counter()
        cox_fit(records, ["x"])
        assert time.perf_counter() - start < 1.0

    def test_separation_is_flagged_degenerate(self):
        # monotone likelihood: every event carries the strictly larger covariate
        # within its risk set, so the supremum sits at beta = +inf and Newton
        # runs away until the bound trips
        records = [SurvivalRecord("a", 1.0, True, {"x": 0.10}),
                   SurvivalRecord("b", 2.0, True, {"x": 0.05}),
                   SurvivalRecord("c", 3.0, False, {"x": 0.0})]
        fit = cox_fit(records, ["x"])
        assert fit.degenerate
        assert not fit.converged

    def test_fit_improves_on_null(self):
        rng = np.random.default_rng(6)
        records = exponential_cohort(rng, 200, beta_true=0.5)
        fit = cox_fit(records, ["x"])
        assert fit.loglik >= fit.loglik_null

    def test_ci_brackets_hazard_ratio(self):
        rng = np.random.default_rng(7)
        records = exponential_cohort(rng, 300, beta_true=0.4)
        coefficient = cox_fit(records, ["x"])["x"]
        assert coefficient.ci_low < coefficient.hazard_ratio < coefficient.ci_high

    def test_covariate_scaling_invariance(self):
        rng = np.random.default_rng(8)
        records = exponential_cohort(rng, 250, beta_true=0.6, censor_horizon=40.0)
        scaled = [SurvivalRecord(r.case_id, r.time, r.event, {"x": 10.0 * r.covariates["x"]})
                  for r in records]
        base = cox_fit(records, ["x"])["x"]
        other = cox_fit(scaled, ["x"])["x"]
        assert other.coef == pytest.approx(base.coef / 10.0, rel=1e-6, abs=1e-10)

    def test_wald_p_matches_normal_tail(self):
        rng = np.random.default_rng(9)
        records = exponential_cohort(rng, 200, beta_true=0.5)
        coefficient = cox_fit(records, ["x"])["x"]
        from tasil.special import normal_two_sided_p
        assert coefficient.p_value == pytest.approx(
            normal_two_sided_p(coefficient.coef / coefficient.se), abs=1e-14)

    def test_records_missing_covariates_are_excluded_and_counted(self):
        rng = np.random.default_rng(10)
        records = exponential_cohort(rng, 100, beta_true=0.5)
        records += [SurvivalRecord("nocov", 5.0, True, {})]
        fit = cox_fit(records, ["x"])
        assert fit.n_excluded == 1
        assert fit.n_used == 100

    def test_too_few_events_is_error(self):
        records = [SurvivalRecord("a", 1.0, True, {"x": 0.0}),
                   SurvivalRecord("b", 2.0, False, {"x": 1.0})]
        with pytest.raises(ValueError, match="at least 2 events"):
            cox_fit(records, ["x"])

    def test_constant_covariate_is_error(self):
        records = [SurvivalRecord(f"r{i}", float(i + 1), True, {"x": 2.0}) for i in range(5)]
        with pytest.raises(ValueError, match="constant"):
            cox_fit(records, ["x"])
