import math

import numpy as np
import pytest

from npsigtest.bootstrap import (
    MAMMEN_HIGH,
    MAMMEN_LOW,
    MAMMEN_P_LOW,
    MultiplierLaw,
    TestConfig,
    bootstrap_critical_value,
    draw_multipliers,
    null_resample,
    resample_response,
    run_test,
)
from npsigtest.data import Dataset, all_continuous, standardize
from npsigtest.kernels import Bandwidths, PsiSpec, default_bandwidths
from npsigtest.selfcheck import multiplier_moment_exact, _Q5
from npsigtest.smoother import compute_smoother
from npsigtest.statistics import DegenerateStatisticError, StatEngine

from conftest import make_dataset


def wide_case(seed=41, n=25):
    """Dataset plus smoother with bandwidth wide enough that no observation
    is isolated (every leave-one-out density is positive)."""
    d = make_dataset(seed, n, q=1)
    sd = standardize(d)
    bw = Bandwidths(g=4.0, h=1.0, c=1.0)
    sm = compute_smoother(sd, bw.g)
    assert np.all(sm.fhat > 0)
    return d, sd, sm, bw


class TestMultipliers:
    def test_probabilities_sum_to_one(self):
        assert MAMMEN_P_LOW + (5.0 - math.sqrt(5.0)) / 10.0 == pytest.approx(1.0, rel=1e-15)

    def test_exact_moments_symbolically(self):
        assert multiplier_moment_exact(1) == _Q5(0)
        assert multiplier_moment_exact(2) == _Q5(1)
        assert multiplier_moment_exact(3) == _Q5(1)

    def test_two_point_support(self):
        draws = draw_multipliers(
            1000, MultiplierLaw.MAMMEN_TWO_POINT, np.random.default_rng(3)
        )
        assert set(np.unique(draws)) == {MAMMEN_LOW, MAMMEN_HIGH}

    def test_empirical_moments(self):
        n = 1_000_000
        draws = draw_multipliers(
            n, MultiplierLaw.MAMMEN_TWO_POINT, np.random.default_rng(99)
        )
        assert abs(draws.mean()) < 3e-3
        assert abs((draws**2).mean() - 1.0) < 4e-3
        assert abs((draws**3).mean() - 1.0) < 8e-3


class TestResample:
    def test_zero_eta_returns_fit(self):
        _, _, sm, _ = wide_case()
        ystar = resample_response(sm, np.zeros(25))
        assert np.allclose(ystar, sm.rhat, atol=0)

    def test_unit_eta_returns_response(self):
        d, _, sm, _ = wide_case()
        ystar = resample_response(sm, np.ones(25))
        assert np.allclose(ystar, d.y, rtol=1e-14)

    def test_constant_response_fixed_point(self):
        rng = np.random.default_rng(8)
        d = Dataset(
            y=np.full(12, 2.5),
            w=rng.standard_normal((12, 2)),
            x=rng.standard_normal((12, 1)),
            w_kinds=all_continuous(2),
            x_kinds=all_continuous(1),
        )
        sd = standardize(d)
        sm = compute_smoother(sd, 5.0)
        eta = draw_multipliers(12, MultiplierLaw.MAMMEN_TWO_POINT, rng)
        assert np.allclose(resample_response(sm, eta), d.y, atol=1e-12)

    def test_isolated_observation_errors(self):
        d = make_dataset(42, 20, q=1)
        sd = standardize(d)
        sm = compute_smoother(sd, 1e-6)
        with pytest.raises(DegenerateStatisticError, match="increase g"):
            resample_response(sm, np.ones(20))

    def test_null_resample_neutralizes_isolated(self):
        d = make_dataset(43, 40, q=1)
        sd = standardize(d)
        sm = compute_smoother(sd, 0.35)  # narrow enough to isolate someone
        isolated = sm.fhat <= 0
        assert isolated.any()
        ystar = null_resample(sm, d.y, np.full(40, -0.6))
        assert np.all(np.isfinite(ystar))
        assert np.array_equal(ystar[isolated], d.y[isolated])

    def test_isolated_response_value_is_irrelevant(self):
        # the kernel row of an isolated observation vanishes, so any choice
        # of its resampled response leaves every statistic unchanged
        d = make_dataset(43, 40, q=1)
        sd = standardize(d)
        bw = Bandwidths(g=0.35, h=0.5, c=1.0)
        sm = compute_smoother(sd, bw.g)
        isolated = np.where(sm.fhat <= 0)[0]
        assert isolated.size > 0
        eng = StatEngine(sd, sm, bw.h)
        ystar = null_resample(sm, d.y, np.full(40, 1.3))
        poked = ystar.copy()
        poked[isolated] += 123.0
        assert eng.itilde(ystar) == eng.itilde(poked)
        assert eng.var_hat(eng.uf_of(ystar)) == eng.var_hat(eng.uf_of(poked))


class TestBootstrapCriticalValue:
    def test_single_draw_is_critical(self):
        d, sd, sm, bw = wide_case()
        cfg = TestConfig(bandwidths=bw, B=1, seed=5, alpha=0.05)
        critical, draws = bootstrap_critical_value(sd, sm, cfg)
        assert len(draws) == 1
        assert critical == draws[0]

    def test_rank_convention_199(self):
        d, sd, sm, bw = wide_case()
        cfg = TestConfig(bandwidths=bw, B=199, seed=6, alpha=0.05)
        critical, draws = bootstrap_critical_value(sd, sm, cfg)
        assert len(draws) == 199
        assert critical == np.sort(draws)[189]  # ceil(0.95 * 200) = 190th

    def test_deterministic_bit_for_bit(self):
        d, sd, sm, bw = wide_case()
        cfg = TestConfig(bandwidths=bw, B=37, seed=123)
        c1, d1 = bootstrap_critical_value(sd, sm, cfg)
        c2, d2 = bootstrap_critical_value(sd, sm, cfg)
        assert c1 == c2
        assert np.array_equal(d1, d2)

    def test_alpha_monotonicity_on_stored_draws(self):
        d, sd, sm, bw = wide_case()
        cfg = TestConfig(bandwidths=bw, B=99, seed=9, alpha=0.05)
        _, draws = bootstrap_critical_value(sd, sm, cfg)
        ordered = np.sort(draws)
        crits = []
        for alpha in (0.01, 0.05, 0.10, 0.25, 0.5):
            rank = min(max(math.ceil((1 - alpha) * (len(draws) + 1)), 1), len(draws))
            crits.append(ordered[rank - 1])
        assert all(a >= b for a, b in zip(crits, crits[1:]))

    def test_requires_bootstrap_config(self):
        d, sd, sm, bw = wide_case()
        cfg = TestConfig(bandwidths=bw, critical="asymptotic")
        with pytest.raises(ValueError, match="bootstrap"):
            bootstrap_critical_value(sd, sm, cfg)


class TestRunTest:
    def test_asymptotic_critical_value(self):
        d = make_dataset(51, 60, q=1)
        cfg = TestConfig(
            bandwidths=default_bandwidths(60, 2.0), critical="asymptotic", alpha=0.10
        )
        res = run_test(d, cfg)
        assert res.critical_value == pytest.approx(1.2816, abs=5e-5)

    def test_constant_response_bootstrap_degenerate(self):
        rng = np.random.default_rng(12)
        d = Dataset(
            y=np.full(30, 1.0),
            w=rng.standard_normal((30, 2)),
            x=rng.standard_normal((30, 1)),
            w_kinds=all_continuous(2),
            x_kinds=all_continuous(1),
        )
        cfg = TestConfig(bandwidths=default_bandwidths(30, 2.0))
        with pytest.raises(DegenerateStatisticError, match="degenerate"):
            run_test(d, cfg)

    def test_reproducible_results(self):
        d = make_dataset(52, 50, q=2)
        cfg = TestConfig(bandwidths=default_bandwidths(50, 2.0), B=99, seed=314)
        r1 = run_test(d, cfg)
        r2 = run_test(d, cfg)
        assert r1.statistic_value.standardized == r2.statistic_value.standardized
        assert r1.critical_value == r2.critical_value
        assert np.array_equal(r1.bootstrap_draws, r2.bootstrap_draws)

    def test_reject_consistency_flag(self):
        d = make_dataset(53, 50, q=1)
        cfg = TestConfig(bandwidths=default_bandwidths(50, 2.0), B=49, seed=2, alpha=0.5)
        res = run_test(d, cfg)
        assert res.reject == (res.statistic_value.standardized > res.critical_value)

    def test_dgm_requires_bootstrap(self):
        with pytest.raises(ValueError, match="non-pivotal"):
            TestConfig(
                bandwidths=Bandwidths(g=1.0, h=1.0),
                statistic="dgm",
                critical="asymptotic",
            )

    def test_dgm_end_to_end(self):
        d = make_dataset(54, 40, q=1)
        cfg = TestConfig(
            bandwidths=default_bandwidths(40, 2.0), statistic="dgm", B=49, seed=3
        )
        res = run_test(d, cfg)
        assert res.statistic_value.raw >= 0.0
        assert res.statistic_value.standardized == res.statistic_value.raw
        assert math.isnan(res.statistic_value.variance)

    def test_lv_discrete_x_message(self):
        from npsigtest.selfcheck import random_dataset

        d = random_dataset(4, 30, q=1, discrete_x=True)
        cfg = TestConfig(bandwidths=default_bandwidths(30, 2.0), statistic="lv")
        with pytest.raises(ValueError, match="LV requires continuous X"):
            run_test(d, cfg)

    def test_var_tilde_fallback_flagged(self):
        # tiny h makes the six-index estimator vanish while the statistic is
        # fine, forcing the documented fallback to the pair-sum estimator
        d = make_dataset(55, 30, q=1)
        cfg = TestConfig(
            bandwidths=Bandwidths(g=2.0, h=2.0, c=1.0),
            variance="var_tilde",
            critical="asymptotic",
        )
        res = run_test(d, cfg)
        assert "fallback_used" in res.diagnostics

    def test_record_is_flat_and_versioned(self):
        d = make_dataset(56, 40, q=1)
        cfg = TestConfig(bandwidths=default_bandwidths(40, 2.0), B=29, seed=8)
        rec = run_test(d, cfg).to_record()
        assert rec["schema_version"] == 1
        assert all(np.isscalar(v) or isinstance(v, (bool, str)) for v in rec.values())


class TestReuseCorrectness:
    def test_scratch_equals_cached(self):
        d, sd, sm, bw = wide_case(seed=60, n=30)
        eng = StatEngine(sd, sm, bw.h, psi=PsiSpec("normal"))
        eta = draw_multipliers(30, MultiplierLaw.MAMMEN_TWO_POINT, np.random.default_rng(17))
        ystar = null_resample(sm, d.y, eta)
        fast_uf = eng.uf_of(ystar)
        fast_itilde = eng.itilde(ystar)
        fast_var = eng.var_hat(fast_uf)

        fresh = Dataset(
            y=ystar, w=d.w, x=d.x, w_kinds=d.w_kinds, x_kinds=d.x_kinds
        )
        sdf = standardize(fresh)
        smf = compute_smoother(sdf, bw.g)
        from npsigtest.statistics import stat_itilde, var_hat

        assert np.allclose(smf.uf, fast_uf, rtol=1e-12, atol=1e-15)
        assert stat_itilde(smf, sdf, bw.h) == pytest.approx(fast_itilde, rel=1e-12)
        assert var_hat(smf, sdf, bw.h) == pytest.approx(fast_var, rel=1e-12)
