import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simplex_dp.estimators import (
    EstimatorId,
    balance_split,
    center_release,
    default_split,
    equalize_noise_variances,
    inverse_variance_weight,
    multidim_release,
    plugin_release,
    refine_count,
    release_count,
    resize_release,
    run_estimator,
    simplex_known_n_release,
    simplex_release,
)
from simplex_dp.harness import monte_carlo
from simplex_dp.mechanisms import NoiseSource
from simplex_dp.privacy_core import (
    Bounds,
    EstimateWithVariance,
    Norm,
    PureDP,
    ZCDP,
    compose,
    noise_variance_for,
)
from simplex_dp.transforms import Imputation

B100 = Bounds(0, 100)
INT_DATA = np.arange(100.0)  # integers: every sum below is exact


@pytest.fixture
def zero():
    return NoiseSource.zero_noise(non_private=True)


ALL = list(EstimatorId)


class TestSimplex:
    def test_free_count_zero_noise(self, zero):
        r = simplex_release(INT_DATA, B100, ZCDP(0.5), zero)
        assert r.count_estimate.value == 100.0
        assert r.count_estimate.variance == 2.0
        assert r.sum_estimate.variance == 10000.0
        assert r.mean == INT_DATA.mean()

    def test_laplace_count_variance(self, zero):
        r = simplex_release(INT_DATA, B100, PureDP(0.5), zero)
        assert r.count_estimate.variance == pytest.approx(4 / 0.5**2)
        assert r.sum_estimate.variance == 2 * (100 / 0.5) ** 2

    def test_free_count_variance_independent_of_R(self, zero):
        for width in (1.0, 7.0, 1e3):
            r = simplex_release([0.0], Bounds(0, width), ZCDP(0.25), zero)
            assert r.count_estimate.variance == pytest.approx(1 / 0.25, rel=1e-14)

    def test_empty_data_is_finite(self):
        r = simplex_release([], B100, ZCDP(0.5), NoiseSource.seeded(5))
        assert math.isfinite(r.mean)

    def test_guard_floor(self):
        # one record plus heavy noise: noisy count often negative
        means = [simplex_release([50.0], B100, ZCDP(0.01), NoiseSource.seeded(s)).mean
                 for s in range(200)]
        assert all(math.isfinite(m) for m in means)

    def test_laplace_count_monte_carlo(self):
        counts = monte_carlo(
            lambda s: simplex_release(INT_DATA, B100, PureDP(1.0), s).count_estimate.value,
            20_000, 11, 1)
        # sum of two Laplace(1): variance 4, Var(sample var) ~ 56 / n
        assert abs(counts.var(ddof=1) - 4.0) <= 3 * math.sqrt(56 / counts.size)


class TestKnownN:
    def test_half_variance(self, zero):
        r = simplex_known_n_release(INT_DATA, 100, B100, ZCDP(0.5), zero)
        assert r.sum_estimate.variance == 5000.0
        assert r.sum_estimate.value == INT_DATA.sum()
        assert r.count_estimate is None

    @pytest.mark.parametrize("budget", [ZCDP(0.5), ZCDP(3.0), PureDP(0.5), PureDP(2.0)])
    def test_exactly_half_of_simplex(self, zero, budget):
        full = simplex_release(INT_DATA, B100, budget, zero)
        known = simplex_known_n_release(INT_DATA, 100, B100, budget, zero)
        assert known.sum_estimate.variance == 0.5 * full.sum_estimate.variance

    def test_laplace_variance(self, zero):
        r = simplex_known_n_release(INT_DATA, 100, B100, PureDP(0.5), zero)
        assert r.sum_estimate.variance == (100 / 0.5) ** 2

    @pytest.mark.parametrize("n", [0, -3, 2.5])
    def test_bad_n(self, zero, n):
        with pytest.raises(ValueError):
            simplex_known_n_release(INT_DATA, n, B100, ZCDP(1), zero)


class TestSplits:
    def test_equalize_noise_variances(self):
        for budget in (ZCDP(0.5), PureDP(0.5)):
            f = equalize_noise_variances(B100, budget)
            sum_b, count_b = budget.scaled(f), budget.scaled(1 - f)
            v_sum = noise_variance_for(sum_b, 100, budget.norm)
            v_count = noise_variance_for(count_b, 1, budget.norm)
            assert v_sum == pytest.approx(v_count, rel=1e-9)
        assert equalize_noise_variances(B100, ZCDP(0.5)) == pytest.approx(100**2 / (100**2 + 1))
        assert equalize_noise_variances(B100, PureDP(0.5)) == pytest.approx(100 / 101)

    def test_default_split_values(self):
        assert default_split(EstimatorId.PLUGIN, B100, ZCDP(0.5)) == pytest.approx(0.8)
        assert default_split(EstimatorId.PLUGIN, B100, PureDP(0.5)) == pytest.approx(2 / 3)
        assert default_split(EstimatorId.RESIZE, Bounds(-5, 5), ZCDP(1)) == pytest.approx(0.8)
        assert default_split(EstimatorId.CENTER, B100, ZCDP(0.5)) == 0.5
        assert default_split(EstimatorId.CENTER, B100, PureDP(0.5)) == 0.5

    @given(st.floats(0.1, 1e3), st.floats(0.1, 1e3), st.sampled_from([ZCDP(0.7), PureDP(0.7)]))
    def test_balance_split_balances(self, s, c, budget):
        f = balance_split(s, c, budget)
        v_sum = noise_variance_for(budget.scaled(f), s, budget.norm)
        v_count = noise_variance_for(budget.scaled(1 - f), 1, budget.norm)
        assert v_sum == pytest.approx(c * c * v_count, rel=1e-6)


class TestBaselines:
    def test_plugin_half_split_doubles_sum_variance(self, zero):
        for budget in (ZCDP(0.5), PureDP(0.5)):
            p = plugin_release(INT_DATA, B100, budget, 0.5, zero)
            s = simplex_release(INT_DATA, B100, budget, zero)
            ratio = p.sum_estimate.variance / s.sum_estimate.variance
            assert ratio == (2.0 if isinstance(budget, ZCDP) else 4.0)
            if isinstance(budget, ZCDP):
                # same count variance as the free count, despite half the budget
                assert p.count_estimate.variance == s.count_estimate.variance

    @pytest.mark.parametrize("f", [0, 1, 1.2])
    def test_bad_split(self, zero, f):
        with pytest.raises(ValueError):
            plugin_release(INT_DATA, B100, ZCDP(1), f, zero)

    def test_center_examples(self, zero):
        r = center_release([50, 50], B100, ZCDP(0.5), None, zero)
        m = r.releases[0]
        assert m.values[0] == 0.0 and r.mean == 50.0
        # sensitivity 50 at half the budget
        assert m.noise_variance[0] == noise_variance_for(ZCDP(0.25), 50, Norm.L2)

    def test_center_sum_variance(self, zero):
        r = center_release(INT_DATA, B100, ZCDP(0.5), 0.5, zero)
        assert r.sum_estimate.value == INT_DATA.sum()
        # Var(n_hat) = 1 / (2 * 0.25), Var(m) = 50**2 / (2 * 0.25)
        assert r.sum_estimate.variance == 50**2 * 2.0 + 2500 / (2 * 0.25)

    def test_resize_zero_noise(self, zero):
        r = resize_release(INT_DATA, B100, ZCDP(0.5), None, Imputation.UNIFORM, zero)
        assert r.mean == INT_DATA.mean()

    def test_resize_runs_both_directions(self):
        seen = set()
        for seed in range(40):
            r = resize_release([10.0, 20.0, 30.0], B100, ZCDP(0.05), 0.5, Imputation.MIDPOINT,
                               NoiseSource.seeded(seed))
            seen.add(np.sign(round(r.count_estimate.value) - 3))
            assert math.isfinite(r.mean)  # noisy sum may leave [0, 100]
        assert {-1, 1} <= seen


class TestInvariants:
    @pytest.mark.parametrize("est", ALL)
    @pytest.mark.parametrize("budget", [ZCDP(0.5), PureDP(0.5)])
    def test_zero_noise_exactness(self, est, budget, zero):
        data = np.random.default_rng(3).uniform(-3, 9, 57)
        b = Bounds(-3, 9)
        r = run_estimator(est, data, b, budget, zero)
        assert r.mean == pytest.approx(data.mean(), abs=1e-12 * b.width())

    @pytest.mark.parametrize("est", ALL)
    @pytest.mark.parametrize("budget", [ZCDP(0.5), PureDP(1.5)])
    def test_budget_bookkeeping(self, est, budget):
        r = run_estimator(est, INT_DATA, B100, budget, NoiseSource.seeded(1))
        assert r.budget_charged == compose(rel.budget_charged for rel in r.releases)
        assert r.budget_charged.value == pytest.approx(budget.value, rel=1e-15)

    @pytest.mark.parametrize("est", ALL)
    def test_shift_equivariance(self, est):
        c = 1024.0
        a = run_estimator(est, INT_DATA, B100, ZCDP(0.5), NoiseSource.seeded(9))
        b = run_estimator(est, INT_DATA + c, Bounds(c, 100 + c), ZCDP(0.5), NoiseSource.seeded(9))
        assert b.mean - a.mean == pytest.approx(c, abs=1e-9)

    def test_weights_all_ones_bit_identical(self):
        x = np.random.default_rng(0).uniform(0, 100, 64)
        for budget in (ZCDP(0.5), PureDP(0.5)):
            a = simplex_release(x, B100, budget, NoiseSource.seeded(42))
            b = simplex_release(x, B100, budget, NoiseSource.seeded(42), weights=np.ones(64))
            assert a == b

    def test_weighted_mean_zero_noise(self, zero):
        x = np.array([1.0, 2.0, 3.0])
        w = np.array([2.0, 1.0, 0.5])
        r = simplex_release(x, Bounds(0, 4), ZCDP(1), zero, weights=w, weight_bound=2)
        assert r.sum_estimate.value == pytest.approx((w * x).sum())
        assert r.count_estimate.value == pytest.approx(3)


class TestRefineCount:
    def test_weight_example(self):
        assert inverse_variance_weight(1 / 0.5, 1 / (2 * 0.5)) == pytest.approx(1 / 3, rel=1e-15)

    def test_equal_variances_average(self):
        r = refine_count(EstimateWithVariance(10, 2), EstimateWithVariance(14, 2))
        assert r.value == 12 and r.variance == 1

    def test_combined_variance(self):
        rho, rho_p = 0.5, 0.25
        v1, v2 = 1 / rho, 1 / (2 * rho_p)
        r = refine_count(EstimateWithVariance(0, v1), EstimateWithVariance(0, v2))
        w = inverse_variance_weight(v1, v2)
        assert w == pytest.approx(rho / (rho + 2 * rho_p))
        assert r.variance == pytest.approx(w**2 * v1 + (1 - w) ** 2 * v2)
        assert r.variance == pytest.approx(1.0)

    def test_accepts_release(self, zero):
        free = simplex_release(INT_DATA, B100, ZCDP(0.5), zero).count_estimate
        extra = release_count(100, ZCDP(0.5), zero)
        r = refine_count(free, extra)
        assert r.value == 100 and r.variance == pytest.approx(1 / (0.5 + 1.0))

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_never_worse(self, v1, v2):
        r = refine_count(EstimateWithVariance(0, v1), EstimateWithVariance(0, v2))
        assert r.variance <= min(v1, v2) * (1 + 1e-12)

    def test_rejects_zero_variance(self):
        with pytest.raises(ValueError):
            refine_count(EstimateWithVariance(0, 0), EstimateWithVariance(0, 1))


class TestMultidim:
    def test_zero_noise(self, zero):
        rows = np.array([[1.0, 2.0], [0.0, 3.0], [4.0, 0.0]])
        r = multidim_release(rows, 10, ZCDP(1), zero)
        assert [s.value for s in r.sums] == [5.0, 5.0]
        assert r.count.value == 3.0
        assert r.count.variance == pytest.approx(3 * 100 / 2 / 100)

    @pytest.mark.parametrize("budget", [ZCDP(0.5), PureDP(0.5)])
    def test_d1_matches_simplex(self, budget):
        x = np.arange(0, 100, 3.0)
        a = simplex_release(x, B100, budget, NoiseSource.seeded(8))
        b = multidim_release(x[:, None], 100, budget, NoiseSource.seeded(8))
        assert b.sums[0] == a.sum_estimate
        assert b.count == a.count_estimate

    def test_contract_violation_propagates(self, zero):
        with pytest.raises(ValueError, match="row 0"):
            multidim_release([[8.0, 8.0]], 10, ZCDP(1), zero)
